##
#    Copyright (c) 2021 The smec authors
#
#    This file is part of smec - stochastic minimum-energy control.
#
#    Smec is free software: you can redistribute it and/or modify it under the
#    terms of the GNU Affero General Public License as published by the Free
#    Software Foundation, either version 3 of the License, or (at your option)
#    any later version.
#
#    Smec is distributed in the hope that it will be useful, but WITHOUT ANY
#    WARRANTY; without even the implied warranty of MERCHANTABILITY or FITNESS
#    FOR A PARTICULAR PURPOSE. See the GNU Affero General Public License for
#    more details.
#
#    You should have received a copy of the GNU Affero General Public License
#    along with smec. If not, see <http://www.gnu.org/licenses/>.
##

"""Command line front end for smec."""

import functools
import logging
import os
import pathlib
import sys
import time
from typing import Any, Callable, Dict, List, Optional, Sequence

import click
import numpy as np

from ..core.logic import config_digest, load_problem, load_weight
from ..core.models import (Infeasible, MatrixPath, NotControllable,
                           NumericalError, ProblemLoadError, ProblemSpec,
                           SmecError, ValidationFailed)
from ..core.utils import now
from ..oracle.compare import compare_with_solver, orthogonality_residual
from ..oracle.identities import tree_identity_checks
from ..oracle.tree import (build_tree, dump_qp, extrapolate_tree_value,
                           random_feasible_point, solve_tree_qp)
from ..pipeline import (MinimumEnergySolution, SimulationResult,
                        decompose_checked, simulate_solution,
                        solve_minimum_energy)
from ..simulate.gramian import dual_gramian_mc, gramian_rank_mc
from ..simulate.paths import BrownianBatch, generate_paths
from ..solver.hamiltonian import export_controls
from ..solver.lqfixed import (LqFixedProblem, completion_of_squares_check,
                              solve_lq_fixed)
from ..solver.riccati import (controllability_test, riccati_residual,
                              solve_pbar)
from ..version import Version, get_version
from . import config as default_config
from . import export, utils
from .report import RunReport, error_entry

EXIT_OK = 0
EXIT_USAGE = 1
EXIT_VALIDATION = 2
EXIT_NOT_CONTROLLABLE = 3
EXIT_NUMERIC = 4

# Settings that influence the numbers of a report.
REPORTED_SETTINGS = (
    "ANTITHETIC", "DENSE_KKT_LIMIT", "EXPORT_PATHS", "PATHS", "SEED", "STEPS",
    "TREE_DEPTH", "TREE_DEPTH_CAP", "TREE_EXTRAPOLATION")

Action = Callable[[ProblemSpec, str, RunReport], None]


def exit_code(exc: SmecError) -> int:
    """Map an exception to the exit code of the command."""
    if isinstance(exc, (ValidationFailed, ProblemLoadError)):
        return EXIT_VALIDATION
    if isinstance(exc, (NotControllable, Infeasible)):
        return EXIT_NOT_CONTROLLABLE
    if isinstance(exc, NumericalError) and exc.code == "RANK_DEFICIENT_D":
        return EXIT_VALIDATION
    return EXIT_NUMERIC


class SmecRunner:
    """Run one command: configuration, logging, computation, report."""

    def __init__(self) -> None:
        """Initialize the runner object."""
        self.config: Dict[str, Any] = {}
        self.logger = logging.getLogger("smec")
        self.version: Optional[Version] = None

    def setup_config(
            self, config_mapping: Optional[Dict[str, Any]] = None,
            flags: Optional[Dict[str, Any]] = None) -> None:
        """Create the configuration: defaults, mapping, file, environment, flags."""
        config = utils.module_settings(default_config)
        if config_mapping:
            config.update(config_mapping)
        filename = os.environ.get("SMEC_CONFIG")
        if filename:
            try:
                config.update(utils.read_settings_file(filename))
            except (OSError, SyntaxError) as exc:
                raise ValidationFailed(
                    f"Cannot read SMEC_CONFIG={filename}: {exc}") from exc
        for key, value in config.items():
            new_value = os.environ.get("SMEC_" + key)
            if new_value is None:
                continue
            try:
                config[key] = utils.coerce(value, new_value)
            except ValueError as exc:
                raise ValidationFailed(
                    f"Invalid value for SMEC_{key}: '{new_value}'") from exc
        if flags:
            config.update({
                key: value for key, value in flags.items() if value is not None})
        self.config = config

    def _set_log_level(self, log_level: Any) -> None:
        """Set the log level to a specific value."""
        if log_level is None:
            return
        if isinstance(log_level, int):
            self.logger.setLevel(log_level)
            return
        if not isinstance(log_level, str):
            return
        if log_level.isdigit():
            self.logger.setLevel(int(log_level))
            return
        self.logger.setLevel(log_level.upper())

    def _setup_logging(self) -> None:
        """Set logging up: one handler on stderr for the package logger."""
        if not self.logger.handlers:
            handler = logging.StreamHandler()
            handler.setFormatter(
                logging.Formatter("%(levelname)s %(name)s: %(message)s"))
            self.logger.addHandler(handler)
        try:
            self._set_log_level(self.config.get('LOG_LEVEL'))
        except ValueError:
            self.logger.setLevel(logging.WARNING)
            self.log_error("Unknown LOG_LEVEL: '%s', will use 'WARNING'.",
                           self.config.get('LOG_LEVEL'))

    def _setup_version(self) -> None:
        """Provide version information."""
        self.version = get_version(os.path.dirname(__file__), 3)

    def setup(
            self, config_mapping: Optional[Dict[str, Any]] = None,
            flags: Optional[Dict[str, Any]] = None) -> None:
        """Prepare the runner for executing commands."""
        self.setup_config(config_mapping, flags)
        self._setup_logging()
        self._setup_version()

    def log_debug(self, message: str, *args, **kwargs) -> None:
        """Emit a debug message."""
        self.logger.debug(message, *args, **kwargs)

    def log_info(self, message: str, *args, **kwargs) -> None:
        """Emit an informational message."""
        self.logger.info(message, *args, **kwargs)

    def log_error(self, message: str, *args, **kwargs) -> None:
        """Emit an error message."""
        self.logger.error(message, *args, **kwargs)

    @property
    def out_dir(self) -> pathlib.Path:
        """Return the directory for report and CSV files."""
        return pathlib.Path(self.config['OUT_DIR'])

    def settings(self) -> Dict[str, Any]:
        """Return the settings that are written into the report."""
        return {key: self.config.get(key) for key in REPORTED_SETTINGS}

    def load(self, document: str) -> ProblemSpec:
        """Parse the problem document and apply the STEPS setting."""
        spec = load_problem(document)
        steps = self.config.get('STEPS')
        if steps is not None and steps != spec.grid.steps:
            spec = spec.with_steps(int(steps))
        self.log_debug("Problem n=%d, m=%d, %d steps", spec.n, spec.m, spec.grid.steps)
        return spec

    def paths(self, spec: ProblemSpec) -> BrownianBatch:
        """Draw the Brownian paths for a problem."""
        return generate_paths(
            spec.grid, int(self.config['PATHS']), int(self.config['SEED']),
            antithetic=utils.to_bool(self.config['ANTITHETIC']),
            threads=int(self.config['THREADS']))

    def write(self, report: RunReport, frames: Dict[str, Any]) -> None:
        """Write CSV files and remember their names in the report."""
        report.files.extend(export.write_frames(self.out_dir, frames))

    def execute(self, command: str, filename: str, action: Action) -> int:
        """Execute an action on a problem document; always write a report."""
        started = now()
        clock = time.perf_counter()
        assert self.version is not None
        report = RunReport(
            command=command, config_digest="", seed=int(self.config['SEED']),
            settings=self.settings(), version=self.version.as_dict())
        try:
            try:
                document = pathlib.Path(filename).read_text()
            except OSError as exc:
                raise ProblemLoadError(
                    "document", f"Cannot read {filename}: {exc}") from exc
            report.config_digest = config_digest(document)
            action(self.load(document), document, report)
        except SmecError as exc:
            report.exit_code = exit_code(exc)
            report.error = error_entry(exc)
            self.log_error("%s failed: %s", command, exc)
        report.timing = {
            "started": started.isoformat(),
            "seconds": time.perf_counter() - clock,
        }
        report.files.sort()
        path = report.write(self.out_dir)
        self.log_info("Report written to %s, exit code %d", path, report.exit_code)
        return report.exit_code

    def _solve(self, spec: ProblemSpec, report: RunReport) -> MinimumEnergySolution:
        """Compute the deterministic part of the solution and export it."""
        try:
            solution = solve_minimum_energy(spec)
        except NotControllable as exc:
            report.results["controllable"] = False
            report.results["margin"] = exc.margin
            raise
        report.results.update({
            "controllable": True,
            "margin": solution.margin,
            "K": solution.K,
            "p0": solution.pq.p0,
        })
        self.write(report, {
            "riccati.csv": export.matrix_path_frame(
                "Pbar", solution.riccati.Pbar, spec.grid),
            "bsde.csv": export.bsde_frame(
                solution.pq, solution.coefficients, spec.grid),
        })
        return solution

    def _simulate(
            self, spec: ProblemSpec, solution: MinimumEnergySolution,
            report: RunReport) -> SimulationResult:
        """Simulate the closed loop and export its verification."""
        result = simulate_solution(solution, self.paths(spec))
        report.results.update({
            "energy": result.energy.estimate.as_dict(),
            "energy_form_gap": result.energy.form_gap,
            "dual_energy": result.dual_energy.as_dict(),
            "terminal_error": result.terminal_error.as_dict(),
            "K_mc": result.K_mc.as_dict(),
            "martingale": {
                "estimate": result.martingale.estimate.as_dict(),
                "expected": result.martingale.expected,
                "passed": result.martingale.passed,
            },
        })
        self.write(report, {
            "trajectories.csv": export_controls(
                result.run, spec.grid, int(self.config['EXPORT_PATHS'])),
            "terminal_errors.csv": export.per_path_frame(
                "terminal_error", result.terminal_errors),
            "energy.csv": export.per_path_frame("energy", result.energy.samples),
            "summary.csv": export.summary_frame({
                "energy": result.energy.estimate,
                "dual_energy": result.dual_energy,
                "terminal_error": result.terminal_error,
                "K_mc": result.K_mc,
            }),
        })
        return result

    def check(self, spec: ProblemSpec, _document: str, report: RunReport) -> None:
        """Decide controllability by P̄(0) and by the Monte-Carlo Gramians."""
        dec = decompose_checked(spec)
        riccati = solve_pbar(dec, spec.grid)
        controllable, margin = controllability_test(riccati)
        batch = self.paths(spec)
        gramian = gramian_rank_mc(dec, batch)
        dual = dual_gramian_mc(dec, batch)
        report.results.update({
            "controllable": controllable,
            "margin": margin,
            "riccati_min_eig": riccati.min_eig,
            "riccati_symmetric_residual": riccati.symmetric_residual,
            "riccati_residual": riccati_residual(dec, riccati, spec.grid),
            "gramian": {
                "eigenvalues": gramian.eigenvalues, "rank": gramian.rank,
                "standard_error": gramian.standard_error,
            },
            "dual_gramian": {
                "eigenvalues": dual.eigenvalues, "rank": dual.rank,
                "standard_error": dual.standard_error,
            },
            "verdicts_agree": controllable == gramian.full_rank == dual.full_rank,
        })
        self.write(report, {
            "riccati.csv": export.matrix_path_frame("Pbar", riccati.Pbar, spec.grid),
            "gramian.csv": export.gramian_frame((("gramian", gramian), ("dual", dual))),
        })
        if not controllable:
            raise NotControllable(
                f"P̄(0) is not positive definite: {margin:.3g}", margin)

    def solve(self, spec: ProblemSpec, _document: str, report: RunReport) -> None:
        """Compute P̄, the BSDE coefficients and K."""
        self._solve(spec, report)

    def simulate(self, spec: ProblemSpec, _document: str, report: RunReport) -> None:
        """Solve, then verify the optimal controls on simulated paths."""
        solution = self._solve(spec, report)
        self._simulate(spec, solution, report)

    def oracle(
            self, spec: ProblemSpec, _document: str, report: RunReport,
            dump: bool = False) -> None:
        """Compare the solver with the binomial tree optimum."""
        depth_cap = int(self.config['TREE_DEPTH_CAP'])
        tree = build_tree(spec, int(self.config['TREE_DEPTH']), depth_cap=depth_cap)
        dense_limit = int(self.config['DENSE_KKT_LIMIT'])
        tree_sol = solve_tree_qp(tree, dense_limit)
        extrapolation = extrapolate_tree_value(
            spec, tree.depth, points=int(self.config['TREE_EXTRAPOLATION']),
            depth_cap=depth_cap, dense_limit=dense_limit,
            known={tree.depth: tree_sol.value})
        competitor = random_feasible_point(tree, int(self.config['SEED']), dense_limit)
        solution = self._solve(spec, report)
        result = self._simulate(spec, solution, report)
        comparison = compare_with_solver(
            tree, tree_sol, result.energy.value,
            result.run.z[0, 0], result.run.v[0, 0], competitor, extrapolation)
        identities = tree_identity_checks(tree, tree_sol, competitor)
        report.results["oracle"] = {
            "depth": tree.depth,
            "comparison": comparison.as_dict(),
            "extrapolation": extrapolation.as_dict(),
            "constraint_residual": tree_sol.constraint_residual,
            "orthogonality_residual": orthogonality_residual(
                tree, tree_sol, competitor),
            "transport_residual": identities.transport_residual,
            "duality_residual": identities.duality_residual,
        }
        if dump:
            report.files.extend(path.name for path in dump_qp(tree, self.out_dir))

    def lq(
            self, spec: ProblemSpec, document: str, report: RunReport,
            q: Optional[float] = None) -> None:
        """Solve the regulator problem with fixed final state."""
        if q is not None:
            weight: Optional[MatrixPath] = MatrixPath.constant(
                q * np.eye(spec.n), spec.grid.horizon)
        else:
            weight = load_weight(document, "Q", spec.n, spec.grid.horizon)
        if weight is None:
            raise ValidationFailed(
                "Command lq needs --q or an entry 'Q' in the problem")
        prob = LqFixedProblem(spec, weight)
        batch = self.paths(spec)
        solution = solve_lq_fixed(prob, batch)
        check = completion_of_squares_check(prob, solution, batch)
        simulation = solution.simulation
        report.results.update({
            "P0": solution.lq_riccati.P[0],
            "lq_min_eig": solution.lq_riccati.min_eig,
            "controllable": True,
            "margin": solution.inner.margin,
            "K": solution.inner.K,
            "total_cost": solution.total_cost.as_dict(),
            "terminal_error": simulation.terminal_error.as_dict(),
            "completion": {
                "direct": check.direct.as_dict(),
                "difference": check.difference.as_dict(),
                "trajectory_gap": check.trajectory_gap,
                "passed": check.passed,
            },
        })
        self.write(report, {
            "lq_riccati.csv": export.matrix_path_frame(
                "P", solution.lq_riccati.P, spec.grid),
            "riccati.csv": export.matrix_path_frame(
                "Pbar", solution.inner.riccati.Pbar, spec.grid),
            "trajectories.csv": export_controls(
                simulation.run, spec.grid, int(self.config['EXPORT_PATHS'])),
            "terminal_errors.csv": export.per_path_frame(
                "terminal_error", simulation.terminal_errors),
            "summary.csv": export.summary_frame({
                "total_cost": solution.total_cost,
                "terminal_error": simulation.terminal_error,
                "completion_difference": check.difference,
            }),
        })


def create_runner(
        config_mapping: Optional[Dict[str, Any]] = None,
        flags: Optional[Dict[str, Any]] = None) -> SmecRunner:
    """Create a runner that is ready to execute commands."""
    runner = SmecRunner()
    runner.setup(config_mapping, flags)
    return runner


def problem_options(command: Callable) -> Callable:
    """Add the options that all commands share."""
    options = [
        click.option("--config", "config_file", required=True,
                     type=click.Path(dir_okay=False),
                     help="JSON document describing the problem."),
        click.option("--paths", type=click.IntRange(min=2), help="Number of paths."),
        click.option(
            "--steps", type=click.IntRange(min=1), help="Number of time steps."),
        click.option("--seed", type=int, help="Seed of the random numbers."),
        click.option(
            "--tree-depth", type=click.IntRange(min=1), help="Depth of the tree."),
        click.option("--out-dir", type=click.Path(file_okay=False),
                     help="Directory for report and CSV files."),
    ]
    for option in reversed(options):
        command = option(command)
    return command


def _run(ctx: click.Context, command: str, options: Dict[str, Any], action: str,
         **kwargs) -> int:
    """Create a runner from context and options, and execute the command."""
    flags = {
        "PATHS": options.get("paths"),
        "STEPS": options.get("steps"),
        "SEED": options.get("seed"),
        "TREE_DEPTH": options.get("tree_depth"),
        "OUT_DIR": options.get("out_dir"),
        "LOG_LEVEL": {0: None, 1: "INFO"}.get(ctx.obj["verbose"], "DEBUG"),
    }
    try:
        runner = create_runner(ctx.obj["mapping"], flags)
    except ValidationFailed as exc:
        click.echo(f"Error: {exc}", err=True)
        return EXIT_VALIDATION
    method = functools.partial(getattr(runner, action), **kwargs)
    return runner.execute(command, options["config_file"], method)


@click.group()
@click.option("-v", "--verbose", count=True, help="Log more (-v: INFO, -vv: DEBUG).")
@click.pass_context
def main(ctx: click.Context, verbose: int) -> None:
    """Stochastic minimum-energy control."""
    mapping = ctx.obj if isinstance(ctx.obj, dict) else None
    ctx.obj = {"mapping": mapping, "verbose": verbose}


@main.command()
@problem_options
@click.pass_context
def check(ctx: click.Context, **options) -> int:
    """Decide exact controllability of the problem."""
    return _run(ctx, "check", options, "check")


@main.command()
@problem_options
@click.pass_context
def solve(ctx: click.Context, **options) -> int:
    """Compute P̄, the BSDE coefficients and the initial costate."""
    return _run(ctx, "solve", options, "solve")


@main.command()
@problem_options
@click.pass_context
def simulate(ctx: click.Context, **options) -> int:
    """Simulate and verify the minimum-energy controls."""
    return _run(ctx, "simulate", options, "simulate")


@main.command()
@problem_options
@click.option(
    "--dump-qp", is_flag=True,
    help="Write the KKT system in Matrix Market format.")
@click.pass_context
def oracle(  # pylint: disable=redefined-outer-name
        ctx: click.Context, dump_qp: bool, **options) -> int:
    """Compare the solver with the binomial tree oracle."""
    return _run(ctx, "oracle", options, "oracle", dump=dump_qp)


@main.command()
@problem_options
@click.option(
    "--q", type=click.FloatRange(min=0.0), help="State weight q times identity.")
@click.pass_context
def lq(ctx: click.Context, q: Optional[float], **options) -> int:
    """Solve the regulator problem with fixed final state."""
    return _run(ctx, "lq", options, "lq", q=q)


def run(argv: Sequence[str], config_mapping: Optional[Dict[str, Any]] = None) -> int:
    """Run the command line and return its exit code."""
    args: List[str] = list(argv)
    try:
        result = main.main(
            args=args, prog_name="smec", standalone_mode=False, obj=config_mapping)
    except click.ClickException as exc:
        exc.show()
        return EXIT_USAGE
    except click.Abort:
        return EXIT_USAGE
    return int(result or 0)


def console() -> None:
    """Entry point of the console script."""
    sys.exit(run(sys.argv[1:]))
