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

"""Minimum-energy pipeline: from a problem to simulated optimal controls."""

import dataclasses
import logging
from typing import Optional

import numpy as np

from .core.logic import validate
from .core.models import Estimate, ProblemSpec, ValidationFailed
from .simulate.euler import (EnergyEstimate, estimate_energy, euler_state,
                             terminal_errors)
from .simulate.identities import ControlPair
from .simulate.paths import BrownianBatch
from .solver.bsde import (BsdeCoefficients, BsdeSolution, MartingaleCheck,
                          bsde_coefficients, compute_K, martingale_check,
                          monte_carlo_K, simulate_adjoint, solve_pq_affine)
from .solver.decomposition import Decomposition, decompose, schur_check
from .solver.hamiltonian import (HamiltonianRun, assemble_closed_loop,
                                 dual_energy, run_hamiltonian)
from .solver.riccati import RiccatiSolution, solve_pbar

LOGGER = logging.getLogger(__name__)


@dataclasses.dataclass(frozen=True, eq=False)
class MinimumEnergySolution:
    """Deterministic part of the solution: P̄, (alpha, beta) and K."""

    spec: ProblemSpec
    dec: Decomposition
    riccati: RiccatiSolution
    margin: float
    coefficients: BsdeCoefficients
    pq: BsdeSolution

    @property
    def K(self) -> np.ndarray:
        """Return the initial costate."""
        assert self.pq.K is not None
        return self.pq.K


@dataclasses.dataclass(frozen=True, eq=False)
class SimulationResult:  # pylint: disable=too-many-instance-attributes
    """Closed-loop simulation of the optimal controls."""

    run: HamiltonianRun
    x: np.ndarray
    energy: EnergyEstimate
    terminal_errors: np.ndarray
    dual_energy: Estimate
    K_mc: Estimate
    martingale: MartingaleCheck

    @property
    def terminal_error(self) -> Estimate:
        """Return the estimated mean squared terminal error."""
        return Estimate.of(self.terminal_errors)

    def controls(self) -> ControlPair:
        """Return the optimal controls as a control pair."""
        return ControlPair(self.run.v, self.run.z)


def decompose_checked(
        spec: ProblemSpec, M: Optional[np.ndarray] = None) -> Decomposition:
    """Validate a problem and decompose it; raise if the assumptions fail."""
    report = validate(spec)
    if not report.passed:
        raise ValidationFailed(f"Problem is not valid: {report.codes()}", report)
    dec = decompose(spec, M)
    schur = schur_check(dec)
    if not schur.passed:
        raise ValidationFailed(
            f"Reduced weight is not positive: {schur.codes()}", schur)
    return dec


def solve_minimum_energy(
        spec: ProblemSpec, M: Optional[np.ndarray] = None) -> MinimumEnergySolution:
    """Compute P̄, (alpha, beta) and K; raise NotControllable if P̄(0) is singular."""
    dec = decompose_checked(spec, M)
    riccati = solve_pbar(dec, spec.grid)
    coefficients = bsde_coefficients(dec, riccati)
    pq = solve_pq_affine(coefficients, spec.target, spec.grid)
    K = compute_K(riccati, pq, spec.x0)
    LOGGER.info("Initial costate K = %s", K)
    return MinimumEnergySolution(
        spec=spec, dec=dec, riccati=riccati, margin=riccati.min_eig_at_0,
        coefficients=coefficients, pq=pq.with_K(K))


def simulate_solution(
        solution: MinimumEnergySolution, batch: BrownianBatch) -> SimulationResult:
    """Run the closed loop on the given paths and verify it."""
    spec, dec = solution.spec, solution.dec
    closed_loop = assemble_closed_loop(dec, solution.riccati, solution.pq)
    run = run_hamiltonian(closed_loop, solution.K, batch)
    x = euler_state(spec, dec, run.v, run.z, batch)
    energy = estimate_energy(dec, run.v, run.z, spec.grid)
    adjoint = simulate_adjoint(solution.coefficients, batch)
    result = SimulationResult(
        run=run,
        x=x,
        energy=energy,
        terminal_errors=terminal_errors(x, spec.target, batch),
        dual_energy=dual_energy(run, spec.target, solution.K, spec.x0, batch),
        K_mc=monte_carlo_K(solution.riccati, adjoint, spec.target, batch, spec.x0),
        martingale=martingale_check(adjoint, solution.pq, spec.target, batch))
    LOGGER.info(
        "Energy %g +- %g, mean terminal error %g",
        energy.value, energy.standard_error, float(result.terminal_errors.mean()))
    return result
