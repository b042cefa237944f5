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

"""
Linear-quadratic regulator with fixed final state.

Completing the square with the regulator Riccati solution P turns the cost
E int x'Qx + u'Ru dt into x0'P(0)x0 + E int û'R̂û dt, where û = u + gain x.
The shifted problem is a minimum-energy problem.
"""

import dataclasses
import logging
from typing import Tuple

import numpy as np

from ..core.logic import check_weight
from ..core.models import Estimate, MatrixPath, ProblemSpec, ValidationFailed
from ..core.utils import symmetrize, transpose
from ..pipeline import (MinimumEnergySolution, SimulationResult,
                        simulate_solution, solve_minimum_energy)
from ..simulate.euler import euler_state_u, integrate_paths, quadratic_form
from ..simulate.paths import BrownianBatch
from .riccati import LqRiccatiSolution, solve_lq_riccati

LOGGER = logging.getLogger(__name__)


@dataclasses.dataclass(frozen=True, eq=False)
class LqFixedProblem:
    """Regulator problem: a minimum-energy problem plus a state weight Q."""

    base: ProblemSpec
    Q: MatrixPath

    def validate(self) -> "LqFixedProblem":
        """Check the state weight for shape, symmetry and semidefiniteness."""
        self.Q.validate()
        if (self.Q.rows, self.Q.cols) != (self.base.n, self.base.n):
            raise ValidationFailed(f"Q must be {self.base.n}x{self.base.n}")
        findings = check_weight("Q", self.Q.on_grid(self.base.grid), strict=False)
        if findings:
            raise ValidationFailed(findings[0].message)
        return self


@dataclasses.dataclass(frozen=True, eq=False)
class LqFixedSolution:  # pylint: disable=too-many-instance-attributes
    """Solution of the regulator problem, recovered along simulated paths."""

    lq_riccati: LqRiccatiSolution
    transformed: ProblemSpec
    inner: MinimumEnergySolution
    simulation: SimulationResult
    total_cost: Estimate
    u: np.ndarray

    @property
    def x(self) -> np.ndarray:
        """Return the simulated state paths."""
        return self.simulation.x


@dataclasses.dataclass(frozen=True, eq=False)
class CompletionCheck:
    """Direct cost estimate against the completed-square form."""

    direct: Estimate
    difference: Estimate
    trajectory_gap: float

    @property
    def passed(self) -> bool:
        """Return True, if both cost forms agree within 3 SE."""
        return self.difference.within(0.0)


def lq_transform(prob: LqFixedProblem) -> Tuple[LqRiccatiSolution, ProblemSpec]:
    """Shift the control by the regulator gain and return the new problem."""
    base = prob.validate().base
    lq = solve_lq_riccati(base, prob.Q)
    A, B, C, D, R = base.coefficients()
    gain = lq.gain
    grid = base.grid
    transformed = dataclasses.replace(
        base,
        A=MatrixPath.from_nodes(A - B @ gain, grid),
        C=MatrixPath.from_nodes(C - D @ gain, grid),
        R=MatrixPath.from_nodes(symmetrize(transpose(D) @ lq.P @ D + R), grid),
        B=MatrixPath.from_nodes(B, grid),
        D=MatrixPath.from_nodes(D, grid))
    LOGGER.debug("LQ transformation: P(0) = %s", lq.P[0])
    return lq, transformed.validate()


def solve_lq_fixed(prob: LqFixedProblem, batch: BrownianBatch) -> LqFixedSolution:
    """Solve the shifted minimum-energy problem and recover u = û - gain x."""
    lq, transformed = lq_transform(prob)
    inner = solve_minimum_energy(transformed)
    simulation = simulate_solution(inner, batch)
    u = simulation.run.u - np.einsum("kij,pkj->pki", lq.gain, simulation.x)
    x0 = prob.base.x0
    offset = float(x0 @ lq.P[0] @ x0)
    energy = simulation.energy.estimate
    total = Estimate(energy.value + offset, energy.standard_error, energy.samples)
    LOGGER.info("LQ total cost %g (offset %g)", float(total.value), offset)
    return LqFixedSolution(
        lq_riccati=lq, transformed=transformed, inner=inner,
        simulation=simulation, total_cost=total, u=u)


def completion_of_squares_check(
        prob: LqFixedProblem, sol: LqFixedSolution,
        batch: BrownianBatch) -> CompletionCheck:
    """Compare E int x'Qx + u'Ru dt with x0'P(0)x0 + E int û'R̂û dt."""
    base = prob.base
    coefficients = base.coefficients()
    x = euler_state_u(coefficients, base.x0, sol.u, batch)
    gap = float(np.max(np.abs(x - sol.x)))
    stage = quadratic_form(prob.Q.on_grid(base.grid), x) + \
        quadratic_form(coefficients.R, sol.u)
    direct = integrate_paths(stage, base.grid)
    offset = float(base.x0 @ sol.lq_riccati.P[0] @ base.x0)
    difference = direct - (offset + sol.simulation.energy.samples)
    return CompletionCheck(Estimate.of(direct), Estimate.of(difference), gap)

