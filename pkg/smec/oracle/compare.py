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

"""Comparison of tree optima with the continuous-time solver."""

import dataclasses
import logging
from typing import Optional

import numpy as np

from .tree import (TreeExtrapolation, TreeProblem, TreeSolution, assemble_kkt,
                   tree_cost)

LOGGER = logging.getLogger(__name__)


@dataclasses.dataclass(frozen=True)
class ComparisonReport:
    """Gaps between the tree oracle and the solver."""

    j_tree: float
    j_solver: float
    j_gap: float
    relative_gap: float
    root_control_gap: float
    kkt_residual: float
    excess_cost_residual: Optional[float] = None
    j_extrapolated: Optional[float] = None

    @property
    def j_reference(self) -> float:
        """Return the tree value the solver is measured against."""
        return self.j_tree if self.j_extrapolated is None else self.j_extrapolated

    def as_dict(self) -> dict:
        """Return a JSON compatible representation."""
        return dataclasses.asdict(self)


def _difference(tree: TreeProblem, first: TreeSolution, second: TreeSolution):
    """Return the per-level differences second - first."""
    return (
        [b - a for a, b in zip(first.z, second.z)],
        [b - a for a, b in zip(first.v, second.v)],
        [b - a for a, b in zip(first.x, second.x)])


def orthogonality_residual(
        tree: TreeProblem, opt: TreeSolution, competitor: TreeSolution) -> float:
    """
    Return the relative size of E sum u*' M'RM (u - u*) dt (plus state terms).

    It vanishes for every feasible competitor iff opt is optimal.
    """
    hessian = assemble_kkt(tree).hessian
    inner = 0.5 * float(opt.vector @ (hessian @ (competitor.vector - opt.vector)))
    return abs(inner) / max(1.0, opt.value)


def excess_cost_residual(
        tree: TreeProblem, opt: TreeSolution, competitor: TreeSolution) -> float:
    """
    Check J(competitor) - J(opt) = E sum (u - u*)' M'RM (u - u*) dt.

    Returns the relative residual of this identity.
    """
    dz, dv, dx = _difference(tree, opt, competitor)
    excess = tree_cost(tree, competitor.z, competitor.v, competitor.x) - opt.value
    quadratic = tree_cost(tree, dz, dv, dx)
    return abs(excess - quadratic) / max(1.0, opt.value, quadratic)


def compare_with_solver(
        tree: TreeProblem, tree_sol: TreeSolution, j_solver: float,
        root_z: np.ndarray, root_v: np.ndarray,
        competitor: Optional[TreeSolution] = None,
        extrapolation: Optional[TreeExtrapolation] = None) -> ComparisonReport:
    """
    Compare the tree optimum with the solver's energy and root controls.

    With an extrapolation, the energy gap is taken to its limit value; the
    root controls always come from the given tree.
    """
    reference = tree_sol.value if extrapolation is None else extrapolation.value
    gap = abs(reference - j_solver)
    root_gap = float(
        np.sum(np.abs(tree_sol.z[0][0] - root_z))
        + np.sum(np.abs(tree_sol.v[0][0] - root_v)))
    report = ComparisonReport(
        j_tree=tree_sol.value,
        j_solver=j_solver,
        j_gap=gap,
        relative_gap=gap / max(abs(reference), 1e-300),
        root_control_gap=root_gap,
        kkt_residual=tree_sol.kkt_residual,
        excess_cost_residual=(
            None if competitor is None
            else excess_cost_residual(tree, tree_sol, competitor)),
        j_extrapolated=None if extrapolation is None else extrapolation.value)
    LOGGER.info("Tree %g vs. solver %g (gap %g)", reference, j_solver, gap)
    return report
