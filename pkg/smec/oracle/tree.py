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
Binomial tree discretization of the minimum-energy problem.

The tree does not recombine: node j of level k has the children 2j (dW =
+sqrt(dt)) and 2j + 1 (dW = -sqrt(dt)), every node of level k has the
probability 2^-k. Controls of all inner nodes and the states of levels
1..N-1 are the unknowns of an equality constrained quadratic program, with
one state equation per edge.
"""

import dataclasses
import logging
import pathlib
import warnings
from typing import Any, Dict, List, NamedTuple, Optional, Sequence, Tuple

import numpy as np
import scipy.io
import scipy.linalg
import scipy.sparse
import scipy.sparse.linalg

from ..core.models import (Coefficients, Infeasible, MatrixPath,
                           NumericalError, ProblemSpec, ValidationFailed)
from ..solver.decomposition import Decomposition, decompose_coefficients

TREE_DEPTH_CAP = 14
DENSE_KKT_LIMIT = 3000
FEASIBILITY_TOLERANCE = 1e-6
EXTRAPOLATION_POINTS = 3
MIN_EXTRAPOLATION_DEPTH = 4

LOGGER = logging.getLogger(__name__)


@dataclasses.dataclass(frozen=True, eq=False)
class TreeProblem:  # pylint: disable=too-many-instance-attributes
    """Tree data: coefficients per level, initial state and leaf targets."""

    depth: int
    delta: float
    dec: Decomposition
    Q: Optional[np.ndarray]
    x0: np.ndarray
    leaf_targets: np.ndarray
    leaf_W: np.ndarray

    @property
    def n(self) -> int:
        """Return the state dimension."""
        return self.dec.n

    @property
    def m(self) -> int:
        """Return the control dimension."""
        return self.dec.m

    @property
    def sqrt_delta(self) -> float:
        """Return the size of a Brownian tree increment."""
        return float(np.sqrt(self.delta))

    def signs(self, level: int) -> np.ndarray:
        """Return the sign of dW leading to every node of the next level."""
        return np.tile([1.0, -1.0], 2 ** level)


class Layout(NamedTuple):
    """Positions of the unknowns in the QP vector."""

    n: int
    m: int
    depth: int

    def control(self, level: int) -> int:
        """Return the offset of the controls of a level."""
        return self.m * (2 ** level - 1)

    @property
    def controls(self) -> int:
        """Return the number of control unknowns."""
        return self.m * (2 ** self.depth - 1)

    def state(self, level: int) -> int:
        """Return the offset of the states of an inner level (1..N-1)."""
        return self.controls + self.n * (2 ** level - 2)

    @property
    def unknowns(self) -> int:
        """Return the number of all unknowns."""
        return self.controls + self.n * max(2 ** self.depth - 2, 0)

    def edges(self, level: int) -> int:
        """Return the offset of the equations of the edges into a level."""
        return self.n * (2 ** level - 2)

    @property
    def equations(self) -> int:
        """Return the number of equations."""
        return self.n * (2 ** (self.depth + 1) - 2)


@dataclasses.dataclass(frozen=True, eq=False)
class KktSystem:
    """Quadratic program 1/2 w'Pw s.t. Aw = b, and its KKT matrix."""

    hessian: scipy.sparse.csc_matrix
    constraints: scipy.sparse.csc_matrix
    b: np.ndarray
    layout: Layout

    def matrix(self) -> scipy.sparse.csc_matrix:
        """Return the symmetric KKT matrix."""
        return scipy.sparse.bmat(
            [[self.hessian, self.constraints.T], [self.constraints, None]],
            format="csc")


@dataclasses.dataclass(frozen=True, eq=False)
class TreeSolution:
    """Solution of a tree QP, unpacked per level."""

    vector: np.ndarray
    z: List[np.ndarray]
    v: List[np.ndarray]
    x: List[np.ndarray]
    multipliers: np.ndarray
    value: float
    kkt_residual: float
    constraint_residual: float


def level_W(depth: int, sqrt_delta: float) -> List[np.ndarray]:
    """Return W at every node of every level 0..depth."""
    result = [np.zeros(1)]
    for _ in range(depth):
        previous = result[-1]
        result.append(
            np.stack([previous + sqrt_delta, previous - sqrt_delta], axis=1)
            .reshape(-1))
    return result


def build_tree(
        spec: ProblemSpec, depth: int, Q: Optional[MatrixPath] = None,
        leaf_values: Optional[np.ndarray] = None,
        depth_cap: int = TREE_DEPTH_CAP, M: Optional[np.ndarray] = None) -> TreeProblem:
    """Sample the coefficients at the tree levels and evaluate the leaf targets."""
    if depth < 1 or depth > depth_cap:
        raise ValidationFailed(f"Tree depth must be in 1..{depth_cap}, not {depth}")
    coarse = spec.with_steps(depth)
    sampled = Coefficients(*(values[:depth] for values in coarse.coefficients()))
    dec = decompose_coefficients(sampled, None if M is None else M[:depth])
    sqrt_delta = float(np.sqrt(coarse.grid.delta))
    leaf_W = level_W(depth, sqrt_delta)[-1]
    if leaf_values is None:
        targets = spec.target.evaluate(leaf_W)
    else:
        targets = np.asarray(leaf_values, dtype=float).reshape(2 ** depth, spec.n)
    weight = None if Q is None else Q.on_grid(coarse.grid)[:depth]
    return TreeProblem(
        depth=depth, delta=coarse.grid.delta, dec=dec, Q=weight,
        x0=spec.x0.copy(), leaf_targets=targets, leaf_W=leaf_W)


def _blocks(
        rows: np.ndarray, cols: np.ndarray,
        blocks: np.ndarray) -> Tuple[np.ndarray, ...]:
    """Expand dense blocks with given upper left corners into COO triples."""
    height, width = blocks.shape[1:]
    row_index = rows[:, None, None] + np.arange(height)[None, :, None]
    col_index = cols[:, None, None] + np.arange(width)[None, None, :]
    shape = blocks.shape
    return (
        np.broadcast_to(row_index, shape).reshape(-1),
        np.broadcast_to(col_index, shape).reshape(-1),
        blocks.reshape(-1))


def _coo(
        entries: List[Tuple[np.ndarray, ...]],
        shape: Tuple[int, int]) -> scipy.sparse.csc_matrix:
    """Assemble a sparse matrix from a list of COO triples."""
    if not entries:
        return scipy.sparse.csc_matrix(shape)
    rows, cols, data = (np.concatenate(part) for part in zip(*entries))
    return scipy.sparse.coo_matrix((data, (rows, cols)), shape=shape).tocsc()


def assemble_kkt(tree: TreeProblem) -> KktSystem:
    """Assemble the QP of a tree problem."""
    n, m, depth, delta = tree.n, tree.m, tree.depth, tree.delta
    layout = Layout(n, m, depth)
    dec = tree.dec
    identity = np.eye(n)
    b = np.zeros(layout.equations)
    constraint_entries: List[Tuple[np.ndarray, ...]] = []
    hessian_entries: List[Tuple[np.ndarray, ...]] = []
    weight = dec.weight()

    for level in range(depth):
        count = 2 ** level
        parents = np.arange(count)
        children = np.arange(2 * count)
        xi = tree.signs(level) * tree.sqrt_delta
        rows = layout.edges(level + 1) + n * children

        control_block = np.concatenate([
            dec.G[level] * delta + xi[:, np.newaxis, np.newaxis] * identity,
            np.broadcast_to(dec.F[level] * delta, (2 * count, n, m - n))], axis=-1)
        constraint_entries.append(_blocks(
            rows, layout.control(level) + m * (children // 2), -control_block))

        transition = identity + dec.A[level] * delta + \
            xi[:, np.newaxis, np.newaxis] * dec.C[level]
        if level == 0:
            b[rows[:, np.newaxis] + np.arange(n)] += transition @ tree.x0
        else:
            constraint_entries.append(_blocks(
                rows, layout.state(level) + n * (children // 2), -transition))
        if level + 1 < depth:
            constraint_entries.append(_blocks(
                rows, layout.state(level + 1) + n * children,
                np.broadcast_to(identity, (2 * count, n, n))))
        else:
            b[rows[:, np.newaxis] + np.arange(n)] -= tree.leaf_targets

        scale = 2.0 * delta / count
        corners = layout.control(level) + m * parents
        hessian_entries.append(_blocks(
            corners, corners, np.broadcast_to(scale * weight[level], (count, m, m))))
        if tree.Q is not None and level > 0:
            corners = layout.state(level) + n * parents
            hessian_entries.append(_blocks(
                corners, corners,
                np.broadcast_to(scale * tree.Q[level], (count, n, n))))

    return KktSystem(
        hessian=_coo(hessian_entries, (layout.unknowns, layout.unknowns)),
        constraints=_coo(constraint_entries, (layout.equations, layout.unknowns)),
        b=b, layout=layout)


def _relative_residual(matrix: Any, vector: np.ndarray, rhs: np.ndarray) -> float:
    """Return |matrix vector - rhs| relative to max(1, |rhs|)."""
    return float(np.linalg.norm(matrix @ vector - rhs)) / \
        max(1.0, float(np.linalg.norm(rhs)))


def _least_squares_residual(
        constraints: scipy.sparse.csc_matrix, b: np.ndarray) -> float:
    """Return the relative residual of the least-squares solution of Aw = b."""
    if constraints.shape[0] + constraints.shape[1] <= DENSE_KKT_LIMIT:
        dense = constraints.toarray()
        solution = np.linalg.lstsq(dense, b, rcond=None)[0]
        residual = float(np.linalg.norm(dense @ solution - b))
    else:
        residual = float(scipy.sparse.linalg.lsqr(
            constraints, b, atol=1e-14, btol=1e-14,
            iter_lim=20 * constraints.shape[1])[3])
    return residual / max(1.0, float(np.linalg.norm(b)))


def solve_kkt(
        system: KktSystem, linear: Optional[np.ndarray] = None,
        dense_limit: int = DENSE_KKT_LIMIT) -> Tuple[np.ndarray, np.ndarray, float]:
    """
    Solve min 1/2 w'Pw - linear'w s.t. Aw = b.

    Returns the primal vector, the multipliers and the relative KKT residual.
    """
    unknowns = system.layout.unknowns
    matrix = system.matrix()
    top = np.zeros(unknowns) if linear is None else linear
    rhs = np.concatenate([top, system.b])
    solution: Optional[np.ndarray] = None
    with warnings.catch_warnings():
        warnings.simplefilter("error", scipy.linalg.LinAlgWarning)
        warnings.simplefilter("error", scipy.sparse.linalg.MatrixRankWarning)
        try:
            if matrix.shape[0] <= dense_limit:
                solution = scipy.linalg.solve(matrix.toarray(), rhs, assume_a="sym")
            else:
                solution = scipy.sparse.linalg.spsolve(matrix, rhs)
        except (np.linalg.LinAlgError, scipy.linalg.LinAlgWarning,
                scipy.sparse.linalg.MatrixRankWarning, RuntimeError) as exc:
            LOGGER.debug("KKT solve failed: %s", exc)
    if solution is None or not np.all(np.isfinite(solution)):
        residual = _least_squares_residual(system.constraints, system.b)
        if residual > FEASIBILITY_TOLERANCE:
            raise Infeasible(
                f"leaf targets are unreachable (residual {residual:.3g})", residual)
        raise NumericalError("SINGULAR_KKT", "KKT matrix is singular")

    kkt_residual = _relative_residual(matrix, solution, rhs)
    primal = solution[:unknowns]
    constraint_residual = _relative_residual(system.constraints, primal, system.b)
    if constraint_residual > FEASIBILITY_TOLERANCE:
        raise Infeasible(
            f"leaf targets are unreachable (residual {constraint_residual:.3g})",
            constraint_residual)
    return primal, solution[unknowns:], kkt_residual


def unpack(tree: TreeProblem, vector: np.ndarray) -> Tuple[List[np.ndarray], ...]:
    """Split a QP vector into controls z, v and states x per level."""
    layout = Layout(tree.n, tree.m, tree.depth)
    z_levels, v_levels, x_levels = [], [], [tree.x0[np.newaxis].copy()]
    for level in range(tree.depth):
        start = layout.control(level)
        controls = vector[start:start + tree.m * 2 ** level].reshape(2 ** level, tree.m)
        z_levels.append(controls[:, :tree.n])
        v_levels.append(controls[:, tree.n:])
        if level > 0:
            start = layout.state(level)
            states = vector[start:start + tree.n * 2 ** level]
            x_levels.append(states.reshape(2 ** level, tree.n))
    x_levels.append(tree.leaf_targets.copy())
    return z_levels, v_levels, x_levels


def tree_cost(tree: TreeProblem, z: List[np.ndarray], v: List[np.ndarray],
              x: List[np.ndarray]) -> float:
    """Return E sum_k (u'M'RMu + x'Qx) dt over the tree."""
    weight = tree.dec.weight()
    total = 0.0
    for level in range(tree.depth):
        controls = np.concatenate([z[level], v[level]], axis=1)
        stage = np.einsum("ji,ik,jk->", controls, weight[level], controls)
        if tree.Q is not None:
            stage += np.einsum("ji,ik,jk->", x[level], tree.Q[level], x[level])
        total += stage * tree.delta / 2 ** level
    return float(total)


def _solution(tree: TreeProblem, primal: np.ndarray, multipliers: np.ndarray,
              kkt_residual: float, system: KktSystem) -> TreeSolution:
    """Unpack a QP solution."""
    z, v, x = unpack(tree, primal)
    leaf_rows = system.layout.edges(tree.depth)
    constraint_residual = _relative_residual(system.constraints, primal, system.b)
    return TreeSolution(
        vector=primal, z=z, v=v, x=x,
        multipliers=multipliers[leaf_rows:].reshape(2 ** tree.depth, tree.n),
        value=tree_cost(tree, z, v, x),
        kkt_residual=kkt_residual,
        constraint_residual=constraint_residual)


def solve_tree_qp(
        tree: TreeProblem, dense_limit: int = DENSE_KKT_LIMIT) -> TreeSolution:
    """Solve the tree QP exactly via its KKT system."""
    system = assemble_kkt(tree)
    LOGGER.debug(
        "Tree QP depth %d: %d unknowns, %d equations",
        tree.depth, system.layout.unknowns, system.layout.equations)
    primal, multipliers, residual = solve_kkt(system, dense_limit=dense_limit)
    solution = _solution(tree, primal, multipliers, residual, system)
    LOGGER.info("Tree value %g (KKT residual %g)", solution.value, residual)
    return solution


@dataclasses.dataclass(frozen=True)
class TreeExtrapolation:
    """Tree optima at several depths and their limit for infinite depth."""

    depths: Tuple[int, ...]
    values: Tuple[float, ...]
    value: float

    def as_dict(self) -> dict:
        """Return a JSON compatible representation."""
        return dataclasses.asdict(self)


def extrapolation_depths(
        depth: int, points: int = EXTRAPOLATION_POINTS) -> Tuple[int, ...]:
    """
    Return up to points depths depth, depth - 2, ..., in increasing order.

    Depths of equal parity share the level boundary at T/2. Trees below
    MIN_EXTRAPOLATION_DEPTH are skipped.
    """
    if points < 1:
        raise ValidationFailed(f"Need at least one depth, not {points}")
    candidates = (depth - 2 * index for index in range(points))
    chosen = [
        value for value in candidates
        if value >= MIN_EXTRAPOLATION_DEPTH or value == depth]
    return tuple(sorted(chosen))


def richardson_limit(depths: Sequence[int], values: Sequence[float]) -> float:
    """
    Return J of the fit J(N) = J + c_1/N + ... + c_k/N^k through all values.

    The tree optimum has an expansion in powers of the step size T/N, so
    the polynomial in 1/N is evaluated at 1/N = 0.
    """
    if len(depths) != len(values) or not depths:
        raise ValueError(f"Depths {depths} do not match values {values}")
    if len(depths) == 1:
        return float(values[0])
    step_sizes = 1.0 / np.asarray(depths, dtype=float)
    coefficients = np.polynomial.polynomial.polyfit(
        step_sizes, np.asarray(values, dtype=float), len(depths) - 1)
    return float(coefficients[0])


def extrapolate_tree_value(
        spec: ProblemSpec, depth: int, Q: Optional[MatrixPath] = None,
        points: int = EXTRAPOLATION_POINTS, depth_cap: int = TREE_DEPTH_CAP,
        dense_limit: int = DENSE_KKT_LIMIT,
        known: Optional[Dict[int, float]] = None) -> TreeExtrapolation:
    """
    Solve the tree QP at several depths and extrapolate to infinite depth.

    Optima already computed can be passed as known, by depth.
    """
    depths = extrapolation_depths(depth, points)
    values = []
    for current in depths:
        if known is not None and current in known:
            values.append(float(known[current]))
            continue
        tree = build_tree(spec, current, Q=Q, depth_cap=depth_cap)
        values.append(solve_tree_qp(tree, dense_limit).value)
    limit = richardson_limit(depths, values)
    LOGGER.info("Tree values %s at depths %s, extrapolated %g", values, depths, limit)
    return TreeExtrapolation(depths, tuple(values), limit)


def random_feasible_point(
        tree: TreeProblem, seed: int,
        dense_limit: int = DENSE_KKT_LIMIT) -> TreeSolution:
    """Project a random vector onto the feasible set of the tree QP."""
    system = assemble_kkt(tree)
    rng = np.random.default_rng(seed)
    target = rng.standard_normal(system.layout.unknowns)
    projection = dataclasses.replace(
        system, hessian=scipy.sparse.identity(system.layout.unknowns, format="csc"))
    primal, multipliers, residual = solve_kkt(projection, target, dense_limit)
    return _solution(tree, primal, multipliers, residual, system)


def dump_qp(tree: TreeProblem, directory: pathlib.Path) -> List[pathlib.Path]:
    """Write the KKT matrix and its right-hand side in Matrix Market format."""
    system = assemble_kkt(tree)
    directory.mkdir(parents=True, exist_ok=True)
    rhs = np.concatenate([np.zeros(system.layout.unknowns), system.b])
    paths = [directory / "kkt.mtx", directory / "rhs.mtx"]
    scipy.io.mmwrite(str(paths[0]), system.matrix().tocoo(), symmetry="symmetric")
    scipy.io.mmwrite(str(paths[1]), rhs[:, np.newaxis])
    return paths
