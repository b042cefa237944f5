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
Backward Riccati equations.

P̄ solves the Riccati equation of the Hamiltonian system, and P(0) > 0 is
the exact controllability criterion. P solves the Riccati equation of the
linear-quadratic regulator with fixed final state.
"""

import dataclasses
import logging
from typing import Tuple

import numpy as np
import scipy.linalg

from ..core.models import MatrixPath, NumericalError, ProblemSpec, TimeGrid
from ..core.utils import min_eigenvalue, symmetric_residual, symmetrize, transpose
from .decomposition import Decomposition
from .ode import hermite_midpoints, integrate_backward

SYMMETRY_LIMIT = 1e-6
PSD_TOLERANCE = 1e-9
CONTROLLABILITY_TOLERANCE = 1e-8

LOGGER = logging.getLogger(__name__)


@dataclasses.dataclass(frozen=True, eq=False)
class RiccatiSolution:
    """P̄ on the grid, together with its certificates."""

    Pbar: np.ndarray
    Pbar_mid: np.ndarray
    min_eig_at_0: float
    symmetric_residual: float
    min_eig: float

    @property
    def is_psd(self) -> bool:
        """Return True, if P̄ is positive semidefinite at every node."""
        scale = max(1.0, float(np.max(np.abs(self.Pbar))))
        return self.min_eig >= -PSD_TOLERANCE * scale


@dataclasses.dataclass(frozen=True, eq=False)
class LqRiccatiSolution:
    """P of the linear-quadratic regulator and its feedback gain."""

    P: np.ndarray
    P_mid: np.ndarray
    gain: np.ndarray
    min_eig: float


def _symmetric_step(residuals: list):
    """Return a post-step function that symmetrizes and records the residual."""

    def post(value: np.ndarray) -> np.ndarray:
        residuals.append(symmetric_residual(value))
        return symmetrize(value)

    return post


def pbar_field(dec: Decomposition):
    """Return the right-hand side of the Riccati equation for P̄."""
    A = dec.A
    C = dec.C
    Hbar_inv = dec.Hbar_inv
    BH = dec.Bbar @ Hbar_inv
    constant = dec.F @ dec.H3_inv @ transpose(dec.F) + BH @ transpose(dec.Bbar)

    def field(k: int, _s: float, P: np.ndarray) -> np.ndarray:
        W = P @ C[k].T - BH[k]
        try:
            factor = scipy.linalg.cho_factor(Hbar_inv[k] + P)
        except np.linalg.LinAlgError as exc:
            raise NumericalError(
                "RICCATI_BLOWUP",
                f"H̄^-1 + P̄ lost positivity in step {k}") from exc
        quadratic = W @ scipy.linalg.cho_solve(factor, W.T)
        return A[k] @ P + P @ A[k].T - constant[k] + quadratic

    return field


def solve_pbar(dec: Decomposition, grid: TimeGrid) -> RiccatiSolution:
    """Integrate the Riccati equation for P̄ backward from P̄(T) = 0."""
    steps, delta = grid.steps, grid.delta
    field = pbar_field(dec)
    residuals: list = [0.0]
    values = integrate_backward(
        field, np.zeros((dec.n, dec.n)), steps, delta, _symmetric_step(residuals))
    residual = max(residuals)
    if residual > SYMMETRY_LIMIT:
        raise NumericalError(
            "NONSYMMETRIC", f"symmetry residual {residual:.3g}, step size too coarse?")
    eigenvalues = min_eigenvalue(values)
    solution = RiccatiSolution(
        Pbar=values,
        Pbar_mid=symmetrize(hermite_midpoints(values, field, delta)),
        min_eig_at_0=float(eigenvalues[0]),
        symmetric_residual=residual,
        min_eig=float(eigenvalues.min()))
    if not solution.is_psd:
        LOGGER.warning(
            "P̄ is not positive semidefinite: min eigenvalue %g", solution.min_eig)
    LOGGER.debug(
        "Solved P̄ on %d steps: min eig P̄(0)=%g, symmetry residual=%g",
        steps, solution.min_eig_at_0, residual)
    return solution


def riccati_residual(
        dec: Decomposition, sol: RiccatiSolution, grid: TimeGrid) -> float:
    """
    Largest residual of the Riccati equation at step midpoints.

    The derivative is taken as a central difference of neighbouring nodes.
    """
    field = pbar_field(dec)
    worst = 0.0
    for k in range(sol.Pbar.shape[0] - 1):
        derivative = (sol.Pbar[k + 1] - sol.Pbar[k]) / grid.delta
        gap = derivative - field(k, 0.5, sol.Pbar_mid[k])
        worst = max(worst, float(np.max(np.abs(gap))))
    return worst


def controllability_test(sol: RiccatiSolution) -> Tuple[bool, float]:
    """Check P̄(0) > 0; the smallest eigenvalue is the controllability margin."""
    start = sol.Pbar[0]
    margin = sol.min_eig_at_0
    threshold = CONTROLLABILITY_TOLERANCE * float(np.trace(start)) / start.shape[0]
    controllable = margin > threshold and margin > 0
    LOGGER.info("Controllability: %s (margin %g)", controllable, margin)
    return controllable, margin


def lq_gain(
        P: np.ndarray, B: np.ndarray, C: np.ndarray,
        D: np.ndarray, R: np.ndarray) -> np.ndarray:
    """Return (D'PD + R)^-1 (B'P + D'PC) for a single node."""
    try:
        factor = scipy.linalg.cho_factor(symmetrize(D.T @ P @ D + R))
    except np.linalg.LinAlgError as exc:
        raise NumericalError(
            "GAIN_SINGULAR", "D'PD + R lost positivity") from exc
    return scipy.linalg.cho_solve(factor, B.T @ P + D.T @ P @ C)


def solve_lq_riccati(spec: ProblemSpec, Q: MatrixPath) -> LqRiccatiSolution:
    """Integrate the regulator Riccati equation backward from P(T) = 0."""
    A, B, C, D, R = spec.coefficients()
    weight = Q.on_grid(spec.grid)

    def field(k: int, _s: float, P: np.ndarray) -> np.ndarray:
        L = B[k].T @ P + D[k].T @ P @ C[k]
        quadratic = L.T @ lq_gain(P, B[k], C[k], D[k], R[k])
        return -(P @ A[k] + A[k].T @ P + C[k].T @ P @ C[k] + weight[k] - quadratic)

    residuals: list = [0.0]
    values = integrate_backward(
        field, np.zeros((spec.n, spec.n)), spec.grid.steps, spec.grid.delta,
        _symmetric_step(residuals))
    if max(residuals) > SYMMETRY_LIMIT:
        raise NumericalError("NONSYMMETRIC", f"symmetry residual {max(residuals):.3g}")
    gain = np.stack([
        lq_gain(values[k], B[k], C[k], D[k], R[k]) for k in range(values.shape[0])])
    LOGGER.debug("Solved LQ Riccati equation on %d steps", spec.grid.steps)
    return LqRiccatiSolution(
        P=values,
        P_mid=symmetrize(hermite_midpoints(values, field, spec.grid.delta)),
        gain=gain,
        min_eig=float(min_eigenvalue(values).min()))
