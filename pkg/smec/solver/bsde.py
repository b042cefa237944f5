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
Linear BSDE for the decoupling pair (p, q).

Targets are affine in W(T), xi = a + b W(T). The ansatz p = alpha + beta W,
q = beta reduces the BSDE to two linear backward ODEs. The sign convention is
p(T) = -xi, so that X̄ = P̄ Y + p meets X̄(T) = -xi.
"""

import dataclasses
import logging
from typing import Optional, Tuple

import numpy as np

from ..core.models import (Estimate, NotControllable, NumericalError,
                           TerminalTarget, TimeGrid)
from ..core.utils import apply, identity_stack, transpose
from ..simulate.paths import BrownianBatch
from .decomposition import Decomposition
from .ode import integrate_backward
from .riccati import RiccatiSolution, controllability_test

LOGGER = logging.getLogger(__name__)


@dataclasses.dataclass(frozen=True, eq=False)
class BsdeCoefficients:
    """
    B1 and B2 at the grid nodes.

    The `_mid` and `_end` arrays hold the values inside step k at its
    midpoint and right end, evaluated with the coefficients of segment k.
    """

    B1: np.ndarray
    B2: np.ndarray
    B1_mid: np.ndarray
    B2_mid: np.ndarray
    B1_end: np.ndarray
    B2_end: np.ndarray

    def at(self, k: int, position: float) -> Tuple[np.ndarray, np.ndarray]:
        """Return (B1, B2) inside step k at relative position 0, 0.5 or 1."""
        if position >= 1.0:
            return self.B1_end[k], self.B2_end[k]
        if position > 0.0:
            return self.B1_mid[k], self.B2_mid[k]
        return self.B1[k], self.B2[k]


@dataclasses.dataclass(frozen=True, eq=False)
class BsdeSolution:
    """p(t) = alpha(t) + beta(t) W(t), q(t) = beta(t), and the costate K."""

    alpha: np.ndarray
    beta: np.ndarray
    K: Optional[np.ndarray] = None

    @property
    def p0(self) -> np.ndarray:
        """Return p(0) = alpha(0)."""
        return self.alpha[0]

    def p(self, W: np.ndarray) -> np.ndarray:
        """Evaluate p at all nodes of all paths; W has shape (paths, nodes)."""
        return self.alpha[np.newaxis] + W[:, :, np.newaxis] * self.beta[np.newaxis]

    def with_K(self, K: np.ndarray) -> "BsdeSolution":
        """Return the solution together with the initial costate."""
        return dataclasses.replace(self, K=K)


@dataclasses.dataclass(frozen=True, eq=False)
class AdjointSample:
    """Terminal values of the adjoint process on every path."""

    P_T: np.ndarray
    seed: int


@dataclasses.dataclass(frozen=True, eq=False)
class MartingaleCheck:
    """Monte-Carlo estimate of E[P(T) p(T)] against p(0)."""

    estimate: Estimate
    expected: np.ndarray

    @property
    def passed(self) -> bool:
        """Return True, if p(0) lies within three standard errors."""
        return self.estimate.within(self.expected)


def _b_matrices(
        Abar: np.ndarray, Bbar: np.ndarray,
        Hbar: np.ndarray, C: np.ndarray,
        Pbar: np.ndarray) -> Tuple[np.ndarray, np.ndarray]:
    """Evaluate B1 and B2 for stacks of matrices."""
    Hbar_inv = np.linalg.inv(Hbar)
    shifted = Hbar_inv + Pbar
    try:
        np.linalg.cholesky(0.5 * (shifted + transpose(shifted)))
    except np.linalg.LinAlgError as exc:
        raise NumericalError(
            "BSDE_FACTORIZATION", "H̄^-1 + P̄ is not positive definite") from exc
    # [I + P̄ H̄]^-1 = H̄^-1 [H̄^-1 + P̄]^-1
    inverse = Hbar_inv @ np.linalg.inv(shifted)
    PCH = Pbar @ transpose(C) @ Hbar
    left = Bbar - PCH
    B2 = left @ inverse
    B1 = Abar + PCH @ C + B2 @ Pbar @ Hbar @ C
    return B1, B2


def bsde_coefficients(dec: Decomposition, pbar: RiccatiSolution) -> BsdeCoefficients:
    """Evaluate B1, B2 at the nodes, step midpoints and step ends."""
    B1, B2 = _b_matrices(dec.Abar, dec.Bbar, dec.Hbar, dec.C, pbar.Pbar)
    left = (dec.Abar[:-1], dec.Bbar[:-1], dec.Hbar[:-1], dec.C[:-1])
    B1_mid, B2_mid = _b_matrices(*left, pbar.Pbar_mid)
    B1_end, B2_end = _b_matrices(*left, pbar.Pbar[1:])
    return BsdeCoefficients(B1, B2, B1_mid, B2_mid, B1_end, B2_end)


def solve_pq_affine(
        coeffs: BsdeCoefficients, target: TerminalTarget,
        grid: TimeGrid) -> BsdeSolution:
    """Integrate alpha' = B1 alpha + B2 beta, beta' = B1 beta backward."""

    def field(k: int, position: float, value: np.ndarray) -> np.ndarray:
        B1, B2 = coeffs.at(k, position)
        alpha, beta = value
        return np.stack([B1 @ alpha + B2 @ beta, B1 @ beta])

    terminal = np.stack([-target.a, -target.b])
    values = integrate_backward(
        field, terminal, grid.steps, grid.delta, code="BSDE_BLOWUP")
    LOGGER.debug("Solved (alpha, beta) on %d steps: p(0)=%s", grid.steps, values[0, 0])
    return BsdeSolution(alpha=values[:, 0], beta=values[:, 1])


def simulate_adjoint(coeffs: BsdeCoefficients, paths: BrownianBatch) -> AdjointSample:
    """Euler-Maruyama for dP = -P B1 dt - P B2 dW with P(0) = I."""
    n = coeffs.B1.shape[-1]
    adjoint = identity_stack(paths.paths, n)
    for k in range(paths.steps):
        noise = paths.increments[:, k, np.newaxis, np.newaxis]
        adjoint = adjoint - (adjoint @ coeffs.B1[k]) * paths.delta \
            - (adjoint @ coeffs.B2[k]) * noise
    return AdjointSample(adjoint, paths.seed)


def compute_K(
        pbar: RiccatiSolution, sol: BsdeSolution,
        x0: np.ndarray) -> np.ndarray:
    """Return K = P̄(0)^-1 (-x0 - p(0))."""
    controllable, margin = controllability_test(pbar)
    if not controllable:
        raise NotControllable(
            f"P̄(0) is not positive definite (margin {margin:g})", margin)
    return np.linalg.solve(pbar.Pbar[0], -x0 - sol.p0)


def monte_carlo_K(
        pbar: RiccatiSolution, adjoint: AdjointSample, target: TerminalTarget,
        batch: BrownianBatch, x0: np.ndarray) -> Estimate:
    """Estimate K = P̄(0)^-1 (-x0 + E[P(T) xi]) from the adjoint samples."""
    xi = target.evaluate(batch.w_terminal)
    samples = apply(adjoint.P_T, xi) - x0
    return Estimate.of(np.linalg.solve(pbar.Pbar[0], samples.T).T)


def martingale_check(
        adjoint: AdjointSample, sol: BsdeSolution, target: TerminalTarget,
        batch: BrownianBatch) -> MartingaleCheck:
    """Compare the sample mean of P(T) p(T) with p(0)."""
    terminal = -target.evaluate(batch.w_terminal)
    return MartingaleCheck(Estimate.of(apply(adjoint.P_T, terminal)), sol.p0)
