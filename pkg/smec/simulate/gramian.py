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

"""Monte-Carlo controllability Gramians."""

import dataclasses
import logging
from typing import Callable, Optional

import numpy as np

from ..core.models import Estimate
from ..core.utils import identity_stack, symmetrize, transpose
from ..solver.decomposition import Decomposition
from .paths import BrownianBatch

RANK_TOLERANCE = 1e-6

LOGGER = logging.getLogger(__name__)


@dataclasses.dataclass(frozen=True, eq=False)
class PropagatorPath:
    """Fundamental matrix Phi per path and node."""

    phi: np.ndarray

    def inverse(self) -> np.ndarray:
        """Return Phi^-1 per path and node."""
        return np.linalg.inv(self.phi)

    def inverse_residual(self) -> float:
        """Return the largest entry of |Phi Phi^-1 - I|."""
        n = self.phi.shape[-1]
        return float(np.max(np.abs(self.phi @ self.inverse() - np.eye(n))))


@dataclasses.dataclass(frozen=True, eq=False)
class GramianReport:
    """Monte-Carlo Gramian with its eigenvalues and numerical rank."""

    gramian: np.ndarray
    eigenvalues: np.ndarray
    rank: int
    paths_used: int
    standard_error: float

    @property
    def full_rank(self) -> bool:
        """Return True, if the Gramian has full rank."""
        return self.rank == self.gramian.shape[0]


def propagate_phi(dec: Decomposition, batch: BrownianBatch) -> PropagatorPath:
    """Euler-Maruyama for dPhi = -Phi (A - GC) dt - Phi G dW with Phi(0) = I."""
    n = dec.n
    drift = dec.A - dec.G @ dec.C
    phi = np.empty((batch.paths, batch.steps + 1, n, n))
    phi[:, 0] = np.eye(n)
    for k in range(batch.steps):
        current = phi[:, k]
        phi[:, k + 1] = current - (current @ drift[k]) * batch.delta \
            - (current @ dec.G[k]) * batch.increments[:, k, np.newaxis, np.newaxis]
    return PropagatorPath(phi)


def _trapezoid_weights(steps: int, delta: float) -> np.ndarray:
    """Return the weights of the trapezoid rule on a uniform grid."""
    weights = np.full(steps + 1, delta)
    weights[0] = weights[-1] = 0.5 * delta
    return weights


def _accumulate(
        batch: BrownianBatch, n: int,
        step: Callable[[int, np.ndarray], np.ndarray],
        integrand: Callable[[int, np.ndarray], np.ndarray]) -> np.ndarray:
    """Integrate a matrix functional of a propagated matrix process per path."""
    weights = _trapezoid_weights(batch.steps, batch.delta)
    current = identity_stack(batch.paths, n)
    total = np.zeros((batch.paths, n, n))
    for k in range(batch.steps + 1):
        total += weights[k] * integrand(k, current)
        if k < batch.steps:
            current = step(k, current)
    return total


def _report(per_path: np.ndarray, name: str) -> GramianReport:
    """Average per-path Gramians and determine the numerical rank."""
    estimate = Estimate.of(symmetrize(per_path))
    gramian = np.asarray(estimate.value)
    eigenvalues = np.linalg.eigvalsh(gramian)[::-1]
    largest = float(eigenvalues[0]) if eigenvalues.size else 0.0
    rank = int(np.sum(eigenvalues > RANK_TOLERANCE * largest)) if largest > 0 else 0
    LOGGER.debug("%s Gramian eigenvalues %s, rank %d", name, eigenvalues, rank)
    return GramianReport(
        gramian=gramian,
        eigenvalues=eigenvalues,
        rank=rank,
        paths_used=estimate.samples,
        standard_error=float(np.max(estimate.standard_error, initial=0.0)))


def gramian_rank_mc(
        dec: Decomposition, batch: BrownianBatch,
        weight: Optional[np.ndarray] = None) -> GramianReport:
    """Estimate E int Phi F E F' Phi' dt, E defaults to the identity."""
    width = dec.m - dec.n
    if weight is None:
        weight = np.eye(width)
    drift = dec.A - dec.G @ dec.C
    FEF = dec.F @ weight @ transpose(dec.F)

    def step(k: int, phi: np.ndarray) -> np.ndarray:
        return phi - (phi @ drift[k]) * batch.delta \
            - (phi @ dec.G[k]) * batch.increments[:, k, np.newaxis, np.newaxis]

    def integrand(k: int, phi: np.ndarray) -> np.ndarray:
        return phi @ FEF[k] @ transpose(phi)

    return _report(_accumulate(batch, dec.n, step, integrand), "Controllability")


def dual_gramian_mc(dec: Decomposition, batch: BrownianBatch) -> GramianReport:
    """
    Estimate E int Phi~' F H3^-1 F' Phi~ dt.

    Phi~ solves dPhi~ = (-A' + C'B̄') Phi~ dt - B̄' Phi~ dW, Phi~(0) = I. Full
    rank is equivalent to P̄(0) > 0.
    """
    drift = -transpose(dec.A) + transpose(dec.C) @ transpose(dec.Bbar)
    noise = -transpose(dec.Bbar)
    FHF = dec.F @ dec.H3_inv @ transpose(dec.F)

    def step(k: int, phi: np.ndarray) -> np.ndarray:
        return phi + (drift[k] @ phi) * batch.delta \
            + (noise[k] @ phi) * batch.increments[:, k, np.newaxis, np.newaxis]

    def integrand(k: int, phi: np.ndarray) -> np.ndarray:
        return transpose(phi) @ FHF[k] @ phi

    return _report(_accumulate(batch, dec.n, step, integrand), "Dual")
