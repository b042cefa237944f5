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
Closed loop of the Hamiltonian system.

With X̄ = P̄ Y + p and Z̄ from the decoupling, the costate Y solves a linear
forward SDE. Simulating it yields the optimal controls v*, z* and u*.
"""

import dataclasses
import logging
from typing import Optional

import numpy as np
import pandas as pd

from ..core.models import Estimate, TerminalTarget, TimeGrid
from ..core.utils import apply, transpose
from ..simulate.paths import BrownianBatch
from .bsde import BsdeSolution
from .decomposition import Decomposition, control_from_parts
from .riccati import RiccatiSolution

LOGGER = logging.getLogger(__name__)


@dataclasses.dataclass(frozen=True, eq=False)
class ClosedLoopCoefficients:  # pylint: disable=too-many-instance-attributes
    """
    Node-wise affine maps of (Y, p, q).

    Z̄ = zbar_y Y + zbar_p p + zbar_q q, and likewise for the drift and the
    diffusion of Y.
    """

    dec: Decomposition
    Pbar: np.ndarray
    pq: BsdeSolution
    zbar_y: np.ndarray
    zbar_p: np.ndarray
    zbar_q: np.ndarray
    drift_y: np.ndarray
    drift_p: np.ndarray
    drift_q: np.ndarray
    diff_y: np.ndarray
    diff_p: np.ndarray
    diff_q: np.ndarray


@dataclasses.dataclass(frozen=True, eq=False)
class HamiltonianRun:
    """Costate, state and optimal controls per path and node."""

    Y: np.ndarray
    X: np.ndarray
    z: np.ndarray
    v: np.ndarray
    u: np.ndarray
    seed: int

    @property
    def Xbar(self) -> np.ndarray:
        """Return X̄ = -X."""
        return -self.X

    @property
    def Z(self) -> np.ndarray:
        """Return Z = z*."""
        return self.z

    def Zbar(self, C: np.ndarray) -> np.ndarray:
        """Return Z̄ = -(C X + Z)."""
        return -(np.einsum("kij,pkj->pki", C, self.X) + self.z)


def assemble_closed_loop(
        dec: Decomposition, pbar: RiccatiSolution,
        pq: BsdeSolution) -> ClosedLoopCoefficients:
    """Substitute X̄ and Z̄ into the costate equation."""
    P = pbar.Pbar
    C, Ct, H = dec.C, transpose(dec.C), dec.Hbar
    n = dec.n
    inverse = np.linalg.inv(np.eye(n) + P @ H)
    PHC = P @ H @ C

    zbar_y = inverse @ (PHC @ P - P @ transpose(dec.Bbar))
    zbar_p = inverse @ PHC
    zbar_q = inverse
    CtH = Ct @ H
    HC = H @ C
    return ClosedLoopCoefficients(
        dec=dec, Pbar=P, pq=pq,
        zbar_y=zbar_y, zbar_p=zbar_p, zbar_q=zbar_q,
        drift_y=-transpose(dec.Abar) - CtH @ C @ P + CtH @ zbar_y,
        drift_p=-CtH @ C + CtH @ zbar_p,
        drift_q=CtH @ zbar_q,
        diff_y=-transpose(dec.Bbar) + HC @ P - H @ zbar_y,
        diff_p=HC - H @ zbar_p,
        diff_q=-H @ zbar_q)


def _affine(
        y_map: np.ndarray, p_map: np.ndarray, q_map: np.ndarray,
        Y: np.ndarray, p: np.ndarray, q: np.ndarray) -> np.ndarray:
    """Evaluate y_map Y + p_map p + q_map q for all paths of one node."""
    return apply(y_map, Y) + apply(p_map, p) + q_map @ q


def run_hamiltonian(
        coeffs: ClosedLoopCoefficients, K: np.ndarray,
        paths: BrownianBatch) -> HamiltonianRun:
    """Simulate Y from Y(0) = K and reconstruct the optimal controls."""
    dec = coeffs.dec
    n, nodes = dec.n, dec.nodes
    W = paths.W
    alpha, beta = coeffs.pq.alpha, coeffs.pq.beta
    H3_inv = dec.H3_inv

    Y = np.empty((paths.paths, nodes, n))
    X = np.empty_like(Y)
    z = np.empty_like(Y)
    v = np.empty((paths.paths, nodes, dec.m - n))
    current = np.broadcast_to(K, (paths.paths, n)).copy()
    for k in range(nodes):
        p = alpha[k] + W[:, k, np.newaxis] * beta[k]
        q = beta[k]
        Y[:, k] = current
        xbar = apply(coeffs.Pbar[k], current) + p
        zbar = _affine(
            coeffs.zbar_y[k], coeffs.zbar_p[k], coeffs.zbar_q[k], current, p, q)
        X[:, k] = -xbar
        z[:, k] = apply(dec.C[k], xbar) - zbar
        v[:, k] = apply(H3_inv[k], current @ dec.F[k] - z[:, k] @ dec.H2[k])
        if k < nodes - 1:
            drift = _affine(
                coeffs.drift_y[k], coeffs.drift_p[k], coeffs.drift_q[k], current, p, q)
            diffusion = _affine(
                coeffs.diff_y[k], coeffs.diff_p[k], coeffs.diff_q[k], current, p, q)
            current = current + drift * paths.delta \
                + diffusion * paths.increments[:, k, np.newaxis]
    LOGGER.debug("Simulated costate on %d paths", paths.paths)
    return HamiltonianRun(
        Y=Y, X=X, z=z, v=v, u=control_from_parts(dec.M, z, v), seed=paths.seed)


def dual_energy(
        run: HamiltonianRun, target: TerminalTarget, K: np.ndarray,
        x0: np.ndarray, batch: BrownianBatch) -> Estimate:
    """Estimate the optimal energy as E[Y(T)' xi] - K' x0."""
    xi = target.evaluate(batch.w_terminal)
    samples = np.einsum("pi,pi->p", run.Y[:, -1], xi) - float(K @ x0)
    return Estimate.of(samples)


def export_controls(
        run: HamiltonianRun, grid: TimeGrid,
        path_limit: Optional[int] = None) -> pd.DataFrame:
    """Return per-path trajectories of Y and the optimal controls as a table."""
    count = run.Y.shape[0] if path_limit is None else min(path_limit, run.Y.shape[0])
    nodes = grid.nodes
    columns = {
        "path": np.repeat(np.arange(count), len(nodes)),
        "t": np.tile(nodes, count),
    }
    for name, values in (("Y", run.Y), ("v", run.v), ("z", run.z), ("u", run.u)):
        for index in range(values.shape[-1]):
            columns[f"{name}{index}"] = values[:count, :, index].reshape(-1)
    return pd.DataFrame(columns)
