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
Exact tree versions of the identities behind the optimality of (v*, z*).

On the tree, the propagator Phi_{k+1} = Phi_k Psi_k (I - G dW_k) with
Psi_k = [I + (A - GC) dt]^-1 turns Phi dx into an exact martingale, so the
identities hold up to rounding for any two feasible points.
"""

import dataclasses
from typing import List

import numpy as np

from ..core.utils import apply, transpose
from ..solver.decomposition import Decomposition
from .tree import TreeProblem, TreeSolution, level_W

GAMMA_CANONICAL = "canonical"
GAMMA_RANDOM = "random"


@dataclasses.dataclass(frozen=True, eq=False)
class TreeIdentityReport:
    """Both identities evaluated exactly on the tree."""

    transport: np.ndarray
    duality_lhs: float
    duality_rhs: float
    scale: float

    @property
    def transport_residual(self) -> float:
        """Return the relative size of the first identity."""
        return float(np.max(np.abs(self.transport))) / self.scale

    @property
    def duality_residual(self) -> float:
        """Return the relative gap between both sides of the second identity."""
        return abs(self.duality_lhs - self.duality_rhs) / self.scale


def _step_inverse(dec: Decomposition, level: int, delta: float) -> np.ndarray:
    """Return [I + (A - GC) dt]^-1 at a tree level."""
    n = dec.A.shape[-1]
    drift = dec.A[level] - dec.G[level] @ dec.C[level]
    return np.linalg.inv(np.eye(n) + drift * delta)


def tree_propagators(tree: TreeProblem) -> List[np.ndarray]:
    """Return Phi for every node of the levels 0..N-1."""
    dec, n = tree.dec, tree.n
    result = [np.eye(n)[np.newaxis]]
    for level in range(tree.depth - 1):
        psi = _step_inverse(dec, level, tree.delta)
        xi = tree.signs(level) * tree.sqrt_delta
        parents = np.repeat(result[-1], 2, axis=0)
        step = np.eye(n) - xi[:, np.newaxis, np.newaxis] * dec.G[level]
        result.append(parents @ psi @ step)
    return result


def _gamma2(tree: TreeProblem, first: TreeSolution, phi: List[np.ndarray],
            choice: str, seed: int) -> List[np.ndarray]:
    """Return Gamma_2 for every node of the levels 0..N-1."""
    dec = tree.dec
    if choice == GAMMA_CANONICAL:
        return [
            np.linalg.solve(
                transpose(phi[level]),
                (apply(dec.H1[level], first.z[level]) +
                 apply(dec.H2[level], first.v[level]))[..., np.newaxis])[..., 0]
            for level in range(tree.depth)]
    if choice == GAMMA_RANDOM:
        rng = np.random.default_rng(seed)
        offset, slope = rng.standard_normal((2, tree.depth, tree.n))
        W = level_W(tree.depth, tree.sqrt_delta)
        return [offset[level] + W[level][:, np.newaxis] * slope[level]
                for level in range(tree.depth)]
    raise ValueError(f"Unknown Gamma_2 choice: {choice!r}")


def tree_identity_checks(
        tree: TreeProblem, first: TreeSolution, second: TreeSolution,
        gamma2: str = GAMMA_CANONICAL, seed: int = 0) -> TreeIdentityReport:
    """Evaluate both identities for two feasible points of the same tree."""
    dec, n, delta = tree.dec, tree.n, tree.delta
    phi = tree_propagators(tree)
    gamma2_values = _gamma2(tree, first, phi, gamma2, seed)

    transport = np.zeros(n)
    lhs = rhs = 0.0
    gamma = np.zeros((1, n))
    magnitude = 0.0
    for level in range(tree.depth):
        weight = delta / 2 ** level
        psi = _step_inverse(dec, level, delta)
        phi_psi = phi[level] @ psi
        dv = second.v[level] - first.v[level]
        dz = second.z[level] - first.z[level]
        g2 = gamma2_values[level]

        transported = apply(phi_psi @ dec.F[level], dv)
        transport -= weight * transported.sum(axis=0)

        # Gamma_1 = -[Phi^-1]' Cm' Psi' Phi' Gamma_2 with Cm = C - G - G A dt
        cm = dec.C[level] - dec.G[level] - dec.G[level] @ dec.A[level] * delta
        g1 = -apply(transpose(np.linalg.inv(phi[level])),
                    apply(transpose(phi_psi @ cm), g2))

        noise_fix = np.eye(n) - dec.G[level] @ dec.G[level] * delta
        left = np.einsum("ji,ji->", g2, apply(phi_psi @ noise_fix, dz))
        noise_drift = apply(phi_psi @ dec.G[level] @ dec.F[level], dv)
        right = np.einsum("ji,ji->", gamma + g1 * delta, transported) - \
            np.einsum("ji,ji->", g2, noise_drift) * delta
        lhs += weight * left
        rhs -= weight * right
        magnitude += weight * (abs(left) + abs(right) + np.abs(transported).sum())

        xi = tree.signs(level) * tree.sqrt_delta
        gamma = np.repeat(gamma + g1 * delta, 2, axis=0) + \
            np.repeat(g2, 2, axis=0) * xi[:, np.newaxis]

    return TreeIdentityReport(
        transport=transport, duality_lhs=float(lhs), duality_rhs=float(rhs),
        scale=max(1.0, magnitude))
