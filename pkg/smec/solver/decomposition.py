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
Factorization of the input matrix D.

An invertible M with D M = [I, 0] splits the control into u = M [z; v], where
z drives the diffusion directly and v only enters the drift. All block
matrices of the reduced problem are derived from M.
"""

import dataclasses
import logging
from typing import List, Optional, Tuple

import numpy as np

from ..core.logic import POSITIVITY_TOLERANCE
from ..core.models import (Coefficients, Finding, NumericalError, ProblemSpec,
                           ValidationReport)
from ..core.utils import max_eigenvalue, min_eigenvalue, symmetrize, transpose

RANK_TOLERANCE = 1e-10

LOGGER = logging.getLogger(__name__)


def build_M(D: np.ndarray) -> np.ndarray:
    """Return M = [D'(DD')^-1 | N] with N an orthonormal kernel basis of D."""
    n, m = D.shape
    _, singular, vt = np.linalg.svd(D)
    if singular[0] <= 0 or singular[-1] <= RANK_TOLERANCE * singular[0]:
        raise NumericalError(
            "RANK_DEFICIENT_D",
            f"D has numerical rank below {n} (singular values {singular.tolist()})")
    right_inverse = D.T @ np.linalg.inv(D @ D.T)
    kernel = vt[n:].T
    if kernel.size:
        # Deterministic sign: largest entry of every column is positive.
        pivots = np.argmax(np.abs(kernel), axis=0)
        kernel = kernel * np.sign(kernel[pivots, np.arange(m - n)])
    return np.hstack([right_inverse, kernel])


def build_M_path(D: np.ndarray) -> np.ndarray:
    """Build M for every matrix of a stack; equal inputs reuse the same result."""
    result = np.empty((D.shape[0], D.shape[2], D.shape[2]))
    previous: Optional[np.ndarray] = None
    for index, matrix in enumerate(D):
        if previous is None or not np.array_equal(matrix, D[index - 1]):
            previous = build_M(matrix)
        result[index] = previous
    return result


@dataclasses.dataclass(frozen=True, eq=False)
class Decomposition:  # pylint: disable=too-many-instance-attributes
    """Factorization M and the derived blocks, one matrix per grid node."""

    M: np.ndarray
    G: np.ndarray
    F: np.ndarray
    H1: np.ndarray
    H2: np.ndarray
    H3: np.ndarray
    Abar: np.ndarray
    Bbar: np.ndarray
    Hbar: np.ndarray
    coefficients: Coefficients

    @property
    def n(self) -> int:
        """Return the state dimension."""
        return int(self.G.shape[-1])

    @property
    def m(self) -> int:
        """Return the control dimension."""
        return int(self.M.shape[-1])

    @property
    def nodes(self) -> int:
        """Return the number of sampled nodes."""
        return int(self.M.shape[0])

    @property
    def A(self) -> np.ndarray:
        """Return the drift matrix A."""
        return self.coefficients.A

    @property
    def C(self) -> np.ndarray:
        """Return the diffusion matrix C."""
        return self.coefficients.C

    @property
    def H3_inv(self) -> np.ndarray:
        """Return the inverse of H3 (empty if m = n)."""
        if self.H3.shape[-1] == 0:
            return self.H3.copy()
        return np.linalg.inv(self.H3)

    @property
    def Hbar_inv(self) -> np.ndarray:
        """Return the inverse of the Schur complement."""
        return symmetrize(np.linalg.inv(self.Hbar))

    def weight(self) -> np.ndarray:
        """Return the full weight M'RM = [[H1, H2], [H2', H3]] in (z, v) order."""
        top = np.concatenate([self.H1, self.H2], axis=-1)
        bottom = np.concatenate([transpose(self.H2), self.H3], axis=-1)
        return np.concatenate([top, bottom], axis=-2)


def decompose_coefficients(
        coefficients: Coefficients, M: Optional[np.ndarray] = None) -> Decomposition:
    """Derive all blocks of the reduced problem from sampled coefficients."""
    if M is None:
        M = build_M_path(coefficients.D)
    n = coefficients.A.shape[-1]

    BM = coefficients.B @ M
    G, F = BM[..., :n], BM[..., n:]
    weight = symmetrize(transpose(M) @ coefficients.R @ M)
    H1, H2, H3 = weight[..., :n, :n], weight[..., :n, n:], weight[..., n:, n:]

    if H3.shape[-1]:
        H3_inv = np.linalg.inv(H3)
    else:
        H3_inv = H3.copy()
    correction = F @ H3_inv @ transpose(H2)
    Abar = coefficients.A - G @ coefficients.C + correction @ coefficients.C
    Bbar = G - correction
    Hbar = symmetrize(H1 - H2 @ H3_inv @ transpose(H2))
    return Decomposition(
        M=M, G=G, F=F, H1=H1, H2=H2, H3=H3, Abar=Abar, Bbar=Bbar, Hbar=Hbar,
        coefficients=coefficients)


def decompose(spec: ProblemSpec, M: Optional[np.ndarray] = None) -> Decomposition:
    """Decompose the coefficients of a problem on its grid."""
    dec = decompose_coefficients(spec.coefficients(), M)
    LOGGER.debug(
        "Decomposed problem n=%d, m=%d on %d nodes", spec.n, spec.m, dec.nodes)
    return dec


def _positivity(name: str, code: str, values: np.ndarray) -> List[Finding]:
    """Check strict positivity of a stack of symmetric matrices."""
    if values.shape[-1] == 0:
        return []
    lowest = min_eigenvalue(values)
    bad = ~(lowest > POSITIVITY_TOLERANCE * np.abs(max_eigenvalue(values)))
    if not np.any(bad):
        return []
    node = int(np.flatnonzero(bad)[0])
    return [Finding(
        code, f"{name} has eigenvalue {lowest[node]:.3g} at {int(bad.sum())} node(s)",
        node)]


def schur_check(dec: Decomposition) -> ValidationReport:
    """Verify H3 > 0 and H1 - H2 H3^-1 H2' > 0 at every node."""
    findings = _positivity("H3", "H3_NOT_POSITIVE", dec.H3)
    if not findings:
        schur = symmetrize(dec.H1 - dec.H2 @ dec.H3_inv @ transpose(dec.H2))
        findings.extend(_positivity("H1 - H2 H3^-1 H2'", "SCHUR_NOT_POSITIVE", schur))
    return ValidationReport(tuple(findings))


def control_from_parts(M: np.ndarray, z: np.ndarray, v: np.ndarray) -> np.ndarray:
    """
    Recompose u = M [z; v].

    `M` has shape (nodes, m, m), `z` and `v` have shape (paths, nodes, ...).
    """
    parts = np.concatenate([z, v], axis=-1)
    return np.einsum("kij,pkj->pki", M, parts)


def parts_from_control(
        M: np.ndarray, u: np.ndarray, n: int) -> Tuple[np.ndarray, np.ndarray]:
    """Split u into (z, v) with [z; v] = M^-1 u."""
    parts = np.einsum("kij,pkj->pki", np.linalg.inv(M), u)
    return parts[..., :n], parts[..., n:]
