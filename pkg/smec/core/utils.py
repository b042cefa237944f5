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

"""Some numerical utilities."""

from datetime import datetime

import numpy as np
from pytz import UTC


def now() -> datetime:
    """Return the current UTC time."""
    return datetime.now(tz=UTC)


def transpose(matrices: np.ndarray) -> np.ndarray:
    """Transpose the last two axes of a (stacked) matrix array."""
    return np.swapaxes(matrices, -1, -2)


def symmetrize(matrices: np.ndarray) -> np.ndarray:
    """Return the symmetric part (X + X') / 2."""
    return 0.5 * (matrices + transpose(matrices))


def symmetric_residual(matrices: np.ndarray) -> float:
    """Return the largest entry of |X - X'|, relative to the size of X."""
    if matrices.size == 0:
        return 0.0
    scale = max(1.0, float(np.max(np.abs(matrices))))
    return float(np.max(np.abs(matrices - transpose(matrices)))) / scale


def min_eigenvalue(matrices: np.ndarray) -> np.ndarray:
    """Smallest eigenvalue of every symmetric matrix in a stack."""
    if matrices.shape[-1] == 0:
        return np.full(matrices.shape[:-2], np.inf)
    return np.linalg.eigvalsh(symmetrize(matrices))[..., 0]


def max_eigenvalue(matrices: np.ndarray) -> np.ndarray:
    """Largest eigenvalue of every symmetric matrix in a stack."""
    if matrices.shape[-1] == 0:
        return np.zeros(matrices.shape[:-2])
    return np.linalg.eigvalsh(symmetrize(matrices))[..., -1]


def apply(matrices: np.ndarray, vectors: np.ndarray) -> np.ndarray:
    """
    Apply one matrix per row to a stack of row vectors.

    `matrices` has shape (rows, cols) or (paths, rows, cols), `vectors` has
    shape (paths, cols). The result has shape (paths, rows).
    """
    if matrices.ndim == 2:
        return vectors @ matrices.T
    return np.einsum("pij,pj->pi", matrices, vectors)


def identity_stack(count: int, size: int) -> np.ndarray:
    """Return `count` copies of the identity matrix of the given size."""
    return np.broadcast_to(np.eye(size), (count, size, size)).copy()
