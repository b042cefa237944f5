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

"""Test the (uvz) decomposition."""

import dataclasses

import numpy as np
import pytest

from ...core.models import NumericalError
from ...test import common
from ..decomposition import (build_M, build_M_path, control_from_parts, decompose,
                             parts_from_control, schur_check)


def test_build_M_flagship() -> None:
    """D = [1, 0] gives the identity."""
    assert np.array_equal(build_M(np.array([[1.0, 0.0]])), np.eye(2))


@pytest.mark.parametrize("seed", [0, 1, 2])
def test_build_M_random(seed: int) -> None:
    """D M = [I, 0] and M is invertible."""
    rng = np.random.default_rng(seed)
    D = rng.standard_normal((2, 4))
    M = build_M(D)
    common.assert_close(D @ M, np.hstack([np.eye(2), np.zeros((2, 2))]), atol=1e-12)
    assert abs(np.linalg.det(M)) > 1e-8
    kernel = M[:, 2:]
    common.assert_close(kernel.T @ kernel, np.eye(2), atol=1e-12)
    assert np.all(kernel[np.argmax(np.abs(kernel), axis=0), [0, 1]] > 0)


def test_build_M_rank_deficient() -> None:
    """D without full row rank is rejected."""
    with pytest.raises(NumericalError) as exc_info:
        build_M(np.array([[1.0, 2.0], [2.0, 4.0]]))
    assert exc_info.value.code == "RANK_DEFICIENT_D"


def test_build_M_path() -> None:
    """Every node gets its own M."""
    D = np.array([[[1.0, 0.0]], [[1.0, 0.0]], [[0.0, 2.0]]])
    M = build_M_path(D)
    assert M.shape == (3, 2, 2)
    common.assert_close(D @ M, np.array([[[1.0, 0.0]]] * 3), atol=1e-12)


def test_decompose_flagship() -> None:
    """Blocks of the flagship problem."""
    dec = decompose(common.flagship(steps=10))
    assert (dec.n, dec.m, dec.nodes) == (1, 2, 11)
    assert np.all(dec.G == 0.0)
    assert np.all(dec.F == 1.0)
    assert np.all(dec.H1 == 1.0) and np.all(dec.H2 == 0.0) and np.all(dec.H3 == 1.0)
    assert np.all(dec.Abar == 0.0) and np.all(dec.Bbar == 0.0)
    assert np.all(dec.Hbar_inv == 1.0)
    assert dec.weight().shape == (11, 2, 2)
    assert schur_check(dec).passed


def test_decompose_square() -> None:
    """With m = n, there is no v part."""
    dec = decompose(common.square(steps=5))
    assert dec.F.shape == (6, 1, 0)
    assert dec.H3_inv.shape == (6, 0, 0)
    assert schur_check(dec).passed


def test_schur_check_fails() -> None:
    """An indefinite weight is reported."""
    dec = decompose(common.flagship(steps=4))
    bad = dataclasses.replace(dec, H3=-dec.H3)
    assert schur_check(bad).codes() == ("H3_NOT_POSITIVE",)


def test_control_parts(random_problem) -> None:
    """u = M [z; v] and back."""
    dec = decompose(random_problem)
    rng = np.random.default_rng(3)
    n, m = dec.n, dec.m
    z = rng.standard_normal((4, dec.nodes, n))
    v = rng.standard_normal((4, dec.nodes, m - n))
    u = control_from_parts(dec.M, z, v)
    assert u.shape == (4, dec.nodes, m)
    z_again, v_again = parts_from_control(dec.M, u, n)
    common.assert_close(z_again, z, atol=1e-10)
    common.assert_close(v_again, v, atol=1e-10)
    D = dec.coefficients.D
    common.assert_close(np.einsum("kij,pkj->pki", D, u), z, atol=1e-10)
