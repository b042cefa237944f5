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

"""Test the BSDE solver and its Monte-Carlo cross-checks."""

import numpy as np
import pytest

from ...core.models import NotControllable, TerminalTarget
from ...simulate.paths import generate_paths
from ...test import common
from ..bsde import (bsde_coefficients, compute_K, martingale_check,
                    monte_carlo_K, simulate_adjoint, solve_pq_affine)
from ..decomposition import decompose
from ..riccati import solve_pbar


def _solve(spec):
    """Return P̄, the BSDE coefficients and (alpha, beta)."""
    dec = decompose(spec)
    pbar = solve_pbar(dec, spec.grid)
    coefficients = bsde_coefficients(dec, pbar)
    return pbar, coefficients, solve_pq_affine(coefficients, spec.target, spec.grid)


def test_flagship_pq() -> None:
    """p = -W, q = -1 and K = 0 for the flagship problem."""
    spec = common.flagship(steps=50)
    pbar, coefficients, pq = _solve(spec)
    assert np.all(coefficients.B1 == 0.0) and np.all(coefficients.B2 == 0.0)
    common.assert_close(pq.alpha, 0.0, atol=1e-15)
    common.assert_close(pq.beta, -1.0, atol=1e-15)
    W = np.random.default_rng(0).standard_normal((3, 51))
    common.assert_close(pq.p(W)[:, :, 0], -W, atol=1e-15)
    assert pq.K is None
    K = compute_K(pbar, pq, spec.x0)
    assert K.tolist() == [0.0]
    assert pq.with_K(K).K is K


@pytest.mark.parametrize("a, x0, horizon", [(1.0, 0.0, 1.0), (2.0, 0.5, 2.0)])
def test_deterministic_K(a: float, x0: float, horizon: float) -> None:
    """K = (a - x0) / T pins the sign convention."""
    spec = common.deterministic(a=a, x0=x0, T=horizon, steps=40)
    pbar, _, pq = _solve(spec)
    common.assert_close(pq.p0, -a, atol=1e-12)
    common.assert_close(compute_K(pbar, pq, spec.x0), (a - x0) / horizon, atol=1e-12)


def test_compute_K_not_controllable() -> None:
    """A singular P̄(0) has no initial costate."""
    spec = common.square(steps=20)
    pbar, _, pq = _solve(spec)
    with pytest.raises(NotControllable) as exc_info:
        compute_K(pbar, pq, spec.x0)
    assert exc_info.value.margin == pytest.approx(0.0, abs=1e-12)


def test_self_convergence() -> None:
    """Halving the step size reduces the error of (alpha, beta)(0) by about 16."""
    spec = common.random_spec(5, n=2, m=4, piecewise=False)
    starts = []
    for steps in (8, 16, 32):
        _, _, pq = _solve(spec.with_steps(steps))
        starts.append(np.concatenate([pq.alpha[0], pq.beta[0]]))
    first = np.max(np.abs(starts[0] - starts[1]))
    second = np.max(np.abs(starts[1] - starts[2]))
    assert 12 <= first / second <= 20


def test_adjoint_flagship(flagship, flagship_paths) -> None:
    """Without B1 and B2 the adjoint process stays the identity."""
    _, coefficients, pq = _solve(flagship)
    adjoint = simulate_adjoint(coefficients, flagship_paths)
    assert np.all(adjoint.P_T == 1.0)
    assert adjoint.seed == 7
    check = martingale_check(adjoint, pq, flagship.target, flagship_paths)
    assert check.passed


def test_martingale_sample_size(random_problem) -> None:
    """Antithetic batches give one sample per path."""
    spec = random_problem
    _, coefficients, pq = _solve(spec)
    batch = generate_paths(spec.grid, 400, seed=11, antithetic=True)
    check = martingale_check(
        simulate_adjoint(coefficients, batch), pq, spec.target, batch)
    assert check.estimate.samples == 400
    assert np.all(np.isfinite(check.estimate.value))


@pytest.mark.slow
def test_martingale_and_K(random_problem) -> None:
    """p(0) = E[P(T) p(T)] and the Monte-Carlo K agree up to sampling errors."""
    spec = random_problem.with_steps(1000)
    pbar, coefficients, pq = _solve(spec)
    batch = generate_paths(spec.grid, 10000, seed=11)
    adjoint = simulate_adjoint(coefficients, batch)
    check = martingale_check(adjoint, pq, spec.target, batch)
    assert check.estimate.samples == 10000
    assert check.passed
    assert check.estimate.within(check.expected)
    K = compute_K(pbar, pq, spec.x0)
    estimate = monte_carlo_K(pbar, adjoint, spec.target, batch, spec.x0)
    assert estimate.within(K)


def test_deterministic_target_mc_K() -> None:
    """For a deterministic target and B2 = 0, the Monte-Carlo K is exact."""
    spec = common.deterministic(a=1.5, steps=20)
    pbar, coefficients, pq = _solve(spec)
    batch = generate_paths(spec.grid, 10, seed=1)
    adjoint = simulate_adjoint(coefficients, batch)
    estimate = monte_carlo_K(
        pbar, adjoint, TerminalTarget.deterministic([1.5]), batch, spec.x0)
    common.assert_close(estimate.value, compute_K(pbar, pq, spec.x0), atol=1e-12)
