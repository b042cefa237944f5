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

"""Fixtures for testing smec."""

import pytest

from .core.models import ProblemSpec
from .simulate.paths import BrownianBatch, generate_paths

pytest.register_assert_rewrite("smec.test.common")

from .test import common  # noqa: E402 pylint: disable=wrong-import-position

# pylint: disable=redefined-outer-name


@pytest.fixture
def flagship() -> ProblemSpec:
    """Provide the flagship problem on a coarse grid."""
    return common.flagship(steps=200)


@pytest.fixture
def flagship_paths(flagship: ProblemSpec) -> BrownianBatch:
    """Provide Brownian paths for the flagship problem."""
    return generate_paths(flagship.grid, 2000, seed=7)


@pytest.fixture(params=[0, 1, 2])
def random_problem(request) -> ProblemSpec:
    """Provide small random problems with piecewise constant coefficients."""
    shapes = [(1, 2), (1, 3), (2, 3)]
    n, m = shapes[request.param]
    return common.random_spec(request.param, n=n, m=m, steps=100)


@pytest.fixture
def fine_flagship() -> ProblemSpec:
    """Provide the flagship problem on the grid of the acceptance tests."""
    return common.flagship(steps=1000)


@pytest.fixture
def fine_flagship_paths(fine_flagship: ProblemSpec) -> BrownianBatch:
    """Provide enough paths to test at three standard errors."""
    return generate_paths(fine_flagship.grid, 10000, seed=17)
