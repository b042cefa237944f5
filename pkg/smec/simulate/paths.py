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

"""Seeded Brownian increments shared by all simulations of one experiment."""

import concurrent.futures
import dataclasses
import logging

import numpy as np

from ..core.models import TimeGrid, ValidationFailed

BLOCK_SIZE = 1024

LOGGER = logging.getLogger(__name__)


@dataclasses.dataclass(frozen=True, eq=False)
class BrownianBatch:
    """Brownian increments, one row per path."""

    increments: np.ndarray
    seed: int
    antithetic: bool
    delta: float

    @property
    def paths(self) -> int:
        """Return the number of paths."""
        return int(self.increments.shape[0])

    @property
    def steps(self) -> int:
        """Return the number of time steps."""
        return int(self.increments.shape[1])

    @property
    def W(self) -> np.ndarray:
        """Return W at all grid nodes, W(0) = 0."""
        result = np.zeros((self.paths, self.steps + 1))
        np.cumsum(self.increments, axis=1, out=result[:, 1:])
        return result

    @property
    def w_terminal(self) -> np.ndarray:
        """Return W(T) for every path."""
        return self.increments.sum(axis=1)


def _block(seed: np.random.SeedSequence, rows: int, steps: int,
           scale: float, antithetic: bool) -> np.ndarray:
    """Draw the increments of one block of paths."""
    rng = np.random.default_rng(seed)
    if not antithetic:
        return scale * rng.standard_normal((rows, steps))
    half = scale * rng.standard_normal((rows // 2, steps))
    result = np.empty((rows, steps))
    result[0::2] = half
    result[1::2] = -half
    return result


def generate_paths(
        grid: TimeGrid, n_paths: int, seed: int,
        antithetic: bool = False, threads: int = 1) -> BrownianBatch:
    """
    Draw Brownian increments for `n_paths` paths on the grid.

    Every block of paths has its own random stream spawned from the seed, so
    the result does not depend on the number of threads.
    """
    if n_paths < 2:
        raise ValidationFailed(f"Need at least two paths, not {n_paths}")
    if antithetic and n_paths % 2:
        raise ValidationFailed(
            f"Antithetic sampling needs an even path count: {n_paths}")

    blocks = (n_paths + BLOCK_SIZE - 1) // BLOCK_SIZE
    seeds = np.random.SeedSequence(seed).spawn(blocks)
    sizes = [min(BLOCK_SIZE, n_paths - index * BLOCK_SIZE) for index in range(blocks)]
    scale = np.sqrt(grid.delta)

    def draw(index: int) -> np.ndarray:
        return _block(seeds[index], sizes[index], grid.steps, scale, antithetic)

    if threads > 1 and blocks > 1:
        with concurrent.futures.ThreadPoolExecutor(max_workers=threads) as executor:
            parts = list(executor.map(draw, range(blocks)))
    else:
        parts = [draw(index) for index in range(blocks)]
    LOGGER.debug(
        "Generated %d paths with %d steps (seed %d, %d blocks, %d threads)",
        n_paths, grid.steps, seed, blocks, threads)
    return BrownianBatch(np.concatenate(parts), seed, antithetic, grid.delta)
