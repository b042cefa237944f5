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

"""Common helper functions: problem instances and numeric assertions."""

import json
import os
from typing import Any, Dict, Optional, Sequence

import numpy as np
import pytest

from ..core.models import MatrixPath, ProblemSpec, TerminalTarget, TimeGrid
from ..solver.decomposition import build_M_path


def document(
        n: int, m: int, A: Any, B: Any, C: Any, D: Any, R: Any,
        x0: Sequence[float], a: Sequence[float], b: Optional[Sequence[float]] = None,
        T: float = 1.0, steps: int = 1000, **extra) -> Dict[str, Any]:
    """Return a problem document as a dictionary."""
    data: Dict[str, Any] = {
        "n": n, "m": m, "T": T, "steps": steps, "x0": list(x0),
        "A": A, "B": B, "C": C, "D": D, "R": R,
        "target": {"a": list(a)},
    }
    if b is not None:
        data["target"]["b"] = list(b)
    data.update(extra)
    return data


def flagship_document(steps: int = 1000, **extra) -> Dict[str, Any]:
    """dx = v dt + z dW, x(0) = 0, x(1) = W(1); the optimal energy is ln 2."""
    return document(
        1, 2, [[0.0]], [[0.0, 1.0]], [[0.0]], [[1.0, 0.0]], [[1.0, 0.0], [0.0, 1.0]],
        [0.0], [0.0], [1.0], steps=steps, **extra)


def write_document(path, data: Dict[str, Any]) -> str:
    """Write a problem document and return its file name."""
    path.write_text(json.dumps(data))
    return str(path)


def _constant(matrix: Any, horizon: float) -> MatrixPath:
    return MatrixPath.constant(np.asarray(matrix, dtype=float), horizon)


def make_spec(
        A: Any, B: Any, C: Any, D: Any, R: Any,
        x0: Sequence[float], target: TerminalTarget,
        T: float = 1.0, steps: int = 1000) -> ProblemSpec:
    """Build a problem with constant coefficients."""
    n, m = np.shape(B)
    return ProblemSpec(
        n, m, TimeGrid(T, steps),
        A=_constant(A, T), B=_constant(B, T), C=_constant(C, T),
        D=_constant(D, T), R=_constant(R, T),
        x0=np.asarray(x0, dtype=float), target=target).validate()


def flagship(steps: int = 1000) -> ProblemSpec:
    """Minimum-energy problem with closed form J* = ln 2."""
    return make_spec(
        [[0.0]], [[0.0, 1.0]], [[0.0]], [[1.0, 0.0]], np.eye(2), [0.0],
        TerminalTarget(np.zeros(1), np.ones(1)), steps=steps)


def deterministic(a: float = 1.0, x0: float = 0.0, T: float = 1.0,
                  steps: int = 100) -> ProblemSpec:
    """Flagship coefficients with a deterministic target: v* = (a - x0) / T."""
    return make_spec(
        [[0.0]], [[0.0, 1.0]], [[0.0]], [[1.0, 0.0]], np.eye(2), [x0],
        TerminalTarget.deterministic([a]), T=T, steps=steps)


def square(steps: int = 100) -> ProblemSpec:
    """A problem with m = n: no control is left for the drift."""
    return make_spec(
        [[0.0]], [[1.0]], [[0.0]], [[1.0]], [[1.0]], [0.0],
        TerminalTarget(np.zeros(1), np.ones(1)), steps=steps)


def degenerate(steps: int = 100) -> ProblemSpec:
    """n = 2 with F = e1: the second state component cannot be steered."""
    return make_spec(
        np.zeros((2, 2)), [[0.0, 0.0, 1.0], [0.0, 0.0, 0.0]], np.zeros((2, 2)),
        [[1.0, 0.0, 0.0], [0.0, 1.0, 0.0]], np.eye(3), [0.0, 0.0],
        TerminalTarget(np.zeros(2), np.ones(2)), steps=steps)


def random_spec(
        seed: int, n: int = 1, m: int = 2, steps: int = 100,
        piecewise: bool = True, scale: float = 0.5) -> ProblemSpec:
    """Random problem with (piecewise) constant coefficients and an affine target."""
    rng = np.random.default_rng(seed)
    horizon = 1.0
    segments = 2 if piecewise else 1
    breakpoints = np.linspace(0.0, horizon, segments + 1)

    def path(rows: int, cols: int, factor: float) -> MatrixPath:
        values = factor * rng.standard_normal((segments, rows, cols))
        return MatrixPath(values, breakpoints)

    D = rng.standard_normal((segments, n, m))
    D[:, :, :n] += 2.0 * np.eye(n)
    root = 0.3 * rng.standard_normal((segments, m, m))
    R = np.eye(m) + root @ np.swapaxes(root, -1, -2)
    return ProblemSpec(
        n, m, TimeGrid(horizon, steps),
        A=path(n, n, scale), B=path(n, m, 1.0), C=path(n, n, scale),
        D=MatrixPath(D, breakpoints), R=MatrixPath(R, breakpoints),
        x0=rng.standard_normal(n),
        target=TerminalTarget(
            rng.standard_normal(n), rng.standard_normal(n))).validate()


def assert_close(actual: Any, expected: Any, atol: float, rtol: float = 0.0) -> None:
    """Assert that two arrays agree within tolerances, reporting the worst gap."""
    actual_array = np.asarray(actual, dtype=float)
    expected_array = np.broadcast_to(
        np.asarray(expected, dtype=float), actual_array.shape)
    gap = np.abs(actual_array - expected_array)
    limit = atol + rtol * np.abs(expected_array)
    assert np.all(gap <= limit), f"max gap {float(np.max(gap)):.3g} exceeds tolerance"


def random_seeds(count: int = 20) -> Sequence[Any]:
    """Return seeds of random instances; only two of them for smoke tests."""
    if os.environ.get('SMOKE', ''):
        return [0, 1]
    return [0, 1] + [
        pytest.param(seed, marks=pytest.mark.slow) for seed in range(2, count)]


def alternative_M(D: np.ndarray, n: int) -> np.ndarray:
    """Return a second factorization M T of a stack of D, with D M T = [I, 0]."""
    m = D.shape[-1]
    mixing = np.eye(m)
    mixing[n:, :n] = 0.5
    mixing[n:, n:] *= 2.0
    return build_M_path(D) @ mixing
