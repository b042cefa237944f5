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

"""Backward one-step integration of ODEs on a uniform grid."""

from typing import Callable, Optional

import numpy as np

from ..core.models import NumericalError

OVERFLOW_GUARD = 1e12

# field(k, s, y): right-hand side inside step k at relative position s in [0, 1].
Field = Callable[[int, float, np.ndarray], np.ndarray]


def integrate_backward(
        field: Field,
        terminal: np.ndarray,
        steps: int,
        delta: float,
        post: Optional[Callable[[np.ndarray], np.ndarray]] = None,
        code: str = "RICCATI_BLOWUP") -> np.ndarray:
    """
    Integrate y' = field(t, y) backward from y(T) = terminal with classical RK4.

    Coefficients are piecewise constant: all stages of step k (from t_{k+1}
    down to t_k) see the coefficients of segment k.
    """
    result = np.empty((steps + 1,) + terminal.shape)
    result[steps] = terminal
    value = terminal
    step = -delta
    for k in range(steps - 1, -1, -1):
        k1 = field(k, 1.0, value)
        k2 = field(k, 0.5, value + 0.5 * step * k1)
        k3 = field(k, 0.5, value + 0.5 * step * k2)
        k4 = field(k, 0.0, value + step * k3)
        value = value + step / 6.0 * (k1 + 2.0 * k2 + 2.0 * k3 + k4)
        if post is not None:
            value = post(value)
        if not np.all(np.isfinite(value)) or \
                np.max(np.abs(value), initial=0.0) > OVERFLOW_GUARD:
            raise NumericalError(
                code, f"solution exceeds {OVERFLOW_GUARD:g} at node {k}")
        result[k] = value
    return result


def hermite_midpoints(
        values: np.ndarray, field: Field, delta: float) -> np.ndarray:
    """
    Return cubic Hermite values at the midpoints of all steps.

    Derivatives at both ends of step k are taken with the coefficients of
    segment k, so the midpoints keep the accuracy of the integrator.
    """
    steps = values.shape[0] - 1
    result = np.empty((steps,) + values.shape[1:])
    for k in range(steps):
        start = field(k, 0.0, values[k])
        end = field(k, 1.0, values[k + 1])
        result[k] = 0.5 * (values[k] + values[k + 1]) + delta * (start - end) / 8.0
    return result
