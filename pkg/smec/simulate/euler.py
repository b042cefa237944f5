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

"""Euler-Maruyama state propagation and energy estimates."""

import dataclasses

import numpy as np
import scipy.integrate

from ..core.models import (Coefficients, Estimate, NumericalError,
                           ProblemSpec, TerminalTarget, TimeGrid)
from ..core.utils import apply
from ..solver.decomposition import Decomposition, control_from_parts
from .paths import BrownianBatch

COST_FORM_TOLERANCE = 1e-10


@dataclasses.dataclass(frozen=True, eq=False)
class EnergyEstimate:
    """Energy estimate and the per-path energies it is based on."""

    estimate: Estimate
    samples: np.ndarray
    form_gap: float

    @property
    def value(self) -> float:
        """Return the estimated energy."""
        return float(self.estimate.value)

    @property
    def standard_error(self) -> float:
        """Return the standard error of the estimate."""
        return float(self.estimate.standard_error)


def euler_state(
        spec: ProblemSpec, dec: Decomposition, v: np.ndarray, z: np.ndarray,
        batch: BrownianBatch) -> np.ndarray:
    """Propagate dx = (Ax + Fv + Gz) dt + (Cx + z) dW from x(0) = x0."""
    if v.shape[:2] != z.shape[:2] or z.shape[0] != batch.paths or \
            z.shape[1] < batch.steps:
        raise ValueError(f"Controls {z.shape}/{v.shape} do not match the paths")
    x = np.empty((batch.paths, batch.steps + 1, spec.n))
    x[:, 0] = spec.x0
    for k in range(batch.steps):
        current = x[:, k]
        drift = apply(dec.A[k], current) + apply(dec.F[k], v[:, k]) + \
            apply(dec.G[k], z[:, k])
        diffusion = apply(dec.C[k], current) + z[:, k]
        x[:, k + 1] = current + drift * batch.delta + \
            diffusion * batch.increments[:, k, np.newaxis]
    return x


def euler_state_u(
        coefficients: Coefficients, x0: np.ndarray, u: np.ndarray,
        batch: BrownianBatch) -> np.ndarray:
    """Propagate dx = (Ax + Bu) dt + (Cx + Du) dW from x(0) = x0."""
    x = np.empty((batch.paths, batch.steps + 1, x0.shape[0]))
    x[:, 0] = x0
    A, B, C, D, _ = coefficients
    for k in range(batch.steps):
        current = x[:, k]
        drift = apply(A[k], current) + apply(B[k], u[:, k])
        diffusion = apply(C[k], current) + apply(D[k], u[:, k])
        x[:, k + 1] = current + drift * batch.delta + \
            diffusion * batch.increments[:, k, np.newaxis]
    return x


def quadratic_form(weights: np.ndarray, values: np.ndarray) -> np.ndarray:
    """Return w' W w for weights (nodes, r, r) and values (paths, nodes, r)."""
    return np.einsum("pki,kij,pkj->pk", values, weights, values)


def integrate_paths(values: np.ndarray, grid: TimeGrid) -> np.ndarray:
    """Trapezoid rule in time for every path; values have shape (paths, nodes)."""
    return scipy.integrate.trapezoid(values, dx=grid.delta, axis=1)


def estimate_energy(
        dec: Decomposition, v: np.ndarray, z: np.ndarray,
        grid: TimeGrid) -> EnergyEstimate:
    """
    Estimate E int z'H1z + 2v'H2'z + v'H3v dt.

    The energy is also computed as E int u'Ru dt with u = M [z; v]; both
    forms must agree on every path.
    """
    parts = np.concatenate([z, v], axis=-1)
    reduced = integrate_paths(quadratic_form(dec.weight(), parts), grid)
    u = control_from_parts(dec.M, z, v)
    original = integrate_paths(quadratic_form(dec.coefficients.R, u), grid)
    gap = np.abs(reduced - original) / np.maximum(1.0, np.abs(original))
    form_gap = float(gap.max()) if gap.size else 0.0
    if form_gap > COST_FORM_TOLERANCE:
        raise NumericalError(
            "COST_FORMS_DISAGREE", f"energy forms differ by {form_gap:.3g}")
    return EnergyEstimate(Estimate.of(reduced), reduced, form_gap)


def terminal_errors(
        x: np.ndarray, target: TerminalTarget, batch: BrownianBatch) -> np.ndarray:
    """Return |x(T) - xi|^2 for every path."""
    difference = x[:, -1] - target.evaluate(batch.w_terminal)
    return np.einsum("pi,pi->p", difference, difference)
