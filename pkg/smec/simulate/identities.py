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

"""Monte-Carlo checks of the identities behind the optimality of (v*, z*)."""

import dataclasses
import logging
from typing import Tuple

import numpy as np

from ..core.models import Estimate, NotAdmissible, ProblemSpec
from ..core.utils import apply, transpose
from ..solver.decomposition import Decomposition
from .euler import euler_state, terminal_errors
from .gramian import propagate_phi
from .paths import BrownianBatch

ADMISSIBILITY_TOLERANCE = 1e-2
GAMMA_CANONICAL = "canonical"
GAMMA_RANDOM = "random"

LOGGER = logging.getLogger(__name__)


@dataclasses.dataclass(frozen=True, eq=False)
class ControlPair:
    """Controls (v, z) per path and node."""

    v: np.ndarray
    z: np.ndarray


@dataclasses.dataclass(frozen=True, eq=False)
class IdentityReport:
    """Estimates of both sides of the two identities."""

    transport: Estimate
    duality_lhs: Estimate
    duality_rhs: Estimate
    duality_gap: Estimate
    terminal_mismatch: Tuple[float, float]
    phi_inverse_residual: float

    @property
    def transport_passed(self) -> bool:
        """Return True, if E int Phi F (v1 - v2) dt is zero within 3 SE."""
        return self.transport.within(0.0)

    @property
    def duality_passed(self) -> bool:
        """Return True, if both sides of the Gamma identity agree within 3 SE."""
        return self.duality_gap.within(0.0)

    @property
    def passed(self) -> bool:
        """Return True, if both identities hold."""
        return self.transport_passed and self.duality_passed


def _check_admissible(
        spec: ProblemSpec, dec: Decomposition, pair: ControlPair,
        batch: BrownianBatch, tolerance: float) -> float:
    """Return the mean terminal mismatch, raise if it is too large."""
    x = euler_state(spec, dec, pair.v, pair.z, batch)
    mismatch = float(terminal_errors(x, spec.target, batch).mean())
    xi = spec.target.evaluate(batch.w_terminal)
    scale = 1.0 + float(np.einsum("pi,pi->p", xi, xi).mean())
    if mismatch > tolerance * scale:
        raise NotAdmissible(f"mean terminal mismatch {mismatch:.3g} exceeds tolerance")
    return mismatch


def _gamma2(
        dec: Decomposition, reference: ControlPair, phi: np.ndarray,
        batch: BrownianBatch, choice: str, seed: int) -> np.ndarray:
    """Return Gamma_2 per path and node."""
    if choice == GAMMA_CANONICAL:
        rhs = np.einsum("kij,pkj->pki", dec.H1, reference.z) + \
            np.einsum("kij,pkj->pki", dec.H2, reference.v)
        return np.linalg.solve(transpose(phi), rhs[..., np.newaxis])[..., 0]
    if choice == GAMMA_RANDOM:
        rng = np.random.default_rng(seed)
        offset, slope = rng.standard_normal((2, batch.steps + 1, dec.n))
        return offset[np.newaxis] + batch.W[:, :, np.newaxis] * slope[np.newaxis]
    raise ValueError(f"Unknown Gamma_2 choice: {choice!r}")


def identity_checks(
        spec: ProblemSpec, dec: Decomposition, first: ControlPair,
        second: ControlPair, batch: BrownianBatch,
        gamma2: str = GAMMA_CANONICAL, seed: int = 0,
        tolerance: float = ADMISSIBILITY_TOLERANCE) -> IdentityReport:
    """
    Estimate both identities for two admissible control pairs.

    The first pair is the reference for the canonical Gamma_2.
    """
    mismatch = (
        _check_admissible(spec, dec, first, batch, tolerance),
        _check_admissible(spec, dec, second, batch, tolerance))
    propagator = propagate_phi(dec, batch)
    phi = propagator.phi
    phi_inv = propagator.inverse()
    gamma2_values = _gamma2(dec, first, phi, batch, gamma2, seed)
    cg = transpose(dec.C - dec.G)
    delta = batch.delta

    gamma = np.zeros((batch.paths, dec.n))
    transport = np.zeros((batch.paths, dec.n))
    lhs = np.zeros(batch.paths)
    rhs = np.zeros(batch.paths)
    for k in range(batch.steps):
        phi_k = phi[:, k]
        dv = first.v[:, k] - second.v[:, k]
        phi_f = phi_k @ dec.F[k]
        transport += apply(phi_f, dv) * delta

        g2 = gamma2_values[:, k]
        dz = second.z[:, k] - first.z[:, k]
        lhs += np.einsum("pi,pi->p", g2, apply(phi_k, dz)) * delta
        rhs -= np.einsum("pi,pi->p", gamma, apply(phi_f, -dv)) * delta

        # Gamma_1 = -[Phi^-1]' [C - G]' Phi' Gamma_2
        g1 = -apply(transpose(phi_inv[:, k]), apply(cg[k], apply(transpose(phi_k), g2)))
        gamma = gamma + g1 * delta + g2 * batch.increments[:, k, np.newaxis]

    report = IdentityReport(
        transport=Estimate.of(transport),
        duality_lhs=Estimate.of(lhs),
        duality_rhs=Estimate.of(rhs),
        duality_gap=Estimate.of(lhs - rhs),
        terminal_mismatch=mismatch,
        phi_inverse_residual=propagator.inverse_residual())
    LOGGER.info(
        "Identity checks (%s Gamma_2): first %s, second %s",
        gamma2, report.transport_passed, report.duality_passed)
    return report
