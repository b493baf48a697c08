"""Elliptical rotations for classically stable cycles.

A stable cycle (|h| <= 1) is the elliptical rotation

    E(theta; L) = [[cos theta, -L sin theta], [sin(theta)/L, cos theta]]

Rotations with equal L form a group, so a fixed-L chain never grows. Growth
comes from L fluctuating between cycles; with L_k = L0 (1 + eta_k) and
symmetric eta the rate is

    gamma = <log(cos^2 theta + sin^2 theta * R)> / 2,   R = <1/(1 + eta)>
"""

from __future__ import annotations

import logging
import math
from collections.abc import Sequence
from dataclasses import dataclass

import numpy as np
from scipy.integrate import quad

from .ensembles import DistributionKind, DistributionSpec
from .errors import (
    DegenerateCycleError,
    DomainError,
    SingularFactorizationError,
    WrongRegimeError,
)
from .symplectic import PARABOLIC_TOL, CycleMatrix, GrowthEstimate, term_estimate

logger = logging.getLogger(__name__)

COS_FLOOR = 1e-6
SHEAR_G_TOL = 1e-8
QUARTER_TURN_ULPS = 4


@dataclass(frozen=True)
class EllipticParams:
    """Angle and axis ratio of an elliptical rotation."""

    theta: float
    L: float

    def __post_init__(self) -> None:
        if not self.L > 0:
            raise DomainError(f"L must be positive, got {self.L}")

    def matrix(self) -> CycleMatrix:
        return elliptic_matrix(self)


@dataclass(frozen=True)
class FluctuationSpec:
    """Symmetric fluctuations L_k = L0 (1 + eta_k).

    Attributes:
        L0: Mean axis ratio
        eta: Distribution of eta; symmetric about 0 with support above -1
    """

    L0: float
    eta: DistributionSpec

    def __post_init__(self) -> None:
        if not self.L0 > 0:
            raise DomainError(f"L0 must be positive, got {self.L0}")
        if not self.eta.is_symmetric:
            raise DomainError(f"eta distribution {self.eta} is not symmetric about 0")
        if self.eta.support[0] <= -1.0:
            raise DomainError(f"eta support {self.eta.support} reaches -1; L would not stay positive")

    def L_values(self, eta: np.ndarray) -> np.ndarray:
        return self.L0 * (1.0 + np.asarray(eta, dtype=float))


def _cos_sin(theta: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """cos and sin of theta; cos is exactly 0 and sin exactly +/-1 at odd multiples of pi/2."""
    c, s = np.cos(theta), np.sin(theta)
    tol = QUARTER_TURN_ULPS * np.spacing(np.maximum(np.abs(theta), math.pi))
    quarter = np.abs(np.remainder(theta, math.pi) - 0.5 * math.pi) <= tol
    c = np.where(quarter, 0.0, c)
    s = np.where(quarter, np.sign(s), s)
    return c, s


def elliptic_matrix(p: EllipticParams) -> CycleMatrix:
    c, s = (float(v) for v in _cos_sin(np.float64(p.theta)))
    return CycleMatrix(c, -p.L * s, s / p.L, c)


def elliptic_stack(theta: np.ndarray, L: np.ndarray) -> np.ndarray:
    """Stack of elliptical rotations (n, 2, 2)."""
    theta, L = np.broadcast_arrays(np.asarray(theta, dtype=float), np.asarray(L, dtype=float))
    if np.any(L <= 0):
        raise DomainError("L must be positive")
    c, s = _cos_sin(theta)
    out = np.empty(theta.shape + (2, 2))
    out[..., 0, 0] = c
    out[..., 0, 1] = -L * s
    out[..., 1, 0] = s / L
    out[..., 1, 1] = c
    return out


def compose_same_L(p1: EllipticParams, p2: EllipticParams) -> EllipticParams:
    """Group product: E(t1; L) E(t2; L) = E(t1 + t2; L).

    Raises:
        ValueError: If the two rotations have different L
    """
    if not math.isclose(p1.L, p2.L, rel_tol=1e-12):
        raise ValueError(f"Cannot compose rotations with different L ({p1.L} vs {p2.L})")
    return EllipticParams(p1.theta + p2.theta, p1.L)


def from_stable_cycle(h: float, g: float, tol: float = PARABOLIC_TOL) -> EllipticParams:
    """Convert a stable cycle (h, g) to (theta, L).

    theta carries the sign of g so that L = sin(theta)/g stays positive.
    A cycle with g ~ 0 and |h| ~ 1 is +/- identity and maps to theta in
    {0, pi} with L = 1.

    Raises:
        WrongRegimeError: If |h| > 1, or |h| = 1 with g away from zero
            (a parabolic shear, not a rotation)
        DegenerateCycleError: If g = 0 with |h| < 1
    """
    if abs(h) > 1.0 + tol:
        raise WrongRegimeError(f"|h| = {abs(h)} > 1: hyperbolic cycle is not an elliptical rotation")
    if abs(g) < SHEAR_G_TOL:
        if abs(abs(h) - 1.0) < 1e-6:
            return EllipticParams(0.0 if h > 0 else math.pi, 1.0)
        raise DegenerateCycleError(f"g = {g} with |h| = {abs(h)} < 1 is not a valid cycle")
    if abs(h) >= 1.0 - tol:
        raise WrongRegimeError(f"|h| = 1 with g = {g}: parabolic shear is not an elliptical rotation")

    theta = math.copysign(math.acos(h), g)
    return EllipticParams(theta, math.sqrt(1.0 - h * h) / abs(g))


def to_xphi(p: EllipticParams) -> tuple[float, float]:
    """(x, phi) = (L/tan theta, -tan^2 theta) of the factorization M = cos(theta) B.

    Raises:
        SingularFactorizationError: If |cos theta| <= 1e-6
    """
    c = math.cos(p.theta)
    if abs(c) <= COS_FLOOR:
        raise SingularFactorizationError(f"|cos theta| = {abs(c):.3g}: (x, phi) is singular")
    t = math.tan(p.theta)
    if t == 0:
        raise SingularFactorizationError("theta = 0: x = L/tan(theta) is infinite")
    return p.L / t, -t * t


def reciprocal_mean(eta: DistributionSpec) -> float:
    """R = <1/(1 + eta)>.

    Closed form for const, uniform, affine and twopoint; loguniform is
    integrated numerically over its exponent.

    Raises:
        DomainError: If the support reaches eta = -1
    """
    lo, hi = eta.support
    if lo <= -1.0:
        raise DomainError(f"<1/(1+eta)> diverges: support {eta.support} reaches -1")

    kind = eta.kind
    if kind == DistributionKind.CONSTANT:
        return 1.0 / (1.0 + lo)
    if kind == DistributionKind.TWO_POINT:
        a = eta.params[0]
        return 1.0 / (1.0 - a * a)
    if kind in (DistributionKind.UNIFORM, DistributionKind.AFFINE):
        if hi == lo:
            return 1.0 / (1.0 + lo)
        return math.log((1.0 + hi) / (1.0 + lo)) / (hi - lo)

    e0, e1 = eta.params
    if e1 == e0:
        return 1.0 / (1.0 + lo)
    logger.debug(f"No closed form for <1/(1+eta)> under {eta}; using quadrature")
    value, _ = quad(lambda u: 1.0 / (1.0 + 10.0**u), e0, e1)
    return value / (e1 - e0)


def theorem4_terms(theta: np.ndarray, R: float) -> np.ndarray:
    c2 = np.cos(np.asarray(theta, dtype=float)) ** 2
    return 0.5 * np.log(c2 + (1.0 - c2) * R)


def gamma_theorem4(
    theta: Sequence[float] | float,
    fluct: FluctuationSpec,
    n: int | None = None,
    *,
    seed: int = 0,
) -> GrowthEstimate:
    """Growth rate of an elliptical chain with fluctuating L.

    Args:
        theta: Stream of angles, or one constant angle
        fluct: Fluctuation model for L
        n: Number of cycles (a constant angle is repeated n times)
        seed: Seed provenance recorded on the estimate

    Raises:
        DomainError: If R is not finite, or the result is negative
    """
    R = reciprocal_mean(fluct.eta)
    if not math.isfinite(R):
        raise DomainError(f"<1/(1+eta)> is not finite for {fluct.eta}")

    theta = np.atleast_1d(np.asarray(theta, dtype=float))
    if len(theta) == 1 and n is not None:
        theta = np.broadcast_to(theta, (n,))
    elif n is not None:
        theta = theta[:n]

    est = term_estimate(theorem4_terms(theta, R), seed=seed)
    # R >= 1 by Jensen for symmetric eta, so each term is >= 0
    if est.gamma < -1e-15:
        raise DomainError(f"Negative growth rate {est.gamma}; eta is not symmetric enough")
    return est


def gamma_small_eta(mean_sin2_theta: float, mean_eta2: float) -> float:
    """Small-fluctuation limit <sin^2 theta> <eta^2> / 2.

    Overestimates at theta = pi/2, where the true rate vanishes.
    """
    if mean_sin2_theta < 0 or mean_eta2 < 0:
        raise DomainError("Mean squares must be non-negative")
    return 0.5 * mean_sin2_theta * mean_eta2


def mean_log_abs_cos(theta: Sequence[float]) -> float:
    """<log|cos theta|>, the scalar part of gamma_M = gamma_B + <log|cos theta|>."""
    c = np.abs(np.cos(np.asarray(theta, dtype=float)))
    if np.any(c == 0):
        raise DomainError("cos(theta) = 0: log|cos theta| undefined")
    return float(np.mean(np.log(c)))
