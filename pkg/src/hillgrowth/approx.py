"""Perturbative growth-rate formulas and the two heuristic approximations.

gamma_small_phi applies when x*phi is small, delta_gamma_near_unity when phi is
close to 1. The approximations replace the alpha recursion with a closed form
and use fresh independent samples for every term: three x values and two phi
values per term.
"""

from __future__ import annotations

import logging
import math
from collections.abc import Sequence
from dataclasses import dataclass

import numpy as np

from .ensembles import DistributionSpec, moments
from .errors import DomainError

logger = logging.getLogger(__name__)


@dataclass(frozen=True)
class MomentSummary:
    """Means entering the small-phi growth rate.

    Attributes:
        mean_inv_x: <1/x>
        mean_x_phi: <x phi>
        n: Number of samples behind the means (0 for analytic moments)
    """

    mean_inv_x: float
    mean_x_phi: float
    n: int = 0

    def __post_init__(self) -> None:
        if not self.mean_inv_x > 0:
            raise DomainError(f"<1/x> must be positive, got {self.mean_inv_x}")

    @classmethod
    def from_samples(cls, x: Sequence[float], phi: Sequence[float]) -> MomentSummary:
        x = np.asarray(x, dtype=float)
        phi = np.broadcast_to(np.asarray(phi, dtype=float), x.shape)
        if len(x) == 0:
            raise ValueError("No samples")
        return cls(float(np.mean(1.0 / x)), float(np.mean(x * phi)), len(x))

    @classmethod
    def from_specs(cls, x_spec: DistributionSpec, phi_spec: DistributionSpec) -> MomentSummary:
        """Analytic moments for independent x and phi streams."""
        inv_x, mean_x = moments(x_spec, [-1, 1])
        (mean_phi,) = moments(phi_spec, [1])
        return cls(inv_x, mean_x * mean_phi, 0)


def gamma_small_phi(m: MomentSummary, *, simplified: bool = False) -> float:
    """Growth rate log(1 + sqrt(<1/x><x phi>)) for small x*phi.

    Args:
        m: Moment summary of the stream
        simplified: Return the leading-order sqrt(<1/x><x phi>) instead

    Raises:
        DomainError: If <x phi> is negative (not the classically unstable regime)
    """
    if m.mean_x_phi < 0:
        raise DomainError(f"<x phi> must be non-negative, got {m.mean_x_phi}")
    root = math.sqrt(m.mean_inv_x * m.mean_x_phi)
    return root if simplified else math.log1p(root)


def near_unity_terms(x: Sequence[float], phi: Sequence[float]) -> np.ndarray:
    """Interior terms (1 - phi_k) x_k**2 / ((x_{k+1} + x_k)(x_k + x_{k-1}))."""
    x = np.asarray(x, dtype=float)
    phi = np.broadcast_to(np.asarray(phi, dtype=float), x.shape)
    if len(x) < 3:
        raise ValueError(f"At least 3 cycles are required, got {len(x)}")
    xk = x[1:-1]
    return (1.0 - phi[1:-1]) * xk * xk / ((x[2:] + xk) * (xk + x[:-2]))


def delta_gamma_near_unity(
    x: Sequence[float], phi: Sequence[float] | float, n: int | None = None
) -> float:
    """First-order deficit gamma_0 - gamma for phi near 1.

    The first and last cycles lack a neighbour and are dropped; the mean runs
    over the n - 2 interior terms.
    """
    x = np.asarray(x, dtype=float)
    phi = np.broadcast_to(np.asarray(phi, dtype=float), x.shape)
    if n is not None:
        x, phi = x[:n], phi[:n]
    if np.any(phi > 1):
        logger.warning(f"{int(np.sum(phi > 1))} phi values exceed 1")
    return float(np.mean(near_unity_terms(x, phi)))


def _check_positive(*arrays: np.ndarray) -> None:
    for a in arrays:
        if np.any(a <= 0):
            raise DomainError("x samples must be positive")


def _as_arrays(*values) -> list[np.ndarray]:
    arrays = np.broadcast_arrays(*[np.asarray(v, dtype=float) for v in values])
    return [np.asarray(a) for a in arrays]


def approx1_factors(x1, x2, x3, phi1, phi2) -> np.ndarray:
    """Iteration factors with alpha replaced by its alpha_{k-1} = 1 estimate."""
    x1, x2, x3, phi1, phi2 = _as_arrays(x1, x2, x3, phi1, phi2)
    _check_positive(x1, x2, x3)
    s = x2 + x3
    t = x2 * (x2 * phi2 + x3)
    return 1.0 + (x1 * x1 * phi1 * s + t) / (x1 * (s + t))


def gamma_approx1(x1, x2, x3, phi1, phi2) -> float:
    """Growth rate from the first heuristic approximation.

    All arguments are equal-length streams of independent samples (or scalars).
    """
    return float(np.mean(np.log(np.abs(approx1_factors(x1, x2, x3, phi1, phi2)))))


def approx2_factors(x1, x2, x3, phi1, phi2) -> np.ndarray:
    """Iteration factors with alpha set to its constant-parameter fixed point.

    Raises:
        DomainError: If the fixed-point discriminant is negative
    """
    x1, x2, x3, phi1, phi2 = _as_arrays(x1, x2, x3, phi1, phi2)
    _check_positive(x1, x2, x3)
    d = x3 - x2
    disc = d * d + 4.0 * x2 * x3 * phi2
    if np.any(disc < 0):
        count = int(np.sum(disc < 0))
        raise DomainError(f"Negative discriminant in {count} term(s); phi too negative")
    r = x2 * (d + np.sqrt(disc))
    return 1.0 + (2.0 * x1 * x1 * phi1 * x3 + r) / (x1 * (2.0 * x3 + r))


def gamma_approx2(x1, x2, x3, phi1, phi2) -> float:
    """Growth rate from the second heuristic approximation."""
    return float(np.mean(np.log(np.abs(approx2_factors(x1, x2, x3, phi1, phi2)))))


def alpha_fixed_point(ratio: float, phi: float) -> float:
    """Limit of alpha for constant x_k/x_{k-1} = ratio and constant phi."""
    d = 1.0 - ratio
    disc = d * d + 4.0 * ratio * phi
    if disc < 0:
        raise DomainError(f"Negative discriminant {disc}")
    return 0.5 * (d + math.sqrt(disc))
