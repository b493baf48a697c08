"""Exact growth-rate recursion, the highly unstable closed form, and the lower bound.

With B_k = [[1, x_k*phi_k], [1/x_k, 1]], the growth rate of the product is

    gamma = <log F_k>,   F_k = 1 + (x_k**2 phi_k + b a x_prev) / (x_k (b + a x_prev))

where a = alpha_{k-1} follows

    alpha_k = (x_k phi_k + x_{k-1} alpha_{k-1}) / (x_k + x_{k-1} alpha_{k-1})

from alpha_1 = 1. The limit does not depend on b; production paths use b = 1.
Averages run over the terms actually summed, k = 2..n.
"""

from __future__ import annotations

import logging
from collections.abc import Sequence
from dataclasses import dataclass

import numpy as np

from .errors import DomainError, SingularStepError
from .symplectic import DEFAULT_BATCHES, GrowthEstimate, term_estimate

logger = logging.getLogger(__name__)


@dataclass(frozen=True)
class AlphaState:
    """State of the alpha recursion after one cycle.

    Attributes:
        alpha: Current alpha_k
        x_prev: x_k, used as x_{k-1} by the next step
        phi_prev: phi_k
    """

    alpha: float
    x_prev: float
    phi_prev: float

    @classmethod
    def initial(cls, x1: float, phi1: float) -> AlphaState:
        """State after the first cycle; alpha_1 = 1 for a single factor."""
        if not x1 > 0:
            raise DomainError(f"x must be positive, got {x1}")
        return cls(1.0, float(x1), float(phi1))

    @property
    def beta(self) -> float:
        """alpha_k x_k; divide by x_{k+1} for beta_{k+1}."""
        return self.alpha * self.x_prev


def _alpha_next(alpha: float, x_prev: float, x: float, phi: float, index: int | None) -> float:
    denom = x + x_prev * alpha
    if denom == 0:
        raise SingularStepError("Vanishing denominator in alpha recursion", index)
    return (x * phi + x_prev * alpha) / denom


def alpha_step(state: AlphaState, x: float, phi: float, index: int | None = None) -> AlphaState:
    """Advance the alpha recursion by one cycle.

    Raises:
        DomainError: If x is not positive
        SingularStepError: If x + x_prev * alpha vanishes (elliptic phi only)
    """
    if not x > 0:
        raise DomainError(f"x must be positive, got {x}")
    alpha = _alpha_next(state.alpha, state.x_prev, x, phi, index)
    return AlphaState(alpha, float(x), float(phi))


def _validated(x: np.ndarray, phi: np.ndarray | None = None, n: int | None = None):
    x = np.asarray(x, dtype=float)
    if phi is not None:
        phi = np.broadcast_to(np.asarray(phi, dtype=float), x.shape)
    if n is not None:
        if n > len(x):
            raise ValueError(f"Stream has {len(x)} cycles, {n} requested")
        x = x[:n]
        phi = phi[:n] if phi is not None else None
    if len(x) < 2:
        raise ValueError(f"At least 2 cycles are required, got {len(x)}")
    if not np.all(np.isfinite(x)) or (phi is not None and not np.all(np.isfinite(phi))):
        raise DomainError("Non-finite value in input stream")
    if np.any(x <= 0):
        idx = int(np.flatnonzero(x <= 0)[0])
        raise DomainError(f"x must be positive, got {x[idx]} at cycle {idx}")
    return x, phi


def alpha_trajectory(x: Sequence[float], phi: Sequence[float]) -> np.ndarray:
    """All alpha_k for k = 1..n, starting from alpha_1 = 1.

    Raises:
        DomainError: If any x is not positive
        SingularStepError: With the cycle index of a vanishing denominator
    """
    x = np.asarray(x, dtype=float)
    phi = np.broadcast_to(np.asarray(phi, dtype=float), x.shape)
    if len(x) == 0:
        return np.empty(0)
    if np.any(x <= 0):
        raise DomainError("x must be positive")

    out = np.empty(len(x))
    out[0] = 1.0
    a = 1.0
    # the recursion is sequential; plain floats are faster than numpy scalars here
    xs, ps = x.tolist(), phi.tolist()
    for k in range(1, len(xs)):
        a = _alpha_next(a, xs[k - 1], xs[k], ps[k], k)
        out[k] = a
    return out


def theorem1_terms(x: np.ndarray, phi: np.ndarray, b: float = 1.0) -> np.ndarray:
    """Per-cycle log|F_k| for k = 2..n."""
    x, phi = _validated(x, phi)
    if not b > 0:
        raise ValueError(f"b must be positive, got {b}")
    alpha = alpha_trajectory(x, phi)
    ax = alpha[:-1] * x[:-1]
    xk, pk = x[1:], phi[1:]
    denom = xk * (b + ax)
    if np.any(denom == 0):
        idx = int(np.flatnonzero(denom == 0)[0]) + 1
        raise SingularStepError("Vanishing denominator in growth factor", idx)
    factor = 1.0 + (xk * xk * pk + b * ax) / denom
    if np.any(factor == 0):
        idx = int(np.flatnonzero(factor == 0)[0]) + 1
        raise DomainError(f"Growth factor vanishes at cycle {idx}")
    return np.log(np.abs(factor))


def gamma_theorem1(
    x: Sequence[float],
    phi: Sequence[float] | float,
    n: int | None = None,
    *,
    b: float = 1.0,
    seed: int = 0,
    batches: int = DEFAULT_BATCHES,
) -> GrowthEstimate:
    """Growth rate from the exact alpha recursion.

    Args:
        x: Stream of x_k > 0
        phi: Stream of phi_k (or one constant)
        n: Number of cycles to use (default: all)
        b: Free parameter of the iteration factor; the limit is independent of it
        seed: Seed provenance recorded on the estimate
        batches: Batches for the standard error

    Raises:
        DomainError: If any x is not positive
        SingularStepError: If the recursion hits a vanishing denominator
    """
    x, phi = _validated(x, phi, n)
    terms = theorem1_terms(x, phi, b)
    return term_estimate(terms, seed=seed, batches=batches, n_cycles=len(x))


def highly_unstable_terms(x: np.ndarray) -> np.ndarray:
    """Per-cycle log(1 + x_{k-1}/x_k) for k = 2..n."""
    x, _ = _validated(x)
    return np.log1p(x[:-1] / x[1:])


def gamma_highly_unstable(
    x: Sequence[float],
    n: int | None = None,
    *,
    seed: int = 0,
    batches: int = DEFAULT_BATCHES,
) -> GrowthEstimate:
    """Growth rate gamma_0 of the phi = 1 chain."""
    x, _ = _validated(x, None, n)
    return term_estimate(highly_unstable_terms(x), seed=seed, batches=batches, n_cycles=len(x))


def telescoping_offset(x: Sequence[float]) -> float:
    """log[(1 + x_n)/(1 + x_1)], the exact gap between the phi = 1 sums.

    With phi = 1 and b = 1 each exact-recursion factor is the highly unstable factor
    times (1 + x_k)/(1 + x_{k-1}), so the two sums differ by this amount.
    """
    x = np.asarray(x, dtype=float)
    return float(np.log1p(x[-1]) - np.log1p(x[0]))


def gamma_lower_bound(gamma0: float, phi: Sequence[float] | float, n: int | None = None) -> float:
    """Lower bound gamma_0 + <log phi>/2 for 0 < phi <= 1.

    Raises:
        DomainError: If any phi <= 0
    """
    phi = np.atleast_1d(np.asarray(phi, dtype=float))
    if n is not None:
        phi = phi[:n]
    if len(phi) == 0:
        raise ValueError("Empty phi stream")
    if np.any(phi <= 0):
        raise DomainError(f"phi must be positive for the lower bound, min is {phi.min()}")
    if np.any(phi > 1):
        logger.warning(f"{int(np.sum(phi > 1))} phi values exceed 1; the bound assumes phi <= 1")
    return float(gamma0 + 0.5 * np.mean(np.log(phi)))
