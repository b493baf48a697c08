"""Cycle matrices, regime classification, and overflow-safe products.

A Hill cycle maps the coefficients of the principal solutions through

    M = [[h, (h**2 - 1)/g], [g, h]] = h * B,    B = [[1, x*phi], [1/x, 1]]

with x = h/g and phi = 1 - 1/h**2. Products of many such matrices grow like
exp(gamma * n); the running product is therefore kept as a unit-norm matrix
plus an accumulated log scale, and the growth rate is read off the log scale.

New factors multiply from the left: P_n = M_n @ P_{n-1}.
"""

from __future__ import annotations

import logging
import math
from collections.abc import Callable, Iterable, Sequence
from dataclasses import dataclass, field
from enum import Enum
from typing import Union

import numpy as np

from .errors import (
    DegenerateCycleError,
    DomainError,
    NumericOverflowError,
    SingularFactorizationError,
)

logger = logging.getLogger(__name__)

PARABOLIC_TOL = 1e-12
DET_RTOL = 1e-12
FACTORIZATION_TOL = 1e-6
DEFAULT_BATCHES = 32
CHUNK_SIZE = 1 << 16

ChainBlock = Callable[[int, int], np.ndarray]
MatrixChain = Union[np.ndarray, Sequence["CycleMatrix"], ChainBlock]


class Regime(Enum):
    """Eigenvalue class of a single cycle map."""

    HYPERBOLIC = "hyperbolic"
    ELLIPTIC = "elliptic"
    PARABOLIC = "parabolic"


@dataclass(frozen=True)
class CycleMatrix:
    """A 2x2 cycle map [[m11, m12], [m21, m22]]."""

    m11: float
    m12: float
    m21: float
    m22: float

    @classmethod
    def from_array(cls, a: np.ndarray) -> CycleMatrix:
        a = np.asarray(a, dtype=float)
        return cls(float(a[0, 0]), float(a[0, 1]), float(a[1, 0]), float(a[1, 1]))

    @classmethod
    def identity(cls) -> CycleMatrix:
        return cls(1.0, 0.0, 0.0, 1.0)

    def as_array(self) -> np.ndarray:
        return np.array([[self.m11, self.m12], [self.m21, self.m22]])

    @property
    def det(self) -> float:
        return self.m11 * self.m22 - self.m12 * self.m21

    @property
    def trace(self) -> float:
        return self.m11 + self.m22

    def is_unimodular(self, rtol: float = DET_RTOL) -> bool:
        """Whether the determinant equals 1 within a relative tolerance."""
        scale = max(1.0, abs(self.m11 * self.m22), abs(self.m12 * self.m21))
        return abs(self.det - 1.0) <= rtol * scale

    def __matmul__(self, other: CycleMatrix) -> CycleMatrix:
        return CycleMatrix.from_array(self.as_array() @ other.as_array())


@dataclass(frozen=True)
class CycleParams:
    """Per-cycle random variables.

    Attributes:
        h: y1(pi), the diagonal entry of the cycle map
        g: y1'(pi), the lower-left entry
        regime: Eigenvalue class of the cycle
    """

    h: float
    g: float
    regime: Regime

    @classmethod
    def from_hg(cls, h: float, g: float, tol: float = PARABOLIC_TOL) -> CycleParams:
        return cls(float(h), float(g), classify(h, tol))

    @property
    def x(self) -> float:
        """h/g; infinite when g vanishes (parabolic cycles)."""
        if self.g == 0:
            return math.copysign(math.inf, self.h)
        return self.h / self.g

    @property
    def phi(self) -> float:
        """1 - 1/h**2; positive for hyperbolic cycles, negative for elliptic ones."""
        if self.h == 0:
            return -math.inf
        return 1.0 - 1.0 / (self.h * self.h)

    def matrix(self) -> CycleMatrix:
        return from_principal(self.h, self.g)


@dataclass(frozen=True)
class GrowthEstimate:
    """A growth rate with its statistical error.

    Attributes:
        gamma: Growth rate in nats per cycle
        n_cycles: Number of cycles the estimate was computed from
        std_error: Standard error from batch means
        seed: Seed of the random streams that produced the chain
        batch_rates: Per-batch growth rates behind std_error
    """

    gamma: float
    n_cycles: int
    std_error: float
    seed: int = 0
    batch_rates: tuple[float, ...] = field(default=(), repr=False, compare=False)

    def __post_init__(self) -> None:
        if self.n_cycles < 1:
            raise ValueError(f"n_cycles must be >= 1, got {self.n_cycles}")
        if not self.std_error >= 0:
            raise ValueError(f"std_error must be >= 0, got {self.std_error}")

    def joint_error(self, other: GrowthEstimate) -> float:
        """Standard error of the difference of two independent estimates."""
        return math.hypot(self.std_error, other.std_error)

    def paired_error(self, other: GrowthEstimate) -> float:
        """Standard error of the difference of two estimates on common random numbers.

        Falls back to joint_error when the batches do not line up.
        """
        if len(self.batch_rates) < 2 or len(self.batch_rates) != len(other.batch_rates):
            return self.joint_error(other)
        diff = np.subtract(self.batch_rates, other.batch_rates)
        return batch_mean_error(diff)

    def agrees_with(self, other: GrowthEstimate, k: float = 3.0, atol: float = 0.0) -> bool:
        """Whether two estimates agree within k joint standard errors (or atol)."""
        return abs(self.gamma - other.gamma) <= max(k * self.joint_error(other), atol)


@dataclass(frozen=True)
class ProductState:
    """Log-renormalized running product.

    The product equals ``scaled * exp(log_scale)``. After the first factor
    ``scaled`` has unit norm; the empty product is the raw identity.
    """

    scaled: np.ndarray = field(default_factory=lambda: np.eye(2))
    log_scale: float = 0.0
    count: int = 0

    @classmethod
    def identity(cls) -> ProductState:
        return cls()

    def recompose(self) -> np.ndarray:
        """The full product; overflows for large log scales."""
        return self.scaled * math.exp(self.log_scale)

    @property
    def log_det(self) -> float:
        """log|det| of the full product."""
        return math.log(abs(np.linalg.det(self.scaled))) + 2.0 * self.log_scale


def _frobenius(a: np.ndarray) -> np.ndarray:
    return np.sqrt(np.sum(a * a, axis=(-2, -1)))


def _max_entry(a: np.ndarray) -> np.ndarray:
    return np.max(np.abs(a), axis=(-2, -1))


_NORMS = {"fro": _frobenius, "max": _max_entry}


def _norm_function(norm: str) -> Callable[[np.ndarray], np.ndarray]:
    try:
        return _NORMS[norm]
    except KeyError:
        raise ValueError(f"Unknown norm {norm!r} (use 'fro' or 'max')") from None


def from_principal(h: float, g: float) -> CycleMatrix:
    """Build the cycle map from the principal-solution endpoints.

    Raises:
        DegenerateCycleError: If g is zero. This only happens with
            |h| = 1, where the map is +/- identity plus a shear in the other
            corner; build it directly instead.
    """
    if g == 0:
        raise DegenerateCycleError(
            f"g = 0 (h = {h}): the cycle map is a parabolic shear, build it directly"
        )
    return CycleMatrix(h, (h * h - 1.0) / g, g, h)


def classify(h: float, tol: float = PARABOLIC_TOL) -> Regime:
    """Classify a cycle by |h| using the characteristic polynomial l**2 - 2hl + 1."""
    if tol <= 0:
        raise ValueError(f"tol must be positive, got {tol}")
    a = abs(h)
    if a > 1.0 + tol:
        return Regime.HYPERBOLIC
    if a < 1.0 - tol:
        return Regime.ELLIPTIC
    return Regime.PARABOLIC


def decompose(m: CycleMatrix, tol: float = FACTORIZATION_TOL) -> tuple[float, CycleMatrix]:
    """Split a symmetric cycle map as M = h * B.

    Returns:
        Tuple of (h, B) with B = [[1, x*phi], [1/x, 1]]

    Raises:
        ValueError: If the diagonal entries differ
        SingularFactorizationError: If |h| <= tol; use the elliptic
            (theta, L) representation instead
    """
    h = m.m11
    if not math.isclose(m.m11, m.m22, rel_tol=1e-12, abs_tol=1e-12):
        raise ValueError(f"Cycle map is not symmetric: m11={m.m11}, m22={m.m22}")
    if abs(h) <= tol:
        raise SingularFactorizationError(
            f"|h| = {abs(h):.3g} is too small to factor; use the elliptic representation"
        )
    return h, CycleMatrix(1.0, m.m12 / h, m.m21 / h, m.m22 / h)


def principal_stack(h: np.ndarray, g: np.ndarray) -> np.ndarray:
    """Stack of cycle maps (n, 2, 2) from arrays of h and g."""
    h = np.asarray(h, dtype=float)
    g = np.asarray(g, dtype=float)
    if np.any(g == 0):
        idx = int(np.flatnonzero(g == 0)[0])
        raise DegenerateCycleError(f"g = 0 at cycle {idx}")
    out = np.empty(h.shape + (2, 2))
    out[..., 0, 0] = h
    out[..., 0, 1] = (h * h - 1.0) / g
    out[..., 1, 0] = g
    out[..., 1, 1] = h
    return out


def b_stack(x: np.ndarray, phi: np.ndarray) -> np.ndarray:
    """Stack of reduced matrices B = [[1, x*phi], [1/x, 1]]."""
    x = np.asarray(x, dtype=float)
    phi = np.asarray(phi, dtype=float)
    out = np.empty(np.broadcast(x, phi).shape + (2, 2))
    out[..., 0, 0] = 1.0
    out[..., 0, 1] = x * phi
    out[..., 1, 0] = 1.0 / x
    out[..., 1, 1] = 1.0
    return out


def multiply_accumulate(state: ProductState, m: CycleMatrix, norm: str = "fro") -> ProductState:
    """Left-multiply the running product by one factor and renormalize.

    Raises:
        NumericOverflowError: If the new product has a non-finite or zero norm
    """
    product = m.as_array() @ state.scaled
    s = float(_norm_function(norm)(product))
    if not math.isfinite(s) or s == 0.0:
        raise NumericOverflowError(f"Product norm {s} after {state.count + 1} factors")
    return ProductState(product / s, state.log_scale + math.log(s), state.count + 1)


def _as_block_source(chain: MatrixChain) -> tuple[ChainBlock, int | None]:
    if callable(chain):
        return chain, None
    if isinstance(chain, np.ndarray):
        arr = chain
    else:
        arr = np.array([m.as_array() for m in chain]).reshape(-1, 2, 2)
    arr = np.asarray(arr, dtype=float)
    if arr.ndim != 3 or arr.shape[1:] != (2, 2):
        raise ValueError(f"Expected an (n, 2, 2) stack, got shape {arr.shape}")
    return (lambda start, stop: arr[start:stop]), len(arr)


def reduce_block(mats: np.ndarray, norm: str = "fro") -> tuple[np.ndarray, float]:
    """Ordered product of a block of matrices by pairwise tree reduction.

    Returns:
        Tuple of (unit-norm product, log of its scale) for
        mats[-1] @ ... @ mats[0]

    Raises:
        NumericOverflowError: On non-finite or vanishing norms
    """
    norm_fn = _norm_function(norm)
    mats = np.asarray(mats, dtype=float)
    norms = norm_fn(mats)
    if not np.all(np.isfinite(norms)) or np.any(norms == 0):
        raise NumericOverflowError("Non-finite or zero-norm factor in chain")
    mats = mats / norms[:, None, None]
    logs = np.log(norms)

    while len(mats) > 1:
        tail = None
        if len(mats) % 2:
            tail = (mats[-1:], logs[-1:])
            mats, logs = mats[:-1], logs[:-1]
        prod = mats[1::2] @ mats[0::2]
        pn = norm_fn(prod)
        if not np.all(np.isfinite(pn)) or np.any(pn == 0):
            raise NumericOverflowError("Partial product lost all magnitude")
        mats = prod / pn[:, None, None]
        logs = logs[0::2] + logs[1::2] + np.log(pn)
        if tail is not None:
            mats = np.concatenate([mats, tail[0]])
            logs = np.concatenate([logs, tail[1]])

    return mats[0], float(math.fsum(logs))


def fold_block(state: ProductState, mats: np.ndarray, norm: str = "fro") -> ProductState:
    """Left-multiply the running product by a whole block of factors."""
    if len(mats) == 0:
        return state
    block, block_log = reduce_block(mats, norm)
    product = block @ state.scaled
    s = float(_norm_function(norm)(product))
    if not math.isfinite(s) or s == 0.0:
        raise NumericOverflowError(f"Product norm {s} after {state.count + len(mats)} factors")
    return ProductState(
        product / s,
        state.log_scale + block_log + math.log(s),
        state.count + len(mats),
    )


def batch_bounds(n: int, batches: int = DEFAULT_BATCHES) -> list[tuple[int, int]]:
    """Split range(n) into up to ``batches`` contiguous near-equal ranges."""
    k = max(1, min(batches, n))
    edges = np.linspace(0, n, k + 1).round().astype(int)
    return [(int(a), int(b)) for a, b in zip(edges[:-1], edges[1:]) if b > a]


def batch_mean_error(batch_rates: Sequence[float]) -> float:
    """Standard error of the mean from per-batch rates."""
    rates = np.asarray(batch_rates, dtype=float)
    if len(rates) < 2:
        return 0.0
    return float(np.std(rates, ddof=1) / math.sqrt(len(rates)))


def term_estimate(
    terms: np.ndarray, seed: int = 0, batches: int = DEFAULT_BATCHES, n_cycles: int | None = None
) -> GrowthEstimate:
    """GrowthEstimate for a rate defined as the mean of per-cycle log terms."""
    terms = np.asarray(terms, dtype=float)
    if len(terms) == 0:
        raise ValueError("No terms to average")
    rates = [float(np.mean(terms[a:b])) for a, b in batch_bounds(len(terms), batches)]
    return GrowthEstimate(
        gamma=float(np.mean(terms)),
        n_cycles=n_cycles if n_cycles is not None else len(terms),
        std_error=batch_mean_error(rates),
        seed=seed,
        batch_rates=tuple(rates),
    )


def product_matrix(
    chain: MatrixChain, n: int | None = None, norm: str = "fro", chunk: int = CHUNK_SIZE
) -> ProductState:
    """Renormalized product of the first n factors of a chain."""
    source, length = _as_block_source(chain)
    n = _resolve_length(n, length)
    state = ProductState.identity()
    for start in range(0, n, chunk):
        state = fold_block(state, source(start, min(start + chunk, n)), norm)
    return state


def _resolve_length(n: int | None, length: int | None) -> int:
    if n is None:
        if length is None:
            raise ValueError("n is required for generated chains")
        n = length
    if n < 1:
        raise ValueError(f"n must be >= 1, got {n}")
    if length is not None and n > length:
        raise ValueError(f"Chain has {length} factors, {n} requested")
    return n


def lyapunov_direct(
    chain: MatrixChain,
    n: int | None = None,
    *,
    norm: str = "fro",
    batches: int = DEFAULT_BATCHES,
    seed: int = 0,
    chunk: int = CHUNK_SIZE,
) -> GrowthEstimate:
    """Estimate the top Lyapunov exponent by direct matrix multiplication.

    The chain is multiplied in contiguous batches; each batch's growth rate is
    the increase of the running log scale divided by its length. gamma is the
    total log scale over n, std_error comes from the batch means.

    Args:
        chain: (n, 2, 2) array, sequence of CycleMatrix, or a callable
            ``block(start, stop)`` returning factors start..stop-1
        n: Number of factors to use (required for callables)
        norm: 'fro' (Frobenius) or 'max' (largest absolute entry)
        batches: Number of batches for the error estimate
        seed: Seed provenance recorded on the estimate
        chunk: Maximum factors materialized at once

    Raises:
        NumericOverflowError: If the product loses all magnitude or overflows
    """
    source, length = _as_block_source(chain)
    n = _resolve_length(n, length)

    state = ProductState.identity()
    rates = []
    for a, b in batch_bounds(n, batches):
        before = state.log_scale
        for start in range(a, b, chunk):
            state = fold_block(state, source(start, min(start + chunk, b)), norm)
        rates.append((state.log_scale - before) / (b - a))
        logger.debug(f"Folded cycles [{a}, {b}): log scale {state.log_scale:.6g}")

    return GrowthEstimate(
        gamma=state.log_scale / n,
        n_cycles=n,
        std_error=batch_mean_error(rates),
        seed=seed,
        batch_rates=tuple(rates),
    )


def gamma_h_component(h: Iterable[float], n: int | None = None) -> float:
    """Mean of log|h_k|, the part of gamma_M carried by the scalar factor.

    Raises:
        DomainError: If any h is zero
    """
    h = np.asarray(list(h) if not isinstance(h, np.ndarray) else h, dtype=float)
    if n is not None:
        if n < 1 or n > len(h):
            raise ValueError(f"n must be in [1, {len(h)}], got {n}")
        h = h[:n]
    if len(h) == 0:
        raise ValueError("Empty h stream")
    if np.any(h == 0):
        raise DomainError(f"h = 0 at cycle {int(np.flatnonzero(h == 0)[0])}: log|h| undefined")
    return float(np.mean(np.log(np.abs(h))))


def top_eigenvalue_log(state: ProductState) -> float:
    """log of the largest eigenvalue magnitude of the full product."""
    eig = np.linalg.eigvals(state.scaled)
    return float(math.log(np.max(np.abs(eig))) + state.log_scale)
