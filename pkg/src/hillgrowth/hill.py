"""Principal solutions of one Hill cycle.

Each cycle integrates

    y'' + [af + q * qhat(t)] y = 0,    0 <= t <= pi

for y1 (y=1, y'=0) and y2 (y=0, y'=1). The cycle map is the fundamental
matrix at t = pi; h = y1(pi) and g = y1'(pi). Barrier shapes are symmetric
about pi/2 and normalized to unit area, so y1(pi) = y2'(pi) and det = 1.

The delta barrier is solved in closed form. The square well and raised cosine
are integrated with fixed-step RK4 on the pieces between shape breakpoints,
halving the step until the symmetry and Wronskian checks pass.
"""

from __future__ import annotations

import logging
import math
import re
from collections.abc import Iterator
from dataclasses import dataclass
from enum import Enum

import numpy as np

from .ensembles import DistributionSpec, StreamHandle
from .errors import ConfigError, IntegrationAccuracyError
from .symplectic import PARABOLIC_TOL, CycleParams, Regime, classify

logger = logging.getLogger(__name__)

HALF_PI = 0.5 * math.pi
DEFAULT_STEP = math.pi / 2048
MAX_HALVINGS = 8
MIN_SEGMENT_STEPS = 4
SYMMETRY_TOL = 1e-8
WRONSKIAN_TOL = 1e-10
CHUNK_CYCLES = 4096

# stream labels for cycle parameters under one seed
AF_STREAM = 0
Q_STREAM = 1


class ShapeKind(Enum):
    DELTA = "delta"
    SQUARE = "square"
    COSINE = "cosine"


_SHAPE_PATTERN = re.compile(r"^\s*(delta|cosine|square)\s*(?:\(\s*(?:w\s*=\s*)?([^)]*)\))?\s*$")


@dataclass(frozen=True)
class BarrierShape:
    """Unit-area barrier shape, symmetric about pi/2.

    Attributes:
        kind: delta at pi/2, centred square well, or raised cosine (1 - cos 2t)/pi
        width: Square-well width in (0, pi]; unused otherwise
    """

    kind: ShapeKind
    width: float | None = None

    def __post_init__(self) -> None:
        if self.kind == ShapeKind.SQUARE:
            if self.width is None or not 0 < self.width <= math.pi:
                raise ConfigError(f"Square-well width must be in (0, pi], got {self.width}")
        elif self.width is not None:
            raise ConfigError(f"{self.kind.value} barrier takes no width")

    @classmethod
    def delta(cls) -> BarrierShape:
        return cls(ShapeKind.DELTA)

    @classmethod
    def square(cls, width: float) -> BarrierShape:
        return cls(ShapeKind.SQUARE, float(width))

    @classmethod
    def cosine(cls) -> BarrierShape:
        return cls(ShapeKind.COSINE)

    @classmethod
    def parse(cls, text: str) -> BarrierShape:
        """Parse ``delta``, ``cosine`` or ``square(w=0.5)``.

        Raises:
            ConfigError: If the text is not a valid shape encoding
        """
        match = _SHAPE_PATTERN.match(text)
        if not match:
            raise ConfigError(f"Invalid barrier shape: {text!r}")
        name, arg = match.groups()
        kind = ShapeKind(name)
        if kind != ShapeKind.SQUARE:
            if arg is not None:
                raise ConfigError(f"{name} barrier takes no parameters: {text!r}")
            return cls(kind)
        if not arg:
            raise ConfigError(f"square barrier needs a width, e.g. square(w=0.5): {text!r}")
        try:
            width = float(arg)
        except ValueError:
            raise ConfigError(f"Non-numeric square width in {text!r}") from None
        return cls.square(width)

    def encode(self) -> str:
        if self.kind == ShapeKind.SQUARE:
            return f"square(w={self.width!r})"
        return self.kind.value

    def __str__(self) -> str:
        return self.encode()

    @property
    def breakpoints(self) -> list[float]:
        """Ends of the smooth pieces of qhat on [0, pi]."""
        if self.kind == ShapeKind.SQUARE:
            lo, hi = HALF_PI - 0.5 * self.width, HALF_PI + 0.5 * self.width
            return sorted({0.0, max(lo, 0.0), min(hi, math.pi), math.pi})
        if self.kind == ShapeKind.DELTA:
            return [0.0, HALF_PI, math.pi]
        return [0.0, math.pi]

    def qhat(self, t: np.ndarray) -> np.ndarray:
        """Shape values; the delta barrier has no pointwise values."""
        t = np.asarray(t, dtype=float)
        if self.kind == ShapeKind.COSINE:
            return (1.0 - np.cos(2.0 * t)) / math.pi
        if self.kind == ShapeKind.SQUARE:
            inside = np.abs(t - HALF_PI) <= 0.5 * self.width
            return np.where(inside, 1.0 / self.width, 0.0)
        raise ValueError("The delta barrier has no pointwise shape values")


@dataclass(frozen=True)
class HillCycleParams:
    """Physical parameters of one cycle.

    Attributes:
        af: Unforced frequency squared
        q: Forcing strength, >= 0
        shape: Barrier shape
    """

    af: float
    q: float
    shape: BarrierShape

    def __post_init__(self) -> None:
        if not math.isfinite(self.af) or not math.isfinite(self.q):
            raise ValueError(f"Non-finite cycle parameters af={self.af}, q={self.q}")
        if self.q < 0:
            raise ValueError(f"q must be >= 0, got {self.q}")


def _free_propagator(af: np.ndarray, tau: float | np.ndarray) -> np.ndarray:
    """Fundamental matrix of y'' + af y = 0 over a time tau, per af."""
    af = np.asarray(af, dtype=float)
    tau = np.broadcast_to(np.asarray(tau, dtype=float), af.shape)
    out = np.empty(af.shape + (2, 2))

    pos, neg, zero = af > 0, af < 0, af == 0
    w = np.sqrt(np.abs(af))

    wt = w[pos] * tau[pos]
    out[pos, 0, 0] = np.cos(wt)
    out[pos, 0, 1] = np.sin(wt) / w[pos]
    out[pos, 1, 0] = -w[pos] * np.sin(wt)
    out[pos, 1, 1] = np.cos(wt)

    kt = w[neg] * tau[neg]
    out[neg, 0, 0] = np.cosh(kt)
    out[neg, 0, 1] = np.sinh(kt) / w[neg]
    out[neg, 1, 0] = w[neg] * np.sinh(kt)
    out[neg, 1, 1] = np.cosh(kt)

    out[zero, 0, 0] = 1.0
    out[zero, 0, 1] = tau[zero]
    out[zero, 1, 0] = 0.0
    out[zero, 1, 1] = 1.0
    return out


def delta_barrier_matrices(af: np.ndarray, q: np.ndarray) -> np.ndarray:
    """Cycle maps for a delta barrier: half-period, derivative kick -q y, half-period."""
    af, q = np.broadcast_arrays(np.atleast_1d(np.asarray(af, float)), np.atleast_1d(np.asarray(q, float)))
    half = _free_propagator(af, HALF_PI)
    kick = np.zeros(af.shape + (2, 2))
    kick[..., 0, 0] = 1.0
    kick[..., 1, 0] = -q
    kick[..., 1, 1] = 1.0
    return half @ kick @ half


def square_well_matrices(af: np.ndarray, q: np.ndarray, width: float) -> np.ndarray:
    """Cycle maps for a centred square well of the given width and unit area."""
    af, q = np.broadcast_arrays(np.atleast_1d(np.asarray(af, float)), np.atleast_1d(np.asarray(q, float)))
    outer = _free_propagator(af, HALF_PI - 0.5 * width)
    well = _free_propagator(af + q / width, width)
    return outer @ well @ outer


def _params_from_matrix(m: np.ndarray) -> CycleParams:
    return CycleParams.from_hg(float(m[0, 0]), float(m[1, 0]))


def delta_barrier_closed_form(af: float, q: float) -> CycleParams:
    """Exact (h, g) for a delta barrier of strength q at t = pi/2."""
    return _params_from_matrix(delta_barrier_matrices(af, q)[0])


def square_well_closed_form(af: float, q: float, width: float) -> CycleParams:
    """Exact (h, g) for a square well, piecewise trigonometric."""
    BarrierShape.square(width)
    return _params_from_matrix(square_well_matrices(af, q, width)[0])


def _rhs(Y: np.ndarray, w: np.ndarray) -> np.ndarray:
    out = np.empty_like(Y)
    out[:, 0, :] = Y[:, 1, :]
    out[:, 1, :] = -w[:, None] * Y[:, 0, :]
    return out


def _piece_frequency(shape: BarrierShape, t0: float, t1: float):
    """qhat on one smooth piece; piecewise-constant shapes use the interior value."""
    if shape.kind == ShapeKind.SQUARE:
        value = float(shape.qhat(0.5 * (t0 + t1)))
        return lambda t: value
    return lambda t: float(shape.qhat(t))


def _propagate(af: np.ndarray, q: np.ndarray, shape: BarrierShape, step: float) -> np.ndarray:
    """RK4 fundamental matrices at t = pi for a batch of cycles."""
    Y = np.broadcast_to(np.eye(2), af.shape + (2, 2)).copy()
    bp = shape.breakpoints
    for t0, t1 in zip(bp[:-1], bp[1:]):
        qhat = _piece_frequency(shape, t0, t1)
        m = max(MIN_SEGMENT_STEPS, math.ceil((t1 - t0) / step))
        h = (t1 - t0) / m
        for i in range(m):
            t = t0 + i * h
            w0 = af + q * qhat(t)
            wm = af + q * qhat(t + 0.5 * h)
            w1 = af + q * qhat(t + h)
            k1 = _rhs(Y, w0)
            k2 = _rhs(Y + 0.5 * h * k1, wm)
            k3 = _rhs(Y + 0.5 * h * k2, wm)
            k4 = _rhs(Y + h * k3, w1)
            Y = Y + (h / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4)
    return Y


def _accuracy_failures(Y: np.ndarray) -> np.ndarray:
    symmetry = np.abs(Y[:, 0, 0] - Y[:, 1, 1])
    wronskian = np.abs(Y[:, 0, 0] * Y[:, 1, 1] - Y[:, 0, 1] * Y[:, 1, 0] - 1.0)
    return (symmetry >= SYMMETRY_TOL) | (wronskian >= WRONSKIAN_TOL) | ~np.isfinite(wronskian)


def integrate_cycles(
    af: np.ndarray,
    q: np.ndarray,
    shape: BarrierShape,
    *,
    step: float = DEFAULT_STEP,
    max_halvings: int = MAX_HALVINGS,
    offset: int = 0,
) -> np.ndarray:
    """Cycle maps (n, 2, 2) for a batch of cycles sharing one shape.

    Args:
        af: Unforced frequencies squared
        q: Forcing strengths
        shape: Barrier shape; the delta barrier uses its closed form
        step: Initial RK4 step
        max_halvings: Step halvings allowed for cycles failing the checks
        offset: Index of the first cycle, for error reporting

    Raises:
        IntegrationAccuracyError: If a cycle still fails after all halvings
    """
    af, q = np.broadcast_arrays(np.atleast_1d(np.asarray(af, float)), np.atleast_1d(np.asarray(q, float)))
    if shape.kind == ShapeKind.DELTA:
        return delta_barrier_matrices(af, q)

    Y = _propagate(af, q, shape, step)
    bad = _accuracy_failures(Y)
    halvings = 0
    while bad.any():
        if halvings == max_halvings:
            idx = int(np.flatnonzero(bad)[0])
            raise IntegrationAccuracyError(
                f"Symmetry/Wronskian check failed at step {step:.3g} "
                f"(af={af[idx]}, q={q[idx]}, {shape})",
                offset + idx,
            )
        step *= 0.5
        halvings += 1
        logger.warning(f"{int(bad.sum())} cycle(s) failed accuracy checks; halving step to {step:.3g}")
        Y[bad] = _propagate(af[bad], q[bad], shape, step)
        bad[bad] = _accuracy_failures(Y[bad])
    return Y


def principal_solutions(p: HillCycleParams, *, step: float = DEFAULT_STEP) -> CycleParams:
    """(h, g) and regime of one cycle."""
    Y = integrate_cycles(p.af, p.q, p.shape, step=step)
    return _params_from_matrix(Y[0])


@dataclass(frozen=True)
class CycleBatch:
    """Cycle maps of a stream of Hill cycles, in cycle order.

    Attributes:
        h: y1(pi) per cycle
        g: y1'(pi) per cycle
        m12: y2(pi) per cycle; determines the map even when g = 0
        seed: Seed of the parameter streams
    """

    h: np.ndarray
    g: np.ndarray
    m12: np.ndarray
    seed: int = 0

    @classmethod
    def from_matrices(cls, mats: np.ndarray, seed: int = 0) -> CycleBatch:
        # symmetric shapes make m11 = m22; average away integration noise
        h = 0.5 * (mats[:, 0, 0] + mats[:, 1, 1])
        return cls(h, mats[:, 1, 0].copy(), mats[:, 0, 1].copy(), seed)

    def __len__(self) -> int:
        return len(self.h)

    def __iter__(self) -> Iterator[CycleParams]:
        for h, g in zip(self.h.tolist(), self.g.tolist()):
            yield CycleParams.from_hg(h, g)

    def matrices(self) -> np.ndarray:
        out = np.empty((len(self), 2, 2))
        out[:, 0, 0] = self.h
        out[:, 0, 1] = self.m12
        out[:, 1, 0] = self.g
        out[:, 1, 1] = self.h
        return out

    def regimes(self, tol: float = PARABOLIC_TOL) -> list[Regime]:
        return [classify(h, tol) for h in self.h.tolist()]

    def hyperbolic_mask(self, tol: float = PARABOLIC_TOL) -> np.ndarray:
        """Cycles usable by the (x, phi) growth formulas: hyperbolic with x > 0."""
        with np.errstate(divide="ignore", invalid="ignore"):
            x = self.h / self.g
        return (np.abs(self.h) > 1.0 + tol) & (self.g != 0) & (x > 0)

    def unstable_xphi(self, tol: float = PARABOLIC_TOL) -> tuple[np.ndarray, np.ndarray]:
        """(x, phi) of the hyperbolic cycles with x > 0.

        Other cycles are dropped with a counted warning; direct products
        should use ``matrices()`` instead.
        """
        mask = self.hyperbolic_mask(tol)
        dropped = int(len(self) - mask.sum())
        if dropped:
            logger.warning(
                f"Excluded {dropped} of {len(self)} cycles with x <= 0 or |h| <= 1 "
                f"from the (x, phi) growth formulas"
            )
        h, g = self.h[mask], self.g[mask]
        return h / g, 1.0 - 1.0 / (h * h)


def cycle_stream(
    af_spec: DistributionSpec,
    q_spec: DistributionSpec,
    shape: BarrierShape,
    seed: int,
    n: int,
    *,
    step: float = DEFAULT_STEP,
) -> CycleBatch:
    """n independent cycles with af and q drawn from their own streams.

    Raises:
        IntegrationAccuracyError: With the index of the first failing cycle
    """
    if n < 1:
        raise ValueError(f"n must be >= 1, got {n}")
    af_stream = StreamHandle(af_spec, seed, AF_STREAM)
    q_stream = StreamHandle(q_spec, seed, Q_STREAM)
    if q_spec.support[0] < 0:
        raise ConfigError(f"q distribution {q_spec} allows negative forcing")

    blocks = []
    for start in range(0, n, CHUNK_CYCLES):
        stop = min(start + CHUNK_CYCLES, n)
        af, q = af_stream.block(start, stop), q_stream.block(start, stop)
        blocks.append(integrate_cycles(af, q, shape, step=step, offset=start))
        logger.debug(f"Integrated cycles [{start}, {stop})")
    return CycleBatch.from_matrices(np.concatenate(blocks), seed)
