"""Perpendicular-frequency forcing from planar orbits in a triaxial halo.

For an orbit in the x-z plane of a halo with density constant on ellipsoids
x**2/a**2 + y**2/b**2 + z**2/c**2, small y obeys y'' + omega_y**2 y = 0 with

    omega_y**2 = (4/b) / (sqrt(c**2 x**2 + a**2 z**2) + b sqrt(x**2 + z**2))

Minima of omega_y**2 (outer turning points) split the orbit into forcing
cycles. Each cycle yields af = min omega_y**2 and a forcing strength q with
the cycle rescaled to length pi and the barrier normalized to unit area.
Trajectories come from files; orbits are not integrated here.
"""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass
from pathlib import Path

import numpy as np
from scipy.integrate import trapezoid

from .errors import DomainError, InsufficientDataError
from .hill import BarrierShape, HillCycleParams

logger = logging.getLogger(__name__)

TRAJECTORY_HEADER = ("t", "x", "z")
CYCLE_COLUMNS = ("cycle_index", "af", "q", "segment_length")
SHAPE_COLUMNS = ("cycle_index", "s", "qhat")
# consecutive samples closer than this (relative) are one plateau
PLATEAU_RTOL = 1e-12


@dataclass(frozen=True)
class TriaxialHalo:
    """Axis parameters of the halo density profile.

    Attributes:
        a, b, c: Axis parameters with a >= b >= c > 0
        rho0: Density scale; omega_y does not depend on it
    """

    a: float
    b: float
    c: float
    rho0: float = 1.0

    def __post_init__(self) -> None:
        if not (self.a >= self.b >= self.c > 0):
            raise ValueError(f"Axes must satisfy a >= b >= c > 0, got ({self.a}, {self.b}, {self.c})")
        if not self.rho0 > 0:
            raise ValueError(f"rho0 must be positive, got {self.rho0}")


@dataclass(frozen=True)
class Trajectory:
    """Samples of a planar orbit, strictly increasing in t."""

    t: np.ndarray
    x: np.ndarray
    z: np.ndarray

    def __post_init__(self) -> None:
        t, x, z = (np.asarray(v, dtype=float) for v in (self.t, self.x, self.z))
        object.__setattr__(self, "t", t)
        object.__setattr__(self, "x", x)
        object.__setattr__(self, "z", z)
        if not (t.ndim == x.ndim == z.ndim == 1 and len(t) == len(x) == len(z)):
            raise InsufficientDataError("t, x and z must be 1-D arrays of equal length")
        if len(t) < 3:
            raise InsufficientDataError(f"Trajectory needs at least 3 samples, got {len(t)}")
        if not np.all(np.isfinite(t) & np.isfinite(x) & np.isfinite(z)):
            raise InsufficientDataError("Trajectory contains non-finite values")
        if np.any(np.diff(t) <= 0):
            idx = int(np.flatnonzero(np.diff(t) <= 0)[0]) + 1
            raise InsufficientDataError(f"Timestamps must be strictly increasing (sample {idx})")

    def __len__(self) -> int:
        return len(self.t)


@dataclass(frozen=True)
class ForcingCycle:
    """One extracted forcing cycle.

    Attributes:
        cycle_index: Position of the cycle in the trajectory
        params: Hill parameters (af, q) with the barrier shape used downstream
        segment_length: Duration of the cycle in trajectory time units
        shape_s: Sample times rescaled to [0, pi]
        shape_qhat: Unit-area empirical barrier shape at shape_s
    """

    cycle_index: int
    params: HillCycleParams
    segment_length: float
    shape_s: np.ndarray
    shape_qhat: np.ndarray

    @property
    def af(self) -> float:
        return self.params.af

    @property
    def q(self) -> float:
        return self.params.q


def omega_y_squared(halo: TriaxialHalo, x, z):
    """Perpendicular frequency squared; vectorized over x and z.

    Raises:
        DomainError: At the origin
    """
    x = np.asarray(x, dtype=float)
    z = np.asarray(z, dtype=float)
    if np.any((x == 0) & (z == 0)):
        raise DomainError("omega_y is singular at the origin")
    a, b, c = halo.a, halo.b, halo.c
    w2 = (4.0 / b) / (np.hypot(c * x, a * z) + b * np.hypot(x, z))
    return float(w2) if w2.ndim == 0 else w2


def _vertex_offset(t: np.ndarray, w: np.ndarray, end: int) -> float:
    """Offset of the vertex of the parabola through the three samples at one end.

    Returns inf when the parabola is not convex there.
    """
    sl = slice(0, 3) if end == 0 else slice(-3, None)
    te = t[end]
    c2, c1, _ = np.polyfit(t[sl] - te, w[sl], 2)
    if not c2 > 0:
        return math.inf
    return float(-c1 / (2.0 * c2))


def _minimum_indices(t: np.ndarray, w: np.ndarray) -> list[int]:
    """Local minima of a series; plateaus report their first sample.

    An endpoint counts only when it is a turning point: the series rises
    away from it and the local parabola bottoms out within one sample
    spacing of it. A flat series spans one cycle.
    """
    scale = max(float(np.max(np.abs(w))), 1e-300)
    step = np.abs(np.diff(w)) > PLATEAU_RTOL * scale
    starts = np.concatenate([[0], np.flatnonzero(step) + 1])
    if len(starts) == 1:
        return [0, len(w) - 1]

    vals = w[starts]
    left = np.concatenate([[True], vals[:-1] > vals[1:]])
    right = np.concatenate([vals[1:] > vals[:-1], [True]])
    minima = [int(i) for i in starts[left & right]]

    last = len(w) - 1
    partial = 0
    if minima and minima[0] == 0 and starts[1] == 1 and len(w) >= 3:
        if abs(_vertex_offset(t, w, 0)) > t[1] - t[0]:
            minima.pop(0)
            partial += 1
    if minima and minima[-1] == last and len(w) >= 3:
        if abs(_vertex_offset(t, w, -1)) > t[-1] - t[-2]:
            minima.pop()
            partial += 1
    if partial:
        logger.info(f"Dropped {partial} partial segment(s) at the trajectory ends")
    return minima


def extract_cycles(
    halo: TriaxialHalo,
    traj: Trajectory,
    shape: BarrierShape | None = None,
) -> list[ForcingCycle]:
    """Split a trajectory into forcing cycles at minima of omega_y**2.

    Args:
        halo: Halo axis parameters
        traj: Planar orbit samples
        shape: Barrier shape attached to the emitted Hill parameters
            (default: raised cosine)

    Raises:
        InsufficientDataError: If fewer than two minima are found
    """
    shape = shape or BarrierShape.cosine()
    w = omega_y_squared(halo, traj.x, traj.z)
    minima = _minimum_indices(traj.t, w)
    if len(minima) < 2:
        raise InsufficientDataError(
            f"Found {len(minima)} minimum of omega_y^2; at least 2 are needed for one cycle"
        )

    cycles = []
    for k, (i0, i1) in enumerate(zip(minima[:-1], minima[1:])):
        t = traj.t[i0 : i1 + 1]
        seg = w[i0 : i1 + 1]
        af = float(seg.min())
        length = float(t[-1] - t[0])
        excess = seg - af
        q = float(trapezoid(excess, t)) * math.pi / length
        s = (t - t[0]) * (math.pi / length)
        qhat = excess / q if q > 0 else np.zeros_like(excess)
        cycles.append(ForcingCycle(k, HillCycleParams(af, q, shape), length, s, qhat))

    logger.info(f"Extracted {len(cycles)} forcing cycles from {len(traj)} samples")
    return cycles


def read_trajectory_csv(path: Path) -> Trajectory:
    """Read a ``t,x,z`` comma-separated trajectory file.

    Raises:
        InsufficientDataError: On a missing header or malformed rows
    """
    path = Path(path)
    with open(path, encoding="utf-8") as f:
        header = f.readline().strip()
    columns = tuple(c.strip() for c in header.split(","))
    if columns != TRAJECTORY_HEADER:
        raise InsufficientDataError(f"{path}: expected header 't,x,z', got {header!r}")

    try:
        data = np.loadtxt(path, delimiter=",", skiprows=1, ndmin=2)
    except ValueError as e:
        raise InsufficientDataError(f"{path}: malformed trajectory row ({e})") from e
    if data.shape[1] != 3:
        raise InsufficientDataError(f"{path}: expected 3 columns, got {data.shape[1]}")
    logger.debug(f"Read {len(data)} trajectory samples from {path}")
    return Trajectory(data[:, 0], data[:, 1], data[:, 2])


def cycles_to_csv(cycles: list[ForcingCycle]) -> str:
    lines = [",".join(CYCLE_COLUMNS)]
    for c in cycles:
        lines.append(f"{c.cycle_index},{c.af!r},{c.q!r},{c.segment_length!r}")
    return "\n".join(lines) + "\n"


def shapes_to_csv(cycles: list[ForcingCycle]) -> str:
    lines = [",".join(SHAPE_COLUMNS)]
    for c in cycles:
        for s, qh in zip(c.shape_s.tolist(), c.shape_qhat.tolist()):
            lines.append(f"{c.cycle_index},{s!r},{qh!r}")
    return "\n".join(lines) + "\n"
