"""Shared test fixtures and configuration."""

import math
import tempfile
from collections.abc import Iterator
from pathlib import Path

import numpy as np
import pytest

from hillgrowth.ensembles import DistributionSpec, StreamHandle

SEED = 12345
N_STAT = 200_000


@pytest.fixture
def seed() -> int:
    """Seed shared by statistical tests."""
    return SEED


@pytest.fixture
def loguniform_x() -> DistributionSpec:
    """x log-uniform on 10^[-2, 2], the ensemble used throughout."""
    return DistributionSpec.loguniform(-2, 2)


@pytest.fixture(scope="session")
def x_samples() -> np.ndarray:
    """200k log-uniform x samples."""
    return StreamHandle(DistributionSpec.loguniform(-2, 2), SEED, 0).block(0, N_STAT)


@pytest.fixture(scope="session")
def xi_samples() -> np.ndarray:
    """200k uniform [0, 1) samples, independent of x_samples."""
    return StreamHandle(DistributionSpec.uniform(0, 1), SEED, 1).block(0, N_STAT)


@pytest.fixture
def temp_dir() -> Iterator[Path]:
    """Temporary directory for file operations."""
    with tempfile.TemporaryDirectory() as tmpdir:
        yield Path(tmpdir)


def eccentric_trace(dt: float = 1e-3, t_end: float = 6 * math.pi) -> tuple[np.ndarray, ...]:
    """x = 2 + cos t, z = sin t sampled on t = k*dt up to t_end."""
    n = int(t_end / dt) + 1
    t = np.arange(n) * dt
    return t, 2.0 + np.cos(t), np.sin(t)


def write_trajectory(path: Path, t: np.ndarray, x: np.ndarray, z: np.ndarray) -> Path:
    lines = ["t,x,z"] + [f"{a!r},{b!r},{c!r}" for a, b, c in zip(t.tolist(), x.tolist(), z.tolist())]
    path.write_text("\n".join(lines) + "\n")
    return path


@pytest.fixture
def trajectory_file(temp_dir: Path) -> Path:
    """CSV file holding three periods of the eccentric trace."""
    return write_trajectory(temp_dir / "orbit.csv", *eccentric_trace())
