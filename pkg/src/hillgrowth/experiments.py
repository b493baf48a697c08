"""Experiment runners producing comma-separated data tables.

Each runner samples its streams once and reuses them at every grid point
(common random numbers), so curves are smooth in the amplitude and
differences between grid points carry little sampling noise. Grid points run
in a thread pool and are assembled by index, so the output does not depend on
the number of workers.
"""

import logging
import math
from collections.abc import Callable, Sequence
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any, TypeVar

import numpy as np
import yaml
from scipy.stats import linregress

from . import __version__
from .approx import MomentSummary, delta_gamma_near_unity, gamma_approx1, gamma_approx2, gamma_small_phi
from .config import Experiment, ExperimentConfig
from .elliptic import FluctuationSpec, elliptic_stack, gamma_small_eta, gamma_theorem4
from .ensembles import DistributionSpec, StreamHandle, moments
from .exact import gamma_highly_unstable, gamma_lower_bound, gamma_theorem1
from .hill import cycle_stream
from .symplectic import GrowthEstimate, b_stack, gamma_h_component, lyapunov_direct

logger = logging.getLogger(__name__)

# stream labels under one seed
X_STREAM = 0
XI_STREAM = 1
APPROX_X_STREAMS = (2, 3, 4)
APPROX_XI_STREAMS = (5, 6)
THETA_STREAM = 0
ETA_STREAM = 1

HALF_PI_ETA = 0.3
SMALL_THETA = 1e-3

T = TypeVar("T")


@dataclass
class ExperimentResult:
    """A data table with provenance.

    Attributes:
        name: Experiment name
        columns: Column names
        rows: Table rows, one value per column
        notes: Summary values (fitted slopes) appended as comment lines
        config: Configuration echoed in the header
    """

    name: str
    columns: list[str]
    rows: list[list[Any]]
    config: ExperimentConfig
    notes: dict[str, float] = field(default_factory=dict)

    def column(self, name: str) -> np.ndarray:
        i = self.columns.index(name)
        return np.array([row[i] for row in self.rows], dtype=float)

    def to_csv(self) -> str:
        """Render the table with a ``#`` header echoing the configuration."""
        echo = self.config.to_dict()
        echo.pop("output_path", None)
        lines = [f"# hillgrowth {__version__} {self.name}"]
        for line in yaml.safe_dump(echo, sort_keys=False).splitlines():
            lines.append(f"# {line}")
        lines.append(",".join(self.columns))
        for row in self.rows:
            lines.append(",".join(_format_value(v) for v in row))
        for key, value in self.notes.items():
            lines.append(f"# {key}={_format_value(value)}")
        return "\n".join(lines) + "\n"

    def write(self, path: Path) -> None:
        path = Path(path)
        path.parent.mkdir(parents=True, exist_ok=True)
        path.write_text(self.to_csv())
        logger.info(f"Wrote {len(self.rows)} rows to {path}")


def _format_value(value: Any) -> str:
    if isinstance(value, (float, np.floating)):
        return repr(float(value))
    return str(value)


def loglog_slope(xs: Sequence[float], ys: Sequence[float]) -> float:
    """Least-squares slope of log|y| against log x over points with x, y != 0."""
    xs = np.asarray(xs, dtype=float)
    ys = np.abs(np.asarray(ys, dtype=float))
    keep = (xs > 0) & (ys > 0)
    if keep.sum() < 2:
        return math.nan
    return float(linregress(np.log(xs[keep]), np.log(ys[keep])).slope)


def _map_grid(fn: Callable[[float], T], grid: Sequence[float], workers: int) -> list[T]:
    if workers == 1:
        return [fn(a) for a in grid]
    with ThreadPoolExecutor(max_workers=workers) as pool:
        return list(pool.map(fn, grid))


def _b_chain(x: np.ndarray, phi: np.ndarray) -> Callable[[int, int], np.ndarray]:
    return lambda start, stop: b_stack(x[start:stop], phi[start:stop])


def _direct_b(cfg: ExperimentConfig, x: np.ndarray, phi: np.ndarray) -> GrowthEstimate:
    return lyapunov_direct(_b_chain(x, phi), len(x), batches=cfg.batches, seed=cfg.seed)


def _draw(cfg: ExperimentConfig, spec: DistributionSpec, stream: int) -> np.ndarray:
    return StreamHandle(spec, cfg.seed, stream).block(0, cfg.n_cycles)


def _base_streams(cfg: ExperimentConfig) -> tuple[np.ndarray, np.ndarray]:
    return _draw(cfg, cfg.x_spec, X_STREAM), _draw(cfg, cfg.xi_spec, XI_STREAM)


def run_fig1(cfg: ExperimentConfig) -> ExperimentResult:
    """Growth rates for small phi = a xi against the small-phi formula."""
    logger.info(f"fig1: {len(cfg.amplitude_grid)} amplitudes, n={cfg.n_cycles}, seed={cfg.seed}")
    x, xi = _base_streams(cfg)

    def point(a: float) -> list[Any]:
        phi = a * xi
        est = _direct_b(cfg, x, phi)
        predicted = gamma_small_phi(MomentSummary.from_samples(x, phi))
        logger.info(f"fig1 a={a}: gamma={est.gamma:.6g} +/- {est.std_error:.2g}")
        return [a, est.gamma, predicted, predicted - est.gamma, est.std_error, cfg.n_cycles, cfg.seed]

    rows = _map_grid(point, cfg.amplitude_grid, cfg.workers)
    result = ExperimentResult(
        "fig1",
        ["a", "gamma_direct", "gamma_theorem2", "delta", "stderr", "n_cycles", "seed"],
        rows,
        cfg,
    )
    result.notes["slope_gamma"] = loglog_slope(result.column("a"), result.column("gamma_direct"))
    result.notes["slope_delta"] = loglog_slope(result.column("a"), result.column("delta"))
    return result


def run_fig2(cfg: ExperimentConfig) -> ExperimentResult:
    """Deficit gamma_0 - gamma for phi = 1 - A xi against the first-order formula."""
    logger.info(f"fig2: {len(cfg.amplitude_grid)} amplitudes, n={cfg.n_cycles}, seed={cfg.seed}")
    x, xi = _base_streams(cfg)
    gamma0 = _direct_b(cfg, x, np.ones_like(x))

    def point(A: float) -> list[Any]:
        phi = 1.0 - A * xi
        est = _direct_b(cfg, x, phi) if A > 0 else gamma0
        true = gamma0.gamma - est.gamma
        predicted = delta_gamma_near_unity(x, phi)
        logger.info(f"fig2 A={A}: delta_gamma={true:.6g}, first order {predicted:.6g}")
        return [A, true, predicted, predicted - true, gamma0.paired_error(est), cfg.n_cycles, cfg.seed]

    rows = _map_grid(point, cfg.amplitude_grid, cfg.workers)
    result = ExperimentResult(
        "fig2",
        ["A", "delta_gamma_true", "delta_gamma_thm3", "error", "stderr", "n_cycles", "seed"],
        rows,
        cfg,
    )
    A = result.column("A")
    result.notes["slope_delta_gamma"] = loglog_slope(A, result.column("delta_gamma_true"))
    result.notes["slope_error"] = loglog_slope(A, result.column("error"))
    return result


def run_fig3(cfg: ExperimentConfig) -> ExperimentResult:
    """Exact, approximate and bounding growth rates for phi = 1 - A xi."""
    logger.info(f"fig3: {len(cfg.amplitude_grid)} amplitudes, n={cfg.n_cycles}, seed={cfg.seed}")
    x, xi = _base_streams(cfg)
    ax1, ax2, ax3 = (_draw(cfg, cfg.x_spec, s) for s in APPROX_X_STREAMS)
    axi1, axi2 = (_draw(cfg, cfg.xi_spec, s) for s in APPROX_XI_STREAMS)
    gamma0 = gamma_highly_unstable(x, batches=cfg.batches, seed=cfg.seed).gamma

    def point(A: float) -> list[Any]:
        phi = 1.0 - A * xi
        est = _direct_b(cfg, x, phi)
        phi1, phi2 = 1.0 - A * axi1, 1.0 - A * axi2
        g1 = gamma_approx1(ax1, ax2, ax3, phi1, phi2)
        g2 = gamma_approx2(ax1, ax2, ax3, phi1, phi2)
        bound = gamma_lower_bound(gamma0, phi)
        logger.info(f"fig3 A={A}: gamma={est.gamma:.6g}, approx {g1:.6g} / {g2:.6g}")
        return [A, gamma0, est.gamma, g1, g2, bound, est.std_error, cfg.n_cycles, cfg.seed]

    rows = _map_grid(point, cfg.amplitude_grid, cfg.workers)
    return ExperimentResult(
        "fig3",
        [
            "A", "gamma0", "gamma_direct", "gamma_approx1", "gamma_approx2",
            "lower_bound", "stderr", "n_cycles", "seed",
        ],
        rows,
        cfg,
    )


def eta_spec_for(family: str, amplitude: float) -> DistributionSpec:
    """Symmetric eta distribution of the given amplitude."""
    if amplitude == 0:
        return DistributionSpec.constant(0.0)
    if family == "twopoint":
        return DistributionSpec.twopoint(amplitude)
    return DistributionSpec.uniform(-amplitude, amplitude)


def _elliptic_row(
    cfg: ExperimentConfig, case: str, theta: np.ndarray, eta_spec: DistributionSpec, amplitude: float
) -> list[Any]:
    fluct = FluctuationSpec(cfg.L0, eta_spec)
    eta = StreamHandle(eta_spec, cfg.seed, ETA_STREAM).block(0, cfg.n_cycles)
    L = fluct.L_values(eta)
    est = lyapunov_direct(
        lambda a, b: elliptic_stack(theta[a:b], L[a:b]),
        cfg.n_cycles,
        batches=cfg.batches,
        seed=cfg.seed,
    )
    thm4 = gamma_theorem4(theta, fluct, seed=cfg.seed).gamma
    (eta2,) = moments(eta_spec, [2])
    small = gamma_small_eta(float(np.mean(np.sin(theta) ** 2)), eta2)
    logger.info(f"elliptic {case} eta={amplitude}: gamma={est.gamma:.6g}, theorem4 {thm4:.6g}")
    return [case, amplitude, est.gamma, thm4, small, est.std_error, cfg.n_cycles, cfg.seed]


def run_elliptic_sweep(cfg: ExperimentConfig) -> ExperimentResult:
    """Elliptic chains with fluctuating L, plus the theta = pi/2 and theta -> 0 null rows."""
    logger.info(
        f"elliptic: {len(cfg.amplitude_grid)} amplitudes, n={cfg.n_cycles}, seed={cfg.seed}"
    )
    theta = _draw(cfg, cfg.theta_spec, THETA_STREAM)
    case = f"theta={cfg.theta_spec.encode()}"

    def point(A: float) -> list[Any]:
        return _elliptic_row(cfg, case, theta, eta_spec_for(cfg.eta_family, A), A)

    rows = _map_grid(point, cfg.amplitude_grid, cfg.workers)
    null_eta = eta_spec_for(cfg.eta_family, HALF_PI_ETA)
    n = cfg.n_cycles
    rows.append(_elliptic_row(cfg, "half_pi", np.full(n, 0.5 * math.pi), null_eta, HALF_PI_ETA))
    rows.append(_elliptic_row(cfg, "small_theta", np.full(n, SMALL_THETA), null_eta, HALF_PI_ETA))
    return ExperimentResult(
        "elliptic",
        [
            "case", "eta_amplitude", "gamma_direct", "gamma_thm4", "gamma_small_eta",
            "stderr", "n_cycles", "seed",
        ],
        rows,
        cfg,
    )


def run_hill(cfg: ExperimentConfig) -> ExperimentResult:
    """End to end: Hill cycles, direct product growth, and its h and B parts."""
    logger.info(
        f"hill: af={cfg.af_spec}, q={cfg.q_spec}, shape={cfg.shape}, "
        f"n={cfg.n_cycles}, seed={cfg.seed}"
    )
    batch = cycle_stream(cfg.af_spec, cfg.q_spec, cfg.shape, cfg.seed, cfg.n_cycles)
    direct = lyapunov_direct(batch.matrices(), batches=cfg.batches, seed=cfg.seed)
    gamma_h = gamma_h_component(batch.h)

    mask = batch.hyperbolic_mask()
    x, phi = batch.unstable_xphi()
    usable = len(x) >= 2
    gamma_b = gamma_theorem1(x, phi, batches=cfg.batches, seed=cfg.seed).gamma if usable else math.nan
    fraction = float(mask.mean())

    rows = [[
        cfg.n_cycles, fraction, direct.gamma, gamma_h, gamma_b, gamma_h + gamma_b,
        direct.std_error, cfg.seed,
    ]]
    result = ExperimentResult(
        "hill",
        [
            "n_cycles", "usable_fraction", "gamma_direct", "gamma_h", "gamma_b_theorem1",
            "gamma_sum", "stderr", "seed",
        ],
        rows,
        cfg,
    )
    if fraction < 1.0:
        result.notes["excluded_cycles"] = float(len(batch) - mask.sum())
    return result


def run_direct(cfg: ExperimentConfig) -> ExperimentResult:
    """Direct product growth against the exact recursion for arbitrary x and phi."""
    logger.info(f"direct: x={cfg.x_spec}, phi={cfg.phi_spec}, n={cfg.n_cycles}, seed={cfg.seed}")
    x = _draw(cfg, cfg.x_spec, X_STREAM)
    phi = _draw(cfg, cfg.phi_spec, XI_STREAM)
    direct = _direct_b(cfg, x, phi)
    exact = gamma_theorem1(x, phi, batches=cfg.batches, seed=cfg.seed)
    gamma0 = gamma_highly_unstable(x, batches=cfg.batches, seed=cfg.seed)
    rows = [[
        direct.gamma, exact.gamma, gamma0.gamma, direct.std_error, exact.std_error,
        cfg.n_cycles, cfg.seed,
    ]]
    return ExperimentResult(
        "direct",
        [
            "gamma_direct", "gamma_theorem1", "gamma0", "stderr_direct", "stderr_theorem1",
            "n_cycles", "seed",
        ],
        rows,
        cfg,
    )


RUNNERS: dict[Experiment, Callable[[ExperimentConfig], ExperimentResult]] = {
    Experiment.FIG1: run_fig1,
    Experiment.FIG2: run_fig2,
    Experiment.FIG3: run_fig3,
    Experiment.ELLIPTIC: run_elliptic_sweep,
    Experiment.HILL: run_hill,
    Experiment.DIRECT: run_direct,
}


def run(cfg: ExperimentConfig) -> ExperimentResult:
    result = RUNNERS[cfg.experiment](cfg)
    logger.info(f"{cfg.experiment.value}: finished {len(result.rows)} rows")
    return result
