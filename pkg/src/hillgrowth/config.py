"""Configuration file support for hillgrowth.

Experiments are configured from hillgrowth.yml files: a ``defaults`` section
plus one section per experiment. Values resolve in this order, later wins:

    built-in experiment defaults
    file ``defaults`` section
    file experiment section
    global CLI flags (--seed, --n-cycles, --out, --workers)
    subcommand ``--key=value`` overrides
"""

import math
from collections.abc import Callable, Mapping
from dataclasses import dataclass, field, replace
from enum import Enum
from pathlib import Path
from typing import Any

import yaml

from .ensembles import DistributionSpec
from .errors import ConfigError
from .hill import BarrierShape

CONFIG_NAMES = ("hillgrowth.yml", "hillgrowth.yaml")
MIN_FIGURE_CYCLES = 1000
ETA_FAMILIES = ("uniform", "twopoint")


class Experiment(Enum):
    FIG1 = "fig1"
    FIG2 = "fig2"
    FIG3 = "fig3"
    ELLIPTIC = "elliptic"
    HILL = "hill"
    DIRECT = "direct"

    @property
    def is_figure(self) -> bool:
        return self in (Experiment.FIG1, Experiment.FIG2, Experiment.FIG3, Experiment.ELLIPTIC)


_BUILTIN: dict[Experiment, dict[str, Any]] = {
    Experiment.FIG1: {"amplitude_grid": [1e-6, 2e-6, 5e-6, 1e-5, 2e-5, 5e-5, 1e-4]},
    Experiment.FIG2: {"amplitude_grid": [0.0, 0.01, 0.02, 0.05, 0.1, 0.2, 0.3]},
    Experiment.FIG3: {"amplitude_grid": [round(0.1 * i, 1) for i in range(11)]},
    Experiment.ELLIPTIC: {"amplitude_grid": [0.0, 0.05, 0.1, 0.2, 0.3]},
    Experiment.HILL: {"n_cycles": 10_000},
    Experiment.DIRECT: {},
}


def _to_int(key: str, value: Any) -> int:
    if isinstance(value, bool):
        raise ConfigError(f"{key} must be an integer, got {value!r}")
    if isinstance(value, int):
        return value
    if isinstance(value, float) and value.is_integer():
        return int(value)
    if isinstance(value, str):
        try:
            f = float(value.replace("_", ""))
        except ValueError:
            raise ConfigError(f"{key} must be an integer, got {value!r}") from None
        if f.is_integer():
            return int(f)
    raise ConfigError(f"{key} must be an integer, got {value!r}")


def _to_float(key: str, value: Any) -> float:
    try:
        result = float(value)
    except (TypeError, ValueError):
        raise ConfigError(f"{key} must be a number, got {value!r}") from None
    if not math.isfinite(result):
        raise ConfigError(f"{key} must be finite, got {value!r}")
    return result


def _to_grid(key: str, value: Any) -> list[float]:
    if isinstance(value, str):
        text = value.strip().strip("[]")
        value = [v for v in text.split(",") if v.strip()]
    if not isinstance(value, (list, tuple)):
        raise ConfigError(f"{key} must be a list of numbers, got {value!r}")
    return [_to_float(key, v) for v in value]


def _to_spec(key: str, value: Any) -> DistributionSpec:
    if isinstance(value, DistributionSpec):
        return value
    return DistributionSpec.parse(str(value))


def _to_shape(key: str, value: Any) -> BarrierShape:
    if isinstance(value, BarrierShape):
        return value
    return BarrierShape.parse(str(value))


def _to_family(key: str, value: Any) -> str:
    if value not in ETA_FAMILIES:
        raise ConfigError(f"{key} must be one of {', '.join(ETA_FAMILIES)}, got {value!r}")
    return value


def _to_path(key: str, value: Any) -> str | None:
    return None if value in (None, "") else str(value)


_PARSERS: dict[str, Callable[[str, Any], Any]] = {
    "n_cycles": _to_int,
    "seed": _to_int,
    "amplitude_grid": _to_grid,
    "x_spec": _to_spec,
    "xi_spec": _to_spec,
    "phi_spec": _to_spec,
    "theta_spec": _to_spec,
    "eta_family": _to_family,
    "L0": _to_float,
    "af_spec": _to_spec,
    "q_spec": _to_spec,
    "shape": _to_shape,
    "output_path": _to_path,
    "workers": _to_int,
    "batches": _to_int,
}


def normalize_key(key: str) -> str:
    """Map a CLI or file key (``n-cycles``) to its field name (``n_cycles``)."""
    name = key.strip().lstrip("-").replace("-", "_")
    if name == "out":
        return "output_path"
    if name == "l0":
        return "L0"
    return name


@dataclass
class ExperimentConfig:
    """Resolved configuration of one experiment run."""

    experiment: Experiment

    # Chain
    n_cycles: int = 1_000_000
    seed: int = 42
    batches: int = 32

    # Amplitudes swept by the figure experiments
    amplitude_grid: list[float] = field(default_factory=list)

    # Unstable-regime ensembles; phi = 1 - A xi (fig2/fig3) or A xi (fig1)
    x_spec: DistributionSpec = field(default_factory=lambda: DistributionSpec.loguniform(-2, 2))
    xi_spec: DistributionSpec = field(default_factory=lambda: DistributionSpec.uniform(0, 1))
    phi_spec: DistributionSpec = field(default_factory=lambda: DistributionSpec.affine(1, -0.5))

    # Elliptic sweep; eta amplitude A gives uniform(-A, A) or twopoint(A)
    theta_spec: DistributionSpec = field(
        default_factory=lambda: DistributionSpec.constant(math.pi / 4)
    )
    eta_family: str = "uniform"
    L0: float = 1.0

    # Hill cycles
    af_spec: DistributionSpec = field(default_factory=lambda: DistributionSpec.constant(0.25))
    q_spec: DistributionSpec = field(default_factory=lambda: DistributionSpec.uniform(1.5, 2.5))
    shape: BarrierShape = field(default_factory=BarrierShape.delta)

    # Output
    output_path: str | None = None
    workers: int = 1

    def __post_init__(self) -> None:
        self.validate()

    def validate(self) -> None:
        """Check field ranges.

        Raises:
            ConfigError: On the first invalid field
        """
        minimum = MIN_FIGURE_CYCLES if self.experiment.is_figure else 2
        if self.n_cycles < minimum:
            raise ConfigError(
                f"n_cycles must be >= {minimum} for {self.experiment.value}, got {self.n_cycles}"
            )
        if not 0 <= self.seed < 2**64:
            raise ConfigError(f"seed must be a non-negative 64-bit integer, got {self.seed}")
        if self.workers < 1:
            raise ConfigError(f"workers must be >= 1, got {self.workers}")
        if self.batches < 2:
            raise ConfigError(f"batches must be >= 2, got {self.batches}")
        if self.L0 <= 0:
            raise ConfigError(f"L0 must be positive, got {self.L0}")

        grid = self.amplitude_grid
        if self.experiment.is_figure and not grid:
            raise ConfigError(f"{self.experiment.value} needs a non-empty amplitude_grid")
        if any(b <= a for a, b in zip(grid, grid[1:])):
            raise ConfigError(f"amplitude_grid must be strictly increasing, got {grid}")
        if grid and grid[0] < 0:
            raise ConfigError(f"amplitude_grid must be non-negative, got {grid}")
        if self.experiment == Experiment.FIG1 and grid and grid[0] <= 0:
            raise ConfigError("fig1 amplitudes must be strictly positive (log-log fit)")
        if self.experiment in (Experiment.FIG2, Experiment.FIG3) and grid and grid[-1] > 1:
            raise ConfigError(f"{self.experiment.value} amplitudes must be <= 1, got {grid[-1]}")
        if self.experiment == Experiment.ELLIPTIC and grid and grid[-1] >= 1:
            raise ConfigError(f"eta amplitudes must be < 1, got {grid[-1]}")

    @classmethod
    def resolve(
        cls,
        experiment: Experiment,
        path: Path | None = None,
        cli: Mapping[str, Any] | None = None,
        overrides: Mapping[str, Any] | None = None,
    ) -> "ExperimentConfig":
        """Resolve built-in defaults, the config file, CLI flags and overrides.

        Args:
            experiment: Experiment to configure
            path: Config file. If None, searches for hillgrowth.yml
                  in current directory and parent directories.
            cli: Global CLI flags; None values are ignored
            overrides: ``--key=value`` pairs from the subcommand

        Raises:
            ConfigError: On unknown keys or invalid values
        """
        data = dict(_BUILTIN[experiment])
        file_data = cls.load_file(path)
        data.update(_section(file_data, "defaults"))
        data.update(_section(file_data, experiment.value))
        data.update({k: v for k, v in (cli or {}).items() if v is not None})
        data.update(overrides or {})
        return cls._from_dict(experiment, data)

    @classmethod
    def load_file(cls, path: Path | None = None) -> dict[str, Any]:
        """Raw contents of the config file, or {} if there is none."""
        if path is None:
            path = cls._find_config_file()
        elif not path.exists():
            raise ConfigError(f"Config file not found: {path}")

        if path is None:
            return {}

        try:
            with open(path) as f:
                data = yaml.safe_load(f) or {}
        except yaml.YAMLError as e:
            raise ConfigError(f"Invalid YAML in {path}: {e}") from e
        if not isinstance(data, dict):
            raise ConfigError(f"{path}: top level must be a mapping of sections")

        known = {"defaults"} | {e.value for e in Experiment}
        unknown = set(data) - known
        if unknown:
            raise ConfigError(f"{path}: unknown section(s) {', '.join(sorted(unknown))}")
        return data

    @classmethod
    def _find_config_file(cls) -> Path | None:
        """Search for hillgrowth.yml in current and parent directories."""
        current = Path.cwd()

        for _ in range(10):  # Max 10 levels up
            for name in CONFIG_NAMES:
                config_path = current / name
                if config_path.exists():
                    return config_path

            parent = current.parent
            if parent == current:
                break
            current = parent

        return None

    @classmethod
    def _from_dict(cls, experiment: Experiment, data: Mapping[str, Any]) -> "ExperimentConfig":
        """Create config from a flat dictionary of raw values."""
        values: dict[str, Any] = {}
        for raw_key, raw in data.items():
            key = normalize_key(raw_key)
            parser = _PARSERS.get(key)
            if parser is None:
                raise ConfigError(f"Unknown config key {raw_key!r} for {experiment.value}")
            values[key] = parser(key, raw)
        return cls(experiment=experiment, **values)

    def to_dict(self) -> dict[str, Any]:
        """Convert config to a YAML-ready dictionary of canonical encodings."""
        return {
            "experiment": self.experiment.value,
            "n_cycles": self.n_cycles,
            "seed": self.seed,
            "batches": self.batches,
            "amplitude_grid": list(self.amplitude_grid),
            "x_spec": self.x_spec.encode(),
            "xi_spec": self.xi_spec.encode(),
            "phi_spec": self.phi_spec.encode(),
            "theta_spec": self.theta_spec.encode(),
            "eta_family": self.eta_family,
            "L0": self.L0,
            "af_spec": self.af_spec.encode(),
            "q_spec": self.q_spec.encode(),
            "shape": self.shape.encode(),
            "output_path": self.output_path,
            "workers": self.workers,
        }

    def with_overrides(self, **changes: Any) -> "ExperimentConfig":
        return replace(self, **changes)


def _section(data: Mapping[str, Any], name: str) -> dict[str, Any]:
    section = data.get(name) or {}
    if not isinstance(section, dict):
        raise ConfigError(f"Section {name!r} must be a mapping of key: value pairs")
    return section


def default_file_dict() -> dict[str, Any]:
    """Contents written by ``hillgrowth init``."""
    result: dict[str, Any] = {
        "defaults": {"n_cycles": 1_000_000, "seed": 42, "workers": 1, "batches": 32},
    }
    base = ExperimentConfig(Experiment.DIRECT)
    result["fig1"] = {"amplitude_grid": _BUILTIN[Experiment.FIG1]["amplitude_grid"],
                      "x_spec": base.x_spec.encode(), "xi_spec": base.xi_spec.encode()}
    result["fig2"] = {"amplitude_grid": _BUILTIN[Experiment.FIG2]["amplitude_grid"]}
    result["fig3"] = {"amplitude_grid": _BUILTIN[Experiment.FIG3]["amplitude_grid"]}
    result["elliptic"] = {
        "amplitude_grid": _BUILTIN[Experiment.ELLIPTIC]["amplitude_grid"],
        "theta_spec": base.theta_spec.encode(),
        "eta_family": base.eta_family,
        "L0": base.L0,
    }
    result["hill"] = {
        "n_cycles": _BUILTIN[Experiment.HILL]["n_cycles"],
        "af_spec": base.af_spec.encode(),
        "q_spec": base.q_spec.encode(),
        "shape": base.shape.encode(),
    }
    result["direct"] = {"x_spec": base.x_spec.encode(), "phi_spec": base.phi_spec.encode()}
    return result


def parse_overrides(args: list[str]) -> dict[str, str]:
    """Parse ``--key=value`` (or ``--key value``) pairs left over by the CLI.

    Raises:
        ConfigError: On arguments that are not options
    """
    result: dict[str, str] = {}
    i = 0
    while i < len(args):
        arg = args[i]
        if not arg.startswith("--"):
            raise ConfigError(f"Unexpected argument {arg!r}; overrides look like --key=value")
        if "=" in arg:
            key, value = arg[2:].split("=", 1)
        elif i + 1 < len(args) and not args[i + 1].startswith("--"):
            key, value = arg[2:], args[i + 1]
            i += 1
        else:
            raise ConfigError(f"Override {arg!r} has no value")
        result[normalize_key(key)] = value
        i += 1
    return result
