"""CLI interface for hillgrowth.

Runs the growth-rate experiments and writes their data tables.

Usage:
    hillgrowth fig1                      # Small-phi growth rates
    hillgrowth fig2                      # Deficit for phi near unity
    hillgrowth fig3                      # Approximations and bounds
    hillgrowth elliptic                  # Stable cycles with fluctuating L
    hillgrowth hill                      # Hill cycles end to end
    hillgrowth direct                    # Direct product vs exact recursion
    hillgrowth extract-forcing <file>    # Forcing cycles from an orbit
    hillgrowth init                      # Write a default hillgrowth.yml

Experiment commands accept ``--key=value`` overrides of any config field,
e.g. ``hillgrowth fig3 --amplitude-grid=0,0.5,1 --x-spec='loguniform(-1,1)'``.
"""

import logging
import sys
from pathlib import Path

import click
import yaml

from . import __version__
from .config import Experiment, ExperimentConfig, default_file_dict, parse_overrides
from .errors import ConfigError, InsufficientDataError, NumericError
from .experiments import run
from .forcing import TriaxialHalo, cycles_to_csv, extract_cycles, read_trajectory_csv, shapes_to_csv
from .hill import BarrierShape

EXIT_CONFIG = 2
EXIT_NUMERIC = 3

OVERRIDE_SETTINGS = {"ignore_unknown_options": True, "allow_extra_args": True}


def setup_logging(verbose: bool) -> None:
    """Configure logging based on verbosity level."""
    level = logging.DEBUG if verbose else logging.INFO
    logging.basicConfig(
        level=level,
        format="%(asctime)s - %(levelname)s - %(message)s",
        datefmt="%H:%M:%S",
    )


@click.group()
@click.version_option(version=__version__, prog_name="hillgrowth")
@click.option("--seed", type=int, default=None, help="Seed of all random streams")
@click.option("--n-cycles", "-n", type=int, default=None, help="Cycles per chain")
@click.option(
    "--config",
    "config_path",
    type=click.Path(dir_okay=False, path_type=Path),
    default=None,
    help="Config file (default: search for hillgrowth.yml)",
)
@click.option(
    "--out",
    "-o",
    type=click.Path(dir_okay=False, path_type=Path),
    default=None,
    help="Output file (default: stdout)",
)
@click.option("--workers", "-j", type=int, default=None, help="Grid points run in parallel")
@click.option(
    "-v",
    "--verbose",
    is_flag=True,
    help="Enable verbose output",
)
@click.pass_context
def main(
    ctx: click.Context,
    seed: int | None,
    n_cycles: int | None,
    config_path: Path | None,
    out: Path | None,
    workers: int | None,
    verbose: bool,
) -> None:
    """hillgrowth: Growth rates for random Hill's equations.

    Every experiment writes a comma-separated table whose '#' header echoes
    the full configuration. Identical configuration and seed give identical
    output.
    """
    setup_logging(verbose)

    # Store shared objects in context
    ctx.ensure_object(dict)
    ctx.obj["config_path"] = config_path
    ctx.obj["out"] = out
    ctx.obj["flags"] = {
        "seed": seed,
        "n_cycles": n_cycles,
        "output_path": str(out) if out else None,
        "workers": workers,
    }


def _emit(text: str, out: Path | None) -> None:
    if out is None:
        click.echo(text, nl=False)
        return
    out.parent.mkdir(parents=True, exist_ok=True)
    out.write_text(text)
    click.echo(f"Wrote {out}", err=True)


def _run_experiment(ctx: click.Context, experiment: Experiment) -> None:
    try:
        overrides = parse_overrides(list(ctx.args))
        cfg = ExperimentConfig.resolve(
            experiment,
            path=ctx.obj["config_path"],
            cli=ctx.obj["flags"],
            overrides=overrides,
        )
        result = run(cfg)
    except ConfigError as e:
        click.echo(f"Config error: {e}", err=True)
        sys.exit(EXIT_CONFIG)
    except NumericError as e:
        click.echo(f"Numeric error: {e}", err=True)
        sys.exit(EXIT_NUMERIC)

    _emit(result.to_csv(), Path(cfg.output_path) if cfg.output_path else None)
    for key, value in result.notes.items():
        click.echo(f"{key}: {value:.4g}", err=True)


@main.command(context_settings=OVERRIDE_SETTINGS)
@click.pass_context
def fig1(ctx: click.Context) -> None:
    """Growth rates for small phi = a*xi against the small-phi formula.

    Example:
        hillgrowth --n-cycles 100000 fig1 --amplitude-grid=0.0001,0.001,0.01
    """
    _run_experiment(ctx, Experiment.FIG1)


@main.command(context_settings=OVERRIDE_SETTINGS)
@click.pass_context
def fig2(ctx: click.Context) -> None:
    """Deficit gamma0 - gamma for phi = 1 - A*xi against first-order theory."""
    _run_experiment(ctx, Experiment.FIG2)


@main.command(context_settings=OVERRIDE_SETTINGS)
@click.pass_context
def fig3(ctx: click.Context) -> None:
    """Exact and approximate growth rates with their bounds for phi = 1 - A*xi."""
    _run_experiment(ctx, Experiment.FIG3)


@main.command(context_settings=OVERRIDE_SETTINGS)
@click.pass_context
def elliptic(ctx: click.Context) -> None:
    """Elliptical rotations with fluctuating L, including the null rows.

    Example:
        hillgrowth elliptic --eta-family=twopoint --theta-spec='uniform(0.5,1)'
    """
    _run_experiment(ctx, Experiment.ELLIPTIC)


@main.command(context_settings=OVERRIDE_SETTINGS)
@click.pass_context
def hill(ctx: click.Context) -> None:
    """Hill cycles end to end: ODE, cycle maps, and growth rates.

    Example:
        hillgrowth hill --shape='square(w=0.5)' --q-spec='uniform(1.5,2.5)'
    """
    _run_experiment(ctx, Experiment.HILL)


@main.command(context_settings=OVERRIDE_SETTINGS)
@click.pass_context
def direct(ctx: click.Context) -> None:
    """Direct product growth against the exact recursion for any x and phi."""
    _run_experiment(ctx, Experiment.DIRECT)


@main.command("extract-forcing")
@click.argument("trajectory", type=click.Path(exists=True, dir_okay=False, path_type=Path))
@click.option("--a", "a", type=float, default=1.0, help="Halo axis a (largest)")
@click.option("--b", "b", type=float, default=1.0, help="Halo axis b")
@click.option("--c", "c", type=float, default=1.0, help="Halo axis c (smallest)")
@click.option(
    "--shapes",
    type=click.Path(dir_okay=False, path_type=Path),
    default=None,
    help="Also write normalized empirical barrier shapes here",
)
@click.pass_context
def extract_forcing(
    ctx: click.Context, trajectory: Path, a: float, b: float, c: float, shapes: Path | None
) -> None:
    """Extract per-cycle Hill parameters (af, q) from a t,x,z orbit file.

    Example:
        hillgrowth --out cycles.csv extract-forcing orbit.csv --a 2 --b 1 --c 0.5
    """
    try:
        halo = TriaxialHalo(a, b, c)
        cycles = extract_cycles(halo, read_trajectory_csv(trajectory), BarrierShape.cosine())
    except NumericError as e:
        click.echo(f"Numeric error: {e}", err=True)
        sys.exit(EXIT_NUMERIC)
    except (InsufficientDataError, ValueError) as e:
        click.echo(f"Error: {e}", err=True)
        sys.exit(EXIT_CONFIG)

    _emit(cycles_to_csv(cycles), ctx.obj["out"])
    if shapes:
        _emit(shapes_to_csv(cycles), shapes)
    click.echo(f"Extracted {len(cycles)} cycles", err=True)


@main.command()
@click.option(
    "--output",
    "-o",
    type=click.Path(path_type=Path),
    default="hillgrowth.yml",
    help="Output path for config file",
)
def init(output: Path) -> None:
    """Create a default hillgrowth.yml configuration file.

    Example:
        hillgrowth init
        hillgrowth init -o my-config.yml
    """
    with open(output, "w") as f:
        yaml.dump(default_file_dict(), f, default_flow_style=False, sort_keys=False)

    click.echo(f"Created {output}")


if __name__ == "__main__":
    main()
