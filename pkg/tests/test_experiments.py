"""Tests for the experiment runners and their output tables."""

import math

import numpy as np
import pytest

from hillgrowth.config import Experiment, ExperimentConfig
from hillgrowth.ensembles import DistributionSpec
from hillgrowth.experiments import (
    ExperimentResult,
    eta_spec_for,
    loglog_slope,
    run,
    run_elliptic_sweep,
    run_fig1,
    run_fig2,
    run_fig3,
    run_hill,
)

THEOREM4_QUARTER_PI = 0.00787073


def make_config(experiment: Experiment, **kwargs) -> ExperimentConfig:
    kwargs.setdefault("seed", 7)
    kwargs.setdefault("batches", 10)
    return ExperimentConfig(experiment, **kwargs)


@pytest.fixture(scope="module")
def fig3_result() -> ExperimentResult:
    return run_fig3(make_config(Experiment.FIG3, n_cycles=50_000, amplitude_grid=[0.0, 0.5, 1.0]))


@pytest.fixture(scope="module")
def fig2_result() -> ExperimentResult:
    cfg = make_config(Experiment.FIG2, n_cycles=50_000, amplitude_grid=[0.0, 0.01, 0.03, 0.1, 0.3])
    return run_fig2(cfg)


@pytest.fixture(scope="module")
def elliptic_result() -> ExperimentResult:
    cfg = make_config(Experiment.ELLIPTIC, n_cycles=20_000, amplitude_grid=[0.0, 0.3])
    return run_elliptic_sweep(cfg)


class TestLoglogSlope:
    """Tests for the log-log slope fit."""

    def test_power_law(self):
        """Should recover the exponent of a power law."""
        a = np.array([1e-3, 1e-2, 1e-1])

        assert loglog_slope(a, 3 * a**2) == pytest.approx(2.0)

    def test_skips_zeros(self):
        """Should drop points where x or y vanish."""
        assert loglog_slope([0.0, 0.1, 0.2], [0.0, 0.1, 0.2]) == pytest.approx(1.0)

    def test_too_few_points(self):
        """Should return NaN with fewer than two usable points."""
        assert math.isnan(loglog_slope([0.0, 0.1], [0.0, 0.1]))


class TestResultTable:
    """Tests for the CSV rendering of results."""

    def test_header_echoes_config(self, fig3_result):
        """Should start with a # block echoing the configuration."""
        lines = fig3_result.to_csv().splitlines()

        assert lines[0].startswith("# hillgrowth ")
        assert lines[0].endswith(" fig3")
        assert "# seed: 7" in lines
        assert "# n_cycles: 50000" in lines
        assert "# x_spec: loguniform(-2,2)" in lines
        assert not any("output_path" in line for line in lines)

    def test_columns_and_rows(self, fig3_result):
        """Should write the column line followed by one row per grid point."""
        lines = [line for line in fig3_result.to_csv().splitlines() if not line.startswith("#")]

        assert lines[0] == (
            "A,gamma0,gamma_direct,gamma_approx1,gamma_approx2,lower_bound,stderr,n_cycles,seed"
        )
        assert len(lines) == 4
        assert lines[1].split(",")[-2:] == ["50000", "7"]

    def test_write(self, fig3_result, temp_dir):
        """Should create parent directories and write the table."""
        path = temp_dir / "out" / "fig3.csv"
        fig3_result.write(path)

        assert path.read_text() == fig3_result.to_csv()

    def test_notes_appended(self):
        """Should append notes as # key=value lines."""
        cfg = make_config(Experiment.DIRECT, n_cycles=10)
        result = ExperimentResult("direct", ["x"], [[1.5]], cfg, {"slope": 0.5})

        assert result.to_csv().splitlines()[-2:] == ["1.5", "# slope=0.5"]


class TestFig3:
    """Tests for the approximation comparison."""

    def test_zero_amplitude(self, fig3_result):
        """Should give gamma0 in every column at A = 0."""
        row = fig3_result.rows[0]
        A, gamma0, direct, g1, g2, bound, stderr = row[:7]

        assert A == 0.0
        assert bound == gamma0
        assert abs(direct - gamma0) <= max(3 * stderr, 1e-3)
        assert abs(g1 - gamma0) < 0.05
        assert abs(g2 - gamma0) < 0.05

    def test_ordering(self, fig3_result):
        """Should keep the direct rate between the lower bound and gamma0."""
        for row in fig3_result.rows:
            _, gamma0, direct, _, _, bound, stderr = row[:7]
            slack = 3 * stderr
            assert bound - slack <= direct <= gamma0 + slack

    def test_approximations_track_direct(self, fig3_result):
        """Should keep both approximations close to the direct rate."""
        for row in fig3_result.rows:
            _, _, direct, g1, g2, _, stderr = row[:7]
            assert abs(g1 - direct) <= 0.05 + 4 * stderr
            assert abs(g2 - direct) <= 0.05 + 4 * stderr

    def test_deterministic(self, fig3_result):
        """Should reproduce the table byte for byte, serially or in parallel."""
        cfg = make_config(Experiment.FIG3, n_cycles=50_000, amplitude_grid=[0.0, 0.5, 1.0])

        assert run_fig3(cfg).to_csv() == fig3_result.to_csv()
        parallel = run_fig3(cfg.with_overrides(workers=3))
        assert parallel.rows == fig3_result.rows


class TestFig1:
    """Tests for the small-phi sweep."""

    def test_scaling_laws_on_default_grid(self, temp_dir, monkeypatch):
        """Should give slope 1/2 for gamma and slope 1 for delta on the built-in grid."""
        monkeypatch.chdir(temp_dir)
        cfg = ExperimentConfig.resolve(Experiment.FIG1, cli={"seed": 42})
        result = run_fig1(cfg)

        assert cfg.amplitude_grid[-1] <= 1e-4
        assert result.columns[:5] == ["a", "gamma_direct", "gamma_theorem2", "delta", "stderr"]
        assert np.all(result.column("gamma_direct") > 0)
        assert result.notes["slope_gamma"] == pytest.approx(0.5, abs=0.05)
        assert result.notes["slope_delta"] == pytest.approx(1.0, abs=0.15)


class TestFig2:
    """Tests for the near-unity sweep."""

    def test_zero_amplitude(self, fig2_result):
        """Should give zero deficits at A = 0."""
        _, true, predicted, error, stderr = fig2_result.rows[0][:5]

        assert (true, predicted, error, stderr) == (0.0, 0.0, 0.0, 0.0)

    def test_linear_deficit(self, fig2_result):
        """Should give a deficit linear in A."""
        assert np.all(fig2_result.column("delta_gamma_true")[1:] > 0)
        assert fig2_result.notes["slope_delta_gamma"] == pytest.approx(1.0, abs=0.15)

    def test_first_order_error_is_small(self, fig2_result):
        """Should predict the deficit well at the smallest amplitudes."""
        true = fig2_result.column("delta_gamma_true")
        error = fig2_result.column("error")

        assert abs(error[1]) < 0.2 * true[1]


class TestElliptic:
    """Tests for the elliptic sweep."""

    def test_rows(self, elliptic_result):
        """Should add the half-pi and small-theta rows after the grid."""
        cases = [row[0] for row in elliptic_result.rows]

        assert len(cases) == 4
        assert cases[2:] == ["half_pi", "small_theta"]
        assert cases[0].startswith("theta=const(")

    def test_zero_amplitude(self, elliptic_result):
        """Should give zero growth without fluctuations."""
        _, _, direct, thm4, small = elliptic_result.rows[0][:5]

        assert abs(direct) < 1e-3
        assert thm4 == pytest.approx(0.0, abs=1e-15)
        assert small == 0.0

    def test_closed_form_value(self, elliptic_result):
        """Should evaluate the closed form at pi/4 with uniform eta of amplitude 0.3."""
        assert elliptic_result.rows[1][3] == pytest.approx(THEOREM4_QUARTER_PI, abs=1e-7)

    def test_null_rows(self, elliptic_result):
        """Should give vanishing direct growth at theta = pi/2 and theta -> 0."""
        for row in elliptic_result.rows[2:]:
            direct, stderr = row[2], row[5]
            assert abs(direct) <= max(3 * stderr, 1e-3)

    def test_eta_spec_for(self):
        """Should build the eta distribution of each family."""
        assert eta_spec_for("uniform", 0.0) == DistributionSpec.constant(0.0)
        assert eta_spec_for("uniform", 0.3) == DistributionSpec.uniform(-0.3, 0.3)
        assert eta_spec_for("twopoint", 0.3) == DistributionSpec.twopoint(0.3)


class TestHillAndDirect:
    """Tests for the end-to-end and custom experiments."""

    def test_hill_decomposition(self):
        """Should split the direct rate into the h part and the reduced chain."""
        result = run_hill(make_config(Experiment.HILL, n_cycles=5000))
        n, fraction, direct, gamma_h, gamma_b, total, stderr, seed = result.rows[0]

        assert (n, seed) == (5000, 7)
        assert fraction == 1.0
        assert total == pytest.approx(gamma_h + gamma_b)
        assert abs(direct - total) < 0.01
        assert "excluded_cycles" not in result.notes

    def test_hill_reports_exclusions(self):
        """Should note how many cycles were not hyperbolic."""
        cfg = make_config(
            Experiment.HILL, n_cycles=2000, q_spec=DistributionSpec.uniform(0.0, 2.0)
        )
        result = run(cfg)

        assert 0 < result.rows[0][1] < 1
        assert result.notes["excluded_cycles"] > 0

    def test_direct(self):
        """Should match the exact recursion on the same chain."""
        result = run(make_config(Experiment.DIRECT, n_cycles=20_000))
        direct, exact, gamma0 = result.rows[0][:3]

        assert abs(direct - exact) < 0.01
        assert exact <= gamma0 + 0.01
