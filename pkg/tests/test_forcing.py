"""Tests for omega_y evaluation and forcing-cycle extraction."""

import logging
import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st
from scipy.integrate import trapezoid

from hillgrowth.errors import DomainError, InsufficientDataError
from hillgrowth.forcing import (
    Trajectory,
    TriaxialHalo,
    cycles_to_csv,
    extract_cycles,
    omega_y_squared,
    read_trajectory_csv,
    shapes_to_csv,
)
from hillgrowth.hill import BarrierShape

from .conftest import eccentric_trace, write_trajectory

SPHERE = TriaxialHalo(1.0, 1.0, 1.0)

positive = st.floats(min_value=0.1, max_value=10.0)


def _jittered_trace(depths, per_orbit=2000):
    """Planar orbit whose k-th revolution dips to radius 3 - 2*depths[k]."""
    n_orbits = len(depths)
    t = np.linspace(0, 2 * math.pi * n_orbits, per_orbit * n_orbits + 1)
    k = np.minimum((t // (2 * math.pi)).astype(int), n_orbits - 1)
    r = 3.0 - (1.0 - np.cos(t)) * np.asarray(depths)[k]
    return t, r * np.cos(t), r * np.sin(t)


class TestTriaxialHalo:
    """Tests for halo validation."""

    @pytest.mark.parametrize("axes", [(1.0, 2.0, 0.5), (2.0, 1.0, 0.0), (1.0, 1.0, -1.0)])
    def test_rejects_bad_ordering(self, axes):
        """Should require a >= b >= c > 0."""
        with pytest.raises(ValueError):
            TriaxialHalo(*axes)

    def test_rejects_non_positive_density(self):
        """Should require rho0 > 0."""
        with pytest.raises(ValueError):
            TriaxialHalo(2.0, 1.0, 0.5, rho0=0.0)


class TestOmegaY:
    """Tests for the perpendicular frequency."""

    @pytest.mark.parametrize(
        "halo,x,z,expected",
        [
            (SPHERE, 0.0, 1.0, 2.0),
            (SPHERE, 3.0, 4.0, 0.4),
            (TriaxialHalo(2.0, 1.0, 0.5), 1.0, 0.0, 4 / 1.5),
        ],
    )
    def test_examples(self, halo, x, z, expected):
        """Should evaluate the closed form."""
        assert omega_y_squared(halo, x, z) == pytest.approx(expected, rel=1e-12)

    def test_origin(self):
        """Should refuse the origin."""
        with pytest.raises(DomainError):
            omega_y_squared(SPHERE, 0.0, 0.0)
        with pytest.raises(DomainError):
            omega_y_squared(SPHERE, [1.0, 0.0], [0.0, 0.0])

    def test_vectorized(self):
        """Should return an array for array input."""
        w = omega_y_squared(SPHERE, np.array([0.0, 3.0]), np.array([1.0, 4.0]))

        np.testing.assert_allclose(w, [2.0, 0.4])

    @given(positive, positive, positive, positive, positive, positive)
    def test_positive_off_origin(self, a, b, c, x, z, s):
        """Should be positive everywhere off the origin."""
        a, b, c = sorted((a, b, c), reverse=True)
        halo = TriaxialHalo(a, b, c)

        assert omega_y_squared(halo, x, -z) > 0
        assert omega_y_squared(halo, -x * s, 0.0) > 0

    @given(positive, positive, positive, positive, positive, positive)
    def test_scale_covariance(self, a, b, c, x, z, s):
        """Should scale as 1/s^2 in the axes, 1/s in position and 1/s^3 jointly."""
        a, b, c = sorted((a, b, c), reverse=True)
        halo = TriaxialHalo(a, b, c)
        scaled = TriaxialHalo(s * a, s * b, s * c)
        w = omega_y_squared(halo, x, z)

        assert omega_y_squared(scaled, x, z) == pytest.approx(w / s**2, rel=1e-12)
        assert omega_y_squared(halo, s * x, s * z) == pytest.approx(w / s, rel=1e-12)
        assert omega_y_squared(scaled, s * x, s * z) == pytest.approx(w / s**3, rel=1e-12)


class TestTrajectory:
    """Tests for trajectory validation."""

    def test_too_short(self):
        """Should require three samples."""
        with pytest.raises(InsufficientDataError):
            Trajectory([0.0, 1.0], [1.0, 1.0], [0.0, 0.0])

    def test_ragged(self):
        """Should require equal lengths."""
        with pytest.raises(InsufficientDataError):
            Trajectory([0.0, 1.0, 2.0], [1.0, 1.0], [0.0, 0.0, 0.0])

    def test_non_increasing_time(self):
        """Should require strictly increasing timestamps."""
        with pytest.raises(InsufficientDataError, match="increasing"):
            Trajectory([0.0, 1.0, 1.0], [1.0, 1.0, 1.0], [0.0, 0.0, 0.0])

    def test_non_finite(self):
        """Should reject NaN samples."""
        with pytest.raises(InsufficientDataError):
            Trajectory([0.0, 1.0, 2.0], [1.0, math.nan, 1.0], [0.0, 0.0, 0.0])


class TestExtractCycles:
    """Tests for segmentation of omega_y**2 into forcing cycles."""

    def test_eccentric_trace(self, caplog):
        """Should find three identical cycles on three periods of a closed orbit."""
        with caplog.at_level(logging.INFO):
            cycles = extract_cycles(SPHERE, Trajectory(*eccentric_trace()))

        assert len(cycles) == 3
        assert [c.cycle_index for c in cycles] == [0, 1, 2]
        af = [c.af for c in cycles]
        q = [c.q for c in cycles]
        assert max(af) - min(af) < 1e-4
        assert max(q) - min(q) < 1e-4
        assert af[0] == pytest.approx(2 / 3, abs=1e-6)
        assert q[0] > 0
        assert "Extracted 3 forcing cycles" in caplog.text

    def test_circular_trace_has_no_forcing(self):
        """Should give q = 0 when omega_y**2 is constant."""
        t = np.linspace(0, 4 * math.pi, 2001)
        cycles = extract_cycles(SPHERE, Trajectory(t, np.cos(t), np.sin(t)))

        assert len(cycles) == 1
        assert cycles[0].af == pytest.approx(2.0)
        assert cycles[0].q == pytest.approx(0.0, abs=1e-10)

    def test_jittered_trace(self):
        """Should find one cycle per injected minimum with varying forcing."""
        depths = [0.5, 0.9, 0.6, 1.0]
        cycles = extract_cycles(SPHERE, Trajectory(*_jittered_trace(depths)))
        q = [c.q for c in cycles]

        assert len(cycles) == len(depths)
        assert np.argsort(q).tolist() == np.argsort(depths).tolist()
        np.testing.assert_allclose([c.af for c in cycles], 2 / 3, atol=1e-9)

    @pytest.mark.parametrize(
        ("t_start", "t_end", "expected", "dropped"),
        [
            (0.0, 5.5 * math.pi, 2, 1),
            (0.5 * math.pi, 6 * math.pi, 2, 1),
            (0.5 * math.pi, 5.5 * math.pi, 1, 2),
        ],
    )
    def test_trace_cut_between_turning_points(self, caplog, t_start, t_end, expected, dropped):
        """Should drop the partial segments of a trace that starts or ends mid-cycle."""
        dt = 1e-3
        t = t_start + np.arange(int((t_end - t_start) / dt) + 1) * dt
        full_q = extract_cycles(SPHERE, Trajectory(*eccentric_trace()))[0].q

        with caplog.at_level(logging.INFO):
            cycles = extract_cycles(SPHERE, Trajectory(t, 2.0 + np.cos(t), np.sin(t)))

        assert len(cycles) == expected
        for c in cycles:
            assert c.segment_length == pytest.approx(2 * math.pi, abs=2 * dt)
            assert c.q == pytest.approx(full_q, rel=1e-3)
        assert f"Dropped {dropped} partial segment(s)" in caplog.text

    def test_single_minimum(self):
        """Should fail when omega_y**2 only decreases."""
        t = np.linspace(0, 1, 50)
        with pytest.raises(InsufficientDataError):
            extract_cycles(SPHERE, Trajectory(t, 1.0 + t, np.zeros_like(t)))

    def test_unit_area_shapes(self):
        """Should emit shape samples on [0, pi] with unit area."""
        cycles = extract_cycles(SPHERE, Trajectory(*eccentric_trace()))

        for c in cycles:
            assert c.shape_s[0] == 0.0
            assert c.shape_s[-1] == pytest.approx(math.pi)
            assert trapezoid(c.shape_qhat, c.shape_s) == pytest.approx(1.0, rel=1e-9)

    def test_shape_attached(self):
        """Should attach the requested barrier shape to every cycle."""
        shape = BarrierShape.square(0.5)
        cycles = extract_cycles(SPHERE, Trajectory(*eccentric_trace()), shape)

        assert {c.params.shape for c in cycles} == {shape}


class TestTrajectoryFiles:
    """Tests for trajectory ingestion and cycle output."""

    def test_read(self, trajectory_file):
        """Should read back the written samples."""
        traj = read_trajectory_csv(trajectory_file)
        t, x, z = eccentric_trace()

        assert len(traj) == len(t)
        np.testing.assert_array_equal(traj.x, x)

    def test_bad_header(self, temp_dir):
        """Should require the t,x,z header."""
        path = temp_dir / "bad.csv"
        path.write_text("time,x,z\n0,1,0\n1,1,0\n2,1,0\n")

        with pytest.raises(InsufficientDataError, match="header"):
            read_trajectory_csv(path)

    def test_malformed_row(self, temp_dir):
        """Should reject rows that do not parse."""
        path = temp_dir / "bad.csv"
        path.write_text("t,x,z\n0,1,0\n1,oops,0\n2,1,0\n")

        with pytest.raises(InsufficientDataError, match="malformed"):
            read_trajectory_csv(path)

    def test_wrong_column_count(self, temp_dir):
        """Should reject rows with extra columns."""
        path = temp_dir / "bad.csv"
        path.write_text("t,x,z\n0,1,0,9\n1,1,0,9\n2,1,0,9\n")

        with pytest.raises(InsufficientDataError, match="3 columns"):
            read_trajectory_csv(path)

    def test_cycles_csv(self, trajectory_file):
        """Should write one row per cycle under the cycle header."""
        cycles = extract_cycles(SPHERE, read_trajectory_csv(trajectory_file))
        lines = cycles_to_csv(cycles).splitlines()

        assert lines[0] == "cycle_index,af,q,segment_length"
        assert len(lines) == 4
        index, af, q, length = lines[1].split(",")
        assert int(index) == 0
        assert float(af) == cycles[0].af
        assert float(q) == cycles[0].q
        assert float(length) == pytest.approx(6.283)

    def test_shapes_csv(self, temp_dir):
        """Should write every shape sample under the shape header."""
        t, x, z = eccentric_trace(dt=0.1, t_end=4 * math.pi)
        path = write_trajectory(temp_dir / "coarse.csv", t, x, z)
        cycles = extract_cycles(SPHERE, read_trajectory_csv(path))
        lines = shapes_to_csv(cycles).splitlines()

        assert lines[0] == "cycle_index,s,qhat"
        assert len(lines) == 1 + sum(len(c.shape_s) for c in cycles)
