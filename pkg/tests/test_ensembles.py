"""Tests for seed-deterministic random streams."""

import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from hillgrowth.ensembles import DistributionKind, DistributionSpec, StreamHandle, moments, sample
from hillgrowth.errors import ConfigError

N = 1_000_000


class TestDistributionSpec:
    """Tests for distribution descriptions and their encodings."""

    @pytest.mark.parametrize(
        "text,kind,params",
        [
            ("const(2.5)", DistributionKind.CONSTANT, (2.5,)),
            ("uniform(0,1)", DistributionKind.UNIFORM, (0.0, 1.0)),
            ("loguniform(-2,2)", DistributionKind.LOG_UNIFORM, (-2.0, 2.0)),
            ("affine(1,-0.5)", DistributionKind.AFFINE, (1.0, -0.5)),
            ("twopoint(0.3)", DistributionKind.TWO_POINT, (0.3,)),
        ],
    )
    def test_parse_canonical(self, text, kind, params):
        """Should parse each canonical encoding and print it back unchanged."""
        spec = DistributionSpec.parse(text)

        assert spec.kind == kind
        assert spec.params == params
        assert spec.encode() == text

    def test_parse_tolerates_whitespace(self):
        """Should accept spaces around names and parameters."""
        assert DistributionSpec.parse(" uniform( -1 , 1 ) ") == DistributionSpec.uniform(-1, 1)

    @pytest.mark.parametrize(
        "text",
        ["gauss(0,1)", "uniform(1,0)", "uniform(0)", "const(a)", "loguniform", "uniform(0,inf)"],
    )
    def test_parse_rejects_invalid(self, text):
        """Should raise ConfigError for unknown families and bad parameters."""
        with pytest.raises(ConfigError):
            DistributionSpec.parse(text)

    def test_twopoint_amplitude_non_negative(self):
        """Should reject a negative two-point amplitude."""
        with pytest.raises(ConfigError):
            DistributionSpec.twopoint(-0.1)

    def test_support(self):
        """Should report the closed support of each family."""
        assert DistributionSpec.loguniform(-2, 2).support == (0.01, 100.0)
        assert DistributionSpec.affine(1, -0.5).support == (0.5, 1.0)
        assert DistributionSpec.twopoint(0.3).support == (-0.3, 0.3)

    def test_symmetry(self):
        """Should flag only distributions symmetric about zero."""
        assert DistributionSpec.uniform(-0.3, 0.3).is_symmetric
        assert DistributionSpec.twopoint(0.2).is_symmetric
        assert DistributionSpec.constant(0).is_symmetric
        assert not DistributionSpec.uniform(0, 1).is_symmetric
        assert not DistributionSpec.loguniform(-1, 1).is_symmetric

    @given(
        lo=st.floats(-10, 10),
        width=st.floats(1e-3, 10),
        u=st.floats(0, 1, exclude_max=True),
    )
    def test_transform_stays_in_support(self, lo, width, u):
        """Should map every uniform variate into the support."""
        spec = DistributionSpec.uniform(lo, lo + width)
        value = float(spec.transform(np.array([u]))[0])
        a, b = spec.support

        assert a - 1e-12 <= value <= b + 1e-12


class TestStreams:
    """Tests for counter-based sampling."""

    def test_constant(self):
        """Should return the constant at every index."""
        handle = StreamHandle(DistributionSpec.constant(2.5), seed=42)

        assert sample(handle, 0) == 2.5
        assert sample(handle, 10**9) == 2.5

    def test_value_is_function_of_index(self):
        """Should give the same value whichever block an index is drawn in."""
        handle = StreamHandle(DistributionSpec.uniform(0, 1), seed=42, stream=3)
        full = handle.block(0, 1000)

        np.testing.assert_array_equal(handle.block(301, 702), full[301:702])
        assert sample(handle, 517) == full[517]
        assert sample(handle, 517) == sample(handle, 517)

    def test_seeds_and_streams_differ(self):
        """Should produce different sequences for different seeds or stream labels."""
        spec = DistributionSpec.uniform(0, 1)
        a = StreamHandle(spec, 1).block(0, 100)
        b = StreamHandle(spec, 2).block(0, 100)
        c = StreamHandle(spec, 1, stream=1).block(0, 100)

        assert not np.array_equal(a, b)
        assert not np.array_equal(a, c)

    def test_with_spec_shares_variates(self):
        """Should push the same uniforms through a new distribution."""
        base = StreamHandle(DistributionSpec.uniform(0, 1), 7, stream=1)
        scaled = base.with_spec(DistributionSpec.uniform(-0.3, 0.3))

        np.testing.assert_allclose(scaled.block(0, 50), -0.3 + 0.6 * base.block(0, 50))

    def test_negative_index(self):
        """Should reject negative indices."""
        with pytest.raises(ValueError):
            sample(StreamHandle(DistributionSpec.uniform(0, 1), 1), -1)

    def test_invalid_seed(self):
        """Should reject seeds outside the 64-bit range."""
        with pytest.raises(ConfigError):
            StreamHandle(DistributionSpec.uniform(0, 1), 2**64)

    def test_loguniform_samples(self):
        """Should sample 10^u with log10 mean near zero and values in [0.01, 100]."""
        x = StreamHandle(DistributionSpec.loguniform(-2, 2), 42).block(0, N)

        assert x.min() >= 0.01
        assert x.max() <= 100.0
        assert abs(np.mean(np.log10(x))) < 0.01

    def test_affine_samples(self):
        """Should sample offset + scale * xi."""
        v = StreamHandle(DistributionSpec.affine(1, -0.5), 42).block(0, N)

        assert v.min() >= 0.5
        assert v.max() <= 1.0
        assert abs(np.mean(v) - 0.75) < 0.001

    def test_twopoint_samples(self):
        """Should sample +/- a with equal frequency."""
        v = StreamHandle(DistributionSpec.twopoint(0.3), 42).block(0, 100_000)

        assert set(np.unique(v).tolist()) == {-0.3, 0.3}
        assert abs(np.mean(v > 0) - 0.5) < 0.01

    def test_lag_autocorrelation(self):
        """Should show no serial correlation at lags 1 to 4."""
        v = StreamHandle(DistributionSpec.uniform(0, 1), 42).block(0, N)
        v = v - v.mean()

        for lag in range(1, 5):
            r = np.dot(v[:-lag], v[lag:]) / np.dot(v, v)
            assert abs(r) < 0.01

    @pytest.mark.parametrize(
        "spec", [DistributionSpec.uniform(-0.3, 0.3), DistributionSpec.twopoint(0.3)]
    )
    def test_symmetric_odd_moments_vanish(self, spec):
        """Should give first and third sample moments within 3 standard errors of zero."""
        eta = StreamHandle(spec, 42).block(0, N)

        for p in (1, 3):
            values = eta**p
            assert abs(values.mean()) < 3 * values.std() / math.sqrt(N)


class TestMoments:
    """Tests for closed-form raw moments."""

    def test_symmetric_uniform(self):
        """Should give a^2/3 and 0 for uniform(-a, a)."""
        second, first = moments(DistributionSpec.uniform(-0.3, 0.3), [2, 1])

        assert second == pytest.approx(0.03)
        assert first == pytest.approx(0.0, abs=1e-15)

    def test_loguniform_reciprocal(self):
        """Should match the analytic <1/x> of log-uniform x and a Monte Carlo check."""
        spec = DistributionSpec.loguniform(-2, 2)
        (inv,) = moments(spec, [-1])
        x = StreamHandle(spec, 42).block(0, N)

        assert inv == pytest.approx((100 - 0.01) / (4 * math.log(10)))
        assert np.mean(1.0 / x) == pytest.approx(inv, rel=0.01)

    def test_constant_and_twopoint(self):
        """Should give c^p for constants and symmetric powers for two-point."""
        assert moments(DistributionSpec.constant(2.0), [3, -1]) == [8.0, 0.5]
        assert moments(DistributionSpec.twopoint(0.5), [1, 2]) == [0.0, 0.25]

    def test_affine_reciprocal(self):
        """Should use the logarithmic formula for p = -1 on an interval."""
        (inv,) = moments(DistributionSpec.affine(1, -0.5), [-1])

        assert inv == pytest.approx(math.log(2) / 0.5)

    def test_negative_moment_through_zero(self):
        """Should refuse negative moments when the support contains zero."""
        with pytest.raises(NotImplementedError):
            moments(DistributionSpec.uniform(-1, 1), [-1])
