"""ABOUTME: Tests for Singularity Stochastic Removal and the extended quantile-mapping transfer.
ABOUTME: Hand-evaluated branch values, identity mappings, dry-day bookkeeping and degenerate references."""

import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from hypothesis.extra.numpy import arrays

from stitchqm.correction.ssr import (
    SSRConfig,
    TransferFunction,
    build_transfer,
    dry_fraction,
    extended_cdf,
    extended_inverse,
    quantile_map,
    resolve_threshold,
    ssr_jitter,
)
from stitchqm.distributions.models import EmpiricalModel, ExpWParams
from stitchqm.exceptions import InsufficientSampleError, ProbabilityDomainError

EXP_MEAN_2 = ExpWParams(k=1.0, lam=2.0, alpha=1.0, shift=1.0)
EXP_MEAN_3 = ExpWParams(k=1.0, lam=3.0, alpha=1.0, shift=1.0)


def _transfer(mod_alpha: float = 0.4, obs_alpha: float = 0.4, **kwargs: object) -> TransferFunction:
    fields: dict[str, object] = {
        "mod_model": EXP_MEAN_2,
        "obs_model": EXP_MEAN_2,
        "alpha_mod": mod_alpha,
        "alpha_obs": obs_alpha,
        "threshold_mm": 1.0,
    }
    fields.update(kwargs)
    return TransferFunction.model_validate(fields)


class TestSsrJitter:
    """Tests for ssr_jitter."""

    def test_wet_days_unchanged(self) -> None:
        """A series entirely at or above the threshold passes through."""
        series = np.array([1.0, 2.5, 7.0])
        np.testing.assert_array_equal(ssr_jitter(series, SSRConfig()), series)

    def test_dry_days_uniform(self) -> None:
        """All-dry days become uniforms on (0, 1) with mean near 1/2."""
        jittered = ssr_jitter(np.zeros(100_000), SSRConfig(seed=3))
        assert np.all((jittered > 0.0) & (jittered < 1.0))
        assert jittered.mean() == pytest.approx(0.5, abs=0.01)

    def test_deterministic(self) -> None:
        """The same seed and key give bit-identical output."""
        cfg = SSRConfig(seed=11)
        first = ssr_jitter([0.0, 2.0, 0.0], cfg, stream_key=(1, 2, 0))
        second = ssr_jitter([0.0, 2.0, 0.0], cfg, stream_key=(1, 2, 0))
        assert first.tobytes() == second.tobytes()

    def test_keys_give_distinct_streams(self) -> None:
        """Different pixels draw different values."""
        cfg = SSRConfig(seed=11)
        assert not np.array_equal(ssr_jitter(np.zeros(5), cfg, (0, 0, 0)), ssr_jitter(np.zeros(5), cfg, (0, 1, 0)))

    def test_nan_kept(self) -> None:
        """Missing days stay missing."""
        assert np.isnan(ssr_jitter([np.nan, 0.0], SSRConfig())[0])

    @given(arrays(np.float64, st.integers(1, 50), elements=st.floats(0.0, 20.0)))
    @settings(max_examples=50, deadline=None)
    def test_bounds(self, series: np.ndarray) -> None:
        """Sub-threshold values land in (0, th); others are untouched."""
        jittered = ssr_jitter(series, SSRConfig(threshold_mm=1.0))
        below = series < 1.0
        assert np.all((jittered[below] > 0.0) & (jittered[below] < 1.0))
        np.testing.assert_array_equal(jittered[~below], series[~below])


class TestExtendedCdf:
    """Tests for extended_cdf."""

    def test_origin(self) -> None:
        """x = 0 maps to 0."""
        assert extended_cdf(_transfer(), 0.0) == 0.0

    def test_junction(self) -> None:
        """x = th maps to alpha_mod."""
        assert extended_cdf(_transfer(mod_alpha=0.4), 1.0) == pytest.approx(0.4)

    def test_hand_value(self) -> None:
        """alpha 0.4, exponential mean 2 at x = 3 gives 0.4 + 0.6 (1 - e^-1)."""
        expected = 0.4 + 0.6 * (1.0 - math.exp(-1.0))
        assert extended_cdf(_transfer(mod_alpha=0.4), 3.0) == pytest.approx(expected, abs=1e-6)
        assert expected == pytest.approx(0.7793, abs=1e-4)

    def test_linear_below_threshold(self) -> None:
        """Below th the dry mass is spread linearly."""
        assert extended_cdf(_transfer(mod_alpha=0.4), 0.5) == pytest.approx(0.2)

    def test_missing_mod_model(self) -> None:
        """Without a model-reference wet model wet days map to 1."""
        assert extended_cdf(_transfer(mod_model=None), 4.0) == 1.0


class TestExtendedInverse:
    """Tests for extended_inverse."""

    def test_zero(self) -> None:
        """p = 0 maps to 0."""
        assert extended_inverse(_transfer(), 0.0) == 0.0

    def test_junction(self) -> None:
        """p = alpha_obs maps to the threshold."""
        assert extended_inverse(_transfer(obs_alpha=0.5), 0.5) == pytest.approx(1.0)

    def test_hand_value(self) -> None:
        """alpha 0.5, exponential mean 2 shifted 1, p = 0.75 gives 1 + 2 ln 2."""
        expected = 1.0 + 2.0 * math.log(2.0)
        assert extended_inverse(_transfer(obs_alpha=0.5), 0.75) == pytest.approx(expected, abs=1e-6)
        assert expected == pytest.approx(2.386, abs=1e-3)

    def test_round_trip(self) -> None:
        """Identical transfers invert each other above the threshold."""
        tf = _transfer(mod_alpha=0.3, obs_alpha=0.3)
        x = np.linspace(1.0, 25.0, 200)
        np.testing.assert_allclose(extended_inverse(tf, extended_cdf(tf, x)), x, rtol=0, atol=1e-8)

    def test_probability_one_capped(self) -> None:
        """p = 1 maps to the empirical maximum through p_cap."""
        obs = EmpiricalModel(sorted_sample=(1.5, 2.0, 4.0, 8.0))
        tf = build_transfer(
            obs_model=obs, alpha_obs=0.5, obs_wet_count=4, mod_model=obs, alpha_mod=0.5, threshold_mm=1.0
        )
        assert tf.p_cap == pytest.approx(0.8)
        assert extended_inverse(tf, 1.0) == 8.0

    def test_parametric_probability_one_finite(self) -> None:
        """p = 1 stays finite for unbounded parametric models."""
        tf = build_transfer(
            obs_model=EXP_MEAN_2, alpha_obs=0.5, obs_wet_count=99, mod_model=EXP_MEAN_2, alpha_mod=0.5, threshold_mm=1.0
        )
        assert np.isfinite(extended_inverse(tf, 1.0))

    def test_out_of_domain(self) -> None:
        """Probabilities outside [0, 1] raise."""
        with pytest.raises(ProbabilityDomainError):
            extended_inverse(_transfer(), 1.2)

    def test_missing_obs_model(self) -> None:
        """Without observed wet days everything above alpha_obs is dry."""
        assert extended_inverse(_transfer(obs_model=None, obs_alpha=0.5), 0.9) == 0.0

    def test_zero_dry_observations(self) -> None:
        """alpha_obs = 0 skips the linear branch."""
        tf = build_transfer(
            obs_model=EXP_MEAN_2, alpha_obs=0.0, obs_wet_count=50, mod_model=EXP_MEAN_2, alpha_mod=0.2, threshold_mm=1.0
        )
        assert tf.zero_dry_obs
        assert extended_inverse(tf, 0.0) == pytest.approx(1.0)
        assert extended_inverse(tf, 0.5) == pytest.approx(1.0 + 2.0 * math.log(2.0))


class TestQuantileMap:
    """Tests for quantile_map."""

    def test_identity_transfer(self) -> None:
        """Identical references keep wet days and zero the sub-threshold ones."""
        tf = _transfer(mod_alpha=0.3, obs_alpha=0.3)
        future = np.array([0.0, 0.4, 1.0, 2.5, 12.0, 0.9])
        corrected = quantile_map(tf, future, SSRConfig(seed=1))
        wet = future >= 1.0
        np.testing.assert_allclose(corrected[wet], future[wet], rtol=0, atol=1e-8)
        np.testing.assert_array_equal(corrected[~wet], 0.0)

    def test_dry_count_preserved(self) -> None:
        """Equal alphas and wet models keep the number of dry days."""
        rng = np.random.default_rng(5)
        future = np.where(rng.random(5000) < 0.4, 0.0, 1.0 + rng.exponential(2.0, 5000))
        corrected = quantile_map(_transfer(mod_alpha=0.4, obs_alpha=0.4), future, SSRConfig(seed=2))
        assert np.count_nonzero(corrected == 0.0) == np.count_nonzero(future < 1.0)

    def test_preserves_order_and_nan(self) -> None:
        """Length is kept and missing days stay missing."""
        future = np.array([np.nan, 3.0, 0.0])
        corrected = quantile_map(_transfer(), future, SSRConfig())
        assert corrected.shape == future.shape
        assert np.isnan(corrected[0])
        assert not np.isnan(corrected[1:]).any()

    def test_scale_correction(self) -> None:
        """Mapping exponential mean 3 onto mean 2 recovers the observed wet-day mean."""
        rng = np.random.default_rng(9)
        n = 200_000
        future = np.where(rng.random(n) < 0.4, 0.0, 1.0 + rng.exponential(3.0, n))
        tf = TransferFunction(
            mod_model=EXP_MEAN_3, obs_model=EXP_MEAN_2, alpha_mod=0.4, alpha_obs=0.4, threshold_mm=1.0
        )
        corrected = quantile_map(tf, future, SSRConfig(seed=4))
        wet = corrected[corrected > 1.0]
        assert wet.mean() == pytest.approx(3.0, rel=0.02)

    def test_dry_fraction_follows_observations(self) -> None:
        """The corrected dry fraction matches alpha_obs within 1/n."""
        rng = np.random.default_rng(10)
        n = 4000
        future = np.where(rng.random(n) < 0.5, 0.0, 1.0 + rng.exponential(3.0, n))
        alpha_mod = dry_fraction(future, 1.0)
        tf = TransferFunction(
            mod_model=EXP_MEAN_3, obs_model=EXP_MEAN_2, alpha_mod=alpha_mod, alpha_obs=0.6, threshold_mm=1.0
        )
        corrected = quantile_map(tf, future, SSRConfig(seed=4))
        assert dry_fraction(corrected, 1.0) == pytest.approx(0.6, abs=0.03)

    def test_missing_obs_model_all_dry(self) -> None:
        """A reference without observed wet days gives an all-dry output."""
        tf = _transfer(obs_model=None, obs_alpha=1.0)
        corrected = quantile_map(tf, [0.0, 3.0, 10.0], SSRConfig())
        np.testing.assert_array_equal(corrected, 0.0)


class TestThresholds:
    """Tests for resolve_threshold and dry_fraction."""

    def test_common_threshold(self) -> None:
        """The common mode returns the configured value."""
        assert resolve_threshold(SSRConfig(threshold_mm=1.0), [0.0, 0.2]) == 1.0

    def test_dataset_minimum(self) -> None:
        """The minimum mode returns the smallest positive value over all series."""
        cfg = SSRConfig(mode="dataset_minimum")
        assert resolve_threshold(cfg, [0.0, 0.3, 2.0], [np.nan, 0.1, 4.0]) == pytest.approx(0.1)

    def test_dataset_minimum_fallback(self) -> None:
        """Without any positive value the configured threshold is used."""
        cfg = SSRConfig(threshold_mm=1.0, mode="dataset_minimum")
        assert resolve_threshold(cfg, [0.0, 0.0]) == 1.0

    def test_dry_fraction_ignores_nan(self) -> None:
        """NaN days leave both numerator and denominator."""
        assert dry_fraction([0.0, 2.0, np.nan, 0.5], 1.0) == pytest.approx(2.0 / 3.0)

    def test_dry_fraction_no_valid_day(self) -> None:
        """An all-missing series raises."""
        with pytest.raises(InsufficientSampleError):
            dry_fraction([np.nan, np.nan], 1.0)
