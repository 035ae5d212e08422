"""Epoch segmentation, DFT power, and relative band powers."""

import numpy as np
import pytest
from sklearn.base import clone

from somnostage.edf import SampleSeries
from somnostage.spectral import (
    BANDS,
    BAND_NAMES,
    BandPowerTransform,
    Epoch,
    SpectralFeatures,
    UnclassifiableEpochError,
    dft_power,
    epoch_features,
    extract_features,
    format_features,
    parse_features,
    power_spectrum,
    relative_band_powers,
    segment_epochs,
)

RATE = 256.0


def _series(samples, rate=RATE):
    return SampleSeries(samples=np.asarray(samples, dtype=float), sampling_rate=rate,
                        label="EEG C3-A2")


def _sine_epoch(freqs_and_amps, duration_s=30.0, rate=RATE, index=0):
    t = np.arange(int(rate * duration_s)) / rate
    samples = np.zeros_like(t)
    for f, a in freqs_and_amps:
        samples = samples + a * np.sin(2 * np.pi * f * t)
    return Epoch(index=index, samples=samples, sampling_rate=rate, duration_s=duration_s)


def naive_dft_power(samples):
    """O(N^2) reference: power via the DFT definition, no FFT anywhere."""
    samples = np.asarray(samples, dtype=float)
    n = samples.size
    k = np.arange(n)
    angles = -2.0 * np.pi * np.outer(k, k) / n
    real = (np.cos(angles) * samples).sum(axis=1)
    imag = (np.sin(angles) * samples).sum(axis=1)
    return real**2 + imag**2


class TestSegmentEpochs:
    def test_exact_multiple(self):
        epochs = segment_epochs(_series(np.zeros(int(RATE * 90))))
        assert len(epochs) == 3
        assert all(len(e) == 7680 for e in epochs)
        assert [e.index for e in epochs] == [0, 1, 2]

    def test_trailing_partial_window_dropped(self):
        epochs = segment_epochs(_series(np.zeros(int(RATE * 95))))
        assert len(epochs) == 3

    def test_whole_night(self):
        epochs = segment_epochs(_series(np.zeros(int(RATE * 33420))))
        assert len(epochs) == 1114

    def test_empty_series(self):
        assert segment_epochs(_series(np.zeros(0))) == []

    def test_non_integer_samples_per_epoch(self):
        with pytest.raises(ValueError, match="whole number"):
            segment_epochs(_series(np.zeros(100), rate=3.0), duration_s=10.1)

    def test_windows_are_consecutive(self):
        samples = np.arange(int(RATE * 60), dtype=float)
        epochs = segment_epochs(_series(samples))
        np.testing.assert_array_equal(epochs[1].samples, samples[7680:15360])


class TestPowerSpectrum:
    def test_pure_10hz_tone_lands_in_one_bin(self):
        spectrum = power_spectrum(_sine_epoch([(10.0, 25.0)]))
        peak = int(np.argmax(spectrum.power))
        assert spectrum.bin_hz[peak] == 10.0
        others = np.delete(spectrum.power, peak)
        assert np.max(others) <= 1e-9 * spectrum.power[peak]

    def test_retained_bins_cover_the_crop_inclusively(self):
        spectrum = power_spectrum(_sine_epoch([(10.0, 1.0)]))
        assert spectrum.bin_hz[0] == 0.5
        assert spectrum.bin_hz[-1] == 32.0
        assert spectrum.resolution_hz == pytest.approx(1.0 / 30.0)
        assert spectrum.power.size == 946

    def test_dc_epoch_has_zero_retained_power(self):
        epoch = Epoch(0, np.full(7680, 3.7), RATE, 30.0)
        spectrum = power_spectrum(epoch)
        assert np.max(spectrum.power) <= 1e-12

    def test_two_equal_tones_give_two_equal_bins(self):
        spectrum = power_spectrum(_sine_epoch([(2.0, 5.0), (20.0, 5.0)]))
        hot = np.flatnonzero(spectrum.power > 1e-9 * np.max(spectrum.power))
        assert list(spectrum.bin_hz[hot]) == [2.0, 20.0]
        assert spectrum.power[hot[0]] == pytest.approx(spectrum.power[hot[1]], rel=1e-9)

    def test_too_short_epoch(self):
        with pytest.raises(ValueError, match="at least 2 samples"):
            power_spectrum(Epoch(0, np.zeros(1), sampling_rate=1.0, duration_s=1.0))

    def test_sampling_too_slow_for_32hz(self):
        epoch = Epoch(0, np.zeros(50), sampling_rate=50.0, duration_s=1.0)
        with pytest.raises(ValueError, match="cannot represent"):
            power_spectrum(epoch)

    def test_matches_naive_dft(self):
        rng = np.random.default_rng(42)
        for n in (2, 3, 5, 16, 100, 257, 512):
            samples = rng.normal(0.0, 1.0, n)
            fast = dft_power(samples)
            slow = naive_dft_power(samples)
            scale = np.max(slow) + 1e-30
            np.testing.assert_allclose(fast / scale, slow / scale, atol=1e-9)

    def test_cropping_matches_naive_dft(self):
        rng = np.random.default_rng(43)
        epoch = Epoch(0, rng.normal(0.0, 10.0, 512), sampling_rate=256.0, duration_s=2.0)
        spectrum = power_spectrum(epoch)
        slow = naive_dft_power(epoch.samples)
        # bins 1..64 cover 0.5..32 Hz at 0.5 Hz spacing
        np.testing.assert_allclose(spectrum.power, slow[1:65], rtol=1e-9)

    def test_parseval(self):
        rng = np.random.default_rng(7)
        for _ in range(25):
            samples = rng.normal(0.0, 20.0, 7680)
            total = float(np.sum(dft_power(samples)))
            expected = samples.size * float(np.sum(samples * samples))
            assert total == pytest.approx(expected, rel=1e-6)


class TestRelativeBandPowers:
    def test_single_alpha_tone(self):
        features = epoch_features(_sine_epoch([(10.0, 25.0)]))
        np.testing.assert_allclose(features.rsp, [0, 0, 1, 0, 0], atol=1e-9)

    def test_delta_beta_even_split(self):
        features = epoch_features(_sine_epoch([(2.0, 5.0), (20.0, 5.0)]))
        np.testing.assert_allclose(features.rsp, [0.5, 0, 0, 0, 0.5], atol=1e-9)

    def test_band_edges_belong_to_the_lower_band(self):
        # 4 Hz closes delta's interval; 4 + 1/30 Hz opens theta's
        features = epoch_features(_sine_epoch([(4.0, 1.0)]))
        np.testing.assert_allclose(features.rsp, [1, 0, 0, 0, 0], atol=1e-9)
        features = epoch_features(_sine_epoch([(4.0 + 1.0 / 30.0, 1.0)]))
        np.testing.assert_allclose(features.rsp, [0, 1, 0, 0, 0], atol=1e-9)

    def test_half_hz_bin_counts_toward_delta(self):
        features = epoch_features(_sine_epoch([(0.5, 1.0)]))
        np.testing.assert_allclose(features.rsp, [1, 0, 0, 0, 0], atol=1e-9)

    def test_32hz_bin_counts_toward_beta(self):
        features = epoch_features(_sine_epoch([(32.0, 1.0)]))
        np.testing.assert_allclose(features.rsp, [0, 0, 0, 0, 1], atol=1e-9)

    def test_all_zero_spectrum_is_unclassifiable(self):
        with pytest.raises(UnclassifiableEpochError):
            epoch_features(Epoch(0, np.zeros(7680), RATE, 30.0))

    def test_normalization(self):
        rng = np.random.default_rng(3)
        for _ in range(20):
            epoch = Epoch(0, rng.normal(0.0, 5.0, 7680), RATE, 30.0)
            assert float(np.sum(epoch_features(epoch).rsp)) == pytest.approx(1.0, abs=1e-9)

    def test_scale_invariance(self):
        rng = np.random.default_rng(4)
        samples = rng.normal(0.0, 5.0, 7680)
        base = epoch_features(Epoch(0, samples, RATE, 30.0)).rsp
        scaled = epoch_features(Epoch(0, 7.3 * samples, RATE, 30.0)).rsp
        np.testing.assert_allclose(scaled, base, atol=1e-9)

    def test_bands_tile_the_retained_spectrum(self):
        spectrum = power_spectrum(_sine_epoch([(10.0, 1.0), (2.0, 0.5)]))
        from somnostage.spectral import _band_masks

        masks = np.array(_band_masks(spectrum.bin_hz))
        assert (masks.sum(axis=0) == 1).all()  # each bin in exactly one band
        assert masks.sum(axis=1).tolist() == [106, 120, 120, 120, 480]
        band_total = sum(float(spectrum.power[m].sum()) for m in masks)
        assert band_total == float(spectrum.power.sum())

    def test_white_noise_matches_bandwidth_fractions(self):
        rng = np.random.default_rng(11)
        expected = np.array([3.5, 4.0, 4.0, 4.0, 16.0]) / 31.5
        total = np.zeros(5)
        for _ in range(100):
            epoch = Epoch(0, rng.normal(0.0, 10.0, 7680), RATE, 30.0)
            total += epoch_features(epoch).rsp
        np.testing.assert_allclose(total / 100, expected, atol=0.03)

    def test_features_validate_shape_and_range(self):
        with pytest.raises(ValueError, match="5 values"):
            SpectralFeatures(rsp=np.array([1.0, 0.0]))
        with pytest.raises(ValueError, match="sum to 1"):
            SpectralFeatures(rsp=np.array([0.5, 0.1, 0.1, 0.1, 0.1]))


class TestExtractFeatures:
    def test_nan_rows_for_unclassifiable_epochs(self):
        good = _sine_epoch([(10.0, 25.0)]).samples
        flat = np.zeros(7680)
        features = extract_features(_series(np.concatenate([good, flat, good])))
        assert features.shape == (3, 5)
        assert np.isnan(features[1]).all()
        np.testing.assert_allclose(features[0], [0, 0, 1, 0, 0], atol=1e-9)
        np.testing.assert_allclose(features[2], features[0], atol=1e-12)

    def test_empty_series_gives_empty_matrix(self):
        assert extract_features(_series(np.zeros(0))).shape == (0, 5)


class TestFeatureFiles:
    def test_roundtrip_with_nan_row(self):
        rng = np.random.default_rng(5)
        rows = rng.dirichlet(np.ones(5), size=4)
        rows[2] = np.nan
        text = format_features(rows)
        assert text.splitlines()[0] == "epoch,delta,theta,alpha,sigma,beta"
        back = parse_features(text)
        np.testing.assert_array_equal(np.isnan(back), np.isnan(rows))
        np.testing.assert_array_equal(back[~np.isnan(rows)], rows[~np.isnan(rows)])

    def test_ten_wide_header(self):
        rows = np.tile(np.full(10, 0.1), (2, 1))
        text = format_features(rows)
        header = text.splitlines()[0]
        assert header == "epoch,delta,theta,alpha,sigma,beta,delta2,theta2,alpha2,sigma2,beta2"
        np.testing.assert_allclose(parse_features(text), rows)

    def test_bad_header(self):
        with pytest.raises(ValueError, match="line 1"):
            parse_features("epoch,a,b\n0,1,2\n")

    def test_wrong_column_count(self):
        text = "epoch,delta,theta,alpha,sigma,beta\n0,1,2\n"
        with pytest.raises(ValueError, match="line 2: expected 6 columns"):
            parse_features(text)

    def test_non_numeric_value(self):
        text = "epoch,delta,theta,alpha,sigma,beta\n0,1,2,3,4,oops\n"
        with pytest.raises(ValueError, match="line 2: non-numeric"):
            parse_features(text)

    def test_epoch_column_must_match_row_order(self):
        text = "epoch,delta,theta,alpha,sigma,beta\n1,0.2,0.2,0.2,0.2,0.2\n"
        with pytest.raises(ValueError, match="out of order"):
            parse_features(text)

    def test_empty_file(self):
        with pytest.raises(ValueError, match="empty"):
            parse_features("")

    def test_width_must_be_5_or_10(self):
        with pytest.raises(ValueError, match="width must be 5 or 10"):
            format_features(np.zeros((2, 7)))


class TestBandPowerTransform:
    def test_matches_extract_features(self):
        good = _sine_epoch([(10.0, 25.0)]).samples
        other = _sine_epoch([(2.0, 10.0), (14.0, 10.0)]).samples
        stacked = np.vstack([good, other])
        transform = BandPowerTransform(sampling_rate=RATE)
        out = transform.fit_transform(stacked)
        series_features = extract_features(_series(np.concatenate([good, other])))
        np.testing.assert_allclose(out, series_features, atol=1e-12)

    def test_nan_for_flat_rows(self):
        out = BandPowerTransform(sampling_rate=RATE).transform(np.zeros((1, 7680)))
        assert np.isnan(out).all()

    def test_sklearn_clone_and_params(self):
        transform = BandPowerTransform(sampling_rate=128.0)
        assert transform.get_params() == {"sampling_rate": 128.0}
        assert clone(transform).get_params() == {"sampling_rate": 128.0}

    def test_invalid_rate(self):
        with pytest.raises(ValueError, match="sampling_rate"):
            BandPowerTransform(sampling_rate=0.0).fit()


def test_band_constants():
    assert BAND_NAMES == ("delta", "theta", "alpha", "sigma", "beta")
    assert [(low, high) for _, low, high in BANDS] == [
        (0.5, 4.0), (4.0, 8.0), (8.0, 12.0), (12.0, 16.0), (16.0, 32.0)
    ]
