"""Per-epoch relative spectral band powers from a raw EEG signal.

The signal is cut into consecutive 30 s epochs. Each epoch gets an exact
discrete Fourier transform (rectangular window, no zero-padding), the
squared-magnitude spectrum is cropped to 0.5 through 32 Hz inclusive, and
the power in five frequency bands is expressed as a fraction of the total
retained power. A 30 s epoch has 1/30 Hz resolution, so every band edge
lands exactly on a bin and no interpolation is needed.
"""

from __future__ import annotations

from dataclasses import dataclass
from pathlib import Path

import numpy as np
from sklearn.base import BaseEstimator, TransformerMixin

DEFAULT_EPOCH_SECONDS = 30.0
LOW_CUTOFF_HZ = 0.5
HIGH_CUTOFF_HZ = 32.0

#: (name, low edge, high edge) in Hz. Each band is the half-open interval
#: ]low, high], except delta whose 0.5 Hz edge is closed; together the five
#: bands tile the retained spectrum exactly.
BANDS = (
    ("delta", 0.5, 4.0),
    ("theta", 4.0, 8.0),
    ("alpha", 8.0, 12.0),
    ("sigma", 12.0, 16.0),
    ("beta", 16.0, 32.0),
)
BAND_NAMES = tuple(name for name, _, _ in BANDS)


class UnclassifiableEpochError(ValueError):
    """Raised for an epoch with zero retained spectral power; such an epoch
    has no defined relative band powers."""


@dataclass(frozen=True)
class Epoch:
    """One fixed-duration window of a signal."""

    index: int
    samples: np.ndarray
    sampling_rate: float
    duration_s: float = DEFAULT_EPOCH_SECONDS

    def __post_init__(self):
        samples = np.asarray(self.samples, dtype=np.float64)
        if samples.ndim != 1:
            raise ValueError("epoch samples must be a 1-D array")
        if self.sampling_rate <= 0 or self.duration_s <= 0:
            raise ValueError("sampling_rate and duration_s must be positive")
        expected = self.sampling_rate * self.duration_s
        if abs(samples.size - expected) > 1e-9:
            raise ValueError(
                f"epoch length {samples.size} != sampling_rate x duration_s = {expected}"
            )
        object.__setattr__(self, "samples", samples)

    def __len__(self) -> int:
        return self.samples.size


@dataclass(frozen=True)
class Spectrum:
    """Cropped power spectrum of one epoch."""

    bin_hz: np.ndarray
    power: np.ndarray
    resolution_hz: float

    def __post_init__(self):
        bin_hz = np.asarray(self.bin_hz, dtype=np.float64)
        power = np.asarray(self.power, dtype=np.float64)
        if bin_hz.shape != power.shape or bin_hz.ndim != 1 or bin_hz.size == 0:
            raise ValueError("bin_hz and power must be matching non-empty 1-D arrays")
        if np.any(np.diff(bin_hz) <= 0):
            raise ValueError("bin frequencies must be strictly increasing")
        if np.any(power < 0):
            raise ValueError("power must be non-negative")
        object.__setattr__(self, "bin_hz", bin_hz)
        object.__setattr__(self, "power", power)

    @property
    def total_power(self) -> float:
        return float(np.sum(self.power))


@dataclass(frozen=True)
class SpectralFeatures:
    """Relative spectral power per band (delta, theta, alpha, sigma, beta).

    Each value is the band's share of the total retained power, so the five
    values are in [0, 1] and sum to 1.
    """

    rsp: np.ndarray

    def __post_init__(self):
        rsp = np.asarray(self.rsp, dtype=np.float64)
        if rsp.shape != (len(BANDS),):
            raise ValueError(f"rsp must have {len(BANDS)} values, got shape {rsp.shape}")
        if np.any(rsp < -1e-12) or np.any(rsp > 1 + 1e-12):
            raise ValueError("relative powers must lie in [0, 1]")
        if abs(float(np.sum(rsp)) - 1.0) > 1e-9:
            raise ValueError("relative powers must sum to 1")
        object.__setattr__(self, "rsp", rsp)

    def as_dict(self) -> dict[str, float]:
        return {name: float(v) for name, v in zip(BAND_NAMES, self.rsp)}


def segment_epochs(series, duration_s: float = DEFAULT_EPOCH_SECONDS) -> list[Epoch]:
    """Cut a SampleSeries into consecutive non-overlapping epochs.

    A trailing partial window is dropped; an empty series yields an empty
    list. Raises ``ValueError`` if sampling_rate x duration_s is not a
    whole number of samples.
    """
    if duration_s <= 0:
        raise ValueError("duration_s must be positive")
    per_epoch = series.sampling_rate * duration_s
    if abs(per_epoch - round(per_epoch)) > 1e-9:
        raise ValueError(
            f"{series.sampling_rate} Hz x {duration_s} s = {per_epoch} samples per epoch; "
            "must be a whole number"
        )
    per_epoch = int(round(per_epoch))
    samples = np.asarray(series.samples, dtype=np.float64)
    count = samples.size // per_epoch
    return [
        Epoch(
            index=i,
            samples=samples[i * per_epoch : (i + 1) * per_epoch],
            sampling_rate=series.sampling_rate,
            duration_s=duration_s,
        )
        for i in range(count)
    ]


def dft_power(samples) -> np.ndarray:
    """Squared magnitudes of the full discrete Fourier transform, all N bins.

    This is the power definition shared by ``power_spectrum`` and the
    Parseval identity sum(dft_power(x)) = N * sum(x**2).
    """
    coefficients = np.fft.fft(np.asarray(samples, dtype=np.float64))
    return np.abs(coefficients) ** 2


def power_spectrum(epoch: Epoch) -> Spectrum:
    """Exact DFT power of an unmodified epoch, cropped to 0.5 through 32 Hz.

    No window is applied and the epoch is not zero-padded, so bin spacing is
    exactly 1/duration_s. Raises ``ValueError`` for epochs shorter than two
    samples or too slowly sampled to reach 32 Hz.
    """
    n = len(epoch)
    if n < 2:
        raise ValueError(f"epoch must hold at least 2 samples, got {n}")
    # Bin k sits at k / duration_s Hz; pick k so the retained bins cover
    # [0.5, 32] inclusive.
    low_bin = int(np.ceil(LOW_CUTOFF_HZ * epoch.duration_s - 1e-9))
    high_bin = int(np.floor(HIGH_CUTOFF_HZ * epoch.duration_s + 1e-9))
    if high_bin > n // 2:
        raise ValueError(
            f"sampling rate {epoch.sampling_rate} Hz cannot represent {HIGH_CUTOFF_HZ} Hz"
        )
    power = dft_power(epoch.samples)
    bins = np.arange(low_bin, high_bin + 1)
    return Spectrum(
        bin_hz=bins / epoch.duration_s,
        power=power[low_bin : high_bin + 1],
        resolution_hz=1.0 / epoch.duration_s,
    )


def _band_masks(bin_hz: np.ndarray) -> list[np.ndarray]:
    masks = []
    for i, (_, low, high) in enumerate(BANDS):
        above = bin_hz >= low if i == 0 else bin_hz > low
        masks.append(above & (bin_hz <= high))
    return masks


def relative_band_powers(spectrum: Spectrum) -> SpectralFeatures:
    """Band powers as fractions of the total retained power.

    band_power_i = sum of power over band i; total = sum of the five band
    powers; rsp_i = band_power_i / total. Raises ``UnclassifiableEpochError``
    when the total is zero, which no valid feature vector can express.
    """
    band_power = np.array(
        [float(np.sum(spectrum.power[mask])) for mask in _band_masks(spectrum.bin_hz)]
    )
    total = float(np.sum(band_power))
    if total <= 0.0:
        raise UnclassifiableEpochError("epoch has zero retained spectral power")
    return SpectralFeatures(rsp=band_power / total)


def epoch_features(epoch: Epoch) -> SpectralFeatures:
    """Relative band powers of one epoch (spectrum pipeline in one call)."""
    return relative_band_powers(power_spectrum(epoch))


def extract_features(series, duration_s: float = DEFAULT_EPOCH_SECONDS) -> np.ndarray:
    """Per-epoch feature matrix for a whole signal, shape (n_epochs, 5).

    Unclassifiable epochs (zero retained power) yield a row of nan so the
    row index always equals the epoch index.
    """
    rows = np.full((0, len(BANDS)), np.nan)
    epochs = segment_epochs(series, duration_s)
    if epochs:
        rows = np.full((len(epochs), len(BANDS)), np.nan)
        for epoch in epochs:
            try:
                rows[epoch.index] = epoch_features(epoch).rsp
            except UnclassifiableEpochError:
                pass
    return rows


def _feature_header(width: int) -> str:
    if width == 5:
        return "epoch," + ",".join(BAND_NAMES)
    if width == 10:
        return "epoch," + ",".join(BAND_NAMES) + "," + ",".join(f"{b}2" for b in BAND_NAMES)
    raise ValueError(f"feature width must be 5 or 10, got {width}")


def format_features(features) -> str:
    """Render a feature matrix as comma-separated text.

    Header names the epoch column and the five bands (ten for two-channel
    features, second channel suffixed ``2``); floats carry 17 significant
    digits so values round-trip exactly; nan rows stay nan.
    """
    features = np.asarray(features, dtype=np.float64)
    if features.ndim != 2:
        raise ValueError("features must be a 2-D array")
    lines = [_feature_header(features.shape[1])]
    for i, row in enumerate(features):
        lines.append(f"{i}," + ",".join(format(v, ".17g") for v in row))
    return "\n".join(lines) + "\n"


def write_features(path, features) -> None:
    Path(path).write_text(format_features(features))


def parse_features(text: str) -> np.ndarray:
    """Inverse of ``format_features``: text to an (n_epochs, 5 or 10) matrix.

    Raises ``ValueError`` naming the line for a bad header, a wrong column
    count, a non-numeric value, or an epoch column that does not match the
    row order.
    """
    lines = [line for line in text.splitlines() if line.strip()]
    if not lines:
        raise ValueError("feature file is empty")
    for width in (5, 10):
        if lines[0] == _feature_header(width):
            break
    else:
        raise ValueError(f"line 1: unrecognized feature header {lines[0]!r}")
    rows = np.full((len(lines) - 1, width), np.nan)
    for lineno, line in enumerate(lines[1:], start=2):
        parts = line.split(",")
        if len(parts) != width + 1:
            raise ValueError(f"line {lineno}: expected {width + 1} columns, got {len(parts)}")
        try:
            epoch = int(parts[0])
            values = [float(p) for p in parts[1:]]
        except ValueError:
            raise ValueError(f"line {lineno}: non-numeric value") from None
        if epoch != lineno - 2:
            raise ValueError(f"line {lineno}: epoch {epoch} out of order (expected {lineno - 2})")
        rows[lineno - 2] = values
    return rows


def read_features(path) -> np.ndarray:
    return parse_features(Path(path).read_text())


class BandPowerTransform(TransformerMixin, BaseEstimator):
    """Stateless transformer: rows of raw epoch samples in, relative band
    powers out.

    Parameters
    ----------
    sampling_rate : float
        Sample rate of every input row, in Hz. Row length / sampling_rate
        is the epoch duration.
    """

    def __init__(self, sampling_rate: float = 256.0):
        self.sampling_rate = sampling_rate

    def fit(self, X=None, y=None):
        """No state to learn; exists for pipeline compatibility."""
        if self.sampling_rate <= 0:
            raise ValueError("sampling_rate must be positive")
        return self

    def transform(self, X) -> np.ndarray:
        """Map (n_epochs, n_samples) raw windows to (n_epochs, 5) features.

        Unclassifiable rows come back as nan, mirroring ``extract_features``.
        """
        self.fit()
        X = np.asarray(X, dtype=np.float64)
        if X.ndim != 2:
            raise ValueError("X must be a 2-D array of epoch rows")
        duration_s = X.shape[1] / self.sampling_rate
        out = np.full((X.shape[0], len(BANDS)), np.nan)
        for i, row in enumerate(X):
            epoch = Epoch(index=i, samples=row, sampling_rate=self.sampling_rate,
                          duration_s=duration_s)
            try:
                out[i] = epoch_features(epoch).rsp
            except UnclassifiableEpochError:
                pass
        return out
