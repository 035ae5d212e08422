"""Synthetic EEG with known band composition.

Each stage profile places one sinusoid per band, at the DFT bin nearest the
band's center frequency, with squared amplitude proportional to the target
band weight, plus optional white noise. Because every tone sits exactly on
a bin of the epoch-long DFT, the relative band powers of a noise-free epoch
equal the profile weights to machine precision: a closed-form oracle for
the whole spectral pipeline, and labeled corpora for classifier tests.
"""

from __future__ import annotations

from dataclasses import dataclass
from pathlib import Path

import numpy as np

from . import spectral
from .dataset import (
    CLASSIFIER_STAGES,
    Hypnogram,
    LabeledDataset,
    SleepStage,
    build_dataset,
    stage_from_name,
)
from .edf import default_signal_spec, write_recording
from .metrics import round_half_up

DEFAULT_AMPLITUDE_UV = 30.0

#: Epoch counts of the bundled demonstration night (one adult full-night
#: scoring with pronounced class imbalance), keyed by stage.
DEMO_NIGHT_COUNTS = {
    SleepStage.AWAKE: 67,
    SleepStage.S1: 54,
    SleepStage.S2: 347,
    SleepStage.S3: 107,
    SleepStage.S4: 292,
    SleepStage.REM: 233,
    SleepStage.MOVEMENT: 14,
}


@dataclass(frozen=True)
class StageProfile:
    """Target band composition for one stage.

    ``band_weights`` is the intended relative spectral power per band
    (delta, theta, alpha, sigma, beta, summing to 1); ``noise_fraction`` is
    the expected share of retained spectral power contributed by white
    noise, in [0, 1).
    """

    stage: SleepStage
    band_weights: tuple[float, ...]
    noise_fraction: float = 0.0

    def __post_init__(self):
        weights = tuple(float(w) for w in self.band_weights)
        if len(weights) != len(spectral.BANDS):
            raise ValueError(f"need {len(spectral.BANDS)} band weights, got {len(weights)}")
        if any(w < 0 for w in weights):
            raise ValueError("band weights must be non-negative")
        if abs(sum(weights) - 1.0) > 1e-9:
            raise ValueError(f"band weights must sum to 1, got {sum(weights)}")
        if not 0.0 <= self.noise_fraction < 1.0:
            raise ValueError("noise_fraction must lie in [0, 1)")
        object.__setattr__(self, "stage", SleepStage(self.stage))
        object.__setattr__(self, "band_weights", weights)


def _tone_bins(duration_s: float) -> list[int]:
    """One DFT bin per band: the bin nearest the band's center frequency
    (ties toward the higher bin)."""
    bins = []
    for _, low, high in spectral.BANDS:
        k = round_half_up(0.5 * (low + high) * duration_s)
        if not low * duration_s <= k <= high * duration_s:
            raise ValueError(
                f"epoch duration {duration_s} s puts no usable tone bin in [{low}, {high}] Hz"
            )
        bins.append(k)
    if len(set(bins)) != len(bins):
        raise ValueError(f"epoch duration {duration_s} s too short to separate the bands")
    return bins


def _retained_bin_count(duration_s: float) -> int:
    low_bin = int(np.ceil(spectral.LOW_CUTOFF_HZ * duration_s - 1e-9))
    high_bin = int(np.floor(spectral.HIGH_CUTOFF_HZ * duration_s + 1e-9))
    return high_bin - low_bin + 1


def _epoch_samples(profile, n, sampling_rate, duration_s, rng, amplitude_uv) -> np.ndarray:
    # Five phases are always drawn so zero-weight bands do not shift the
    # noise stream; each tone's squared amplitude carries its band weight.
    phases = rng.uniform(0.0, 2.0 * np.pi, len(spectral.BANDS))
    t = np.arange(n) / sampling_rate
    samples = np.zeros(n)
    for k, weight, phase in zip(_tone_bins(duration_s), profile.band_weights, phases):
        if weight > 0.0:
            samples += amplitude_uv * np.sqrt(weight) * np.sin(
                2.0 * np.pi * (k / duration_s) * t + phase
            )
    if profile.noise_fraction > 0.0:
        # White noise of variance s^2 spreads N*s^2 expected power per DFT
        # bin; scale so the m retained bins carry noise_fraction of the
        # total expected retained power.
        m = _retained_bin_count(duration_s)
        ratio = profile.noise_fraction / (1.0 - profile.noise_fraction)
        sigma = amplitude_uv * np.sqrt(ratio * n / (4.0 * m))
        samples += rng.normal(0.0, sigma, n)
    return samples


def synth_epoch(
    profile: StageProfile,
    sampling_rate: float = 256.0,
    duration_s: float = spectral.DEFAULT_EPOCH_SECONDS,
    seed: int = 0,
    amplitude_uv: float = DEFAULT_AMPLITUDE_UV,
    index: int = 0,
) -> spectral.Epoch:
    """One synthetic epoch: band tones with seeded uniform phases plus
    white noise scaled to the profile's expected noise fraction.

    Deterministic given seed. Raises ``ValueError`` when sampling_rate x
    duration_s is not a whole sample count.
    """
    n = sampling_rate * duration_s
    if abs(n - round(n)) > 1e-9:
        raise ValueError(
            f"{sampling_rate} Hz x {duration_s} s = {n} samples per epoch; must be whole"
        )
    rng = np.random.default_rng(seed)
    samples = _epoch_samples(profile, int(round(n)), sampling_rate, duration_s, rng, amplitude_uv)
    return spectral.Epoch(index=index, samples=samples, sampling_rate=sampling_rate,
                          duration_s=duration_s)


def _expand_counts(profiles_with_counts):
    expanded = []
    for profile, count in profiles_with_counts:
        if count < 0:
            raise ValueError(f"negative epoch count {count} for stage {profile.stage.display}")
        expanded.extend([profile] * int(count))
    if not expanded:
        raise ValueError("no epochs requested")
    return expanded


def synth_recording(
    profiles_with_counts,
    sampling_rate: float = 256.0,
    duration_s: float = spectral.DEFAULT_EPOCH_SECONDS,
    seed: int = 0,
    amplitude_uv: float = DEFAULT_AMPLITUDE_UV,
    label: str = "EEG C3-A2",
):
    """Synthesize a labeled night and encode it as an EDF byte stream.

    ``profiles_with_counts`` is a sequence of (StageProfile, epoch_count);
    epochs are emitted grouped in the given order, one EDF record per
    epoch. Returns (edf_bytes, Hypnogram). The default 30 µV amplitude
    keeps tones plus moderate noise inside the writer's ±250 µV range.
    """
    per_epoch = _expand_counts(profiles_with_counts)
    n = int(round(sampling_rate * duration_s))
    rng = np.random.default_rng(seed)
    samples = np.concatenate(
        [
            _epoch_samples(p, n, sampling_rate, duration_s, rng, amplitude_uv)
            for p in per_epoch
        ]
    )
    spec = default_signal_spec(label, sampling_rate, duration_s)
    stream = write_recording([(spec, samples)], record_duration_s=duration_s)
    return stream, Hypnogram(tuple(p.stage for p in per_epoch), duration_s)


def synth_dataset(
    profiles_with_counts,
    sampling_rate: float = 256.0,
    duration_s: float = spectral.DEFAULT_EPOCH_SECONDS,
    seed: int = 0,
    amplitude_uv: float = DEFAULT_AMPLITUDE_UV,
):
    """Synthesize epochs and push them through the spectral pipeline.

    Returns (LabeledDataset, Hypnogram); Movement epochs appear in the
    hypnogram but are dropped from the dataset. Deterministic given seed,
    and consistent with ``synth_recording`` up to EDF quantization (this
    path skips the write/read cycle).
    """
    per_epoch = _expand_counts(profiles_with_counts)
    n = int(round(sampling_rate * duration_s))
    rng = np.random.default_rng(seed)
    features = np.full((len(per_epoch), len(spectral.BANDS)), np.nan)
    for i, profile in enumerate(per_epoch):
        epoch = spectral.Epoch(
            index=i,
            samples=_epoch_samples(profile, n, sampling_rate, duration_s, rng, amplitude_uv),
            sampling_rate=sampling_rate,
            duration_s=duration_s,
        )
        features[i] = spectral.epoch_features(epoch).rsp
    hypnogram = Hypnogram(tuple(p.stage for p in per_epoch), duration_s)
    return build_dataset(features, hypnogram), hypnogram


def separable_profiles(noise_fraction: float = 0.05) -> tuple[StageProfile, ...]:
    """Six cleanly separable profiles, one per classifier stage.

    Five stages each concentrate 80% of their power in a different band;
    S4 takes an even delta+theta pair. Pairwise distances are large
    relative to the default noise, so a small network should classify
    these nearly perfectly.
    """
    weights = {
        SleepStage.AWAKE: (0.05, 0.05, 0.80, 0.05, 0.05),
        SleepStage.S1: (0.05, 0.80, 0.05, 0.05, 0.05),
        SleepStage.S2: (0.05, 0.05, 0.05, 0.80, 0.05),
        SleepStage.S3: (0.80, 0.05, 0.05, 0.05, 0.05),
        SleepStage.S4: (0.40, 0.40, 0.10, 0.05, 0.05),
        SleepStage.REM: (0.05, 0.05, 0.05, 0.05, 0.80),
    }
    return tuple(
        StageProfile(stage, weights[stage], noise_fraction) for stage in CLASSIFIER_STAGES
    )


def default_profiles(noise_fraction: float = 0.1) -> tuple[StageProfile, ...]:
    """Clinically shaped profiles that reproduce the classic confusions.

    Awake is alpha-dominant; S1 and REM share one theta-dominant profile
    (deliberately identical, as the two are not separable from a single
    EEG band composition); S2 mixes theta with a sigma bump; S3 and S4
    share one delta-dominant profile. Trained on an imbalanced night,
    a classifier collapses S1 into REM and S3 into S4.
    """
    theta_profile = (0.15, 0.55, 0.15, 0.05, 0.10)
    delta_profile = (0.70, 0.15, 0.05, 0.05, 0.05)
    weights = {
        SleepStage.AWAKE: (0.05, 0.15, 0.60, 0.10, 0.10),
        SleepStage.S1: theta_profile,
        SleepStage.S2: (0.20, 0.35, 0.10, 0.30, 0.05),
        SleepStage.S3: delta_profile,
        SleepStage.S4: delta_profile,
        SleepStage.REM: theta_profile,
    }
    return tuple(
        StageProfile(stage, weights[stage], noise_fraction) for stage in CLASSIFIER_STAGES
    )


def movement_profile(noise_fraction: float = 0.3) -> StageProfile:
    """Broadband artifact profile for Movement epochs: flat band weights
    under heavy noise. Kept moderate so samples stay in the EDF range."""
    return StageProfile(SleepStage.MOVEMENT, (0.2, 0.2, 0.2, 0.2, 0.2), noise_fraction)


def demo_night(noise_fraction: float = 0.1):
    """(profile, count) pairs for the bundled demonstration night:
    imbalanced stage counts with the confusable default profiles plus a
    few Movement epochs."""
    pairs = [
        (profile, DEMO_NIGHT_COUNTS[profile.stage])
        for profile in default_profiles(noise_fraction)
    ]
    pairs.append((movement_profile(), DEMO_NIGHT_COUNTS[SleepStage.MOVEMENT]))
    return pairs


_PROFILE_HEADER = "stage," + ",".join(spectral.BAND_NAMES) + ",noise"


def format_profiles(profiles) -> str:
    """Render profiles as comma-separated text, one row per profile:
    stage token, five band weights, noise fraction."""
    lines = [_PROFILE_HEADER]
    for p in profiles:
        values = [*p.band_weights, p.noise_fraction]
        lines.append(p.stage.token + "," + ",".join(format(v, ".17g") for v in values))
    return "\n".join(lines) + "\n"


def parse_profiles(text: str) -> tuple[StageProfile, ...]:
    """Inverse of ``format_profiles``. Stage may be a token (W/1/2/3/4/R/M)
    or a display name; errors carry line numbers."""
    lines = [line for line in text.splitlines() if line.strip()]
    if not lines or lines[0] != _PROFILE_HEADER:
        raise ValueError(f"line 1: expected profile header {_PROFILE_HEADER!r}")
    profiles = []
    token_map = {stage.token: stage for stage in SleepStage}
    for lineno, line in enumerate(lines[1:], start=2):
        parts = line.split(",")
        if len(parts) != len(spectral.BANDS) + 2:
            raise ValueError(
                f"line {lineno}: expected {len(spectral.BANDS) + 2} columns, got {len(parts)}"
            )
        try:
            # .get alone would misread Awake: stage value 0 is falsy
            stage = token_map.get(parts[0])
            if stage is None:
                stage = stage_from_name(parts[0])
            values = [float(p) for p in parts[1:]]
        except ValueError:
            raise ValueError(f"line {lineno}: bad stage or non-numeric value") from None
        try:
            profiles.append(StageProfile(stage, tuple(values[:-1]), values[-1]))
        except ValueError as exc:
            raise ValueError(f"line {lineno}: {exc}") from None
    if not profiles:
        raise ValueError("profile file has no rows")
    return tuple(profiles)


def write_profiles(path, profiles) -> None:
    Path(path).write_text(format_profiles(profiles))


def read_profiles(path) -> tuple[StageProfile, ...]:
    return parse_profiles(Path(path).read_text())
