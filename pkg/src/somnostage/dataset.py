"""Sleep stage labels, hypnograms, and labeled feature corpora.

A hypnogram is the whole-night sequence of stage labels, one per scoring
epoch (30 s by default). Scored hypnograms may contain Movement epochs;
classifier datasets never do.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from enum import IntEnum
from pathlib import Path

import numpy as np

DEFAULT_EPOCH_SECONDS = 30.0


class SleepStage(IntEnum):
    """Vigilance states in fixed classifier output order.

    The first six values are the classifier classes; MOVEMENT appears only
    in raw expert scorings and is excluded from training data.
    """

    AWAKE = 0
    S1 = 1
    S2 = 2
    S3 = 3
    S4 = 4
    REM = 5
    MOVEMENT = 6

    @property
    def token(self) -> str:
        """Single-character token used in hypnogram files."""
        return _STAGE_TO_TOKEN[self]

    @property
    def display(self) -> str:
        """Human-readable stage name used in reports."""
        return _STAGE_TO_NAME[self]


#: The six classifier classes, in output-neuron order.
CLASSIFIER_STAGES = (
    SleepStage.AWAKE,
    SleepStage.S1,
    SleepStage.S2,
    SleepStage.S3,
    SleepStage.S4,
    SleepStage.REM,
)

#: The five sleep stages counted toward total sleep time (no Awake/Movement).
SLEEP_STAGES = CLASSIFIER_STAGES[1:]

_TOKEN_TO_STAGE = {
    "W": SleepStage.AWAKE,
    "1": SleepStage.S1,
    "2": SleepStage.S2,
    "3": SleepStage.S3,
    "4": SleepStage.S4,
    "R": SleepStage.REM,
    "M": SleepStage.MOVEMENT,
}
_STAGE_TO_TOKEN = {stage: token for token, stage in _TOKEN_TO_STAGE.items()}
_STAGE_TO_NAME = {
    SleepStage.AWAKE: "Awake",
    SleepStage.S1: "S1",
    SleepStage.S2: "S2",
    SleepStage.S3: "S3",
    SleepStage.S4: "S4",
    SleepStage.REM: "REM",
    SleepStage.MOVEMENT: "Movement",
}
_NAME_TO_STAGE = {name: stage for stage, name in _STAGE_TO_NAME.items()}


def stage_from_name(name: str) -> SleepStage:
    """Inverse of ``SleepStage.display``."""
    try:
        return _NAME_TO_STAGE[name]
    except KeyError:
        raise ValueError(f"unknown stage name {name!r}") from None


@dataclass(frozen=True)
class Hypnogram:
    """Whole-night stage sequence, one label per scoring epoch."""

    stages: tuple[SleepStage, ...]
    epoch_duration_s: float = DEFAULT_EPOCH_SECONDS

    def __post_init__(self):
        if self.epoch_duration_s <= 0:
            raise ValueError("epoch_duration_s must be positive")
        object.__setattr__(self, "stages", tuple(SleepStage(s) for s in self.stages))

    def __len__(self) -> int:
        return len(self.stages)

    @property
    def total_seconds(self) -> float:
        """Total recording time represented by the hypnogram."""
        return len(self.stages) * self.epoch_duration_s

    def counts(self) -> dict[SleepStage, int]:
        """Epoch count per stage (all seven stages, zeros included)."""
        out = {stage: 0 for stage in SleepStage}
        for s in self.stages:
            out[s] += 1
        return out


def parse_hypnogram(text: str, epoch_duration_s: float = DEFAULT_EPOCH_SECONDS) -> Hypnogram:
    """Parse a hypnogram from token-per-line text.

    Tokens are W/1/2/3/4/R/M. Blank lines and lines starting with ``#``
    are ignored. Raises ``ValueError`` naming the offending line for an
    unknown token, and for files without any token.
    """
    stages = []
    for lineno, line in enumerate(text.splitlines(), start=1):
        stripped = line.strip()
        if not stripped or stripped.startswith("#"):
            continue
        try:
            stages.append(_TOKEN_TO_STAGE[stripped])
        except KeyError:
            raise ValueError(f"line {lineno}: unknown stage token {stripped!r}") from None
    if not stages:
        raise ValueError("hypnogram is empty")
    return Hypnogram(tuple(stages), epoch_duration_s)


def read_hypnogram(path, epoch_duration_s: float = DEFAULT_EPOCH_SECONDS) -> Hypnogram:
    """Read a hypnogram file (see ``parse_hypnogram`` for the format)."""
    return parse_hypnogram(Path(path).read_text(), epoch_duration_s)


def format_hypnogram(hypnogram: Hypnogram, comments: tuple[str, ...] = ()) -> str:
    """Render a hypnogram as token-per-line text, with optional trailing
    ``#`` comment lines."""
    lines = [stage.token for stage in hypnogram.stages]
    lines.extend(f"# {c}" for c in comments)
    return "\n".join(lines) + "\n"


def write_hypnogram(path, hypnogram: Hypnogram, comments: tuple[str, ...] = ()) -> None:
    Path(path).write_text(format_hypnogram(hypnogram, comments))


@dataclass(frozen=True)
class LabeledDataset:
    """Per-epoch feature rows paired with expert stage labels.

    Rows never contain Movement labels or non-finite features; the original
    epoch index of every row is kept for traceability back to the recording.
    """

    features: np.ndarray
    stages: np.ndarray
    epoch_indices: np.ndarray = field(default=None)  # type: ignore[assignment]

    def __post_init__(self):
        features = np.asarray(self.features, dtype=np.float64)
        stages = np.asarray(self.stages, dtype=np.int64)
        if features.ndim != 2:
            raise ValueError("features must be a 2-D array")
        if features.shape[1] not in (5, 10):
            raise ValueError(f"feature width must be 5 or 10, got {features.shape[1]}")
        if stages.shape != (features.shape[0],):
            raise ValueError("stages must have one label per feature row")
        if not np.isfinite(features).all():
            raise ValueError("features contain non-finite values")
        if np.any(stages == SleepStage.MOVEMENT):
            raise ValueError("datasets must not contain Movement labels")
        indices = self.epoch_indices
        if indices is None:
            indices = np.arange(features.shape[0], dtype=np.int64)
        else:
            indices = np.asarray(indices, dtype=np.int64)
            if indices.shape != (features.shape[0],):
                raise ValueError("epoch_indices must have one entry per row")
        object.__setattr__(self, "features", features)
        object.__setattr__(self, "stages", stages)
        object.__setattr__(self, "epoch_indices", indices)

    def __len__(self) -> int:
        return self.features.shape[0]

    @property
    def feature_width(self) -> int:
        return self.features.shape[1]

    def class_counts(self) -> dict[SleepStage, int]:
        """Row count per stage present in the dataset."""
        values, counts = np.unique(self.stages, return_counts=True)
        return {SleepStage(int(v)): int(c) for v, c in zip(values, counts)}

    def subset(self, rows) -> "LabeledDataset":
        rows = np.asarray(rows, dtype=np.int64)
        return LabeledDataset(self.features[rows], self.stages[rows], self.epoch_indices[rows])


def build_dataset(features_per_epoch, hypnogram: Hypnogram) -> LabeledDataset:
    """Pair per-epoch features with expert labels, dropping unusable epochs.

    Epochs scored as Movement and epochs whose features are non-finite
    (unclassifiable, written as nan by the feature extractor) are excluded.
    Raises ``ValueError`` if the feature list and hypnogram lengths differ.
    """
    features = np.asarray(features_per_epoch, dtype=np.float64)
    if features.ndim != 2:
        raise ValueError("features_per_epoch must be a 2-D array")
    if features.shape[0] != len(hypnogram):
        raise ValueError(
            f"{features.shape[0]} feature rows vs {len(hypnogram)} hypnogram epochs"
        )
    stages = np.asarray([int(s) for s in hypnogram.stages], dtype=np.int64)
    keep = (stages != int(SleepStage.MOVEMENT)) & np.isfinite(features).all(axis=1)
    indices = np.flatnonzero(keep)
    return LabeledDataset(features[indices], stages[indices], indices)


def _round_half_up(x: float) -> int:
    return int(np.floor(x + 0.5))


def stratified_split_indices(stages, train_fraction: float, seed: int):
    """Split row indices into (train, validation), stratified by class.

    Each class is shuffled with a generator seeded by ``seed`` (numpy PCG64)
    and ``round(train_fraction * class_count)`` rows, clamped to leave at
    least one row on each side, go to train. Classes with fewer than two
    rows cannot be split and raise ``ValueError``.
    """
    if not 0.0 < train_fraction < 1.0:
        raise ValueError("train_fraction must lie strictly between 0 and 1")
    stages = np.asarray(stages, dtype=np.int64)
    if stages.ndim != 1 or stages.size == 0:
        raise ValueError("stages must be a non-empty 1-D array")
    rng = np.random.default_rng(seed)
    train_parts, val_parts = [], []
    for cls in np.unique(stages):
        rows = np.flatnonzero(stages == cls)
        if rows.size < 2:
            raise ValueError(
                f"class {int(cls)} has {rows.size} row(s); need at least 2 to split"
            )
        shuffled = rows[rng.permutation(rows.size)]
        n_train = min(max(_round_half_up(train_fraction * rows.size), 1), rows.size - 1)
        train_parts.append(shuffled[:n_train])
        val_parts.append(shuffled[n_train:])
    return np.concatenate(train_parts), np.concatenate(val_parts)


def stratified_split(dataset: LabeledDataset, train_fraction: float, seed: int):
    """Stratified (train, validation) partition of a labeled dataset."""
    train_rows, val_rows = stratified_split_indices(dataset.stages, train_fraction, seed)
    return dataset.subset(train_rows), dataset.subset(val_rows)
