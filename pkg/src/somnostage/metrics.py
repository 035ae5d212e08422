"""Agreement metrics and the sleep-architecture report.

Confusion matrices are 6x6 over the classifier stages: rows are the expert
(actual) stage, columns the predicted stage, both in the fixed order Awake,
S1, S2, S3, S4, REM. Percentages everywhere are computed as exact ratios
and rounded only at display time, half-up to whole percent.
"""

from __future__ import annotations

from dataclasses import dataclass
from io import StringIO

import numpy as np

from .dataset import CLASSIFIER_STAGES, SLEEP_STAGES, Hypnogram, SleepStage

#: Typical share of total sleep time per stage in healthy adults, as quoted
#: in clinical summaries. Display-only reference, never computed from data.
TYPICAL_PCT_TTS = {
    SleepStage.S1: "< 10",
    SleepStage.S2: "~ 50",
    SleepStage.S3: "~ 10",
    SleepStage.S4: "~ 10",
    SleepStage.REM: "20 to 25",
}


def round_half_up(value: float) -> int:
    """Round to the nearest integer, halves away from the floor (2.5 -> 3)."""
    return int(np.floor(value + 0.5))


@dataclass(frozen=True, eq=False)
class ConfusionMatrix:
    """counts[i][j] = number of samples with actual stage i predicted as j."""

    counts: np.ndarray

    def __post_init__(self):
        counts = np.asarray(self.counts)
        n = len(CLASSIFIER_STAGES)
        if counts.shape != (n, n):
            raise ValueError(f"confusion matrix must be {n}x{n}, got {counts.shape}")
        if not np.issubdtype(counts.dtype, np.integer):
            if not np.equal(np.mod(counts, 1), 0).all():
                raise ValueError("confusion matrix counts must be integers")
        counts = counts.astype(np.int64)
        if np.any(counts < 0):
            raise ValueError("confusion matrix counts must be non-negative")
        object.__setattr__(self, "counts", counts)

    @classmethod
    def from_labels(cls, actual, predicted) -> "ConfusionMatrix":
        """Tally actual/predicted stage pairs.

        Lengths must match and neither side may contain Movement (such
        epochs are excluded upstream, never scored).
        """
        actual = np.asarray(actual, dtype=np.int64)
        predicted = np.asarray(predicted, dtype=np.int64)
        if actual.shape != predicted.shape or actual.ndim != 1:
            raise ValueError(
                f"label lengths differ: {actual.shape} actual vs {predicted.shape} predicted"
            )
        n = len(CLASSIFIER_STAGES)
        for name, labels in (("actual", actual), ("predicted", predicted)):
            if np.any(labels == int(SleepStage.MOVEMENT)):
                raise ValueError(f"{name} labels contain Movement epochs")
            if labels.size and (labels.min() < 0 or labels.max() >= n):
                raise ValueError(f"{name} labels outside the {n} classifier stages")
        counts = np.zeros((n, n), dtype=np.int64)
        np.add.at(counts, (actual, predicted), 1)
        return cls(counts)

    def __eq__(self, other) -> bool:
        return isinstance(other, ConfusionMatrix) and np.array_equal(self.counts, other.counts)

    def __add__(self, other: "ConfusionMatrix") -> "ConfusionMatrix":
        return ConfusionMatrix(self.counts + other.counts)

    @property
    def total(self) -> int:
        return int(self.counts.sum())

    @property
    def row_sums(self) -> np.ndarray:
        return self.counts.sum(axis=1)


def confusion_matrix(actual, predicted) -> ConfusionMatrix:
    """Functional alias for ``ConfusionMatrix.from_labels``."""
    return ConfusionMatrix.from_labels(actual, predicted)


def per_class_success(cm: ConfusionMatrix) -> tuple:
    """Diagonal share of each row: fraction of actual-stage-i samples
    predicted as stage i. None for stages with no actual samples."""
    rates = []
    for i, row_sum in enumerate(cm.row_sums):
        rates.append(float(cm.counts[i, i]) / float(row_sum) if row_sum else None)
    return tuple(rates)


def overall_accuracy(cm: ConfusionMatrix) -> float:
    """Trace over total: the share of samples predicted as their actual
    stage. Raises ``ValueError`` on an empty matrix."""
    if cm.total == 0:
        raise ValueError("confusion matrix is empty")
    return float(np.trace(cm.counts)) / float(cm.total)


@dataclass(frozen=True)
class ArchitectureReport:
    """Stage composition of one scored night.

    Total sleep time (TTS) covers S1 through REM; total recording time
    (TTR) additionally counts Awake and Movement epochs.
    """

    stage_counts: dict
    epoch_duration_s: float

    def __post_init__(self):
        counts = {stage: int(self.stage_counts.get(stage, 0)) for stage in SleepStage}
        if any(c < 0 for c in counts.values()):
            raise ValueError("stage counts must be non-negative")
        if self.epoch_duration_s <= 0:
            raise ValueError("epoch_duration_s must be positive")
        object.__setattr__(self, "stage_counts", counts)

    @property
    def tts_epochs(self) -> int:
        return sum(self.stage_counts[s] for s in SLEEP_STAGES)

    @property
    def ttr_epochs(self) -> int:
        return sum(self.stage_counts.values())

    @property
    def tts_seconds(self) -> float:
        return self.tts_epochs * self.epoch_duration_s

    @property
    def ttr_seconds(self) -> float:
        return self.ttr_epochs * self.epoch_duration_s

    def stage_seconds(self, stage: SleepStage) -> float:
        return self.stage_counts[stage] * self.epoch_duration_s

    def pct_tts(self, stage: SleepStage):
        """Stage share of total sleep time, in percent (exact ratio).

        None for Awake/Movement (not sleep) and for whole-night-wake
        recordings where TTS is zero.
        """
        if stage not in SLEEP_STAGES or self.tts_epochs == 0:
            return None
        return 100.0 * self.stage_counts[stage] / self.tts_epochs

    def pct_ttr(self, stage: SleepStage):
        """Stage share of total recording time, in percent (exact ratio)."""
        if self.ttr_epochs == 0:
            return None
        return 100.0 * self.stage_counts[stage] / self.ttr_epochs


def architecture_report(hypnogram: Hypnogram) -> ArchitectureReport:
    """Stage composition of a hypnogram (counts, durations, shares)."""
    if len(hypnogram) == 0:
        raise ValueError("hypnogram is empty")
    return ArchitectureReport(hypnogram.counts(), hypnogram.epoch_duration_s)


def _format_pct(value) -> str:
    return "-" if value is None else f"{round_half_up(value)}%"


def _format_seconds(value: float) -> str:
    return format(value, "g")


def render_confusion(cm: ConfusionMatrix) -> str:
    """Aligned text table: one row per actual stage, predicted counts in
    stage order, then the per-stage success rate; overall accuracy last."""
    names = [stage.display for stage in CLASSIFIER_STAGES]
    success = per_class_success(cm)
    header = ["Actual \\ Predicted", *names, "Success"]
    rows = [header]
    for i, name in enumerate(names):
        rate = success[i]
        rows.append(
            [
                name,
                *[str(int(c)) for c in cm.counts[i]],
                "-" if rate is None else f"{round_half_up(100.0 * rate)}%",
            ]
        )
    widths = [max(len(row[c]) for row in rows) for c in range(len(header))]
    lines = [
        "  ".join(cell.ljust(w) if c == 0 else cell.rjust(w) for c, (cell, w) in enumerate(zip(row, widths)))
        for row in rows
    ]
    if cm.total:
        accuracy = overall_accuracy(cm)
        lines.append(
            f"Overall accuracy: {int(np.trace(cm.counts))}/{cm.total} "
            f"= {round_half_up(100.0 * accuracy)}%"
        )
    return "\n".join(lines) + "\n"


def confusion_csv(cm: ConfusionMatrix) -> str:
    """Comma-separated export of the matrix with exact success ratios."""
    names = [stage.display for stage in CLASSIFIER_STAGES]
    out = StringIO()
    out.write("actual," + ",".join(names) + ",success_pct\n")
    success = per_class_success(cm)
    for i, name in enumerate(names):
        rate = success[i]
        pct = "" if rate is None else format(100.0 * rate, ".17g")
        out.write(name + "," + ",".join(str(int(c)) for c in cm.counts[i]) + f",{pct}\n")
    return out.getvalue()


#: Printed under every architecture report: the artifact's rounding basis
#: is epoch counts; duration-based renderings can differ by a point or two.
ARCHITECTURE_FOOTNOTE = (
    "Percentages are exact count ratios rounded half-up to whole percent at display;"
    " renderings based on durations or other movement handling may differ slightly."
)


def render_architecture(report: ArchitectureReport) -> str:
    """Aligned text table of stage composition with TTS/TTR totals,
    typical-value reference column, and the rounding footnote."""
    header = ["Stage", "Epochs", "Duration s", "%TTS", "%TTR", "Typical %TTS"]
    rows = [header]
    for stage in SleepStage:
        rows.append(
            [
                stage.display,
                str(report.stage_counts[stage]),
                _format_seconds(report.stage_seconds(stage)),
                _format_pct(report.pct_tts(stage)),
                _format_pct(report.pct_ttr(stage)),
                TYPICAL_PCT_TTS.get(stage, "-"),
            ]
        )
    rows.append(["TTS", str(report.tts_epochs), _format_seconds(report.tts_seconds), "", "", ""])
    rows.append(["TTR", str(report.ttr_epochs), _format_seconds(report.ttr_seconds), "", "", ""])
    widths = [max(len(row[c]) for row in rows) for c in range(len(header))]
    lines = [
        "  ".join(
            cell.ljust(w) if c in (0, 5) else cell.rjust(w)
            for c, (cell, w) in enumerate(zip(row, widths))
        ).rstrip()
        for row in rows
    ]
    lines.append("")
    lines.append(ARCHITECTURE_FOOTNOTE)
    return "\n".join(lines) + "\n"


def architecture_csv(report: ArchitectureReport) -> str:
    """Comma-separated export with exact (unrounded) percentage ratios."""
    out = StringIO()
    out.write("stage,epochs,duration_s,pct_tts,pct_ttr,typical_pct_tts\n")

    def pct(value):
        return "" if value is None else format(value, ".17g")

    for stage in SleepStage:
        out.write(
            f"{stage.display},{report.stage_counts[stage]},"
            f"{_format_seconds(report.stage_seconds(stage))},"
            f"{pct(report.pct_tts(stage))},{pct(report.pct_ttr(stage))},"
            f"{TYPICAL_PCT_TTS.get(stage, '')}\n"
        )
    out.write(f"TTS,{report.tts_epochs},{_format_seconds(report.tts_seconds)},,,\n")
    out.write(f"TTR,{report.ttr_epochs},{_format_seconds(report.ttr_seconds)},,,\n")
    return out.getvalue()
