"""Reading and writing polygraphic recordings in the EDF interchange format.

Layout: a 256-byte main header of fixed-width ASCII fields (widths
8/80/80/8/8/8/44/8/8/4), then one 256-byte block per signal whose fields
are grouped field-by-field across signals (widths 16/80/8/8/8/8/8/80/8/32),
then data records of interleaved 16-bit little-endian two's-complement
samples. Stored digital values map linearly to physical units:

    phys = phys_min + (dig - dig_min) * (phys_max - phys_min) / (dig_max - dig_min)

Text fields are right-padded with spaces on write and stripped of trailing
spaces on read. EDF+ annotations and non-16-bit sample widths are out of
scope.
"""

from __future__ import annotations

from dataclasses import dataclass
from pathlib import Path

import numpy as np

MAIN_HEADER_BYTES = 256
PER_SIGNAL_HEADER_BYTES = 256

# (field name, width) in file order.
_MAIN_FIELDS = (
    ("version", 8),
    ("patient_id", 80),
    ("recording_id", 80),
    ("start_date", 8),
    ("start_time", 8),
    ("header_bytes", 8),
    ("reserved", 44),
    ("num_records", 8),
    ("record_duration_s", 8),
    ("num_signals", 4),
)
_SIGNAL_FIELDS = (
    ("label", 16),
    ("transducer", 80),
    ("physical_dimension", 8),
    ("physical_min", 8),
    ("physical_max", 8),
    ("digital_min", 8),
    ("digital_max", 8),
    ("prefiltering", 80),
    ("samples_per_record", 8),
    ("reserved", 32),
)


class EdfError(ValueError):
    """Malformed EDF content, or an operation that would produce it."""


def _check_text(value: str, width: int, field: str) -> str:
    if len(value) > width:
        raise EdfError(f"{field} {value!r} exceeds {width} characters")
    if any(not (32 <= ord(c) <= 126) for c in value):
        raise EdfError(f"{field} {value!r} contains non-printable characters")
    return value


def _format_number(value: float, width: int, field: str) -> str:
    """Canonical fixed-width rendering: integers without a decimal point,
    other values at the shortest precision that fits."""
    if float(value) == int(value):
        text = str(int(value))
    else:
        text = repr(float(value))
        precision = 17
        while len(text) > width and precision > 1:
            precision -= 1
            text = f"{float(value):.{precision}g}"
    if len(text) > width:
        raise EdfError(f"{field} value {value!r} does not fit in {width} characters")
    return text


def _parse_int(text: str, field: str) -> int:
    try:
        return int(text.strip())
    except ValueError:
        raise EdfError(f"non-numeric {field}: {text!r}") from None


def _parse_float(text: str, field: str) -> float:
    try:
        return float(text.strip())
    except ValueError:
        raise EdfError(f"non-numeric {field}: {text!r}") from None


@dataclass(frozen=True)
class SignalSpec:
    """Per-signal header entry: identity, calibration, and record shape."""

    label: str
    samples_per_record: int
    physical_min: float = -250.0
    physical_max: float = 250.0
    digital_min: int = -32768
    digital_max: int = 32767
    physical_dimension: str = "uV"
    transducer: str = ""
    prefiltering: str = ""
    reserved: str = ""

    def __post_init__(self):
        _check_text(self.label, 16, "label")
        _check_text(self.transducer, 80, "transducer")
        _check_text(self.physical_dimension, 8, "physical_dimension")
        _check_text(self.prefiltering, 80, "prefiltering")
        _check_text(self.reserved, 32, "signal reserved field")
        if self.samples_per_record < 1:
            raise EdfError(f"samples_per_record must be >= 1, got {self.samples_per_record}")
        if self.digital_min >= self.digital_max:
            raise EdfError(
                f"inverted digital range [{self.digital_min}, {self.digital_max}]"
            )
        if self.physical_min == self.physical_max:
            raise EdfError(f"degenerate physical range at {self.physical_min}")

    @property
    def physical_step(self) -> float:
        """Physical units per digital step (the quantization granularity)."""
        return (self.physical_max - self.physical_min) / (self.digital_max - self.digital_min)


@dataclass(frozen=True)
class EdfHeader:
    """Decoded main header plus all signal entries."""

    version: str
    patient_id: str
    recording_id: str
    start_date: str
    start_time: str
    num_records: int
    record_duration_s: float
    signals: tuple[SignalSpec, ...]
    reserved: str = ""

    def __post_init__(self):
        _check_text(self.version, 8, "version")
        _check_text(self.patient_id, 80, "patient_id")
        _check_text(self.recording_id, 80, "recording_id")
        _check_text(self.reserved, 44, "reserved")
        for name, value in (("start_date", self.start_date), ("start_time", self.start_time)):
            if len(value) != 8 or value[2] != "." or value[5] != ".":
                raise EdfError(f"{name} must look like xx.xx.xx, got {value!r}")
        if self.num_records < 0:
            raise EdfError(f"negative record count {self.num_records}")
        if self.record_duration_s <= 0:
            raise EdfError(f"record duration must be positive, got {self.record_duration_s}")
        if not self.signals:
            raise EdfError("recording must declare at least one signal")
        object.__setattr__(self, "signals", tuple(self.signals))

    @property
    def num_signals(self) -> int:
        return len(self.signals)

    @property
    def header_bytes(self) -> int:
        return MAIN_HEADER_BYTES + PER_SIGNAL_HEADER_BYTES * self.num_signals

    @property
    def record_bytes(self) -> int:
        return 2 * sum(s.samples_per_record for s in self.signals)

    @property
    def duration_s(self) -> float:
        """Total recording time covered by the data records."""
        return self.num_records * self.record_duration_s


@dataclass(frozen=True)
class SampleSeries:
    """One signal's samples in physical units (µV for EEG)."""

    samples: np.ndarray
    sampling_rate: float
    label: str

    def __post_init__(self):
        samples = np.asarray(self.samples, dtype=np.float64)
        if samples.ndim != 1:
            raise ValueError("samples must be a 1-D array")
        if self.sampling_rate <= 0:
            raise ValueError(f"sampling rate must be positive, got {self.sampling_rate}")
        object.__setattr__(self, "samples", samples)

    def __len__(self) -> int:
        return self.samples.shape[0]


def parse_header(raw: bytes) -> EdfHeader:
    """Decode the main and per-signal headers from the start of ``raw``.

    Never reads past the declared header size. Raises ``EdfError`` for
    truncated input, non-numeric content in numeric fields, a declared
    header size inconsistent with the signal count, or invalid ranges.
    """
    if len(raw) < MAIN_HEADER_BYTES:
        raise EdfError(f"truncated header: {len(raw)} bytes, need {MAIN_HEADER_BYTES}")
    fields = {}
    offset = 0
    for name, width in _MAIN_FIELDS:
        fields[name] = raw[offset : offset + width].decode("ascii", errors="replace").rstrip()
        offset += width

    num_signals = _parse_int(fields["num_signals"], "signal count")
    if num_signals < 1:
        raise EdfError(f"signal count must be >= 1, got {num_signals}")
    declared = _parse_int(fields["header_bytes"], "header size")
    expected = MAIN_HEADER_BYTES + PER_SIGNAL_HEADER_BYTES * num_signals
    if declared != expected:
        raise EdfError(
            f"header size {declared} inconsistent with {num_signals} signals (expected {expected})"
        )
    if len(raw) < expected:
        raise EdfError(f"truncated signal headers: {len(raw)} bytes, need {expected}")

    columns = {}
    for name, width in _SIGNAL_FIELDS:
        columns[name] = [
            raw[offset + i * width : offset + (i + 1) * width].decode("ascii", errors="replace").rstrip()
            for i in range(num_signals)
        ]
        offset += width * num_signals

    signals = tuple(
        SignalSpec(
            label=columns["label"][i],
            transducer=columns["transducer"][i],
            physical_dimension=columns["physical_dimension"][i],
            physical_min=_parse_float(columns["physical_min"][i], "physical_min"),
            physical_max=_parse_float(columns["physical_max"][i], "physical_max"),
            digital_min=_parse_int(columns["digital_min"][i], "digital_min"),
            digital_max=_parse_int(columns["digital_max"][i], "digital_max"),
            prefiltering=columns["prefiltering"][i],
            samples_per_record=_parse_int(columns["samples_per_record"][i], "samples_per_record"),
            reserved=columns["reserved"][i],
        )
        for i in range(num_signals)
    )
    return EdfHeader(
        version=fields["version"],
        patient_id=fields["patient_id"],
        recording_id=fields["recording_id"],
        start_date=fields["start_date"],
        start_time=fields["start_time"],
        num_records=_parse_int(fields["num_records"], "record count"),
        record_duration_s=_parse_float(fields["record_duration_s"], "record duration"),
        signals=signals,
        reserved=fields["reserved"],
    )


def serialize_header(header: EdfHeader) -> bytes:
    """Encode a header as the canonical fixed-width byte layout.

    Numeric fields use the shortest exact rendering, so serialize is the
    inverse of ``parse_header`` for headers this module wrote.
    """
    main = {
        "version": header.version,
        "patient_id": header.patient_id,
        "recording_id": header.recording_id,
        "start_date": header.start_date,
        "start_time": header.start_time,
        "header_bytes": str(header.header_bytes),
        "reserved": header.reserved,
        "num_records": str(header.num_records),
        "record_duration_s": _format_number(header.record_duration_s, 8, "record duration"),
        "num_signals": str(header.num_signals),
    }
    parts = []
    for name, width in _MAIN_FIELDS:
        text = main[name]
        if len(text) > width:
            raise EdfError(f"{name} value {text!r} does not fit in {width} characters")
        parts.append(text.ljust(width).encode("ascii"))

    for name, width in _SIGNAL_FIELDS:
        for spec in header.signals:
            value = getattr(spec, name)
            if name in ("physical_min", "physical_max"):
                text = _format_number(value, width, name)
            elif name in ("digital_min", "digital_max", "samples_per_record"):
                text = str(value)
            else:
                text = value
            if len(text) > width:
                raise EdfError(f"{name} value {text!r} does not fit in {width} characters")
            parts.append(text.ljust(width).encode("ascii"))
    return b"".join(parts)


def digital_to_physical(digital, spec: SignalSpec) -> np.ndarray:
    """Linear map from stored integers to physical units."""
    digital = np.asarray(digital, dtype=np.float64)
    return spec.physical_min + (digital - spec.digital_min) * spec.physical_step


def physical_to_digital(samples, spec: SignalSpec) -> np.ndarray:
    """Quantize physical values to the digital grid (little-endian int16).

    Rounds half away from zero to the nearest digital step. Values outside
    [physical_min, physical_max] are an error, not a clamp: silent clamping
    would corrupt downstream spectral measurements.
    """
    samples = np.asarray(samples, dtype=np.float64)
    lo = min(spec.physical_min, spec.physical_max)
    hi = max(spec.physical_min, spec.physical_max)
    bad = np.flatnonzero((samples < lo) | (samples > hi) | ~np.isfinite(samples))
    if bad.size:
        raise EdfError(
            f"sample {samples[bad[0]]!r} at index {bad[0]} outside physical range [{lo}, {hi}]"
        )
    exact = spec.digital_min + (samples - spec.physical_min) / spec.physical_step
    quantized = np.sign(exact) * np.floor(np.abs(exact) + 0.5)
    return quantized.astype("<i2")


def _select_signal(header: EdfHeader, selector) -> int:
    if isinstance(selector, (int, np.integer)):
        index = int(selector)
        if not 0 <= index < header.num_signals:
            raise EdfError(f"no signal at index {index} (recording has {header.num_signals})")
        return index
    matches = [i for i, s in enumerate(header.signals) if s.label == selector]
    if not matches:
        known = ", ".join(repr(s.label) for s in header.signals)
        raise EdfError(f"unknown signal label {selector!r} (known: {known})")
    if len(matches) > 1:
        raise EdfError(f"ambiguous signal label {selector!r} matches {len(matches)} signals")
    return matches[0]


def read_signal(recording: bytes, selector, record_range=None) -> SampleSeries:
    """Extract one signal from a full EDF byte stream, in physical units.

    ``selector`` is a label or a 0-based index; ``record_range`` is a
    half-open (start, stop) pair of record indices, or None for the whole
    recording. Raises ``EdfError`` for unknown or ambiguous labels, ranges
    out of bounds, or a data section shorter than the header promises.
    """
    header = parse_header(recording)
    index = _select_signal(header, selector)
    spec = header.signals[index]

    samples_per_record = sum(s.samples_per_record for s in header.signals)
    need = header.header_bytes + header.num_records * header.record_bytes
    if len(recording) < need:
        raise EdfError(
            f"data section shorter than header promises: {len(recording)} bytes, need {need}"
        )
    if record_range is None:
        start, stop = 0, header.num_records
    else:
        start, stop = (int(v) for v in record_range)
        if not 0 <= start <= stop <= header.num_records:
            raise EdfError(
                f"record range [{start}, {stop}) out of bounds for {header.num_records} records"
            )

    data = np.frombuffer(
        recording,
        dtype="<i2",
        count=header.num_records * samples_per_record,
        offset=header.header_bytes,
    ).reshape(header.num_records, samples_per_record)
    column = sum(s.samples_per_record for s in header.signals[:index])
    digital = data[start:stop, column : column + spec.samples_per_record].reshape(-1)
    return SampleSeries(
        samples=digital_to_physical(digital, spec),
        sampling_rate=spec.samples_per_record / header.record_duration_s,
        label=spec.label,
    )


def write_recording(
    signals,
    record_duration_s: float,
    *,
    version: str = "0",
    patient_id: str = "X X X X",
    recording_id: str = "Startdate X X X X",
    start_date: str = "01.01.00",
    start_time: str = "00.00.00",
    reserved: str = "",
    destination=None,
) -> bytes:
    """Encode (SignalSpec, samples) pairs as a complete EDF byte stream.

    Every series length must be a multiple of its samples_per_record and
    all series must span the same number of records. Samples are quantized
    per ``physical_to_digital``. If ``destination`` is given the bytes are
    also written to that path.
    """
    if not signals:
        raise EdfError("recording must contain at least one signal")
    specs, arrays, record_counts = [], [], []
    for spec, samples in signals:
        samples = np.asarray(samples, dtype=np.float64)
        if samples.ndim != 1:
            raise EdfError(f"signal {spec.label!r}: samples must be 1-D")
        if samples.size % spec.samples_per_record:
            raise EdfError(
                f"signal {spec.label!r}: {samples.size} samples is not a multiple of "
                f"{spec.samples_per_record} per record"
            )
        specs.append(spec)
        arrays.append(samples)
        record_counts.append(samples.size // spec.samples_per_record)
    if len(set(record_counts)) != 1:
        raise EdfError(f"signals span different record counts: {record_counts}")
    num_records = record_counts[0]

    header = EdfHeader(
        version=version,
        patient_id=patient_id,
        recording_id=recording_id,
        start_date=start_date,
        start_time=start_time,
        num_records=num_records,
        record_duration_s=record_duration_s,
        signals=tuple(specs),
        reserved=reserved,
    )
    blocks = [
        physical_to_digital(samples, spec).reshape(num_records, spec.samples_per_record)
        for spec, samples in zip(specs, arrays)
    ]
    payload = np.hstack(blocks).astype("<i2").tobytes() if num_records else b""
    stream = serialize_header(header) + payload
    if destination is not None:
        Path(destination).write_bytes(stream)
    return stream


def default_signal_spec(
    label: str = "EEG C3-A2",
    sampling_rate: float = 256.0,
    record_duration_s: float = 30.0,
) -> SignalSpec:
    """EEG signal entry with a ±250 µV range over the full 16-bit grid.

    The clinical amplifier's true ranges are not recoverable from scored
    recordings alone, so generated fixtures standardize on this one.
    """
    samples = sampling_rate * record_duration_s
    if abs(samples - round(samples)) > 1e-9:
        raise EdfError(
            f"sampling rate {sampling_rate} Hz does not yield whole samples "
            f"per {record_duration_s} s record"
        )
    return SignalSpec(label=label, samples_per_record=int(round(samples)))
