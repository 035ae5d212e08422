"""EDF parsing, writing, and the digital/physical linear map."""

import numpy as np
import pytest

from somnostage.edf import (
    EdfError,
    EdfHeader,
    SignalSpec,
    default_signal_spec,
    digital_to_physical,
    parse_header,
    physical_to_digital,
    read_signal,
    serialize_header,
    write_recording,
)


def _spec(**overrides):
    base = dict(label="EEG C3-A2", samples_per_record=7680)
    base.update(overrides)
    return SignalSpec(**base)


def _grid_samples(spec, rng, n):
    """Physical values exactly on the digital grid."""
    digital = rng.integers(spec.digital_min, spec.digital_max + 1, size=n)
    return digital_to_physical(digital, spec)


class TestSignalSpec:
    def test_inverted_digital_range(self):
        with pytest.raises(EdfError, match="inverted digital range"):
            _spec(digital_min=32767, digital_max=-32768)

    def test_degenerate_physical_range(self):
        with pytest.raises(EdfError, match="degenerate physical range"):
            _spec(physical_min=5.0, physical_max=5.0)

    def test_samples_per_record_positive(self):
        with pytest.raises(EdfError, match="samples_per_record"):
            _spec(samples_per_record=0)

    def test_text_width_limits(self):
        with pytest.raises(EdfError, match="exceeds 16"):
            _spec(label="x" * 17)

    def test_non_printable_text(self):
        with pytest.raises(EdfError, match="non-printable"):
            _spec(label="bad\tlabel")

    def test_default_spec_covers_full_16_bit_range(self):
        spec = default_signal_spec()
        assert (spec.digital_min, spec.digital_max) == (-32768, 32767)
        assert (spec.physical_min, spec.physical_max) == (-250.0, 250.0)
        assert spec.samples_per_record == 7680

    def test_default_spec_rejects_fractional_samples(self):
        with pytest.raises(EdfError, match="whole samples"):
            default_signal_spec(sampling_rate=256.0, record_duration_s=0.1)


class TestLinearMap:
    def test_endpoint(self):
        spec = _spec()
        assert digital_to_physical(np.array([spec.digital_min]), spec)[0] == spec.physical_min

    def test_dig_zero_of_default_calibration(self):
        # phys = -250 + 32768 * 500 / 65535, a hair above zero
        expected = -250.0 + 32768 * 500.0 / 65535.0
        value = digital_to_physical(np.array([0]), _spec())[0]
        assert value == pytest.approx(expected, rel=1e-12)
        assert value == pytest.approx(0.003815, abs=5e-7)

    def test_rounds_half_away_from_zero(self):
        # identity calibration: one digital step per physical unit
        spec = _spec(
            samples_per_record=4,
            physical_min=-32768.0,
            physical_max=32767.0,
        )
        digital = physical_to_digital(np.array([0.5, -0.5, 1.5, -1.5]), spec)
        assert digital.tolist() == [1, -1, 2, -2]

    def test_out_of_range_is_error_not_clamp(self):
        spec = _spec()
        with pytest.raises(EdfError, match="outside physical range"):
            physical_to_digital(np.array([0.0, 250.001]), spec)

    def test_non_finite_is_error(self):
        with pytest.raises(EdfError, match="outside physical range"):
            physical_to_digital(np.array([np.nan]), _spec())


class TestParseHeader:
    def test_roundtrip_fields(self):
        spec = _spec(transducer="AgAgCl electrode", prefiltering="HP:0.1Hz LP:75Hz")
        stream = write_recording(
            [(spec, np.zeros(7680 * 2))],
            record_duration_s=30.0,
            patient_id="anonymous",
            start_date="02.03.99",
            start_time="23.11.05",
        )
        header = parse_header(stream)
        assert header.version == "0"
        assert header.patient_id == "anonymous"
        assert header.start_date == "02.03.99"
        assert header.start_time == "23.11.05"
        assert header.num_records == 2
        assert header.record_duration_s == 30.0
        assert header.signals == (spec,)

    def test_header_bytes_for_two_signals(self):
        stream = write_recording(
            [(_spec(), np.zeros(7680)), (_spec(label="EEG C4-A1"), np.zeros(7680))],
            record_duration_s=30.0,
        )
        header = parse_header(stream)
        assert header.header_bytes == 256 + 2 * 256 == 768

    def test_whole_night_duration(self):
        header = EdfHeader(
            version="0",
            patient_id="X",
            recording_id="X",
            start_date="01.01.00",
            start_time="00.00.00",
            num_records=1114,
            record_duration_s=30.0,
            signals=(_spec(),),
        )
        parsed = parse_header(serialize_header(header))
        assert parsed.num_records == 1114
        assert parsed.duration_s == 33420.0

    def test_sampling_rate_from_record_shape(self):
        stream = write_recording([(_spec(), np.zeros(7680))], record_duration_s=30.0)
        series = read_signal(stream, 0)
        assert series.sampling_rate == 256.0

    def test_truncated_header(self):
        with pytest.raises(EdfError, match="truncated header"):
            parse_header(b" " * 100)

    def test_truncated_signal_section(self):
        stream = write_recording([(_spec(), np.zeros(7680))], record_duration_s=30.0)
        with pytest.raises(EdfError, match="truncated signal headers"):
            parse_header(stream[:300])

    def test_non_numeric_field(self):
        stream = bytearray(write_recording([(_spec(), np.zeros(7680))], 30.0))
        stream[236:244] = b"oops    "  # num_records field
        with pytest.raises(EdfError, match="non-numeric record count"):
            parse_header(bytes(stream))

    def test_header_size_inconsistent_with_signal_count(self):
        stream = bytearray(write_recording([(_spec(), np.zeros(7680))], 30.0))
        stream[184:192] = b"768     "  # header_bytes claims two signals
        with pytest.raises(EdfError, match="inconsistent"):
            parse_header(bytes(stream))

    def test_inverted_digital_range_in_file(self):
        stream = bytearray(write_recording([(_spec(), np.zeros(7680))], 30.0))
        # dig_min and dig_max fields sit after label/transducer/dim/phys fields
        offset = 256 + 16 + 80 + 8 + 8 + 8
        stream[offset : offset + 16] = b"32767   -32768  "
        with pytest.raises(EdfError, match="inverted digital range"):
            parse_header(bytes(stream))

    def test_parse_reads_only_the_header(self):
        stream = write_recording([(_spec(), np.zeros(7680 * 3))], record_duration_s=30.0)
        header = parse_header(stream[: 256 + 256])  # data section absent
        assert header.num_records == 3

    def test_trailing_spaces_stripped(self):
        stream = write_recording([(_spec(label="EEG C3-A2"), np.zeros(7680))], 30.0)
        assert parse_header(stream).signals[0].label == "EEG C3-A2"


class TestSerializeHeader:
    def test_byte_identity_roundtrip(self):
        spec = _spec(physical_min=-312.5, physical_max=312.5, transducer="electrode")
        stream = write_recording(
            [(spec, np.zeros(7680))], record_duration_s=30.0, recording_id="night 14"
        )
        header = parse_header(stream)
        assert serialize_header(header) == stream[: header.header_bytes]

    def test_integral_floats_render_without_point(self):
        stream = write_recording([(_spec(), np.zeros(7680))], record_duration_s=30.0)
        assert stream[244:252] == b"30      "  # record duration field

    def _header_with(self, **overrides):
        base = parse_header(write_recording([(_spec(), np.zeros(7680))], 30.0))
        fields = dict(
            version=base.version,
            patient_id=base.patient_id,
            recording_id=base.recording_id,
            start_date=base.start_date,
            start_time=base.start_time,
            num_records=base.num_records,
            record_duration_s=base.record_duration_s,
            signals=base.signals,
        )
        fields.update(overrides)
        return EdfHeader(**fields)

    def test_value_too_wide_for_field(self):
        too_wide = self._header_with(num_records=10**9)
        with pytest.raises(EdfError, match="does not fit"):
            serialize_header(too_wide)

    def test_long_decimal_shortened_to_fit(self):
        header = self._header_with(record_duration_s=0.12345678901234567)
        parsed = parse_header(serialize_header(header))
        assert parsed.record_duration_s == pytest.approx(0.12345678901234567, rel=1e-4)


class TestReadSignal:
    def test_unknown_label(self):
        stream = write_recording([(_spec(), np.zeros(7680))], 30.0)
        with pytest.raises(EdfError, match="unknown signal label"):
            read_signal(stream, "EEG C4-A1")

    def test_ambiguous_label(self):
        stream = write_recording(
            [(_spec(), np.zeros(7680)), (_spec(), np.zeros(7680))], 30.0
        )
        with pytest.raises(EdfError, match="ambiguous"):
            read_signal(stream, "EEG C3-A2")

    def test_index_out_of_range(self):
        stream = write_recording([(_spec(), np.zeros(7680))], 30.0)
        with pytest.raises(EdfError, match="no signal at index"):
            read_signal(stream, 1)

    def test_record_range_out_of_bounds(self):
        stream = write_recording([(_spec(), np.zeros(7680 * 2))], 30.0)
        with pytest.raises(EdfError, match="out of bounds"):
            read_signal(stream, 0, record_range=(0, 3))

    def test_record_range_selects_epochs(self):
        spec = _spec(samples_per_record=4)
        samples = digital_to_physical(np.arange(12), spec)
        stream = write_recording([(spec, samples)], record_duration_s=1.0)
        series = read_signal(stream, 0, record_range=(1, 2))
        np.testing.assert_array_equal(series.samples, samples[4:8])

    def test_data_shorter_than_promised(self):
        stream = write_recording([(_spec(), np.zeros(7680 * 2))], 30.0)
        with pytest.raises(EdfError, match="shorter than header promises"):
            read_signal(stream[:-2], 0)

    def test_second_signal_deinterleaved(self):
        rng = np.random.default_rng(7)
        a_spec = _spec(label="EEG C3-A2", samples_per_record=8)
        b_spec = _spec(label="EOG", samples_per_record=4)
        a = _grid_samples(a_spec, rng, 16)
        b = _grid_samples(b_spec, rng, 8)
        stream = write_recording([(a_spec, a), (b_spec, b)], record_duration_s=1.0)
        np.testing.assert_array_equal(read_signal(stream, "EOG").samples, b)
        np.testing.assert_array_equal(read_signal(stream, 0).samples, a)


class TestWriteRecording:
    def test_zeros_roundtrip_identically(self):
        # identity calibration, so zero sits exactly on the digital grid
        # (the default ±250 µV map across all 65536 codes has no zero point)
        spec = _spec(
            samples_per_record=16, physical_min=-32768.0, physical_max=32767.0
        )
        stream = write_recording([(spec, np.zeros(32))], record_duration_s=1.0)
        np.testing.assert_array_equal(read_signal(stream, 0).samples, np.zeros(32))

    def test_grid_aligned_roundtrip_bit_exact(self):
        rng = np.random.default_rng(0)
        spec = _spec(samples_per_record=64)
        samples = _grid_samples(spec, rng, 640)
        stream = write_recording([(spec, samples)], record_duration_s=1.0)
        recovered = read_signal(stream, 0).samples
        assert recovered.tobytes() == samples.tobytes()

    def test_quantization_error_within_half_step(self):
        rng = np.random.default_rng(1)
        spec = _spec(samples_per_record=64)
        samples = rng.uniform(spec.physical_min, spec.physical_max, 640)
        stream = write_recording([(spec, samples)], record_duration_s=1.0)
        recovered = read_signal(stream, 0).samples
        assert np.max(np.abs(recovered - samples)) <= spec.physical_step / 2 + 1e-12

    def test_length_not_multiple_of_record(self):
        with pytest.raises(EdfError, match="not a multiple"):
            write_recording([(_spec(samples_per_record=64), np.zeros(100))], 1.0)

    def test_signals_must_share_record_count(self):
        with pytest.raises(EdfError, match="different record counts"):
            write_recording(
                [
                    (_spec(samples_per_record=4), np.zeros(8)),
                    (_spec(label="EOG", samples_per_record=4), np.zeros(12)),
                ],
                record_duration_s=1.0,
            )

    def test_empty_signal_list(self):
        with pytest.raises(EdfError, match="at least one signal"):
            write_recording([], record_duration_s=1.0)

    def test_destination_writes_file(self, tmp_path):
        path = tmp_path / "out.edf"
        stream = write_recording(
            [(_spec(samples_per_record=4), np.zeros(4))], 1.0, destination=path
        )
        assert path.read_bytes() == stream
