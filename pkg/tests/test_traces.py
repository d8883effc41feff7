import struct

import numpy as np
import pytest

from eprsim.gaussian import QuadratureAngles
from eprsim.traces import (
    MAGIC,
    QuadratureTraceSet,
    TraceFormatError,
    TraceTruncatedError,
    TraceVersionError,
    read_trace,
    write_trace,
)


@pytest.fixture
def traces(rng):
    return QuadratureTraceSet(
        rng.standard_normal((2, 1001)),
        5e6,
        QuadratureAngles(0.1, 1.2),
        (1.01, 0.99),
        {"kind": "signal", "seed": 7},
    )


def test_round_trip_is_bit_identical(tmp_path, traces):
    p = tmp_path / "t.eprt"
    write_trace(p, traces)
    back = read_trace(p)
    assert back.channels.tobytes() == traces.channels.tobytes()
    assert back.sample_rate == traces.sample_rate
    assert back.lo_angles == traces.lo_angles
    assert back.calibration == traces.calibration
    assert back.metadata == traces.metadata
    assert back.duration == pytest.approx(1001 / 5e6)


def test_byte_layout(tmp_path):
    t = QuadratureTraceSet(np.array([[1.0, 2.0], [3.0, 4.0]]), 10.0)
    p = tmp_path / "t.eprt"
    write_trace(p, t)
    raw = p.read_bytes()
    assert raw[:4] == MAGIC
    assert struct.unpack_from("<HH", raw, 4) == (1, 2)
    assert struct.unpack_from("<d", raw, 8) == (10.0,)
    assert struct.unpack_from("<Q", raw, 16) == (2,)
    (meta_len,) = struct.unpack_from("<I", raw, 56)
    samples = np.frombuffer(raw[60 + meta_len :], dtype="<f8")
    np.testing.assert_array_equal(samples, [1.0, 3.0, 2.0, 4.0])


def test_truncated_file_reports_sizes(tmp_path, traces):
    p = tmp_path / "t.eprt"
    write_trace(p, traces)
    full = p.read_bytes()
    p.write_bytes(full[:-100])
    with pytest.raises(TraceTruncatedError) as info:
        read_trace(p)
    assert info.value.expected == len(full)
    assert info.value.actual == len(full) - 100


def test_header_only_truncation(tmp_path):
    p = tmp_path / "t.eprt"
    p.write_bytes(MAGIC + b"\x01")
    with pytest.raises(TraceTruncatedError):
        read_trace(p)


def test_foreign_file_rejected(tmp_path, traces):
    p = tmp_path / "t.eprt"
    write_trace(p, traces)
    raw = bytearray(p.read_bytes())
    raw[:4] = b"RIFF"
    p.write_bytes(bytes(raw))
    with pytest.raises(TraceFormatError):
        read_trace(p)


def test_version_mismatch(tmp_path, traces):
    p = tmp_path / "t.eprt"
    write_trace(p, traces)
    raw = bytearray(p.read_bytes())
    struct.pack_into("<H", raw, 4, 2)
    p.write_bytes(bytes(raw))
    with pytest.raises(TraceVersionError):
        read_trace(p)


def test_trailing_bytes_rejected(tmp_path, traces):
    p = tmp_path / "t.eprt"
    write_trace(p, traces)
    with open(p, "ab") as fh:
        fh.write(b"\0" * 8)
    with pytest.raises(TraceFormatError):
        read_trace(p)


@pytest.mark.parametrize("shape", [(1, 10), (3, 10), (20,)])
def test_channel_shape_validated(shape):
    with pytest.raises(ValueError):
        QuadratureTraceSet(np.zeros(shape), 1.0)


def test_calibration_must_be_positive():
    with pytest.raises(ValueError):
        QuadratureTraceSet(np.zeros((2, 4)), 1.0, calibration=(1.0, 0.0))
