"""Two-channel homodyne photocurrent records and their binary file format.

Layout (all little-endian)::

    magic            4 bytes   b"EPRT"
    version          uint16    1
    channel count    uint16    2
    sample rate      float64   Hz
    sample count     uint64    samples per channel
    LO angles        2 x float64  radians
    calibration      2 x float64  shot-noise variance per channel
    metadata length  uint32
    metadata         UTF-8 text (JSON)
    samples          float64, interleaved (ch1[0], ch2[0], ch1[1], ...)
"""
from __future__ import annotations

import json
import os
import struct
from dataclasses import dataclass, field

import numpy as np

from .gaussian import QuadratureAngles

MAGIC = b"EPRT"
VERSION = 1
N_CHANNELS = 2
_HEADER = struct.Struct("<4sHHdQdddd")
_META_LEN = struct.Struct("<I")
MAX_SAMPLES = 2**64 - 1


class TraceFileError(Exception):
    """Base class for trace file problems."""


class TraceFormatError(TraceFileError):
    pass


class TraceVersionError(TraceFileError):
    pass


class TraceTruncatedError(TraceFileError):
    def __init__(self, expected: int, actual: int):
        super().__init__(f"truncated trace file: expected {expected} bytes, found {actual}")
        self.expected = expected
        self.actual = actual


@dataclass(frozen=True, eq=False)
class QuadratureTraceSet:
    channels: np.ndarray = field(repr=False)  # shape (2, n_samples)
    sample_rate: float
    lo_angles: QuadratureAngles = QuadratureAngles()
    calibration: tuple[float, float] = (1.0, 1.0)
    metadata: dict = field(default_factory=dict, repr=False)

    def __post_init__(self):
        ch = np.asarray(self.channels, dtype=float)
        if ch.ndim != 2 or ch.shape[0] != N_CHANNELS:
            raise ValueError(f"expected {N_CHANNELS} equal-length channels, got shape {ch.shape}")
        if self.sample_rate <= 0:
            raise ValueError("sample rate must be positive")
        if len(self.calibration) != N_CHANNELS or min(self.calibration) <= 0:
            raise ValueError("calibration variances must be positive, one per channel")
        object.__setattr__(self, "channels", ch)
        object.__setattr__(self, "calibration", tuple(float(c) for c in self.calibration))

    @property
    def n_samples(self) -> int:
        return self.channels.shape[1]

    @property
    def duration(self) -> float:
        return self.n_samples / self.sample_rate

    def __len__(self):
        return self.n_samples


def write_trace(path, traces: QuadratureTraceSet) -> None:
    meta = json.dumps(traces.metadata, sort_keys=True).encode("utf-8")
    header = _HEADER.pack(
        MAGIC,
        VERSION,
        N_CHANNELS,
        traces.sample_rate,
        traces.n_samples,
        traces.lo_angles.theta1,
        traces.lo_angles.theta2,
        *traces.calibration,
    )
    with open(path, "wb") as fh:
        fh.write(header)
        fh.write(_META_LEN.pack(len(meta)))
        fh.write(meta)
        # interleave in blocks so huge traces are not copied whole
        block = 1 << 20
        for start in range(0, traces.n_samples, block):
            chunk = traces.channels[:, start : start + block]
            fh.write(np.ascontiguousarray(chunk.T, dtype="<f8").tobytes())


def read_header(fh, file_size: int):
    raw = fh.read(_HEADER.size)
    if len(raw) < _HEADER.size:
        raise TraceTruncatedError(_HEADER.size, len(raw))
    magic, version, nch, rate, n, t1, t2, c1, c2 = _HEADER.unpack(raw)
    if magic != MAGIC:
        raise TraceFormatError(f"not a trace file (magic {magic!r}, expected {MAGIC!r})")
    if version != VERSION:
        raise TraceVersionError(f"unsupported trace format version {version}, expected {VERSION}")
    if nch != N_CHANNELS:
        raise TraceFormatError(f"expected {N_CHANNELS} channels, header says {nch}")
    raw = fh.read(_META_LEN.size)
    if len(raw) < _META_LEN.size:
        raise TraceTruncatedError(_HEADER.size + _META_LEN.size, _HEADER.size + len(raw))
    (meta_len,) = _META_LEN.unpack(raw)
    offset = _HEADER.size + _META_LEN.size + meta_len
    expected = offset + 8 * nch * n
    if file_size != expected:
        if file_size < expected:
            raise TraceTruncatedError(expected, file_size)
        raise TraceFormatError(f"trailing data: expected {expected} bytes, found {file_size}")
    meta_raw = fh.read(meta_len)
    try:
        metadata = json.loads(meta_raw.decode("utf-8")) if meta_len else {}
    except (UnicodeDecodeError, json.JSONDecodeError) as exc:
        raise TraceFormatError(f"malformed metadata: {exc}") from None
    return dict(
        sample_rate=rate,
        n_samples=n,
        lo_angles=QuadratureAngles(t1, t2),
        calibration=(c1, c2),
        metadata=metadata,
        offset=offset,
    )


def read_trace(path) -> QuadratureTraceSet:
    size = os.path.getsize(path)
    with open(path, "rb") as fh:
        h = read_header(fh, size)
        data = np.fromfile(fh, dtype="<f8", count=N_CHANNELS * h["n_samples"])
    channels = data.reshape(h["n_samples"], N_CHANNELS).T.astype(float)
    return QuadratureTraceSet(
        channels=channels,
        sample_rate=h["sample_rate"],
        lo_angles=h["lo_angles"],
        calibration=h["calibration"],
        metadata=h["metadata"],
    )
