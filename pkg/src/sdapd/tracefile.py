"""Binary click-trace dump.

Layout, all little-endian::

    header  8s  magic b"SDAPDTRC"
            u32 version (1)
            u32 frame_gates
    body    u64 total_gates
            u64 n_runs
            n_runs x (u64 first_gate, u64 run_length)

A run is a maximal block of consecutive clicking gates; with zero SD
residual every run has length 1.
"""

from __future__ import annotations

import struct

import numpy as np

from .detector import ClickTrace

MAGIC = b"SDAPDTRC"
VERSION = 1
_HEADER = struct.Struct("<8sII")
_COUNTS = struct.Struct("<QQ")


class TraceFormatError(ValueError):
    pass


def encode_runs(positions: np.ndarray) -> np.ndarray:
    """Sorted click positions -> ``(n_runs, 2)`` array of (start, length)."""
    pos = np.asarray(positions, dtype=np.int64)
    if pos.size == 0:
        return np.empty((0, 2), dtype=np.uint64)
    breaks = np.flatnonzero(np.diff(pos) != 1) + 1
    starts = np.concatenate(([0], breaks))
    ends = np.concatenate((breaks, [pos.size]))
    return np.stack([pos[starts], ends - starts], axis=1).astype(np.uint64)


def decode_runs(runs: np.ndarray) -> np.ndarray:
    runs = np.asarray(runs, dtype=np.int64).reshape(-1, 2)
    if runs.size == 0:
        return np.empty(0, dtype=np.int64)
    starts, lengths = runs[:, 0], runs[:, 1]
    offsets = np.arange(lengths.sum()) - np.repeat(np.cumsum(lengths) - lengths, lengths)
    return np.repeat(starts, lengths) + offsets


def dumps(trace: ClickTrace) -> bytes:
    runs = encode_runs(trace.positions)
    return (_HEADER.pack(MAGIC, VERSION, trace.frame_gates)
            + _COUNTS.pack(trace.total_gates, len(runs))
            + runs.astype("<u8").tobytes())


def loads(data: bytes) -> ClickTrace:
    if len(data) < _HEADER.size + _COUNTS.size:
        raise TraceFormatError("truncated trace header")
    magic, version, frame_gates = _HEADER.unpack_from(data, 0)
    if magic != MAGIC:
        raise TraceFormatError(f"bad magic {magic!r}")
    if version != VERSION:
        raise TraceFormatError(f"unsupported trace version {version}")
    total, n_runs = _COUNTS.unpack_from(data, _HEADER.size)
    body = data[_HEADER.size + _COUNTS.size:]
    if len(body) != 16 * n_runs:
        raise TraceFormatError("run table length does not match header")
    runs = np.frombuffer(body, dtype="<u8").reshape(-1, 2)
    return ClickTrace(decode_runs(runs), int(total), int(frame_gates))


def write_trace(path, trace: ClickTrace) -> None:
    with open(path, "wb") as fh:
        fh.write(dumps(trace))


def read_trace(path) -> ClickTrace:
    with open(path, "rb") as fh:
        return loads(fh.read())
