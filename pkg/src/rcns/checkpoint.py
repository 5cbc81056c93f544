"""Binary checkpoints for exact restarts.

Layout (little endian)::

    b"RCNS"  u32 version  32-byte scenario hash  f64 t  u64 length
    f64[length] rho   f64[length] u
    u32 k  f64[k] accumulated diagnostics (k = 0 allowed)
    u32 CRC32 of every preceding byte
"""

from __future__ import annotations

import struct
import zlib
from dataclasses import dataclass

import numpy as np

from .errors import ChecksumError

MAGIC = b"RCNS"
VERSION = 1
_HEAD = struct.Struct("<4sI32sdQ")


@dataclass(frozen=True, eq=False)
class Checkpoint:
    version: int
    scenario_hash: bytes
    t: float
    rho: np.ndarray
    u: np.ndarray
    extra: tuple = ()  # accumulated diagnostics, e.g. (D,)


def encode_checkpoint(scenario_hash: bytes, t: float, rho, u, extra=()) -> bytes:
    rho = np.ascontiguousarray(rho, dtype="<f8")
    u = np.ascontiguousarray(u, dtype="<f8")
    if rho.shape != u.shape or rho.ndim != 1:
        raise ValueError("rho and u must be 1-D arrays of equal length")
    if len(scenario_hash) != 32:
        raise ValueError("scenario hash must be 32 bytes")
    extra = np.asarray(extra, dtype="<f8")
    payload = b"".join([
        _HEAD.pack(MAGIC, VERSION, bytes(scenario_hash), float(t), rho.size),
        rho.tobytes(),
        u.tobytes(),
        struct.pack("<I", extra.size),
        extra.tobytes(),
    ])
    return payload + struct.pack("<I", zlib.crc32(payload))


def decode_checkpoint(data: bytes) -> Checkpoint:
    if len(data) < _HEAD.size + 8:
        raise ChecksumError("checkpoint truncated")
    payload, (crc,) = data[:-4], struct.unpack("<I", data[-4:])
    if zlib.crc32(payload) != crc:
        raise ChecksumError("checkpoint CRC mismatch (file truncated or corrupted)")
    magic, version, h, t, n = _HEAD.unpack_from(payload)
    if magic != MAGIC:
        raise ChecksumError("not an RCNS checkpoint")
    off = _HEAD.size
    need = off + 16 * n + 4
    if len(payload) < need:
        raise ChecksumError("checkpoint truncated")
    rho = np.frombuffer(payload, "<f8", n, off).astype(float)
    u = np.frombuffer(payload, "<f8", n, off + 8 * n).astype(float)
    (k,) = struct.unpack_from("<I", payload, off + 16 * n)
    if len(payload) != need + 8 * k:
        raise ChecksumError("checkpoint length does not match its header")
    extra = tuple(np.frombuffer(payload, "<f8", k, need).tolist())
    return Checkpoint(version, h, t, rho, u, extra)


def write_checkpoint(path, scenario_hash: bytes, t: float, rho, u, extra=()):
    with open(path, "wb") as fh:
        fh.write(encode_checkpoint(scenario_hash, t, rho, u, extra))


def read_checkpoint(path) -> Checkpoint:
    with open(path, "rb") as fh:
        return decode_checkpoint(fh.read())
