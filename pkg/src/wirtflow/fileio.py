"""Binary containers for vectors, observations and CDP code sets.

All integers and floats are little-endian.

* ``CVEC1``: magic, u32 version, u64 n, then n (f64 real, f64 imag) pairs.
* ``YOBS1``: magic, u32 version, u64 m, then m f64 values.
* ``CDPE1``: magic, u32 version, u64 n, u64 L, then L code vectors laid out
  like a CVEC1 body (n complex pairs each).
"""
from __future__ import annotations

import os
import struct

import numpy as np

from .core import WirtflowError

VERSION = 1

_C16 = np.dtype("<c16")
_F8 = np.dtype("<f8")


class FormatError(WirtflowError, ValueError):
    """Malformed or truncated binary file."""


def _header(magic: bytes, *dims: int) -> bytes:
    return magic + struct.pack("<I", VERSION) + struct.pack(f"<{len(dims)}Q", *dims)


def _read_header(buf: bytes, magic: bytes, ndims: int, path) -> tuple[tuple[int, ...], int]:
    size = len(magic) + 4 + 8 * ndims
    if len(buf) < size:
        raise FormatError(f"{path}: file too short for {magic.decode()} header")
    if buf[: len(magic)] != magic:
        raise FormatError(f"{path}: bad magic {buf[:len(magic)]!r}, expected {magic!r}")
    (version,) = struct.unpack_from("<I", buf, len(magic))
    if version != VERSION:
        raise FormatError(f"{path}: unsupported version {version}")
    dims = struct.unpack_from(f"<{ndims}Q", buf, len(magic) + 4)
    return dims, size


def _payload(buf: bytes, offset: int, dtype: np.dtype, count: int, path) -> np.ndarray:
    expected = offset + dtype.itemsize * count
    if len(buf) != expected:
        raise FormatError(f"{path}: expected {expected} bytes, found {len(buf)}")
    return np.frombuffer(buf, dtype=dtype, count=count, offset=offset).astype(dtype.newbyteorder("="))


def encode_cvec(z) -> bytes:
    z = np.asarray(z, dtype=np.complex128).ravel()
    return _header(b"CVEC1", z.size) + z.astype(_C16).tobytes()


def decode_cvec(buf: bytes, path="<bytes>") -> np.ndarray:
    (n,), offset = _read_header(buf, b"CVEC1", 1, path)
    return _payload(buf, offset, _C16, n, path)


def encode_yobs(y) -> bytes:
    y = np.asarray(y, dtype=np.float64).ravel()
    return _header(b"YOBS1", y.size) + y.astype(_F8).tobytes()


def decode_yobs(buf: bytes, path="<bytes>") -> np.ndarray:
    (m,), offset = _read_header(buf, b"YOBS1", 1, path)
    return _payload(buf, offset, _F8, m, path)


def encode_cdpe(codes) -> bytes:
    codes = np.atleast_2d(np.asarray(codes, dtype=np.complex128))
    L, n = codes.shape
    return _header(b"CDPE1", n, L) + codes.astype(_C16).tobytes()


def decode_cdpe(buf: bytes, path="<bytes>") -> np.ndarray:
    (n, L), offset = _read_header(buf, b"CDPE1", 2, path)
    return _payload(buf, offset, _C16, n * L, path).reshape(L, n)


def _write(path, data: bytes) -> None:
    with open(path, "wb") as fh:
        fh.write(data)


def _read(path) -> bytes:
    with open(path, "rb") as fh:
        return fh.read()


def write_cvec(path: str | os.PathLike, z) -> None:
    _write(path, encode_cvec(z))


def read_cvec(path: str | os.PathLike) -> np.ndarray:
    return decode_cvec(_read(path), path)


def write_yobs(path: str | os.PathLike, y) -> None:
    _write(path, encode_yobs(y))


def read_yobs(path: str | os.PathLike) -> np.ndarray:
    return decode_yobs(_read(path), path)


def write_cdpe(path: str | os.PathLike, codes) -> None:
    _write(path, encode_cdpe(codes))


def read_cdpe(path: str | os.PathLike) -> np.ndarray:
    return decode_cdpe(_read(path), path)
