"""Binary PGM (P5) and PPM (P6) reading and writing, 8-bit only."""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from ..core import WirtflowError


class ImageFormatError(WirtflowError, ValueError):
    pass


class UnsupportedFormatError(ImageFormatError):
    pass


class MalformedHeaderError(ImageFormatError):
    pass


class UnsupportedMaxvalError(ImageFormatError):
    pass


class TruncatedPayloadError(ImageFormatError):
    pass


_CHANNELS = {b"P5": 1, b"P6": 3}


@dataclass
class ImageProblem:
    """Image as per-channel real vectors in [0, 1], vectorised row-major."""

    width: int
    height: int
    channels: list

    def __post_init__(self):
        if len(self.channels) not in (1, 3):
            raise ValueError("images have 1 or 3 channels")
        n = self.width * self.height
        chans = []
        for c in self.channels:
            c = np.asarray(c, dtype=np.float64).ravel()
            if c.size != n:
                raise ValueError(f"channel has {c.size} pixels, expected {n}")
            if not np.all(np.isfinite(c)):
                raise ValueError("pixel values must be finite")
            chans.append(c)
        self.channels = chans

    @property
    def n(self) -> int:
        return self.width * self.height

    def to_array(self) -> np.ndarray:
        """``(height, width)`` or ``(height, width, 3)`` array."""
        stacked = np.stack([c.reshape(self.height, self.width) for c in self.channels], axis=-1)
        return stacked[..., 0] if len(self.channels) == 1 else stacked


def _tokens(buf: bytes, count: int) -> tuple[list[bytes], int]:
    tokens, pos = [], 0
    while len(tokens) < count:
        while pos < len(buf) and buf[pos:pos + 1].isspace():
            pos += 1
        if pos < len(buf) and buf[pos:pos + 1] == b"#":
            while pos < len(buf) and buf[pos:pos + 1] not in (b"\n", b"\r"):
                pos += 1
            continue
        start = pos
        while pos < len(buf) and not buf[pos:pos + 1].isspace() and buf[pos:pos + 1] != b"#":
            pos += 1
        if start == pos:
            raise MalformedHeaderError("header ended early")
        tokens.append(buf[start:pos])
    return tokens, pos


def parse_image(buf: bytes) -> ImageProblem:
    magic = buf[:2]
    if magic not in _CHANNELS:
        raise UnsupportedFormatError(f"unsupported image format {magic!r}; expected P5 or P6")
    (width, height, maxval), pos = _tokens(buf[2:], 3)
    pos += 2
    try:
        width, height, maxval = int(width), int(height), int(maxval)
    except ValueError as exc:
        raise MalformedHeaderError(f"non-numeric header field: {exc}") from None
    if width < 1 or height < 1:
        raise MalformedHeaderError(f"bad image size {width}x{height}")
    if not 1 <= maxval <= 255:
        raise UnsupportedMaxvalError(f"only 8-bit images are supported, maxval={maxval}")
    if pos >= len(buf) or not buf[pos:pos + 1].isspace():
        raise MalformedHeaderError("missing whitespace after maxval")
    pos += 1
    nchan = _CHANNELS[magic]
    need = width * height * nchan
    payload = buf[pos:pos + need]
    if len(payload) < need:
        raise TruncatedPayloadError(f"expected {need} pixel bytes, found {len(payload)}")
    pixels = np.frombuffer(payload, dtype=np.uint8).astype(np.float64) / maxval
    pixels = pixels.reshape(height * width, nchan)
    return ImageProblem(width, height, [pixels[:, c].copy() for c in range(nchan)])


def ingest_image(path) -> ImageProblem:
    with open(path, "rb") as fh:
        return parse_image(fh.read())


def encode_image(problem: ImageProblem) -> bytes:
    magic = b"P5" if len(problem.channels) == 1 else b"P6"
    data = np.stack(problem.channels, axis=-1)
    data = np.round(np.clip(data, 0.0, 1.0) * 255).astype(np.uint8)
    return magic + f"\n{problem.width} {problem.height}\n255\n".encode() + data.tobytes()


def write_image(path, problem: ImageProblem) -> None:
    with open(path, "wb") as fh:
        fh.write(encode_image(problem))


def test_pattern(width: int = 64, height: int = 64, channels: int = 1) -> ImageProblem:
    """Deterministic smooth image with a disc, quantised to 8 bits."""
    yy, xx = np.mgrid[0:height, 0:width]
    u, v = xx / width, yy / height
    chans = []
    for c in range(channels):
        base = 0.5 + 0.3 * np.sin(6 * u + 2 * c) * np.cos(4 * v - c)
        disc = ((u - 0.5) ** 2 + (v - 0.4 - 0.1 * c) ** 2) < 0.06
        chans.append(np.round(np.clip(base + 0.2 * disc, 0, 1) * 255) / 255)
    return ImageProblem(width, height, chans)


test_pattern.__test__ = False
