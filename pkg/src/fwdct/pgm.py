"""Binary PGM (P5) reading and writing, 8-bit only."""

from __future__ import annotations

from dataclasses import dataclass
from pathlib import Path

import numpy as np


class PGMError(ValueError):
    pass


@dataclass(frozen=True, eq=False)
class GrayImage:
    """8-bit grayscale raster, rows first."""

    pixels: np.ndarray

    def __post_init__(self):
        p = np.asarray(self.pixels)
        if p.ndim != 2:
            raise ValueError("image must be 2-D")
        if p.dtype != np.uint8:
            if np.any((p < 0) | (p > 255)) or np.any(p != np.round(p)):
                raise ValueError("pixel values must be integers in [0, 255]")
            p = p.astype(np.uint8)
        p = p.copy()
        p.flags.writeable = False
        object.__setattr__(self, "pixels", p)

    @property
    def height(self) -> int:
        return self.pixels.shape[0]

    @property
    def width(self) -> int:
        return self.pixels.shape[1]

    def require_blocks(self, size: int = 8) -> None:
        if self.width % size or self.height % size:
            raise ValueError(f"image size {self.width}x{self.height} is not a multiple of {size}")

    def blocks(self, size: int = 8) -> np.ndarray:
        """View as ``(rows, cols, size, size)`` float blocks."""
        self.require_blocks(size)
        h, w = self.height // size, self.width // size
        return (self.pixels.astype(float)
                .reshape(h, size, w, size).transpose(0, 2, 1, 3))

    @classmethod
    def from_blocks(cls, blocks: np.ndarray) -> "GrayImage":
        h, w, s, _ = blocks.shape
        return cls(blocks.transpose(0, 2, 1, 3).reshape(h * s, w * s))

    def __eq__(self, other) -> bool:
        return isinstance(other, GrayImage) and np.array_equal(self.pixels, other.pixels)


def _tokens(data: bytes, count: int) -> tuple[list[bytes], int]:
    """First ``count`` whitespace-separated header tokens and the offset after them."""
    out, pos, n = [], 0, len(data)
    while len(out) < count:
        while pos < n and data[pos:pos + 1].isspace():
            pos += 1
        if pos < n and data[pos:pos + 1] == b"#":
            while pos < n and data[pos:pos + 1] not in (b"\n", b"\r"):
                pos += 1
            continue
        start = pos
        while pos < n and not data[pos:pos + 1].isspace() and data[pos:pos + 1] != b"#":
            pos += 1
        if start == pos:
            raise PGMError("truncated header")
        out.append(data[start:pos])
    return out, pos


def parse_pgm(data: bytes) -> GrayImage:
    toks, pos = _tokens(data, 4)
    if toks[0] != b"P5":
        raise PGMError(f"not a binary PGM (magic {toks[0]!r})")
    try:
        width, height, maxval = (int(t) for t in toks[1:])
    except ValueError:
        raise PGMError("malformed header") from None
    if width <= 0 or height <= 0 or not 0 < maxval < 256:
        raise PGMError(f"unsupported header {width}x{height} maxval {maxval}")
    pos += 1  # single whitespace byte before the raster
    raster = data[pos:pos + width * height]
    if len(raster) != width * height:
        raise PGMError("truncated raster")
    return GrayImage(np.frombuffer(raster, dtype=np.uint8).reshape(height, width))


def read_pgm(path) -> GrayImage:
    return parse_pgm(Path(path).read_bytes())


def encode_pgm(img: GrayImage) -> bytes:
    header = f"P5\n{img.width} {img.height}\n255\n".encode("ascii")
    return header + img.pixels.tobytes()


def write_pgm(path, img: GrayImage) -> None:
    Path(path).write_bytes(encode_pgm(img))
