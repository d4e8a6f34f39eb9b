"""Raster images, PNM I/O, projections, rotation and synthetic noise.

Images are immutable wrappers around 2-D numpy arrays indexed ``[row, col]``.
Binary images use 1 for ink (black) and 0 for background everywhere in the
package.
"""

from __future__ import annotations

import math
import re
from dataclasses import dataclass

import numpy as np

MAX_PIXELS = 1 << 28


def _frozen(array: np.ndarray, dtype) -> np.ndarray:
    out = np.array(array, dtype=dtype, copy=True, order="C")
    if out.ndim != 2:
        raise ValueError(f"expected a 2-D array, got shape {out.shape}")
    if out.shape[0] < 1 or out.shape[1] < 1:
        raise ValueError(f"image dimensions must be positive, got {out.shape[1]}x{out.shape[0]}")
    out.setflags(write=False)
    return out


@dataclass(frozen=True, eq=False)
class GrayImage:
    """8-bit grayscale image, 0 = black ink, 255 = white paper."""

    samples: np.ndarray

    def __post_init__(self):
        arr = np.asarray(self.samples)
        if arr.size and (arr.min() < 0 or arr.max() > 255):
            raise ValueError("gray samples must lie in 0..255")
        object.__setattr__(self, "samples", _frozen(arr, np.uint8))

    @property
    def width(self) -> int:
        return self.samples.shape[1]

    @property
    def height(self) -> int:
        return self.samples.shape[0]

    def __eq__(self, other):
        if not isinstance(other, GrayImage):
            return NotImplemented
        return np.array_equal(self.samples, other.samples)

    def __repr__(self):
        return f"GrayImage({self.width}x{self.height})"


@dataclass(frozen=True, eq=False)
class BinaryImage:
    """Binary image with ``bits[row, col]`` in {0, 1}; 1 marks ink."""

    bits: np.ndarray

    def __post_init__(self):
        arr = np.asarray(self.bits)
        if arr.dtype != bool and arr.size and (arr.min() < 0 or arr.max() > 1):
            raise ValueError("binary image bits must be 0 or 1")
        object.__setattr__(self, "bits", _frozen(arr, np.uint8))

    @classmethod
    def blank(cls, width: int, height: int) -> "BinaryImage":
        return cls(np.zeros((height, width), dtype=np.uint8))

    @property
    def width(self) -> int:
        return self.bits.shape[1]

    @property
    def height(self) -> int:
        return self.bits.shape[0]

    def ink(self) -> int:
        return int(self.bits.sum(dtype=np.int64))

    def __eq__(self, other):
        if not isinstance(other, BinaryImage):
            return NotImplemented
        return np.array_equal(self.bits, other.bits)

    def __repr__(self):
        return f"BinaryImage({self.width}x{self.height}, ink={self.ink()})"


@dataclass(frozen=True)
class BBox:
    """Half-open pixel box: columns ``x0..x1-1`` and rows ``y0..y1-1``."""

    x0: int
    y0: int
    x1: int
    y1: int

    def __post_init__(self):
        if not (0 <= self.x0 < self.x1 and 0 <= self.y0 < self.y1):
            raise ValueError(f"degenerate bbox {self}")

    @property
    def width(self) -> int:
        return self.x1 - self.x0

    @property
    def height(self) -> int:
        return self.y1 - self.y0


def crop(image: BinaryImage, box: BBox) -> BinaryImage:
    if box.x1 > image.width or box.y1 > image.height:
        raise ValueError(f"{box} exceeds {image.width}x{image.height} image")
    return BinaryImage(image.bits[box.y0:box.y1, box.x0:box.x1])


def ink_bbox(image: BinaryImage) -> BBox | None:
    """Tight box around all ink, or None for a blank image."""
    rows = np.flatnonzero(image.bits.any(axis=1))
    if rows.size == 0:
        return None
    cols = np.flatnonzero(image.bits.any(axis=0))
    return BBox(int(cols[0]), int(rows[0]), int(cols[-1]) + 1, int(rows[-1]) + 1)


def h_projection(image: BinaryImage) -> np.ndarray:
    """Ink count per row."""
    return image.bits.sum(axis=1, dtype=np.int64)


def v_projection(image: BinaryImage) -> np.ndarray:
    """Ink count per column."""
    return image.bits.sum(axis=0, dtype=np.int64)


# ---------------------------------------------------------------------------
# PNM

class PNMError(ValueError):
    def __init__(self, message: str, offset: int):
        super().__init__(f"{message} (at byte {offset})")
        self.offset = offset


_WS = b" \t\r\n\v\f"


class _HeaderReader:
    def __init__(self, data: bytes, pos: int):
        self.data = data
        self.pos = pos

    def token(self) -> tuple[bytes, int]:
        data, n = self.data, len(self.data)
        while self.pos < n:
            c = data[self.pos:self.pos + 1]
            if c in _WS:
                self.pos += 1
            elif c == b"#":
                while self.pos < n and data[self.pos:self.pos + 1] not in b"\r\n":
                    self.pos += 1
            else:
                break
        start = self.pos
        while self.pos < n and data[self.pos:self.pos + 1] not in _WS + b"#":
            self.pos += 1
        if start == self.pos:
            raise PNMError("truncated header", start)
        return data[start:self.pos], start

    def integer(self, what: str) -> int:
        tok, at = self.token()
        if not tok.isdigit():
            raise PNMError(f"bad {what} {tok!r}", at)
        return int(tok)


def load_pnm(data: bytes) -> GrayImage | BinaryImage:
    """Decode P1/P2/P4/P5 bytes. PBM ink (1 = black) maps to ink = 1."""
    if len(data) < 2:
        raise PNMError("truncated magic", 0)
    magic = data[:2]
    if magic not in (b"P1", b"P2", b"P4", b"P5"):
        raise PNMError(f"unknown magic {magic!r}", 0)
    rd = _HeaderReader(data, 2)
    width = rd.integer("width")
    height = rd.integer("height")
    if width < 1 or height < 1:
        raise PNMError(f"non-positive dimensions {width}x{height}", rd.pos)
    if width * height > MAX_PIXELS:
        raise PNMError(f"dimension overflow {width}x{height}", rd.pos)
    maxval = 1
    if magic in (b"P2", b"P5"):
        maxval = rd.integer("maxval")
        if not 1 <= maxval <= 65535:
            raise PNMError(f"maxval {maxval} out of range", rd.pos)

    if magic == b"P1":
        body = data[rd.pos:]
        digits = re.sub(rb"#[^\r\n]*|\s", b"", body)
        if len(digits) < width * height:
            raise PNMError("truncated payload", len(data))
        digits = digits[: width * height]
        arr = np.frombuffer(digits, dtype=np.uint8) - ord("0")
        if arr.max() > 1:
            raise PNMError("P1 payload contains a non-bit character", rd.pos)
        return BinaryImage(arr.reshape(height, width))

    if magic == b"P2":
        values = []
        for _ in range(width * height):
            try:
                values.append(rd.integer("sample"))
            except PNMError as err:
                raise PNMError("truncated payload", err.offset) from None
        arr = np.array(values, dtype=np.int64)
        if arr.max() > maxval:
            raise PNMError("sample exceeds maxval", rd.pos)
        return GrayImage(_rescale(arr, maxval).reshape(height, width))

    # binary payloads: exactly one whitespace byte after the last header token
    start = rd.pos + 1
    if magic == b"P4":
        stride = (width + 7) // 8
        need = stride * height
        payload = data[start:start + need]
        if len(payload) < need:
            raise PNMError("truncated payload", len(data))
        packed = np.frombuffer(payload, dtype=np.uint8).reshape(height, stride)
        return BinaryImage(np.unpackbits(packed, axis=1)[:, :width])

    depth = 1 if maxval < 256 else 2
    need = width * height * depth
    payload = data[start:start + need]
    if len(payload) < need:
        raise PNMError("truncated payload", len(data))
    arr = np.frombuffer(payload, dtype=np.uint8 if depth == 1 else ">u2").astype(np.int64)
    if arr.max() > maxval:
        raise PNMError("sample exceeds maxval", start)
    return GrayImage(_rescale(arr, maxval).reshape(height, width))


def _rescale(arr: np.ndarray, maxval: int) -> np.ndarray:
    if maxval == 255:
        return arr
    return (arr * 255 + maxval // 2) // maxval


def save_pnm(image: GrayImage | BinaryImage) -> bytes:
    """Canonical encoding: P4 for binary images, P5 (maxval 255) for gray."""
    if isinstance(image, BinaryImage):
        header = f"P4\n{image.width} {image.height}\n".encode("ascii")
        return header + np.packbits(image.bits, axis=1).tobytes()
    if isinstance(image, GrayImage):
        header = f"P5\n{image.width} {image.height}\n255\n".encode("ascii")
        return header + image.samples.tobytes()
    raise TypeError(f"cannot encode {type(image).__name__}")


def read_pnm(path) -> GrayImage | BinaryImage:
    with open(path, "rb") as fh:
        return load_pnm(fh.read())


def write_pnm(path, image: GrayImage | BinaryImage) -> None:
    with open(path, "wb") as fh:
        fh.write(save_pnm(image))


# ---------------------------------------------------------------------------
# geometry and noise

def rotate(image: BinaryImage, theta: float) -> BinaryImage:
    """Rotate counter-clockwise (as displayed) by ``theta`` degrees.

    Inverse nearest-neighbour mapping about the image centre. The canvas grows
    to the rotated bounding box and keeps the parity of each source dimension,
    so the centre pixel of an odd-sized image stays a pixel centre.
    """
    if abs(theta) > 45:
        raise ValueError(f"rotation {theta} outside [-45, 45] degrees")
    h, w = image.height, image.width
    rad = math.radians(theta)
    c, s = math.cos(rad), math.sin(rad)
    new_w = max(w, math.ceil(w * abs(c) + h * abs(s) - 1e-9))
    new_h = max(h, math.ceil(w * abs(s) + h * abs(c) - 1e-9))
    new_w += (new_w - w) % 2
    new_h += (new_h - h) % 2

    ys, xs = np.mgrid[0:new_h, 0:new_w]
    dx = xs - (new_w - 1) / 2.0
    dy = ys - (new_h - 1) / 2.0
    # y grows downwards, so a visual CCW turn is a clockwise turn in (x, y)
    sx = dx * c - dy * s + (w - 1) / 2.0
    sy = dx * s + dy * c + (h - 1) / 2.0
    ix = np.floor(sx + 0.5).astype(np.int64)
    iy = np.floor(sy + 0.5).astype(np.int64)
    inside = (ix >= 0) & (ix < w) & (iy >= 0) & (iy < h)
    out = np.zeros((new_h, new_w), dtype=np.uint8)
    out[inside] = image.bits[iy[inside], ix[inside]]
    return BinaryImage(out)


def add_salt_pepper(image: BinaryImage, p: float, seed: int) -> BinaryImage:
    """Flip each bit independently with probability ``p``."""
    if not 0.0 <= p <= 1.0:
        raise ValueError(f"noise probability {p} outside [0, 1]")
    rng = np.random.default_rng(seed)
    flips = rng.random(image.bits.shape) < p
    return BinaryImage(image.bits ^ flips.astype(np.uint8))


def pad(image: BinaryImage, left=0, right=0, top=0, bottom=0) -> BinaryImage:
    return BinaryImage(np.pad(image.bits, ((top, bottom), (left, right))))
