"""Raster images, bit-exact bilinear resize, collage composition, and PPM P6 IO.

The resize is fully specified so independent implementations agree
byte-for-byte: half-pixel-center source mapping, clamped to the valid range,
bilinear blend in float64, channels rounded half-away-from-zero. PPM P6 with
maxval 255 is the interchange format; readers accept ``#`` comments in the
header, writers emit the canonical single-space/newline form.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import PpmParseError
from .geometry import GridSpec


@dataclass(frozen=True)
class RasterImage:
    """8-bit RGB image; ``pixels`` is the row-major R,G,B byte stream."""

    width: int
    height: int
    pixels: bytes

    def __post_init__(self):
        if self.width < 1 or self.height < 1:
            raise ValueError(f"image dimensions must be positive, got {self.width}x{self.height}")
        if len(self.pixels) != self.width * self.height * 3:
            raise ValueError(
                f"pixel payload is {len(self.pixels)} bytes, expected "
                f"{self.width * self.height * 3} for {self.width}x{self.height}"
            )

    def to_array(self) -> np.ndarray:
        """(height, width, 3) uint8 view of the pixel data."""
        return np.frombuffer(self.pixels, dtype=np.uint8).reshape(self.height, self.width, 3)

    @classmethod
    def from_array(cls, arr: np.ndarray) -> "RasterImage":
        arr = np.ascontiguousarray(arr, dtype=np.uint8)
        h, w, c = arr.shape
        if c != 3:
            raise ValueError(f"expected 3 channels, got {c}")
        return cls(w, h, arr.tobytes())

    @classmethod
    def uniform(cls, width: int, height: int, rgb: tuple[int, int, int]) -> "RasterImage":
        return cls(width, height, bytes(rgb) * (width * height))


@dataclass(frozen=True)
class CollageLayout:
    """Equal-sized pixel cells for an s x s collage."""

    spec: GridSpec
    cell_w: int
    cell_h: int

    def __post_init__(self):
        if self.cell_w < 1 or self.cell_h < 1:
            raise ValueError(f"cell dimensions must be positive, got {self.cell_w}x{self.cell_h}")

    @property
    def collage_w(self) -> int:
        return self.spec.s * self.cell_w

    @property
    def collage_h(self) -> int:
        return self.spec.s * self.cell_h


def _source_coords(dst_n: int, src_n: int) -> np.ndarray:
    # (dst + 0.5) * (src/dst) - 0.5, clamped to the valid sample range
    scale = src_n / dst_n
    coords = (np.arange(dst_n, dtype=np.float64) + 0.5) * scale - 0.5
    return np.clip(coords, 0.0, src_n - 1)


def resize_bilinear(img: RasterImage, out_w: int, out_h: int) -> RasterImage:
    """Resize with half-pixel-center bilinear sampling.

    Deterministic: float64 arithmetic, channel results rounded
    half-away-from-zero. Identity at unchanged size.
    """
    if out_w < 1 or out_h < 1:
        raise ValueError(f"target dimensions must be positive, got {out_w}x{out_h}")
    src = img.to_array().astype(np.float64)

    sx = _source_coords(out_w, img.width)
    sy = _source_coords(out_h, img.height)
    x0 = np.floor(sx).astype(np.intp)
    y0 = np.floor(sy).astype(np.intp)
    x1 = np.minimum(x0 + 1, img.width - 1)
    y1 = np.minimum(y0 + 1, img.height - 1)
    fx = (sx - x0)[np.newaxis, :, np.newaxis]
    fy = (sy - y0)[:, np.newaxis, np.newaxis]

    top = src[y0[:, None], x0[None, :]] * (1.0 - fx) + src[y0[:, None], x1[None, :]] * fx
    bot = src[y1[:, None], x0[None, :]] * (1.0 - fx) + src[y1[:, None], x1[None, :]] * fx
    blended = top * (1.0 - fy) + bot * fy

    # values are >= 0, so half-away-from-zero is floor(v + 0.5)
    out = np.floor(blended + 0.5).astype(np.uint8)
    return RasterImage.from_array(out)


def compose_collage(images: list[RasterImage], layout: CollageLayout) -> RasterImage:
    """Resize each image to the cell size and blit it into its row-major cell."""
    n = layout.spec.n
    if len(images) != n:
        raise ValueError(f"expected {n} images for a {layout.spec.s}x{layout.spec.s} collage, got {len(images)}")
    s = layout.spec.s
    out = np.zeros((layout.collage_h, layout.collage_w, 3), dtype=np.uint8)
    for i, img in enumerate(images):
        row, col = divmod(i, s)
        cell = resize_bilinear(img, layout.cell_w, layout.cell_h).to_array()
        out[row * layout.cell_h : (row + 1) * layout.cell_h, col * layout.cell_w : (col + 1) * layout.cell_w] = cell
    return RasterImage.from_array(out)


_WS = b" \t\r\n\v\f"


def _skip_space(data: bytes, pos: int) -> int:
    # whitespace and '#' comments (to end of line) are interchangeable in the header
    while pos < len(data):
        c = data[pos : pos + 1]
        if c in (b"#",):
            nl = data.find(b"\n", pos)
            if nl == -1:
                raise PpmParseError("unterminated header comment", pos)
            pos = nl + 1
        elif c and c in _WS:
            pos += 1
        else:
            break
    return pos


def _read_int(data: bytes, pos: int, what: str) -> tuple[int, int]:
    start = pos
    while pos < len(data) and data[pos : pos + 1].isdigit():
        pos += 1
    if pos == start:
        raise PpmParseError(f"expected {what}", start)
    return int(data[start:pos]), pos


def read_ppm(data: bytes) -> RasterImage:
    """Parse a binary PPM (P6, maxval 255). Errors name the failing byte offset."""
    if data[:2] != b"P6":
        raise PpmParseError(f"bad magic {data[:2]!r}, expected b'P6'", 0)
    pos = _skip_space(data, 2)
    width, pos = _read_int(data, pos, "width")
    pos = _skip_space(data, pos)
    height, pos = _read_int(data, pos, "height")
    pos = _skip_space(data, pos)
    maxval, pos = _read_int(data, pos, "maxval")
    if maxval != 255:
        raise PpmParseError(f"unsupported maxval {maxval}, expected 255", pos - len(str(maxval)))
    if width < 1 or height < 1:
        raise PpmParseError(f"non-positive dimensions {width}x{height}", pos)
    if pos >= len(data) or data[pos : pos + 1] not in _WS:
        raise PpmParseError("expected single whitespace byte after maxval", pos)
    pos += 1
    need = width * height * 3
    payload = data[pos : pos + need]
    if len(payload) < need:
        raise PpmParseError(f"truncated payload, have {len(payload)} of {need} bytes", len(data))
    if pos + need != len(data):
        raise PpmParseError("trailing data after pixel payload", pos + need)
    return RasterImage(width, height, payload)


def write_ppm(img: RasterImage) -> bytes:
    """Canonical PPM P6 bytes: ``P6\\n<w> <h>\\n255\\n`` + payload."""
    return b"P6\n%d %d\n255\n" % (img.width, img.height) + img.pixels


def read_ppm_file(path) -> RasterImage:
    with open(path, "rb") as f:
        return read_ppm(f.read())


def write_ppm_file(path, img: RasterImage) -> None:
    with open(path, "wb") as f:
        f.write(write_ppm(img))
