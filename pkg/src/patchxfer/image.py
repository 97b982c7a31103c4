"""8-bit RGB images and a minimal PNG codec.

Supports exactly what the pipeline needs: 8-bit greyscale (replicated to
RGB on decode) and 8-bit truecolor, non-interlaced. The decoder reports
the byte offset of any structural fault; the encoder writes filter-0 rows
so decode -> encode round-trips the pixel payload losslessly.
"""

from __future__ import annotations

import struct
import zlib
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .errors import DecodeError, ShapeError
from .tensor import Tensor

_SIGNATURE = b"\x89PNG\r\n\x1a\n"


@dataclass(frozen=True)
class ImageU8:
    """Interleaved 8-bit RGB pixels, shape (height, width, 3)."""

    width: int
    height: int
    pixels: np.ndarray

    def __post_init__(self):
        px = self.pixels
        if px.dtype != np.uint8 or px.shape != (self.height, self.width, 3):
            raise ShapeError(
                f"pixel buffer must be uint8 ({self.height},{self.width},3), "
                f"got {px.dtype} {px.shape}"
            )
        if self.width < 1 or self.height < 1:
            raise ShapeError("image dimensions must be positive")
        px.setflags(write=False)


def to_tensor(img: ImageU8) -> Tensor:
    """(H, W, 3) u8 -> (3, H, W) float tensor scaled into [0, 1] by /255."""
    planes = img.pixels.astype(np.float32).transpose(2, 0, 1) / np.float32(255.0)
    return Tensor(planes, copy=False)


def from_tensor(t: Tensor) -> ImageU8:
    """Clamp a (3, H, W) tensor to [0, 1] and quantize to 8-bit pixels."""
    t.require_channels(3, "from_tensor input")
    scaled = np.clip(t.a.astype(np.float64), 0.0, 1.0) * 255.0
    px = np.rint(scaled).astype(np.uint8).transpose(1, 2, 0)
    return ImageU8(width=t.shape[2], height=t.shape[1], pixels=px)


# --- decoding ---------------------------------------------------------------


def decode_png(data: bytes) -> ImageU8:
    """Decode an 8-bit RGB or greyscale PNG; greyscale is replicated to RGB."""
    if data[:8] != _SIGNATURE:
        raise DecodeError("bad PNG signature", offset=0)

    pos = 8
    header = None
    idat = bytearray()
    idat_offset = -1
    ended = False
    while not ended:
        if pos + 8 > len(data):
            raise DecodeError("truncated chunk header", offset=pos)
        (length,) = struct.unpack_from(">I", data, pos)
        ctype = data[pos + 4 : pos + 8]
        body_at = pos + 8
        crc_at = body_at + length
        if crc_at + 4 > len(data):
            raise DecodeError(f"truncated {ctype!r} chunk", offset=pos)
        body = data[body_at:crc_at]
        (crc,) = struct.unpack_from(">I", data, crc_at)
        if crc != zlib.crc32(ctype + body):
            raise DecodeError(f"CRC mismatch in {ctype!r} chunk", offset=crc_at)

        if ctype == b"IHDR":
            header = _parse_ihdr(body, body_at)
        elif ctype == b"IDAT":
            if header is None:
                raise DecodeError("IDAT before IHDR", offset=pos)
            if idat_offset < 0:
                idat_offset = body_at
            idat.extend(body)
        elif ctype == b"IEND":
            ended = True
        elif header is None:
            raise DecodeError("first chunk is not IHDR", offset=pos)
        pos = crc_at + 4

    if header is None:
        raise DecodeError("missing IHDR chunk", offset=pos)
    if not idat:
        raise DecodeError("missing IDAT chunk", offset=pos)
    width, height, channels = header

    stride = width * channels
    expected = (stride + 1) * height
    try:
        # cap decompression at the size the header promises plus one byte: a
        # stream that inflates past it is malformed, not a reason to exhaust
        # memory, and shows up here as length expected + 1
        raw = zlib.decompressobj().decompress(bytes(idat), expected + 1)
    except zlib.error as e:
        raise DecodeError(f"corrupt compressed stream: {e}", offset=idat_offset)
    if len(raw) != expected:
        raise DecodeError(
            f"decompressed size {len(raw)}, expected {expected}",
            offset=idat_offset,
        )
    planes = _unfilter(raw, height, stride, channels, idat_offset)
    px = planes.reshape(height, width, channels)
    if channels == 1:
        px = np.repeat(px, 3, axis=2)
    return ImageU8(width=width, height=height, pixels=np.ascontiguousarray(px))


def _parse_ihdr(body: bytes, at: int) -> tuple[int, int, int]:
    if len(body) != 13:
        raise DecodeError("IHDR must be 13 bytes", offset=at)
    width, height, depth, color, comp, filt, interlace = struct.unpack(
        ">IIBBBBB", body
    )
    if width == 0 or height == 0:
        raise DecodeError("zero image dimension", offset=at)
    if depth != 8:
        raise DecodeError(f"unsupported bit depth {depth}", offset=at + 8)
    if color not in (0, 2):
        raise DecodeError(f"unsupported color type {color}", offset=at + 9)
    if comp != 0 or filt != 0:
        raise DecodeError("unsupported compression/filter method", offset=at + 10)
    if interlace != 0:
        raise DecodeError("interlaced PNG not supported", offset=at + 12)
    return width, height, 3 if color == 2 else 1


def _unfilter(raw: bytes, height: int, stride: int, bpp: int, at: int) -> np.ndarray:
    out = np.zeros((height, stride), dtype=np.uint8)
    prev = np.zeros(stride, dtype=np.uint8)
    for y in range(height):
        ftype = raw[y * (stride + 1)]
        row = np.frombuffer(
            raw, dtype=np.uint8, count=stride, offset=y * (stride + 1) + 1
        ).copy()
        if ftype == 0:
            pass
        elif ftype == 1:  # Sub
            for i in range(bpp, stride):
                row[i] = (int(row[i]) + int(row[i - bpp])) & 0xFF
        elif ftype == 2:  # Up
            row += prev
        elif ftype == 3:  # Average
            for i in range(stride):
                left = int(row[i - bpp]) if i >= bpp else 0
                row[i] = (int(row[i]) + ((left + int(prev[i])) >> 1)) & 0xFF
        elif ftype == 4:  # Paeth
            for i in range(stride):
                a = int(row[i - bpp]) if i >= bpp else 0
                b = int(prev[i])
                c = int(prev[i - bpp]) if i >= bpp else 0
                p = a + b - c
                pa, pb, pc = abs(p - a), abs(p - b), abs(p - c)
                if pa <= pb and pa <= pc:
                    pred = a
                elif pb <= pc:
                    pred = b
                else:
                    pred = c
                row[i] = (int(row[i]) + pred) & 0xFF
        else:
            raise DecodeError(f"unknown filter type {ftype}", offset=at)
        out[y] = row
        prev = row
    return out


# --- encoding ---------------------------------------------------------------


def encode_png(img: ImageU8) -> bytes:
    ihdr = struct.pack(">IIBBBBB", img.width, img.height, 8, 2, 0, 0, 0)
    rows = bytearray()
    for y in range(img.height):
        rows.append(0)
        rows.extend(img.pixels[y].tobytes())
    idat = zlib.compress(bytes(rows), 6)
    return (
        _SIGNATURE
        + _chunk(b"IHDR", ihdr)
        + _chunk(b"IDAT", idat)
        + _chunk(b"IEND", b"")
    )


def _chunk(ctype: bytes, body: bytes) -> bytes:
    return (
        struct.pack(">I", len(body))
        + ctype
        + body
        + struct.pack(">I", zlib.crc32(ctype + body))
    )


def load_image(path: str | Path) -> ImageU8:
    return decode_png(Path(path).read_bytes())


def save_image(img: ImageU8, path: str | Path) -> None:
    Path(path).write_bytes(encode_png(img))
