"""Reading and writing sRGB images as PNG or binary PPM/PGM.

Integer samples are mapped to [0, 1] by x / (2^bits - 1). PNG handles
8-bit color/gray and 16-bit gray; 16-bit color round-trips through PPM
(which stores 16-bit samples big-endian, per the netpbm convention).
"""

from __future__ import annotations

import re
from pathlib import Path

import numpy as np
from PIL import Image

from .errors import DimensionError, FormatError
from .images import Colorspace, PlanarImage

SUPPORTED_SUFFIXES = (".png", ".ppm", ".pgm", ".pnm")


def _planar_from_array(arr: np.ndarray, maxval: int) -> PlanarImage:
    data = arr.astype(np.float32) / np.float32(maxval)
    if data.ndim == 2:
        data = data[None, :, :]
    else:
        data = np.moveaxis(data, -1, 0)
    return PlanarImage(data, Colorspace.GAMMA_SRGB)


def _read_pnm(path: Path) -> PlanarImage:
    blob = path.read_bytes()
    if blob[:2] not in (b"P5", b"P6"):
        raise FormatError(f"{path}: only binary PGM (P5) and PPM (P6) are supported")
    # Header: magic, width, height, maxval; '#' comments allowed between tokens.
    tokens = []
    pos = 2
    while len(tokens) < 3:
        m = re.match(rb"(?:\s+|#[^\n]*\n)*(\d+)", blob[pos:])
        if not m:
            raise FormatError(f"{path}: malformed PNM header")
        tokens.append(int(m.group(1)))
        pos += m.end()
    width, height, maxval = tokens
    pos += 1  # single whitespace after maxval
    if maxval not in (255, 65535):
        raise FormatError(f"{path}: unsupported maxval {maxval}")
    channels = 3 if blob[:2] == b"P6" else 1
    dtype = np.dtype(">u2") if maxval == 65535 else np.dtype("u1")
    count = width * height * channels
    data = np.frombuffer(blob, dtype=dtype, count=count, offset=pos)
    if data.size != count:
        raise FormatError(f"{path}: truncated pixel data")
    arr = data.reshape(height, width, channels) if channels == 3 else data.reshape(height, width)
    return _planar_from_array(arr, maxval)


def _read_png(path: Path) -> PlanarImage:
    with Image.open(path) as im:
        if im.mode in ("I;16", "I;16B", "I"):
            arr = np.asarray(im, dtype=np.uint32)
            return _planar_from_array(arr, 65535)
        if im.mode == "RGB" and _png_bit_depth(path) == 16:
            # Pillow silently truncates 48-bit color PNGs to 8 bits.
            raise FormatError(f"{path}: 16-bit color PNG is not supported; "
                              f"convert to 16-bit PPM")
        if im.mode not in ("RGB", "L"):
            im = im.convert("RGB")
        return _planar_from_array(np.asarray(im), 255)


def _png_bit_depth(path: Path) -> int:
    with open(path, "rb") as fh:
        header = fh.read(25)
    return header[24] if len(header) == 25 else 0


def read_image(path) -> PlanarImage:
    """Load a PNG/PPM/PGM file as a gamma-encoded image in [0, 1]."""
    path = Path(path)
    suffix = path.suffix.lower()
    if suffix not in SUPPORTED_SUFFIXES:
        raise FormatError(f"{path}: unsupported image format {suffix!r}")
    try:
        if suffix == ".png":
            return _read_png(path)
        return _read_pnm(path)
    except (OSError, ValueError) as exc:
        raise FormatError(f"{path}: cannot read image ({exc})") from exc


def _quantize(img: PlanarImage, bits: int) -> np.ndarray:
    maxval = (1 << bits) - 1
    scaled = np.rint(np.clip(img.samples, 0.0, 1.0) * maxval)
    return scaled.astype(np.uint8 if bits == 8 else np.uint16)


def write_image(path, img: PlanarImage, bits: int = 8) -> None:
    """Write a 1- or 3-channel image as PNG or binary PPM/PGM."""
    path = Path(path)
    if bits not in (8, 16):
        raise FormatError(f"bit depth must be 8 or 16, got {bits}")
    if img.channels not in (1, 3):
        raise DimensionError(f"can only write 1- or 3-channel images, got {img.channels}")
    data = _quantize(img, bits)
    suffix = path.suffix.lower()
    if suffix == ".png":
        if img.channels == 1:
            Image.fromarray(data[0]).save(path)  # uint8 -> L, uint16 -> I;16
        elif bits == 8:
            Image.fromarray(np.moveaxis(data, 0, -1), mode="RGB").save(path)
        else:
            raise FormatError("16-bit color PNG is not supported; use .ppm instead")
    elif suffix in (".ppm", ".pgm", ".pnm"):
        magic = b"P6" if img.channels == 3 else b"P5"
        maxval = (1 << bits) - 1
        payload = np.moveaxis(data, 0, -1) if img.channels == 3 else data[0]
        if bits == 16:
            payload = payload.astype(">u2")
        with open(path, "wb") as fh:
            fh.write(magic + b"\n%d %d\n%d\n" % (img.width, img.height, maxval))
            fh.write(payload.tobytes())
    else:
        raise FormatError(f"{path}: unsupported image format {suffix!r}")
