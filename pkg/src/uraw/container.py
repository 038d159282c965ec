"""On-disk container for one training example.

Layout (all integers little-endian):

    bytes 0-3    magic "URAW"
    bytes 4-5    format version (uint16) = 1
    bytes 6-7    dtype tag (uint16) = 1, meaning float32 little-endian
    bytes 8-11   channels (uint32)
    bytes 12-15  plane height (uint32)
    bytes 16-19  plane width (uint32)
    3 blocks of channels*height*width float32 samples, channel-major:
                 noisy planes, clean planes, noise-level map
    uint32       sidecar byte length
    sidecar      UTF-8 JSON: pipeline params, noise params, source id,
                 seed, config hash
"""

from __future__ import annotations

import json
import struct
from pathlib import Path

import numpy as np

from .errors import FormatError
from .images import Colorspace, PlanarImage
from .noise import NoiseParams
from .process import PipelineParams

MAGIC = b"URAW"
VERSION = 1
DTYPE_FLOAT32_LE = 1
_HEADER = struct.Struct("<4sHHIII")

SIDECAR_SCHEMA = 1


def sidecar_dict(params: PipelineParams, noise: NoiseParams, source_id: str,
                 seed: int, config_hash: str) -> dict:
    return {
        "schema": SIDECAR_SCHEMA,
        "source_id": source_id,
        "seed": seed,
        "config_hash": config_hash,
        "pipeline": params.to_dict(),
        "noise": {"lambda_shot": noise.lambda_shot, "lambda_read": noise.lambda_read},
    }


def encode_sidecar(sidecar: dict) -> bytes:
    return json.dumps(sidecar, sort_keys=True, separators=(",", ":")).encode("utf-8")


def write_container(path, noisy: PlanarImage, clean: PlanarImage, noise_map: PlanarImage,
                    sidecar: dict) -> None:
    """Write one example; the three images must share geometry."""
    shape = noisy.samples.shape
    if clean.samples.shape != shape or noise_map.samples.shape != shape:
        raise FormatError("noisy, clean, and noise-map blocks must share geometry")
    channels, height, width = shape
    header = _HEADER.pack(MAGIC, VERSION, DTYPE_FLOAT32_LE, channels, height, width)
    sidecar_bytes = encode_sidecar(sidecar)
    with open(path, "wb") as fh:
        fh.write(header)
        for img in (noisy, clean, noise_map):
            fh.write(np.ascontiguousarray(img.samples, dtype="<f4").tobytes())
        fh.write(struct.pack("<I", len(sidecar_bytes)))
        fh.write(sidecar_bytes)


def read_container(path) -> tuple[PlanarImage, PlanarImage, PlanarImage, dict]:
    """Read one example back as (noisy, clean, noise_map, sidecar)."""
    path = Path(path)
    blob = path.read_bytes()
    if len(blob) < _HEADER.size:
        raise FormatError(f"{path}: file too short for container header")
    magic, version, dtype_tag, channels, height, width = _HEADER.unpack_from(blob)
    if magic != MAGIC:
        raise FormatError(f"{path}: bad magic {magic!r}")
    if version != VERSION:
        raise FormatError(f"{path}: unsupported container version {version}")
    if dtype_tag != DTYPE_FLOAT32_LE:
        raise FormatError(f"{path}: unsupported dtype tag {dtype_tag}")
    block = channels * height * width
    offset = _HEADER.size
    images = []
    for _ in range(3):
        data = np.frombuffer(blob, dtype="<f4", count=block, offset=offset)
        if data.size != block:
            raise FormatError(f"{path}: truncated sample block")
        images.append(PlanarImage(data.reshape(channels, height, width),
                                  Colorspace.LINEAR_RAW))
        offset += block * 4
    if len(blob) < offset + 4:
        raise FormatError(f"{path}: missing sidecar")
    (sidecar_len,) = struct.unpack_from("<I", blob, offset)
    offset += 4
    raw = blob[offset:offset + sidecar_len]
    if len(raw) != sidecar_len:
        raise FormatError(f"{path}: truncated sidecar")
    try:
        sidecar = json.loads(raw.decode("utf-8"))
    except (UnicodeDecodeError, json.JSONDecodeError) as exc:
        raise FormatError(f"{path}: invalid sidecar JSON ({exc})") from exc
    return images[0], images[1], images[2], sidecar


def sidecar_params(sidecar: dict) -> tuple[PipelineParams, NoiseParams]:
    """Reconstruct the parameter objects stored in a sidecar."""
    try:
        params = PipelineParams.from_dict(sidecar["pipeline"])
        noise = NoiseParams(lambda_shot=sidecar["noise"]["lambda_shot"],
                            lambda_read=sidecar["noise"]["lambda_read"])
    except (KeyError, TypeError) as exc:
        raise FormatError(f"sidecar is missing required fields ({exc})") from exc
    return params, noise
