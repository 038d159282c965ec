"""End-to-end training-pair factory: sRGB corpus -> noisy/clean raw pairs.

Each source image is downsampled 2x, randomly cropped and flipped,
unprocessed into linear raw RGB, and mosaicked; the mosaic becomes the
clean target, a shot/read-noise corrupted copy becomes the network input,
and a per-pixel noise-level map rides along. Everything is keyed by
(run seed, source id) so corpus generation is order-independent and
reproducible file by file.
"""

from __future__ import annotations

import json
import logging
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from . import container
from .errors import DimensionError, FormatError, PipelineError
from .fileio import SUPPORTED_SUFFIXES, read_image
from .images import (BayerImage, BayerPattern, Colorspace, PlanarImage,
                     downsample_2x_gaussian, mosaic, random_crop_flip)
from .noise import (NoiseParams, apply_shot_read_noise, noise_stddev_map,
                    sample_noise_params)
from .process import PipelineParams
from .profiles import CameraProfile, profile_hash
from .seeding import key_hash, seeded_rng
from .unprocess import unprocess

log = logging.getLogger(__name__)

DEFAULT_CROP_SIZE = 128
SPLIT_FRACTIONS = {"train": 0.90, "val": 0.05, "test": 0.05}


class UndersizedSourceError(DimensionError):
    """Source image too small for downsample-then-crop."""


def pack_bayer_planes(bayer: BayerImage) -> PlanarImage:
    """Split a CFA plane into 4 half-resolution channels.

    Channels follow the pattern's 2x2 raster order (R, Gr, Gb, B for RGGB).
    Exactly invertible by :func:`unpack_bayer_planes`.
    """
    planes = np.stack([bayer.samples[di::2, dj::2] for (di, dj), _ in bayer.pattern.sites()])
    return PlanarImage(planes, Colorspace.LINEAR_RAW)


def unpack_bayer_planes(planes: PlanarImage, pattern: BayerPattern) -> BayerImage:
    """Re-interleave 4 half-resolution channels into a CFA plane."""
    if planes.channels != 4:
        raise DimensionError(f"expected 4 channels, got {planes.channels}")
    out = np.empty((planes.height * 2, planes.width * 2), dtype=np.float32)
    for k, ((di, dj), _) in enumerate(pattern.sites()):
        out[di::2, dj::2] = planes.samples[k]
    return BayerImage(out, pattern)


@dataclass(frozen=True)
class TrainingExample:
    """One synthesized pair: noisy input, clean target, noise map, metadata."""

    noisy_planes: PlanarImage
    clean_planes: PlanarImage
    noise_map: PlanarImage
    params: PipelineParams
    noise: NoiseParams
    source_id: str

    def __post_init__(self):
        shape = self.noisy_planes.samples.shape
        if self.clean_planes.samples.shape != shape or self.noise_map.samples.shape != shape:
            raise DimensionError("noisy, clean, and noise-map planes must share geometry")
        expected = noise_stddev_map(self.noisy_planes, self.noise)
        if not np.array_equal(self.noise_map.samples, expected.samples):
            raise PipelineError("noise map does not match recomputation from noisy planes")


def synthesize_example(srgb: PlanarImage, profile: CameraProfile,
                       rng: np.random.Generator, source_id: str = "",
                       crop_size: int = DEFAULT_CROP_SIZE,
                       flip: bool = True) -> TrainingExample:
    """Synthesize one noisy/clean training pair from an sRGB source image.

    Stage order: 2x Gaussian downsample, random crop/flip, unprocess,
    mosaic (clean), then sampled shot/read noise on the mosaic (noisy,
    clipped to [0, 1]). The noise map is evaluated on the noisy planes.
    """
    if srgb.channels != 3:
        raise DimensionError(f"source must have 3 channels, got {srgb.channels}")
    if srgb.height < 2 * crop_size or srgb.width < 2 * crop_size:
        raise UndersizedSourceError(
            f"source {srgb.height}x{srgb.width} too small for 2x downsample "
            f"then {crop_size}-crop (needs {2 * crop_size} per side)")
    small = downsample_2x_gaussian(srgb)
    crop = random_crop_flip(small, crop_size, rng, flip=flip)
    raw_rgb, params = unprocess(crop, profile.unprocess_config, rng,
                                pattern=profile.bayer_pattern)
    clean_bayer = mosaic(raw_rgb, profile.bayer_pattern)
    noise_params = sample_noise_params(profile.noise_config, rng)
    noisy_bayer = apply_shot_read_noise(clean_bayer, noise_params, rng, clip=True)
    noisy_planes = pack_bayer_planes(noisy_bayer)
    clean_planes = pack_bayer_planes(clean_bayer)
    noise_map = noise_stddev_map(noisy_planes, noise_params)
    return TrainingExample(noisy_planes=noisy_planes, clean_planes=clean_planes,
                           noise_map=noise_map, params=params, noise=noise_params,
                           source_id=source_id)


def split_for_key(key: str) -> str:
    """Assign a corpus key to train/val/test by stable hash (90/5/5)."""
    u = key_hash(key) / 2.0 ** 64
    if u < SPLIT_FRACTIONS["train"]:
        return "train"
    if u < SPLIT_FRACTIONS["train"] + SPLIT_FRACTIONS["val"]:
        return "val"
    return "test"


def assign_splits(keys) -> dict[str, str]:
    """Split assignment for a whole corpus; a pure function of each key."""
    return {key: split_for_key(key) for key in keys}


def example_to_container(path, example: TrainingExample, seed: int,
                         config_hash: str) -> None:
    sidecar = container.sidecar_dict(example.params, example.noise,
                                     example.source_id, seed, config_hash)
    container.write_container(path, example.noisy_planes, example.clean_planes,
                              example.noise_map, sidecar)


def example_from_container(path) -> TrainingExample:
    noisy, clean, noise_map, sidecar = container.read_container(path)
    params, noise_params = container.sidecar_params(sidecar)
    return TrainingExample(noisy_planes=noisy, clean_planes=clean,
                           noise_map=noise_map, params=params, noise=noise_params,
                           source_id=str(sidecar.get("source_id", "")))


def list_sources(source_dir) -> list[Path]:
    source_dir = Path(source_dir)
    if not source_dir.is_dir():
        raise FormatError(f"{source_dir} is not a directory")
    return sorted(p for p in source_dir.iterdir()
                  if p.is_file() and p.suffix.lower() in SUPPORTED_SUFFIXES)


def synthesize_corpus(source_dir, profile: CameraProfile, seed: int, out_dir,
                      crop_size: int = DEFAULT_CROP_SIZE) -> dict:
    """Synthesize one container per readable source image, plus a manifest.

    Per-image randomness is keyed by (seed, filename) so reruns and partial
    runs produce identical bytes; existing valid containers with a matching
    config hash are kept as-is. Unreadable or undersized sources are
    skipped and recorded, not fatal. Returns the manifest summary.
    """
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    cfg_hash = profile_hash(profile)
    records = []
    counts = {"train": 0, "val": 0, "test": 0}
    skipped = 0
    for path in list_sources(source_dir):
        source_id = path.name
        out_name = source_id + ".uraw"
        out_path = out_dir / out_name
        if _container_is_current(out_path, cfg_hash, seed):
            log.info("keeping existing %s", out_name)
        else:
            try:
                srgb = read_image(path)
                example = synthesize_example(srgb, profile,
                                             seeded_rng(seed, source_id),
                                             source_id=source_id,
                                             crop_size=crop_size)
                example_to_container(out_path, example, seed, cfg_hash)
            except (PipelineError, OSError) as exc:
                log.warning("skipping %s: %s", source_id, exc)
                records.append({"record": "skipped", "source_id": source_id,
                                "reason": str(exc)})
                skipped += 1
                continue
        split = split_for_key(source_id)
        counts[split] += 1
        records.append({"record": "example", "source_id": source_id,
                        "file": out_name, "split": split})
    summary = {"record": "run", "schema": 1, "seed": seed, "config_hash": cfg_hash,
               "crop_size": crop_size, "counts": counts,
               "examples": sum(counts.values()), "skipped": skipped}
    manifest_path = out_dir / "manifest.jsonl"
    with open(manifest_path, "w", encoding="utf-8") as fh:
        for record in [summary] + records:
            fh.write(json.dumps(record, sort_keys=True, separators=(",", ":")) + "\n")
    return summary


def _container_is_current(path: Path, cfg_hash: str, seed: int) -> bool:
    if not path.is_file():
        return False
    try:
        _, _, _, sidecar = container.read_container(path)
    except (FormatError, OSError):
        return False
    return sidecar.get("config_hash") == cfg_hash and sidecar.get("seed") == seed
