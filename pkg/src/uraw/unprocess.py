"""Invert the processing pipeline: map sRGB images into linear raw space.

The inversion runs tone mapping, gamma, color correction, white balance,
and digital gain backwards, sampling realistic per-image parameters along
the way. Because the sampled per-channel gain is usually below unity,
plainly dividing by it would leave the synthetic data with no highlights;
the gain inversion therefore blends back toward the original value above a
threshold so saturated pixels survive.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import ConfigError, DimensionError, DomainError
from .images import BayerPattern, Colorspace, PlanarImage
from .process import (GAMMA_EXPONENT, Matrix3, PipelineParams, apply_ccm,
                      as_matrix3, invert_ccm)


@dataclass(frozen=True)
class CcmSet:
    """Labeled 3x3 camera-RGB-to-sRGB matrices to interpolate between."""

    entries: tuple[tuple[str, Matrix3], ...]

    def __post_init__(self):
        if len(self.entries) == 0:
            raise ConfigError("CCM set must contain at least one matrix")
        normalized = []
        for name, matrix in self.entries:
            m = as_matrix3(matrix)
            invert_ccm(m)  # reject singular members up front
            normalized.append((str(name), m))
        object.__setattr__(self, "entries", tuple(normalized))

    def __len__(self) -> int:
        return len(self.entries)

    @property
    def names(self) -> tuple[str, ...]:
        return tuple(name for name, _ in self.entries)

    def as_array(self) -> np.ndarray:
        """All matrices stacked as a (n, 3, 3) float array."""
        return np.asarray([m for _, m in self.entries], dtype=np.float64)


@dataclass(frozen=True)
class UnprocessConfig:
    """Sampling ranges for the randomized inversion parameters."""

    ccm_set: CcmSet
    red_gain_range: tuple[float, float] = (1.9, 2.4)
    blue_gain_range: tuple[float, float] = (1.5, 1.9)
    inverse_digital_gain_mean: float = 0.8
    inverse_digital_gain_stddev: float = 0.1
    inverse_digital_gain_bounds: tuple[float, float] = (0.0, 1.1)
    highlight_threshold: float = 0.9
    gamma_epsilon: float = 1e-8

    def __post_init__(self):
        for label, (lo, hi) in (("red gain", self.red_gain_range),
                                ("blue gain", self.blue_gain_range)):
            if not (lo <= hi and lo > 0):
                raise ConfigError(f"{label} range must be ordered and positive, got ({lo}, {hi})")
        if self.inverse_digital_gain_stddev <= 0:
            raise ConfigError("inverse digital gain stddev must be > 0")
        lo, hi = self.inverse_digital_gain_bounds
        if not (lo < hi and hi > 0):
            raise ConfigError(f"inverse digital gain bounds must be ordered, got ({lo}, {hi})")
        if not 0.0 < self.highlight_threshold < 1.0:
            raise ConfigError("highlight threshold must be in (0, 1)")
        if self.gamma_epsilon <= 0:
            raise ConfigError("gamma epsilon must be > 0")
        object.__setattr__(self, "red_gain_range", (float(self.red_gain_range[0]),
                                                    float(self.red_gain_range[1])))
        object.__setattr__(self, "blue_gain_range", (float(self.blue_gain_range[0]),
                                                     float(self.blue_gain_range[1])))
        object.__setattr__(self, "inverse_digital_gain_bounds", (float(lo), float(hi)))


def inverse_smoothstep(y):
    """Invert the smoothstep tone curve on [0, 1] (input clamped first)."""
    y = np.clip(y, 0.0, 1.0)
    return 0.5 - np.sin(np.arcsin(1.0 - 2.0 * y) / 3.0)


def gamma_decompress(y, epsilon: float = 1e-8):
    """Gamma -> linear: max(y, epsilon) ** 2.2, elementwise."""
    return np.maximum(y, epsilon) ** GAMMA_EXPONENT


def sample_simplex_weights(k: int, rng: np.random.Generator) -> np.ndarray:
    """Uniform draw from the (k-1)-simplex via normalized exponentials."""
    if k < 1:
        raise DomainError("need at least one weight")
    e = rng.exponential(1.0, size=k)
    return e / e.sum()


def combine_ccms(ccm_set: CcmSet, weights) -> np.ndarray:
    """Convex combination of the set's matrices."""
    w = np.asarray(weights, dtype=np.float64)
    if w.shape != (len(ccm_set),):
        raise DomainError(f"expected {len(ccm_set)} weights, got shape {w.shape}")
    return np.tensordot(w, ccm_set.as_array(), axes=([0], [0]))


def sample_ccm(ccm_set: CcmSet, rng: np.random.Generator) -> np.ndarray:
    """Sample a random convex combination of the configured CCMs."""
    return combine_ccms(ccm_set, sample_simplex_weights(len(ccm_set), rng))


def sample_wb_gains(cfg: UnprocessConfig, rng: np.random.Generator) -> tuple[float, float, float]:
    """Draw (red, 1, blue) white-balance gains uniformly from their ranges."""
    red = float(rng.uniform(*cfg.red_gain_range))
    blue = float(rng.uniform(*cfg.blue_gain_range))
    return (red, 1.0, blue)


def sample_inverse_digital_gain(cfg: UnprocessConfig, rng: np.random.Generator) -> float:
    """Draw the inverse digital gain, resampling until it lands in bounds.

    The normal draw is rejected outside (lo, hi] so the result is positive
    and respects the intended span.
    """
    lo, hi = cfg.inverse_digital_gain_bounds
    while True:
        g = float(rng.normal(cfg.inverse_digital_gain_mean, cfg.inverse_digital_gain_stddev))
        if lo < g <= hi:
            return g


def safe_inverse_gain(x, gain: float, threshold: float = 0.9):
    """Divide intensities by a gain while preserving highlights.

    Below ``threshold`` this is exactly x/gain; above it the result blends
    toward x itself with a quadratic weight, so a saturated input (x = 1)
    stays saturated for any gain >= 1. For gain <= 1 the plain division
    already cannot lose highlights, so it is returned unchanged.

    Evaluated in float64 so that the blend weight is exactly 1 at x = 1
    (numerator and denominator of the weight are then the identical float);
    the result is cast back to the input's float dtype.
    """
    if gain <= 0:
        raise DomainError(f"gain must be > 0, got {gain}")
    if not 0.0 < threshold < 1.0:
        raise DomainError(f"threshold must be in (0, 1), got {threshold}")
    arr = np.asarray(x)
    x64 = arr.astype(np.float64)
    alpha = (np.maximum(x64 - threshold, 0.0) / (1.0 - threshold)) ** 2
    inv = x64 / gain
    out = np.maximum(inv, (1.0 - alpha) * inv + alpha * x64)
    if arr.dtype.kind == "f" and arr.dtype != np.float64:
        out = out.astype(arr.dtype)
    return out if arr.ndim else out[()]


def apply_inverse_gains(rgb: PlanarImage, wb_gains, inverse_digital_gain: float,
                        threshold: float = 0.9) -> PlanarImage:
    """Undo white balance and digital gain channel by channel.

    The forward gain for channel c is ``wb_gains[c] / inverse_digital_gain``
    (the product of white balance with the digital gain); each sample runs
    through the highlight-preserving inverse of that gain.
    """
    if rgb.channels != 3:
        raise DimensionError(f"inverse gains need 3 channels, got {rgb.channels}")
    if inverse_digital_gain <= 0:
        raise DomainError("inverse digital gain must be > 0")
    out = np.empty_like(rgb.samples)
    for c in range(3):
        forward_gain = wb_gains[c] / inverse_digital_gain
        out[c] = safe_inverse_gain(rgb.samples[c], forward_gain, threshold)
    return PlanarImage(out, Colorspace.LINEAR_RAW)


def estimate_gain_ratio(mean_a: float, mean_b: float) -> float:
    """Intensity-matching scale between two datasets of exponential intensities.

    The maximum-likelihood scale for exponential data is the inverse sample
    mean, so matching two datasets reduces to the ratio of their means.
    """
    if not (mean_a > 0 and mean_b > 0 and math.isfinite(mean_a) and math.isfinite(mean_b)):
        raise DomainError(f"means must be positive and finite, got {mean_a}, {mean_b}")
    return mean_a / mean_b


def unprocess(srgb: PlanarImage, cfg: UnprocessConfig, rng: np.random.Generator,
              pattern: BayerPattern = BayerPattern.RGGB,
              ) -> tuple[PlanarImage, PipelineParams]:
    """Map an sRGB image to synthetic linear raw RGB with sampled parameters.

    Applies, in order: inverse tone map, gamma decompression, the inverse of
    a sampled CCM (sRGB -> camera RGB), and the highlight-preserving inverse
    of sampled white-balance and digital gains. Returns the linear image and
    the sampled :class:`PipelineParams` so the forward pipeline can undo the
    invertible stages exactly. Out-of-range inputs are clamped to [0, 1]
    first. Draw order: CCM weights, red gain, blue gain, digital gain.
    """
    if srgb.channels != 3:
        raise DimensionError(f"unprocess needs a 3-channel image, got {srgb.channels}")
    ccm = sample_ccm(cfg.ccm_set, rng)
    wb = sample_wb_gains(cfg, rng)
    inv_digital = sample_inverse_digital_gain(cfg, rng)

    x = np.clip(srgb.samples, 0.0, 1.0)
    x = inverse_smoothstep(x)
    x = gamma_decompress(x, cfg.gamma_epsilon).astype(np.float32)
    linear_srgb = PlanarImage(x, Colorspace.LINEAR_SRGB)
    camera_rgb = apply_ccm(linear_srgb, invert_ccm(ccm), Colorspace.LINEAR_RAW)
    raw = apply_inverse_gains(camera_rgb, wb, inv_digital, cfg.highlight_threshold)

    params = PipelineParams(
        wb_gains=wb,
        inverse_digital_gain=inv_digital,
        ccm=as_matrix3(ccm),
        bayer_pattern=pattern,
        gamma_epsilon=cfg.gamma_epsilon,
        highlight_threshold=cfg.highlight_threshold,
        tone_map_enabled=False,
    )
    return raw, params
