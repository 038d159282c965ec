"""Forward raw-to-sRGB processing.

The chain applied to raw Bayer data is: white-balance gains (with
saturation clipping), bilinear demosaic, color correction matrix, and gamma
compression. An optional smoothstep tone curve is applied after gamma on
the rendering path; the loss path leaves it off and also skips the [0, 1]
clamp before gamma so that out-of-range values keep gradients.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import DimensionError, DomainError
from .images import BayerImage, BayerPattern, Colorspace, PlanarImage, demosaic_bilinear

GAMMA_EXPONENT = 2.2
Matrix3 = tuple[tuple[float, float, float],
                tuple[float, float, float],
                tuple[float, float, float]]


def as_matrix3(m) -> Matrix3:
    """Coerce array-like input to a 3x3 tuple of floats."""
    arr = np.asarray(m, dtype=np.float64)
    if arr.shape != (3, 3):
        raise DimensionError(f"expected a 3x3 matrix, got shape {arr.shape}")
    return tuple(tuple(float(v) for v in row) for row in arr)


def invert_ccm(ccm) -> np.ndarray:
    """Invert a 3x3 CCM, rejecting near-singular matrices."""
    arr = np.asarray(ccm, dtype=np.float64)
    if abs(np.linalg.det(arr)) <= 1e-8:
        raise DomainError("color correction matrix is singular or near-singular")
    return np.linalg.inv(arr)


@dataclass(frozen=True)
class PipelineParams:
    """Per-image camera metadata needed to process (or undo) a pipeline.

    ``ccm`` maps camera RGB to sRGB primaries. White-balance gains are
    (red, green, blue) with green pinned to 1. ``inverse_digital_gain`` is
    the sampled global scale the unprocessing step applied; the forward
    loss chain does not re-apply it.
    """

    wb_gains: tuple[float, float, float]
    inverse_digital_gain: float
    ccm: Matrix3
    bayer_pattern: BayerPattern
    gamma_epsilon: float = 1e-8
    highlight_threshold: float = 0.9
    tone_map_enabled: bool = False

    def __post_init__(self):
        gains = tuple(float(g) for g in self.wb_gains)
        if len(gains) != 3 or any(g <= 0 for g in gains):
            raise DomainError(f"white-balance gains must be 3 positive values, got {gains}")
        if gains[1] != 1.0:
            raise DomainError(f"green gain must be 1, got {gains[1]}")
        if self.inverse_digital_gain <= 0:
            raise DomainError("inverse digital gain must be > 0")
        if not 0.0 < self.highlight_threshold < 1.0:
            raise DomainError("highlight threshold must be in (0, 1)")
        if self.gamma_epsilon <= 0:
            raise DomainError("gamma epsilon must be > 0")
        object.__setattr__(self, "wb_gains", gains)
        object.__setattr__(self, "ccm", as_matrix3(self.ccm))
        object.__setattr__(self, "bayer_pattern", BayerPattern(self.bayer_pattern))
        invert_ccm(self.ccm)  # reject singular matrices at construction

    def to_dict(self) -> dict:
        return {
            "wb_gains": list(self.wb_gains),
            "inverse_digital_gain": self.inverse_digital_gain,
            "ccm": [list(row) for row in self.ccm],
            "bayer_pattern": self.bayer_pattern.value,
            "gamma_epsilon": self.gamma_epsilon,
            "highlight_threshold": self.highlight_threshold,
            "tone_map_enabled": self.tone_map_enabled,
        }

    @classmethod
    def from_dict(cls, d: dict) -> "PipelineParams":
        return cls(
            wb_gains=tuple(d["wb_gains"]),
            inverse_digital_gain=d["inverse_digital_gain"],
            ccm=d["ccm"],
            bayer_pattern=d["bayer_pattern"],
            gamma_epsilon=d["gamma_epsilon"],
            highlight_threshold=d["highlight_threshold"],
            tone_map_enabled=d["tone_map_enabled"],
        )


def _apply_channel_gains(raw: BayerImage | PlanarImage, gains, clip: bool):
    if isinstance(raw, BayerImage):
        gain_map = np.empty((raw.height, raw.width), dtype=np.float32)
        for (di, dj), ch in raw.pattern.sites():
            gain_map[di::2, dj::2] = gains[ch]
        out = raw.samples * gain_map
        if clip:
            out = np.clip(out, 0.0, 1.0)
        return BayerImage(out, raw.pattern)
    if raw.channels != 3:
        raise DimensionError(f"per-channel gains need 3 channels, got {raw.channels}")
    out = raw.samples * np.asarray(gains, dtype=np.float32)[:, None, None]
    if clip:
        out = np.clip(out, 0.0, 1.0)
    return PlanarImage(out, raw.colorspace)


def apply_wb_gains(raw: BayerImage | PlanarImage, params: PipelineParams,
                   clip: bool = False):
    """Multiply each sample by its channel's white-balance gain.

    With ``clip``, results are clamped to [0, 1] (sensor saturation).
    """
    return _apply_channel_gains(raw, params.wb_gains, clip)


def apply_ccm(rgb: PlanarImage, ccm, colorspace: Colorspace | None = None) -> PlanarImage:
    """Left-multiply every pixel's color vector by a 3x3 matrix. No clamping."""
    if rgb.channels != 3:
        raise DimensionError(f"CCM needs 3 channels, got {rgb.channels}")
    arr = np.asarray(ccm, dtype=np.float64)
    if arr.shape != (3, 3):
        raise DimensionError(f"CCM must be 3x3, got shape {arr.shape}")
    out = np.tensordot(arr, rgb.samples, axes=([1], [0])).astype(np.float32)
    return PlanarImage(out, rgb.colorspace if colorspace is None else colorspace)


def gamma_compress(x, epsilon: float = 1e-8):
    """Linear -> gamma: max(x, epsilon) ** (1/2.2), elementwise."""
    return np.maximum(x, epsilon) ** (1.0 / GAMMA_EXPONENT)


def tone_map_smoothstep(x):
    """S-shaped film-like tone curve 3x^2 - 2x^3; input clamped to [0, 1]."""
    x = np.clip(x, 0.0, 1.0)
    return x * x * (3.0 - 2.0 * x)


def process_raw_to_srgb(bayer: BayerImage, params: PipelineParams) -> PlanarImage:
    """Run the full forward pipeline on a Bayer image.

    Composition: per-channel gains (clipped) -> bilinear demosaic -> CCM ->
    gamma compression, optionally followed by the smoothstep tone map when
    ``params.tone_map_enabled``.

    ``tone_map_enabled`` selects between the two documented paths. The loss
    path (off) applies white balance only and leaves values unclamped at
    the gamma stage. The rendering path (on) additionally divides out the
    sampled digital gain - so the chain exactly undoes every invertible
    unprocessing stage - and clamps to [0, 1] before gamma.
    """
    if params.tone_map_enabled:
        gains = tuple(g / params.inverse_digital_gain for g in params.wb_gains)
    else:
        gains = params.wb_gains
    balanced = _apply_channel_gains(bayer, gains, clip=True)
    rgb = demosaic_bilinear(balanced)
    rgb = apply_ccm(rgb, params.ccm, Colorspace.LINEAR_SRGB)
    out = rgb.samples
    if params.tone_map_enabled:
        out = np.clip(out, 0.0, 1.0)
        out = gamma_compress(out, params.gamma_epsilon)
        out = tone_map_smoothstep(out)
    else:
        out = gamma_compress(out, params.gamma_epsilon)
    return PlanarImage(out, Colorspace.GAMMA_SRGB)
