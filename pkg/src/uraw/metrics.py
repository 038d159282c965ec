"""Image quality metrics and the evaluation arithmetic built on them.

PSNR and SSIM are the reported metrics; relative improvements are compared
after converting PSNR to RMSE and SSIM to DSSIM, where reductions in error
are meaningful. The sRGB L1 loss processes both raw images through the
forward pipeline (tone map off) before differencing, matching how training
evaluates network output against the raw target.
"""

from __future__ import annotations

import dataclasses
import math
from dataclasses import dataclass

import numpy as np
from scipy import ndimage

from .errors import ConfigError, DimensionError, DomainError
from .images import BayerImage, PlanarImage, gaussian_kernel_1d
from .process import PipelineParams, process_raw_to_srgb

SSIM_WINDOW = 11
SSIM_SIGMA = 1.5
SSIM_K1 = 0.01
SSIM_K2 = 0.03


def _samples(x) -> np.ndarray:
    if isinstance(x, (PlanarImage, BayerImage)):
        return np.asarray(x.samples, dtype=np.float64)
    return np.asarray(x, dtype=np.float64)


def psnr(a, b, peak: float = 1.0) -> float:
    """Peak signal-to-noise ratio in dB; identical inputs give math.inf."""
    xa, xb = _samples(a), _samples(b)
    if xa.shape != xb.shape:
        raise DimensionError(f"shape mismatch {xa.shape} vs {xb.shape}")
    mse = float(np.mean((xa - xb) ** 2))
    if mse == 0.0:
        return math.inf
    return 10.0 * math.log10(peak * peak / mse)


def _ssim_channel(a: np.ndarray, b: np.ndarray, c1: float, c2: float,
                  window: np.ndarray) -> float:
    margin = window.shape[0] // 2
    sl = (slice(margin, a.shape[0] - margin), slice(margin, a.shape[1] - margin))

    def smooth(x):
        return ndimage.correlate(x, window, mode="constant")[sl]

    mu_a = smooth(a)
    mu_b = smooth(b)
    var_a = smooth(a * a) - mu_a * mu_a
    var_b = smooth(b * b) - mu_b * mu_b
    cov = smooth(a * b) - mu_a * mu_b
    ssim_map = ((2 * mu_a * mu_b + c1) * (2 * cov + c2)
                / ((mu_a * mu_a + mu_b * mu_b + c1) * (var_a + var_b + c2)))
    return float(np.mean(ssim_map))


def ssim(a, b, peak: float = 1.0) -> float:
    """Mean structural similarity with the standard 11-tap Gaussian window.

    Local statistics use an 11x11 Gaussian window (sigma 1.5) over the
    valid interior, constants k1=0.01 and k2=0.03; channels are scored
    independently then averaged.
    """
    xa, xb = _samples(a), _samples(b)
    if xa.shape != xb.shape:
        raise DimensionError(f"shape mismatch {xa.shape} vs {xb.shape}")
    if xa.ndim == 2:
        xa, xb = xa[None], xb[None]
    if xa.shape[-2] < SSIM_WINDOW or xa.shape[-1] < SSIM_WINDOW:
        raise DimensionError(f"images must be at least {SSIM_WINDOW} pixels per side")
    taps = gaussian_kernel_1d(SSIM_SIGMA, SSIM_WINDOW // 2)
    window = np.outer(taps, taps)
    c1 = (SSIM_K1 * peak) ** 2
    c2 = (SSIM_K2 * peak) ** 2
    return float(np.mean([_ssim_channel(xa[c], xb[c], c1, c2, window)
                          for c in range(xa.shape[0])]))


def dssim(ssim_value: float) -> float:
    """Structural dissimilarity: (1 - SSIM) / 2."""
    if not -1.0 <= ssim_value <= 1.0:
        raise DomainError(f"SSIM must be in [-1, 1], got {ssim_value}")
    return (1.0 - ssim_value) / 2.0


def psnr_to_relative_rmse_reduction(psnr_ref: float, psnr_best: float) -> float:
    """Fractional RMSE reduction of `best` relative to `ref`.

    RMSE is proportional to 10^(-PSNR/20), so the reduction only depends on
    the PSNR difference.
    """
    if not (math.isfinite(psnr_ref) and math.isfinite(psnr_best)):
        raise DomainError("PSNR inputs must be finite")
    return 1.0 - 10.0 ** (-(psnr_best - psnr_ref) / 20.0)


def dssim_relative_reduction(ssim_ref: float, ssim_best: float) -> float:
    """Fractional DSSIM reduction of `best` relative to `ref`."""
    d_ref = dssim(ssim_ref)
    d_best = dssim(ssim_best)
    if d_ref == 0.0:
        if d_best == 0.0:
            return 0.0
        raise DomainError("reference DSSIM is 0 but best DSSIM is not; "
                          "relative reduction undefined")
    return 1.0 - d_best / d_ref


def srgb_l1_loss(raw_a: BayerImage, raw_b: BayerImage, params: PipelineParams) -> float:
    """Mean absolute sRGB difference after forward-processing both raws.

    Both images run through the loss-path pipeline (tone map off) with the
    same parameters before the L1 is taken.
    """
    if raw_a.samples.shape != raw_b.samples.shape:
        raise DimensionError(f"shape mismatch {raw_a.samples.shape} vs {raw_b.samples.shape}")
    loss_params = dataclasses.replace(params, tone_map_enabled=False)
    srgb_a = process_raw_to_srgb(raw_a, loss_params)
    srgb_b = process_raw_to_srgb(raw_b, loss_params)
    return float(np.mean(np.abs(_samples(srgb_a) - _samples(srgb_b))))


@dataclass(frozen=True)
class ChannelHistograms:
    """Per-channel intensity histograms over [0, 1] plus summary stats."""

    counts: np.ndarray        # (channels, bins) int64
    bin_edges: np.ndarray     # (bins + 1,)
    means: tuple[float, ...]
    medians: tuple[float, ...]
    pixel_count: int

    @property
    def frequencies(self) -> np.ndarray:
        return self.counts / self.counts.sum(axis=1, keepdims=True)

    def to_csv_rows(self, group: str = "") -> list[str]:
        """Plot-ready CSV rows (no header): group,channel,bin_lo,bin_hi,count,frequency."""
        rows = []
        freq = self.frequencies
        for c in range(self.counts.shape[0]):
            for i in range(self.counts.shape[1]):
                rows.append(f"{group},{c},{self.bin_edges[i]:.8f},{self.bin_edges[i + 1]:.8f},"
                            f"{self.counts[c, i]},{freq[c, i]:.10g}")
        return rows


def channel_histograms(images, bins: int = 64) -> ChannelHistograms:
    """Accumulate per-channel histograms over a corpus of images.

    Values are clamped to [0, 1] before binning. Counts are exact integers
    so parallel accumulation would merge deterministically; means are exact
    accumulations, medians are interpolated from the histogram.
    """
    if bins < 2:
        raise DomainError(f"need at least 2 bins, got {bins}")
    edges = np.linspace(0.0, 1.0, bins + 1)
    counts = None
    sums = None
    pixels = 0
    for image in images:
        arr = _samples(image)
        if arr.ndim == 2:
            arr = arr[None]
        if counts is None:
            counts = np.zeros((arr.shape[0], bins), dtype=np.int64)
            sums = np.zeros(arr.shape[0], dtype=np.float64)
        elif arr.shape[0] != counts.shape[0]:
            raise DimensionError(f"channel count changed from {counts.shape[0]} "
                                 f"to {arr.shape[0]} mid-corpus")
        clipped = np.clip(arr, 0.0, 1.0)
        for c in range(arr.shape[0]):
            counts[c] += np.histogram(clipped[c], bins=bins, range=(0.0, 1.0))[0]
            sums[c] += float(clipped[c].sum())
        pixels += arr.shape[1] * arr.shape[2]
    if counts is None or pixels == 0:
        raise ConfigError("histogram corpus is empty")
    means = tuple(float(s) / pixels for s in sums)
    medians = tuple(_histogram_median(counts[c], edges) for c in range(counts.shape[0]))
    return ChannelHistograms(counts=counts, bin_edges=edges, means=means,
                             medians=medians, pixel_count=pixels)


def _histogram_median(counts: np.ndarray, edges: np.ndarray) -> float:
    total = counts.sum()
    cumulative = np.cumsum(counts)
    idx = int(np.searchsorted(cumulative, total / 2.0))
    below = cumulative[idx - 1] if idx > 0 else 0
    inside = counts[idx]
    width = edges[idx + 1] - edges[idx]
    if inside == 0:
        return float(edges[idx])
    return float(edges[idx] + (total / 2.0 - below) / inside * width)


@dataclass(frozen=True)
class MetricReport:
    """PSNR/SSIM in raw and sRGB domains, with optional error reductions."""

    psnr_raw: float | None = None
    ssim_raw: float | None = None
    psnr_srgb: float | None = None
    ssim_srgb: float | None = None
    reductions: dict | None = None

    def to_dict(self) -> dict:
        out = {}
        for key in ("psnr_raw", "ssim_raw", "psnr_srgb", "ssim_srgb"):
            value = getattr(self, key)
            if value is not None:
                out[key] = "inf" if value == math.inf else value
        if self.reductions is not None:
            out["reductions"] = self.reductions
        return out

    def to_text(self) -> str:
        lines = []
        for key, value in self.to_dict().items():
            if key == "reductions":
                for name, v in value.items():
                    lines.append(f"{name:<28} {v * 100:8.1f}%")
            else:
                text = "inf" if value == "inf" else f"{value:8.4f}"
                lines.append(f"{key:<28} {text}")
        return "\n".join(lines)
