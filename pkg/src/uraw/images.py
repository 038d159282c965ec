"""Image containers, Bayer mosaic/demosaic, and geometric preprocessing.

Images are stored channel-major as float32 numpy arrays. Full-color images
live in :class:`PlanarImage` (1, 3, or 4 channels); color-filter-array data
lives in :class:`BayerImage` (a single plane plus the 2x2 pattern tag).
Arrays are frozen at construction so images behave as immutable values.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass

import numpy as np
from scipy import ndimage

from .errors import DimensionError, DomainError

_CHANNEL_INDEX = {"R": 0, "G": 1, "B": 2}


class Colorspace(str, enum.Enum):
    """Tag describing how sample values are encoded."""

    LINEAR_RAW = "linear-raw-rgb"
    LINEAR_SRGB = "linear-srgb-primaries"
    GAMMA_SRGB = "gamma-srgb"


class BayerPattern(enum.Enum):
    """2x2 color-filter layout: one R, one B, two G per tile."""

    RGGB = "RGGB"
    BGGR = "BGGR"
    GRBG = "GRBG"
    GBRG = "GBRG"

    @property
    def layout(self) -> tuple[tuple[int, int], tuple[int, int]]:
        """Channel index (0=R, 1=G, 2=B) at each position of the 2x2 tile."""
        s = self.value
        return ((_CHANNEL_INDEX[s[0]], _CHANNEL_INDEX[s[1]]),
                (_CHANNEL_INDEX[s[2]], _CHANNEL_INDEX[s[3]]))

    def sites(self):
        """Yield ((row offset, col offset), channel index) in raster order."""
        lay = self.layout
        for di in (0, 1):
            for dj in (0, 1):
                yield (di, dj), lay[di][dj]


def _freeze(samples, shape_kind: str) -> np.ndarray:
    arr = np.array(samples, dtype=np.float32, copy=True, order="C")
    if not np.isfinite(arr).all():
        raise DomainError(f"{shape_kind} samples must be finite (no NaN/Inf)")
    arr.setflags(write=False)
    return arr


@dataclass(frozen=True)
class PlanarImage:
    """Full-color image: float32 samples of shape (channels, height, width)."""

    samples: np.ndarray
    colorspace: Colorspace = Colorspace.LINEAR_RAW

    def __post_init__(self):
        arr = np.asarray(self.samples)
        if arr.ndim != 3:
            raise DimensionError(
                f"planar samples must be (channels, height, width), got shape {arr.shape}")
        if arr.shape[0] not in (1, 3, 4):
            raise DimensionError(f"channel count must be 1, 3, or 4, got {arr.shape[0]}")
        object.__setattr__(self, "samples", _freeze(arr, "planar image"))
        object.__setattr__(self, "colorspace", Colorspace(self.colorspace))

    @property
    def channels(self) -> int:
        return self.samples.shape[0]

    @property
    def height(self) -> int:
        return self.samples.shape[1]

    @property
    def width(self) -> int:
        return self.samples.shape[2]


@dataclass(frozen=True)
class BayerImage:
    """Single-plane CFA image; height and width must be even."""

    samples: np.ndarray
    pattern: BayerPattern

    def __post_init__(self):
        arr = np.asarray(self.samples)
        if arr.ndim != 2:
            raise DimensionError(f"bayer samples must be (height, width), got shape {arr.shape}")
        if arr.shape[0] % 2 or arr.shape[1] % 2:
            raise DimensionError(f"bayer dimensions must be even, got {arr.shape}")
        object.__setattr__(self, "samples", _freeze(arr, "bayer image"))
        if not isinstance(self.pattern, BayerPattern):
            object.__setattr__(self, "pattern", BayerPattern(self.pattern))

    @property
    def height(self) -> int:
        return self.samples.shape[0]

    @property
    def width(self) -> int:
        return self.samples.shape[1]


def channel_masks(pattern: BayerPattern, height: int, width: int) -> np.ndarray:
    """Binary masks of shape (3, height, width) marking R/G/B sample sites."""
    masks = np.zeros((3, height, width), dtype=np.float32)
    for (di, dj), ch in pattern.sites():
        masks[ch, di::2, dj::2] = 1.0
    return masks


def mosaic(rgb: PlanarImage, pattern: BayerPattern) -> BayerImage:
    """Discard two of the three color values per pixel according to the CFA.

    The kept value is copied unchanged, so mosaicing a demosaiced image
    returns the original plane exactly.
    """
    if rgb.channels != 3:
        raise DimensionError(f"mosaic needs a 3-channel image, got {rgb.channels}")
    if rgb.height % 2 or rgb.width % 2:
        raise DimensionError(f"mosaic needs even dimensions, got {rgb.height}x{rgb.width}")
    plane = np.empty((rgb.height, rgb.width), dtype=np.float32)
    for (di, dj), ch in pattern.sites():
        plane[di::2, dj::2] = rgb.samples[ch, di::2, dj::2]
    return BayerImage(plane, pattern)


# Classic bilinear stencils. Centers are exactly 1 so CFA-sampled values are
# copied through bit-for-bit; the remaining taps average the nearest
# same-channel neighbors (2 or 4 of them, weights 1/2 or 1/4).
_KERNEL_GREEN = np.array([[0, 1, 0],
                          [1, 4, 1],
                          [0, 1, 0]], dtype=np.float32) / 4.0
_KERNEL_RED_BLUE = np.array([[1, 2, 1],
                             [2, 4, 2],
                             [1, 2, 1]], dtype=np.float32) / 4.0


def demosaic_bilinear(bayer: BayerImage) -> PlanarImage:
    """Reconstruct full RGB from a CFA plane by bilinear interpolation.

    Borders use mirror padding (reflection without repeating the edge
    sample), which preserves CFA phase, so one fixed stencil per channel is
    exact everywhere.
    """
    masks = channel_masks(bayer.pattern, bayer.height, bayer.width)
    out = np.empty((3, bayer.height, bayer.width), dtype=np.float32)
    for ch, kernel in ((0, _KERNEL_RED_BLUE), (1, _KERNEL_GREEN), (2, _KERNEL_RED_BLUE)):
        out[ch] = ndimage.convolve(bayer.samples * masks[ch], kernel, mode="mirror")
    return PlanarImage(out, Colorspace.LINEAR_RAW)


def gaussian_kernel_1d(sigma: float = 1.0, radius: int = 3) -> np.ndarray:
    """Discrete Gaussian taps on [-radius, radius], renormalized to sum 1."""
    offsets = np.arange(-radius, radius + 1, dtype=np.float64)
    kernel = np.exp(-0.5 * (offsets / sigma) ** 2)
    return kernel / kernel.sum()


def downsample_2x_gaussian(rgb: PlanarImage) -> PlanarImage:
    """Blur each channel with a Gaussian (sigma=1) and subsample by 2.

    The filter is separable with 3 taps per side and mirror borders;
    subsampling keeps indices 0, 2, 4, ... so output dims are floor(dim/2).
    """
    if rgb.height < 2 or rgb.width < 2:
        raise DimensionError(f"cannot downsample a {rgb.height}x{rgb.width} image")
    kernel = gaussian_kernel_1d(sigma=1.0, radius=3)
    blurred = ndimage.correlate1d(rgb.samples, kernel, axis=1, mode="mirror")
    blurred = ndimage.correlate1d(blurred, kernel, axis=2, mode="mirror")
    out_h = rgb.height // 2
    out_w = rgb.width // 2
    return PlanarImage(blurred[:, 0:2 * out_h:2, 0:2 * out_w:2], rgb.colorspace)


def random_crop_flip(rgb: PlanarImage, size: int, rng: np.random.Generator,
                     flip: bool = True) -> PlanarImage:
    """Take a random size x size crop with optional random flips.

    Crop offsets are uniform over the even-coordinate positions so that CFA
    phase is stable after a later mosaic. Horizontal and vertical flips are
    each applied with probability 1/2 when ``flip`` is set. Deterministic
    given the generator state; draw order is row offset, column offset,
    horizontal flip, vertical flip.
    """
    if size < 1:
        raise DomainError(f"crop size must be positive, got {size}")
    if rgb.height < size or rgb.width < size:
        raise DimensionError(
            f"image {rgb.height}x{rgb.width} is smaller than crop size {size}")
    n_row = (rgb.height - size) // 2 + 1
    n_col = (rgb.width - size) // 2 + 1
    i0 = 2 * int(rng.integers(n_row))
    j0 = 2 * int(rng.integers(n_col))
    out = rgb.samples[:, i0:i0 + size, j0:j0 + size]
    if flip:
        if rng.random() < 0.5:
            out = out[:, :, ::-1]
        if rng.random() < 0.5:
            out = out[:, ::-1, :]
    return PlanarImage(out, rgb.colorspace)
