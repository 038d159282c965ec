"""Shared fixtures and image generators for the test suite."""

import numpy as np
import pytest

from uraw.images import Colorspace, PlanarImage
from uraw.profiles import default_profile


def smooth_mirror_image(rng, height=128, width=128, lo=0.05, hi=0.92,
                        max_mode=4, modes=8):
    """Random smooth sRGB image from low-order separable cosine modes.

    The modes cos(pi*n*y/(h-1)) * cos(pi*m*x/(w-1)) are even around every
    border sample, so reflect-without-repeat padding continues these fields
    exactly; reconstruction error then measures the pipeline itself rather
    than border extrapolation.
    """
    yy = np.arange(height)[:, None] / (height - 1.0)
    xx = np.arange(width)[None, :] / (width - 1.0)
    out = np.zeros((3, height, width))
    for c in range(3):
        field = np.zeros((height, width))
        for _ in range(modes):
            n = int(rng.integers(0, max_mode + 1))
            m = int(rng.integers(0, max_mode + 1))
            amp = float(rng.uniform(-1.0, 1.0))
            field += amp * np.cos(np.pi * n * yy) * np.cos(np.pi * m * xx)
        field -= field.min()
        peak = field.max()
        if peak > 0:
            field /= peak
        out[c] = lo + (hi - lo) * field
    return PlanarImage(out.astype(np.float32), Colorspace.GAMMA_SRGB)


def random_image(rng, channels=3, height=16, width=16,
                 colorspace=Colorspace.GAMMA_SRGB):
    """Uniform-noise image; useful where smoothness is irrelevant."""
    return PlanarImage(rng.random((channels, height, width), dtype=np.float32),
                       colorspace)


@pytest.fixture
def rng():
    return np.random.default_rng(20240817)


@pytest.fixture
def profile():
    return default_profile()
