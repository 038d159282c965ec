"""Heteroscedastic shot/read noise: parameters, sampling, and application.

An observed intensity y is modeled as a Gaussian around the true signal x
with variance ``lambda_read + lambda_shot * x``. Shot noise scales with the
signal (photon statistics); read noise is a fixed variance floor from the
readout circuitry. Parameter pairs for synthetic images are drawn from a
log-domain distribution fit to real sensor metadata: log(lambda_shot) is
uniform and log(lambda_read) is linear in it plus Gaussian scatter.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import ConfigError, DomainError
from .images import BayerImage, PlanarImage

# Defaults fit to a published cloud of real DSLR sensor metadata.
LOG_SHOT_MIN = math.log(0.0001)
LOG_SHOT_MAX = math.log(0.012)
READ_SLOPE = 2.18
READ_INTERCEPT = 1.2
READ_STDDEV = 0.26


@dataclass(frozen=True)
class NoiseParams:
    """Variance coefficients: var(y) = lambda_read + lambda_shot * x."""

    lambda_shot: float
    lambda_read: float

    def __post_init__(self):
        if not (math.isfinite(self.lambda_shot) and self.lambda_shot > 0):
            raise DomainError(f"lambda_shot must be finite and > 0, got {self.lambda_shot}")
        if not (math.isfinite(self.lambda_read) and self.lambda_read >= 0):
            raise DomainError(f"lambda_read must be finite and >= 0, got {self.lambda_read}")


@dataclass(frozen=True)
class SensorGains:
    """Digital/analog gain pair plus readout standard deviation."""

    digital_gain: float
    analog_gain: float
    readout_stddev: float

    def __post_init__(self):
        if self.digital_gain <= 0 or self.analog_gain <= 0:
            raise DomainError("gains must be > 0")
        if self.readout_stddev < 0:
            raise DomainError("readout stddev must be >= 0")


@dataclass(frozen=True)
class NoiseDistributionConfig:
    """Sampling distribution for (lambda_shot, lambda_read) pairs.

    ``log_shot_min``/``log_shot_max`` bound a uniform draw of
    log(lambda_shot); log(lambda_read) is then normal with mean
    ``read_slope * log(lambda_shot) + read_intercept`` and stddev
    ``read_stddev``. ``log_base`` selects the logarithm ("e" or "10") and is
    recorded in serialized metadata.
    """

    log_shot_min: float = LOG_SHOT_MIN
    log_shot_max: float = LOG_SHOT_MAX
    read_slope: float = READ_SLOPE
    read_intercept: float = READ_INTERCEPT
    read_stddev: float = READ_STDDEV
    log_base: str = "e"

    def __post_init__(self):
        if not self.log_shot_min < self.log_shot_max:
            raise ConfigError("shot log-range must satisfy min < max")
        if self.read_stddev <= 0:
            raise ConfigError("read residual stddev must be > 0")
        if self.log_base not in ("e", "10"):
            raise ConfigError(f"log base must be 'e' or '10', got {self.log_base!r}")

    @property
    def base(self) -> float:
        return math.e if self.log_base == "e" else 10.0


def noise_params_from_gains(gains: SensorGains) -> NoiseParams:
    """Convert sensor gain metadata into noise variance coefficients.

    lambda_read = digital_gain^2 * readout_stddev^2;
    lambda_shot = digital_gain * analog_gain.
    """
    return NoiseParams(
        lambda_shot=gains.digital_gain * gains.analog_gain,
        lambda_read=gains.digital_gain ** 2 * gains.readout_stddev ** 2,
    )


def sample_noise_params(cfg: NoiseDistributionConfig, rng: np.random.Generator) -> NoiseParams:
    """Draw one (lambda_shot, lambda_read) pair from the configured cloud."""
    log_shot = rng.uniform(cfg.log_shot_min, cfg.log_shot_max)
    log_read = cfg.read_slope * log_shot + cfg.read_intercept + cfg.read_stddev * rng.standard_normal()
    base = cfg.base
    return NoiseParams(lambda_shot=base ** log_shot, lambda_read=base ** log_read)


def _noise_core(signal: np.ndarray, params: NoiseParams, rng: np.random.Generator,
                clip: bool) -> np.ndarray:
    variance = np.maximum(params.lambda_read + params.lambda_shot * signal, 0.0)
    noisy = signal + rng.standard_normal(signal.shape, dtype=np.float32) * np.sqrt(
        variance, dtype=np.float32)
    if clip:
        noisy = np.clip(noisy, 0.0, 1.0)
    return noisy.astype(np.float32, copy=False)


def apply_shot_read_noise(signal: BayerImage | PlanarImage, params: NoiseParams,
                          rng: np.random.Generator, clip: bool = True):
    """Replace each sample by a Gaussian draw with signal-dependent variance.

    Draws are independent per sample with mean x and variance
    ``lambda_read + lambda_shot * x``. With ``clip`` the result is clamped
    to [0, 1] (sensor black/white clipping). Deterministic given the
    generator state. Returns the same container type as the input.
    """
    if isinstance(signal, BayerImage):
        return BayerImage(_noise_core(signal.samples, params, rng, clip), signal.pattern)
    return PlanarImage(_noise_core(signal.samples, params, rng, clip), signal.colorspace)


def noise_stddev_map(signal: BayerImage | PlanarImage, params: NoiseParams):
    """Per-sample predicted noise standard deviation.

    Evaluates ``sqrt(lambda_read + lambda_shot * max(signal, 0))``; the
    clamp lets a noisy observation stand in for the unknown true signal.
    Returns the same container type and geometry as the input.
    """
    stddev = np.sqrt(params.lambda_read
                     + params.lambda_shot * np.maximum(signal.samples, 0.0),
                     dtype=np.float32)
    if isinstance(signal, BayerImage):
        return BayerImage(stddev, signal.pattern)
    return PlanarImage(stddev, signal.colorspace)
