"""Camera pipeline simulation for synthetic raw denoising data.

Unprocess sRGB images into realistic linear raw sensor data, corrupt them
with physically modeled shot/read noise, process raw data forward to sRGB,
synthesize noisy/clean training pairs, and score results with standard
image quality metrics.
"""

from .errors import (ConfigError, DimensionError, DomainError, FormatError,
                     PipelineError)
from .images import (BayerImage, BayerPattern, Colorspace, PlanarImage,
                     demosaic_bilinear, downsample_2x_gaussian, mosaic,
                     random_crop_flip)
from .noise import (NoiseDistributionConfig, NoiseParams, SensorGains,
                    apply_shot_read_noise, noise_params_from_gains,
                    noise_stddev_map, sample_noise_params)
from .process import (PipelineParams, apply_ccm, apply_wb_gains,
                      gamma_compress, process_raw_to_srgb,
                      tone_map_smoothstep)
from .unprocess import (CcmSet, UnprocessConfig, apply_inverse_gains,
                        estimate_gain_ratio, gamma_decompress,
                        inverse_smoothstep, safe_inverse_gain, sample_ccm,
                        sample_inverse_digital_gain, sample_wb_gains,
                        unprocess)
from .dataset import (TrainingExample, UndersizedSourceError, assign_splits,
                      pack_bayer_planes, split_for_key, synthesize_corpus,
                      synthesize_example, unpack_bayer_planes)
from .metrics import (MetricReport, channel_histograms, dssim,
                      dssim_relative_reduction, psnr,
                      psnr_to_relative_rmse_reduction, srgb_l1_loss, ssim)
from .profiles import CameraProfile, default_profile, load_profile, save_profile
from .fileio import read_image, write_image
from .seeding import seeded_rng

__version__ = "0.1.0"
