"""Camera profiles: the versioned JSON config binding all sampling ranges.

A profile aggregates everything the synthesis pipeline needs about a
virtual camera: the CCM set, white-balance and digital-gain sampling
ranges, the noise parameter distribution, the Bayer pattern, and the
gamma/highlight constants. Profiles serialize to JSON with a schema
version; unknown fields are rejected so config drift fails fast.
"""

from __future__ import annotations

import hashlib
import json
import os
from dataclasses import dataclass
from pathlib import Path

from .errors import ConfigError
from .images import BayerPattern
from .noise import NoiseDistributionConfig
from .unprocess import CcmSet, UnprocessConfig

SCHEMA_VERSION = 1
PROFILE_PATH_ENV = "URAW_PROFILE_PATH"

# Placeholder CCM set: the identity plus hand-written matrices with the
# usual shape of consumer-camera color correction (dominant diagonal,
# negative off-diagonals, rows summing to 1 so white maps to white). These
# are illustrative only, not calibrated data for any real camera.
DEFAULT_CCM_ENTRIES = (
    ("neutral-identity", ((1.0, 0.0, 0.0),
                          (0.0, 1.0, 0.0),
                          (0.0, 0.0, 1.0))),
    ("example-cam-a", ((1.70, -0.58, -0.12),
                       (-0.26, 1.52, -0.26),
                       (0.02, -0.60, 1.58))),
    ("example-cam-b", ((1.52, -0.38, -0.14),
                       (-0.20, 1.46, -0.26),
                       (-0.04, -0.46, 1.50))),
    ("example-cam-c", ((1.82, -0.69, -0.13),
                       (-0.31, 1.63, -0.32),
                       (0.05, -0.71, 1.66))),
)


@dataclass(frozen=True)
class CameraProfile:
    """Named bundle of every sampling/config constant for one virtual camera."""

    name: str
    bayer_pattern: BayerPattern
    unprocess_config: UnprocessConfig
    noise_config: NoiseDistributionConfig
    description: str = ""

    def __post_init__(self):
        if not isinstance(self.bayer_pattern, BayerPattern):
            object.__setattr__(self, "bayer_pattern", BayerPattern(self.bayer_pattern))


def default_profile() -> CameraProfile:
    return CameraProfile(
        name="default",
        description=("Built-in profile with placeholder CCMs (identity plus "
                     "illustrative examples; not calibrated camera data)."),
        bayer_pattern=BayerPattern.RGGB,
        unprocess_config=UnprocessConfig(ccm_set=CcmSet(DEFAULT_CCM_ENTRIES)),
        noise_config=NoiseDistributionConfig(),
    )


def profile_to_dict(profile: CameraProfile) -> dict:
    u = profile.unprocess_config
    n = profile.noise_config
    return {
        "schema_version": SCHEMA_VERSION,
        "name": profile.name,
        "description": profile.description,
        "bayer_pattern": profile.bayer_pattern.value,
        "ccms": [{"name": name, "matrix": [list(row) for row in matrix]}
                 for name, matrix in u.ccm_set.entries],
        "red_gain_range": list(u.red_gain_range),
        "blue_gain_range": list(u.blue_gain_range),
        "inverse_digital_gain": {
            "mean": u.inverse_digital_gain_mean,
            "stddev": u.inverse_digital_gain_stddev,
            "bounds": list(u.inverse_digital_gain_bounds),
        },
        "noise": {
            "log_shot_range": [n.log_shot_min, n.log_shot_max],
            "read_slope": n.read_slope,
            "read_intercept": n.read_intercept,
            "read_stddev": n.read_stddev,
            "log_base": n.log_base,
        },
        "highlight_threshold": u.highlight_threshold,
        "gamma_epsilon": u.gamma_epsilon,
    }


def _require_keys(d: dict, keys: set[str], optional: set[str], where: str) -> None:
    unknown = set(d) - keys - optional
    if unknown:
        raise ConfigError(f"{where}: unknown fields {sorted(unknown)}")
    missing = keys - set(d)
    if missing:
        raise ConfigError(f"{where}: missing fields {sorted(missing)}")


def profile_from_dict(d: dict) -> CameraProfile:
    if not isinstance(d, dict):
        raise ConfigError("profile must be a JSON object")
    _require_keys(d, {"schema_version", "name", "bayer_pattern", "ccms",
                      "red_gain_range", "blue_gain_range", "inverse_digital_gain",
                      "noise", "highlight_threshold", "gamma_epsilon"},
                  {"description"}, "profile")
    if d["schema_version"] != SCHEMA_VERSION:
        raise ConfigError(f"unsupported profile schema version {d['schema_version']}")
    gain = d["inverse_digital_gain"]
    _require_keys(gain, {"mean", "stddev", "bounds"}, set(), "inverse_digital_gain")
    noise = d["noise"]
    _require_keys(noise, {"log_shot_range", "read_slope", "read_intercept",
                          "read_stddev", "log_base"}, set(), "noise")
    try:
        ccm_entries = tuple((entry["name"], tuple(tuple(row) for row in entry["matrix"]))
                            for entry in d["ccms"])
        unprocess_config = UnprocessConfig(
            ccm_set=CcmSet(ccm_entries),
            red_gain_range=tuple(d["red_gain_range"]),
            blue_gain_range=tuple(d["blue_gain_range"]),
            inverse_digital_gain_mean=float(gain["mean"]),
            inverse_digital_gain_stddev=float(gain["stddev"]),
            inverse_digital_gain_bounds=tuple(gain["bounds"]),
            highlight_threshold=float(d["highlight_threshold"]),
            gamma_epsilon=float(d["gamma_epsilon"]),
        )
        noise_config = NoiseDistributionConfig(
            log_shot_min=float(noise["log_shot_range"][0]),
            log_shot_max=float(noise["log_shot_range"][1]),
            read_slope=float(noise["read_slope"]),
            read_intercept=float(noise["read_intercept"]),
            read_stddev=float(noise["read_stddev"]),
            log_base=str(noise["log_base"]),
        )
        return CameraProfile(
            name=str(d["name"]),
            description=str(d.get("description", "")),
            bayer_pattern=BayerPattern(d["bayer_pattern"]),
            unprocess_config=unprocess_config,
            noise_config=noise_config,
        )
    except (KeyError, TypeError, ValueError) as exc:
        raise ConfigError(f"invalid profile: {exc}") from exc


def profile_hash(profile: CameraProfile) -> str:
    """Stable content hash of the profile (canonical JSON, sha256 hex)."""
    canonical = json.dumps(profile_to_dict(profile), sort_keys=True,
                           separators=(",", ":"))
    return hashlib.sha256(canonical.encode("utf-8")).hexdigest()


def save_profile(profile: CameraProfile, path) -> None:
    Path(path).write_text(json.dumps(profile_to_dict(profile), indent=2,
                                     sort_keys=True) + "\n", encoding="utf-8")


def load_profile(path) -> CameraProfile:
    try:
        text = Path(path).read_text(encoding="utf-8")
    except OSError as exc:
        raise ConfigError(f"cannot read profile {path}: {exc}") from exc
    try:
        data = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ConfigError(f"profile {path} is not valid JSON: {exc}") from exc
    return profile_from_dict(data)


def resolve_profile(spec: str) -> CameraProfile:
    """Resolve a --profile argument: built-in name, file path, or search path.

    "default" returns the built-in profile. Otherwise the argument is tried
    as a path, then as "<name>.json" in each directory listed in the
    URAW_PROFILE_PATH environment variable (os.pathsep separated).
    """
    if spec == "default":
        return default_profile()
    candidate = Path(spec)
    if candidate.is_file():
        return load_profile(candidate)
    search = os.environ.get(PROFILE_PATH_ENV, "")
    for directory in filter(None, search.split(os.pathsep)):
        candidate = Path(directory) / f"{spec}.json"
        if candidate.is_file():
            return load_profile(candidate)
    raise ConfigError(f"profile {spec!r} not found (not a file, not on "
                      f"{PROFILE_PATH_ENV})")
