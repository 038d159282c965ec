"""Training-pair synthesis, Bayer packing, splits, corpus, containers."""

import json
import math
from collections import Counter

import numpy as np
import pytest

from uraw import container
from uraw.dataset import (TrainingExample, UndersizedSourceError,
                          assign_splits, example_from_container,
                          example_to_container, pack_bayer_planes,
                          split_for_key, synthesize_corpus,
                          synthesize_example, unpack_bayer_planes)
from uraw.errors import FormatError, PipelineError
from uraw.fileio import write_image
from uraw.images import BayerImage, BayerPattern, Colorspace, PlanarImage
from uraw.noise import NoiseDistributionConfig, noise_stddev_map
from uraw.profiles import CameraProfile, default_profile
from uraw.seeding import seeded_rng

from conftest import smooth_mirror_image


class TestPacking:
    def test_2x2_raster_order(self):
        plane = BayerImage(np.array([[1.0, 2.0], [3.0, 4.0]], np.float32),
                           BayerPattern.RGGB)
        packed = pack_bayer_planes(plane)
        assert packed.samples.shape == (4, 1, 1)
        assert packed.samples.ravel().tolist() == [1.0, 2.0, 3.0, 4.0]

    @pytest.mark.parametrize("pattern", list(BayerPattern))
    def test_unpack_inverts_exactly(self, pattern, rng):
        plane = BayerImage(rng.random((8, 10), dtype=np.float32), pattern)
        again = unpack_bayer_planes(pack_bayer_planes(plane), pattern)
        assert np.array_equal(again.samples, plane.samples)

    def test_constant_plane_four_constant_channels(self):
        plane = BayerImage(np.full((6, 6), 0.4, np.float32), BayerPattern.GBRG)
        packed = pack_bayer_planes(plane)
        assert np.all(packed.samples == np.float32(0.4))


def zero_noise_profile():
    """Profile whose sampled noise variance underflows to 0 in float32."""
    base = default_profile()
    quiet = NoiseDistributionConfig(log_shot_min=math.log(1e-62),
                                    log_shot_max=math.log(1e-60),
                                    read_slope=1.0, read_intercept=0.0,
                                    read_stddev=0.01)
    return CameraProfile(name="zero-noise", bayer_pattern=base.bayer_pattern,
                         unprocess_config=base.unprocess_config,
                         noise_config=quiet)


class TestSynthesizeExample:
    def test_geometry(self, profile, rng):
        src = smooth_mirror_image(rng, height=512, width=512)
        ex = synthesize_example(src, profile, seeded_rng(0, "a"), source_id="a")
        assert ex.noisy_planes.samples.shape == (4, 64, 64)
        assert ex.clean_planes.samples.shape == (4, 64, 64)
        assert ex.noise_map.samples.shape == (4, 64, 64)

    def test_undersized_source_rejected(self, profile, rng):
        src = smooth_mirror_image(rng, height=255, width=300)
        with pytest.raises(UndersizedSourceError):
            synthesize_example(src, profile, seeded_rng(0, "a"))

    def test_zero_noise_noisy_equals_clean(self, rng):
        src = smooth_mirror_image(rng, height=256, width=256)
        ex = synthesize_example(src, zero_noise_profile(), seeded_rng(0, "a"))
        assert np.array_equal(ex.noisy_planes.samples, ex.clean_planes.samples)

    def test_same_seed_bit_identical(self, profile, rng):
        src = smooth_mirror_image(rng, height=256, width=256)
        a = synthesize_example(src, profile, seeded_rng(5, "k"), source_id="k")
        b = synthesize_example(src, profile, seeded_rng(5, "k"), source_id="k")
        assert np.array_equal(a.noisy_planes.samples, b.noisy_planes.samples)
        assert np.array_equal(a.clean_planes.samples, b.clean_planes.samples)
        assert a.params == b.params and a.noise == b.noise

    def test_clean_planes_are_deterministic_unprocess(self, profile, rng):
        # Pipeline-order invariant: noise is added after mosaicing and never
        # touches the clean planes, which must equal an independent replay of
        # downsample -> crop/flip -> unprocess -> mosaic -> pack bit for bit.
        from uraw.images import downsample_2x_gaussian, mosaic, random_crop_flip
        from uraw.unprocess import unprocess
        src = smooth_mirror_image(rng, height=256, width=256)
        ex = synthesize_example(src, profile, seeded_rng(9, "c"), source_id="c")
        replay = seeded_rng(9, "c")
        crop = random_crop_flip(downsample_2x_gaussian(src), 128, replay)
        raw_rgb, params = unprocess(crop, profile.unprocess_config, replay,
                                    pattern=profile.bayer_pattern)
        expected = pack_bayer_planes(mosaic(raw_rgb, profile.bayer_pattern))
        assert np.array_equal(ex.clean_planes.samples, expected.samples)
        assert ex.params == params
        assert not np.array_equal(ex.noisy_planes.samples, ex.clean_planes.samples)

    def test_noisy_planes_clipped(self, profile, rng):
        src = smooth_mirror_image(rng, height=256, width=256, hi=1.0)
        ex = synthesize_example(src, profile, seeded_rng(1, "b"))
        assert ex.noisy_planes.samples.min() >= 0.0
        assert ex.noisy_planes.samples.max() <= 1.0

    def test_noise_map_matches_recomputation(self, profile, rng):
        src = smooth_mirror_image(rng, height=256, width=256)
        ex = synthesize_example(src, profile, seeded_rng(2, "d"))
        recomputed = noise_stddev_map(ex.noisy_planes, ex.noise)
        assert np.array_equal(ex.noise_map.samples, recomputed.samples)

    def test_training_example_validates_noise_map(self, profile, rng):
        src = smooth_mirror_image(rng, height=256, width=256)
        ex = synthesize_example(src, profile, seeded_rng(3, "e"))
        wrong = PlanarImage(np.zeros_like(ex.noise_map.samples), Colorspace.LINEAR_RAW)
        with pytest.raises(PipelineError):
            TrainingExample(noisy_planes=ex.noisy_planes, clean_planes=ex.clean_planes,
                            noise_map=wrong, params=ex.params, noise=ex.noise,
                            source_id="x")


class TestSplits:
    def test_split_is_pure_function_of_key(self):
        keys = [f"img_{i:03d}.png" for i in range(100)]
        first = assign_splits(keys)
        second = assign_splits(list(reversed(keys)))
        assert first == second

    def test_partition_proportions_at_scale(self):
        keys = [f"k{i}.png" for i in range(100_000)]
        counts = Counter(split_for_key(k) for k in keys)
        assert counts["train"] / 100_000 == pytest.approx(0.90, abs=0.005)
        assert counts["val"] / 100_000 == pytest.approx(0.05, abs=0.005)
        assert counts["test"] / 100_000 == pytest.approx(0.05, abs=0.005)

    def test_every_key_assigned_exactly_one_split(self):
        splits = assign_splits([f"x{i}" for i in range(1000)])
        assert set(splits.values()) <= {"train", "val", "test"}
        assert len(splits) == 1000


class TestContainerRoundTrip:
    def make_example(self, profile, rng, source_id="img.png"):
        src = smooth_mirror_image(rng, height=256, width=256)
        return synthesize_example(src, profile, seeded_rng(4, source_id),
                                  source_id=source_id)

    def test_roundtrip_bit_exact(self, profile, rng, tmp_path):
        ex = self.make_example(profile, rng)
        path = tmp_path / "ex.uraw"
        example_to_container(path, ex, seed=4, config_hash="h" * 64)
        back = example_from_container(path)
        assert np.array_equal(back.noisy_planes.samples, ex.noisy_planes.samples)
        assert np.array_equal(back.clean_planes.samples, ex.clean_planes.samples)
        assert np.array_equal(back.noise_map.samples, ex.noise_map.samples)
        assert back.params == ex.params
        assert back.noise == ex.noise
        assert back.source_id == ex.source_id

    def test_header_fields(self, profile, rng, tmp_path):
        ex = self.make_example(profile, rng)
        path = tmp_path / "ex.uraw"
        example_to_container(path, ex, seed=4, config_hash="h" * 64)
        blob = path.read_bytes()
        assert blob[:4] == b"URAW"

    def test_truncated_sidecar_rejected(self, profile, rng, tmp_path):
        ex = self.make_example(profile, rng)
        path = tmp_path / "ex.uraw"
        example_to_container(path, ex, seed=4, config_hash="h" * 64)
        (tmp_path / "cut.uraw").write_bytes(path.read_bytes()[:-10])
        with pytest.raises(FormatError):
            container.read_container(tmp_path / "cut.uraw")

    def test_bad_magic_rejected(self, tmp_path):
        (tmp_path / "bad.uraw").write_bytes(b"NOPE" + b"\x00" * 60)
        with pytest.raises(FormatError):
            container.read_container(tmp_path / "bad.uraw")


def write_corpus(dir_path, count, size=256, name_fmt="img_{:03d}.png"):
    dir_path.mkdir(parents=True, exist_ok=True)
    names = []
    for i in range(count):
        name = name_fmt.format(i)
        img = smooth_mirror_image(np.random.default_rng(1000 + i),
                                  height=size, width=size)
        write_image(dir_path / name, img)
        names.append(name)
    return names


class TestSynthesizeCorpus:
    def test_empty_dir_empty_manifest(self, profile, tmp_path):
        src = tmp_path / "src"
        src.mkdir()
        summary = synthesize_corpus(src, profile, 1, tmp_path / "out")
        assert summary["examples"] == 0 and summary["skipped"] == 0
        manifest = (tmp_path / "out" / "manifest.jsonl").read_text().splitlines()
        assert len(manifest) == 1  # just the run summary

    def test_split_counts_match_hash_oracle(self, profile, tmp_path):
        names = write_corpus(tmp_path / "src", 30, size=256)
        summary = synthesize_corpus(tmp_path / "src", profile, 7, tmp_path / "out")
        oracle = Counter(split_for_key(n) for n in names)
        assert summary["counts"] == {s: oracle.get(s, 0) for s in ("train", "val", "test")}
        assert summary["examples"] == 30

    def test_unreadable_file_skipped_not_fatal(self, profile, tmp_path):
        write_corpus(tmp_path / "src", 3, size=256)
        (tmp_path / "src" / "broken.png").write_bytes(b"not a png at all")
        summary = synthesize_corpus(tmp_path / "src", profile, 7, tmp_path / "out")
        assert summary["examples"] == 3
        assert summary["skipped"] == 1
        records = [json.loads(line) for line in
                   (tmp_path / "out" / "manifest.jsonl").read_text().splitlines()]
        skipped = [r for r in records if r["record"] == "skipped"]
        assert len(skipped) == 1 and skipped[0]["source_id"] == "broken.png"

    def test_undersized_source_skipped_with_reason(self, profile, tmp_path):
        src = tmp_path / "src"
        src.mkdir()
        small = smooth_mirror_image(np.random.default_rng(0), height=64, width=64)
        write_image(src / "small.png", small)
        summary = synthesize_corpus(src, profile, 7, tmp_path / "out")
        assert summary["skipped"] == 1
        records = [json.loads(line) for line in
                   (tmp_path / "out" / "manifest.jsonl").read_text().splitlines()]
        assert "too small" in records[1]["reason"]

    def test_rerun_same_seed_identical_bytes(self, profile, tmp_path):
        write_corpus(tmp_path / "src", 6, size=256)
        synthesize_corpus(tmp_path / "src", profile, 99, tmp_path / "a")
        synthesize_corpus(tmp_path / "src", profile, 99, tmp_path / "b")
        files_a = sorted(p.name for p in (tmp_path / "a").iterdir())
        files_b = sorted(p.name for p in (tmp_path / "b").iterdir())
        assert files_a == files_b
        for name in files_a:
            assert (tmp_path / "a" / name).read_bytes() == \
                   (tmp_path / "b" / name).read_bytes()

    def test_resume_keeps_existing_containers(self, profile, tmp_path):
        write_corpus(tmp_path / "src", 4, size=256)
        out = tmp_path / "out"
        synthesize_corpus(tmp_path / "src", profile, 5, out)
        first = {p.name: p.read_bytes() for p in out.iterdir()}
        # corrupt one container; rerun must regenerate it and keep the rest
        victim = sorted(n for n in first if n.endswith(".uraw"))[0]
        (out / victim).write_bytes(b"garbage")
        synthesize_corpus(tmp_path / "src", profile, 5, out)
        second = {p.name: p.read_bytes() for p in out.iterdir()}
        assert first == second

    def test_different_seed_different_bytes(self, profile, tmp_path):
        write_corpus(tmp_path / "src", 2, size=256)
        synthesize_corpus(tmp_path / "src", profile, 1, tmp_path / "a")
        synthesize_corpus(tmp_path / "src", profile, 2, tmp_path / "b")
        name = "img_000.png.uraw"
        assert (tmp_path / "a" / name).read_bytes() != (tmp_path / "b" / name).read_bytes()
