"""Command-line surface: every subcommand end to end."""

import json

import numpy as np
import pytest

from uraw.cli import main
from uraw.container import read_container, sidecar_params
from uraw.fileio import read_image, write_image
from uraw.profiles import default_profile, profile_to_dict

from conftest import smooth_mirror_image


def make_pngs(dir_path, count=3, size=256, name_fmt="img_{:03d}.png"):
    dir_path.mkdir(parents=True, exist_ok=True)
    paths = []
    for i in range(count):
        img = smooth_mirror_image(np.random.default_rng(500 + i),
                                  height=size, width=size)
        path = dir_path / name_fmt.format(i)
        write_image(path, img)
        paths.append(path)
    return paths


class TestUnprocessCommand:
    def test_writes_container_with_roundtripping_sidecar(self, tmp_path):
        (png,) = make_pngs(tmp_path / "src", 1, size=64)
        out = tmp_path / "out"
        assert main(["unprocess", str(png), "--seed", "3", "--out", str(out)]) == 0
        container_path = out / (png.name + ".uraw")
        noisy, clean, noise_map, sidecar = read_container(container_path)
        params, noise = sidecar_params(sidecar)
        assert sidecar["source_id"] == png.name
        assert sidecar["seed"] == 3
        assert noisy.samples.shape == clean.samples.shape == (4, 32, 32)
        reparsed, _ = sidecar_params(json.loads(json.dumps(sidecar)))
        assert reparsed == params

    def test_fixed_seed_identical_bytes(self, tmp_path):
        (png,) = make_pngs(tmp_path / "src", 1, size=64)
        for sub in ("a", "b"):
            assert main(["unprocess", str(png), "--seed", "9",
                         "--out", str(tmp_path / sub)]) == 0
        name = png.name + ".uraw"
        assert (tmp_path / "a" / name).read_bytes() == (tmp_path / "b" / name).read_bytes()

    def test_corrupt_input_exit_code(self, tmp_path, capsys):
        bad = tmp_path / "bad.png"
        bad.write_bytes(b"nope")
        (good,) = make_pngs(tmp_path / "src", 1, size=64)
        code = main(["unprocess", str(bad), str(good), "--seed", "1",
                     "--out", str(tmp_path / "out")])
        assert code == 1
        assert (tmp_path / "out" / (good.name + ".uraw")).exists()
        assert "bad.png" in capsys.readouterr().err

    def test_odd_sized_input_trimmed(self, tmp_path):
        img = smooth_mirror_image(np.random.default_rng(1), height=33, width=35)
        path = tmp_path / "odd.png"
        write_image(path, img)
        assert main(["unprocess", str(path), "--seed", "1",
                     "--out", str(tmp_path / "out")]) == 0
        noisy, _, _, _ = read_container(tmp_path / "out" / "odd.png.uraw")
        assert noisy.samples.shape == (4, 16, 17)


class TestProcessCommand:
    def test_roundtrip_reconstruction(self, tmp_path):
        # CLI-level unprocess -> process --tone-map reconstructs the source
        # (16-bit PPM keeps quantization at the 1e-5 level).
        img = smooth_mirror_image(np.random.default_rng(77), height=64, width=64)
        src = tmp_path / "src.ppm"
        write_image(src, img, bits=16)
        assert main(["unprocess", str(src), "--seed", "5",
                     "--out", str(tmp_path)]) == 0
        rec_path = tmp_path / "rec.ppm"
        assert main(["process", str(tmp_path / "src.ppm.uraw"), "--tone-map",
                     "--bits", "16", "--out", str(rec_path)]) == 0
        rec = read_image(rec_path)
        err = np.abs(rec.samples.astype(np.float64) - img.samples.astype(np.float64))
        assert err.mean() < 2e-3

    def test_identity_profile_passthrough(self, tmp_path):
        # With an identity-like profile (degenerate ranges), processing the
        # clean block without tone mapping equals gamma(demosaic(bayer)).
        profile = default_profile()
        d = profile_to_dict(profile)
        d["ccms"] = [{"name": "neutral", "matrix": [[1, 0, 0], [0, 1, 0], [0, 0, 1]]}]
        d["red_gain_range"] = [1.0, 1.0]
        d["blue_gain_range"] = [1.0, 1.0]
        d["inverse_digital_gain"] = {"mean": 1.0, "stddev": 1e-12, "bounds": [0.0, 1.1]}
        prof_path = tmp_path / "ident.json"
        prof_path.write_text(json.dumps(d))

        img = smooth_mirror_image(np.random.default_rng(9), height=32, width=32)
        src = tmp_path / "s.ppm"
        write_image(src, img, bits=16)
        assert main(["unprocess", str(src), "--profile", str(prof_path),
                     "--seed", "2", "--out", str(tmp_path)]) == 0

        out_png = tmp_path / "p.ppm"
        assert main(["process", str(tmp_path / "s.ppm.uraw"), "--bits", "16",
                     "--out", str(out_png)]) == 0

        from uraw.dataset import unpack_bayer_planes
        from uraw.images import demosaic_bilinear
        from uraw.process import gamma_compress
        _, clean, _, sidecar = read_container(tmp_path / "s.ppm.uraw")
        params, _ = sidecar_params(sidecar)
        expected = gamma_compress(demosaic_bilinear(
            unpack_bayer_planes(clean, params.bayer_pattern)).samples)
        got = read_image(out_png).samples
        assert np.allclose(got, np.clip(expected, 0, 1), atol=1e-4)

    def test_missing_sidecar_is_error(self, tmp_path, capsys):
        (png,) = make_pngs(tmp_path / "src", 1, size=64)
        assert main(["unprocess", str(png), "--seed", "1", "--out", str(tmp_path)]) == 0
        container_path = tmp_path / (png.name + ".uraw")
        container_path.write_bytes(container_path.read_bytes()[:-40])
        code = main(["process", str(container_path), "--out", str(tmp_path / "o.png")])
        assert code == 1


class TestSynthesizeCommand:
    def test_corpus_and_manifest(self, tmp_path, capsys):
        make_pngs(tmp_path / "src", 4, size=256)
        out = tmp_path / "out"
        assert main(["synthesize", str(tmp_path / "src"), "--seed", "11",
                     "--out", str(out)]) == 0
        summary = json.loads(capsys.readouterr().out.strip().splitlines()[-1])
        assert summary["examples"] == 4
        assert (out / "manifest.jsonl").exists()

    def test_entropy_seed_recorded(self, tmp_path, capsys):
        make_pngs(tmp_path / "src", 1, size=256)
        assert main(["synthesize", str(tmp_path / "src"),
                     "--out", str(tmp_path / "out")]) == 0
        captured = capsys.readouterr()
        assert "entropy seed" in captured.err
        summary = json.loads(captured.out.strip().splitlines()[-1])
        manifest_head = json.loads(
            (tmp_path / "out" / "manifest.jsonl").read_text().splitlines()[0])
        assert manifest_head["seed"] == summary["seed"]


class TestStatsCommand:
    def test_histogram_csv_schema_and_darkening(self, tmp_path, capsys):
        make_pngs(tmp_path / "src", 3, size=64)
        out_csv = tmp_path / "hist.csv"
        assert main(["stats", str(tmp_path / "src"), "--seed", "4",
                     "--bins", "16", "--out", str(out_csv)]) == 0
        lines = out_csv.read_text().splitlines()
        assert lines[0] == "group,channel,bin_lo,bin_hi,count,frequency"
        assert len(lines) == 1 + 2 * 3 * 16
        groups = {line.split(",")[0] for line in lines[1:]}
        assert groups == {"srgb", "unprocessed"}
        printed = capsys.readouterr().out
        assert "seed: 4" in printed


class TestMetricsCommand:
    def test_self_psnr_sentinel(self, tmp_path, capsys):
        (png,) = make_pngs(tmp_path / "src", 1, size=64)
        assert main(["metrics", str(png), str(png), "--json"]) == 0
        report = json.loads(capsys.readouterr().out)
        assert report["psnr_srgb"] == "inf"
        assert report["ssim_srgb"] == 1.0

    def test_container_noisy_vs_clean(self, tmp_path, capsys):
        (png,) = make_pngs(tmp_path / "src", 1, size=64)
        assert main(["unprocess", str(png), "--seed", "1", "--out", str(tmp_path)]) == 0
        assert main(["metrics", str(tmp_path / (png.name + ".uraw")), "--json"]) == 0
        report = json.loads(capsys.readouterr().out.strip().splitlines()[-1])
        assert 10 < report["psnr_raw"] < 80
        assert 0 < report["ssim_raw"] <= 1

    def test_reduction_arithmetic(self, capsys):
        assert main(["metrics", "--psnr-ref", "47.56", "--psnr-best", "48.89",
                     "--ssim-ref", "0.9767", "--ssim-best", "0.9824", "--json"]) == 0
        report = json.loads(capsys.readouterr().out)
        assert report["reductions"]["rmse_reduction"] * 100 == pytest.approx(14.2, abs=0.1)
        assert report["reductions"]["dssim_reduction"] * 100 == pytest.approx(24.5, abs=0.2)

    def test_no_inputs_no_flags_usage_error(self, capsys):
        assert main(["metrics"]) == 2


class TestSampleParamsCommand:
    def test_header_only_for_zero(self, tmp_path):
        out = tmp_path / "p.csv"
        assert main(["sample-params", "--n", "0", "--seed", "1",
                     "--out", str(out)]) == 0
        lines = out.read_text().splitlines()
        assert len(lines) == 1
        assert lines[0].startswith("index,seed,lambda_shot,lambda_read,red_gain")
        assert "ccm_weight_3" in lines[0]

    def test_deterministic_per_seed(self, tmp_path):
        a, b = tmp_path / "a.csv", tmp_path / "b.csv"
        assert main(["sample-params", "--n", "50", "--seed", "6", "--out", str(a)]) == 0
        assert main(["sample-params", "--n", "50", "--seed", "6", "--out", str(b)]) == 0
        assert a.read_text() == b.read_text()

    def test_rows_within_configured_ranges(self, tmp_path):
        out = tmp_path / "p.csv"
        assert main(["sample-params", "--n", "200", "--seed", "2",
                     "--out", str(out)]) == 0
        rows = out.read_text().splitlines()[1:]
        assert len(rows) == 200
        for row in rows:
            cells = row.split(",")
            lam_shot, red = float(cells[2]), float(cells[4])
            assert 1e-4 <= lam_shot <= 0.012
            assert 1.9 <= red <= 2.4
            weights = [float(c) for c in cells[8:]]
            assert sum(weights) == pytest.approx(1.0, abs=1e-9)


class TestExitCodes:
    def test_unknown_profile_is_config_error(self, tmp_path, capsys):
        (png,) = make_pngs(tmp_path / "src", 1, size=64)
        code = main(["unprocess", str(png), "--profile", "missing-cam",
                     "--seed", "1", "--out", str(tmp_path / "o")])
        assert code == 2

    def test_usage_error_exits_2(self):
        with pytest.raises(SystemExit) as exc:
            main(["unprocess"])  # missing required --out and inputs
        assert exc.value.code == 2
