"""Command-line surface: unprocess, process, synthesize, stats, metrics.

Exit codes: 0 on success, 1 if any per-file operation failed, 2 for
configuration or usage errors. Every command is deterministic under
--seed; omitting it draws a seed from system entropy and records it in
the outputs.
"""

from __future__ import annotations

import argparse
import dataclasses
import json
import secrets
import sys
from pathlib import Path

from . import container as container_io
from . import dataset, metrics
from .errors import ConfigError, PipelineError
from .fileio import read_image, write_image
from .images import PlanarImage, mosaic
from .noise import apply_shot_read_noise, noise_stddev_map, sample_noise_params
from .process import process_raw_to_srgb
from .profiles import profile_hash, resolve_profile
from .seeding import seeded_rng
from .unprocess import (sample_inverse_digital_gain, sample_simplex_weights,
                        sample_wb_gains, unprocess)


def _positive_seed(value: str) -> int:
    seed = int(value)
    if seed < 0:
        raise argparse.ArgumentTypeError("seed must be non-negative")
    return seed


def _resolve_seed(args) -> int:
    if args.seed is not None:
        return args.seed
    seed = secrets.randbits(63)
    print(f"--seed not given; using entropy seed {seed}", file=sys.stderr)
    return seed


def _even_trim(img: PlanarImage) -> PlanarImage:
    h = img.height - img.height % 2
    w = img.width - img.width % 2
    if (h, w) == (img.height, img.width):
        return img
    return PlanarImage(img.samples[:, :h, :w], img.colorspace)


def cmd_unprocess(args) -> int:
    profile = resolve_profile(args.profile)
    seed = _resolve_seed(args)
    cfg_hash = profile_hash(profile)
    out_dir = Path(args.out)
    out_dir.mkdir(parents=True, exist_ok=True)
    failures = 0
    for input_path in args.inputs:
        input_path = Path(input_path)
        try:
            srgb = _even_trim(read_image(input_path))
            rng = seeded_rng(seed, input_path.name)
            raw_rgb, params = unprocess(srgb, profile.unprocess_config, rng,
                                        pattern=profile.bayer_pattern)
            clean_bayer = mosaic(raw_rgb, profile.bayer_pattern)
            noise_params = sample_noise_params(profile.noise_config, rng)
            noisy_bayer = apply_shot_read_noise(clean_bayer, noise_params, rng, clip=True)
            noisy = dataset.pack_bayer_planes(noisy_bayer)
            clean = dataset.pack_bayer_planes(clean_bayer)
            noise_map = noise_stddev_map(noisy, noise_params)
            out_path = out_dir / (input_path.name + ".uraw")
            sidecar = container_io.sidecar_dict(params, noise_params,
                                                input_path.name, seed, cfg_hash)
            container_io.write_container(out_path, noisy, clean, noise_map, sidecar)
            print(f"{input_path} -> {out_path}")
        except (PipelineError, OSError) as exc:
            print(f"error: {input_path}: {exc}", file=sys.stderr)
            failures += 1
    return 1 if failures else 0


def cmd_process(args) -> int:
    noisy, clean, _, sidecar = container_io.read_container(args.container)
    params, _ = container_io.sidecar_params(sidecar)
    params = dataclasses.replace(params, tone_map_enabled=args.tone_map)
    planes = noisy if args.block == "noisy" else clean
    bayer = dataset.unpack_bayer_planes(planes, params.bayer_pattern)
    srgb = process_raw_to_srgb(bayer, params)
    write_image(args.out, srgb, bits=args.bits)
    print(f"{args.container} [{args.block}] -> {args.out}")
    return 0


def cmd_synthesize(args) -> int:
    profile = resolve_profile(args.profile)
    seed = _resolve_seed(args)
    summary = dataset.synthesize_corpus(args.source_dir, profile, seed, args.out,
                                        crop_size=args.crop)
    print(json.dumps(summary, sort_keys=True))
    return 1 if summary["skipped"] else 0


def cmd_stats(args) -> int:
    profile = resolve_profile(args.profile)
    seed = _resolve_seed(args)
    sources = dataset.list_sources(args.source_dir)
    if not sources:
        print("error: no readable images found", file=sys.stderr)
        return 2
    failures: list[str] = []

    def iter_srgb():
        for path in sources:
            try:
                yield read_image(path)
            except PipelineError as exc:
                if path.name not in failures:
                    failures.append(path.name)
                    print(f"error: {path}: {exc}", file=sys.stderr)

    def iter_unprocessed():
        for path in sources:
            try:
                srgb = _even_trim(read_image(path))
            except PipelineError:
                continue  # already reported on the sRGB pass
            raw_rgb, _ = unprocess(srgb, profile.unprocess_config,
                                   seeded_rng(seed, path.name),
                                   pattern=profile.bayer_pattern)
            yield raw_rgb

    srgb_hist = metrics.channel_histograms(iter_srgb(), bins=args.bins)
    raw_hist = metrics.channel_histograms(iter_unprocessed(), bins=args.bins)

    lines = ["group,channel,bin_lo,bin_hi,count,frequency"]
    lines += srgb_hist.to_csv_rows("srgb")
    lines += raw_hist.to_csv_rows("unprocessed")
    Path(args.out).write_text("\n".join(lines) + "\n", encoding="utf-8")

    channel_names = ("red", "green", "blue")
    print(f"seed: {seed}")
    print(f"images: {len(sources) - len(failures)}   histogram: {args.out}")
    print(f"{'channel':<10} {'srgb mean':>12} {'unproc mean':>12} "
          f"{'srgb median':>12} {'unproc median':>14}")
    for c in range(3):
        print(f"{channel_names[c]:<10} {srgb_hist.means[c]:>12.5f} "
              f"{raw_hist.means[c]:>12.5f} {srgb_hist.medians[c]:>12.5f} "
              f"{raw_hist.medians[c]:>14.5f}")
    return 1 if failures else 0


def _metrics_for_pair(path_a: str, path_b: str) -> metrics.MetricReport:
    a, b = Path(path_a), Path(path_b)
    if a.suffix == ".uraw" and b.suffix == ".uraw":
        _, clean_a, _, sidecar_a = container_io.read_container(a)
        _, clean_b, _, _ = container_io.read_container(b)
        params, _ = container_io.sidecar_params(sidecar_a)
        bayer_a = dataset.unpack_bayer_planes(clean_a, params.bayer_pattern)
        bayer_b = dataset.unpack_bayer_planes(clean_b, params.bayer_pattern)
        return _raw_report(clean_a, clean_b, bayer_a, bayer_b, params)
    img_a = read_image(a)
    img_b = read_image(b)
    return metrics.MetricReport(psnr_srgb=metrics.psnr(img_a, img_b),
                                ssim_srgb=metrics.ssim(img_a, img_b))


def _raw_report(planes_a, planes_b, bayer_a, bayer_b, params) -> metrics.MetricReport:
    loss_params = dataclasses.replace(params, tone_map_enabled=False)
    srgb_a = process_raw_to_srgb(bayer_a, loss_params)
    srgb_b = process_raw_to_srgb(bayer_b, loss_params)
    return metrics.MetricReport(
        psnr_raw=metrics.psnr(planes_a, planes_b),
        ssim_raw=metrics.ssim(planes_a, planes_b),
        psnr_srgb=metrics.psnr(srgb_a, srgb_b),
        ssim_srgb=metrics.ssim(srgb_a, srgb_b),
    )


def cmd_metrics(args) -> int:
    reductions = {}
    if args.psnr_ref is not None or args.psnr_best is not None:
        if args.psnr_ref is None or args.psnr_best is None:
            raise ConfigError("--psnr-ref and --psnr-best must be given together")
        reductions["rmse_reduction"] = metrics.psnr_to_relative_rmse_reduction(
            args.psnr_ref, args.psnr_best)
    if args.ssim_ref is not None or args.ssim_best is not None:
        if args.ssim_ref is None or args.ssim_best is None:
            raise ConfigError("--ssim-ref and --ssim-best must be given together")
        reductions["dssim_reduction"] = metrics.dssim_relative_reduction(
            args.ssim_ref, args.ssim_best)

    if len(args.inputs) == 2:
        report = _metrics_for_pair(args.inputs[0], args.inputs[1])
    elif len(args.inputs) == 1:
        noisy, clean, _, sidecar = container_io.read_container(args.inputs[0])
        params, _ = container_io.sidecar_params(sidecar)
        bayer_noisy = dataset.unpack_bayer_planes(noisy, params.bayer_pattern)
        bayer_clean = dataset.unpack_bayer_planes(clean, params.bayer_pattern)
        report = _raw_report(noisy, clean, bayer_noisy, bayer_clean, params)
    elif reductions:
        report = metrics.MetricReport()
    else:
        raise ConfigError("metrics needs 1 container, 2 images, or reduction flags")

    if reductions:
        report = dataclasses.replace(report, reductions=reductions)
    if args.out:
        Path(args.out).write_text(json.dumps(report.to_dict(), indent=2,
                                             sort_keys=True) + "\n", encoding="utf-8")
    if args.json:
        print(json.dumps(report.to_dict(), sort_keys=True))
    else:
        print(report.to_text())
    return 0


def cmd_sample_params(args) -> int:
    profile = resolve_profile(args.profile)
    seed = _resolve_seed(args)
    cfg = profile.unprocess_config
    rng = seeded_rng(seed)
    n_ccms = len(cfg.ccm_set)
    header = ["index", "seed", "lambda_shot", "lambda_read", "red_gain",
              "green_gain", "blue_gain", "inverse_digital_gain"]
    header += [f"ccm_weight_{i}" for i in range(n_ccms)]
    lines = [",".join(header)]
    for i in range(args.n):
        weights = sample_simplex_weights(n_ccms, rng)
        wb = sample_wb_gains(cfg, rng)
        inv_digital = sample_inverse_digital_gain(cfg, rng)
        noise_params = sample_noise_params(profile.noise_config, rng)
        row = [str(i), str(seed), f"{noise_params.lambda_shot:.10g}",
               f"{noise_params.lambda_read:.10g}", f"{wb[0]:.10g}", "1",
               f"{wb[2]:.10g}", f"{inv_digital:.10g}"]
        row += [f"{w:.10g}" for w in weights]
        lines.append(",".join(row))
    text = "\n".join(lines) + "\n"
    if args.out:
        Path(args.out).write_text(text, encoding="utf-8")
    else:
        sys.stdout.write(text)
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="uraw",
        description="Unprocess sRGB images into synthetic raw data, synthesize "
                    "noisy/clean training pairs, process raw back to sRGB, and "
                    "compute quality metrics.")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("unprocess", help="sRGB image(s) -> raw containers")
    p.add_argument("inputs", nargs="+", help="PNG/PPM/PGM images")
    p.add_argument("--profile", default="default")
    p.add_argument("--seed", type=_positive_seed, default=None)
    p.add_argument("--out", required=True, help="output directory")
    p.set_defaults(func=cmd_unprocess)

    p = sub.add_parser("process", help="raw container -> sRGB image")
    p.add_argument("container", help=".uraw container")
    p.add_argument("--out", required=True, help="output image (.png/.ppm)")
    p.add_argument("--tone-map", action="store_true",
                   help="apply the smoothstep tone curve after gamma")
    p.add_argument("--block", choices=("clean", "noisy"), default="clean")
    p.add_argument("--bits", type=int, choices=(8, 16), default=8)
    p.set_defaults(func=cmd_process)

    p = sub.add_parser("synthesize", help="image folder -> training-pair corpus")
    p.add_argument("source_dir")
    p.add_argument("--profile", default="default")
    p.add_argument("--seed", type=_positive_seed, default=None)
    p.add_argument("--out", required=True, help="output directory")
    p.add_argument("--crop", type=int, default=dataset.DEFAULT_CROP_SIZE)
    p.set_defaults(func=cmd_synthesize)

    p = sub.add_parser("stats", help="channel histograms: sRGB vs unprocessed")
    p.add_argument("source_dir")
    p.add_argument("--profile", default="default")
    p.add_argument("--seed", type=_positive_seed, default=None)
    p.add_argument("--bins", type=int, default=64)
    p.add_argument("--out", required=True, help="output CSV")
    p.set_defaults(func=cmd_stats)

    p = sub.add_parser("metrics", help="PSNR/SSIM reports and error-reduction arithmetic")
    p.add_argument("inputs", nargs="*", help="1 container, or 2 images/containers")
    p.add_argument("--psnr-ref", type=float, default=None)
    p.add_argument("--psnr-best", type=float, default=None)
    p.add_argument("--ssim-ref", type=float, default=None)
    p.add_argument("--ssim-best", type=float, default=None)
    p.add_argument("--json", action="store_true", help="print the report as JSON")
    p.add_argument("--out", default=None, help="also write the JSON report here")
    p.set_defaults(func=cmd_metrics)

    p = sub.add_parser("sample-params", help="CSV of sampled pipeline/noise parameters")
    p.add_argument("--profile", default="default")
    p.add_argument("--n", type=int, required=True)
    p.add_argument("--seed", type=_positive_seed, default=None)
    p.add_argument("--out", default=None, help="output CSV (default stdout)")
    p.set_defaults(func=cmd_sample_params)

    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 2
    except PipelineError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
