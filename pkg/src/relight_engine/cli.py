"""Command-line interface: filter, run, degrade, metrics, preview."""

import json
import os
import sys

import click
import numpy as np

from . import imagecore, metrics
from .config import PipelineConfig, load_config
from .engine import process_image, run_batch
from .errors import EngineError
from .filtering import score_from_row, split_dataset, unassigned_ids
from .manifest import read_ldjson, read_manifest, write_ldjson
from .rng import PortableRng


@click.group()
def main():
    """Deterministic relighting-triplet data engine."""


def _load_cfg(config_path, seed):
    cfg = load_config(config_path) if config_path else PipelineConfig()
    if seed is not None:
        cfg = PipelineConfig(**{**cfg.to_dict(), "global_seed": seed, "msr": cfg.msr})
    return cfg


@main.command("filter")
@click.option("--scores", "scores_path", required=True, type=click.Path(exists=True))
@click.option("--out", "out_path", required=True, type=click.Path())
@click.option("--threshold", default=0.21, show_default=True)
@click.option("--counts", nargs=3, type=int, default=(10000, 1000, 1000), show_default=True)
@click.option("--seed", default=0, show_default=True)
@click.option("--prompt-count", default=None, type=int, help="Expected prompt scores per row.")
def filter_cmd(scores_path, out_path, threshold, counts, seed, prompt_count):
    """Score file -> keep decisions and deterministic splits."""
    scores = [score_from_row(obj, prompt_count) for obj in read_ldjson(scores_path)]
    kept = [s for s in scores if s.keep(threshold)]
    kept_ids = [s.image_id for s in kept]
    assignments = split_dataset(kept_ids, counts, seed)
    rows = [{"image_id": a.image_id, "split": a.split} for a in assignments]
    rows.extend(
        {"image_id": i, "split": "unassigned"} for i in unassigned_ids(kept_ids, assignments)
    )
    rows.sort(key=lambda r: r["image_id"])
    write_ldjson(out_path, rows)
    click.echo(
        f"scored={len(scores)} kept={len(kept)} "
        f"train={counts[0]} val={counts[1]} test={counts[2]} "
        f"unassigned={len(kept) - sum(counts)}"
    )


@main.command("run")
@click.option("--config", "config_path", required=True, type=click.Path(exists=True))
@click.option("--seed", default=None, type=int, help="Override the config's global seed.")
@click.option("--workers", default=1, show_default=True)
@click.option("--resume", is_flag=True, default=False)
def run_cmd(config_path, seed, workers, resume):
    """Full pipeline: filter, split, degrade, manifest."""
    cfg = _load_cfg(config_path, seed)
    try:
        summary = run_batch(cfg, workers=workers, resume=resume)
    except EngineError as exc:
        raise click.ClickException(str(exc))
    click.echo(json.dumps(summary.to_json_obj(), indent=2))
    sys.exit(0 if not summary.failed else 1)


@main.command("degrade")
@click.option("--image", "image_path", required=True, type=click.Path(exists=True))
@click.option("--mask", "mask_path", required=True, type=click.Path(exists=True))
@click.option("--depth", "depth_path", required=True, type=click.Path(exists=True))
@click.option("--instruction", default="neutral frontal lighting")
@click.option("--out", "out_path", required=True, type=click.Path())
@click.option("--config", "config_path", default=None, type=click.Path(exists=True))
@click.option("--seed", default=0, show_default=True)
def degrade_cmd(image_path, mask_path, depth_path, instruction, out_path, config_path, seed):
    """Degrade a single image and print every sampled parameter."""
    cfg = _load_cfg(config_path, seed)
    image_id = os.path.splitext(os.path.basename(image_path))[0]
    gt = imagecore.load_image(image_path)
    mask = imagecore.load_mask(mask_path)
    depth = imagecore.load_depth(depth_path)
    degraded, record = process_image(image_id, gt, mask, depth, instruction, 0.0, cfg)
    imagecore.save_image(degraded, out_path)
    click.echo(json.dumps(record.to_json_obj(), indent=2, sort_keys=True))


@main.command("metrics")
@click.option("--manifest", "manifest_path", required=True, type=click.Path(exists=True))
@click.option("--data-root", default=None, type=click.Path(), help="Root for manifest paths (defaults to the manifest's directory).")
@click.option("--pred-dir", required=True, type=click.Path(exists=True))
@click.option("--split", default="test", show_default=True)
@click.option(
    "--external",
    multiple=True,
    help="NAME:DIRECTION:PATH sidecar with per-image values, e.g. lpips:lower:lpips.jsonl",
)
@click.option("--json", "as_json", is_flag=True, default=False)
def metrics_cmd(manifest_path, data_root, pred_dir, split, external, as_json):
    """SSIM against ground truth plus aggregation of external metric sidecars."""
    records = [r for r in read_manifest(manifest_path) if r.split == split]
    if not records:
        raise click.ClickException(f"manifest has no rows for split {split!r}")
    root = data_root or os.path.dirname(os.path.abspath(manifest_path))
    ssim_values = []
    missing = 0
    for record in records:
        pred_path = os.path.join(pred_dir, record.image_id + ".png")
        if not os.path.isfile(pred_path):
            missing += 1
            continue
        gt = imagecore.load_image(os.path.join(root, record.output_path))
        pred = imagecore.load_image(pred_path)
        pred = imagecore.resize(pred, gt.width, gt.height)
        ssim_values.append(metrics.ssim(gt, pred))
    reports = []
    if ssim_values:
        reports.append(metrics.aggregate(ssim_values, "SSIM", metrics.HIGHER_BETTER))
    known_ids = [r.image_id for r in records]
    for spec_str in external:
        try:
            name, direction, path = spec_str.split(":", 2)
        except ValueError:
            raise click.ClickException(f"bad --external spec: {spec_str!r}")
        direction = metrics.LOWER_BETTER if direction.startswith("lower") else metrics.HIGHER_BETTER
        values = [v for _, v in metrics.collect_external(path, known_ids)]
        if values:
            reports.append(metrics.aggregate(values, name, direction))
    if as_json:
        click.echo(
            json.dumps(
                [
                    {
                        "metric": r.name,
                        "mean": r.mean,
                        "std": r.std,
                        "n": r.n,
                        "direction": r.direction,
                    }
                    for r in reports
                ],
                indent=2,
            )
        )
    else:
        click.echo(f"{'Metric':<16} {'Mean ± Std':<20} {'n':>6}  Direction")
        for r in reports:
            arrow = "↑" if r.direction == metrics.HIGHER_BETTER else "↓"
            click.echo(f"{r.name + ' ' + arrow:<16} {r.format_mean_std():<20} {r.n:>6}  {r.direction}")
    if missing:
        click.echo(f"warning: {missing} prediction files missing", err=True)


@main.command("preview")
@click.option("--manifest", "manifest_path", required=True, type=click.Path(exists=True))
@click.option("--data-root", default=None, type=click.Path())
@click.option("--out", "out_path", required=True, type=click.Path())
@click.option("--count", default=4, show_default=True)
@click.option("--seed", default=0, show_default=True)
def preview_cmd(manifest_path, data_root, out_path, count, seed):
    """Contact sheet: sampled triplets as a (degraded | ground truth) grid."""
    records = read_manifest(manifest_path)
    if not records:
        raise click.ClickException("manifest is empty")
    root = data_root or os.path.dirname(os.path.abspath(manifest_path))
    rng = PortableRng(seed)
    picks = sorted(records, key=lambda r: r.image_id)
    rng.shuffle(picks)
    picks = picks[: max(1, min(count, len(picks)))]
    rows = []
    for record in picks:
        degraded = imagecore.load_image(os.path.join(root, record.input_path))
        gt = imagecore.load_image(os.path.join(root, record.output_path))
        gt = imagecore.resize(gt, degraded.width, degraded.height)
        rows.append(np.concatenate([degraded.data, gt.data], axis=1))
    width = max(r.shape[1] for r in rows)
    padded = [
        np.pad(r, ((0, 0), (0, width - r.shape[1]), (0, 0)), constant_values=1.0) for r in rows
    ]
    grid = imagecore.ImageRGB(np.concatenate(padded, axis=0))
    imagecore.save_image(grid, out_path)
    click.echo(f"wrote {out_path} ({len(picks)} triplets)")


if __name__ == "__main__":
    main()
