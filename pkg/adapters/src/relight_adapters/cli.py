"""Adapter CLI: score, segment, depth, instruct, deep-metrics."""

import click

from .common import AdapterError, write_rows
from .deep_metrics import deep_metrics
from .depth import estimate_depth
from .instruct import generate_instructions
from .score import DEFAULT_CLIP_MODEL, DEFAULT_PROMPTS, score_lighting
from .segment import segment_subject


@click.group()
def main():
    """Sidecar producers for the relight data engine."""


def _run(generator, out_path):
    try:
        rows = list(generator)
    except AdapterError as exc:
        raise click.ClickException(str(exc))
    write_rows(out_path, rows)
    click.echo(f"wrote {len(rows)} rows to {out_path}")
    return rows


@main.command("score")
@click.option("--images", "images_dir", required=True, type=click.Path(exists=True))
@click.option("--out", "out_path", required=True, type=click.Path())
@click.option("--backend", type=click.Choice(["heuristic", "clip"]), default="heuristic",
              show_default=True)
@click.option("--model", "model_name", default=DEFAULT_CLIP_MODEL, show_default=True)
@click.option("--prompt", "prompts", multiple=True,
              help="Lighting prompt (repeatable); defaults to the engine's seven.")
def score_cmd(images_dir, out_path, backend, model_name, prompts):
    """Per-prompt lighting similarity scores for every image."""
    prompt_list = prompts or DEFAULT_PROMPTS
    _run(score_lighting(images_dir, prompt_list, backend, model_name), out_path)


@main.command("segment")
@click.option("--images", "images_dir", required=True, type=click.Path(exists=True))
@click.option("--masks-dir", required=True, type=click.Path())
@click.option("--out", "out_path", required=True, type=click.Path())
@click.option("--backend", type=click.Choice(["heuristic", "promptable"]),
              default="heuristic", show_default=True)
@click.option("--query", default="person", show_default=True)
@click.option("--model", "model_name", default="sam", show_default=True)
def segment_cmd(images_dir, masks_dir, out_path, backend, query, model_name):
    """Binary subject masks (8-bit PNG) plus a detection sidecar."""
    rows = _run(segment_subject(images_dir, masks_dir, backend, query, model_name), out_path)
    flagged = sum(1 for r in rows if r.get("no_detection"))
    if flagged:
        click.echo(f"{flagged} images flagged with no detection", err=True)


@main.command("depth")
@click.option("--images", "images_dir", required=True, type=click.Path(exists=True))
@click.option("--depth-dir", required=True, type=click.Path())
@click.option("--out", "out_path", required=True, type=click.Path())
@click.option("--backend", type=click.Choice(["heuristic", "monocular"]),
              default="heuristic", show_default=True)
@click.option("--model", "model_name", default="midas", show_default=True)
def depth_cmd(images_dir, depth_dir, out_path, backend, model_name):
    """Relative depth sidecars (16-bit PNG, min-max normalized)."""
    _run(estimate_depth(images_dir, depth_dir, backend, model_name), out_path)


@main.command("instruct")
@click.option("--images", "images_dir", required=True, type=click.Path(exists=True),
              help="Ground-truth images only; degraded inputs never reach this command.")
@click.option("--out", "out_path", required=True, type=click.Path())
@click.option("--backend", type=click.Choice(["heuristic", "vlm"]), default="heuristic",
              show_default=True)
@click.option("--model", "model_name", default="qwen-vl", show_default=True)
def instruct_cmd(images_dir, out_path, backend, model_name):
    """One-sentence lighting instruction per ground-truth image."""
    _run(generate_instructions(images_dir, backend, model_name), out_path)


@main.command("deep-metrics")
@click.option("--manifest", "manifest_path", required=True, type=click.Path(exists=True))
@click.option("--pred-dir", "predictions_dir", required=True, type=click.Path(exists=True))
@click.option("--out-dir", required=True, type=click.Path())
@click.option("--data-root", default=None, type=click.Path())
@click.option("--split", default="test", show_default=True)
@click.option("--backend", type=click.Choice(["proxy", "neural"]), default="proxy",
              show_default=True)
def deep_metrics_cmd(manifest_path, predictions_dir, out_dir, data_root, split, backend):
    """Per-image metric value sidecars (lpips/clip/identity) for a split."""
    import os

    try:
        metrics, missing = deep_metrics(manifest_path, predictions_dir, data_root, split, backend)
    except AdapterError as exc:
        raise click.ClickException(str(exc))
    os.makedirs(out_dir, exist_ok=True)
    for name, rows in metrics.items():
        write_rows(os.path.join(out_dir, f"{name}.jsonl"), rows)
        click.echo(f"wrote {len(rows)} rows to {name}.jsonl")
    if missing:
        write_rows(os.path.join(out_dir, "missing.jsonl"), missing)
        click.echo(f"{len(missing)} predictions missing (missing.jsonl)", err=True)


if __name__ == "__main__":
    main()
