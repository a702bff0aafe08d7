"""End-to-end: adapters produce every sidecar, the engine consumes them.

The two packages interact only through files in the documented formats;
this test drives that full path from raw images to a triplet manifest and
an evaluation table.
"""

import os

from click.testing import CliRunner

from relight_adapters.cli import main as adapters_cli
from relight_engine.config import PipelineConfig
from relight_engine.engine import MANIFEST_NAME, run_batch
from relight_engine.intrinsic import MsrConfig
from relight_engine.manifest import read_manifest

from conftest import write_portraits


def run(cli, args):
    result = CliRunner().invoke(cli, args)
    assert result.exit_code == 0, result.output
    return result


def test_adapters_feed_engine_end_to_end(tmp_path):
    images_dir = str(tmp_path / "images")
    ids = write_portraits(images_dir, count=6, well_lit=True, size=96)
    side = tmp_path / "sidecars"

    run(adapters_cli, ["score", "--images", images_dir, "--out", str(side / "scores.jsonl")])
    run(
        adapters_cli,
        [
            "segment",
            "--images", images_dir,
            "--masks-dir", str(side / "masks"),
            "--out", str(side / "segment.jsonl"),
        ],
    )
    run(
        adapters_cli,
        [
            "depth",
            "--images", images_dir,
            "--depth-dir", str(side / "depth"),
            "--out", str(side / "depth.jsonl"),
        ],
    )
    run(adapters_cli, ["instruct", "--images", images_dir, "--out", str(side / "instructions.jsonl")])

    cfg = PipelineConfig(
        images_dir=images_dir,
        scores_path=str(side / "scores.jsonl"),
        masks_dir=str(side / "masks"),
        depth_dir=str(side / "depth"),
        instructions_path=str(side / "instructions.jsonl"),
        output_dir=str(tmp_path / "out"),
        target_resolution=64,
        msr=MsrConfig(scales=(1.5, 4.0, 10.0)),
        split_counts=(0, 0, 0),
        threshold=0.0,  # heuristic scores are backend-relative; keep all
        global_seed=7,
    )
    # assign every kept image to the test split for the metrics pass
    kept = len(ids)
    cfg = PipelineConfig(**{**cfg.to_dict(), "split_counts": (0, 0, kept), "msr": cfg.msr})

    summary = run_batch(cfg, workers=2)
    assert summary.failed == []
    assert summary.processed == kept
    records = read_manifest(os.path.join(cfg.output_dir, MANIFEST_NAME))
    assert len(records) == kept
    for record in records:
        assert os.path.isfile(os.path.join(cfg.output_dir, record.input_path))
        assert record.instruction.endswith(".")

    # deep-metrics over predictions (= ground truth copies)
    preds = tmp_path / "preds"
    preds.mkdir()
    for record in records:
        src = os.path.join(cfg.output_dir, record.output_path)
        dst = str(preds / (record.image_id + ".png"))
        open(dst, "wb").write(open(src, "rb").read())
    run(
        adapters_cli,
        [
            "deep-metrics",
            "--manifest", os.path.join(cfg.output_dir, MANIFEST_NAME),
            "--pred-dir", str(preds),
            "--out-dir", str(tmp_path / "metrics"),
        ],
    )
    from relight_adapters.common import read_rows

    id_rows = read_rows(str(tmp_path / "metrics" / "identity.jsonl"))
    assert len(id_rows) == kept
    assert all(abs(r["value"] - 1.0) < 1e-9 for r in id_rows)
