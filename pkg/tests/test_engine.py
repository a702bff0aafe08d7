import json
import os
import shutil

import numpy as np
import pytest

from relight_engine.config import PipelineConfig, config_from_dict, load_config
from relight_engine.engine import (
    DEGRADED_DIR,
    MANIFEST_NAME,
    PARTIAL_NAME,
    SPLITS_NAME,
    process_image,
    run_batch,
    validate_instruction,
)
from relight_engine.errors import (
    ConfigError,
    EmptyInstructionError,
    MultiSentenceInstructionError,
    OverlongInstructionError,
)
from relight_engine.manifest import TripletRecord, read_ldjson, read_manifest
from relight_engine.metrics import luma

from conftest import FAST_MSR, fixture_config, synth_portrait, write_fixture_dataset


# ---------------------------------------------------------------------------
# validate_instruction
# ---------------------------------------------------------------------------


def test_instruction_period_added():
    text = "soft natural daylight illuminating the face from the front-left"
    assert validate_instruction(text) == text + "."


def test_instruction_empty_rejected():
    with pytest.raises(EmptyInstructionError):
        validate_instruction("   ")


def test_instruction_multi_sentence_rejected():
    with pytest.raises(MultiSentenceInstructionError):
        validate_instruction("Two sentences. Here.")
    with pytest.raises(MultiSentenceInstructionError):
        validate_instruction("line one\nline two")


def test_instruction_overlong_rejected():
    with pytest.raises(OverlongInstructionError):
        validate_instruction("x" * 301)


def test_instruction_trims_whitespace():
    assert validate_instruction("  warm light.  ") == "warm light."


# ---------------------------------------------------------------------------
# process_image
# ---------------------------------------------------------------------------


def small_cfg(**over):
    defaults = dict(target_resolution=64, msr=FAST_MSR, split_counts=(1, 0, 0))
    defaults.update(over)
    return PipelineConfig(**defaults)


def test_process_image_deterministic():
    gt, mask, depth = synth_portrait(3, size=96)
    cfg = small_cfg()
    a_img, a_rec = process_image("img_x", gt, mask, depth, "soft light", 0.25, cfg)
    b_img, b_rec = process_image("img_x", gt, mask, depth, "soft light", 0.25, cfg)
    assert np.array_equal(a_img.data, b_img.data)
    assert a_rec == b_rec


def test_process_image_params_within_ranges():
    gt, mask, depth = synth_portrait(4, size=96)
    cfg = small_cfg()
    for i in range(20):
        _, rec = process_image(f"img_{i}", gt, mask, depth, "soft light", 0.25, cfg)
        p = rec.params
        assert 0.15 <= p.alpha <= 0.25
        assert 0.35 <= p.opacity <= 0.6
        assert 0.25 <= p.ambient <= 0.45
        assert p.light_direction[2] >= 0.0
        lo, hi = cfg.scaled_blur_sigma_range()
        assert lo <= p.blur_sigma <= hi


def test_process_image_output_darker_on_mask():
    from relight_engine.imagecore import resize

    cfg = small_cfg()
    res = cfg.target_resolution
    for seed in range(10):
        gt, mask, depth = synth_portrait(seed, size=96)
        deg, _ = process_image(f"im{seed}", gt, mask, depth, "light", 0.25, cfg)
        assert deg.data.min() >= 0.0 and deg.data.max() <= 1.0
        sel = resize(mask, res, res).data > 0.5
        gt_r = resize(gt, res, res)
        assert luma(deg)[sel].mean() < luma(gt_r)[sel].mean()


def test_process_image_different_ids_differ():
    gt, mask, depth = synth_portrait(5, size=96)
    cfg = small_cfg()
    a, _ = process_image("id_a", gt, mask, depth, "light", 0.25, cfg)
    b, _ = process_image("id_b", gt, mask, depth, "light", 0.25, cfg)
    assert not np.array_equal(a.data, b.data)


def test_process_image_seed_matches_derive():
    from relight_engine.rng import derive_seed

    gt, mask, depth = synth_portrait(6, size=96)
    cfg = small_cfg(global_seed=42)
    _, rec = process_image("img_z", gt, mask, depth, "light", 0.3, cfg)
    assert rec.seed == derive_seed(42, "img_z")


# ---------------------------------------------------------------------------
# run_batch
# ---------------------------------------------------------------------------


def test_run_batch_empty_inputs(tmp_path):
    root = str(tmp_path)
    os.makedirs(os.path.join(root, "images"))
    os.makedirs(os.path.join(root, "sidecars"))
    open(os.path.join(root, "sidecars", "scores.jsonl"), "w").close()
    open(os.path.join(root, "sidecars", "instructions.jsonl"), "w").close()
    cfg = fixture_config(root, split_counts=(0, 0, 0))
    summary = run_batch(cfg)
    assert summary.processed == 0
    assert summary.skipped_by_filter == 0
    assert summary.failed == []
    assert read_manifest(os.path.join(cfg.output_dir, MANIFEST_NAME)) == []


def build_small_dataset(tmp_path, n=6, rejects=2):
    root = str(tmp_path)
    kept = [f"img_{i:03d}" for i in range(n)]
    rejected = [f"rej_{i:03d}" for i in range(rejects)]
    write_fixture_dataset(root, kept, rejected, size=96)
    return root, kept, rejected


def test_run_batch_small_end_to_end(tmp_path):
    root, kept, rejected = build_small_dataset(tmp_path)
    cfg = fixture_config(root, split_counts=(4, 1, 1), msr=FAST_MSR, target_resolution=64)
    summary = run_batch(cfg)
    assert summary.processed == 6
    assert summary.skipped_by_filter == len(rejected)
    assert summary.failed == []
    records = read_manifest(os.path.join(cfg.output_dir, MANIFEST_NAME))
    assert [r.image_id for r in records] == sorted(kept)
    for r in records:
        assert os.path.isfile(os.path.join(cfg.output_dir, r.input_path))
        assert os.path.isfile(os.path.join(cfg.output_dir, r.output_path))
        assert r.instruction.endswith(".")
    splits = read_ldjson(os.path.join(cfg.output_dir, SPLITS_NAME))
    assert {s["split"] for s in splits} == {"train", "val", "test"}
    # accounting identity: skipped + processed + failed = total scored
    assert summary.skipped_by_filter + summary.processed + len(summary.failed) == 8


def test_run_batch_manifest_rows_round_trip(tmp_path):
    root, kept, _ = build_small_dataset(tmp_path, n=3, rejects=0)
    cfg = fixture_config(root, split_counts=(3, 0, 0), msr=FAST_MSR, target_resolution=64)
    run_batch(cfg)
    path = os.path.join(cfg.output_dir, MANIFEST_NAME)
    for obj in read_ldjson(path):
        rec = TripletRecord.from_json_obj(obj)
        assert rec.to_json_obj() == obj


def test_run_batch_collects_stage_errors(tmp_path):
    root, kept, _ = build_small_dataset(tmp_path, n=4, rejects=0)
    # break one mask, delete one depth, drop one instruction
    os.remove(os.path.join(root, "sidecars", "masks", "img_001.png"))
    os.remove(os.path.join(root, "sidecars", "depth", "img_002.png"))
    instr_path = os.path.join(root, "sidecars", "instructions.jsonl")
    rows = [r for r in read_ldjson(instr_path) if r["image_id"] != "img_003"]
    with open(instr_path, "w") as fh:
        for r in rows:
            fh.write(json.dumps(r) + "\n")
    cfg = fixture_config(root, split_counts=(4, 0, 0), msr=FAST_MSR, target_resolution=64)
    summary = run_batch(cfg)
    assert summary.processed == 1
    stages = {e.image_id: e.stage for e in summary.failed}
    assert stages == {"img_001": "mask", "img_002": "degrade", "img_003": "instruction"}
    errors = read_ldjson(os.path.join(cfg.output_dir, "errors.jsonl"))
    assert [e["image_id"] for e in errors] == ["img_001", "img_002", "img_003"]
    # failures never abort the batch and the identity still holds
    assert summary.processed + summary.skipped_by_filter + len(summary.failed) == 4


def test_run_batch_worker_count_invariance(tmp_path):
    root, kept, _ = build_small_dataset(tmp_path, n=6, rejects=1)
    cfg1 = fixture_config(root, "out1", split_counts=(6, 0, 0), msr=FAST_MSR, target_resolution=64)
    cfg2 = fixture_config(root, "out2", split_counts=(6, 0, 0), msr=FAST_MSR, target_resolution=64)
    run_batch(cfg1, workers=1)
    run_batch(cfg2, workers=3)
    m1 = open(os.path.join(cfg1.output_dir, MANIFEST_NAME), "rb").read()
    m2 = open(os.path.join(cfg2.output_dir, MANIFEST_NAME), "rb").read()
    assert m1 == m2
    for image_id in kept:
        p1 = open(os.path.join(cfg1.output_dir, DEGRADED_DIR, image_id + ".png"), "rb").read()
        p2 = open(os.path.join(cfg2.output_dir, DEGRADED_DIR, image_id + ".png"), "rb").read()
        assert p1 == p2, image_id


def test_run_batch_resume_equals_uninterrupted(tmp_path):
    root, kept, _ = build_small_dataset(tmp_path, n=6, rejects=0)
    full_cfg = fixture_config(root, "full", split_counts=(6, 0, 0), msr=FAST_MSR, target_resolution=64)
    run_batch(full_cfg)
    full_manifest = open(os.path.join(full_cfg.output_dir, MANIFEST_NAME), "rb").read()

    # simulate an interrupted run: copy only a prefix of the work
    part_cfg = fixture_config(root, "part", split_counts=(6, 0, 0), msr=FAST_MSR, target_resolution=64)
    os.makedirs(os.path.join(part_cfg.output_dir, DEGRADED_DIR))
    os.makedirs(os.path.join(part_cfg.output_dir, "gt"))
    done_rows = read_ldjson(os.path.join(full_cfg.output_dir, MANIFEST_NAME))[:3]
    with open(os.path.join(part_cfg.output_dir, PARTIAL_NAME), "w") as fh:
        for row in done_rows:
            fh.write(json.dumps(row, sort_keys=True, separators=(",", ":")) + "\n")
        fh.write('{"image_id": "img_005", "truncated')  # torn final line
    for row in done_rows:
        for key in ("input_path", "output_path"):
            src = os.path.join(full_cfg.output_dir, row[key])
            dst = os.path.join(part_cfg.output_dir, row[key])
            shutil.copyfile(src, dst)

    summary = run_batch(part_cfg, resume=True)
    assert summary.resumed == 3
    assert summary.processed == 3
    resumed_manifest = open(os.path.join(part_cfg.output_dir, MANIFEST_NAME), "rb").read()
    assert resumed_manifest == full_manifest
    assert not os.path.exists(os.path.join(part_cfg.output_dir, PARTIAL_NAME))


def test_run_batch_resume_after_completion_is_idempotent(tmp_path):
    root, kept, _ = build_small_dataset(tmp_path, n=3, rejects=0)
    cfg = fixture_config(root, split_counts=(3, 0, 0), msr=FAST_MSR, target_resolution=64)
    run_batch(cfg)
    before = open(os.path.join(cfg.output_dir, MANIFEST_NAME), "rb").read()
    summary = run_batch(cfg, resume=True)
    assert summary.resumed == 3 and summary.processed == 0
    after = open(os.path.join(cfg.output_dir, MANIFEST_NAME), "rb").read()
    assert before == after


# ---------------------------------------------------------------------------
# config
# ---------------------------------------------------------------------------


def test_config_from_toml_and_json(tmp_path):
    toml_path = tmp_path / "cfg.toml"
    toml_path.write_text(
        'images_dir = "imgs"\nthreshold = 0.21\ntarget_resolution = 128\n'
        "split_counts = [5, 1, 1]\n[msr]\nscales = [1.5, 4.0]\n"
    )
    cfg = load_config(str(toml_path))
    assert cfg.images_dir == "imgs"
    assert cfg.msr.scales == (1.5, 4.0)
    json_path = tmp_path / "cfg.json"
    json_path.write_text(json.dumps({"threshold": 0.25, "global_seed": 7}))
    cfg2 = load_config(str(json_path))
    assert cfg2.threshold == 0.25 and cfg2.global_seed == 7


def test_config_rejects_unknown_keys():
    with pytest.raises(ConfigError):
        config_from_dict({"thresold": 0.2})
    with pytest.raises(ConfigError):
        config_from_dict({"msr": {"sclaes": [1.0]}})


def test_config_validates_ranges():
    with pytest.raises(ConfigError):
        PipelineConfig(target_resolution=32)
    with pytest.raises(ConfigError):
        PipelineConfig(opacity_range=(0.7, 0.6))
    with pytest.raises(ConfigError):
        PipelineConfig(pattern_weights={"not_a_kind": 1.0})
    with pytest.raises(ConfigError):
        PipelineConfig(pattern_weights={"fence": -1.0})


def test_config_blur_range_scales_with_resolution():
    cfg = PipelineConfig(target_resolution=256)
    lo, hi = cfg.scaled_blur_sigma_range()
    assert lo == pytest.approx(1.0)
    assert hi == pytest.approx(4.0)
