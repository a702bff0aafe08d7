"""Per-image stage composition and deterministic parallel batch execution.

Each image's randomness comes from a SplitMix64 stream seeded by
SHA-256(global_seed, image_id), so outputs are a pure function of
(inputs, config, global seed): worker count, scheduling, and resume points
can never change a byte of the final manifest or the degraded PNGs.

Per-image draw order (fixed, part of the reproducibility contract):
  1. albedo blend ratio            4. pattern kind
  2. light direction (z, azimuth)  5. pattern seed
  3. ambient level                 6. opacity
                                   7. pattern blur sigma
"""

import os
from concurrent.futures import ProcessPoolExecutor, as_completed
from dataclasses import dataclass, field

from . import imagecore
from .config import PipelineConfig
from .errors import (
    EmptyInstructionError,
    EmptyMaskError,
    EngineError,
    InstructionError,
    MissingImageError,
    MultiSentenceInstructionError,
    OverlongInstructionError,
)
from .filtering import score_from_row, split_dataset, unassigned_ids
from .imagecore import DepthMap, ImageRGB, Mask, resize
from .intrinsic import extract_albedo
from .manifest import (
    DegradationParams,
    StageError,
    TripletRecord,
    dumps_canonical,
    read_instructions,
    read_ldjson,
    read_manifest,
    write_ldjson,
    write_manifest,
)
from .relight import depth_to_normals, lambertian_shade, sample_light
from .rng import PortableRng, derive_seed
from .shadowgen import (
    ShadowParams,
    composite_shadow,
    generate_pattern,
    place_on_gray,
    select_pattern,
)

MANIFEST_NAME = "manifest.jsonl"
PARTIAL_NAME = "manifest.partial.jsonl"
SPLITS_NAME = "splits.jsonl"
ERRORS_NAME = "errors.jsonl"
DEGRADED_DIR = "degraded"
GROUND_TRUTH_DIR = "gt"

MAX_INSTRUCTION_LENGTH = 300
_TERMINATORS = ".!?"


def validate_instruction(text: str) -> str:
    """Normalize and validate a lighting instruction.

    Trims whitespace, appends a terminal period when missing, and accepts
    only non-empty single sentences (exactly one terminator, no newline)
    of at most 300 characters.
    """
    normalized = text.strip()
    if not normalized:
        raise EmptyInstructionError("instruction is empty")
    if "\n" in normalized or "\r" in normalized:
        raise MultiSentenceInstructionError("instruction spans multiple lines")
    if normalized[-1] not in _TERMINATORS:
        normalized += "."
    if sum(normalized.count(t) for t in _TERMINATORS) != 1:
        raise MultiSentenceInstructionError(
            "instruction must be a single sentence with one terminator"
        )
    if len(normalized) > MAX_INSTRUCTION_LENGTH:
        raise OverlongInstructionError(
            f"instruction has {len(normalized)} characters, max {MAX_INSTRUCTION_LENGTH}"
        )
    return normalized


def process_image(
    image_id: str,
    ground_truth: ImageRGB,
    mask: Mask,
    depth: DepthMap,
    instruction: str,
    score: float,
    cfg: PipelineConfig,
    split: str = "train",
):
    """Run the full degradation pipeline on one image.

    Resizes all planes to the target resolution, extracts the blended
    albedo, applies Lambertian shading under a sampled hemisphere light,
    composites a blurred procedural shadow, and places the subject on the
    neutral gray background. Returns the degraded image plus the manifest
    record with every sampled parameter logged.
    """
    res = cfg.target_resolution
    gt = resize(ground_truth, res, res)
    mask_r = resize(mask, res, res)
    depth_r = resize(depth, res, res)

    rng = PortableRng(derive_seed(cfg.global_seed, image_id))

    albedo, alpha = extract_albedo(gt, mask_r, cfg.msr, rng)

    normals = depth_to_normals(depth_r, cfg.gradient_scale)
    light = sample_light(rng, cfg.ambient_range)
    shaded = lambertian_shade(albedo, normals, light, mask_r)

    kind = select_pattern(cfg.pattern_weights_by_kind(), rng)
    pattern_seed = rng.next_u64()
    opacity = rng.uniform(*cfg.opacity_range)
    blur_sigma = rng.uniform(*cfg.scaled_blur_sigma_range())
    pattern = generate_pattern(kind, res, res, pattern_seed)
    params = ShadowParams(kind=kind, opacity=opacity, blur_sigma=blur_sigma, pattern_seed=pattern_seed)
    shadowed = composite_shadow(shaded, pattern, mask_r, params)
    degraded = place_on_gray(shadowed, mask_r, cfg.gray_level)

    record = TripletRecord(
        image_id=image_id,
        input_path=f"{DEGRADED_DIR}/{image_id}.png",
        output_path=f"{GROUND_TRUTH_DIR}/{image_id}.png",
        instruction=validate_instruction(instruction),
        split=split,
        clip_score=float(score),
        seed=derive_seed(cfg.global_seed, image_id),
        params=DegradationParams(
            alpha=alpha,
            light_direction=light.direction,
            ambient=light.ambient,
            pattern_kind=kind.value,
            opacity=opacity,
            blur_sigma=blur_sigma,
        ),
    )
    return degraded, record


@dataclass
class RunSummary:
    processed: int = 0
    skipped_by_filter: int = 0
    skipped_unassigned: int = 0
    resumed: int = 0
    failed: list = field(default_factory=list)

    def to_json_obj(self) -> dict:
        return {
            "processed": self.processed,
            "skipped_by_filter": self.skipped_by_filter,
            "skipped_unassigned": self.skipped_unassigned,
            "resumed": self.resumed,
            "failed": [e.to_json_obj() for e in self.failed],
        }


def _find_source_image(images_dir: str, image_id: str) -> str:
    for ext in (".png", ".jpg", ".jpeg"):
        candidate = os.path.join(images_dir, image_id + ext)
        if os.path.isfile(candidate):
            return candidate
    raise MissingImageError(f"no image for id {image_id!r} in {images_dir}")


class _StageFailure(Exception):
    def __init__(self, stage: str, cause: Exception):
        super().__init__(str(cause))
        self.stage = stage


def _run_stage(stage: str, fn, *args, **kwargs):
    try:
        return fn(*args, **kwargs)
    except _StageFailure:
        raise
    except Exception as exc:
        raise _StageFailure(stage, exc) from exc


def _process_one(cfg: PipelineConfig, image_id: str, split: str, score: float, instruction):
    """Worker entry: load sidecars, degrade, write PNGs, return a row dict.

    Returns ("ok", record_json) or ("err", stage_error_json); never raises,
    so one bad image cannot take down the batch.
    """
    try:
        if instruction is None:
            raise _StageFailure(
                "instruction", EngineError(f"no instruction row for id {image_id!r}")
            )
        gt = _run_stage(
            "load", lambda: imagecore.load_image(_find_source_image(cfg.images_dir, image_id))
        )
        mask = _run_stage("mask", imagecore.load_mask, os.path.join(cfg.masks_dir, image_id + ".png"))
        depth = _run_stage("degrade", imagecore.load_depth, os.path.join(cfg.depth_dir, image_id + ".png"))

        try:
            degraded, record = process_image(
                image_id, gt, mask, depth, instruction, score, cfg, split=split
            )
        except InstructionError as exc:
            raise _StageFailure("instruction", exc) from exc
        except EmptyMaskError as exc:
            raise _StageFailure("albedo", exc) from exc
        except Exception as exc:
            raise _StageFailure("degrade", exc) from exc

        def _write():
            res = cfg.target_resolution
            degraded_path = os.path.join(cfg.output_dir, DEGRADED_DIR, image_id + ".png")
            gt_path = os.path.join(cfg.output_dir, GROUND_TRUTH_DIR, image_id + ".png")
            imagecore.save_image(degraded, degraded_path)
            imagecore.save_image(resize(gt, res, res), gt_path)

        _run_stage("write", _write)
        return ("ok", record.to_json_obj())
    except _StageFailure as failure:
        err = StageError(image_id=image_id, stage=failure.stage, message=str(failure))
        return ("err", err.to_json_obj())


def _existing_record_ids(cfg: PipelineConfig) -> dict:
    """Records from a previous (possibly interrupted) run whose files exist."""
    done = {}
    for name, tolerant in ((MANIFEST_NAME, False), (PARTIAL_NAME, True)):
        path = os.path.join(cfg.output_dir, name)
        if not os.path.isfile(path):
            continue
        for record in read_manifest(path, skip_partial_tail=tolerant):
            in_ok = os.path.isfile(os.path.join(cfg.output_dir, record.input_path))
            out_ok = os.path.isfile(os.path.join(cfg.output_dir, record.output_path))
            if in_ok and out_ok:
                done[record.image_id] = record
    return done


def run_batch(cfg: PipelineConfig, workers: int = 1, resume: bool = False) -> RunSummary:
    """Filter, split, and degrade every scored image; write the manifest.

    Partial failures are collected per image and never abort the batch.
    With ``resume=True``, images whose record and output files already
    exist are skipped; the finalized manifest is identical either way.
    """
    if not os.path.isdir(cfg.images_dir):
        raise EngineError(f"images_dir is not a directory: {cfg.images_dir}")
    os.makedirs(os.path.join(cfg.output_dir, DEGRADED_DIR), exist_ok=True)
    os.makedirs(os.path.join(cfg.output_dir, GROUND_TRUTH_DIR), exist_ok=True)

    score_rows = read_ldjson(cfg.scores_path)
    scores = [score_from_row(obj, expected_count=len(cfg.prompts)) for obj in score_rows]
    ids_seen = set()
    for s in scores:
        if s.image_id in ids_seen:
            raise EngineError(f"duplicate image id in scores: {s.image_id!r}")
        ids_seen.add(s.image_id)

    kept = [s for s in scores if s.keep(cfg.threshold)]
    summary = RunSummary(skipped_by_filter=len(scores) - len(kept))

    kept_ids = [s.image_id for s in kept]
    assignments = split_dataset(kept_ids, cfg.split_counts, cfg.global_seed)
    unassigned = unassigned_ids(kept_ids, assignments)
    summary.skipped_unassigned = len(unassigned)
    _write_splits(cfg, assignments, unassigned)

    instructions = read_instructions(cfg.instructions_path) if os.path.isfile(cfg.instructions_path) else {}
    score_by_id = {s.image_id: s.mean_score for s in kept}

    split_by_id = {a.image_id: a.split for a in assignments}
    done = {}
    if resume:
        done = {
            image_id: record
            for image_id, record in _existing_record_ids(cfg).items()
            if split_by_id.get(image_id) == record.split
        }
    partial_path = os.path.join(cfg.output_dir, PARTIAL_NAME)
    if not resume and os.path.isfile(partial_path):
        os.remove(partial_path)

    tasks = []
    for a in sorted(assignments, key=lambda a: a.image_id):
        if a.image_id in done:
            summary.resumed += 1
            continue
        tasks.append(
            (a.image_id, a.split, score_by_id[a.image_id], instructions.get(a.image_id))
        )

    results = []
    with open(partial_path, "a", encoding="utf-8") as partial:
        if workers <= 1:
            for task in tasks:
                results.append(_collect(_process_one(cfg, *task), partial, summary))
        else:
            with ProcessPoolExecutor(max_workers=workers) as pool:
                futures = [pool.submit(_process_one, cfg, *task) for task in tasks]
                for future in as_completed(futures):
                    results.append(_collect(future.result(), partial, summary))

    records = list(done.values())
    records.extend(r for r in results if isinstance(r, TripletRecord))
    write_manifest(records, os.path.join(cfg.output_dir, MANIFEST_NAME))
    errors = sorted(summary.failed, key=lambda e: e.image_id)
    write_ldjson(os.path.join(cfg.output_dir, ERRORS_NAME), (e.to_json_obj() for e in errors))
    if os.path.isfile(partial_path):
        os.remove(partial_path)
    return summary


def _collect(result, partial, summary: RunSummary):
    status, payload = result
    if status == "ok":
        record = TripletRecord.from_json_obj(payload)
        partial.write(dumps_canonical(payload) + "\n")
        partial.flush()
        summary.processed += 1
        return record
    error = StageError(**payload)
    summary.failed.append(error)
    return error


def _write_splits(cfg: PipelineConfig, assignments, unassigned) -> None:
    rows = [{"image_id": a.image_id, "split": a.split} for a in assignments]
    rows.extend({"image_id": i, "split": "unassigned"} for i in unassigned)
    rows.sort(key=lambda r: r["image_id"])
    write_ldjson(os.path.join(cfg.output_dir, SPLITS_NAME), rows)
