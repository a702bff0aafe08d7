"""relight_adapters: sidecar producers for the relight data engine.

Each adapter wraps a pretrained model (or a documented classical stand-in)
and emits the per-image files the engine consumes: lighting scores,
subject masks, relative depth, lighting instructions, and evaluation
metric values. Adapters communicate with the engine exclusively through
these files.
"""

from .deep_metrics import clip_score_proxy, deep_metrics, identity_proxy, lpips_proxy
from .depth import estimate_depth, heuristic_depth
from .instruct import describe_lighting, generate_instructions
from .score import DEFAULT_PROMPTS, heuristic_prompt_scores, score_lighting
from .segment import heuristic_mask, segment_subject

__all__ = [
    "DEFAULT_PROMPTS",
    "clip_score_proxy",
    "deep_metrics",
    "describe_lighting",
    "estimate_depth",
    "generate_instructions",
    "heuristic_depth",
    "heuristic_mask",
    "heuristic_prompt_scores",
    "identity_proxy",
    "lpips_proxy",
    "score_lighting",
    "segment_subject",
]

__version__ = "0.1.0"
