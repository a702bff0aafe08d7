"""relight_engine: deterministic relighting-triplet data engine.

Turns well-lit source images plus per-image sidecar files (lighting
scores, subject masks, relative depth, instructions) into supervised
relighting triplets: a synthetically degraded input, a one-sentence
lighting instruction, and the well-lit ground truth.
"""

from .config import PipelineConfig, load_config
from .engine import process_image, run_batch, validate_instruction
from .imagecore import DepthMap, ImageRGB, Mask, gaussian_blur, load_image, resize, save_image
from .intrinsic import MsrConfig, extract_albedo
from .manifest import SCHEMA_VERSION, TripletRecord
from .metrics import aggregate, collect_external, ssim
from .rng import PortableRng, derive_seed

__all__ = [
    "DepthMap",
    "ImageRGB",
    "Mask",
    "MsrConfig",
    "PipelineConfig",
    "PortableRng",
    "SCHEMA_VERSION",
    "TripletRecord",
    "aggregate",
    "collect_external",
    "derive_seed",
    "extract_albedo",
    "gaussian_blur",
    "load_config",
    "load_image",
    "process_image",
    "resize",
    "run_batch",
    "save_image",
    "ssim",
    "validate_instruction",
]

__version__ = "0.1.0"
