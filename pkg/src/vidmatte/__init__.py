"""Video alpha matting: sparse reconstruction mattes with temporal smoothing."""

from .aknn import AKNNField, csh_match, extend_aknn, walsh_kernels, wh_project
from .config import PipelineConfig, parse_config
from .dictionary import Dictionary, Superpixel, build_dictionaries, slic_segment
from .evaluate import (
    FlickerReport,
    flicker_report,
    sad_error,
    synth_sequence,
    temporal_flicker,
)
from .features import compute_feature_map
from .imaging import (
    AlphaMatte,
    Frame,
    Stage,
    Trimap,
    load_sequence,
    save_matte,
    trimap_from_gray,
)
from .pipeline import PipelineError, run_pipeline
from .sparse import estimate_alpha, estimate_frame_matte, lasso_solve, residuals
from .temporal import NlmConfig, aggregate_overlaps, patch_distance, smooth_sequence

__version__ = "0.1.0"

__all__ = [
    "AKNNField",
    "AlphaMatte",
    "Dictionary",
    "FlickerReport",
    "Frame",
    "NlmConfig",
    "PipelineConfig",
    "PipelineError",
    "Stage",
    "Superpixel",
    "Trimap",
    "aggregate_overlaps",
    "build_dictionaries",
    "compute_feature_map",
    "csh_match",
    "estimate_alpha",
    "estimate_frame_matte",
    "extend_aknn",
    "flicker_report",
    "lasso_solve",
    "load_sequence",
    "parse_config",
    "patch_distance",
    "residuals",
    "run_pipeline",
    "sad_error",
    "save_matte",
    "slic_segment",
    "smooth_sequence",
    "synth_sequence",
    "temporal_flicker",
    "trimap_from_gray",
    "walsh_kernels",
    "wh_project",
]
