"""patchxfer: reference-based texture matching and 4x super-resolution.

Core surface: Tensor and the TNSR file format, PNG image I/O, bicubic
resampling, patch unfold/fold, the two-stage correlation search with
top-u re-search, the forward synthesis pipeline, gradient-density
features, losses, PSNR/SSIM metrics and a memory benchmark harness.
"""

__version__ = "0.1.0"

from .errors import (
    ConfigError,
    DecodeError,
    GeometryError,
    ManifestError,
    NonFiniteError,
    ParameterError,
    PatchxferError,
    ShapeError,
    StageError,
    TensorFormatError,
)
from .features import FeaturePyramid, extract_features
from .gradients import gradient_density
from .image import ImageU8, decode_png, encode_png, from_tensor, to_tensor
from .losses import (
    CriticOutputs,
    LossWeights,
    grad_loss,
    l1_rec,
    perceptual_loss,
    total_loss,
    wgan_gp_losses,
)
from .matching import (
    CorrelationMatrix,
    MatchResult,
    TextureStack,
    correlate,
    gather,
    hard_select,
    research_topk,
    two_stage_search,
)
from .metrics import psnr, ssim
from .patches import PatchGeometry, PatchSet, fold, patch_count, unfold
from .pipeline import PipelineConfig, PipelineResult, run_pipeline
from .resample import ScaleSpec, bicubic_resize, down_up
from .tensor import Tensor, load_tensor, save_tensor, to_luma_bt601

__all__ = [
    "ConfigError",
    "CorrelationMatrix",
    "CriticOutputs",
    "DecodeError",
    "FeaturePyramid",
    "GeometryError",
    "ImageU8",
    "LossWeights",
    "ManifestError",
    "MatchResult",
    "NonFiniteError",
    "ParameterError",
    "PatchGeometry",
    "PatchSet",
    "PatchxferError",
    "PipelineConfig",
    "PipelineResult",
    "ScaleSpec",
    "ShapeError",
    "StageError",
    "Tensor",
    "TensorFormatError",
    "TextureStack",
    "__version__",
    "bicubic_resize",
    "correlate",
    "decode_png",
    "down_up",
    "encode_png",
    "extract_features",
    "fold",
    "from_tensor",
    "gather",
    "grad_loss",
    "gradient_density",
    "hard_select",
    "l1_rec",
    "load_tensor",
    "patch_count",
    "perceptual_loss",
    "psnr",
    "research_topk",
    "run_pipeline",
    "save_tensor",
    "ssim",
    "to_luma_bt601",
    "to_tensor",
    "total_loss",
    "two_stage_search",
    "unfold",
    "wgan_gp_losses",
]
