"""Video inpainting localization: two-stream spatiotemporal encoding of RGB
and high-pass noise modalities with attentive fusion and decoding."""

from .attention import ChannelAttention, CrossModalityFusion, PositionAttention, TimeAttention
from .backbone import FeaturePyramid, StageSpec, TwoStreamEncoder, make_stage_specs
from .decoder import GatedNoiseDecoder, LocalizationMap, PyramidFusion, binarize
from .model import TruvilNet, predict_clip
from .objectives import EvalReport, LossConfig, f1_iou, focal_loss, hybrid_loss, iou_loss
from .srm import HighPassLayer, SrmKernelBank, srm_kernel_bank

__version__ = "0.1.0"

__all__ = [
    "ChannelAttention",
    "CrossModalityFusion",
    "EvalReport",
    "FeaturePyramid",
    "GatedNoiseDecoder",
    "HighPassLayer",
    "LocalizationMap",
    "LossConfig",
    "PositionAttention",
    "PyramidFusion",
    "SrmKernelBank",
    "StageSpec",
    "TimeAttention",
    "TruvilNet",
    "TwoStreamEncoder",
    "binarize",
    "f1_iou",
    "focal_loss",
    "hybrid_loss",
    "iou_loss",
    "make_stage_specs",
    "predict_clip",
    "srm_kernel_bank",
]
