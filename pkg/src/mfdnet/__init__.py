"""Mobile-friendly denoising networks: inference engine, structural
reparameterization, and an analytic cost model."""

from .cost import CostConvention, CostReport, compare, estimate
from .graph import (
    GraphError,
    GraphSpec,
    LayerSpec,
    ModelConfig,
    build_baseline,
    build_graph,
    build_mfa,
    build_mfdnet,
    check_weights,
    config_for,
    forward,
    required_tensors,
    validate,
)
from .ops import (
    Activation,
    ConvParams,
    ShapeError,
    apply_activation,
    bilinear_upsample_x2,
    conv2d,
    elementwise_add,
    elementwise_mul,
    haar_forward,
    haar_inverse,
    pixel_shuffle,
    psnr,
)
from .reparam import (
    FoldedConv,
    FoldReport,
    RepConvBranch,
    add_identity,
    branch_forward,
    fold_1x1_then_3x3,
    fold_3x3_then_1x1,
    fold_graph,
    fold_repconv,
    verify_fold,
)
from .weights import InitSpec, MfdwError, init_random, load, save

__version__ = "0.1.0"
