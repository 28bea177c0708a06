"""depthtone: entropy-maximizing tone mapping for HDR facial depth scans.

The pipeline has three stages: select the discriminative depth block anchored
at the nose, solve for the globally optimal K-level mapping whose per-level
input span is bounded by tau, and render/collect the resulting LDR maps. A
separate attention module provides the map operators and the
diversity-plus-concentration loss with verified analytic gradients.
"""

from .attention import (
    AttentionStack,
    FaLossParams,
    FeatureVolume,
    QProjection,
    bilinear_resize,
    channel_reweight_pool,
    fa_loss,
    fa_loss_fd_grad,
    fa_loss_grad,
    fd_relative_error,
    peak_crop_box,
    spatial_average_pool,
)
from .core import (
    DepthGrid,
    EnhanceConfig,
    Histogram,
    LdrImage,
    MappingFunction,
    build_histogram,
    image_entropy,
    shannon_entropy,
)
from .errors import (
    BadSizes,
    DepthToneError,
    EmptyGrid,
    EmptyImage,
    IndexOutOfRange,
    Infeasible,
    InvalidTau,
    LengthMismatch,
    MalformedFile,
    MismatchedN,
    TooFewMaps,
    TooLarge,
)
from .mapping import MapCollection, MapEntry, apply_mapping, batch_generate
from .ranges import BlockSweepConfig, extract_depth_block, generate_blocks, locate_anchor
from .solver import (
    SolverResult,
    brute_force_oracle,
    edge_weight,
    he_mapping,
    mapping_entropy,
    solve_gemax,
    uniform_mapping,
)
from .synthetic import make_face_grid, make_hemisphere_grid

__version__ = "0.1.0"

__all__ = [
    "AttentionStack",
    "BadSizes",
    "BlockSweepConfig",
    "DepthGrid",
    "DepthToneError",
    "EmptyGrid",
    "EmptyImage",
    "EnhanceConfig",
    "FaLossParams",
    "FeatureVolume",
    "Histogram",
    "IndexOutOfRange",
    "Infeasible",
    "InvalidTau",
    "LdrImage",
    "LengthMismatch",
    "MalformedFile",
    "MapCollection",
    "MapEntry",
    "MappingFunction",
    "MismatchedN",
    "QProjection",
    "SolverResult",
    "TooFewMaps",
    "TooLarge",
    "apply_mapping",
    "batch_generate",
    "bilinear_resize",
    "brute_force_oracle",
    "build_histogram",
    "channel_reweight_pool",
    "edge_weight",
    "extract_depth_block",
    "fa_loss",
    "fa_loss_fd_grad",
    "fa_loss_grad",
    "fd_relative_error",
    "generate_blocks",
    "he_mapping",
    "image_entropy",
    "locate_anchor",
    "make_face_grid",
    "make_hemisphere_grid",
    "mapping_entropy",
    "peak_crop_box",
    "shannon_entropy",
    "solve_gemax",
    "spatial_average_pool",
    "uniform_mapping",
]
