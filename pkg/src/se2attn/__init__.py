"""Relative scaled dot-product attention with linear-memory factorized encodings."""

from .attention import (
    AttentionBatch,
    AttentionOutput,
    apply_global_transform,
    multi_head_attention,
    random_batch,
    relative_attention_linear,
    relative_attention_quadratic,
    sdpa,
)
from .encoding import BlockSpec, EncodingConfig, Exactness, Family, factorization_exactness, phi, phi_k, phi_q
from .fourier import EPS_BF16, EPS_FP16, Axis, ErrorStats, FourierCoeffs, approx_error, coefficients, error_sweep
from .geometry import IDENTITY, Pose2, compose, homogeneous, inverse, relative, rot2, wrap_angle

__version__ = "0.1.0"
