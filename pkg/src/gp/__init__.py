"""Núcleo GP: kernels, capas SVGP y celdas recurrentes"""
from .kernels import (
    DTYPE,
    DEFAULT_JITTER_SCHEDULE,
    KERNEL_KINDS,
    Kernel,
    CholFactor,
    RandomFeatureMap,
    as_tensor,
    softplus,
    inverse_softplus,
    kernel_eval,
    gram,
    gram_diag,
    cholesky_jittered,
    random_features,
    kernel_features,
)
from .noise import NoiseSource, ReplayNoise, ZeroNoise, iteration_noise
from .svgp import (
    VARIANCE_FLOOR,
    SvgpLayer,
    PosteriorSequence,
    PosteriorNoise,
    predict,
    kl_penalty,
    sample_posterior,
    draw_noise,
    propagate_gp,
    sampling_cov_mode,
)
from .recurrent import (
    LAYER_KINDS,
    SruCell,
    SruDgpCell,
    FeedForwardNN,
    StackOutput,
    layer_kind,
    light_recurrence,
    sru_forward,
    sru_dgp_forward,
    stack_forward,
    validate_stack,
)

__all__ = [
    'DTYPE', 'DEFAULT_JITTER_SCHEDULE', 'KERNEL_KINDS', 'Kernel', 'CholFactor', 'RandomFeatureMap',
    'as_tensor', 'softplus', 'inverse_softplus',
    'kernel_eval', 'gram', 'gram_diag', 'cholesky_jittered', 'random_features', 'kernel_features',
    'NoiseSource', 'ReplayNoise', 'ZeroNoise', 'iteration_noise',
    'VARIANCE_FLOOR', 'SvgpLayer', 'PosteriorSequence', 'PosteriorNoise', 'predict', 'kl_penalty',
    'sample_posterior', 'draw_noise', 'propagate_gp', 'sampling_cov_mode',
    'LAYER_KINDS', 'SruCell', 'SruDgpCell', 'FeedForwardNN', 'StackOutput', 'layer_kind',
    'light_recurrence', 'sru_forward', 'sru_dgp_forward', 'stack_forward', 'validate_stack',
]
