"""Model parameter containers and inference for GRBM, GDBM, and DAE."""

from .grbm import (
    GrbmParams,
    grbm_denoise_patch,
    grbm_visible_mean,
    rbm_hidden_conditional,
    sigmoid,
)
from .gdbm import (
    GdbmParams,
    MeanFieldState,
    as_gdbm,
    gdbm_denoise_patch,
    gdbm_energy,
    gdbm_mean_field,
    gdbm_mean_field_free_energy,
    mean_field_init,
    mean_field_sweep,
)
from .dae import DaeParams, dae_decode, dae_denoise_patch, dae_encode
from .exact import (
    MAX_ENUM_HIDDEN,
    exact_log_likelihood,
    exact_log_partition,
    exact_posterior_small,
)

__all__ = [
    "GrbmParams",
    "GdbmParams",
    "DaeParams",
    "MeanFieldState",
    "MAX_ENUM_HIDDEN",
    "as_gdbm",
    "dae_decode",
    "dae_denoise_patch",
    "dae_encode",
    "exact_log_likelihood",
    "exact_log_partition",
    "exact_posterior_small",
    "gdbm_denoise_patch",
    "gdbm_energy",
    "gdbm_mean_field",
    "gdbm_mean_field_free_energy",
    "grbm_denoise_patch",
    "grbm_visible_mean",
    "mean_field_init",
    "mean_field_sweep",
    "rbm_hidden_conditional",
    "sigmoid",
]
