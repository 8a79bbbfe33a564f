"""Blind patch-based image denoising with Gaussian-Bernoulli Boltzmann
machines and stacked denoising autoencoders.

The toolkit covers the whole protocol: patch-corpus sampling, model
training (PCD for Boltzmann machines, SGD with layer-wise pretraining for
autoencoders), whole-image denoising by overlapping-patch averaging, and
a PSNR benchmark harness.  Denoising is blind: trained models never see
the noise kind or level.
"""

from .errors import (
    CapacityError,
    CodecError,
    ContractError,
    DataError,
    PatchDenoiseError,
    PersistenceError,
    ShapeError,
)
from .models import (
    DaeParams,
    GdbmParams,
    GrbmParams,
    MeanFieldState,
    dae_decode,
    dae_denoise_patch,
    dae_encode,
    gdbm_denoise_patch,
    gdbm_energy,
    gdbm_mean_field,
    grbm_denoise_patch,
    grbm_visible_mean,
    rbm_hidden_conditional,
)
from .pipeline import (
    NoiseSpec,
    NormStats,
    PatchSet,
    denoise_image,
    extract_patches,
    inject_noise,
    psnr,
    reconstruct_image,
    to_grayscale,
    wiener_prefilter,
)
from .training import (
    PcdState,
    TrainConfig,
    corrupt_input,
    dae_loss_and_grad,
    finetune_gdbm,
    grbm_pcd_step,
    lr_schedule,
    pretrain_gdbm,
    train_dae,
    train_grbm,
)

__version__ = "0.1.0"
