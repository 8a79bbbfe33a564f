"""Persistent contrastive divergence training for the GRBM.

The positive statistics are exact (the hidden conditional is closed
form); the negative statistics come from persistent fantasy chains that
advance by a single Gibbs sweep per update.  The shared visible variance
stays fixed at 1 throughout: the corpus is normalized to unit variance.
"""

from dataclasses import dataclass

import numpy as np

from ..errors import DataError, ShapeError
from ..models.grbm import GrbmParams, grbm_denoise_patch, sigmoid
from .config import (
    CHAIN_STREAM,
    INIT_STREAM,
    TrainConfig,
    emit_progress,
    epoch_batches,
    stream_rng,
)

GRBM_LR0 = 0.001
WEIGHT_INIT_STD = 0.01
ANNEAL_FRACTION = 0.9


@dataclass
class PcdState:
    """Persistent fantasy particles plus the chain's private rng."""

    fantasy_v: np.ndarray
    fantasy_h: list
    rng: np.random.Generator
    update_counter: int = 0

    @property
    def n_chains(self):
        return self.fantasy_v.shape[0]


def init_pcd_state(params: GrbmParams, n_chains, rng):
    """Fresh chains: visibles from the standard normal, hiddens sampled."""
    fv = rng.standard_normal((n_chains, params.n_visible))
    ph = sigmoid(fv @ params.W / params.sigma2 + params.c)
    fh = (rng.random(ph.shape) < ph).astype(np.float64)
    return PcdState(fantasy_v=fv, fantasy_h=[fh], rng=rng)


def grbm_pcd_step(batch, params: GrbmParams, state: PcdState, lr):
    """One PCD update; mutates and returns (params, state).

    Negative statistics pair each chain's current visibles with hidden
    samples drawn from them, so a chain sitting exactly on the data gives
    a zero update in expectation.  The chain then advances by resampling
    the visibles from the Gaussian conditional.  sigma2 is not updated.
    """
    batch = np.asarray(batch, dtype=np.float64)
    if batch.ndim != 2 or batch.shape[1] != params.n_visible:
        raise ShapeError(
            f"batch shape {batch.shape} does not match {params.n_visible} visibles")
    s2 = params.sigma2
    n = batch.shape[0]
    m = state.n_chains

    ph = sigmoid(batch @ params.W / s2 + params.c)
    pos_w = batch.T @ ph / (s2 * n)
    pos_b = (batch - params.b).mean(axis=0) / s2
    pos_c = ph.mean(axis=0)

    fv = state.fantasy_v
    fh_p = sigmoid(fv @ params.W / s2 + params.c)
    fh = (state.rng.random(fh_p.shape) < fh_p).astype(np.float64)
    neg_w = fv.T @ fh / (s2 * m)
    neg_b = (fv - params.b).mean(axis=0) / s2
    neg_c = fh.mean(axis=0)

    state.fantasy_v = fh @ params.W.T + params.b + \
        state.rng.standard_normal(fv.shape) * np.sqrt(s2)
    state.fantasy_h = [fh]
    state.update_counter += 1

    params.W += lr * (pos_w - neg_w)
    params.b += lr * (pos_b - neg_b)
    params.c += lr * (pos_c - neg_c)
    return params, state


def _annealed_lr(lr0, epoch, epochs, t_after):
    """Fixed rate for the first 90% of epochs, then 1/t decay."""
    if epochs == 0 or epoch < int(np.floor(ANNEAL_FRACTION * epochs)):
        return lr0, t_after
    t_after += 1
    return lr0 / t_after, t_after


def train_grbm(patches, cfg: TrainConfig, n_hidden=None, log=None):
    """PCD training on a normalized patch corpus.

    Weights start at N(0, 0.01^2), biases at zero, sigma2 at 1 and held
    there.  The learning rate is cfg.lr0 (default 0.001) until 90% of the
    epochs have run, then decays as lr0/t over the remaining updates.
    """
    patches = np.asarray(patches, dtype=np.float64)
    if patches.ndim != 2 or patches.shape[0] == 0:
        raise DataError("patch corpus must be a nonempty (n, p*p) matrix")
    n_vis = patches.shape[1]
    if n_hidden is None:
        n_hidden = 5 * n_vis
    lr0 = cfg.lr0 if cfg.lr0 is not None else GRBM_LR0

    rng_init = stream_rng(cfg.seed, INIT_STREAM)
    params = GrbmParams(
        W=rng_init.normal(0.0, WEIGHT_INIT_STD, size=(n_vis, n_hidden)),
        b=np.zeros(n_vis), c=np.zeros(n_hidden), sigma2=1.0)
    state = init_pcd_state(params, cfg.minibatch,
                           stream_rng(cfg.seed, CHAIN_STREAM))

    probe = patches[:min(1024, patches.shape[0])]
    t_after = 0
    lr = lr0
    for epoch in range(cfg.epochs):
        for idx in epoch_batches(patches.shape[0], cfg, epoch):
            lr, t_after = _annealed_lr(lr0, epoch, cfg.epochs, t_after)
            grbm_pcd_step(patches[idx], params, state, lr)
        if not np.all(np.isfinite(state.fantasy_v)):
            raise DataError("fantasy particles diverged to non-finite values")
        recon = grbm_denoise_patch(probe, params)
        err = float(np.mean(np.sum((recon - probe) ** 2, axis=1)))
        emit_progress(log, epoch, cfg.epochs, "recon_err", err, lr)
    return params
