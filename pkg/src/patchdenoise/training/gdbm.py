"""Greedy layer-wise pretraining and variational finetuning for GDBMs.

Pretraining stacks RBMs bottom-up.  A layer that will receive input from
both sides in the assembled model is trained with its drive doubled, so
that after assembly each side supplies half of the drive it was trained
with: the bottom GRBM doubles the upward drive into layer 1, interior
Bernoulli RBMs double both directions, and the top RBM doubles only the
downward drive.  This mirrors the doubled-weight upward pass used to
initialize mean-field inference.

Finetuning follows stochastic maximum likelihood: mean-field posteriors
supply the positive statistics and persistent Gibbs chains, updated with
alternating even/odd layer blocks, supply the negative statistics.
"""

import numpy as np

from ..errors import ContractError, DataError
from ..models.gdbm import GdbmParams, gdbm_denoise_patch, gdbm_mean_field
from ..models.grbm import sigmoid
from .config import (
    CHAIN_STREAM,
    INIT_STREAM,
    TrainConfig,
    emit_progress,
    epoch_batches,
    lr_schedule,
    stream_rng,
)
from .grbm import ANNEAL_FRACTION, GRBM_LR0, WEIGHT_INIT_STD, _annealed_lr

BERNOULLI_STAGE_LR0 = 0.01
FINETUNE_LR0 = 0.0005


def _train_stage_grbm(data, n_hidden, cfg, up_scale, stage, log, label):
    """Bottom-stage GRBM trained by PCD with the upward drive scaled."""
    n_vis = data.shape[1]
    rng_init = stream_rng(cfg.seed, INIT_STREAM, stage)
    w = rng_init.normal(0.0, WEIGHT_INIT_STD, size=(n_vis, n_hidden))
    b = np.zeros(n_vis)
    c = np.zeros(n_hidden)
    rng = stream_rng(cfg.seed, CHAIN_STREAM, stage)
    fv = rng.standard_normal((cfg.minibatch, n_vis))
    lr0 = cfg.lr0 if cfg.lr0 is not None else GRBM_LR0

    t_after = 0
    lr = lr0
    for epoch in range(cfg.epochs):
        for idx in epoch_batches(data.shape[0], cfg, epoch, stage=stage):
            lr, t_after = _annealed_lr(lr0, epoch, cfg.epochs, t_after)
            batch = data[idx]
            n, m = batch.shape[0], fv.shape[0]
            ph = sigmoid(up_scale * (batch @ w) + c)
            fh_p = sigmoid(up_scale * (fv @ w) + c)
            fh = (rng.random(fh_p.shape) < fh_p).astype(np.float64)
            w += lr * (batch.T @ ph / n - fv.T @ fh / m)
            b += lr * ((batch - b).mean(axis=0) - (fv - b).mean(axis=0))
            c += lr * (ph.mean(axis=0) - fh.mean(axis=0))
            fv = fh @ w.T + b + rng.standard_normal(fv.shape)
        if not np.all(np.isfinite(fv)):
            raise DataError("fantasy particles diverged to non-finite values")
        probe = data[:min(512, data.shape[0])]
        recon = sigmoid(up_scale * (probe @ w) + c) @ w.T + b
        err = float(np.mean(np.sum((recon - probe) ** 2, axis=1)))
        emit_progress(log, epoch, cfg.epochs, f"{label}_recon", err, lr)
    return w, b, c


def _train_stage_bernoulli(data, n_hidden, cfg, up_scale, down_scale,
                           stage, log, label):
    """Bernoulli-Bernoulli RBM stage trained by PCD on mean activations."""
    n_vis = data.shape[1]
    rng_init = stream_rng(cfg.seed, INIT_STREAM, stage)
    w = rng_init.normal(0.0, WEIGHT_INIT_STD, size=(n_vis, n_hidden))
    b = np.zeros(n_vis)
    c = np.zeros(n_hidden)
    rng = stream_rng(cfg.seed, CHAIN_STREAM, stage)
    fv = (rng.random((cfg.minibatch, n_vis)) < 0.5).astype(np.float64)
    lr0 = cfg.lr0 if cfg.lr0 is not None else BERNOULLI_STAGE_LR0

    t = 0
    lr = lr0
    for epoch in range(cfg.epochs):
        for idx in epoch_batches(data.shape[0], cfg, epoch, stage=stage):
            lr = lr_schedule(t, lr0, cfg.lr_halflife)
            t += 1
            batch = data[idx]
            n, m = batch.shape[0], fv.shape[0]
            ph = sigmoid(up_scale * (batch @ w) + c)
            fh_p = sigmoid(up_scale * (fv @ w) + c)
            fh = (rng.random(fh_p.shape) < fh_p).astype(np.float64)
            w += lr * (batch.T @ ph / n - fv.T @ fh / m)
            b += lr * (batch.mean(axis=0) - fv.mean(axis=0))
            c += lr * (ph.mean(axis=0) - fh.mean(axis=0))
            fv_p = sigmoid(down_scale * (fh @ w.T) + b)
            fv = (rng.random(fv_p.shape) < fv_p).astype(np.float64)
        probe = data[:min(512, data.shape[0])]
        recon = sigmoid(down_scale * (sigmoid(up_scale * (probe @ w) + c) @ w.T) + b)
        err = float(np.mean(np.sum((recon - probe) ** 2, axis=1)))
        emit_progress(log, epoch, cfg.epochs, f"{label}_recon", err, lr)
    return w, b, c


def pretrain_gdbm(patches, depth, cfg: TrainConfig, n_hidden=None, log=None):
    """Assemble a GDBM from greedily trained RBM stages.

    ``depth`` must be 2 or 4 (a single hidden layer is a GRBM and has its
    own trainer).  Activations feed forward between stages with the same
    doubled drive the stage was trained with, keeping the stack consistent
    with the mean-field initialization convention.
    """
    patches = np.asarray(patches, dtype=np.float64)
    if patches.ndim != 2 or patches.shape[0] == 0:
        raise DataError("patch corpus must be a nonempty (n, p*p) matrix")
    if depth not in (2, 4):
        raise ContractError(
            f"depth must be 2 or 4 (use train_grbm for depth 1), got {depth}")
    n_vis = patches.shape[1]
    if n_hidden is None:
        n_hidden = 5 * n_vis
    widths = [n_hidden] * depth if np.isscalar(n_hidden) else list(n_hidden)
    if len(widths) != depth:
        raise ContractError("n_hidden list length must equal depth")

    w1, b, c1 = _train_stage_grbm(patches, widths[0], cfg, up_scale=2.0,
                                  stage=0, log=log, label="stage1")
    acts = sigmoid(2.0 * (patches @ w1) + c1)

    us, cs = [], [c1]
    for k in range(1, depth):
        top = (k == depth - 1)
        wk, _, ck = _train_stage_bernoulli(
            acts, widths[k], cfg, up_scale=1.0 if top else 2.0,
            down_scale=2.0, stage=k, log=log, label=f"stage{k + 1}")
        us.append(wk)
        cs.append(ck)
        acts = sigmoid((1.0 if top else 2.0) * (acts @ wk) + ck)

    return GdbmParams(W=w1, U=us, b=b, c=cs, sigma2=1.0)


def _gibbs_block_sweep(params, fv, fhs, rng):
    """One alternating even/odd block update of the persistent chains."""
    mats = [params.W] + list(params.U)
    L = params.n_layers
    s2 = params.sigma2

    def refresh(l):
        below = fv / s2 if l == 0 else fhs[l - 1]
        pre = below @ mats[l] + params.c[l]
        if l < L - 1:
            pre = pre + fhs[l + 1] @ mats[l + 1].T
        p = sigmoid(pre)
        return (rng.random(p.shape) < p).astype(np.float64)

    for l in range(0, L, 2):     # odd-numbered layers h1, h3, ...
        fhs[l] = refresh(l)
    fv = fhs[0] @ params.W.T + params.b + \
        rng.standard_normal(fv.shape) * np.sqrt(s2)
    for l in range(1, L, 2):     # even-numbered layers h2, h4, ...
        fhs[l] = refresh(l)
    return fv, fhs


def finetune_gdbm(patches, params: GdbmParams, cfg: TrainConfig,
                  mf_iters=5, log=None):
    """Stochastic maximum-likelihood finetuning of an assembled GDBM.

    Positive statistics come from mean-field posteriors on each minibatch;
    negative statistics from persistent chains advanced one block sweep
    per update.  sigma2 is left untouched.  Mutates and returns ``params``.
    """
    patches = np.asarray(patches, dtype=np.float64)
    if patches.ndim != 2 or patches.shape[0] == 0:
        raise DataError("patch corpus must be a nonempty (n, p*p) matrix")
    lr0 = cfg.lr0 if cfg.lr0 is not None else FINETUNE_LR0
    s2 = params.sigma2
    L = params.n_layers

    rng = stream_rng(cfg.seed, CHAIN_STREAM, 1000)
    fv = rng.standard_normal((cfg.minibatch, params.n_visible))
    fhs = [(rng.random((cfg.minibatch, n)) < 0.5).astype(np.float64)
           for n in params.layer_sizes]

    probe = patches[:min(512, patches.shape[0])]
    t = 0
    lr = lr0
    for epoch in range(cfg.epochs):
        for idx in epoch_batches(patches.shape[0], cfg, epoch, stage=1000):
            lr = lr_schedule(t, lr0, cfg.lr_halflife)
            t += 1
            batch = patches[idx]
            n, m = batch.shape[0], fv.shape[0]
            mus = gdbm_mean_field(batch, params, max_iters=mf_iters).mu

            fv, fhs = _gibbs_block_sweep(params, fv, fhs, rng)

            params.W += lr * ((batch / s2).T @ mus[0] / n -
                              (fv / s2).T @ fhs[0] / m)
            params.b += lr * ((batch - params.b).mean(axis=0) -
                              (fv - params.b).mean(axis=0)) / s2
            for l in range(L):
                params.c[l] += lr * (mus[l].mean(axis=0) - fhs[l].mean(axis=0))
            for l in range(L - 1):
                params.U[l] += lr * (mus[l].T @ mus[l + 1] / n -
                                     fhs[l].T @ fhs[l + 1] / m)
        if not np.all(np.isfinite(fv)):
            raise DataError("fantasy particles diverged to non-finite values")
        recon = gdbm_denoise_patch(probe, params, max_iters=mf_iters)
        err = float(np.mean(np.sum((recon - probe) ** 2, axis=1)))
        emit_progress(log, epoch, cfg.epochs, "recon_err", err, lr)
    return params
