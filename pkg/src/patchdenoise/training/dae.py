"""Stochastic-gradient training for denoising autoencoders.

Deep stacks are pretrained greedily, one layer at a time, on the clean
activations of the layers below; only the first layer sees additive
Gaussian corruption, while masking corruption applies at every stage.
The full stack is then finetuned end to end without the sparsity penalty.
"""

import dataclasses
from dataclasses import dataclass

import numpy as np

from ..errors import ContractError, DataError
from ..models.dae import DaeParams
from ..models.grbm import sigmoid
from .config import (
    CORRUPT_STREAM,
    INIT_STREAM,
    TrainConfig,
    corrupt_input,
    emit_progress,
    epoch_batches,
    lr_schedule,
    stream_rng,
)

SINGLE_LAYER_LR0 = 0.05
FINETUNE_LR0 = 0.01
WEIGHT_INIT_STD = 0.01
FINETUNE_STAGE = 100


@dataclass
class DaeGradients:
    """Gradient arrays mirroring DaeParams; tied weights are accumulated."""

    W: list
    enc_bias: list
    dec_bias: list


def dae_loss_and_grad(clean_batch, params: DaeParams, cfg: TrainConfig, rng):
    """Summed reconstruction loss plus sparsity penalty, with gradients.

    The batch is corrupted with ``rng`` before the forward pass; the
    squared error is taken against the clean batch.  The sparsity penalty
    lambda * sum_j (rho - activation_j)^2 attaches to the first hidden
    layer's activations as seen in the corrupted forward pass.  Gradients
    are exact reverse-mode derivatives; each tied weight matrix collects
    both its encoder and its decoder contribution.
    """
    clean = np.atleast_2d(np.asarray(clean_batch, dtype=np.float64))
    if clean.shape[0] == 0:
        raise DataError("empty batch")
    x = corrupt_input(clean, cfg, rng)
    L = params.n_layers
    lam = cfg.sparsity_lambda
    rho = cfg.sparsity_rho

    # forward
    acts = [x]
    for k in range(L):
        acts.append(sigmoid(acts[k] @ params.W[k] + params.enc_bias[k]))
    decs = [None] * (L + 1)
    decs[L] = acts[L]
    for k in range(L, 1, -1):
        decs[k - 1] = sigmoid(decs[k] @ params.W[k - 1].T + params.dec_bias[k - 1])
    vhat = decs[1] @ params.W[0].T + params.dec_bias[0]

    resid = vhat - clean
    loss = float(np.sum(resid ** 2))
    if lam != 0.0:
        loss += lam * float(np.sum((rho - acts[1]) ** 2))

    gW = [np.zeros_like(w) for w in params.W]
    g_enc = [np.zeros_like(v) for v in params.enc_bias]
    g_dec = [np.zeros_like(v) for v in params.dec_bias]

    # backward through the affine visible layer
    delta = 2.0 * resid
    g_dec[0][:] = delta.sum(axis=0)
    gW[0] += delta.T @ decs[1]
    cur = delta @ params.W[0]
    # backward through the squashing decoder layers
    for k in range(1, L):
        dz = cur * decs[k] * (1.0 - decs[k])
        g_dec[k][:] = dz.sum(axis=0)
        gW[k] += dz.T @ decs[k + 1]
        cur = dz @ params.W[k]
    # backward through the encoder; cur now holds dLoss/d acts[L]
    for k in range(L, 0, -1):
        if k == 1 and lam != 0.0:
            cur = cur - 2.0 * lam * (rho - acts[1])
        dz = cur * acts[k] * (1.0 - acts[k])
        g_enc[k - 1][:] = dz.sum(axis=0)
        gW[k - 1] += acts[k - 1].T @ dz
        cur = dz @ params.W[k - 1].T

    return loss, DaeGradients(W=gW, enc_bias=g_enc, dec_bias=g_dec)


def _init_single(n_in, n_hidden, rng):
    w = rng.normal(0.0, WEIGHT_INIT_STD, size=(n_in, n_hidden))
    return DaeParams(W=[w], enc_bias=[np.zeros(n_hidden)],
                     dec_bias=[np.zeros(n_in)])


def _sgd_stage(data, params, cfg, lr0, stage, gauss_std, lam, log, label):
    """SGD over one training stage; mutates ``params`` in place."""
    stage_cfg = dataclasses.replace(
        cfg, corrupt_gauss_std=gauss_std, sparsity_lambda=lam)
    rng_corrupt = stream_rng(cfg.seed, CORRUPT_STREAM, stage)
    t = 0
    lr = lr0
    for epoch in range(cfg.epochs):
        total = 0.0
        for idx in epoch_batches(data.shape[0], cfg, epoch, stage=stage):
            batch = data[idx]
            lr = lr_schedule(t, lr0, cfg.lr_halflife)
            loss, grads = dae_loss_and_grad(batch, params, stage_cfg, rng_corrupt)
            scale = lr / batch.shape[0]
            for k in range(params.n_layers):
                params.W[k] -= scale * grads.W[k]
                params.enc_bias[k] -= scale * grads.enc_bias[k]
                params.dec_bias[k] -= scale * grads.dec_bias[k]
            total += loss
            t += 1
        emit_progress(log, epoch, cfg.epochs, f"{label}_loss",
                      total / data.shape[0], lr)
    return params


def train_dae(patches, depth, cfg: TrainConfig, n_hidden=None, log=None):
    """Train a DAE of the given depth on a normalized patch corpus.

    Depth 1 trains directly by SGD.  Deeper stacks are pretrained layer
    by layer on the previous layers' clean activations and then finetuned
    end to end.  ``n_hidden`` is the per-layer width (default: five units
    per input dimension).  Fully deterministic under ``cfg.seed``.
    """
    patches = np.asarray(patches, dtype=np.float64)
    if patches.ndim != 2 or patches.shape[0] == 0:
        raise DataError("patch corpus must be a nonempty (n, p*p) matrix")
    if depth not in (1, 2, 4):
        raise ContractError(f"depth must be 1, 2, or 4, got {depth}")
    n_vis = patches.shape[1]
    if n_hidden is None:
        n_hidden = 5 * n_vis
    widths = [n_hidden] * depth if np.isscalar(n_hidden) else list(n_hidden)
    if len(widths) != depth:
        raise ContractError("n_hidden list length must equal depth")

    rng_init = stream_rng(cfg.seed, INIT_STREAM)
    if depth == 1:
        params = _init_single(n_vis, widths[0], rng_init)
        lr0 = cfg.lr0 if cfg.lr0 is not None else SINGLE_LAYER_LR0
        return _sgd_stage(patches, params, cfg, lr0, stage=0,
                          gauss_std=cfg.corrupt_gauss_std,
                          lam=cfg.sparsity_lambda, log=log, label="dae1")

    stack_W, stack_enc, stack_dec = [], [], []
    acts = patches
    for k in range(depth):
        layer = _init_single(acts.shape[1], widths[k], rng_init)
        lr0 = cfg.lr0 if cfg.lr0 is not None else SINGLE_LAYER_LR0
        gauss = cfg.corrupt_gauss_std if k == 0 else 0.0
        _sgd_stage(acts, layer, cfg, lr0, stage=k, gauss_std=gauss,
                   lam=cfg.sparsity_lambda, log=log, label=f"pretrain{k + 1}")
        stack_W.append(layer.W[0])
        stack_enc.append(layer.enc_bias[0])
        stack_dec.append(layer.dec_bias[0])
        acts = sigmoid(acts @ layer.W[0] + layer.enc_bias[0])

    params = DaeParams(W=stack_W, enc_bias=stack_enc, dec_bias=stack_dec)
    lr0 = cfg.lr0 if cfg.lr0 is not None else FINETUNE_LR0
    return _sgd_stage(patches, params, cfg, lr0, stage=FINETUNE_STAGE,
                      gauss_std=cfg.corrupt_gauss_std, lam=0.0, log=log,
                      label="finetune")
