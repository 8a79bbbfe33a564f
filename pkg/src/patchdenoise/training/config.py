"""Shared training configuration, learning-rate schedule, and input corruption."""

from dataclasses import dataclass

import numpy as np

from ..errors import ContractError

# rng stream tags; combined with the config seed so every consumer of
# randomness draws from its own deterministic stream
INIT_STREAM = 1
CORRUPT_STREAM = 2
SHUFFLE_STREAM = 3
CHAIN_STREAM = 4


@dataclass
class TrainConfig:
    """Hyperparameters shared by all trainers.

    ``lr0=None`` means "use the recipe default of the model being trained".
    """

    epochs: int = 200
    minibatch: int = 128
    lr0: float | None = None
    lr_halflife: float = 5000.0
    seed: int = 0
    sparsity_lambda: float = 0.1
    sparsity_rho: float = 0.1
    corrupt_gauss_std: float = 0.1
    corrupt_mask_frac: float = 0.2

    def __post_init__(self):
        if self.epochs < 0:
            raise ContractError("epochs must be >= 0")
        if self.minibatch < 1:
            raise ContractError("minibatch must be >= 1")
        if self.lr0 is not None and self.lr0 < 0:
            raise ContractError("lr0 must be non-negative")
        if self.lr_halflife <= 0:
            raise ContractError("lr_halflife must be positive")
        if not 0.0 <= self.corrupt_mask_frac <= 1.0:
            raise ContractError("corrupt_mask_frac must be in [0, 1]")
        if self.corrupt_gauss_std < 0:
            raise ContractError("corrupt_gauss_std must be >= 0")


def stream_rng(seed, *tags):
    """Deterministic generator for a named stream derived from one seed."""
    return np.random.default_rng(np.random.SeedSequence([int(seed), *map(int, tags)]))


def lr_schedule(t, lr0, halflife):
    """Annealed learning rate lr0 / (1 + t/halflife) at update count t."""
    if t < 0:
        raise ContractError("update count must be >= 0")
    return lr0 / (1.0 + t / halflife)


def corrupt_input(batch, cfg: TrainConfig, rng):
    """Corrupt a batch: additive Gaussian noise, then exact-count masking.

    Every component gets i.i.d. zero-mean noise with std
    ``cfg.corrupt_gauss_std``; afterwards floor(mask_frac * n) components
    per sample, at uniformly random positions, are forced to exactly zero.
    """
    batch = np.asarray(batch, dtype=np.float64)
    out = batch.copy()
    if cfg.corrupt_gauss_std > 0:
        out += rng.normal(0.0, cfg.corrupt_gauss_std, size=out.shape)
    n = out.shape[-1]
    k = int(np.floor(cfg.corrupt_mask_frac * n))
    if k > 0:
        flat = out.reshape(-1, n)
        order = np.argsort(rng.random(flat.shape), axis=1)
        rows = np.repeat(np.arange(flat.shape[0]), k)
        flat[rows, order[:, :k].ravel()] = 0.0
        out = flat.reshape(out.shape)
    return out


def epoch_batches(n_samples, cfg: TrainConfig, epoch, stage=0):
    """Minibatch index arrays for one epoch, shuffled from the config seed.

    The permutation is reseeded per (seed, stage, epoch), so runs are
    reproducible regardless of how many updates earlier epochs consumed.
    """
    rng = stream_rng(cfg.seed, SHUFFLE_STREAM, stage, epoch)
    perm = rng.permutation(n_samples)
    for start in range(0, n_samples, cfg.minibatch):
        yield perm[start:start + cfg.minibatch]


def emit_progress(log, epoch, epochs, metric_name, metric, lr):
    """One line-oriented progress record, if a log stream is given."""
    if log is not None:
        log.write(f"epoch {epoch + 1}/{epochs} {metric_name} {metric:.6f} lr {lr:.6g}\n")
