"""Gaussian-Bernoulli restricted Boltzmann machine: parameters and inference.

The model has real-valued visible units with a shared variance and binary
hidden units.  The hidden posterior given the visibles is exactly
factorial, so denoising a patch is a closed-form two-step computation:
hidden conditional means, then the linear visible mean.
"""

from dataclasses import dataclass

import numpy as np

from ..errors import ShapeError


def sigmoid(x):
    """Numerically stable logistic function, elementwise."""
    out = np.empty_like(x, dtype=np.float64)
    pos = x >= 0
    out[pos] = 1.0 / (1.0 + np.exp(-x[pos]))
    ex = np.exp(x[~pos])
    out[~pos] = ex / (1.0 + ex)
    return out


@dataclass
class GrbmParams:
    """Parameter container for a GRBM.

    W      : (n_visible, n_hidden) coupling weights
    b      : (n_visible,) visible biases
    c      : (n_hidden,) hidden biases
    sigma2 : shared visible variance, > 0
    """

    W: np.ndarray
    b: np.ndarray
    c: np.ndarray
    sigma2: float = 1.0

    def __post_init__(self):
        self.W = np.asarray(self.W, dtype=np.float64)
        self.b = np.asarray(self.b, dtype=np.float64)
        self.c = np.asarray(self.c, dtype=np.float64)
        self.sigma2 = float(self.sigma2)
        self.validate()

    @property
    def n_visible(self):
        return self.W.shape[0]

    @property
    def n_hidden(self):
        return self.W.shape[1]

    def validate(self):
        if self.W.ndim != 2:
            raise ShapeError(f"W must be 2-D, got shape {self.W.shape}")
        if self.b.shape != (self.W.shape[0],):
            raise ShapeError(
                f"b has shape {self.b.shape}, expected ({self.W.shape[0]},)")
        if self.c.shape != (self.W.shape[1],):
            raise ShapeError(
                f"c has shape {self.c.shape}, expected ({self.W.shape[1]},)")
        if not (self.sigma2 > 0):
            raise ShapeError(f"sigma2 must be positive, got {self.sigma2}")
        for name, arr in (("W", self.W), ("b", self.b), ("c", self.c)):
            if not np.all(np.isfinite(arr)):
                raise ShapeError(f"{name} contains non-finite values")


def _check_visible(v, params):
    v = np.asarray(v, dtype=np.float64)
    if v.shape[-1] != params.n_visible:
        raise ShapeError(
            f"visible vector has {v.shape[-1]} entries, "
            f"model expects {params.n_visible}")
    return v


def rbm_hidden_conditional(v, params: GrbmParams):
    """p(h_j = 1 | v) for every hidden unit.

    Accepts a single visible vector or a batch with the leading axis as the
    sample axis; the output matches.  Values are in (0, 1).
    """
    v = _check_visible(v, params)
    return sigmoid(v @ params.W / params.sigma2 + params.c)


def grbm_visible_mean(h_mean, params: GrbmParams):
    """Mean of p(v | h) with the hidden layer at ``h_mean``: W h + b."""
    h_mean = np.asarray(h_mean, dtype=np.float64)
    if h_mean.shape[-1] != params.n_hidden:
        raise ShapeError(
            f"hidden vector has {h_mean.shape[-1]} entries, "
            f"model expects {params.n_hidden}")
    return h_mean @ params.W.T + params.b


def grbm_denoise_patch(noisy, params: GrbmParams):
    """Reconstruct a patch: exact hidden posterior means, then visible mean.

    Deterministic; no iteration is involved because the posterior is exact.
    """
    return grbm_visible_mean(rbm_hidden_conditional(noisy, params), params)
