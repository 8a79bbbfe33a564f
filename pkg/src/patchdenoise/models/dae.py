"""Denoising autoencoder with tied encoder/decoder weights.

Hidden layers use the logistic nonlinearity; the visible output layer is
affine because patches live on a zero-mean, unit-variance normalized
scale.  The encoder output doubles as a factorial posterior over the
top-layer units, so denoising is simply encode followed by decode.
"""

from dataclasses import dataclass

import numpy as np

from ..errors import ShapeError
from .grbm import sigmoid


@dataclass
class DaeParams:
    """Parameters of a DAE with L hidden layers.

    W        : list of L weight matrices, W[k] maps layer k to layer k+1
               (layer 0 is the visible layer); shared by encoder and decoder
    enc_bias : list of L bias vectors, enc_bias[k] for layer k+1
    dec_bias : list of L bias vectors, dec_bias[k] for layer k on the way
               down; dec_bias[0] is the visible output bias
    """

    W: list
    enc_bias: list
    dec_bias: list

    def __post_init__(self):
        self.W = [np.asarray(w, dtype=np.float64) for w in self.W]
        self.enc_bias = [np.asarray(v, dtype=np.float64) for v in self.enc_bias]
        self.dec_bias = [np.asarray(v, dtype=np.float64) for v in self.dec_bias]
        self.validate()

    @property
    def n_visible(self):
        return self.W[0].shape[0]

    @property
    def n_layers(self):
        return len(self.W)

    @property
    def layer_sizes(self):
        return [w.shape[1] for w in self.W]

    def validate(self):
        if not self.W:
            raise ShapeError("a DAE needs at least one hidden layer")
        if len(self.enc_bias) != len(self.W) or len(self.dec_bias) != len(self.W):
            raise ShapeError("bias list lengths must match the weight list")
        sizes = [self.W[0].shape[0]] + self.layer_sizes
        for k, w in enumerate(self.W):
            if w.shape != (sizes[k], sizes[k + 1]):
                raise ShapeError(
                    f"W[{k}] has shape {w.shape}, expected "
                    f"({sizes[k]}, {sizes[k + 1]})")
            if self.enc_bias[k].shape != (sizes[k + 1],):
                raise ShapeError(f"enc_bias[{k}] has the wrong shape")
            if self.dec_bias[k].shape != (sizes[k],):
                raise ShapeError(f"dec_bias[{k}] has the wrong shape")


def _check_input(v, n, what):
    v = np.asarray(v, dtype=np.float64)
    if v.shape[-1] != n:
        raise ShapeError(f"{what} has {v.shape[-1]} entries, expected {n}")
    return v


def dae_encode(v, params: DaeParams):
    """Compose the encoder layers; output in (0, 1) per top-layer unit."""
    z = _check_input(v, params.n_visible, "input")
    for w, cb in zip(params.W, params.enc_bias):
        z = sigmoid(z @ w + cb)
    return z


def dae_decode(mu_top, params: DaeParams):
    """Propagate top-layer means down through the decoder.

    Hidden decoder layers squash; the final visible layer is affine.
    """
    z = _check_input(mu_top, params.layer_sizes[-1], "top-layer vector")
    for k in range(params.n_layers - 1, 0, -1):
        z = sigmoid(z @ params.W[k].T + params.dec_bias[k])
    return z @ params.W[0].T + params.dec_bias[0]


def dae_denoise_patch(noisy, params: DaeParams):
    """Denoise a patch: encode then decode.  Deterministic."""
    return dae_decode(dae_encode(noisy, params), params)
