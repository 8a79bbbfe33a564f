"""Exact inference by brute-force enumeration, for small models only.

These routines sum over every hidden configuration (and integrate the
Gaussian visibles in closed form), so they are limited to models with at
most MAX_ENUM_HIDDEN hidden units in total.  They serve as ground truth
for the approximate inference and training code.
"""

import numpy as np
from scipy.special import logsumexp

from ..errors import CapacityError
from .gdbm import GdbmParams
from .grbm import GrbmParams

MAX_ENUM_HIDDEN = 20


def _layer_view(params):
    """Common (W, U, b, c, sigma2) view for GRBM and GDBM parameters."""
    if isinstance(params, GrbmParams):
        return params.W, [], params.b, [params.c], params.sigma2
    if isinstance(params, GdbmParams):
        return params.W, params.U, params.b, params.c, params.sigma2
    raise TypeError(f"unsupported parameter type {type(params).__name__}")


def _enumerate_hidden(sizes):
    """All joint hidden configurations as a (2^H, H) 0/1 matrix."""
    total = int(sum(sizes))
    if total > MAX_ENUM_HIDDEN:
        raise CapacityError(
            f"{total} hidden units exceed the enumeration cap "
            f"of {MAX_ENUM_HIDDEN}")
    n = 1 << total
    bits = (np.arange(n)[:, None] >> np.arange(total)[None, :]) & 1
    return bits.astype(np.float64)


def _split_layers(configs, sizes):
    out = []
    start = 0
    for n in sizes:
        out.append(configs[:, start:start + n])
        start += n
    return out


def _hidden_terms(layers, U, c):
    """Bias and coupling contributions to -E for every configuration."""
    val = np.zeros(layers[0].shape[0])
    for hl, cl in zip(layers, c):
        val += hl @ cl
    for l, u in enumerate(U):
        val += np.einsum("nj,jk,nk->n", layers[l], u, layers[l + 1])
    return val


def exact_posterior_small(v, params):
    """Exact marginals p(h^(l)_j = 1 | v), one array per hidden layer.

    Works for GRBMs and GDBMs alike; raises CapacityError above the
    enumeration limit.
    """
    W, U, b, c, sigma2 = _layer_view(params)
    v = np.asarray(v, dtype=np.float64)
    sizes = [ci.shape[0] for ci in c]
    configs = _enumerate_hidden(sizes)
    layers = _split_layers(configs, sizes)

    log_w = _hidden_terms(layers, U, c)
    log_w += layers[0] @ (W.T @ (v / sigma2))
    log_w -= logsumexp(log_w)
    w = np.exp(log_w)
    return [w @ hl for hl in layers]


def exact_log_partition(params):
    """log Z with the Gaussian visibles integrated out in closed form.

    For each hidden configuration the visible integral is a shifted
    Gaussian normalizer: prod_i sqrt(2 pi s2) exp(((a_i+b_i)^2 - b_i^2)/(2 s2))
    with a = W h^(1).
    """
    W, U, b, c, sigma2 = _layer_view(params)
    sizes = [ci.shape[0] for ci in c]
    configs = _enumerate_hidden(sizes)
    layers = _split_layers(configs, sizes)

    log_w = _hidden_terms(layers, U, c)
    a = layers[0] @ W.T
    log_w += np.sum(((a + b) ** 2 - b ** 2), axis=1) / (2.0 * sigma2)
    n_v = W.shape[0]
    return float(logsumexp(log_w) + 0.5 * n_v * np.log(2.0 * np.pi * sigma2))


def exact_log_likelihood(v, params):
    """Mean exact log p(v) over a batch of visible vectors."""
    W, U, b, c, sigma2 = _layer_view(params)
    v = np.atleast_2d(np.asarray(v, dtype=np.float64))
    sizes = [ci.shape[0] for ci in c]
    configs = _enumerate_hidden(sizes)
    layers = _split_layers(configs, sizes)

    log_w = _hidden_terms(layers, U, c)                     # (C,)
    cross = (v / sigma2) @ W @ layers[0].T                  # (N, C)
    quad = -np.sum((v - b) ** 2, axis=1) / (2.0 * sigma2)   # (N,)
    log_joint = logsumexp(cross + log_w, axis=1) + quad
    return float(np.mean(log_joint) - exact_log_partition(params))
