"""Whole-image blind denoising pipeline.

Images are 2-D float64 arrays (height x width) with values in [0, 1];
intermediate stages may leave that range and only noise injection and the
final reconstruction clamp.  The stages: grayscale conversion, noise
injection, pixel-wise adaptive Wiener prefiltering, overlapping patch
extraction, per-image normalization, per-patch model inference, overlap
averaging, and PSNR scoring.

The denoising path is structurally blind: no function on it accepts the
noise kind or level.
"""

import math
from dataclasses import dataclass

import numpy as np
from scipy.ndimage import uniform_filter

from .errors import ContractError, ShapeError
from .models.dae import DaeParams, dae_denoise_patch
from .models.gdbm import GdbmParams, gdbm_denoise_patch
from .models.grbm import GrbmParams, grbm_denoise_patch

VAR_FLOOR = 1e-8
NOISE_KINDS = ("gaussian", "saltpepper")


@dataclass
class NoiseSpec:
    """Noise family plus level: std for Gaussian, hit probability otherwise."""

    kind: str
    level: float

    def __post_init__(self):
        if self.kind not in NOISE_KINDS:
            raise ContractError(
                f"noise kind must be one of {NOISE_KINDS}, got {self.kind!r}")
        if not 0.0 <= self.level <= 1.0:
            raise ContractError(f"noise level must be in [0, 1], got {self.level}")


@dataclass
class PatchSet:
    """Flattened overlapping patches plus their top-left anchors."""

    patch_size: int
    stride: int
    patches: np.ndarray    # (N, p*p), row-major within each patch
    positions: np.ndarray  # (N, 2) int64 (row, col)


@dataclass
class NormStats:
    """Normalization statistics; per-pixel vectors or per-image scalars.

    ``floored`` records that the raw variance fell below VAR_FLOOR and was
    clamped there.
    """

    mean: np.ndarray
    var: np.ndarray
    mode: str  # "per_pixel" | "per_image"
    floored: bool = False


def _check_image(img):
    img = np.asarray(img, dtype=np.float64)
    if img.ndim != 2:
        raise ShapeError(f"expected a 2-D grayscale image, got shape {img.shape}")
    return img


def to_grayscale(rgb):
    """Average the three channels of an (H, W, 3) image."""
    rgb = np.asarray(rgb, dtype=np.float64)
    if rgb.ndim == 2:
        return rgb.copy()
    if rgb.ndim != 3 or rgb.shape[2] != 3:
        raise ShapeError(f"expected (H, W, 3) channels, got shape {rgb.shape}")
    return rgb.mean(axis=2)


def gaussian_noise_field(shape, level, rng):
    """Zero-mean Gaussian noise with std ``level`` (the pre-clamp field)."""
    return rng.normal(0.0, level, size=shape)


def inject_noise(img, spec: NoiseSpec, rng):
    """Corrupt an image; deterministic under a seeded generator.

    Gaussian: add N(0, level^2) per pixel and clamp to [0, 1].
    Salt-and-pepper: each pixel is hit independently with probability
    ``level``; hit pixels become 0 or 1 with probability 1/2 each.
    """
    img = _check_image(img)
    if spec.kind == "gaussian":
        out = img + gaussian_noise_field(img.shape, spec.level, rng)
        return np.clip(out, 0.0, 1.0)
    hit = rng.random(img.shape) < spec.level
    value = (rng.random(img.shape) < 0.5).astype(np.float64)
    out = img.copy()
    out[hit] = value[hit]
    return out


def wiener_prefilter(img):
    """Pixel-wise adaptive Wiener filter over a 3x3 neighborhood.

    Local means and variances use replicated borders; the noise power is
    the mean of all local variances.  Output is clamped to [0, 1] as a
    final guard.
    """
    img = _check_image(img)
    if img.shape[0] < 3 or img.shape[1] < 3:
        raise ContractError("image must be at least 3x3 for Wiener filtering")
    local_mean = uniform_filter(img, size=3, mode="nearest")
    local_sq = uniform_filter(img * img, size=3, mode="nearest")
    local_var = np.maximum(local_sq - local_mean ** 2, 0.0)
    noise_power = float(local_var.mean())
    gain = np.maximum(local_var - noise_power, 0.0) / \
        np.maximum(local_var, noise_power if noise_power > 0 else 1.0)
    out = local_mean + gain * (img - local_mean)
    return np.clip(out, 0.0, 1.0)


def _anchors(extent, p, stride):
    # regular grid plus a final flush-to-border anchor for full coverage
    last = extent - p
    rows = list(range(0, last + 1, stride))
    if rows[-1] != last:
        rows.append(last)
    return np.asarray(rows, dtype=np.int64)


def extract_patches(img, p, stride=1):
    """All p x p patches on a stride grid, flushed to the borders.

    Anchors run 0, stride, 2*stride, ... with an extra anchor at the far
    border whenever the stride does not divide evenly, so every pixel is
    covered.  Patches are flattened row-major.
    """
    img = _check_image(img)
    h, w = img.shape
    if p < 1 or p > min(h, w):
        raise ContractError(f"patch size {p} does not fit a {h}x{w} image")
    if stride < 1:
        raise ContractError("stride must be >= 1")
    rows = _anchors(h, p, stride)
    cols = _anchors(w, p, stride)
    windows = np.lib.stride_tricks.sliding_window_view(img, (p, p))
    patches = windows[rows[:, None], cols[None, :]].reshape(-1, p * p)
    positions = np.stack(
        [np.repeat(rows, cols.size), np.tile(cols, rows.size)], axis=1)
    return PatchSet(patch_size=p, stride=stride,
                    patches=np.ascontiguousarray(patches), positions=positions)


def compute_norm_stats(patches, mode):
    """Mean/variance statistics of a patch matrix.

    ``per_pixel`` gives one value per patch coordinate (training corpora);
    ``per_image`` pools every entry into scalars (test-time protocol).
    Variances are floored at VAR_FLOOR.
    """
    patches = np.asarray(patches, dtype=np.float64)
    if mode == "per_pixel":
        mean = patches.mean(axis=0)
        var = patches.var(axis=0)
    elif mode == "per_image":
        mean = np.float64(patches.mean())
        var = np.float64(patches.var())
    else:
        raise ContractError(f"unknown normalization mode {mode!r}")
    floored = bool(np.any(var < VAR_FLOOR))
    var = np.maximum(var, VAR_FLOOR)
    return NormStats(mean=mean, var=var, mode=mode, floored=floored)


def normalize_patches(ps: PatchSet, stats: NormStats):
    """(x - mean) / sqrt(var), with the stats broadcast over patches."""
    scaled = (ps.patches - stats.mean) / np.sqrt(stats.var)
    return PatchSet(ps.patch_size, ps.stride, scaled, ps.positions)


def denormalize_patches(ps: PatchSet, stats: NormStats):
    """Exact inverse of normalize_patches."""
    raw = ps.patches * np.sqrt(stats.var) + stats.mean
    return PatchSet(ps.patch_size, ps.stride, raw, ps.positions)


def reconstruct_image(ps: PatchSet, height, width):
    """Overlap-average patches back into an image and clamp to [0, 1].

    Every pixel's value is the mean of all patch values covering it; the
    coverage count is accumulated alongside the weighted sum.  A pixel
    covered by no patch violates the extraction contract.
    """
    p = ps.patch_size
    pos = np.asarray(ps.positions, dtype=np.int64)
    if pos.size and (pos.min() < 0 or
                     np.any(pos[:, 0] > height - p) or
                     np.any(pos[:, 1] > width - p)):
        raise ContractError("patch positions fall outside the image")
    base = pos[:, 0] * width + pos[:, 1]
    offsets = (np.arange(p)[:, None] * width + np.arange(p)).ravel()
    flat = (base[:, None] + offsets[None, :]).ravel()
    num = np.bincount(flat, weights=ps.patches.ravel(), minlength=height * width)
    den = np.bincount(flat, minlength=height * width)
    if np.any(den == 0):
        raise ContractError("some pixels are covered by no patch")
    return np.clip((num / den).reshape(height, width), 0.0, 1.0)


def denoise_patches(patches, model):
    """Per-patch model inference on a (N, p*p) matrix of normalized patches."""
    if isinstance(model, GrbmParams):
        return grbm_denoise_patch(patches, model)
    if isinstance(model, GdbmParams):
        return gdbm_denoise_patch(patches, model)
    if isinstance(model, DaeParams):
        return dae_denoise_patch(patches, model)
    raise ContractError(f"unsupported model type {type(model).__name__}")


def denoise_image(noisy, model, p, stride=1):
    """Blind whole-image denoising.

    Wiener prefilter, extract patches, normalize with per-image scalar
    statistics, run the model on every patch, undo the normalization, and
    overlap-average.  The model receives no information about the noise.
    """
    noisy = _check_image(noisy)
    n_visible = model.n_visible
    if p * p != n_visible:
        raise ContractError(
            f"model expects {n_visible} inputs but patch size {p} gives {p * p}")
    filtered = wiener_prefilter(noisy)
    ps = extract_patches(filtered, p, stride)
    stats = compute_norm_stats(ps.patches, mode="per_image")
    normed = normalize_patches(ps, stats)
    denoised = PatchSet(p, stride, denoise_patches(normed.patches, model),
                        ps.positions)
    restored = denormalize_patches(denoised, stats)
    return reconstruct_image(restored, noisy.shape[0], noisy.shape[1])


def psnr(clean, test):
    """Peak signal-to-noise ratio in dB on the [0, 1] pixel scale.

    Identical images return math.inf as the sentinel.
    """
    clean = _check_image(clean)
    test = _check_image(test)
    if clean.shape != test.shape:
        raise ShapeError(
            f"image shapes differ: {clean.shape} vs {test.shape}")
    mse = float(np.mean((clean - test) ** 2))
    if mse == 0.0:
        return math.inf
    return -10.0 * math.log10(mse)
