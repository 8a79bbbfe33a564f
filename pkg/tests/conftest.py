"""Shared fixtures: tiny random models and synthetic natural-style images."""

import numpy as np
import pytest

from patchdenoise.models import DaeParams, GdbmParams, GrbmParams


def random_grbm(rng, n_visible=4, n_hidden=3, scale=0.5):
    return GrbmParams(
        W=scale * rng.standard_normal((n_visible, n_hidden)),
        b=scale * rng.standard_normal(n_visible),
        c=scale * rng.standard_normal(n_hidden),
        sigma2=1.0,
    )


def random_gdbm(rng, n_visible=4, sizes=(3, 3), scale=0.5, sigma2=1.0):
    sizes = list(sizes)
    return GdbmParams(
        W=scale * rng.standard_normal((n_visible, sizes[0])),
        U=[scale * rng.standard_normal((sizes[l], sizes[l + 1]))
           for l in range(len(sizes) - 1)],
        b=scale * rng.standard_normal(n_visible),
        c=[scale * rng.standard_normal(n) for n in sizes],
        sigma2=sigma2,
    )


def random_dae(rng, n_visible=6, sizes=(4,), scale=0.4):
    dims = [n_visible] + list(sizes)
    return DaeParams(
        W=[scale * rng.standard_normal((dims[k], dims[k + 1]))
           for k in range(len(sizes))],
        enc_bias=[scale * rng.standard_normal(dims[k + 1])
                  for k in range(len(sizes))],
        dec_bias=[scale * rng.standard_normal(dims[k])
                  for k in range(len(sizes))],
    )


def make_natural_image(rng, height=96, width=96):
    """Piecewise-smooth synthetic image with natural-like local statistics.

    A few low-frequency gratings, smooth Gaussian blobs, and a soft edge,
    rescaled into [0.05, 0.95].
    """
    yy, xx = np.mgrid[0:height, 0:width].astype(np.float64)
    img = np.zeros((height, width))
    for _ in range(3):
        fx, fy = rng.uniform(0.5, 2.5, size=2)
        phase = rng.uniform(0, 2 * np.pi, size=2)
        amp = rng.uniform(0.3, 1.0)
        img += amp * np.cos(2 * np.pi * fx * xx / width + phase[0]) \
                   * np.cos(2 * np.pi * fy * yy / height + phase[1])
    for _ in range(6):
        cy, cx = rng.uniform(0, height), rng.uniform(0, width)
        s = rng.uniform(0.05, 0.2) * min(height, width)
        amp = rng.uniform(-1.0, 1.0)
        img += amp * np.exp(-((yy - cy) ** 2 + (xx - cx) ** 2) / (2 * s * s))
    edge_at = rng.uniform(0.3, 0.7) * width
    img += 0.8 / (1.0 + np.exp(-(xx - edge_at) / 2.0))
    lo, hi = img.min(), img.max()
    return 0.05 + 0.9 * (img - lo) / (hi - lo)


@pytest.fixture
def rng():
    return np.random.default_rng(20240811)


# Desk-scale setup shared by the pipeline regression and the acceptance
# suite: a directory of synthetic natural images, a 10k-patch corpus
# sampled from it, and models trained for 30 epochs.

DESK_EPOCHS = 30
DESK_PATCH = 4
DESK_CFG_SEED = 7


@pytest.fixture(scope="session")
def desk_image_dir(tmp_path_factory):
    from patchdenoise.io import save_pgm

    root = tmp_path_factory.mktemp("train_images")
    rng = np.random.default_rng(1234)
    for i in range(12):
        save_pgm(make_natural_image(rng, 96, 96), root / f"img_{i:02d}.pgm")
    return root


@pytest.fixture(scope="session")
def desk_corpus(desk_image_dir):
    """Normalized 10k x 16 training matrix sampled through the io layer."""
    import time

    from patchdenoise.io import sample_patch_corpus
    from patchdenoise.pipeline import compute_norm_stats

    t0 = time.time()
    corpus = sample_patch_corpus(desk_image_dir, 10_000, DESK_PATCH,
                                 per_image=2, seed=11)
    stats = compute_norm_stats(corpus.patches, mode="per_pixel")
    normalized = (corpus.patches - stats.mean) / np.sqrt(stats.var)
    return {"patches": normalized, "seconds": time.time() - t0}


def _desk_train(corpus, trainer, **kwargs):
    import time

    from patchdenoise.training import TrainConfig

    t0 = time.time()
    cfg = TrainConfig(epochs=DESK_EPOCHS, minibatch=128, seed=DESK_CFG_SEED)
    model = trainer(corpus["patches"], cfg=cfg, **kwargs)
    return {"model": model, "seconds": time.time() - t0 + corpus["seconds"]}


@pytest.fixture(scope="session")
def desk_grbm(desk_corpus):
    from patchdenoise.training import train_grbm

    return _desk_train(desk_corpus, train_grbm, n_hidden=5 * DESK_PATCH ** 2)


@pytest.fixture(scope="session")
def desk_dae1(desk_corpus):
    from patchdenoise.training import train_dae

    return _desk_train(desk_corpus, train_dae, depth=1,
                       n_hidden=5 * DESK_PATCH ** 2)


@pytest.fixture(scope="session")
def desk_dae2(desk_corpus):
    from patchdenoise.training import train_dae

    return _desk_train(desk_corpus, train_dae, depth=2,
                       n_hidden=5 * DESK_PATCH ** 2)


@pytest.fixture(scope="session")
def desk_gdbm4(desk_corpus):
    import time

    from patchdenoise.training import TrainConfig, finetune_gdbm, pretrain_gdbm

    t0 = time.time()
    cfg = TrainConfig(epochs=DESK_EPOCHS, minibatch=128, seed=DESK_CFG_SEED)
    model = pretrain_gdbm(desk_corpus["patches"], 4, cfg,
                          n_hidden=5 * DESK_PATCH ** 2)
    model = finetune_gdbm(desk_corpus["patches"], model, cfg)
    return {"model": model, "seconds": time.time() - t0 + desk_corpus["seconds"]}


@pytest.fixture(scope="session")
def desk_test_image():
    """Held-out 256x256 clean image from the same synthetic family."""
    return make_natural_image(np.random.default_rng(999), 256, 256)
