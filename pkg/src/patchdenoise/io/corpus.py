"""Random patch-corpus sampling from a directory of images."""

from pathlib import Path

import numpy as np

from ..errors import CodecError, DataError
from ..pipeline import extract_patches
from .modelfile import PatchCorpus
from .pgm import load_image

IMAGE_SUFFIXES = (".pgm", ".png", ".jpg", ".jpeg")


def _list_images(image_dir):
    root = Path(image_dir)
    if not root.is_dir():
        raise DataError(f"not a directory: {image_dir}")
    paths = sorted(p for p in root.iterdir()
                   if p.suffix.lower() in IMAGE_SUFFIXES)
    if not paths:
        raise DataError(f"no images found in {image_dir}")
    return paths


def sample_patch_corpus(image_dir, n_patches, p, per_image=2, seed=0):
    """Collect ``n_patches`` random p x p patches from a directory.

    Images are visited in sorted-path order, ``per_image`` patches at a
    time from uniformly random valid anchors, cycling through the
    directory until the target count is reached.  Images smaller than the
    patch or undecodable are skipped.  Deterministic under ``seed``.
    """
    if n_patches < 1:
        raise DataError("n_patches must be >= 1")
    paths = _list_images(image_dir)
    images = []
    usable_paths = []
    for path in paths:
        try:
            img = load_image(path)
        except CodecError:
            continue
        if img.shape[0] >= p and img.shape[1] >= p:
            images.append(img)
            usable_paths.append(str(path))
    if not images:
        raise DataError(
            f"no loadable images of size >= {p}x{p} in {image_dir}")

    rng = np.random.default_rng(seed)
    patches = np.empty((n_patches, p * p), dtype=np.float64)
    anchors = np.empty((n_patches, 3), dtype=np.int64)
    count = 0
    while count < n_patches:
        for idx, img in enumerate(images):
            take = min(per_image, n_patches - count)
            if take == 0:
                break
            rows = rng.integers(0, img.shape[0] - p + 1, size=take)
            cols = rng.integers(0, img.shape[1] - p + 1, size=take)
            for r, c in zip(rows, cols):
                patches[count] = img[r:r + p, c:c + p].ravel()
                anchors[count] = (idx, r, c)
                count += 1
    return PatchCorpus(patch_size=p, patches=patches, files=usable_paths,
                       anchors=anchors, seed=seed, per_image=per_image)
