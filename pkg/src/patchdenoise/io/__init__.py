"""Image codecs, corpus sampling, and model persistence."""

from .corpus import sample_patch_corpus
from .modelfile import (
    FORMAT_VERSION,
    PatchCorpus,
    load_corpus,
    load_model,
    save_corpus,
    save_model,
)
from .pgm import load_image, load_pgm, save_image, save_pgm

__all__ = [
    "FORMAT_VERSION",
    "PatchCorpus",
    "load_corpus",
    "load_image",
    "load_model",
    "load_pgm",
    "sample_patch_corpus",
    "save_corpus",
    "save_image",
    "save_model",
    "save_pgm",
]
