"""Command-line front end: corpus sampling, training, denoising, benchmarks.

Every command is deterministic under --seed: repeated runs produce
byte-identical output files.  A key=value config file can supply defaults
for any flag, and PATCHDENOISE_WORKERS controls benchmark parallelism
(rows are emitted in canonical order either way).
"""

import argparse
import os
import sys
from concurrent.futures import ThreadPoolExecutor
from pathlib import Path

import numpy as np

from . import report as report_mod
from .errors import (
    CodecError,
    ContractError,
    DataError,
    PatchDenoiseError,
    PersistenceError,
)
from .io import (
    load_corpus,
    load_image,
    load_model,
    sample_patch_corpus,
    save_corpus,
    save_image,
    save_model,
)
from .pipeline import (
    NoiseSpec,
    compute_norm_stats,
    denoise_image,
    inject_noise,
    psnr,
    wiener_prefilter,
)
from .training import TrainConfig, finetune_gdbm, pretrain_gdbm, train_dae, train_grbm

WORKERS_ENV = "PATCHDENOISE_WORKERS"
MODEL_NAMES = ("grbm", "gdbm2", "gdbm4", "dae1", "dae2", "dae4")
DEFAULT_LEVELS = (0.1, 0.2, 0.4)
DEFAULT_KINDS = ("gaussian", "saltpepper")
DEFAULT_CORPUS_SIZE = 100_000
DEFAULT_PER_IMAGE = 2
DEFAULT_PATCH_SIZE = 8
DEFAULT_HIDDEN_FACTOR = 5
_KIND_IDS = {"gaussian": 1, "saltpepper": 2}

EXIT_OK = 0
EXIT_USAGE = 2
EXIT_DATA = 3
EXIT_CODEC = 4
EXIT_CONTRACT = 5
EXIT_PERSISTENCE = 6

# substitutions relative to the full-scale recipe, recorded in metadata
BM_SUBSTITUTIONS = ["standard-pcd-gradient", "fixed-initial-learning-rate",
                    "plain-pcd-chains", "greedy-rbm-pretraining"]


class _UsageError(Exception):
    """A flag required by the command is missing after the config merge."""


def _read_config(path):
    values = {}
    for line_no, line in enumerate(Path(path).read_text().splitlines(), 1):
        line = line.strip()
        if not line or line.startswith("#"):
            continue
        if "=" not in line:
            raise DataError(f"{path}:{line_no}: expected key=value, got {line!r}")
        key, _, val = line.partition("=")
        values[key.strip().replace("-", "_")] = val.strip()
    return values


def _apply_config(args):
    if getattr(args, "config", None):
        for key, val in _read_config(args.config).items():
            if getattr(args, key, None) is None:
                setattr(args, key, val)
    return args


def _require(args, *names):
    for name in names:
        if getattr(args, name, None) is None:
            flag = "--" + name.replace("_", "-")
            raise _UsageError(f"{args.command}: {flag} is required "
                              f"(flag or config file)")


def _resolved(args, name, default, cast):
    val = getattr(args, name, None)
    if val is None:
        return default
    return cast(val)


def _build_parser():
    parser = argparse.ArgumentParser(
        prog="patchdenoise",
        description="Blind patch-based image denoising toolkit")
    sub = parser.add_subparsers(dest="command", required=True)

    # "required" flags are validated after the config merge (see _require)
    # so that a config file can supply any of them
    p = sub.add_parser("sample", help="sample a random patch corpus")
    p.add_argument("--dir", help="directory of training images")
    p.add_argument("--out", help="output corpus file")
    p.add_argument("--n", default=None, help="number of patches (default 100000)")
    p.add_argument("--patch-size", default=None, help="patch side length (default 8)")
    p.add_argument("--per-image", default=None,
                   help="patches per image per pass (default 2)")
    p.add_argument("--seed", default=None, help="rng seed (default 0)")
    p.add_argument("--config", default=None, help="key=value defaults file")

    p = sub.add_parser("train", help="train a model on a corpus")
    p.add_argument("--corpus", help="corpus file from 'sample'")
    p.add_argument("--model", choices=MODEL_NAMES)
    p.add_argument("--out", help="output model file")
    p.add_argument("--hidden-factor", default=None,
                   help="hidden units per pixel (default 5)")
    p.add_argument("--epochs", default=None, help="training epochs (default 200)")
    p.add_argument("--minibatch", default=None, help="minibatch size (default 128)")
    p.add_argument("--lr0", default=None,
                   help="initial learning rate (default: per-model recipe)")
    p.add_argument("--seed", default=None, help="rng seed (default 0)")
    p.add_argument("--log", default=None, help="progress log file (default stdout)")
    p.add_argument("--config", default=None, help="key=value defaults file")

    p = sub.add_parser("denoise", help="denoise one image with a trained model")
    p.add_argument("--model", help="model file")
    p.add_argument("--input", help="input image")
    p.add_argument("--out", help="output image (PGM)")
    p.add_argument("--noise", default=None, choices=("gaussian", "saltpepper", "none"),
                   help="corrupt the input first (default none)")
    p.add_argument("--level", default=None, help="noise level for --noise")
    p.add_argument("--seed", default=None, help="rng seed for the corruption")
    p.add_argument("--stride", default=None, help="patch stride (default 1)")
    p.add_argument("--clean", default=None,
                   help="clean reference; prints a PSNR triple when given")
    p.add_argument("--report", default=None, help="also write the PSNR line as CSV")
    p.add_argument("--config", default=None, help="key=value defaults file")

    p = sub.add_parser("bench", help="benchmark models over a noise grid")
    p.add_argument("--models", nargs="+", help="model files")
    p.add_argument("--dir", help="directory of test images")
    p.add_argument("--out", help="output CSV report")
    p.add_argument("--kinds", nargs="+", default=None, choices=DEFAULT_KINDS,
                   help="noise kinds (default both)")
    p.add_argument("--levels", nargs="+", default=None,
                   help="noise levels (default 0.1 0.2 0.4)")
    p.add_argument("--stride", default=None, help="patch stride (default 1)")
    p.add_argument("--seed", default=None, help="rng seed (default 0)")
    p.add_argument("--config", default=None, help="key=value defaults file")
    return parser


def cmd_sample(args):
    _require(args, "dir", "out")
    n = _resolved(args, "n", DEFAULT_CORPUS_SIZE, int)
    p = _resolved(args, "patch_size", DEFAULT_PATCH_SIZE, int)
    per_image = _resolved(args, "per_image", DEFAULT_PER_IMAGE, int)
    seed = _resolved(args, "seed", 0, int)
    corpus = sample_patch_corpus(args.dir, n, p, per_image=per_image, seed=seed)
    save_corpus(corpus, args.out)
    print(f"wrote {n} {p}x{p} patches from {len(corpus.files)} images to {args.out}")
    return EXIT_OK


def _train_one(name, patches, cfg, hidden_factor, log):
    n_hidden = hidden_factor * patches.shape[1]
    if name == "grbm":
        return train_grbm(patches, cfg, n_hidden=n_hidden, log=log)
    if name.startswith("gdbm"):
        depth = int(name[4:])
        params = pretrain_gdbm(patches, depth, cfg, n_hidden=n_hidden, log=log)
        return finetune_gdbm(patches, params, cfg, log=log)
    depth = int(name[3:])
    return train_dae(patches, depth, cfg, n_hidden=n_hidden, log=log)


def cmd_train(args):
    _require(args, "corpus", "model", "out")
    if args.model not in MODEL_NAMES:
        raise _UsageError(
            f"unknown model {args.model!r}, choose from {MODEL_NAMES}")
    corpus = load_corpus(args.corpus)
    hidden_factor = _resolved(args, "hidden_factor", DEFAULT_HIDDEN_FACTOR, int)
    cfg = TrainConfig(
        epochs=_resolved(args, "epochs", 200, int),
        minibatch=_resolved(args, "minibatch", 128, int),
        lr0=_resolved(args, "lr0", None, float),
        seed=_resolved(args, "seed", 0, int),
    )
    stats = compute_norm_stats(corpus.patches, mode="per_pixel")
    normalized = (corpus.patches - stats.mean) / np.sqrt(stats.var)

    log_path = getattr(args, "log", None)
    log = open(log_path, "w") if log_path else sys.stdout
    try:
        params = _train_one(args.model, normalized, cfg, hidden_factor, log)
    finally:
        if log_path:
            log.close()

    metadata = {
        "name": args.model, "seed": cfg.seed, "epochs": cfg.epochs,
        "minibatch": cfg.minibatch, "hidden_factor": hidden_factor,
        "lr0": cfg.lr0, "corpus_seed": corpus.seed,
        "blas_threads": os.environ.get("OMP_NUM_THREADS", ""),
    }
    if args.model.startswith(("grbm", "gdbm")):
        metadata["substitutions"] = BM_SUBSTITUTIONS
    save_model(params, args.out, patch_size=corpus.patch_size, metadata=metadata)
    print(f"wrote {args.model} model to {args.out}")
    return EXIT_OK


def cmd_denoise(args):
    _require(args, "model", "input", "out")
    params, info = load_model(args.model)
    img = load_image(args.input)
    stride = _resolved(args, "stride", 1, int)

    noise = getattr(args, "noise", None)
    if noise and noise != "none":
        level = _resolved(args, "level", None, float)
        if level is None:
            raise ContractError("--level is required with --noise")
        seed = _resolved(args, "seed", 0, int)
        spec = NoiseSpec(kind=noise, level=level)
        noisy = inject_noise(img, spec, np.random.default_rng(seed))
    else:
        noisy = img

    denoised = denoise_image(noisy, params, info["patch_size"], stride)
    save_image(denoised, args.out)

    if getattr(args, "clean", None):
        clean = load_image(args.clean)
        triple = (psnr(clean, noisy),
                  psnr(clean, wiener_prefilter(noisy)),
                  psnr(clean, denoised))
        print(f"psnr_noisy={triple[0]:.4f} psnr_wiener={triple[1]:.4f} "
              f"psnr_model={triple[2]:.4f}")
        if getattr(args, "report", None):
            row = report_mod.BenchRow(
                image_id=Path(args.input).name,
                model=info["metadata"].get("name", info["kind"]),
                noise_kind=noise or "none",
                noise_level=_resolved(args, "level", 0.0, float),
                psnr_noisy=triple[0], psnr_wiener=triple[1],
                psnr_model=triple[2])
            report_mod.write_report([row], args.report)
    return EXIT_OK


def _bench_cell(image_id, img, kind, level, seed, image_idx, models, stride):
    """All rows for one (image, kind, level) cell; models share the noise.

    A failure at any stage is recorded as an ``error:<name>`` token in the
    affected PSNR columns and the run continues.
    """
    rng = np.random.default_rng(np.random.SeedSequence(
        [seed, image_idx, _KIND_IDS[kind], int(round(level * 1000))]))
    try:
        noisy = inject_noise(img, NoiseSpec(kind=kind, level=level), rng)
        p_noisy = psnr(img, noisy)
        p_wiener = psnr(img, wiener_prefilter(noisy))
    except PatchDenoiseError as exc:
        token = f"error:{type(exc).__name__}"
        return [report_mod.BenchRow(
            image_id=image_id, model=name, noise_kind=kind, noise_level=level,
            psnr_noisy=token, psnr_wiener=token, psnr_model=token)
            for name, _params, _p in models]
    rows = []
    for name, params, patch_size in models:
        try:
            out = denoise_image(noisy, params, patch_size, stride)
            p_model = psnr(img, out)
        except PatchDenoiseError as exc:
            p_model = f"error:{type(exc).__name__}"
        rows.append(report_mod.BenchRow(
            image_id=image_id, model=name, noise_kind=kind, noise_level=level,
            psnr_noisy=p_noisy, psnr_wiener=p_wiener, psnr_model=p_model))
    return rows


def cmd_bench(args):
    _require(args, "models", "dir", "out")
    seed = _resolved(args, "seed", 0, int)
    stride = _resolved(args, "stride", 1, int)
    kinds = args.kinds or list(DEFAULT_KINDS)
    levels = args.levels or DEFAULT_LEVELS
    if isinstance(kinds, str):  # space-separated value from a config file
        kinds = kinds.split()
    if isinstance(levels, str):
        levels = levels.split()
    levels = [float(v) for v in levels]
    for kind in kinds:
        if kind not in DEFAULT_KINDS:
            raise ContractError(f"unknown noise kind {kind!r}")

    model_paths = args.models.split() if isinstance(args.models, str) \
        else args.models
    models = []
    seen = set()
    for path in model_paths:
        params, info = load_model(path)
        name = info["metadata"].get("name") or Path(path).stem
        if name in seen:  # two files trained as the same architecture
            name = f"{name}:{Path(path).stem}"
        seen.add(name)
        models.append((name, params, info["patch_size"]))
    patch_sizes = {m[2] for m in models}
    if len(patch_sizes) > 1:
        raise ContractError(
            f"models must share a patch size, got {sorted(patch_sizes)}")

    image_dir = Path(args.dir)
    if not image_dir.is_dir():
        raise DataError(f"not a directory: {args.dir}")
    image_paths = sorted(p for p in image_dir.iterdir()
                         if p.suffix.lower() in (".pgm", ".png"))
    if not image_paths:
        raise DataError(f"no images found in {args.dir}")

    cells = []
    for image_idx, path in enumerate(image_paths):
        img = load_image(path)
        for kind in kinds:
            for level in levels:
                cells.append((path.name, img, kind, level, seed, image_idx))

    workers = max(1, int(os.environ.get(WORKERS_ENV, "1")))
    if workers == 1:
        results = [_bench_cell(*cell, models, stride) for cell in cells]
    else:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            results = list(pool.map(
                lambda cell: _bench_cell(*cell, models, stride), cells))
    rows = [row for cell_rows in results for row in cell_rows]

    report_mod.write_report(rows, args.out)
    model_names = [m[0] for m in models]
    out = Path(args.out)
    for kind in kinds:
        plot_path = out.with_name(f"{out.stem}_plot_{kind}.dat")
        report_mod.write_plot_data(rows, kind, model_names, plot_path)
    print(f"wrote {len(rows)} rows to {args.out}")
    return EXIT_OK


_COMMANDS = {"sample": cmd_sample, "train": cmd_train,
             "denoise": cmd_denoise, "bench": cmd_bench}
_ERROR_CODES = (
    (ContractError, EXIT_CONTRACT),
    (DataError, EXIT_DATA),
    (CodecError, EXIT_CODEC),
    (PersistenceError, EXIT_PERSISTENCE),
)


def main(argv=None):
    parser = _build_parser()
    args = parser.parse_args(argv)
    try:
        args = _apply_config(args)
        return _COMMANDS[args.command](args)
    except _UsageError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except PatchDenoiseError as exc:
        print(f"error: {exc}", file=sys.stderr)
        for klass, code in _ERROR_CODES:
            if isinstance(exc, klass):
                return code
        return EXIT_DATA
    except FileNotFoundError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_DATA


if __name__ == "__main__":
    sys.exit(main())
