"""Binary persistence for trained models and patch corpora.

One container format serves both.  Layout, byte-exact:

    offset 0   8 bytes   magic b"PDNZBIN\\x00"
    offset 8   u32 LE    format version (currently 1)
    offset 12  u64 LE    header length H
    offset 20  H bytes   JSON header, UTF-8, sorted keys:
                         {"kind": "grbm"|"gdbm"|"dae"|"corpus",
                          "patch_size": int,
                          "layer_sizes": [int, ...],
                          "metadata": {...},
                          "tensors": [{"name": str, "shape": [...],
                                       "dtype": "f8"|"i8"}, ...]}
    then                 tensor payloads, in header order, little-endian,
                         C row-major, no padding
    last 4     u32 LE    CRC-32 of every preceding byte

Round trips are bitwise exact; loads validate magic, version, kind, and
checksum and raise PersistenceError on any mismatch or truncation.
"""

import json
import struct
import zlib
from dataclasses import dataclass

import numpy as np

from ..errors import PersistenceError
from ..models.dae import DaeParams
from ..models.gdbm import GdbmParams
from ..models.grbm import GrbmParams

MAGIC = b"PDNZBIN\x00"
FORMAT_VERSION = 1
_DTYPES = {"f8": "<f8", "i8": "<i8"}


@dataclass
class PatchCorpus:
    """A sampled training corpus plus the manifest that regenerates it."""

    patch_size: int
    patches: np.ndarray   # (N, p*p) float64
    files: list           # source image paths, in sampling order
    anchors: np.ndarray   # (N, 3) int64: (file index, row, col)
    seed: int
    per_image: int


def _tensor_entries(obj):
    """(kind, patch-vector length, layer sizes, named tensors) per type."""
    if isinstance(obj, GrbmParams):
        tensors = [("W", obj.W), ("b", obj.b), ("c", obj.c),
                   ("sigma2", np.asarray(obj.sigma2))]
        return "grbm", obj.n_visible, [obj.n_hidden], tensors
    if isinstance(obj, GdbmParams):
        tensors = [("W", obj.W), ("b", obj.b),
                   ("sigma2", np.asarray(obj.sigma2))]
        tensors += [(f"U{l}", u) for l, u in enumerate(obj.U)]
        tensors += [(f"c{l}", c) for l, c in enumerate(obj.c)]
        return "gdbm", obj.n_visible, obj.layer_sizes, tensors
    if isinstance(obj, DaeParams):
        tensors = []
        tensors += [(f"W{k}", w) for k, w in enumerate(obj.W)]
        tensors += [(f"enc_bias{k}", v) for k, v in enumerate(obj.enc_bias)]
        tensors += [(f"dec_bias{k}", v) for k, v in enumerate(obj.dec_bias)]
        return "dae", obj.n_visible, obj.layer_sizes, tensors
    raise PersistenceError(f"cannot persist object of type {type(obj).__name__}")


def _write_container(path, kind, patch_size, layer_sizes, metadata, tensors):
    entries = []
    payloads = []
    for name, arr in tensors:
        arr = np.asarray(arr)
        code = "i8" if np.issubdtype(arr.dtype, np.integer) else "f8"
        arr = arr.astype(_DTYPES[code])
        entries.append({"name": name, "shape": list(arr.shape), "dtype": code})
        payloads.append(np.ascontiguousarray(arr).tobytes())
    header = json.dumps(
        {"kind": kind, "patch_size": int(patch_size),
         "layer_sizes": [int(s) for s in layer_sizes],
         "metadata": metadata or {}, "tensors": entries},
        sort_keys=True, separators=(",", ":")).encode("utf-8")
    body = MAGIC + struct.pack("<IQ", FORMAT_VERSION, len(header)) + header
    body += b"".join(payloads)
    body += struct.pack("<I", zlib.crc32(body) & 0xFFFFFFFF)
    with open(path, "wb") as fh:
        fh.write(body)


def _read_container(path):
    with open(path, "rb") as fh:
        data = fh.read()
    if len(data) < len(MAGIC) + 12 + 4:
        raise PersistenceError(f"file too short to be a model file: {path}")
    if data[:len(MAGIC)] != MAGIC:
        raise PersistenceError(f"bad magic in {path}")
    (stored_crc,) = struct.unpack("<I", data[-4:])
    if zlib.crc32(data[:-4]) & 0xFFFFFFFF != stored_crc:
        raise PersistenceError(f"checksum failure in {path}")
    version, header_len = struct.unpack(
        "<IQ", data[len(MAGIC):len(MAGIC) + 12])
    if version != FORMAT_VERSION:
        raise PersistenceError(
            f"format version {version} not supported (expected {FORMAT_VERSION})")
    pos = len(MAGIC) + 12
    try:
        header = json.loads(data[pos:pos + header_len].decode("utf-8"))
    except (ValueError, UnicodeDecodeError) as exc:
        raise PersistenceError(f"corrupt header in {path}: {exc}") from None
    pos += header_len
    tensors = {}
    for entry in header["tensors"]:
        dtype = np.dtype(_DTYPES[entry["dtype"]])
        count = int(np.prod(entry["shape"], dtype=np.int64)) if entry["shape"] else 1
        nbytes = count * dtype.itemsize
        if pos + nbytes > len(data) - 4:
            raise PersistenceError(
                f"truncated tensor {entry['name']!r} in {path}")
        arr = np.frombuffer(data[pos:pos + nbytes], dtype=dtype)
        tensors[entry["name"]] = arr.reshape(entry["shape"]).copy()
        pos += nbytes
    if pos != len(data) - 4:
        raise PersistenceError(f"trailing bytes after tensors in {path}")
    return header, tensors


def save_model(params, path, patch_size=None, metadata=None):
    """Persist a GRBM, GDBM, or DAE with its training metadata."""
    kind, n_visible, layer_sizes, tensors = _tensor_entries(params)
    if patch_size is None:
        patch_size = int(round(np.sqrt(n_visible)))
    _write_container(path, kind, patch_size, layer_sizes, metadata, tensors)


def load_model(path, expect_kind=None):
    """Load a model file; returns (params, info dict).

    ``info`` carries kind, patch_size, layer_sizes, and the stored
    metadata.  Pass ``expect_kind`` to enforce the stored model kind.
    """
    header, tensors = _read_container(path)
    kind = header["kind"]
    if expect_kind is not None and kind != expect_kind:
        raise PersistenceError(
            f"kind mismatch: file holds {kind!r}, expected {expect_kind!r}")
    try:
        if kind == "grbm":
            params = GrbmParams(W=tensors["W"], b=tensors["b"], c=tensors["c"],
                                sigma2=float(tensors["sigma2"]))
        elif kind == "gdbm":
            n_layers = len(header["layer_sizes"])
            params = GdbmParams(
                W=tensors["W"], b=tensors["b"],
                U=[tensors[f"U{l}"] for l in range(n_layers - 1)],
                c=[tensors[f"c{l}"] for l in range(n_layers)],
                sigma2=float(tensors["sigma2"]))
        elif kind == "dae":
            n_layers = len(header["layer_sizes"])
            params = DaeParams(
                W=[tensors[f"W{k}"] for k in range(n_layers)],
                enc_bias=[tensors[f"enc_bias{k}"] for k in range(n_layers)],
                dec_bias=[tensors[f"dec_bias{k}"] for k in range(n_layers)])
        else:
            raise PersistenceError(f"file holds a {kind!r}, not a model")
    except KeyError as exc:
        raise PersistenceError(f"missing tensor {exc} in {path}") from None
    info = {"kind": kind, "patch_size": header["patch_size"],
            "layer_sizes": header["layer_sizes"],
            "metadata": header.get("metadata", {})}
    return params, info


def save_corpus(corpus: PatchCorpus, path):
    """Persist a sampled patch corpus with its regeneration manifest."""
    metadata = {"files": list(corpus.files), "seed": int(corpus.seed),
                "per_image": int(corpus.per_image)}
    tensors = [("patches", corpus.patches),
               ("anchors", np.asarray(corpus.anchors, dtype=np.int64))]
    _write_container(path, "corpus", corpus.patch_size,
                     [corpus.patches.shape[1]], metadata, tensors)


def load_corpus(path):
    """Load a corpus file saved by save_corpus."""
    header, tensors = _read_container(path)
    if header["kind"] != "corpus":
        raise PersistenceError(
            f"kind mismatch: file holds {header['kind']!r}, expected 'corpus'")
    meta = header.get("metadata", {})
    return PatchCorpus(
        patch_size=header["patch_size"], patches=tensors["patches"],
        files=meta.get("files", []), anchors=tensors["anchors"],
        seed=meta.get("seed", 0), per_image=meta.get("per_image", 0))
