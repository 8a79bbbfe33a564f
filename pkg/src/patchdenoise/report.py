"""Benchmark report: CSV rows, appended aggregate block, plot data files.

Schema (fixed):

    image_id,model,noise_kind,noise_level,psnr_noisy,psnr_wiener,psnr_model

After the data rows an aggregate block follows, introduced by the line
``# aggregates`` and its own header; it holds the median and standard
deviation of each PSNR column per (model, noise_kind, noise_level).
Aggregates are recomputed from the rows on load and verified.  A failed
cell carries an ``error:<name>`` token in its psnr_model field and is
excluded from aggregation.
"""

import math
from dataclasses import dataclass

import numpy as np

from .errors import PersistenceError

HEADER = "image_id,model,noise_kind,noise_level,psnr_noisy,psnr_wiener,psnr_model"
AGG_MARK = "# aggregates"
AGG_HEADER = ("model,noise_kind,noise_level,n_images,"
              "median_psnr_noisy,std_psnr_noisy,"
              "median_psnr_wiener,std_psnr_wiener,"
              "median_psnr_model,std_psnr_model")
AGG_TOL = 1e-9


@dataclass
class BenchRow:
    image_id: str
    model: str
    noise_kind: str
    noise_level: float
    psnr_noisy: float | str   # float, or an error token for a failed cell
    psnr_wiener: float | str
    psnr_model: float | str

    def failed(self):
        return any(isinstance(v, str) for v in
                   (self.psnr_noisy, self.psnr_wiener, self.psnr_model))


def _fmt(x):
    if isinstance(x, str):
        return x
    if math.isinf(x):
        return "inf"
    return f"{x:.6f}"


def _parse_psnr(tok):
    if tok.startswith("error:"):
        return tok
    return float(tok)


def sort_key(row: BenchRow):
    return (row.image_id, row.model, row.noise_kind, row.noise_level)


def compute_aggregates(rows):
    """Median/std per (model, kind, level), sample std (ddof=1, 0 if n=1).

    Rows carrying an error token in any PSNR column are excluded.
    """
    groups = {}
    for r in rows:
        if r.failed():
            continue
        groups.setdefault((r.model, r.noise_kind, r.noise_level), []).append(r)
    agg = []
    for key in sorted(groups):
        rs = groups[key]
        cols = []
        for getter in (lambda r: r.psnr_noisy, lambda r: r.psnr_wiener,
                       lambda r: r.psnr_model):
            vals = np.asarray([getter(r) for r in rs], dtype=np.float64)
            std = float(np.std(vals, ddof=1)) if len(vals) > 1 else 0.0
            cols.extend([float(np.median(vals)), std])
        agg.append((*key, len(rs), *cols))
    return agg


def _fmt_agg(x):
    if math.isinf(x):
        return "inf"
    return f"{x:.12g}"


def write_report(rows, path):
    """Write sorted rows plus the aggregate block; bytes are deterministic.

    Aggregates are computed from the row values as written (6 decimals),
    so recomputing them from a parsed report reproduces the block.
    """
    rows = sorted(rows, key=sort_key)
    lines = [HEADER]
    quantized = []
    for r in rows:
        fields = [r.image_id, r.model, r.noise_kind, _fmt(r.noise_level),
                  _fmt(r.psnr_noisy), _fmt(r.psnr_wiener), _fmt(r.psnr_model)]
        lines.append(",".join(fields))
        quantized.append(BenchRow(
            image_id=r.image_id, model=r.model, noise_kind=r.noise_kind,
            noise_level=float(fields[3]), psnr_noisy=_parse_psnr(fields[4]),
            psnr_wiener=_parse_psnr(fields[5]), psnr_model=_parse_psnr(fields[6])))
    lines.append(AGG_MARK)
    lines.append(AGG_HEADER)
    for entry in compute_aggregates(quantized):
        model, kind, level, n = entry[:4]
        lines.append(",".join([model, kind, _fmt(level), str(n)] +
                              [_fmt_agg(v) for v in entry[4:]]))
    with open(path, "w", newline="\n") as fh:
        fh.write("\n".join(lines) + "\n")


def load_report(path):
    """Parse a report and verify the aggregate block against the rows."""
    with open(path) as fh:
        lines = [ln.rstrip("\n") for ln in fh]
    if not lines or lines[0] != HEADER:
        raise PersistenceError(f"bad report header in {path}")
    rows = []
    i = 1
    while i < len(lines) and lines[i] != AGG_MARK:
        parts = lines[i].split(",")
        if len(parts) != 7:
            raise PersistenceError(f"bad report row: {lines[i]!r}")
        rows.append(BenchRow(
            image_id=parts[0], model=parts[1], noise_kind=parts[2],
            noise_level=float(parts[3]), psnr_noisy=_parse_psnr(parts[4]),
            psnr_wiener=_parse_psnr(parts[5]), psnr_model=_parse_psnr(parts[6])))
        i += 1
    stored = []
    if i < len(lines):
        if i + 1 >= len(lines) or lines[i + 1] != AGG_HEADER:
            raise PersistenceError(f"bad aggregate header in {path}")
        for ln in lines[i + 2:]:
            if not ln:
                continue
            parts = ln.split(",")
            stored.append((parts[0], parts[1], float(parts[2]), int(parts[3]),
                           *[float(v) for v in parts[4:]]))
        expected = compute_aggregates(rows)
        if len(stored) != len(expected):
            raise PersistenceError("aggregate block does not match rows")
        for s, e in zip(stored, expected):
            if s[:4] != e[:4] or any(abs(a - b) > AGG_TOL
                                     for a, b in zip(s[4:], e[4:])):
                raise PersistenceError(
                    f"aggregate mismatch for {s[:3]}: stored {s[4:]}, "
                    f"recomputed {e[4:]}")
    return rows, stored


def write_plot_data(rows, kind, models, path):
    """Median PSNR vs noise level for one noise kind, one column per model.

    The Wiener baseline is included as its own column.
    """
    levels = sorted({r.noise_level for r in rows if r.noise_kind == kind})
    med_model = {}
    med_wiener = {}
    for e in compute_aggregates([r for r in rows if r.noise_kind == kind]):
        model, _k, level = e[0], e[1], e[2]
        med_model[(model, level)] = e[8]
        med_wiener.setdefault(level, e[6])
    lines = ["level wiener " + " ".join(models)]
    for level in levels:
        vals = [f"{level:.6f}", _fmt(med_wiener.get(level, math.nan))]
        for m in models:
            vals.append(_fmt(med_model.get((m, level), math.nan)))
        lines.append(" ".join(vals))
    with open(path, "w", newline="\n") as fh:
        fh.write("\n".join(lines) + "\n")
