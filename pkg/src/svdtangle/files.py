"""Text persistence for sample paths and untangled decompositions.

A path directory holds ``path.json`` (metadata) and ``path.csv`` with one
row ``k,i,j,re,im`` per matrix entry per sample; indices are 1-based.
A decomposition directory holds ``decomposition.json`` plus ``U.csv``,
``S.csv``, ``V.csv`` and ``report.csv``; with strict output requested the
same factors appear again as ``strict_U.csv`` and so on. Floats are written
with 17 significant digits so every value round-trips exactly.
"""
from __future__ import annotations

import csv
import json
from pathlib import Path

import numpy as np

from .pathmat import MatrixSamplePath, SvdTriplet
from .untangle import UntangledPath

FORMAT_VERSION = 1
PATH_META = "path.json"
PATH_BODY = "path.csv"
DECOMP_META = "decomposition.json"
ENTRY_HEADER = ["k", "i", "j", "re", "im"]
REPORT_HEADER = ["k", "swapCount", "finalMetric", "avgCorrelation",
                 "degenerate", "blacklisted", "tieEncountered"]


class FileFormatError(ValueError):
    """A path or decomposition file is malformed or inconsistent."""


def fmt(x: float) -> str:
    return format(float(x), ".17g")


def _write_entries(fh, arrays):
    """``arrays`` has shape (K, R, C); writes every entry of every sample."""
    w = csv.writer(fh, lineterminator="\n")
    w.writerow(ENTRY_HEADER)
    K, R, C = arrays.shape
    for k in range(K):
        a = arrays[k]
        for i in range(R):
            for j in range(C):
                z = a[i, j]
                w.writerow([k + 1, i + 1, j + 1, fmt(z.real), fmt(z.imag)])


def _write_diagonals(fh, diags):
    w = csv.writer(fh, lineterminator="\n")
    w.writerow(ENTRY_HEADER)
    for k, d in enumerate(diags):
        for i, z in enumerate(d):
            w.writerow([k + 1, i + 1, i + 1, fmt(z.real), fmt(z.imag)])


def _read_entries(path: Path, shape, diagonal_only=False) -> np.ndarray:
    K, R, C = shape
    out = np.zeros(shape, dtype=complex)
    seen = np.zeros(shape, dtype=bool)
    try:
        with open(path, newline="") as fh:
            rows = csv.reader(fh)
            header = next(rows, None)
            if header != ENTRY_HEADER:
                raise FileFormatError(f"{path}: bad header {header}")
            count = 0
            for lineno, row in enumerate(rows, start=2):
                if len(row) != 5:
                    raise FileFormatError(f"{path}:{lineno}: expected 5 columns")
                k, i, j = (int(v) - 1 for v in row[:3])
                if not (0 <= k < K and 0 <= i < R and 0 <= j < C):
                    raise FileFormatError(f"{path}:{lineno}: index out of range")
                if diagonal_only and i != j:
                    raise FileFormatError(f"{path}:{lineno}: off-diagonal entry")
                if seen[k, i, j]:
                    raise FileFormatError(f"{path}:{lineno}: duplicate entry")
                seen[k, i, j] = True
                out[k, i, j] = complex(float(row[3]), float(row[4]))
                count += 1
    except (OSError, ValueError) as exc:
        if isinstance(exc, FileFormatError):
            raise
        raise FileFormatError(f"{path}: {exc}") from exc
    expected = K * min(R, C) if diagonal_only else K * R * C
    if count != expected:
        raise FileFormatError(f"{path}: expected {expected} rows, found {count}")
    return out


def _read_json(path: Path) -> dict:
    try:
        with open(path) as fh:
            return json.load(fh)
    except (OSError, ValueError) as exc:
        raise FileFormatError(f"{path}: {exc}") from exc


def _dims(meta: dict, path: Path) -> tuple[int, int, int]:
    try:
        K, M, N = int(meta["K"]), int(meta["M"]), int(meta["N"])
    except (KeyError, TypeError, ValueError) as exc:
        raise FileFormatError(f"{path}: missing or bad dimension {exc}") from exc
    if min(K, M, N) < 1:
        raise FileFormatError(f"{path}: dimensions must be >= 1")
    return K, M, N


def write_path(path: MatrixSamplePath, out_dir) -> Path:
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    meta = {
        "format": FORMAT_VERSION,
        "K": path.K, "M": path.M, "N": path.N,
        "T_s": path.sample_interval_s,
        "meta": path.meta,
    }
    with open(out / PATH_META, "w") as fh:
        json.dump(meta, fh, indent=2, sort_keys=True)
        fh.write("\n")
    with open(out / PATH_BODY, "w", newline="") as fh:
        _write_entries(fh, path.samples)
    return out


def read_path(in_dir) -> MatrixSamplePath:
    d = Path(in_dir)
    meta = _read_json(d / PATH_META)
    K, M, N = _dims(meta, d / PATH_META)
    samples = _read_entries(d / PATH_BODY, (K, M, N))
    try:
        ts = float(meta["T_s"])
    except (KeyError, TypeError, ValueError) as exc:
        raise FileFormatError(f"{d / PATH_META}: bad T_s") from exc
    return MatrixSamplePath(samples, ts, meta.get("meta", {}))


def _write_triplets(out: Path, prefix: str, triplets):
    with open(out / f"{prefix}U.csv", "w", newline="") as fh:
        _write_entries(fh, np.array([t.U for t in triplets]))
    with open(out / f"{prefix}S.csv", "w", newline="") as fh:
        _write_diagonals(fh, [t.sigma for t in triplets])
    with open(out / f"{prefix}V.csv", "w", newline="") as fh:
        _write_entries(fh, np.array([t.V for t in triplets]))


def _read_triplets(d: Path, prefix: str, K: int, M: int, N: int, canonical: bool):
    U = _read_entries(d / f"{prefix}U.csv", (K, M, M))
    S = _read_entries(d / f"{prefix}S.csv", (K, M, N), diagonal_only=True)
    V = _read_entries(d / f"{prefix}V.csv", (K, N, N))
    return [SvdTriplet(U[k], S[k], V[k], canonical=canonical) for k in range(K)]


def write_decomposition(untangled: UntangledPath, path: MatrixSamplePath, out_dir,
                        config: dict, reverse: bool = False) -> Path:
    """Persist an untangled path.

    Rows are indexed by the original sample number even when the path was
    parsed in reverse, so the factors reconstruct the source path file.
    """
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    K = len(untangled)

    def in_original_order(seq):
        return list(seq)[::-1] if reverse else list(seq)

    triplets = in_original_order(untangled.triplets)
    reports = in_original_order(untangled.reports)
    blacklist = sorted((K - k if reverse else k + 1) for k in untangled.blacklist)
    meta = {
        "format": FORMAT_VERSION,
        "K": K, "M": path.M, "N": path.N,
        "T_s": path.sample_interval_s,
        "meta": path.meta,
        "config": config,
        "direction": "reverse" if reverse else "forward",
        "blacklist": blacklist,
        "has_strict": untangled.strict is not None,
    }
    with open(out / DECOMP_META, "w") as fh:
        json.dump(meta, fh, indent=2, sort_keys=True)
        fh.write("\n")
    _write_triplets(out, "", triplets)
    if untangled.strict is not None:
        _write_triplets(out, "strict_", in_original_order(untangled.strict))
    with open(out / "report.csv", "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(REPORT_HEADER)
        for k, r in enumerate(reports):
            w.writerow([k + 1, r.swap_count, fmt(r.final_metric), fmt(r.avg_correlation),
                        int(r.degenerate), int(r.blacklisted), int(r.tie_encountered)])
    return out


class Decomposition:
    """A decomposition directory loaded back into memory."""

    def __init__(self, meta, triplets, strict, report_rows):
        self.meta = meta
        self.triplets = triplets
        self.strict = strict
        self.report_rows = report_rows

    @property
    def K(self) -> int:
        return len(self.triplets)

    @property
    def sample_interval_s(self) -> float:
        return float(self.meta["T_s"])

    @property
    def reverse(self) -> bool:
        return self.meta.get("direction") == "reverse"

    def sigma(self) -> np.ndarray:
        return np.array([t.sigma for t in self.triplets])

    def samples(self) -> np.ndarray:
        return np.array([t.U @ t.S @ t.V.conj().T for t in self.triplets])


def read_decomposition(in_dir) -> Decomposition:
    d = Path(in_dir)
    meta = _read_json(d / DECOMP_META)
    K, M, N = _dims(meta, d / DECOMP_META)
    triplets = _read_triplets(d, "", K, M, N, canonical=False)
    strict = None
    if meta.get("has_strict"):
        strict = _read_triplets(d, "strict_", K, M, N, canonical=True)
    rows = []
    try:
        with open(d / "report.csv", newline="") as fh:
            reader = csv.DictReader(fh)
            if reader.fieldnames != REPORT_HEADER:
                raise FileFormatError(f"{d / 'report.csv'}: bad header")
            for row in reader:
                rows.append({
                    "k": int(row["k"]),
                    "swapCount": int(row["swapCount"]),
                    "finalMetric": float(row["finalMetric"]),
                    "avgCorrelation": float(row["avgCorrelation"]),
                    "degenerate": bool(int(row["degenerate"])),
                    "blacklisted": bool(int(row["blacklisted"])),
                    "tieEncountered": bool(int(row["tieEncountered"])),
                })
    except (OSError, ValueError, KeyError) as exc:
        if isinstance(exc, FileFormatError):
            raise
        raise FileFormatError(f"{d / 'report.csv'}: {exc}") from exc
    if len(rows) != K:
        raise FileFormatError(f"{d / 'report.csv'}: expected {K} rows, found {len(rows)}")
    return Decomposition(meta, triplets, strict, rows)
