"""Synthetic data, k-means++ seeding, and point/coreset file formats.

Binary layout (little-endian)::

    magic   4 bytes   b"CSET" (points) or b"CSWT" (weighted points)
    version u32       1
    n       u64
    d       u64
    data    n*d f64   row-major
    weights n   f64   CSWT only
"""
from __future__ import annotations

import csv
import io
import json
import struct
from pathlib import Path

import numpy as np

from .core import (
    CenterSet,
    InputError,
    PointSet,
    WeightedPointSet,
    as_points,
    check_power,
    make_rng,
    nearest_batch,
    powered_from_sq,
)

MAGIC_POINTS = b"CSET"
MAGIC_WEIGHTED = b"CSWT"
FORMAT_VERSION = 1
_HEADER = struct.Struct("<4sIQQ")

TAG_MIXTURE = 0x6A55
TAG_KMEANSPP = 0x4B50


class FormatError(InputError):
    """File content does not match the expected layout."""


def gen_gaussian_mixture(n: int, d: int, k_true: int, spread: float = 10.0,
                         sigma: float = 1.0, seed: int = 0) -> PointSet:
    """``k_true`` centers uniform in ``[-spread, spread]^d``; points assigned round-robin plus N(0, sigma^2) noise."""
    if not (n >= k_true >= 1 and d >= 1):
        raise InputError(f"need n >= k_true >= 1 and d >= 1, got n={n}, k_true={k_true}, d={d}")
    if spread < 0 or sigma < 0:
        raise InputError("spread and sigma must be non-negative")
    rng = make_rng(seed, TAG_MIXTURE)
    centers = rng.uniform(-spread, spread, size=(k_true, d))
    labels = np.arange(n) % k_true
    noise = rng.standard_normal((n, d)) * sigma
    return PointSet(centers[labels] + noise)


def kmeanspp_seed(U, k: int, z: float = 2.0, seed: int = 0, rng: np.random.Generator | None = None) -> CenterSet:
    """D^z seeding: each new center drawn with probability proportional to its current cost.

    Once every point costs zero the remaining centers are drawn uniformly from
    points not yet chosen.
    """
    U = as_points(U)
    z = check_power(z)
    if isinstance(k, bool) or int(k) != k or not 1 <= k <= U.n:
        raise InputError(f"need 1 <= k <= n, got k={k}, n={U.n}")
    rng = rng if rng is not None else make_rng(seed, TAG_KMEANSPP)
    X = U.data
    chosen = [int(rng.integers(U.n))]
    taken = np.zeros(U.n, dtype=bool)
    taken[chosen[0]] = True
    diff = X - X[chosen[0]]
    best_sq = np.sum(diff * diff, axis=1)
    for _ in range(1, k):
        w = powered_from_sq(best_sq, z)
        total = float(np.sum(w))
        if total > 0:
            nxt = int(np.searchsorted(np.cumsum(w), rng.random() * total, side="right"))
            nxt = min(nxt, U.n - 1)
            while w[nxt] == 0:  # guards the cumsum edge at rounding boundaries
                nxt -= 1
        else:
            free = np.flatnonzero(~taken)
            nxt = int(free[rng.integers(free.size)])
        chosen.append(nxt)
        taken[nxt] = True
        diff = X - X[nxt]
        np.minimum(best_sq, np.sum(diff * diff, axis=1), out=best_sq)
    return CenterSet.from_indices(U, chosen)


def single_center_cost(U, z: float = 2.0) -> float:
    """Cost with the coordinate-wise mean as the only center."""
    U = as_points(U)
    _, c = nearest_batch(U, U.data.mean(axis=0, keepdims=True), z)
    return float(np.sum(c))


# ---- binary ---------------------------------------------------------------

def _write_binary(path: Path, magic: bytes, matrix: np.ndarray, weights=None) -> None:
    n, d = matrix.shape
    with open(path, "wb") as fh:
        fh.write(_HEADER.pack(magic, FORMAT_VERSION, n, d))
        fh.write(np.ascontiguousarray(matrix, dtype="<f8").tobytes())
        if weights is not None:
            fh.write(np.ascontiguousarray(weights, dtype="<f8").tobytes())


def _read_binary(raw: bytes, path) -> tuple[bytes, np.ndarray, np.ndarray | None]:
    if len(raw) < _HEADER.size:
        raise FormatError(f"{path}: file shorter than the {_HEADER.size}-byte header")
    magic, version, n, d = _HEADER.unpack_from(raw, 0)
    if magic not in (MAGIC_POINTS, MAGIC_WEIGHTED):
        raise FormatError(f"{path}: bad magic {magic!r} at offset 0")
    if version != FORMAT_VERSION:
        raise FormatError(f"{path}: unsupported version {version} at offset 4")
    if n < 1 or d < 1:
        raise FormatError(f"{path}: header declares n={n}, d={d}")
    body = n * d + (n if magic == MAGIC_WEIGHTED else 0)
    expected = _HEADER.size + 8 * body
    if len(raw) != expected:
        raise FormatError(f"{path}: expected {expected} bytes for n={n}, d={d}, found {len(raw)}")
    values = np.frombuffer(raw, dtype="<f8", offset=_HEADER.size).astype(np.float64)
    matrix = values[: n * d].reshape(n, d)
    bad = np.flatnonzero(~np.isfinite(values))
    if bad.size:
        raise FormatError(f"{path}: non-finite value at byte offset {_HEADER.size + 8 * int(bad[0])}")
    weights = values[n * d :] if magic == MAGIC_WEIGHTED else None
    return magic, matrix, weights


# ---- csv ------------------------------------------------------------------

def _parse_csv(text: str, path) -> tuple[list[str] | None, np.ndarray]:
    rows = [r for r in csv.reader(io.StringIO(text)) if r and any(c.strip() for c in r)]
    if not rows:
        raise FormatError(f"{path}: no data rows")
    header = None
    try:
        [float(c) for c in rows[0]]
    except ValueError:
        header = [c.strip() for c in rows[0]]
        rows = rows[1:]
    if not rows:
        raise FormatError(f"{path}: header but no data rows")
    width = len(header) if header is not None else len(rows[0])
    out = np.empty((len(rows), width))
    first_line = 2 if header is not None else 1
    for i, r in enumerate(rows):
        line = first_line + i
        if len(r) != width:
            raise FormatError(f"{path}: line {line}: expected {width} columns, found {len(r)}")
        try:
            out[i] = [float(c) for c in r]
        except ValueError as exc:
            raise FormatError(f"{path}: line {line}: {exc}") from None
        if not np.all(np.isfinite(out[i])):
            raise FormatError(f"{path}: line {line}: non-finite value")
    return header, out


def _write_csv(path: Path, matrix: np.ndarray, weights=None) -> None:
    d = matrix.shape[1]
    header = [f"x{j}" for j in range(d)] + (["weight"] if weights is not None else [])
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(header)
        for i in range(matrix.shape[0]):
            row = [repr(float(v)) for v in matrix[i]]
            if weights is not None:
                row.append(repr(float(weights[i])))
            w.writerow(row)


def _is_csv(path: Path, fmt: str | None) -> bool:
    if fmt is not None:
        if fmt not in ("csv", "binary"):
            raise InputError(f"unknown format {fmt!r}")
        return fmt == "csv"
    return path.suffix.lower() == ".csv"


# ---- public IO ------------------------------------------------------------

def save_points(points, path, fmt: str | None = None) -> None:
    path = Path(path)
    points = as_points(points)
    if _is_csv(path, fmt):
        _write_csv(path, points.data)
    else:
        _write_binary(path, MAGIC_POINTS, points.data)


def save_coreset(ws: WeightedPointSet, path, fmt: str | None = None) -> None:
    path = Path(path)
    if _is_csv(path, fmt):
        _write_csv(path, ws.points.data, ws.weights)
    else:
        _write_binary(path, MAGIC_WEIGHTED, ws.points.data, ws.weights)


def _load(path):
    path = Path(path)
    raw = path.read_bytes()
    if raw[:4] in (MAGIC_POINTS, MAGIC_WEIGHTED):
        _, matrix, weights = _read_binary(raw, path)
        return matrix, weights, None, True
    if path.suffix.lower() != ".csv":
        # binary by extension, so a wrong magic is a format error rather than a CSV parse
        raise FormatError(f"{path}: bad magic {raw[:4]!r} at offset 0")
    try:
        text = raw.decode("utf-8")
    except UnicodeDecodeError as exc:
        raise FormatError(f"{path}: not UTF-8 text") from exc
    header, matrix = _parse_csv(text, path)
    return matrix, None, header, False


def load_points(path) -> PointSet:
    """Read a point file (binary by magic bytes, CSV by ``.csv`` extension)."""
    matrix, _, header, _ = _load(path)
    if header is not None and header[-1].lower() == "weight":
        matrix = matrix[:, :-1]
    return PointSet(matrix)


def load_coreset(path) -> WeightedPointSet:
    """Read a weighted file; CSV weights come from the last column.

    A plain binary point file loads with unit weights.
    """
    matrix, weights, header, binary = _load(path)
    if binary and weights is None:
        weights = np.ones(matrix.shape[0])
    if weights is None:
        if header is None and matrix.shape[1] < 2:
            raise FormatError(f"{path}: no weight column")
        if header is not None and header[-1].lower() != "weight":
            raise FormatError(f"{path}: last CSV column must be 'weight'")
        matrix, weights = matrix[:, :-1], matrix[:, -1]
    return WeightedPointSet(PointSet(matrix), weights)


def save_report(report, path) -> None:
    data = report.to_dict() if hasattr(report, "to_dict") else report
    Path(path).write_text(json.dumps(data, indent=2, sort_keys=True) + "\n", encoding="utf-8")
