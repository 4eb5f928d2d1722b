"""Empirical distortion and runtime measurement.

Distortion is measured on random probe center sets, so a report can refute
the coreset property but never certify it.
"""
from __future__ import annotations

import statistics
import time
from dataclasses import asdict, dataclass, field, replace
from typing import Optional, Sequence

import numpy as np

from ._parallel import run_chunks
from .core import (
    ClusteringParams,
    InputError,
    WeightedPointSet,
    as_points,
    check_seed,
    cost_z,
    make_rng,
)
from .data import kmeanspp_seed
from .groups import GroupCoresetConfig, coreset_gen_group
from .importance import CoresetConfig, coreset_gen

STRATEGIES = ("uniform-from-data", "kmeanspp", "gaussian-random")
TAG_EVAL = 0xE7A1


@dataclass
class DistortionStats:
    mean: Optional[float]
    p95: Optional[float]
    max: Optional[float]
    evaluated: int
    skipped: int
    per_strategy: dict = field(default_factory=dict)


@dataclass
class EvalReport:
    method: str
    n: int
    d: int
    k: int
    z: float
    eps: float
    N: Optional[int]
    timings_ms: dict = field(default_factory=dict)
    distortion: dict = field(default_factory=lambda: asdict(DistortionStats(None, None, None, 0, 0)))
    strategies: list = field(default_factory=list)
    seed: int = 0
    extra: dict = field(default_factory=dict)

    def to_dict(self) -> dict:
        return asdict(self)


def draw_center_set(U, k: int, z: float, strategy: str, rng: np.random.Generator) -> np.ndarray:
    X = as_points(U).data
    if strategy == "uniform-from-data":
        return X[rng.choice(X.shape[0], size=k, replace=False)]
    if strategy == "kmeanspp":
        return kmeanspp_seed(X, k, z, rng=rng).centers
    if strategy == "gaussian-random":
        mu = X.mean(axis=0)
        sd = X.std(axis=0)
        return mu + rng.standard_normal((k, X.shape[1])) * sd
    raise InputError(f"unknown strategy {strategy!r}; choose from {STRATEGIES}")


def relative_error(U, coreset: WeightedPointSet, C, z: float) -> Optional[float]:
    """``|cost(coreset, C) - cost(U, C)| / cost(U, C)``, or None when ``cost(U, C) == 0``."""
    full = cost_z(U, C, z)
    if full <= 0:
        return None
    return abs(cost_z(coreset, C, z) - full) / full


def empirical_distortion(U, coreset: WeightedPointSet, params: ClusteringParams, trials: int = 50,
                         strategies: Sequence[str] = STRATEGIES, seed: int = 0) -> DistortionStats:
    """Relative cost error of ``coreset`` over ``trials`` probe center sets per strategy."""
    U = as_points(U)
    check_seed(seed)
    if trials < 1:
        raise InputError(f"trials must be >= 1, got {trials}")
    strategies = list(strategies)
    for s in strategies:
        if s not in STRATEGIES:
            raise InputError(f"unknown strategy {s!r}; choose from {STRATEGIES}")
    if coreset.d != U.d:
        raise InputError(f"coreset dimension {coreset.d} differs from data dimension {U.d}")
    jobs = [(si, t) for si in range(len(strategies)) for t in range(trials)]
    errors = np.full(len(jobs), np.nan)

    def work(start, stop):
        for j in range(start, stop):
            si, t = jobs[j]
            rng = make_rng(seed, TAG_EVAL, STRATEGIES.index(strategies[si]), t)
            C = draw_center_set(U, params.k, params.z, strategies[si], rng)
            err = relative_error(U, coreset, C, params.z)
            if err is not None:
                errors[j] = err

    run_chunks(work, len(jobs), 1)
    ok = ~np.isnan(errors)
    per = {}
    for si, s in enumerate(strategies):
        e = errors[si * trials : (si + 1) * trials]
        e = e[~np.isnan(e)]
        per[s] = {"mean": float(e.mean()) if e.size else None,
                  "max": float(e.max()) if e.size else None,
                  "evaluated": int(e.size)}
    good = errors[ok]
    if good.size == 0:
        return DistortionStats(None, None, None, 0, int(len(jobs)), per)
    return DistortionStats(
        mean=float(good.mean()),
        p95=float(np.percentile(good, 95)),
        max=float(good.max()),
        evaluated=int(good.size),
        skipped=int(len(jobs) - good.size),
        per_strategy=per,
    )


def _run(U, params, method, cfg, exact):
    if method == "is":
        cfg = replace(cfg or CoresetConfig(), exact=exact)
        return coreset_gen(U, params, cfg)
    if method == "group":
        cfg = replace(cfg or GroupCoresetConfig(), exact=exact)
        return coreset_gen_group(U, params, cfg)
    raise InputError(f"unknown method {method!r}")


def bench(U, params: ClusteringParams, cfg=None, repeats: int = 5, baseline: str = "both",
          method: str = "is") -> EvalReport:
    """Median per-phase wall-clock of the sketch pipeline and/or the exact-distance baseline.

    The baseline is the same pipeline with every sketch replaced by exact
    distances, so the comparison isolates the sketching.
    """
    U = as_points(U)
    if repeats < 3:
        raise InputError(f"repeats must be >= 3, got {repeats}")
    if baseline not in ("sketch", "exact", "both"):
        raise InputError(f"baseline must be sketch, exact or both, got {baseline!r}")
    pipelines = ["sketch", "exact"] if baseline == "both" else [baseline]
    timings: dict[str, float] = {}
    extra: dict = {"repeats": repeats}
    N_used = None
    for name in pipelines:
        runs: dict[str, list[float]] = {}
        for _ in range(repeats):
            t0 = time.perf_counter()
            coreset, diag = _run(U, params, method, cfg, exact=(name == "exact"))
            wall = (time.perf_counter() - t0) * 1e3
            for phase, ms in diag["timings_ms"].items():
                runs.setdefault(phase, []).append(ms)
            runs.setdefault("wall", []).append(wall)
            N_used = diag["N"]
            extra[f"{name}.num_centers"] = diag["num_centers"]
        for phase, values in runs.items():
            timings[f"{name}.{phase}"] = statistics.median(values)
    if baseline == "both":
        extra["speedup"] = timings["exact.wall"] / timings["sketch.wall"]
    seed = getattr(cfg, "seed", 0) if cfg is not None else 0
    return EvalReport(method=method, n=U.n, d=U.d, k=params.k, z=params.z, eps=params.eps,
                      N=N_used, timings_ms=timings, seed=seed, extra=extra)
