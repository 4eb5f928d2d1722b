"""Successive-sampling construction of a bicriteria center set.

Each round samples ``floor(alpha * k)`` of the remaining points, sketches
them, and peels off the ``beta`` fraction of remaining points closest to the
sample.  The samples of all rounds plus the final few survivors form ``V``,
of size ``O(k log(n / k))``, whose cost is within a constant factor of any
``k``-center solution.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .core import (
    CenterSet,
    InputError,
    as_points,
    check_power,
    check_seed,
    derive_seed,
    make_rng,
)
from .sketch import DEFAULT_C_M, DistanceEstimator

TAG_CENTER_ROUND = 0xCE17


@dataclass(frozen=True)
class CenterGenConfig:
    alpha: float = 8.0
    beta: float = 0.5
    eps0: float = 0.1
    delta0: float = 0.01
    seed: int = 0
    c_m: float = DEFAULT_C_M
    exact: bool = False  # exact distances instead of sketches (baseline)

    def __post_init__(self):
        if not self.alpha >= 1.0:
            raise InputError(f"alpha must be >= 1, got {self.alpha}")
        if not 0.0 < self.beta < 1.0:
            raise InputError(f"beta must lie in (0, 1), got {self.beta}")
        if not 0.0 < self.eps0 <= 0.1:
            raise InputError(f"eps0 must lie in (0, 0.1], got {self.eps0}")
        if not 0.0 < self.delta0 <= 0.1:
            raise InputError(f"delta0 must lie in (0, 0.1], got {self.delta0}")
        check_seed(self.seed)


@dataclass
class CenterGenResult:
    """Output of :func:`center_set_gen`.

    ``tau[x]`` indexes into ``V``; ``removed_round[x]`` is the round that
    peeled ``x`` off, or ``rounds`` for the survivors that joined ``V``
    directly.  ``dists[x]`` is the powered sketch distance used when ``x``
    was removed (0 for survivors).
    """

    V: CenterSet
    tau: np.ndarray
    rounds: int
    radii: list[float]
    removed_round: np.ndarray
    dists: np.ndarray
    remaining_sizes: list[int] = field(default_factory=list)


def coverage_radius(dists, beta: float) -> float:
    """Smallest value ``r`` of ``dists`` with at least ``ceil(beta * len)`` entries ``<= r``.

    Uses selection (``np.partition``), linear expected time.
    """
    d = np.asarray(dists, dtype=np.float64).reshape(-1)
    if d.size == 0:
        raise InputError("coverage_radius needs at least one distance")
    if not 0.0 < beta < 1.0:
        raise InputError(f"beta must lie in (0, 1), got {beta}")
    need = max(1, math.ceil(beta * d.size))
    return float(np.partition(d, need - 1)[need - 1])


def max_rounds(n: int, k: int, alpha: float, beta: float) -> int:
    """Upper bound on the loop count of :func:`center_set_gen`."""
    if n <= alpha * k:
        return 0
    return math.ceil(math.log(n / (alpha * k)) / math.log(1.0 / (1.0 - beta))) + 1


def center_set_gen(U, k: int, z: float, cfg: CenterGenConfig | None = None) -> CenterGenResult:
    cfg = cfg or CenterGenConfig()
    U = as_points(U)
    if isinstance(k, bool) or int(k) != k or k < 1:
        raise InputError(f"k must be a positive integer, got {k!r}")
    z = check_power(z)
    X = U.data
    n = U.n
    sample_size = math.floor(cfg.alpha * k)

    tau_point = np.arange(n, dtype=np.int64)  # tau as an index into U
    removed_round = np.full(n, -1, dtype=np.int64)
    dists = np.zeros(n)
    alive = np.arange(n, dtype=np.int64)
    v_parts: list[np.ndarray] = []
    radii: list[float] = []
    sizes = [n]
    rnd = 0

    while alive.size > cfg.alpha * k:
        rng = make_rng(cfg.seed, TAG_CENTER_ROUND, rnd)
        picks = rng.integers(0, alive.size, size=sample_size)
        S = alive[np.unique(picks)]
        est = DistanceEstimator(
            X[S],
            cfg.eps0 / z,
            cfg.delta0,
            seed=derive_seed(cfg.seed, TAG_CENTER_ROUND, rnd, 1),
            c_m=cfg.c_m,
            exact=cfg.exact,
        )
        nearest, dz = est.query_min_batch(X[alive], z)
        # a sampled point sits at distance 0 from itself
        in_sample = np.isin(alive, S)
        own_slot = np.searchsorted(S, alive[in_sample])
        nearest[in_sample] = own_slot
        dz[in_sample] = 0.0

        radius = coverage_radius(dz, cfg.beta)
        covered = dz <= radius
        removed = alive[covered]
        tau_point[removed] = S[nearest[covered]]
        removed_round[removed] = rnd
        dists[removed] = dz[covered]

        alive = alive[~covered]
        v_parts.append(S)
        radii.append(radius)
        rnd += 1
        sizes.append(int(alive.size))

    removed_round[alive] = rnd
    v_parts.append(alive)
    v_idx = np.concatenate(v_parts)
    position = np.empty(n, dtype=np.int64)
    position[v_idx] = np.arange(v_idx.size)
    tau = position[tau_point]
    return CenterGenResult(
        V=CenterSet.from_indices(U, v_idx),
        tau=tau,
        rounds=rnd,
        radii=radii,
        removed_round=removed_round,
        dists=dists,
        remaining_sizes=sizes,
    )
