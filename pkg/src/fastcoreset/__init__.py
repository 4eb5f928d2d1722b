"""Coresets for (k, z)-clustering in near-linear time.

Pipeline: a Johnson-Lindenstrauss distance estimator (:mod:`.sketch`) drives
a successive-sampling center set (:mod:`.centers`), which anchors either the
importance-sampling coreset (:mod:`.importance`) or the ring/group coreset
(:mod:`.groups`).  :mod:`.evaluation` measures distortion and runtime.
"""
from .centers import CenterGenConfig, CenterGenResult, center_set_gen, coverage_radius
from .core import (
    CenterSet,
    ClusteringParams,
    InputError,
    PointSet,
    WeightedPointSet,
    cost_z,
    dist_z,
    nearest_batch,
    point_to_set,
)
from .data import (
    FormatError,
    gen_gaussian_mixture,
    kmeanspp_seed,
    load_coreset,
    load_points,
    save_coreset,
    save_points,
    save_report,
)
from .evaluation import EvalReport, bench, empirical_distortion
from .groups import (
    GroupCoresetConfig,
    cluster_stats,
    coreset_gen_group,
    group_sample,
    partition_groups,
    partition_rings,
    sensitivity_sample,
)
from .importance import CoresetConfig, ScoreTable, assign_and_score, coreset_gen, sample_coreset
from .sketch import DistanceEstimator, sketch_dim

__version__ = "0.1.0"
