"""Multilayer correlation clustering: relaxations, rounding algorithms and a benchmark harness."""

from .baselines import aggregate, aggregate_pr, pick_a_best
from .errors import (
    CertificateError,
    Deadline,
    InfeasibleLP,
    InstanceFormatError,
    MLCCError,
    ModeError,
    NotConverged,
    SolverTimeout,
    UnboundedLP,
)
from .exact import ExactResult, bell, brute_force, exact_clustering
from .instance import (
    Clustering,
    Mode,
    MultilayerInstance,
    Norm,
    canonicalize_general,
    disagreement,
    disagreements,
    objective,
    read_instance,
    validate,
    write_instance,
)
from .pivot import kwik_cluster, lp_kwik_cluster, pick_best, threshold_round
from .region_growing import choose_radius, certify_region_growing, grow_regions, region_grow
from .relax import PseudoMetric, RelaxationSolution, solve_relaxation

__version__ = "0.1.0"
