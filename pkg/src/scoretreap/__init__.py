"""Score-respecting treaps and B-trees with a benchmark harness."""

from .distributions import (
    Distribution,
    cross_entropy,
    entropy,
    error_measures,
    kl,
    mae,
    noisy_scores,
    perturb,
)
from .dynamic import (
    SCHEMES,
    STRUCTURES,
    CostBreakdown,
    CrudeOracle,
    IntervalSetPriorityState,
    SequenceStats,
    compute_stats,
    cost_decomposition_check,
    crude_step,
    isp_step,
    run_dynamic,
)
from .em import (
    BlockStore,
    BTree,
    DetScoreForest,
    EMConfig,
    RankForest,
    TierForestBTreap,
    UpdateCost,
    em_report,
)
from .errors import ConfigError, DuplicateKeyError
from .oracle import (
    analytic_expected_depth,
    exhaustive_stats,
    naive_depths,
    optimal_static_bst_cost,
)
from .priorities import (
    RandomStream,
    WeightVector,
    btree_composite_priority,
    composite_priority,
    raw_score_priority,
    single_log_priority,
    static_opt_weights,
    tier_value,
)
from .sequences import (
    AccessSequence,
    TraceSpec,
    gen_distribution,
    gen_sequence,
    read_trace,
    write_trace,
)
from .treap import CostLedger, Priority, Treap

__version__ = "0.1.0"

__all__ = [
    "AccessSequence",
    "BTree",
    "BlockStore",
    "ConfigError",
    "CostBreakdown",
    "CostLedger",
    "CrudeOracle",
    "DetScoreForest",
    "Distribution",
    "DuplicateKeyError",
    "EMConfig",
    "IntervalSetPriorityState",
    "Priority",
    "RandomStream",
    "RankForest",
    "SCHEMES",
    "STRUCTURES",
    "SequenceStats",
    "TierForestBTreap",
    "TraceSpec",
    "Treap",
    "UpdateCost",
    "WeightVector",
    "analytic_expected_depth",
    "btree_composite_priority",
    "composite_priority",
    "compute_stats",
    "cost_decomposition_check",
    "cross_entropy",
    "crude_step",
    "em_report",
    "entropy",
    "error_measures",
    "exhaustive_stats",
    "gen_distribution",
    "gen_sequence",
    "isp_step",
    "kl",
    "mae",
    "naive_depths",
    "noisy_scores",
    "optimal_static_bst_cost",
    "perturb",
    "raw_score_priority",
    "read_trace",
    "run_dynamic",
    "single_log_priority",
    "static_opt_weights",
    "tier_value",
    "write_trace",
    "__version__",
]
