"""Mode estimation from set-membership queries.

The package answers one question: given i.i.d. draws from a hidden
distribution over m classes that can only be probed through yes/no
membership tests ("is sample j in this set of classes?"), how cheaply can
the most likely class be identified?

Layers, bottom up:

- :mod:`mepf.distribution`: validated probability vectors, per-class decay
  rates and margins, benchmark families, and the theoretical
  queries-per-sample coefficients.
- :mod:`mepf.coding`: arena-backed binary code trees with optimal
  construction, online (Vitter-style) maintenance, and group merging.
- :mod:`mepf.oracle`: the membership-query interface, lazily sampled or
  replayed from a fixed list, with strict query accounting.
- :mod:`mepf.estimators`: the five search strategies, from a fixed-code
  baseline to round-based set elimination.
- :mod:`mepf.bench` / :mod:`mepf.report` / :mod:`mepf.cli`: reproducible
  Monte Carlo experiments, CSV/summary/figure output, and the ``mepf``
  command.
"""

from .bench import (
    AlgorithmStats,
    ExperimentConfig,
    ExperimentSummary,
    TrialRecord,
    config_text,
    emit_plot_data,
    execute_trials,
    parse_config,
    parse_distribution,
    run_experiment,
    summarize,
)
from .coding import (
    CodeTree,
    VertexCode,
    adaptive_tree,
    balanced_tree,
    build_huffman,
    check_balanced,
    code_of,
    depths,
    dump_tree,
    insert_new_symbol,
    merge_groups,
    tree_from_counts,
    vitter_increment,
    weighted_path_length,
)
from .distribution import (
    ALGORITHMS,
    GapVector,
    InformationProjection,
    ProbabilityVector,
    entropy_bits,
    gaps,
    half_mass_leader,
    information_projection,
    mode_error_bound,
    probability_vector,
    query_complexity_coefficient,
    rate_margin_sandwich,
    sample,
    two_close_leaders,
    zipf,
)
from .errors import (
    AlreadyObserved,
    DegenerateGap,
    DegenerateSet,
    EmptyInput,
    EmptyOrDegenerate,
    InvalidConfig,
    IoFailure,
    MepfError,
    MixedAxes,
    NegativeWeight,
    NoData,
    NonPositiveCount,
    NotYetObserved,
    ReplayExhausted,
    TiedMode,
    UnknownClass,
    ZeroRootValue,
)
from .estimators import (
    ModeEstimate,
    Partition,
    Schedule,
    adaptive_search,
    batch_tree_rebalance,
    elimination,
    empirical_mode,
    exhaustive_search,
    is_admissible,
    set_elimination,
    truncated_search,
)
from .oracle import QueryOracle, new_oracle, replay_oracle

__version__ = "0.1.0"

__all__ = [
    "ALGORITHMS",
    "AlgorithmStats",
    "AlreadyObserved",
    "CodeTree",
    "DegenerateGap",
    "DegenerateSet",
    "EmptyInput",
    "EmptyOrDegenerate",
    "ExperimentConfig",
    "ExperimentSummary",
    "GapVector",
    "InformationProjection",
    "InvalidConfig",
    "IoFailure",
    "MepfError",
    "MixedAxes",
    "ModeEstimate",
    "NegativeWeight",
    "NoData",
    "NonPositiveCount",
    "NotYetObserved",
    "Partition",
    "ProbabilityVector",
    "QueryOracle",
    "ReplayExhausted",
    "Schedule",
    "TiedMode",
    "TrialRecord",
    "UnknownClass",
    "VertexCode",
    "ZeroRootValue",
    "adaptive_search",
    "adaptive_tree",
    "balanced_tree",
    "batch_tree_rebalance",
    "build_huffman",
    "check_balanced",
    "code_of",
    "config_text",
    "depths",
    "dump_tree",
    "elimination",
    "emit_plot_data",
    "empirical_mode",
    "entropy_bits",
    "execute_trials",
    "exhaustive_search",
    "gaps",
    "half_mass_leader",
    "information_projection",
    "insert_new_symbol",
    "is_admissible",
    "merge_groups",
    "mode_error_bound",
    "new_oracle",
    "parse_config",
    "parse_distribution",
    "probability_vector",
    "query_complexity_coefficient",
    "rate_margin_sandwich",
    "replay_oracle",
    "run_experiment",
    "sample",
    "set_elimination",
    "summarize",
    "tree_from_counts",
    "truncated_search",
    "two_close_leaders",
    "vitter_increment",
    "weighted_path_length",
    "zipf",
]
