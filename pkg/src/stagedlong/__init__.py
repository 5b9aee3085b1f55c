"""Staged trees and chain event graphs for longitudinal categorical data."""
from .ceg import Ceg, build_ceg, compute_positions, dumps, export_graph, loads
from .data import (
    MISSING,
    Dataset,
    VariableSchema,
    complete_cases,
    load_dataset,
    load_example,
    load_schema,
    project_margin,
    transform_cumulative_sum,
    transform_difference_outcome,
    with_roles,
)
from .errors import (
    ArgumentError,
    ParseError,
    SizeError,
    StagedTreeError,
    StateError,
    ValidationError,
)
from .longitudinal import (
    DagAssumptions,
    FitResult,
    StagingDiff,
    compare_stagings,
    conditional_probability,
    dag_template,
    dag_to_initial_staging,
    event_probability,
    fit_full,
    fit_marginal_sequence,
    fit_with_markov_assumptions,
    parse_edge_list,
)
from .scoring import (
    PriorSpec,
    assign_mass_conserving_prior,
    estimate_probabilities,
    merge_log_bayes_factor,
    stage_log_ml,
    staging_log_score,
)
from .selection import (
    SelectionTrace,
    ahc_select,
    apply_zero_sample_rule,
    default_hyperstage,
    exhaustive_select,
)
from .staged import StagedTree
from .staging import Hyperstage, Staging
from .tree import EventTree, build_event_tree

__version__ = "0.1.0"
