"""Coordination-graph generation and graph-ordered multi-agent policies."""

from acgm._core import (
    CgsEnv,
    CoordGameEnv,
    CyclicGraphError,
    ConfigError,
    FormatError,
    NavEnv,
    acyclicity_grad,
    acyclicity_value,
    cgs_reward,
    depth_grad,
    depth_value,
    edge_count,
    evaluate_checkpoint,
    find_cycle,
    fixed_baseline_dag,
    is_acyclic,
    longest_path_edges,
    matexp,
    matexp_trace,
    nilpotent_index,
    parents_of,
    repair_to_dag,
    topological_order,
    train_config_text,
)

__all__ = [
    "CgsEnv",
    "CoordGameEnv",
    "CyclicGraphError",
    "ConfigError",
    "FormatError",
    "NavEnv",
    "acyclicity_grad",
    "acyclicity_value",
    "cgs_reward",
    "depth_grad",
    "depth_value",
    "edge_count",
    "evaluate_checkpoint",
    "find_cycle",
    "fixed_baseline_dag",
    "is_acyclic",
    "longest_path_edges",
    "matexp",
    "matexp_trace",
    "nilpotent_index",
    "parents_of",
    "repair_to_dag",
    "topological_order",
    "train_config_text",
]
