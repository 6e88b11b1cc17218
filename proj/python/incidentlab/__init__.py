"""Synthetic traffic incident data and detection experiments."""

from ._core import (
    FlowModelParams,
    IoError,
    KsResult,
    Objective,
    ParseError,
    PreconditionError,
    RoadNetwork,
    TreeEnsemble,
    TreeEnsembleConfig,
    ValidationError,
    auc_roc,
    confusion,
    contiguous_sensor_pairs,
    fit_counts,
    fit_demand,
    ks_two_sample,
    load_feature_table,
    load_network,
    parse_network,
    parse_tree_ensemble,
    run_pipeline,
    train_tree_ensemble,
)

__all__ = [name for name in dir() if not name.startswith("_")]
