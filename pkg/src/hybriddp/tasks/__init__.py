"""Hybrid-model protocols and constructive reductions."""

from .concat import ConcatHypothesis, ConcatProtocol, concat_learn, concat_sizes
from .one_out import OneOutProtocol, one_out_of_2d_parity, one_out_sizes
from .parity_thresh import (
    ParityThreshHypothesis,
    ParityThreshProtocol,
    generalization_error,
    parity_thresh_hybrid,
    parity_thresh_sizes,
)
from .pcs import PcsProtocol, parity_chooses_secret, pcs_sizes
from .reductions import (
    CuratorFromHybrid,
    HybridTestProtocol,
    LocalFromHybrid,
    MajorityTestProtocol,
    build_curator_from_hybrid,
    build_local_from_hybrid,
    hypothesis_test_majority,
    profile_hybrid,
    reduce_learning_to_selection,
)
from .registry import TASKS, get_task
from .select_estimate import SelectEstimateResult, curator_only_select_estimate, select_then_estimate

__all__ = [
    "ConcatHypothesis",
    "ConcatProtocol",
    "CuratorFromHybrid",
    "HybridTestProtocol",
    "LocalFromHybrid",
    "MajorityTestProtocol",
    "OneOutProtocol",
    "ParityThreshHypothesis",
    "ParityThreshProtocol",
    "PcsProtocol",
    "SelectEstimateResult",
    "TASKS",
    "build_curator_from_hybrid",
    "build_local_from_hybrid",
    "concat_learn",
    "concat_sizes",
    "curator_only_select_estimate",
    "generalization_error",
    "get_task",
    "hypothesis_test_majority",
    "one_out_of_2d_parity",
    "one_out_sizes",
    "parity_chooses_secret",
    "parity_thresh_hybrid",
    "parity_thresh_sizes",
    "pcs_sizes",
    "profile_hybrid",
    "reduce_learning_to_selection",
    "select_then_estimate",
]
