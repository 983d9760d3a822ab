"""Peer-prediction rewards for federated clients: delta checks, mechanism
payoffs, robustness closed forms and Shapley baselines."""

from ._kfca import (
    KfcaError,
    analytic_delta,
    binary_robustness,
    check_categorical,
    commitment_digest,
    empirical_delta,
    exact_shapley,
    expected_reward,
    mc_shapley,
    multiclass_robustness,
    profile_summary,
    run_cli,
)

__all__ = [
    "KfcaError",
    "analytic_delta",
    "binary_robustness",
    "check_categorical",
    "commitment_digest",
    "empirical_delta",
    "exact_shapley",
    "expected_reward",
    "mc_shapley",
    "multiclass_robustness",
    "profile_summary",
    "run_cli",
]
