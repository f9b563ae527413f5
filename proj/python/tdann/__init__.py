"""Adversarial domain adaptation toolkit: DANN and its transductive
extension TransDANN, with divergence estimation utilities.

The heavy lifting lives in the compiled `_tdann` extension; this package
re-exports its public surface.
"""

from tdann._tdann import (
    ContractError,
    CycleRecord,
    CycleTrace,
    DimensionError,
    FormatError,
    Model,
    NumericError,
    assign_interim_labels,
    assignment_log_likelihood,
    cross_entropy,
    estimate_class_budget,
    generate_shifted,
    lambda_schedule,
    proxy_distance,
    softmax,
    theorem2_bound,
    train_dann,
    train_transdann,
)

__all__ = [
    "ContractError",
    "CycleRecord",
    "CycleTrace",
    "DimensionError",
    "FormatError",
    "Model",
    "NumericError",
    "assign_interim_labels",
    "assignment_log_likelihood",
    "cross_entropy",
    "estimate_class_budget",
    "generate_shifted",
    "lambda_schedule",
    "proxy_distance",
    "softmax",
    "theorem2_bound",
    "train_dann",
    "train_transdann",
]
