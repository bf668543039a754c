"""Robust stochastic configuration networks.

Incrementally built single-hidden-layer networks whose random hidden nodes
must pass a supervisory inequality, with output weights fitted by weighted
least squares and per-sample penalty weights from a kernel density estimate
of the training residuals.
"""

__version__ = "0.1.0"

from .configurator import BuildTrace, ScnConfig, build_round, candidate_score, try_configure_node
from .estimators import RSCKDERegressor, RVFLRegressor, SCNRegressor
from .model import ScnModel, forward, load_model, save_model
from .robust import AoConfig, PenaltyWeights, compute_penalty_weights, train_rsc_kde

__all__ = [
    "AoConfig",
    "BuildTrace",
    "PenaltyWeights",
    "RSCKDERegressor",
    "RVFLRegressor",
    "SCNRegressor",
    "ScnConfig",
    "ScnModel",
    "build_round",
    "candidate_score",
    "compute_penalty_weights",
    "forward",
    "load_model",
    "save_model",
    "train_rsc_kde",
    "try_configure_node",
]
