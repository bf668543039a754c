"""Fixed-basis random-feature regressors used as comparison learners.

Both learners draw ``L`` hidden nodes once, uniformly from
``[-lambda, lambda]^(d+1)`` (``d + 1`` uniforms per node, weights first),
with no supervisory constraint and no direct input-output links. The plain
variant solves ordinary least squares; the weighted variant alternates
residual-density weights and weighted least squares on the same basis.
"""

from dataclasses import dataclass

import numpy as np

from .configurator import _as_2d
from .exceptions import ContractViolation
from .model import ActivationKind, ScnModel, hidden_matrix
from .numerics import weighted_least_squares
from .robust import PenaltyWeights, compute_penalty_weights


@dataclass(frozen=True)
class RvflConfig:
    l: int = 100
    lam: float = 1.0
    seed: int | None = None
    weighted: bool = False
    ao_rounds: int = 3
    solver: str = "sqrt"

    def __post_init__(self):
        if self.l < 1:
            raise ContractViolation("l must be >= 1")
        if not self.lam > 0:
            raise ContractViolation("lam must be > 0")
        if self.ao_rounds < 0:
            raise ContractViolation("ao_rounds must be >= 0")


def _check(x, t):
    x = _as_2d(x)
    t = _as_2d(t)
    if x.shape[0] == 0:
        raise ContractViolation("cannot train on an empty training set")
    if t.shape[0] != x.shape[0]:
        raise ContractViolation(f"x has {x.shape[0]} rows but t has {t.shape[0]}")
    return x, t


def _draw_basis(d, cfg, rng):
    draws = rng.uniform(-cfg.lam, cfg.lam, size=(cfg.l, d + 1))
    return draws[:, :d], draws[:, d]


def train_rvfl(x, t, cfg, rng=None, normalization=None):
    """Random basis plus ordinary least-squares output weights."""
    x, t = _check(x, t)
    if rng is None:
        rng = np.random.default_rng(cfg.seed)
    w, b = _draw_basis(x.shape[1], cfg, rng)
    h = hidden_matrix(w, b, x)
    beta = weighted_least_squares(h, np.ones(x.shape[0]), t, method=cfg.solver)
    return ScnModel(w, b, beta, x.shape[1], t.shape[1], ActivationKind.SIGMOID, normalization)


def train_weighted_rvfl(x, t, cfg, rng=None, normalization=None):
    """Random basis, then ``ao_rounds`` rounds of density reweighting.

    Returns
    -------
    model : ScnModel
    weights : PenaltyWeights
        Weights used for the final output-layer solve (all ones when
        ``ao_rounds == 0``).
    """
    x, t = _check(x, t)
    if rng is None:
        rng = np.random.default_rng(cfg.seed)
    w, b = _draw_basis(x.shape[1], cfg, rng)
    h = hidden_matrix(w, b, x)
    weights = PenaltyWeights.uniform(x.shape[0])
    beta = weighted_least_squares(h, weights.theta, t, method=cfg.solver)
    for nu in range(1, cfg.ao_rounds + 1):
        weights = compute_penalty_weights(h @ beta - t, iteration=nu)
        beta = weighted_least_squares(h, weights.theta, t, method=cfg.solver)
    model = ScnModel(w, b, beta, x.shape[1], t.shape[1], ActivationKind.SIGMOID, normalization)
    return model, weights
