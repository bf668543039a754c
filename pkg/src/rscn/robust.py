"""Residual-density penalty weights and the alternating-optimisation outer loop."""

import math
from dataclasses import dataclass, field

import numpy as np
from scipy.spatial.distance import cdist

from .configurator import ScnConfig, _as_2d, build_round, refit_output_weights
from .exceptions import ContractViolation
from .model import forward

TAU_FLOOR = 1e-8
_INV_SQRT_2PI = 1.0 / math.sqrt(2.0 * math.pi)


def gaussian_kernel(t):
    """Standard normal density ``exp(-t^2 / 2) / sqrt(2 pi)``."""
    return _INV_SQRT_2PI * np.exp(-0.5 * np.square(t))


@dataclass(frozen=True)
class KdeParams:
    bandwidth: float
    sigma_hat: float
    n: int


def bandwidth(residual_norms):
    """Rule-of-thumb window ``1.06 * sigma * N^(-1/5)``, floored at ``TAU_FLOOR``.

    ``sigma`` is the sample standard deviation (divisor N - 1) of the given
    per-sample residual magnitudes; a single sample has zero spread.
    """
    v = np.asarray(residual_norms, dtype=float).ravel()
    n = v.size
    if n < 1:
        raise ContractViolation("bandwidth needs at least one residual")
    sigma = float(np.std(v, ddof=1)) if n > 1 else 0.0
    tau = 1.06 * sigma * n ** (-0.2)
    return KdeParams(max(tau, TAU_FLOOR), sigma, n)


@dataclass(frozen=True)
class PenaltyWeights:
    """Per-sample weights ``theta``; ``sqrt`` is the diagonal of Theta."""

    theta: np.ndarray
    iteration: int = 0
    kde: KdeParams | None = None

    @property
    def sqrt(self):
        return np.sqrt(self.theta)

    @classmethod
    def uniform(cls, n):
        return cls(np.ones(n), 0, None)


def compute_penalty_weights(residuals, iteration=0):
    """Kernel density of each sample's residual vector among all residuals.

    ``theta_i = (1 / (tau N)) * sum_k K(||e_i - e_k|| / tau)``, with ``tau``
    from :func:`bandwidth` over the per-sample residual norms.
    """
    e = _as_2d(residuals)
    n = e.shape[0]
    if n < 1:
        raise ContractViolation("need at least one residual")
    kde = bandwidth(np.linalg.norm(e, axis=1))
    dist = cdist(e, e)
    theta = gaussian_kernel(dist / kde.bandwidth).sum(axis=1) / (kde.bandwidth * n)
    return PenaltyWeights(theta, iteration, kde)


@dataclass(frozen=True)
class AoConfig:
    """Outer-loop settings.

    ``validation`` is an optional clean ``(x_val, t_val)`` pair. With
    ``stop_on_validation_rise`` the loop stops after validation RMSE rises
    ``patience`` rounds in a row and the best-validation round is returned.
    ``select_nodes_by_validation`` also truncates each round's network to
    its best-validation node count. ``warm_start`` keeps the hidden nodes of
    the first round and only re-solves output weights afterwards.
    """

    i_max: int = 5
    inner: ScnConfig = field(default_factory=ScnConfig)
    validation: tuple | None = None
    stop_on_validation_rise: bool = True
    warm_start: bool = False
    patience: int = 2
    select_nodes_by_validation: bool = True

    def __post_init__(self):
        if self.i_max < 1:
            raise ContractViolation("i_max must be >= 1")


@dataclass(frozen=True)
class AoRound:
    nu: int
    n_nodes: int
    weighted_residual_norm: float
    residual_norm: float
    validation_rmse: float | None
    theta_min: float
    theta_mean: float
    theta_max: float
    bandwidth: float | None
    build: object = None


@dataclass
class AoTrace:
    rounds: list = field(default_factory=list)
    best_round: int | None = None
    stopped_early: bool = False


def _rmse(pred, truth):
    return float(np.sqrt(np.mean((pred - truth) ** 2)))


def train_rsc_kde(x, t, cfg, rng=None, normalization=None):
    """Alternate network construction and residual-density reweighting.

    Round ``nu`` builds a network under the current weights (round 1 uses
    all ones), evaluates the unweighted training residual, and, if another
    round follows, turns that residual into new weights.

    Returns
    -------
    model : ScnModel
    weights : PenaltyWeights
        The weights the returned model's output layer was solved with.
    trace : AoTrace
    """
    x = _as_2d(x)
    t = _as_2d(t)
    n = x.shape[0]
    if n < 1:
        raise ContractViolation("need at least one training sample")
    if t.shape[0] != n:
        raise ContractViolation(f"x has {n} rows but t has {t.shape[0]}")
    if rng is None:
        rng = np.random.default_rng(cfg.inner.seed)
    x_val = t_val = None
    if cfg.validation is not None:
        x_val, t_val = (_as_2d(a) for a in cfg.validation)

    weights = PenaltyWeights.uniform(n)
    trace = AoTrace()
    model = None
    fitted = weights
    best = None
    rises = 0
    prev_val = None
    e_w_norm = math.inf

    for nu in range(1, cfg.i_max + 1):
        if e_w_norm <= cfg.inner.epsilon:
            break
        if cfg.warm_start and model is not None and model.n_nodes:
            model = refit_output_weights(model, x, t, weights.theta, cfg.inner.solver)
            build = None
        else:
            model, build = build_round(x, t, weights.theta, cfg.inner, rng, normalization=normalization,
                                       validation=cfg.validation if cfg.select_nodes_by_validation else None)
        fitted = weights
        if model.n_nodes == 0:
            trace.rounds.append(AoRound(nu, 0, build.initial_weighted_norm, build.initial_norm, None,
                                        float(weights.theta.min()), float(weights.theta.mean()),
                                        float(weights.theta.max()), None, build))
            break
        e = forward(model, x) - t
        e_w_norm = float(np.linalg.norm(weights.sqrt[:, None] * e))
        val = None if x_val is None else _rmse(forward(model, x_val), t_val)
        trace.rounds.append(AoRound(
            nu, model.n_nodes, e_w_norm, float(np.linalg.norm(e)), val,
            float(weights.theta.min()), float(weights.theta.mean()), float(weights.theta.max()),
            None if weights.kde is None else weights.kde.bandwidth, build,
        ))
        if val is not None:
            if best is None or val < best[2]:
                best = (model, fitted, val, nu)
            rises = rises + 1 if prev_val is not None and val > prev_val else 0
            prev_val = val
            if cfg.stop_on_validation_rise and rises >= cfg.patience:
                trace.stopped_early = True
                break
        if nu < cfg.i_max:
            weights = compute_penalty_weights(e, iteration=nu)

    if best is not None and cfg.stop_on_validation_rise:
        model, fitted, _, trace.best_round = best
    return model, fitted, trace
