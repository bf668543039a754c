"""Stochastic configuration of hidden nodes under a weighted supervisory constraint.

One call to :func:`build_round` grows a network node by node. Every candidate
node ``(w, b)`` is drawn uniformly from ``[-lam, lam]^(d+1)`` for each scope
``lam`` on an ascending ladder and scored against the weighted residual
``e~ = Theta (H beta - T)``::

    xi_q = (e~_q . h~)^2 / (h~ . h~) - (1 - r - mu_L) * (e~_q . e~_q)

with ``h~ = Theta h`` and ``mu_L = (1 - r) / (L + 1)``. A candidate is
admissible when ``min_q xi_q >= 0``; among the admissible candidates of the
first scope that produces any, the one with the largest ``sum_q xi_q`` wins.
When no scope yields a candidate, ``r`` is relaxed towards 1.

Random stream: ``numpy.random.Generator`` (PCG64 via ``default_rng``). Each
scope level draws ``p_max x (d + 1)`` uniforms in one call, row by row, the
first ``d`` entries of a row being ``w`` and the last ``b``. The relaxation
increment is one further uniform draw.
"""

import enum
import math
from dataclasses import dataclass, field

import numpy as np

from .exceptions import ContractViolation, DegenerateCandidate
from .model import ActivationKind, HiddenNode, ScnModel, activate, hidden_matrix
from .numerics import weighted_least_squares

DEFAULT_SCOPES = (0.5, 1.0, 5.0, 10.0, 30.0, 50.0, 100.0, 150.0, 200.0)


@dataclass(frozen=True)
class ScnConfig:
    """Hyperparameters of one node-growing round.

    ``epsilon`` bounds the Frobenius norm of the *weighted* residual.
    ``r_gap_floor`` stops relaxation once ``1 - r`` drops below it.
    ``solver`` picks the output-weight route, see
    :func:`rscn.numerics.weighted_least_squares`.
    """

    l_max: int = 100
    epsilon: float = 1e-6
    p_max: int = 100
    scopes: tuple = DEFAULT_SCOPES
    r0: float = 0.9
    seed: int | None = None
    r_gap_floor: float = 1e-6
    solver: str = "sqrt"

    def __post_init__(self):
        object.__setattr__(self, "scopes", tuple(float(s) for s in self.scopes))
        if not 0.0 < self.r0 < 1.0:
            raise ContractViolation(f"r0 must lie in (0, 1), got {self.r0}")
        if self.l_max < 1:
            raise ContractViolation("l_max must be >= 1")
        if self.p_max < 1:
            raise ContractViolation("p_max must be >= 1")
        if not self.epsilon >= 0:
            raise ContractViolation("epsilon must be >= 0")
        s = np.asarray(self.scopes)
        if s.size == 0 or np.any(s <= 0) or np.any(np.diff(s) <= 0):
            raise ContractViolation("scopes must be non-empty, positive and strictly ascending")


@dataclass(frozen=True)
class CandidateScore:
    xi_per_output: np.ndarray
    xi_total: float

    @property
    def admissible(self):
        return bool(np.min(self.xi_per_output) >= 0.0)


def candidate_score(e_weighted, h_weighted, r, mu_l):
    """Score a single candidate node against the weighted residual.

    Parameters
    ----------
    e_weighted : array-like of shape (N, m) or (N,)
    h_weighted : array-like of shape (N,)
    r : float in (0, 1)
    mu_l : float >= 0

    Raises
    ------
    DegenerateCandidate
        If ``h_weighted`` is identically zero.
    """
    e = np.asarray(e_weighted, dtype=float)
    if e.ndim == 1:
        e = e[:, None]
    h = np.asarray(h_weighted, dtype=float).ravel()
    if h.shape[0] != e.shape[0]:
        raise ContractViolation("residual and node output lengths differ")
    hh = float(h @ h)
    if hh == 0.0:
        raise DegenerateCandidate("weighted node output is identically zero")
    xi = (e.T @ h) ** 2 / hh - (1.0 - r - mu_l) * np.sum(e * e, axis=0)
    return CandidateScore(xi, float(np.sum(xi)))


def _batch_scores(e, ee, h_w, r, mu_l):
    """Vectorised scores for P candidates; ``h_w`` is (N, P). Returns (P, m)."""
    hh = np.einsum("ij,ij->j", h_w, h_w)
    xi = h_w.T @ e
    xi *= xi
    with np.errstate(divide="ignore", invalid="ignore"):
        xi /= hh[:, None]
    xi -= (1.0 - r - mu_l) * ee[None, :]
    xi[hh == 0.0] = -np.inf
    return xi


@dataclass(frozen=True)
class NodeCandidate:
    """Winner of one configuration attempt."""

    node: HiddenNode
    score: CandidateScore
    scope: float
    h: np.ndarray


def _preactivation(x, w, b, out, activation):
    if activation is ActivationKind.SIGMOID:
        # sigmoid(z) = 0.5 + 0.5 tanh(z / 2); halving w and b is exact
        w = 0.5 * w
        b = 0.5 * b
    if x.shape[1] == 1:
        np.multiply(x, w.T, out=out)  # K = 1 GEMM is slow
    else:
        np.matmul(x, w.T, out=out)
    out += b
    if activation is ActivationKind.SIGMOID:
        np.tanh(out, out=out)
        out *= 0.5
        out += 0.5
    else:
        activate(activation, out, out=out)
    return out


class _Workspace:
    # reused (N, P) buffers; fresh large temporaries dominate the cost otherwise
    def __init__(self, n, p):
        self.h = np.empty((n, p))
        self.h_w = np.empty((n, p))


def try_configure_node(e_weighted, x, cfg, r, mu_l, rng, sqrt_weights=None,
                       activation=ActivationKind.SIGMOID, workspace=None):
    """Search the scope ladder for an admissible node.

    Returns the best admissible candidate of the first scope that yields one,
    or ``None`` when no scope does (or the residual is exactly zero).
    """
    e = np.asarray(e_weighted, dtype=float)
    if e.ndim == 1:
        e = e[:, None]
    x = np.asarray(x, dtype=float)
    n, d = x.shape
    if not np.any(e):
        return None
    ws = workspace or _Workspace(n, cfg.p_max)
    root = None if sqrt_weights is None else np.asarray(sqrt_weights, dtype=float)[:, None]
    ee = np.einsum("ij,ij->j", e, e)
    for lam in cfg.scopes:
        draws = rng.uniform(-lam, lam, size=(cfg.p_max, d + 1))
        w, b = draws[:, :d], draws[:, d]
        h = _preactivation(x, w, b, ws.h, activation)
        h_w = h if root is None else np.multiply(root, h, out=ws.h_w)
        xi = _batch_scores(e, ee, h_w, r, mu_l)
        ok = np.min(xi, axis=1) >= 0.0
        if not ok.any():
            continue
        totals = np.where(ok, xi.sum(axis=1), -np.inf)
        k = int(np.argmax(totals))
        score = CandidateScore(xi[k].copy(), float(xi[k].sum()))
        return NodeCandidate(HiddenNode(w[k], b[k]), score, lam, h[:, k].copy())
    return None


class Termination(enum.Enum):
    EPSILON = "epsilon reached"
    L_MAX = "l_max reached"
    R_CEILING = "r relaxation exhausted"


@dataclass(frozen=True)
class NodeRecord:
    scope: float
    attempts: int
    r: float
    xi_total: float
    xi_min: float
    weighted_residual_norm: float
    residual_norm: float
    validation_rmse: float | None = None


@dataclass
class BuildTrace:
    """Per-node history of one round.

    ``selected_nodes`` is the size of the returned network; it is smaller than
    ``len(records)`` when a validation set picked an earlier prefix.
    """

    records: list = field(default_factory=list)
    termination: Termination | None = None
    initial_weighted_norm: float = 0.0
    initial_norm: float = 0.0
    selected_nodes: int = 0

    @property
    def weighted_norms(self):
        return [self.initial_weighted_norm] + [rec.weighted_residual_norm for rec in self.records]


def _as_2d(a):
    a = np.asarray(a, dtype=float)
    return a[:, None] if a.ndim == 1 else a


def build_round(x, t, weights, cfg, rng=None, activation=ActivationKind.SIGMOID, normalization=None,
                validation=None):
    """Grow a network from scratch under fixed penalty weights.

    Parameters
    ----------
    x : array-like of shape (N, d)
    t : array-like of shape (N, m)
    weights : array-like of shape (N,) or None
        Penalty weights ``theta``; ``None`` means all ones.
    cfg : ScnConfig
    rng : numpy.random.Generator, optional
        Defaults to ``default_rng(cfg.seed)``.
    validation : tuple of (x_val, t_val), optional
        Clean held-out data. Growth still runs to termination, but the
        returned network is the node prefix with the lowest validation RMSE.

    Returns
    -------
    model : ScnModel
    trace : BuildTrace
    """
    x = _as_2d(x)
    t = _as_2d(t)
    n, d = x.shape
    m = t.shape[1]
    if n == 0:
        raise ContractViolation("cannot build on an empty training set")
    if t.shape[0] != n:
        raise ContractViolation(f"x has {n} rows but t has {t.shape[0]}")
    theta = np.ones(n) if weights is None else np.asarray(weights, dtype=float).ravel()
    if theta.shape[0] != n:
        raise ContractViolation(f"expected {n} penalty weights, got {theta.shape[0]}")
    if np.any(theta < 0):
        raise ContractViolation("penalty weights must be non-negative")
    if rng is None:
        rng = np.random.default_rng(cfg.seed)
    root = np.sqrt(theta)
    uniform = bool(np.all(theta == 1.0))
    ws = _Workspace(n, cfg.p_max)

    e = -t
    e_w = root[:, None] * e
    trace = BuildTrace(initial_weighted_norm=float(np.linalg.norm(e_w)),
                       initial_norm=float(np.linalg.norm(e)))
    if validation is not None:
        x_val, t_val = (_as_2d(a) for a in validation)
        best = (math.inf, 0, np.zeros((0, m)))
    w_rows, biases, h_cols, hv_cols = [], [], [], []
    beta = np.zeros((0, m))
    norm_w = trace.initial_weighted_norm

    while True:
        if norm_w <= cfg.epsilon or norm_w == 0.0:
            trace.termination = Termination.EPSILON
            break
        big_l = len(biases) + 1
        if big_l > cfg.l_max:
            trace.termination = Termination.L_MAX
            break
        r = cfg.r0
        attempts = 0
        found = None
        while found is None:
            attempts += 1
            mu = (1.0 - r) / (big_l + 1)
            found = try_configure_node(e_w, x, cfg, r, mu, rng, None if uniform else root,
                                       activation, ws)
            if found is None:
                r = r + rng.uniform(0.0, 1.0 - r)
                if 1.0 - r < cfg.r_gap_floor:
                    break
        if found is None:
            trace.termination = Termination.R_CEILING
            break
        w_rows.append(found.node.w)
        biases.append(found.node.b)
        h_cols.append(found.h)
        h_mat = np.column_stack(h_cols)
        beta_new = weighted_least_squares(h_mat, theta, t, method=cfg.solver)
        e_new = h_mat @ beta_new - t
        e_w_new = root[:, None] * e_new
        norm_new = float(np.linalg.norm(e_w_new))
        if norm_new <= norm_w:
            beta, e, e_w, norm_w = beta_new, e_new, e_w_new, norm_new
        else:
            # ill-conditioned solve came out worse than the previous optimum;
            # [beta; 0] is feasible and reproduces it exactly
            beta = np.vstack([beta, np.zeros((1, m))])
        val_rmse = None
        if validation is not None:
            hv_cols.append(activate(activation, x_val @ found.node.w + found.node.b))
            val_rmse = float(np.sqrt(np.mean((np.column_stack(hv_cols) @ beta - t_val) ** 2)))
            if val_rmse < best[0]:
                best = (val_rmse, len(biases), beta)
        trace.records.append(NodeRecord(
            scope=found.scope, attempts=attempts, r=r,
            xi_total=found.score.xi_total, xi_min=float(np.min(found.score.xi_per_output)),
            weighted_residual_norm=norm_w, residual_norm=float(np.linalg.norm(e)),
            validation_rmse=val_rmse,
        ))

    keep = len(biases)
    if validation is not None and keep:
        _, keep, beta = best
    trace.selected_nodes = keep
    model = ScnModel(np.array(w_rows[:keep]).reshape(keep, d), np.array(biases[:keep]), beta,
                     d, m, activation, normalization)
    return model, trace


def refit_output_weights(model, x, t, weights, solver="sqrt"):
    """Re-solve only the output weights of ``model`` under new penalty weights."""
    h = hidden_matrix(model.weights, model.biases, _as_2d(x), model.activation)
    return model.with_beta(weighted_least_squares(h, weights, _as_2d(t), method=solver))
