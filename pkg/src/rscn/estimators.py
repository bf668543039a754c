"""scikit-learn compatible estimators wrapping the functional training API."""

import numpy as np
from sklearn.base import BaseEstimator, RegressorMixin
from sklearn.utils.validation import check_array, check_is_fitted, check_X_y

from .baselines import RvflConfig, train_rvfl, train_weighted_rvfl
from .configurator import DEFAULT_SCOPES, ScnConfig, build_round
from .model import forward
from .robust import AoConfig, train_rsc_kde


def _rng(random_state):
    if isinstance(random_state, np.random.Generator):
        return random_state
    return np.random.default_rng(random_state)


class _NetworkRegressor(RegressorMixin, BaseEstimator):
    """Shared input handling and prediction for fitted ``ScnModel`` holders."""

    def _validate_fit(self, X, y):
        X, y = check_X_y(X, y, multi_output=True, y_numeric=True, dtype=np.float64)
        self._y_1d = y.ndim == 1
        self.n_features_in_ = X.shape[1]
        return X, (y[:, None] if self._y_1d else y)

    def predict(self, X):
        """Evaluate the fitted network.

        Parameters
        ----------
        X : array-like of shape (n_samples, n_features)

        Returns
        -------
        y : ndarray of shape (n_samples,) or (n_samples, n_outputs)
        """
        check_is_fitted(self, "model_")
        X = check_array(X, dtype=np.float64)
        if X.shape[1] != self.n_features_in_:
            raise ValueError(f"X has {X.shape[1]} features, expected {self.n_features_in_}")
        if self.model_.n_nodes == 0:
            out = np.zeros((X.shape[0], self.model_.output_dim))
        else:
            out = forward(self.model_, X)
        return out[:, 0] if self._y_1d else out


class SCNRegressor(_NetworkRegressor):
    """Stochastic configuration network, grown node by node.

    Parameters
    ----------
    l_max : int, default=100
        Maximum number of hidden nodes.
    epsilon : float, default=1e-6
        Stop once the (weighted) training residual Frobenius norm drops to this.
    p_max : int, default=100
        Random candidates drawn per scope level.
    scopes : sequence of float, default=(0.5, 1, 5, 10, 30, 50, 100, 150, 200)
        Ascending half-widths of the uniform sampling interval.
    r0 : float, default=0.9
        Initial contraction parameter of the supervisory inequality.
    solver : {"sqrt", "normal"}, default="sqrt"
    random_state : int, numpy Generator or None

    Attributes
    ----------
    model_ : ScnModel
    trace_ : BuildTrace
    """

    def __init__(self, l_max=100, epsilon=1e-6, p_max=100, scopes=DEFAULT_SCOPES, r0=0.9,
                 solver="sqrt", random_state=None):
        self.l_max = l_max
        self.epsilon = epsilon
        self.p_max = p_max
        self.scopes = scopes
        self.r0 = r0
        self.solver = solver
        self.random_state = random_state

    def _scn_config(self):
        return ScnConfig(l_max=self.l_max, epsilon=self.epsilon, p_max=self.p_max,
                         scopes=tuple(self.scopes), r0=self.r0, solver=self.solver)

    def fit(self, X, y, sample_weight=None, X_val=None, y_val=None):
        """Grow the network; ``sample_weight`` plays the role of fixed penalty weights.

        A clean ``(X_val, y_val)`` pair, if given, picks the best node count.
        """
        X, y = self._validate_fit(X, y)
        validation = None
        if X_val is not None:
            validation = (check_array(X_val), np.asarray(y_val, dtype=float).reshape(len(X_val), -1))
        self.model_, self.trace_ = build_round(X, y, sample_weight, self._scn_config(),
                                               _rng(self.random_state), validation=validation)
        return self


class RSCKDERegressor(SCNRegressor):
    """Robust SCN: node growth alternated with residual-density reweighting.

    Parameters
    ----------
    i_max : int, default=5
        Maximum number of alternating rounds.
    warm_start : bool, default=False
        Keep the first round's hidden nodes and only re-solve output weights
        in later rounds, instead of rebuilding the network each round.
    stop_on_validation_rise : bool, default=True
        With validation data, stop after ``patience`` consecutive rounds of
        rising validation RMSE and keep the best round.
    patience : int, default=2
    select_nodes_by_validation : bool, default=True
        With validation data, truncate each round to its best node count.

    Other parameters are those of :class:`SCNRegressor`.

    Attributes
    ----------
    model_ : ScnModel
    weights_ : PenaltyWeights
    trace_ : AoTrace
    """

    def __init__(self, l_max=100, epsilon=1e-6, p_max=100, scopes=DEFAULT_SCOPES, r0=0.9,
                 solver="sqrt", random_state=None, i_max=5, warm_start=False,
                 stop_on_validation_rise=True, patience=2, select_nodes_by_validation=True):
        super().__init__(l_max=l_max, epsilon=epsilon, p_max=p_max, scopes=scopes, r0=r0,
                         solver=solver, random_state=random_state)
        self.i_max = i_max
        self.warm_start = warm_start
        self.stop_on_validation_rise = stop_on_validation_rise
        self.patience = patience
        self.select_nodes_by_validation = select_nodes_by_validation

    def fit(self, X, y, X_val=None, y_val=None):
        X, y = self._validate_fit(X, y)
        validation = None
        if X_val is not None:
            validation = (check_array(X_val), np.asarray(y_val, dtype=float).reshape(len(X_val), -1))
        cfg = AoConfig(
            i_max=self.i_max, inner=self._scn_config(), validation=validation,
            stop_on_validation_rise=self.stop_on_validation_rise, warm_start=self.warm_start,
            patience=self.patience, select_nodes_by_validation=self.select_nodes_by_validation,
        )
        self.model_, self.weights_, self.trace_ = train_rsc_kde(X, y, cfg, _rng(self.random_state))
        return self


class RVFLRegressor(_NetworkRegressor):
    """Random vector functional-link regressor without direct links.

    Parameters
    ----------
    n_hidden : int, default=100
    scope : float, default=1.0
        Weights and biases are drawn from ``U[-scope, scope]``.
    weighted : bool, default=False
        Use residual-density reweighting on the fixed basis.
    ao_rounds : int, default=3
        Reweighting rounds when ``weighted``.
    solver : {"sqrt", "normal"}, default="sqrt"
    random_state : int, numpy Generator or None
    """

    def __init__(self, n_hidden=100, scope=1.0, weighted=False, ao_rounds=3, solver="sqrt",
                 random_state=None):
        self.n_hidden = n_hidden
        self.scope = scope
        self.weighted = weighted
        self.ao_rounds = ao_rounds
        self.solver = solver
        self.random_state = random_state

    def fit(self, X, y):
        X, y = self._validate_fit(X, y)
        cfg = RvflConfig(l=self.n_hidden, lam=self.scope, weighted=self.weighted,
                         ao_rounds=self.ao_rounds, solver=self.solver)
        rng = _rng(self.random_state)
        if self.weighted:
            self.model_, self.weights_ = train_weighted_rvfl(X, y, cfg, rng)
        else:
            self.model_ = train_rvfl(X, y, cfg, rng)
        return self
