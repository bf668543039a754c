"""Dense linear algebra: SVD pseudoinverse and weighted least squares."""

import numpy as np

from .exceptions import ContractViolation, NumericalFailure


def _default_rcond(shape):
    return max(shape) * np.finfo(float).eps


def pinv(m, tol=0.0):
    """Moore-Penrose pseudoinverse via SVD.

    Parameters
    ----------
    m : array-like of shape (rows, cols)
    tol : float, default=0.0
        Relative cutoff. Singular values ``<= tol * sigma_max`` are treated as
        zero. ``0`` selects ``max(rows, cols) * eps``.

    Returns
    -------
    ndarray of shape (cols, rows)
    """
    a = np.asarray(m, dtype=float)
    if a.ndim != 2 or a.size == 0:
        raise ContractViolation(f"pinv needs a non-empty 2-D matrix, got shape {a.shape}")
    if tol < 0:
        raise ContractViolation("tol must be >= 0")
    rcond = tol if tol > 0 else _default_rcond(a.shape)
    try:
        u, s, vt = np.linalg.svd(a, full_matrices=False)
    except np.linalg.LinAlgError as exc:
        raise NumericalFailure(f"SVD did not converge: {exc}") from exc
    if s.size == 0 or s[0] == 0.0:
        return np.zeros((a.shape[1], a.shape[0]))
    keep = s > rcond * s[0]
    s_inv = np.zeros_like(s)
    s_inv[keep] = 1.0 / s[keep]
    return (vt.T * s_inv) @ u.T


def _check_wls_shapes(h, lam, t):
    h = np.asarray(h, dtype=float)
    lam = np.asarray(lam, dtype=float).ravel()
    t = np.asarray(t, dtype=float)
    if t.ndim == 1:
        t = t[:, None]
    if h.ndim != 2 or t.ndim != 2:
        raise ContractViolation("h and t must be 2-D")
    n = h.shape[0]
    if lam.shape[0] != n or t.shape[0] != n:
        raise ContractViolation(
            f"row mismatch: h has {n}, weights {lam.shape[0]}, targets {t.shape[0]}"
        )
    if np.any(lam < 0):
        raise ContractViolation("weights must be non-negative")
    return h, lam, t


def weighted_least_squares(h, lam, t, tol=0.0, method="normal"):
    """Solve ``argmin_beta (H beta - T)^T diag(lam) (H beta - T)``.

    Parameters
    ----------
    h : array-like of shape (N, L)
    lam : array-like of shape (N,)
        Non-negative per-sample weights (the diagonal of Lambda).
    t : array-like of shape (N, m) or (N,)
    tol : float, default=0.0
        Pseudoinverse cutoff, see :func:`pinv`.
    method : {"normal", "sqrt"}, default="normal"
        ``"normal"`` evaluates ``(H^T Lam H)^+ H^T Lam T`` as written.
        ``"sqrt"`` takes the pseudoinverse of ``sqrt(Lam) H`` instead, which
        has the same minimiser but squares a smaller condition number.

    Returns
    -------
    ndarray of shape (L, m)
    """
    h, lam, t = _check_wls_shapes(h, lam, t)
    if method == "normal":
        ht_lam = h.T * lam
        return pinv(ht_lam @ h, tol) @ (ht_lam @ t)
    if method == "sqrt":
        root = np.sqrt(lam)[:, None]
        return pinv(root * h, tol) @ (root * t)
    raise ContractViolation(f"unknown method {method!r}")
