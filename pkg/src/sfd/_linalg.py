import numpy as np
from scipy.linalg import solve_triangular

from .errors import CollinearityError

RANK_TOL = 1e-10


def dependent_columns(X, names=None, tol=RANK_TOL):
    """Names of columns involved in a (near) linear dependence, or [] if none.

    Columns are scaled to unit norm first so the check does not depend on
    units of measurement.
    """
    X = np.asarray(X, dtype=float)
    n, p = X.shape
    names = list(names) if names is not None else [f"x{j}" for j in range(p)]
    if p == 0:
        return []
    norms = np.linalg.norm(X, axis=0)
    zero = norms == 0
    if zero.any():
        return [names[j] for j in np.flatnonzero(zero)]
    if n < p:
        return list(names)
    _, s, vt = np.linalg.svd(X / norms, full_matrices=False)
    small = s < tol * s[0]
    if not small.any():
        return []
    null = np.abs(vt[small]).max(axis=0)
    return [names[j] for j in np.flatnonzero(null > 1e-6)]


def check_rank(X, names=None):
    dep = dependent_columns(X, names)
    if dep:
        raise CollinearityError(f"design matrix is rank deficient; dependent columns: {dep}", dep)


def qr_lstsq(X, y):
    """Least squares via thin QR: solve R b = Q'y. Returns (b, R)."""
    Q, R = np.linalg.qr(X)
    b = solve_triangular(R, Q.T @ y)
    return b, R


def bread_from_r(R):
    """(X'X)^-1 from the triangular factor of X."""
    Rinv = solve_triangular(R, np.eye(R.shape[0]))
    return Rinv @ Rinv.T


def bread(X):
    _, R = np.linalg.qr(np.asarray(X, dtype=float))
    return bread_from_r(R)
