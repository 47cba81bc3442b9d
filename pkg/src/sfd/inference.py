"""Covariance estimators for linear fits on (differenced) spatial designs.

All sandwich estimators use ``(X'X)^-1 S (X'X)^-1`` without degrees-of-freedom
corrections, except the cluster estimator which applies the usual
``G/(G-1) * (N-1)/(N-p)`` factor. Kernels are Bartlett throughout, which
keeps every estimate positive semidefinite and makes the one-dimensional
Conley estimator coincide with Newey-West.
"""

from __future__ import annotations

import re
import warnings
from dataclasses import dataclass

import numpy as np

from ._linalg import bread, check_rank, dependent_columns, qr_lstsq
from .errors import DomainError, SFDError

DEFAULT_NW_LAGS = 2


@dataclass(frozen=True)
class SEMethod:
    """Which covariance estimator to attach to a fit.

    kind is one of ``ols``, ``hc``, ``newey_west``, ``conley``, ``cluster``,
    ``bootstrap``, ``block_bootstrap``.
    """

    kind: str = "ols"
    lags: int = DEFAULT_NW_LAGS
    cutoff_x: float | None = None
    cutoff_y: float | None = None
    B: int = 1000
    seed: int = 0

    KINDS = ("ols", "hc", "newey_west", "conley", "cluster", "bootstrap", "block_bootstrap")

    def __post_init__(self):
        if self.kind not in self.KINDS:
            raise DomainError(f"unknown SE method {self.kind!r}; choose from {self.KINDS}")
        if self.kind == "newey_west" and self.lags < 1:
            raise DomainError("Newey-West lag must be >= 1")
        if self.kind == "conley":
            if self.cutoff_x is None or self.cutoff_y is None:
                raise DomainError("Conley standard errors need cutoff_x and cutoff_y")
            if not (self.cutoff_x > 0 and self.cutoff_y > 0):
                raise DomainError("Conley cutoffs must be positive")
        if self.kind in ("bootstrap", "block_bootstrap") and self.B < 100:
            raise DomainError("bootstrap needs B >= 100")

    @property
    def label(self):
        if self.kind == "newey_west":
            return f"newey_west(L={self.lags})"
        if self.kind == "conley":
            return f"conley({self.cutoff_x:g},{self.cutoff_y:g})"
        if self.kind in ("bootstrap", "block_bootstrap"):
            return f"{self.kind}(B={self.B},seed={self.seed})"
        return self.kind

    @classmethod
    def parse(cls, text):
        """Parse ``ols``, ``hc``, ``cluster``, ``newey-west[:L]``,
        ``conley:CX[,CY]``, ``bootstrap[:B[:SEED]]``, ``block-bootstrap[:B[:SEED]]``."""
        if isinstance(text, SEMethod):
            return text
        name, _, arg = str(text).strip().partition(":")
        name = name.lower().replace("-", "_")
        try:
            if name in ("ols", "hc", "cluster"):
                if arg:
                    raise ValueError
                return cls(name)
            if name in ("newey_west", "nw"):
                return cls("newey_west", lags=int(arg) if arg else DEFAULT_NW_LAGS)
            if name == "conley":
                parts = [float(p) for p in re.split(r"[,:]", arg) if p]
                if len(parts) == 1:
                    parts *= 2
                if len(parts) != 2:
                    raise ValueError
                return cls("conley", cutoff_x=parts[0], cutoff_y=parts[1])
            if name in ("bootstrap", "block_bootstrap"):
                parts = [int(p) for p in arg.split(":") if p] if arg else []
                B = parts[0] if parts else 1000
                seed = parts[1] if len(parts) > 1 else 0
                return cls(name, B=B, seed=seed)
        except ValueError:
            pass
        raise DomainError(f"cannot parse SE method {text!r}")

    def to_dict(self):
        d = {"kind": self.kind, "label": self.label}
        if self.kind == "newey_west":
            d["lags"] = self.lags
        elif self.kind == "conley":
            d.update(cutoff_x=self.cutoff_x, cutoff_y=self.cutoff_y)
        elif self.kind in ("bootstrap", "block_bootstrap"):
            d.update(B=self.B, seed=self.seed)
        return d


def _scores(X, e):
    return np.asarray(X, dtype=float) * np.asarray(e, dtype=float)[:, None]


def _sandwich(X, S):
    A = bread(X)
    V = A @ S @ A
    return (V + V.T) / 2


def ols_vcov(X, residuals):
    """Classical ``s^2 (X'X)^-1`` with ``s^2 = e'e / (n - p)``."""
    X = np.asarray(X, dtype=float)
    e = np.asarray(residuals, dtype=float)
    n, p = X.shape
    s2 = e @ e / (n - p) if n > p else np.nan
    return s2 * bread(X)


def hc_vcov(X, residuals):
    """White heteroskedasticity-robust covariance (HC0)."""
    U = _scores(X, residuals)
    return _sandwich(X, U.T @ U)


def newey_west(X, residuals, L=DEFAULT_NW_LAGS, channel_of_row=None):
    """Newey-West covariance with Bartlett weights ``1 - l/(L+1)``.

    Lag products are only formed between rows of the same channel; rows of a
    channel must be contiguous and in path order, as produced by the
    differencing module.
    """
    if L < 1:
        raise DomainError("Newey-West lag must be >= 1")
    U = _scores(X, residuals)
    n = len(U)
    chan = np.zeros(n, dtype=int) if channel_of_row is None else np.asarray(channel_of_row)
    if n:
        sizes = np.diff(np.flatnonzero(np.r_[True, chan[1:] != chan[:-1], True]))
        if L >= sizes.min():
            warnings.warn(
                f"Newey-West lag {L} >= shortest channel length {sizes.min()}; "
                "lags truncated within that channel", stacklevel=2)
    S = U.T @ U
    for l in range(1, min(L, n - 1) + 1):
        same = chan[l:] == chan[:-l]
        if not same.any():
            continue
        G = U[l:][same].T @ U[:-l][same]
        S += (1 - l / (L + 1)) * (G + G.T)
    return _sandwich(X, S)


def conley(X, residuals, positions, cutoff_x, cutoff_y, chunk=2048):
    """Conley spatial HAC with a product Bartlett kernel in x and y distance.

    Pairs may span channels. ``positions`` holds one (x, y) per row.
    """
    if not (cutoff_x > 0 and cutoff_y > 0):
        raise DomainError("Conley cutoffs must be positive")
    U = _scores(X, residuals)
    P = np.asarray(positions, dtype=float)
    n = len(U)
    S = np.zeros((U.shape[1], U.shape[1]))
    off_diag = 0.0
    for a in range(0, n, chunk):
        pa = P[a:a + chunk]
        kx = np.clip(1 - np.abs(pa[:, None, 0] - P[None, :, 0]) / cutoff_x, 0, None)
        ky = np.clip(1 - np.abs(pa[:, None, 1] - P[None, :, 1]) / cutoff_y, 0, None)
        K = kx * ky
        S += U[a:a + chunk].T @ (K @ U)
        off_diag += K.sum() - np.trace(K[:, a:a + chunk])
    if off_diag == 0 and n > 1:
        warnings.warn("Conley cutoffs below every inter-row spacing; result equals HC",
                      stacklevel=2)
    return _sandwich(X, (S + S.T) / 2)


def cluster_vcov(X, residuals, groups):
    """Cluster-robust covariance with finite-sample factor
    ``G/(G-1) * (N-1)/(N-p)``."""
    X = np.asarray(X, dtype=float)
    U = _scores(X, residuals)
    groups = np.asarray(groups)
    labels, inv = np.unique(groups, return_inverse=True)
    G = len(labels)
    if G < 2:
        raise DomainError("clustering needs at least 2 channels; use newey_west for one channel")
    sums = np.zeros((G, U.shape[1]))
    np.add.at(sums, inv, U)
    n, p = X.shape
    factor = G / (G - 1) * (n - 1) / (n - p)
    return factor * _sandwich(X, sums.T @ sums)


def _stream(seed, i):
    return np.random.default_rng(np.random.SeedSequence(seed, spawn_key=(i,)))


def bootstrap_vcov(X, y, B=1000, seed=0, mode="iid", groups=None):
    """Empirical covariance of B bootstrap OLS coefficient vectors.

    ``iid`` resamples rows; ``block`` resamples whole channels (``groups``)
    keeping the channel count. Draw ``a`` uses the stream
    ``SeedSequence(seed, spawn_key=(a,))``; rank-deficient resamples are
    redrawn, up to ``10 * B`` attempts in total.
    """
    if B < 100:
        raise DomainError("bootstrap needs B >= 100")
    X = np.asarray(X, dtype=float)
    y = np.asarray(y, dtype=float)
    n, p = X.shape
    if mode == "block":
        if groups is None:
            raise DomainError("block bootstrap needs channel labels")
        labels, inv = np.unique(np.asarray(groups), return_inverse=True)
        if len(labels) < 2:
            raise DomainError("block bootstrap needs at least 2 channels")
        members = [np.flatnonzero(inv == g) for g in range(len(labels))]
    elif mode != "iid":
        raise DomainError(f"unknown bootstrap mode {mode!r}")
    draws = []
    attempt = 0
    while len(draws) < B:
        if attempt >= 10 * B:
            raise SFDError(f"bootstrap gave up after {attempt} attempts "
                           f"({len(draws)} usable resamples)")
        rng = _stream(seed, attempt)
        attempt += 1
        if mode == "iid":
            idx = rng.integers(0, n, n)
        else:
            pick = rng.integers(0, len(members), len(members))
            idx = np.concatenate([members[g] for g in pick])
        Xb = X[idx]
        if len(idx) <= p or dependent_columns(Xb):
            continue
        draws.append(qr_lstsq(Xb, y[idx])[0])
    draws = np.array(draws)
    V = np.cov(draws, rowvar=False, ddof=1).reshape(p, p)
    return (V + V.T) / 2


@dataclass(frozen=True)
class YatchewVariance:
    """Difference-estimator variance ``1.5 s2 / N * omega^-1`` (slopes only).

    ``s2`` is the mean squared differenced residual and ``omega`` the mean
    outer product of the differenced regressors. Each converges to twice its
    levels counterpart (2 sigma^2 and 2 Omega) at fixed spacing; the factors
    cancel in ``vcov``. ``caveat`` flags that s2 is on the differenced scale.
    """

    s2: float
    omega: np.ndarray
    vcov: np.ndarray
    n: int
    caveat: bool = True


def yatchew_variance(design, residuals=None):
    """Asymptotic variance of the first-difference slope estimator.

    Parameters
    ----------
    design : DifferencedDesign (order 1) or a FitResult built on one
    residuals : array_like, optional
        Differenced residuals; taken from the fit, or from an OLS fit with
        intercept when a bare design is given.
    """
    from .estimation import FitResult, ols

    fit = design if isinstance(design, FitResult) else None
    if fit is not None:
        design = fit.design
    if design is None or design.order != 1:
        raise DomainError("yatchew_variance needs an order-1 differenced design")
    dX = np.asarray(design.dX, dtype=float)
    check_rank(dX, design.columns)
    if residuals is not None:
        e = np.asarray(residuals, dtype=float)
    elif fit is not None:
        e = fit.residuals
    else:
        e = ols(dX, design.dy, intercept=True, names=design.columns).residuals
    n = len(e)
    s2 = float(e @ e / n)
    omega = dX.T @ dX / n
    vcov = 1.5 * s2 / n * np.linalg.inv(omega)
    return YatchewVariance(s2, omega, (vcov + vcov.T) / 2, n)


def compute_vcov(method, X, y, residuals, channel_of_row=None, positions=None):
    """Dispatch an :class:`SEMethod` on a fitted design."""
    method = SEMethod.parse(method)
    k = method.kind
    if k == "ols":
        return ols_vcov(X, residuals)
    if k == "hc":
        return hc_vcov(X, residuals)
    if k == "newey_west":
        return newey_west(X, residuals, method.lags, channel_of_row)
    if k == "conley":
        if positions is None:
            raise DomainError("Conley standard errors need row positions")
        return conley(X, residuals, positions, method.cutoff_x, method.cutoff_y)
    if k == "cluster":
        return cluster_vcov(X, residuals, channel_of_row)
    if k == "bootstrap":
        return bootstrap_vcov(X, y, method.B, method.seed, "iid")
    return bootstrap_vcov(X, y, method.B, method.seed, "block", channel_of_row)
