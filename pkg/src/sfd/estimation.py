"""Least-squares fits in levels, first differences and double differences,
plus the uniform-kernel Robinson partially linear comparator.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field, replace

import numpy as np
from scipy import stats

from ._linalg import check_rank, qr_lstsq
from .differencing import DifferencedDesign, difference
from .errors import DomainError, EmptyDesignError
from .inference import SEMethod, compute_vcov

KIND_ORDER = {"levels": 0, "sfd": 1, "sdd": 2}
CONST = "const"


@dataclass(frozen=True, eq=False)
class FitResult:
    """Coefficients, residuals and (optionally) a covariance matrix.

    ``coefficients[0]`` is the intercept whenever ``names[0] == 'const'``.
    ``exog``/``endog`` hold the regression actually solved (differenced rows
    for sfd/sdd, residualized data for robinson).
    """

    coefficients: np.ndarray
    names: tuple
    residuals: np.ndarray
    n_obs: int
    r_squared: float
    estimator_kind: str = "levels"
    vcov: np.ndarray | None = None
    se_method: str | None = None
    direction: str = ""
    exog: np.ndarray | None = field(default=None, repr=False)
    endog: np.ndarray | None = field(default=None, repr=False)
    design: DifferencedDesign | None = field(default=None, repr=False)
    metadata: dict = field(default_factory=dict)

    @property
    def se(self):
        if self.vcov is None:
            return np.full(len(self.coefficients), np.nan)
        return np.sqrt(np.clip(np.diag(self.vcov), 0, None))

    def coef(self, name):
        return float(self.coefficients[self.names.index(name)])

    def stderr(self, name):
        return float(self.se[self.names.index(name)])

    @property
    def slopes(self):
        """Coefficients excluding the intercept."""
        return self.coefficients[1:] if self.names[0] == CONST else self.coefficients

    def pvalues(self):
        with np.errstate(divide="ignore", invalid="ignore"):
            z = np.abs(self.coefficients / self.se)
        return 2 * stats.norm.sf(z)

    def to_dict(self):
        se = self.se
        return {
            "estimator_kind": self.estimator_kind,
            "direction": self.direction,
            "se_method": self.se_method,
            "n_obs": self.n_obs,
            "r_squared": self.r_squared,
            "coefficients": {n: float(b) for n, b in zip(self.names, self.coefficients)},
            "standard_errors": {n: (None if math.isnan(s) else float(s))
                                for n, s in zip(self.names, se)},
            "vcov": None if self.vcov is None else self.vcov.tolist(),
            "metadata": self.metadata,
        }

    def to_json(self, **kw):
        return json.dumps(self.to_dict(), sort_keys=True, **kw)

    def to_row(self):
        """Flat mapping for one line of a sweep CSV."""
        row = {"estimator": self.estimator_kind, "direction": self.direction,
               "se_method": self.se_method or "", "n_obs": self.n_obs,
               "r_squared": self.r_squared}
        for n, b, s in zip(self.names, self.coefficients, self.se):
            row[f"b_{n}"] = float(b)
            row[f"se_{n}"] = float(s)
        return row


def _r_squared(y, resid, intercept):
    ssr = float(resid @ resid)
    yc = y - y.mean() if intercept else y
    sst = float(yc @ yc)
    if sst == 0:
        return 1.0 if ssr <= 1e-24 else 0.0
    return float(min(max(1 - ssr / sst, 0.0), 1.0))


def ols(X, y, intercept=True, names=None, kind="levels"):
    """Ordinary least squares by thin QR.

    Parameters
    ----------
    X : array_like, shape (n, K)
    y : array_like, shape (n,)
    intercept : bool
        Prepend a column of ones named ``const``.
    names : sequence of str, optional

    Raises
    ------
    CollinearityError
        If the column-scaled design has a singular value below 1e-10 times
        the largest; the error lists the dependent columns.
    """
    X = np.asarray(X, dtype=float)
    if X.ndim == 1:
        X = X[:, None]
    y = np.asarray(y, dtype=float)
    names = tuple(names) if names is not None else tuple(f"x{j + 1}" for j in range(X.shape[1]))
    if intercept:
        X = np.column_stack([np.ones(len(X)), X])
        names = (CONST,) + names
    n, p = X.shape
    if n < p or n == 0:
        raise EmptyDesignError(f"{n} rows cannot identify {p} coefficients")
    check_rank(X, names)
    beta, _ = qr_lstsq(X, y)
    resid = y - X @ beta
    if intercept:
        # remove the O(eps) drift so residuals are mean zero to roundoff
        resid = resid - resid.mean()
    return FitResult(beta, names, resid, n, _r_squared(y, resid, intercept), kind,
                     exog=X, endog=y)


def with_se(fit, se):
    """Attach the covariance chosen by ``se`` (an SEMethod or its string)."""
    if se is None:
        return fit
    method = SEMethod.parse(se)
    d = fit.design
    chan = None if d is None else d.channel_of_row
    pos = None if d is None else d.positions
    if fit.estimator_kind == "robinson":
        V = compute_vcov(method, fit.exog, fit.endog, fit.residuals, chan, pos)
        ytil = fit.metadata["_ytilde"]
        vc = np.var(ytil, ddof=1) / len(ytil) if len(ytil) > 1 else 0.0
        full = np.zeros((len(fit.coefficients),) * 2)
        full[0, 0] = vc
        full[1:, 1:] = V
        V = full
    else:
        V = compute_vcov(method, fit.exog, fit.endog, fit.residuals, chan, pos)
    return replace(fit, vcov=V, se_method=method.label)


def design_for(ds, path, kind):
    """Rows entering a fit of the given kind."""
    if kind not in KIND_ORDER:
        raise DomainError(f"kind must be one of {tuple(KIND_ORDER)}, got {kind!r}")
    if path is None:
        if kind != "levels":
            raise DomainError(f"{kind} fits need an OrderedPath")
        from .ordering import OrderedPath
        path = OrderedPath((ds.ids,), "")
    return difference(ds, path, KIND_ORDER[kind])


def fit(ds, path, kind="sfd", se=None, columns=None):
    """Fit levels, SFD or SDD with an intercept and optional covariance.

    Parameters
    ----------
    ds : SpatialDataset
    path : OrderedPath or None
        Levels fits without a path use every unit in dataset order.
    kind : {'levels', 'sfd', 'sdd'}
    se : SEMethod or str, optional
    columns : sequence of str, optional
        Regressor subset; defaults to all columns.
    """
    if columns is not None:
        ds = ds.select(columns)
    design = design_for(ds, path, kind)
    if design.n_rows <= ds.k + 1:
        raise EmptyDesignError(
            f"{kind} design has {design.n_rows} rows for {ds.k + 1} coefficients")
    res = ols(design.dX, design.dy, intercept=True, names=ds.columns, kind=kind)
    res = replace(res, design=design, direction=design.direction,
                  metadata={"kind": kind, "direction": design.direction,
                            "outcome": ds.outcome_name})
    return with_se(res, se)


def _window_means(v, h):
    """Mean over positions i-h..i+h (inclusive, truncated at the ends)."""
    m = len(v)
    cs = np.concatenate([np.zeros((1,) + v.shape[1:]), np.cumsum(v, axis=0)])
    i = np.arange(m)
    lo = np.clip(i - h, 0, m)
    hi = np.clip(i + h + 1, 0, m)
    cnt = (hi - lo).reshape((-1,) + (1,) * (v.ndim - 1))
    return (cs[hi] - cs[lo]) / cnt


def robinson_fit(ds, path, h, columns=None, se=None):
    """Robinson's partially linear estimator with a uniform index-window kernel.

    Each variable's trend at unit i is its mean over the units within ``h``
    positions of i in the same channel (self included). The residualized
    outcome is regressed on the residualized regressors without an
    intercept; the reported ``const`` is the mean residualized outcome.
    """
    if int(h) != h or h < 1:
        raise DomainError(f"bandwidth must be a positive integer, got {h}")
    h = int(h)
    if columns is not None:
        ds = ds.select(columns)
    levels = difference(ds, path, 0)
    ytil = np.empty(levels.n_rows)
    Xtil = np.empty_like(levels.dX)
    for rows in levels.channel_rows():
        ytil[rows] = levels.dy[rows] - _window_means(levels.dy[rows], h)
        Xtil[rows] = levels.dX[rows] - _window_means(levels.dX[rows], h)
    inner = ols(Xtil, ytil, intercept=False, names=ds.columns, kind="robinson")
    coefs = np.concatenate([[ytil.mean()], inner.coefficients])
    res = FitResult(coefs, (CONST,) + ds.columns, inner.residuals, inner.n_obs,
                    inner.r_squared, "robinson", exog=Xtil, endog=ytil, design=levels,
                    direction=levels.direction,
                    metadata={"kind": "robinson", "bandwidth": h, "_ytilde": ytil})
    return with_se(res, se)
