"""Synthetic data-generating processes and a seeded Monte Carlo engine."""

from __future__ import annotations

import csv
import json
import math
import re
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass, field
from pathlib import Path

import numpy as np

from .dataset import SpatialDataset
from .errors import DomainError, SFDError
from .estimation import fit, robinson_fit
from .ordering import OrderedPath, order_1d


@dataclass(frozen=True, eq=False)
class SimulatedDataset:
    """A draw from a DGP together with its unobservables.

    ``y = X @ beta + c * alpha + epsilon`` holds exactly, where ``beta`` is
    aligned with ``dataset.columns`` (spillover coefficients included).
    """

    dataset: SpatialDataset
    c: np.ndarray
    epsilon: np.ndarray
    beta: np.ndarray
    alpha: float
    path: OrderedPath
    params: dict = field(default_factory=dict)

    def construction_error(self):
        """Max |y - X beta - c alpha - epsilon|."""
        ds = self.dataset
        r = ds.outcome - ds.regressors @ self.beta - self.c * self.alpha - self.epsilon
        return float(np.abs(r).max()) if r.size else 0.0


def _rng(seed):
    return np.random.default_rng(seed)


def _line(N, x, c, eps, beta, alpha, params, columns=("x",), X=None):
    X = np.asarray(x, dtype=float)[:, None] if X is None else X
    beta = np.atleast_1d(np.asarray(beta, dtype=float))
    y = X @ beta + alpha * c + eps
    i = np.arange(1, N + 1)
    ds = SpatialDataset(tuple(str(k) for k in i), np.column_stack([i, np.zeros(N)]),
                        y, X, columns, outcome_name="outcome", metadata={"dgp": params})
    return SimulatedDataset(ds, np.asarray(c, dtype=float), eps, beta, float(alpha),
                            order_1d(ds, "x"), params)


def _check_n(N):
    if int(N) != N or N < 10:
        raise DomainError(f"N must be an integer >= 10, got {N}")
    return int(N)


def simulate_sinusoid(N=1000, lam=360.0, phi=0.5, seed=0, beta=1.0, alpha=1.0, sigma=1.0):
    """Unit ``i = 1..N`` at position ``i`` on a line with

    ``x_i = sin(i) + phi * delta_i`` and
    ``c_i = sin(360 i / lam) + phi * eta_i`` (arguments in degrees),
    ``y_i = beta x_i + alpha c_i + eps_i``. The normal draws are taken in the
    order delta, eta, eps from one generator.
    """
    N = _check_n(N)
    if not lam > 0:
        raise DomainError(f"wavelength must be positive, got {lam}")
    if phi < 0:
        raise DomainError(f"phi must be >= 0, got {phi}")
    rng = _rng(seed)
    i = np.arange(1, N + 1, dtype=float)
    delta = rng.standard_normal(N)
    eta = rng.standard_normal(N)
    eps = sigma * rng.standard_normal(N)
    x = np.sin(np.deg2rad(i)) + phi * delta
    c = np.sin(np.deg2rad(360.0 * i / lam)) + phi * eta
    params = {"dgp": "sinusoid", "N": N, "lambda": float(lam), "phi": float(phi),
              "beta": float(beta), "alpha": float(alpha), "sigma": float(sigma)}
    return _line(N, x, c, eps, beta, alpha, params)


COMMON_CAUSE_FORMULAS = {
    "a": "x = z + u, c = z - z^2/2 + v",
    "b": "x = sin(6*360*z deg) + u, c = z - z^2/2 + v",
    "c": "x = z - z^2/2 + u, c = z - z^2/2 + v",
}


def simulate_common_cause(N=1000, scenario="a", seed=0, beta=1.0, alpha=1.0,
                          noise=1e-3, sigma=1e-3):
    """Regressor and confounder driven by a smooth common cause ``z = i/N``.

    The confounder is the concave ``z - z^2/2`` in every scenario; the
    regressor is linear (a), oscillatory (b) or shares the confounder's
    curvature (c). ``u``, ``v`` are iid ``N(0, noise^2)`` and
    ``eps ~ N(0, sigma^2)``, drawn in that order. Formulas are recorded in
    ``params['formulas']``.
    """
    N = _check_n(N)
    if scenario not in COMMON_CAUSE_FORMULAS:
        raise DomainError(f"scenario must be one of 'a', 'b', 'c', got {scenario!r}")
    rng = _rng(seed)
    z = np.arange(1, N + 1) / N
    u = noise * rng.standard_normal(N)
    v = noise * rng.standard_normal(N)
    eps = sigma * rng.standard_normal(N)
    cz = z - z ** 2 / 2
    x = {"a": z, "b": np.sin(np.deg2rad(6 * 360 * z)), "c": cz}[scenario] + u
    params = {"dgp": "common_cause", "N": N, "scenario": scenario,
              "formulas": COMMON_CAUSE_FORMULAS[scenario], "beta": float(beta),
              "alpha": float(alpha), "noise": float(noise), "sigma": float(sigma)}
    return _line(N, x, cz + v, eps, beta, alpha, params)


def simulate_spillover(N=1000, beta=1.0, gamma=0.6, seed=0, sigma=1.0):
    """``y_i = beta x_i + gamma x_{i-1} + eps_i`` with iid standard normal x.

    ``N + 1`` values of x are drawn so every unit has a lag; the lag is
    stored as column ``x_lag1``.
    """
    N = _check_n(N)
    rng = _rng(seed)
    xs = rng.standard_normal(N + 1)
    eps = sigma * rng.standard_normal(N)
    X = np.column_stack([xs[1:], xs[:-1]])
    params = {"dgp": "spillover", "N": N, "beta": float(beta), "gamma": float(gamma),
              "sigma": float(sigma)}
    return _line(N, None, np.zeros(N), eps, [beta, gamma], 0.0, params,
                 columns=("x", "x_lag1"), X=X)


def simulate_smooth_trend(N=500, beta=1.0, seed=0, sigma=1.0, amplitude=2.0, cycles=2.0):
    """``y = beta x + g(l) + eps`` with ``g(l) = amplitude * sin(2 pi cycles l / N)``
    and ``x = g(l) + N(0, 1)``, so levels OLS is biased while a local trend
    removal is consistent."""
    N = _check_n(N)
    rng = _rng(seed)
    i = np.arange(1, N + 1)
    g = amplitude * np.sin(2 * np.pi * cycles * i / N)
    x = g + rng.standard_normal(N)
    eps = sigma * rng.standard_normal(N)
    params = {"dgp": "smooth_trend", "N": N, "beta": float(beta), "sigma": float(sigma),
              "amplitude": float(amplitude), "cycles": float(cycles)}
    return _line(N, x, g, eps, beta, 1.0, params)


def simulate_iid(N=2000, beta=1.0, seed=0, sigma=1.0, sigma_x=1.0):
    """``y = beta x + eps`` with iid ``x ~ N(0, sigma_x^2)`` and ``eps ~ N(0, sigma^2)``."""
    N = _check_n(N)
    rng = _rng(seed)
    x = sigma_x * rng.standard_normal(N)
    eps = sigma * rng.standard_normal(N)
    params = {"dgp": "iid", "N": N, "beta": float(beta), "sigma": float(sigma),
              "sigma_x": float(sigma_x)}
    return _line(N, x, np.zeros(N), eps, beta, 0.0, params)


@dataclass(frozen=True)
class DGPConfig:
    """A DGP and its parameters; ``seed`` is the Monte Carlo master seed.

    ``sigma=None`` keeps each DGP's own noise default (1, or 1e-3 for the
    common-cause scenarios).
    """

    kind: str = "sinusoid"
    N: int = 1000
    beta: float = 1.0
    alpha: float = 1.0
    sigma: float | None = None
    lam: float = 360.0
    phi: float = 0.5
    scenario: str = "a"
    gamma: float = 0.6
    noise: float = 1e-3
    seed: int = 0

    KINDS = ("sinusoid", "common_cause", "spillover", "smooth_trend", "iid")

    def __post_init__(self):
        if self.kind not in self.KINDS:
            raise DomainError(f"unknown DGP {self.kind!r}; choose from {self.KINDS}")
        _check_n(self.N)
        if not self.lam > 0:
            raise DomainError(f"wavelength must be positive, got {self.lam}")

    def simulate(self, seed=None):
        s = self.seed if seed is None else seed
        kw = {} if self.sigma is None else {"sigma": self.sigma}
        if self.kind == "sinusoid":
            return simulate_sinusoid(self.N, self.lam, self.phi, s, self.beta, self.alpha, **kw)
        if self.kind == "common_cause":
            return simulate_common_cause(self.N, self.scenario, s, self.beta, self.alpha,
                                         self.noise, **kw)
        if self.kind == "spillover":
            return simulate_spillover(self.N, self.beta, self.gamma, s, **kw)
        if self.kind == "iid":
            return simulate_iid(self.N, self.beta, s, **kw)
        return simulate_smooth_trend(self.N, self.beta, s, **kw)

    def truth(self):
        if self.kind == "spillover":
            return {"x": self.beta, "x_lag1": self.gamma}
        return {"x": self.beta}

    def to_dict(self):
        return asdict(self)


_EST = re.compile(r"^(levels|sfd|sdd|robinson)(?::(\d+))?(?:\[([^\]]*)\])?$")


@dataclass(frozen=True)
class EstimatorSpec:
    """Parsed estimator name: ``levels``, ``sfd``, ``sdd`` or ``robinson:H``,
    optionally restricted to columns as in ``sfd[x]``."""

    kind: str
    bandwidth: int | None = None
    columns: tuple | None = None

    @classmethod
    def parse(cls, text):
        if isinstance(text, EstimatorSpec):
            return text
        m = _EST.match(str(text).replace(" ", ""))
        if not m:
            raise DomainError(f"cannot parse estimator {text!r}")
        kind, h, cols = m.groups()
        if kind == "robinson" and h is None:
            raise DomainError("robinson needs a bandwidth, e.g. robinson:2")
        if kind != "robinson" and h is not None:
            raise DomainError(f"{kind} takes no bandwidth")
        cols = tuple(c for c in cols.split(",") if c) if cols is not None else None
        return cls(kind, int(h) if h else None, cols)

    @property
    def name(self):
        s = self.kind + (f":{self.bandwidth}" if self.bandwidth else "")
        return s + (f"[{','.join(self.columns)}]" if self.columns is not None else "")

    def run(self, ds, path):
        if self.kind == "robinson":
            return robinson_fit(ds, path, self.bandwidth, columns=self.columns)
        return fit(ds, path, self.kind, columns=self.columns)


def rep_seed(master, r):
    """Stream for repetition ``r``: ``SeedSequence(master, spawn_key=(r,))``."""
    return np.random.SeedSequence(master, spawn_key=(r,))


def _one_rep(config, specs, master, r):
    sim = config.simulate(rep_seed(master, r))
    out = []
    for spec in specs:
        try:
            res = spec.run(sim.dataset, sim.path)
            out.append((res.names, res.coefficients, None))
        except SFDError as e:
            out.append((None, None, f"{type(e).__name__}: {e}"))
    return out


def _rep_block(args):
    config, specs, master, reps = args
    return [_one_rep(config, specs, master, r) for r in reps]


@dataclass(frozen=True, eq=False)
class MonteCarloReport:
    """Coefficient draws and summaries from :func:`monte_carlo`.

    ``draws[name]`` is a ``reps x p`` matrix (NaN rows mark failed reps) with
    column labels ``names[name]``.
    """

    config: DGPConfig
    estimators: tuple
    names: dict
    draws: dict
    failures: tuple
    reps: int
    seed: int

    def _col(self, est, coef):
        try:
            j = self.names[est].index(coef)
        except (KeyError, ValueError):
            raise DomainError(f"no coefficient {coef!r} for estimator {est!r}") from None
        v = self.draws[est][:, j]
        return v[np.isfinite(v)]

    def n_valid(self, est):
        return int(np.isfinite(self.draws[est][:, 0]).sum())

    def mean(self, est, coef="x"):
        return float(self._col(est, coef).mean())

    def variance(self, est, coef="x"):
        return float(self._col(est, coef).var(ddof=1))

    def sd(self, est, coef="x"):
        return math.sqrt(self.variance(est, coef))

    def mc_se(self, est, coef="x"):
        """Monte Carlo standard error of the mean."""
        v = self._col(est, coef)
        return float(v.std(ddof=1) / math.sqrt(len(v)))

    def quantiles(self, est, coef="x", q=(0.025, 0.975)):
        return tuple(float(a) for a in np.quantile(self._col(est, coef), q))

    def bias(self, est, coef="x"):
        return self.mean(est, coef) - self.config.truth()[coef]

    def variance_ratio(self, num, den, coef="x"):
        """``Var(num) / Var(den)``, e.g. ``('levels', 'sfd')``."""
        return self.variance(num, coef) / self.variance(den, coef)

    def summary(self):
        truth = self.config.truth()
        out = {}
        for est in self.estimators:
            rows = {}
            for coef in self.names.get(est) or ():
                v = self._col(est, coef)
                if len(v) < 2:
                    continue
                lo, hi = np.quantile(v, (0.025, 0.975))
                rows[coef] = {
                    "mean": float(v.mean()), "variance": float(v.var(ddof=1)),
                    "sd": float(v.std(ddof=1)), "mc_se": float(v.std(ddof=1) / math.sqrt(len(v))),
                    "q025": float(lo), "q975": float(hi),
                    "bias": float(v.mean() - truth[coef]) if coef in truth else None,
                }
            out[est] = {"n_valid": self.n_valid(est), "coefficients": rows}
        return out

    def efficiency(self, coef="x"):
        """Variance and SD ratios of every estimator against ``sfd``."""
        if "sfd" not in self.estimators:
            return {}
        out = {}
        for est in self.estimators:
            if est == "sfd" or coef not in (self.names.get(est) or ()):
                continue
            r = self.variance_ratio(est, "sfd", coef)
            out[f"{est}/sfd"] = {"variance_ratio": r, "sd_ratio": math.sqrt(r)}
        return out

    def to_dict(self):
        return {"config": self.config.to_dict(), "seed": self.seed, "reps": self.reps,
                "estimators": list(self.estimators), "failures": len(self.failures),
                "failure_reasons": [list(f) for f in self.failures[:50]],
                "summary": self.summary(), "efficiency": self.efficiency()}

    def to_json(self, **kw):
        return json.dumps(self.to_dict(), sort_keys=True, **kw)

    def long_rows(self):
        for est in self.estimators:
            names = self.names.get(est) or ()
            for r in range(self.reps):
                for j, coef in enumerate(names):
                    yield r, est, coef, float(self.draws[est][r, j])

    def to_long_csv(self, path):
        with Path(path).open("w", newline="", encoding="utf-8") as fh:
            w = csv.writer(fh)
            w.writerow(["rep", "estimator", "coefficient", "value"])
            for r, est, coef, v in self.long_rows():
                w.writerow([r, est, coef, repr(v)])


def monte_carlo(config, estimators=("levels", "sfd"), reps=1000, seed=None, n_jobs=1):
    """Repeat draw-and-fit ``reps`` times.

    Rep ``r`` simulates from :func:`rep_seed` ``(seed, r)`` so results do not
    depend on ``n_jobs``. Estimator failures are recorded per rep.
    """
    if reps < 2:
        raise DomainError("monte_carlo needs reps >= 2")
    specs = [EstimatorSpec.parse(e) for e in estimators]
    labels = tuple(s.name for s in specs)
    if len(set(labels)) != len(labels):
        raise DomainError(f"duplicate estimators in {labels}")
    master = config.seed if seed is None else int(seed)
    if n_jobs == 1:
        results = [_one_rep(config, specs, master, r) for r in range(reps)]
    else:
        chunks = np.array_split(np.arange(reps), max(1, n_jobs) * 4)
        jobs = [(config, specs, master, c.tolist()) for c in chunks if len(c)]
        with ProcessPoolExecutor(max_workers=n_jobs if n_jobs > 0 else None) as ex:
            results = [row for block in ex.map(_rep_block, jobs) for row in block]
    names, draws, failures = {}, {}, []
    for k, lab in enumerate(labels):
        for r, row in enumerate(results):
            nm, coef, why = row[k]
            if nm is not None and lab not in names:
                names[lab] = tuple(nm)
        p = len(names.get(lab, ()))
        mat = np.full((reps, max(p, 1)), np.nan)
        for r, row in enumerate(results):
            nm, coef, why = row[k]
            if why is not None:
                failures.append((r, lab, why))
            else:
                mat[r, :p] = coef
        draws[lab] = mat
    return MonteCarloReport(config, labels, names, draws, tuple(failures), reps, master)


def monte_carlo_lambda_grid(config, lambdas, estimators=("levels", "sfd"), reps=1000,
                            seed=None, n_jobs=1):
    """One :class:`MonteCarloReport` per wavelength (sinusoid DGP), keyed by lambda."""
    if config.kind != "sinusoid":
        raise DomainError("lambda grids apply to the sinusoid DGP")
    from dataclasses import replace
    return {float(lam): monte_carlo(replace(config, lam=float(lam)), estimators, reps, seed,
                                    n_jobs)
            for lam in lambdas}
