"""Internal validity checks: rotation sweeps, extreme-bounds enumeration of
control groups, and the first- versus double-difference comparison.
"""

from __future__ import annotations

import csv
import itertools
import json
import math
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .errors import DomainError, SFDError
from .estimation import fit
from .ordering import assign_channels

COARSE_THETAS = (-60, -30, 0, 30, 60, 90)
FULL_THETAS = tuple(range(-89, 91))
COV_GUARD = 1e-8


@dataclass(frozen=True, eq=False)
class SweepEntry:
    """One point of a sweep; ``fit`` is None when the point failed."""

    axis_value: object
    kind: str
    fit: object
    reason: str | None = None
    spec: dict = field(default_factory=dict)

    @property
    def ok(self):
        return self.fit is not None


def dispersion(values):
    """Mean, variance, SD, coefficient of variation and quartiles.

    ``cov_guard`` is set (and ``cov`` is NaN) when ``|mean| < 1e-8``.
    """
    v = np.asarray(values, dtype=float)
    n = len(v)
    if n == 0:
        return {"n": 0}
    mean = float(v.mean())
    var = float(v.var(ddof=1)) if n > 1 else 0.0
    sd = math.sqrt(var)
    guard = abs(mean) < COV_GUARD
    q = np.quantile(v, (0.0, 0.25, 0.5, 0.75, 1.0))
    return {"n": n, "mean": mean, "variance": var, "sd": sd,
            "cov": float("nan") if guard else sd / abs(mean), "cov_guard": guard,
            "min": float(q[0]), "q25": float(q[1]), "median": float(q[2]),
            "q75": float(q[3]), "max": float(q[4])}


@dataclass(frozen=True, eq=False)
class SweepResult:
    """Fits indexed by an axis (rotation angle or specification id)."""

    axis: str
    entries: tuple
    meta: dict = field(default_factory=dict)

    def axis_values(self, kind=None):
        return [e.axis_value for e in self.entries if kind is None or e.kind == kind]

    def kinds(self):
        return tuple(dict.fromkeys(e.kind for e in self.entries))

    def estimates(self, kind, coef):
        return np.array([e.fit.coef(coef) for e in self.entries
                         if e.kind == kind and e.ok and coef in e.fit.names])

    def dispersion(self, kind, coef):
        return dispersion(self.estimates(kind, coef))

    def missing(self):
        return [(e.axis_value, e.kind, e.reason) for e in self.entries if not e.ok]

    def long_rows(self):
        """(axis value, estimator, coefficient, estimate, SE) for every fit."""
        for e in self.entries:
            if not e.ok:
                continue
            for n, b, s in zip(e.fit.names, e.fit.coefficients, e.fit.se):
                yield e.axis_value, e.kind, n, float(b), float(s)

    def to_csv(self, path):
        with Path(path).open("w", newline="", encoding="utf-8") as fh:
            w = csv.writer(fh)
            w.writerow([self.axis, "estimator", "coefficient", "estimate", "se"])
            for row in self.long_rows():
                w.writerow([row[0], row[1], row[2], repr(row[3]), repr(row[4])])

    def to_dict(self):
        coefs = {}
        for kind in self.kinds():
            names = next((e.fit.names for e in self.entries if e.kind == kind and e.ok), ())
            coefs[kind] = {n: self.dispersion(kind, n) for n in names}
        return {"axis": self.axis, "meta": self.meta,
                "entries": [{"axis_value": e.axis_value, "kind": e.kind, "spec": e.spec,
                             "reason": e.reason,
                             "fit": None if not e.ok else e.fit.to_dict()}
                            for e in self.entries],
                "dispersion": coefs, "missing": len(self.missing())}

    def to_json(self, **kw):
        return json.dumps(self.to_dict(), sort_keys=True, default=_jsonable, **kw)


def _jsonable(o):
    if isinstance(o, np.generic):
        return o.item()
    raise TypeError(f"not JSON serializable: {type(o).__name__}")


def rotation_sweep(ds, width=None, thetas=COARSE_THETAS, se=None, kind="sfd", columns=None):
    """Re-assign channels and refit at every angle in ``thetas`` (degrees)."""
    for t in thetas:
        if not -89 <= t <= 90:
            raise DomainError(f"theta must be within [-89, 90], got {t}")
    entries = []
    for t in thetas:
        spec = {"theta": t, "width": width, "kind": kind, "se": str(se) if se else None,
                "columns": list(columns) if columns else None}
        try:
            path = assign_channels(ds, width, t)
            spec["width"] = path.channel_width
            entries.append(SweepEntry(t, kind, fit(ds, path, kind, se, columns), None, spec))
        except SFDError as e:
            entries.append(SweepEntry(t, kind, None, f"{type(e).__name__}: {e}", spec))
    return SweepResult("theta", tuple(entries), {"width": width, "kind": kind})


@dataclass(frozen=True)
class CovariateGroup:
    """Columns that enter and leave specifications together."""

    name: str
    members: tuple

    def __post_init__(self):
        object.__setattr__(self, "members", tuple(self.members))
        if not self.members:
            raise DomainError(f"covariate group {self.name!r} is empty")


MAIZE_GROUPS = (
    CovariateGroup("temperature", ("dday_low", "dday_high")),
    CovariateGroup("precipitation", ("prec", "prec_sq")),
    CovariateGroup("soil_awc", ("soil_awc",)),
    CovariateGroup("soil_clay", ("soil_clay",)),
    CovariateGroup("soil_silt", ("soil_silt",)),
    CovariateGroup("soil_om", ("soil_om",)),
    CovariateGroup("soil_slope", ("soil_slope",)),
)


def maize_preset(focal="temperature", rename=None):
    """Focal group and remaining control groups of the crop-yield grouping:
    a temperature pair, a precipitation pair and five soil singletons.

    ``rename`` maps the preset's column names to a dataset's names.
    """
    rename = rename or {}
    groups = [CovariateGroup(g.name, tuple(rename.get(m, m) for m in g.members))
              for g in MAIZE_GROUPS]
    match = [g for g in groups if g.name == focal]
    if not match:
        raise DomainError(f"unknown preset group {focal!r}")
    return match[0], tuple(g for g in groups if g.name != focal)


def spec_id(groups):
    return "+".join(g.name for g in groups) if groups else "none"


def extreme_bounds(ds, path, focal, controls, kinds=("levels", "sfd"), se=None):
    """Fit every subset of ``controls`` alongside ``focal`` for each kind.

    Entries are ordered by subset size, then lexicographically by group
    position; the axis value is the spec id (group names joined by ``+``).
    """
    controls = tuple(controls)
    names = [g.name for g in controls]
    if len(set(names)) != len(names) or focal.name in names:
        raise DomainError("covariate group names must be unique")
    cols = [m for g in controls for m in g.members]
    if set(focal.members) & set(cols) or len(set(cols)) != len(cols):
        raise DomainError("covariate groups must be disjoint")
    entries = []
    for size in range(len(controls) + 1):
        for subset in itertools.combinations(controls, size):
            sid = spec_id(subset)
            columns = list(focal.members) + [m for g in subset for m in g.members]
            for kind in kinds:
                spec = {"spec_id": sid, "columns": columns, "kind": kind,
                        "se": str(se) if se else None}
                try:
                    res = fit(ds, path, kind, se, columns)
                    entries.append(SweepEntry(sid, kind, res, None, spec))
                except SFDError as e:
                    entries.append(SweepEntry(sid, kind, None, f"{type(e).__name__}: {e}", spec))
    return SweepResult("spec_id", tuple(entries),
                       {"focal": focal.name, "focal_columns": list(focal.members),
                        "controls": {g.name: list(g.members) for g in controls},
                        "n_specs": 2 ** len(controls)})


@dataclass(frozen=True, eq=False)
class SDDCheck:
    """Paired first- and double-difference fits on the same path."""

    sfd: object
    sdd: object
    gaps: dict
    combined_se: dict
    inside_ci: dict

    def within(self, k=3.0):
        """Whether every gap lies within ``k`` combined SEs."""
        return {n: abs(self.gaps[n]) <= k * self.combined_se[n] for n in self.gaps}

    def to_dict(self):
        return {"sfd": self.sfd.to_dict(), "sdd": self.sdd.to_dict(), "gaps": self.gaps,
                "combined_se": self.combined_se, "sdd_inside_sfd_ci95": self.inside_ci}


def sdd_check(ds, path, se="ols", columns=None):
    """Compare SDD slopes against SFD slopes and the SFD 95% intervals."""
    a = fit(ds, path, "sfd", se, columns)
    b = fit(ds, path, "sdd", se, columns)
    gaps, comb, inside = {}, {}, {}
    for n in a.names[1:]:
        gaps[n] = b.coef(n) - a.coef(n)
        comb[n] = math.hypot(a.stderr(n), b.stderr(n))
        inside[n] = bool(abs(gaps[n]) <= 1.959963984540054 * a.stderr(n))
    return SDDCheck(a, b, gaps, comb, inside)
