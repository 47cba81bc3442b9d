"""Command-line front end.

Every command writes JSON (and usually CSV) artifacts to ``--out``
(default ``$SFD_OUTPUT_DIR`` or the working directory). Each JSON artifact
embeds the resolved run configuration, and ``config.json`` can be replayed
with ``--from-config``. Exit status: 0 success, 1 computation error,
2 usage error.
"""

from __future__ import annotations

import argparse
import contextlib
import json
import math
import os
import sys
import tempfile
from dataclasses import asdict, dataclass, field, replace
from pathlib import Path

import numpy as np
from scipy import stats

from .dataset import Schema, TransformSpec, apply_transforms, load_csv
from .errors import SFDError
from .estimation import fit, robinson_fit, with_se
from .inference import SEMethod
from .ordering import OrderedPath, assign_channels, order_1d, order_grid
from .robustness import (COARSE_THETAS, FULL_THETAS, CovariateGroup, extreme_bounds,
                         maize_preset, rotation_sweep, sdd_check)
from .simulation import DGPConfig, monte_carlo, monte_carlo_lambda_grid

OUTPUT_ENV = "SFD_OUTPUT_DIR"
COMMANDS = ("fit", "simulate", "monte-carlo", "channels", "rotate-sweep", "extreme-bounds",
            "sdd-check", "se-table")

PRESETS = {
    "fig5-point": (dict(kind="sinusoid", N=1000, lam=360.0, phi=0.5), ("levels", "sfd"), 1000),
    "fig5-low-noise": (dict(kind="sinusoid", N=1000, lam=360.0, phi=0.04), ("levels", "sfd"),
                       1000),
    "fig5-no-noise": (dict(kind="sinusoid", N=1000, lam=360.0, phi=0.0), ("levels", "sfd"),
                      1000),
    "yatchew": (dict(kind="iid", N=2000), ("sfd",), 500),
    "spillover": (dict(kind="spillover", N=5000, gamma=0.6), ("sfd", "sfd[x]"), 200),
    "common-cause-a": (dict(kind="common_cause", scenario="a"), ("levels", "sfd"), 200),
    "common-cause-b": (dict(kind="common_cause", scenario="b"), ("levels", "sfd"), 200),
    "common-cause-c": (dict(kind="common_cause", scenario="c"), ("levels", "sfd"), 200),
    "robinson": (dict(kind="smooth_trend", N=500), ("levels", "sfd", "robinson:2"), 200),
}

DEFAULT_SE_TABLE = ("ols", "hc", "newey-west:2", "cluster", "bootstrap:1000:0",
                    "block-bootstrap:1000:0")


@dataclass
class RunConfig:
    """Fully resolved inputs of one invocation."""

    command: str
    inputs: dict = field(default_factory=dict)
    ordering: dict | None = None
    transforms: list = field(default_factory=list)
    estimators: list = field(default_factory=list)
    se: str | list | None = None
    seed: int | None = None
    output_dir: str = "."
    options: dict = field(default_factory=dict)

    def to_dict(self):
        """Everything except the output location, so identical runs written to
        different directories produce identical artifacts."""
        d = asdict(self)
        d.pop("output_dir")
        return d


class UsageError(Exception):
    pass


@contextlib.contextmanager
def atomic_path(path):
    """Yield a temporary sibling of ``path``; move it into place on success."""
    path = Path(path)
    fd, tmp = tempfile.mkstemp(dir=path.parent, prefix=f".{path.name}.", suffix=".tmp")
    os.close(fd)
    try:
        yield Path(tmp)
        os.replace(tmp, path)
    except BaseException:
        with contextlib.suppress(FileNotFoundError):
            os.unlink(tmp)
        raise


def write_json(path, obj):
    with atomic_path(path) as tmp:
        tmp.write_text(json.dumps(obj, indent=2, sort_keys=True, default=_jsonable) + "\n",
                       encoding="utf-8")


def _jsonable(o):
    if isinstance(o, np.generic):
        return o.item()
    if isinstance(o, np.ndarray):
        return o.tolist()
    raise TypeError(f"not JSON serializable: {type(o).__name__}")


def stars(p):
    if not math.isfinite(p):
        return ""
    return "***" if p < 0.001 else "**" if p < 0.01 else "*" if p < 0.05 else ""


def format_table(res, title=None):
    lines = [title] if title else []
    lines.append(f"{'':<16}{'estimate':>14}{'se':>14}")
    for n, b, s, p in zip(res.names, res.coefficients, res.se, res.pvalues()):
        se = f"({s:.6g})" if math.isfinite(s) else "(n/a)"
        lines.append(f"{n:<16}{b:>14.6g}{se:>14} {stars(p)}")
    lines.append(f"N = {res.n_obs}   R2 = {res.r_squared:.4f}   "
                 f"kind = {res.estimator_kind}   se = {res.se_method or 'none'}")
    lines.append("* p<0.05, ** p<0.01, *** p<0.001")
    return "\n".join(lines)


# ---------------------------------------------------------------- arguments

def _add_data(p, ordering=True):
    g = p.add_argument_group("data")
    g.add_argument("--data", required=True, help="unit CSV")
    g.add_argument("--outcome", required=True, help="outcome column")
    g.add_argument("--regressors", help="comma-separated regressor columns (default: all others)")
    g.add_argument("--id-col", default="id")
    g.add_argument("--x-col", default="x")
    g.add_argument("--y-col", default="y")
    g.add_argument("--polygons", help="ring CSV with id, vertex_index, x, y")
    g.add_argument("--poly", action="append", default=[], metavar="COL:DEG",
                   help="append COL**DEG (repeatable)")
    g.add_argument("--lag", action="append", default=[], metavar="COL:K",
                   help="append the value K positions earlier in the channel (repeatable)")
    g.add_argument("--dday", action="append", default=[], metavar="COLS:THRESHOLD",
                   help="degree days from comma-separated hourly columns (repeatable)")
    if ordering:
        o = p.add_argument_group("ordering (exactly one)")
        m = o.add_mutually_exclusive_group()
        m.add_argument("--order-1d", choices=("x", "y"), help="single channel sorted by axis")
        m.add_argument("--grid", choices=("WE", "NS"), help="lattice rows or columns")
        m.add_argument("--channels", action="store_true",
                       help="channel sampling with --width and --theta")
        m.add_argument("--path-file", help="CSV with channel_index, position_in_channel, unit_id")
        o.add_argument("--width", type=float, help="channel width (default: mean polygon height)")
        o.add_argument("--theta", type=float, default=0.0, help="rotation in degrees")


def _add_common(p):
    p.add_argument("--out", help=f"output directory (default ${OUTPUT_ENV} or .)")
    p.add_argument("--seed", type=int, default=0, help="master seed")


def build_parser():
    ap = argparse.ArgumentParser(prog="sfd", description=__doc__.splitlines()[0])
    ap.add_argument("--from-config", help="replay a config.json written by an earlier run")
    ap.add_argument("--out", dest="top_out", help=argparse.SUPPRESS)
    sub = ap.add_subparsers(dest="command", metavar="COMMAND")

    p = sub.add_parser("fit", help="levels / SFD / SDD / Robinson fit")
    _add_data(p)
    p.add_argument("--kind", choices=("levels", "sfd", "sdd", "robinson"), default="sfd")
    p.add_argument("--bandwidth", type=int, default=2, help="Robinson window half-width")
    p.add_argument("--se", default="ols", help="ols, hc, newey-west[:L], conley:CX[,CY], "
                   "cluster, bootstrap[:B[:SEED]], block-bootstrap[:B[:SEED]]")
    _add_common(p)

    p = sub.add_parser("simulate", help="draw one synthetic dataset")
    _add_dgp(p)
    _add_common(p)

    p = sub.add_parser("monte-carlo", help="repeated simulation and estimation")
    p.add_argument("--preset", choices=sorted(PRESETS))
    _add_dgp(p, defaults=False)
    p.add_argument("--reps", type=int)
    p.add_argument("--estimators", help="comma list, e.g. levels,sfd,sdd,robinson:2,sfd[x]")
    p.add_argument("--lambdas", help="wavelength grid: START:STOP[:STEP] or comma list")
    p.add_argument("--n-jobs", type=int, default=1)
    _add_common(p)

    p = sub.add_parser("channels", help="assign units to channels and write the path")
    _add_data(p, ordering=False)
    p.add_argument("--width", type=float)
    p.add_argument("--theta", type=float, default=0.0)
    _add_common(p)

    p = sub.add_parser("rotate-sweep", help="refit SFD over rotation angles")
    _add_data(p, ordering=False)
    p.add_argument("--width", type=float)
    p.add_argument("--thetas", default="coarse", help="coarse, full, or comma list of degrees")
    p.add_argument("--kind", choices=("sfd", "sdd", "levels"), default="sfd")
    p.add_argument("--se", default="ols")
    _add_common(p)

    p = sub.add_parser("extreme-bounds", help="fit every subset of control groups")
    _add_data(p)
    p.add_argument("--focal", help="NAME=COL[,COL...]")
    p.add_argument("--control", action="append", default=[], metavar="NAME=COL[,COL...]")
    p.add_argument("--preset", choices=("maize",), help="crop-yield grouping")
    p.add_argument("--focal-group", default="temperature", help="preset group held fixed")
    p.add_argument("--kinds", default="levels,sfd")
    p.add_argument("--se", default="ols")
    _add_common(p)

    p = sub.add_parser("sdd-check", help="compare SFD and SDD estimates")
    _add_data(p)
    p.add_argument("--se", default="ols")
    _add_common(p)

    p = sub.add_parser("se-table", help="one fit with several standard-error methods")
    _add_data(p)
    p.add_argument("--kind", choices=("levels", "sfd", "sdd"), default="sfd")
    p.add_argument("--se", action="append", help="SE method (repeatable); default: "
                   + ", ".join(DEFAULT_SE_TABLE))
    p.add_argument("--conley", metavar="CX[,CY]", help="add Conley SEs with these cutoffs")
    _add_common(p)
    return ap


def _add_dgp(p, defaults=True):
    d = (lambda v: v) if defaults else (lambda v: None)
    p.add_argument("--dgp", choices=DGPConfig.KINDS, default=d("sinusoid"))
    p.add_argument("--n", type=int, default=d(1000))
    p.add_argument("--lambda", dest="lam", type=float, default=d(360.0))
    p.add_argument("--phi", type=float, default=d(0.5))
    p.add_argument("--scenario", choices=("a", "b", "c"), default=d("a"))
    p.add_argument("--beta", type=float, default=d(1.0))
    p.add_argument("--alpha", type=float, default=d(1.0))
    p.add_argument("--gamma", type=float, default=d(0.6))
    p.add_argument("--sigma", type=float, default=None, help="noise SD (DGP default if unset)")


# ---------------------------------------------------------------- resolution

def _split_spec(text, flag):
    head, sep, tail = text.rpartition(":")
    if not sep or not head or not tail:
        raise UsageError(f"{flag} expects A:B, got {text!r}")
    return head, tail


def _transforms(a):
    specs = []
    try:
        for t in a.poly:
            col, deg = _split_spec(t, "--poly")
            specs.append(TransformSpec.polynomial(col, int(deg)))
        for t in a.lag:
            col, k = _split_spec(t, "--lag")
            specs.append(TransformSpec.spatial_lag(col, int(k)))
        for t in a.dday:
            cols, thr = _split_spec(t, "--dday")
            specs.append(TransformSpec.degree_days(cols.split(","), float(thr)))
    except ValueError as e:
        raise UsageError(str(e)) from None
    return specs


def _ordering_of(a):
    chosen = [f for f, v in (("--order-1d", a.order_1d), ("--grid", a.grid),
                             ("--channels", a.channels), ("--path-file", a.path_file)) if v]
    if len(chosen) > 1:
        raise UsageError(f"conflicting ordering flags: {' and '.join(chosen)}")
    if not a.channels and a.width is not None:
        raise UsageError("--width applies only with --channels")
    if not a.channels and a.theta:
        raise UsageError("--theta applies only with --channels")
    if a.order_1d:
        return {"type": "1d", "axis": a.order_1d}
    if a.grid:
        return {"type": "grid", "direction": a.grid}
    if a.channels:
        return {"type": "channels", "width": a.width, "theta": a.theta}
    if a.path_file:
        return {"type": "file", "path": a.path_file}
    return None


def resolve(a):
    """Check cross-flag constraints and build the :class:`RunConfig`."""
    out = a.out or os.environ.get(OUTPUT_ENV) or "."
    opts = {k: v for k, v in vars(a).items() if k not in ("from_config", "top_out", "out")}
    cfg = RunConfig(a.command, output_dir=out, seed=a.seed, options=opts)
    if hasattr(a, "data"):
        cfg.inputs = {"data": a.data, "polygons": a.polygons, "outcome": a.outcome,
                      "regressors": a.regressors, "id": a.id_col, "x": a.x_col, "y": a.y_col}
        cfg.transforms = [asdict(s) for s in _transforms(a)]
    if hasattr(a, "order_1d"):
        cfg.ordering = _ordering_of(a)
        needs = a.command != "fit" or a.kind != "levels"
        if cfg.ordering is None and needs:
            raise UsageError("an ordering is required: --order-1d, --grid, --channels or "
                             "--path-file")
    if a.command == "fit":
        cfg.estimators = [a.kind if a.kind != "robinson" else f"robinson:{a.bandwidth}"]
        cfg.se = a.se
        SEMethod.parse(a.se)
        if a.kind == "robinson" and a.bandwidth < 1:
            raise UsageError("--bandwidth must be >= 1")
    elif a.command in ("sdd-check", "rotate-sweep"):
        cfg.se = a.se
        SEMethod.parse(a.se)
    elif a.command == "se-table":
        methods = list(a.se or DEFAULT_SE_TABLE)
        if a.conley:
            methods.append(f"conley:{a.conley}")
        for m in methods:
            SEMethod.parse(m)
        cfg.se = methods
        cfg.estimators = [a.kind]
    elif a.command == "extreme-bounds":
        if a.preset and (a.focal or a.control):
            raise UsageError("conflicting flags: --preset and --focal/--control")
        if not a.preset and not a.focal:
            raise UsageError("extreme-bounds needs --focal (or --preset)")
        cfg.estimators = a.kinds.split(",")
        cfg.se = a.se
    elif a.command == "monte-carlo":
        cfg.options.update(_mc_settings(a))
        cfg.estimators = list(cfg.options["estimators_resolved"])
    return cfg


def _mc_settings(a):
    base, est, reps = ({}, ("levels", "sfd"), 1000)
    if a.preset:
        base, est, reps = PRESETS[a.preset]
        base = dict(base)
    fields = {"kind": a.dgp, "N": a.n, "lam": a.lam, "phi": a.phi, "scenario": a.scenario,
              "beta": a.beta, "alpha": a.alpha, "gamma": a.gamma, "sigma": a.sigma}
    for k, v in fields.items():
        if v is not None:
            base[k] = v
    if a.reps is not None:
        reps = a.reps
    if a.estimators:
        est = tuple(e for e in a.estimators.split(",") if e)
    if reps < 2:
        raise UsageError("--reps must be >= 2")
    return {"dgp_resolved": base, "estimators_resolved": list(est), "reps_resolved": reps}


# ---------------------------------------------------------------- loading

def _load(cfg):
    i = cfg.inputs
    schema = Schema(i["id"], i["x"], i["y"], i["outcome"],
                    None if not i["regressors"] else
                    tuple(c.strip() for c in i["regressors"].split(",") if c.strip()))
    ds = load_csv(i["data"], schema, polygons=i["polygons"])
    specs = [TransformSpec(**{**t, "sources": tuple(t["sources"])}) for t in cfg.transforms]
    path = _path(ds, cfg.ordering)
    if specs:
        ds = apply_transforms(ds, path, specs)
        if path is not None:
            path = path.restrict(ds.ids)
    return ds, path


def _path(ds, o):
    if o is None:
        return None
    if o["type"] == "1d":
        return order_1d(ds, o["axis"])
    if o["type"] == "grid":
        return order_grid(ds, o["direction"])
    if o["type"] == "channels":
        return assign_channels(ds, o["width"], o["theta"])
    return OrderedPath.from_csv(o["path"], "file")


def _outdir(cfg):
    d = Path(cfg.output_dir)
    d.mkdir(parents=True, exist_ok=True)
    write_json(d / "config.json", cfg.to_dict())
    return d


def _write_rows(path, header, rows):
    import csv
    with atomic_path(path) as tmp, tmp.open("w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh)
        w.writerow(header)
        w.writerows(rows)


def _save_with(path, writer):
    with atomic_path(path) as tmp:
        writer(tmp)


# ---------------------------------------------------------------- commands

def cmd_fit(cfg):
    ds, path = _load(cfg)
    o = cfg.options
    if o["kind"] == "robinson":
        res = robinson_fit(ds, path, o["bandwidth"], se=o["se"])
    else:
        res = fit(ds, path, o["kind"], o["se"])
    d = _outdir(cfg)
    write_json(d / "fit.json", {"run_config": cfg.to_dict(), "result": res.to_dict()})
    row = res.to_row()
    _write_rows(d / "fit.csv", list(row), [list(row.values())])
    print(format_table(res, f"{o['kind']} fit of {ds.outcome_name}"))


def cmd_simulate(cfg):
    o = cfg.options
    dgp = DGPConfig(o["dgp"], o["n"], o["beta"], o["alpha"], o["sigma"], o["lam"], o["phi"],
                    o["scenario"], o["gamma"], seed=o["seed"])
    sim = dgp.simulate()
    d = _outdir(cfg)
    coords = {"id_col": "id", "x_col": "pos_x", "y_col": "pos_y"}
    _save_with(d / "simulated.csv", lambda p: sim.dataset.to_csv(p, **coords))
    _write_rows(d / "unobservables.csv", ["id", "c", "epsilon"],
                [[u, repr(float(c)), repr(float(e))]
                 for u, c, e in zip(sim.dataset.ids, sim.c, sim.epsilon)])
    write_json(d / "simulate.json", {"run_config": cfg.to_dict(), "dgp": dgp.to_dict(),
                                     "params": sim.params,
                                     "csv_schema": {**coords, "outcome": sim.dataset.outcome_name,
                                                    "regressors": list(sim.dataset.columns)},
                                     "construction_error": sim.construction_error()})
    print(f"wrote {sim.dataset.n} units to {d / 'simulated.csv'}")


def _lambda_grid(text):
    if ":" in text:
        parts = [float(p) for p in text.split(":")]
        start, stop = parts[0], parts[1]
        step = parts[2] if len(parts) > 2 else 1.0
        return list(np.arange(start, stop + step / 2, step))
    return [float(p) for p in text.split(",") if p]


def cmd_monte_carlo(cfg):
    o = cfg.options
    dgp = DGPConfig(**o["dgp_resolved"], seed=o["seed"])
    est, reps = o["estimators_resolved"], o["reps_resolved"]
    d = _outdir(cfg)
    if o["lambdas"]:
        reports = monte_carlo_lambda_grid(dgp, _lambda_grid(o["lambdas"]), est, reps,
                                          n_jobs=o["n_jobs"])
        rows = []
        for lam, rep in reports.items():
            for e, s in rep.summary().items():
                for coef, v in s["coefficients"].items():
                    rows.append([lam, e, coef, v["mean"], v["q025"], v["q975"], v["variance"]])
        _write_rows(d / "mc_grid.csv",
                    ["lambda", "estimator", "coefficient", "mean", "q025", "q975", "variance"],
                    rows)
        write_json(d / "mc_grid.json", {"run_config": cfg.to_dict(),
                                        "reports": {str(k): v.to_dict()
                                                    for k, v in reports.items()}})
        print(f"wrote {len(reports)} wavelengths to {d / 'mc_grid.csv'}")
        return
    rep = monte_carlo(dgp, est, reps, n_jobs=o["n_jobs"])
    write_json(d / "mc.json", {"run_config": cfg.to_dict(), "report": rep.to_dict()})
    _save_with(d / "mc_draws.csv", rep.to_long_csv)
    summ = rep.summary()
    print(f"{'estimator':<14}{'coef':<10}{'mean':>10}{'q2.5%':>10}{'q97.5%':>10}{'var':>12}")
    for e, s in summ.items():
        for coef, v in s["coefficients"].items():
            print(f"{e:<14}{coef:<10}{v['mean']:>10.4f}{v['q025']:>10.4f}{v['q975']:>10.4f}"
                  f"{v['variance']:>12.4g}")
    for k, v in rep.efficiency().items():
        print(f"Var ratio {k}: {v['variance_ratio']:.4f} (SD ratio {v['sd_ratio']:.4f})")
    if rep.failures:
        print(f"{len(rep.failures)} failed estimator runs", file=sys.stderr)


def cmd_channels(cfg):
    ds, _ = _load(cfg)
    o = cfg.options
    path = assign_channels(ds, o["width"], o["theta"])
    d = _outdir(cfg)
    _save_with(d / "path.csv", path.to_csv)
    write_json(d / "channels.json", {"run_config": cfg.to_dict(), "width": path.channel_width,
                                     "direction": path.direction, "n_channels": len(path),
                                     "channel_sizes": [len(c) for c in path.channels]})
    print(f"{len(path)} channels, {path.n_units} units, width {path.channel_width:g}")


def _thetas(text):
    if text == "coarse":
        return list(COARSE_THETAS)
    if text == "full":
        return list(FULL_THETAS)
    return [float(t) for t in text.split(",") if t]


def cmd_rotate_sweep(cfg):
    ds, _ = _load(cfg)
    o = cfg.options
    res = rotation_sweep(ds, o["width"], _thetas(o["thetas"]), o["se"], o["kind"])
    _sweep_out(cfg, res, "rotation")
    for coef in ds.columns:
        dsp = res.dispersion(o["kind"], coef)
        if dsp.get("n"):
            print(f"{coef}: mean {dsp['mean']:.4g}  sd {dsp['sd']:.4g}  CoV {dsp['cov']:.4g}")


def _sweep_out(cfg, res, stem):
    d = _outdir(cfg)
    _save_with(d / f"{stem}.csv", res.to_csv)
    write_json(d / f"{stem}.json", {"run_config": cfg.to_dict(), "result": res.to_dict()})
    for v, k, why in res.missing():
        print(f"missing {v} ({k}): {why}", file=sys.stderr)


def _group(text):
    name, sep, cols = text.partition("=")
    if not sep or not cols:
        raise UsageError(f"expected NAME=COL[,COL...], got {text!r}")
    return CovariateGroup(name, tuple(c for c in cols.split(",") if c))


def cmd_extreme_bounds(cfg):
    o = cfg.options
    if o["preset"]:
        focal, controls = maize_preset(o["focal_group"])
    else:
        focal, controls = _group(o["focal"]), [_group(c) for c in o["control"]]
    ds, path = _load(cfg)
    res = extreme_bounds(ds, path, focal, controls, tuple(cfg.estimators), o["se"])
    _sweep_out(cfg, res, "extreme_bounds")
    for kind in res.kinds():
        for coef in focal.members:
            dsp = res.dispersion(kind, coef)
            if dsp.get("n"):
                print(f"{kind:<8}{coef:<16} n={dsp['n']:<5} min {dsp['min']:.4g}  "
                      f"max {dsp['max']:.4g}  var {dsp['variance']:.4g}")


def cmd_sdd_check(cfg):
    ds, path = _load(cfg)
    chk = sdd_check(ds, path, cfg.options["se"])
    d = _outdir(cfg)
    write_json(d / "sdd_check.json", {"run_config": cfg.to_dict(), "result": chk.to_dict()})
    _write_rows(d / "sdd_check.csv",
                ["coefficient", "sfd", "sfd_se", "sdd", "sdd_se", "gap", "combined_se",
                 "sdd_inside_sfd_ci95"],
                [[n, chk.sfd.coef(n), chk.sfd.stderr(n), chk.sdd.coef(n), chk.sdd.stderr(n),
                  chk.gaps[n], chk.combined_se[n], chk.inside_ci[n]] for n in chk.gaps])
    print(format_table(chk.sfd, "SFD"))
    print(format_table(chk.sdd, "SDD"))


def cmd_se_table(cfg):
    ds, path = _load(cfg)
    base = fit(ds, path, cfg.options["kind"], None)
    fits, notes = [], {}
    for m in cfg.se:
        try:
            fits.append(with_se(base, m))
        except SFDError as e:
            method = SEMethod.parse(m)
            notes[method.label] = f"{type(e).__name__}: {e}"
            nan = np.full((len(base.names),) * 2, np.nan)
            fits.append(replace(base, vcov=nan, se_method=method.label))
            print(f"{method.label} unavailable: {e}", file=sys.stderr)
    labels = [f.se_method for f in fits]
    d = _outdir(cfg)
    rows = [[n, float(base.coefficients[j]), *(float(f.se[j]) for f in fits)]
            for j, n in enumerate(base.names)]
    _write_rows(d / "se_table.csv", ["coefficient", "estimate", *labels], rows)
    write_json(d / "se_table.json", {"run_config": cfg.to_dict(), "estimate": base.to_dict(),
                                     "se": {f.se_method: [None if math.isnan(v) else v
                                                          for v in f.se.tolist()]
                                            for f in fits},
                                     "unavailable": notes})
    print(f"{'':<14}{'estimate':>12}")
    for j, n in enumerate(base.names):
        print(f"{n:<14}{base.coefficients[j]:>12.5g}")
        for f in fits:
            p = float(2 * stats.norm.sf(abs(base.coefficients[j] / f.se[j]))) \
                if f.se[j] > 0 else float("nan")
            if math.isnan(f.se[j]):
                print(f"{'':<14}{'[n/a]':>12}     {f.se_method}")
                continue
            print(f"{'':<14}{'[' + format(f.se[j], '.5g') + ']':>12} {stars(p):<4}{f.se_method}")


HANDLERS = {"fit": cmd_fit, "simulate": cmd_simulate, "monte-carlo": cmd_monte_carlo,
            "channels": cmd_channels, "rotate-sweep": cmd_rotate_sweep,
            "extreme-bounds": cmd_extreme_bounds, "sdd-check": cmd_sdd_check,
            "se-table": cmd_se_table}


def _replay(path, out):
    raw = json.loads(Path(path).read_text(encoding="utf-8"))
    raw = raw.get("run_config", raw)
    return RunConfig(**raw, output_dir=out or os.environ.get(OUTPUT_ENV) or ".")


def run(argv=None):
    """Parse ``argv``, execute, and return the exit status."""
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as e:
        return int(e.code or 0)
    try:
        if args.from_config:
            if args.command:
                raise UsageError("--from-config replaces the subcommand; give one or the other")
            cfg = _replay(args.from_config, args.top_out)
        else:
            if not args.command:
                parser.print_help(sys.stderr)
                return 2
            cfg = resolve(args)
    except (UsageError, SFDError) as e:
        parser.print_usage(sys.stderr)
        print(f"sfd: error: {e}", file=sys.stderr)
        return 2
    except (OSError, ValueError, TypeError) as e:
        print(f"sfd: error: {e}", file=sys.stderr)
        return 2
    try:
        HANDLERS[cfg.command](cfg)
    except UsageError as e:
        print(f"sfd: error: {e}", file=sys.stderr)
        return 2
    except (SFDError, OSError, ValueError) as e:
        print(f"sfd: error: {type(e).__name__}: {e}", file=sys.stderr)
        return 1
    return 0


def main():
    sys.exit(run())


if __name__ == "__main__":
    main()
