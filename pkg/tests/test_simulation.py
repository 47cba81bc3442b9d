import csv
import json
import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from numpy.testing import assert_array_equal

from sfd import DomainError, fit
from sfd.simulation import (DGPConfig, EstimatorSpec, monte_carlo, monte_carlo_lambda_grid,
                            simulate_common_cause, simulate_iid, simulate_sinusoid,
                            simulate_smooth_trend, simulate_spillover)


def test_sinusoid_no_noise_identical_curves():
    sim = simulate_sinusoid(1000, 360, 0.0, seed=1)
    assert_array_equal(sim.dataset.column("x"), sim.c)
    assert np.corrcoef(sim.dataset.column("x"), sim.c)[0, 1] == pytest.approx(1.0)


def test_sinusoid_half_wavelength_orthogonal():
    # sin(i) and sin(2i) (degrees) are orthogonal over whole periods, and
    # both sum to zero, so the sample correlation over 720 units is zero
    sim = simulate_sinusoid(720, 180, 0.0, seed=1)
    assert np.corrcoef(sim.dataset.column("x"), sim.c)[0, 1] == pytest.approx(0, abs=1e-12)


def test_sinusoid_uses_degrees():
    sim = simulate_sinusoid(100, 360, 0.0)
    assert sim.dataset.column("x")[89] == pytest.approx(1.0)
    assert sim.dataset.ids[0] == "1"
    assert sim.dataset.positions[4, 0] == 5


def test_determinism():
    a = simulate_sinusoid(200, 90, 0.5, seed=7)
    b = simulate_sinusoid(200, 90, 0.5, seed=7)
    assert_array_equal(a.dataset.outcome, b.dataset.outcome)
    assert_array_equal(a.c, b.c)
    c = simulate_sinusoid(200, 90, 0.5, seed=8)
    assert not np.array_equal(a.dataset.outcome, c.dataset.outcome)


def test_validation():
    with pytest.raises(DomainError):
        simulate_sinusoid(5)
    with pytest.raises(DomainError):
        simulate_sinusoid(100, lam=0)
    with pytest.raises(DomainError):
        simulate_sinusoid(100, phi=-1)
    with pytest.raises(DomainError):
        simulate_common_cause(100, "d")
    with pytest.raises(DomainError):
        DGPConfig("bogus")
    with pytest.raises(DomainError):
        monte_carlo(DGPConfig(N=50), reps=1)


@settings(max_examples=30, deadline=None)
@given(st.sampled_from(["sinusoid", "common_cause", "spillover", "smooth_trend", "iid"]),
       st.integers(0, 2 ** 32 - 1), st.sampled_from(["a", "b", "c"]))
def test_construction_identity(kind, seed, scen):
    sim = DGPConfig(kind, N=200, scenario=scen, gamma=0.3).simulate(seed)
    assert sim.construction_error() <= 1e-12


def test_common_cause_formulas_recorded():
    sim = simulate_common_cause(100, "b")
    assert "sin" in sim.params["formulas"]
    assert sim.dataset.metadata["dgp"]["scenario"] == "b"


def test_common_cause_scenarios():
    a = monte_carlo(DGPConfig("common_cause", scenario="a"), reps=200, seed=1)
    assert abs(a.bias("sfd")) < 3 * a.mc_se("sfd")
    # levels plim: beta + cov(z, z - z^2/2) / var(z) = 1 + (1/24) / (1/12)
    assert a.mean("levels") == pytest.approx(1.5, abs=0.01)
    b = monte_carlo(DGPConfig("common_cause", scenario="b"), ["sfd"], reps=200, seed=1)
    assert abs(b.bias("sfd")) < 3 * b.mc_se("sfd")
    c = monte_carlo(DGPConfig("common_cause", scenario="c"), ["sfd"], reps=200, seed=1)
    assert c.bias("sfd") > 3 * c.mc_se("sfd")


def test_spillover_lag_included_and_omitted():
    rep = monte_carlo(DGPConfig("spillover", N=1000, gamma=0.6), ["sfd", "sfd[x]"], reps=500,
                      seed=2)
    assert abs(rep.bias("sfd", "x")) < 3 * rep.mc_se("sfd", "x")
    assert abs(rep.bias("sfd", "x_lag1")) < 3 * rep.mc_se("sfd", "x_lag1")
    # plim of the omitted-lag slope is beta - gamma / 2
    assert abs(rep.mean("sfd[x]") - 0.7) < 3 * rep.mc_se("sfd[x]")
    none = monte_carlo(DGPConfig("spillover", N=1000, gamma=0.0), ["sfd[x]"], reps=300, seed=2)
    assert abs(none.bias("sfd[x]")) < 3 * none.mc_se("sfd[x]")


def test_spillover_stores_lag():
    sim = simulate_spillover(50, 1.0, 0.5, seed=0)
    X = sim.dataset.regressors
    assert_array_equal(X[1:, 1], X[:-1, 0])
    assert sim.dataset.columns == ("x", "x_lag1")


def test_no_noise_means_coincide():
    rep = monte_carlo(DGPConfig(phi=0.0), reps=1000, seed=0)
    gap = abs(rep.mean("sfd") - rep.mean("levels"))
    assert gap < 3 * math.hypot(rep.mc_se("sfd"), rep.mc_se("levels"))


def test_report_structure(tmp_path):
    rep = monte_carlo(DGPConfig(N=100), ["levels", "sfd", "sdd", "robinson:1"], reps=20, seed=4)
    assert rep.reps == 20 and rep.draws["sfd"].shape == (20, 2)
    lo, hi = rep.quantiles("sfd")
    assert lo <= rep.mean("sfd") <= hi
    d = json.loads(rep.to_json())
    assert d["reps"] == 20 and d["failures"] == 0
    assert set(d["summary"]) == {"levels", "sfd", "sdd", "robinson:1"}
    assert "levels/sfd" in d["efficiency"]
    assert d["config"]["lam"] == 360.0
    p = tmp_path / "draws.csv"
    rep.to_long_csv(p)
    rows = list(csv.DictReader(p.open()))
    assert len(rows) == 20 * 2 * 4
    assert rows[0].keys() == {"rep", "estimator", "coefficient", "value"}


def test_failures_recorded():
    rep = monte_carlo(DGPConfig(N=50), ["sfd", "sfd[x,x]"], reps=5, seed=0)
    assert len(rep.failures) == 5
    assert all(f[1] == "sfd[x,x]" for f in rep.failures)
    assert rep.n_valid("sfd") == 5 and rep.n_valid("sfd[x,x]") == 0


def test_deterministic_and_parallel_invariant():
    cfg = DGPConfig(N=100, seed=3)
    a = monte_carlo(cfg, reps=12)
    b = monte_carlo(cfg, reps=12)
    c = monte_carlo(cfg, reps=12, n_jobs=2)
    for e in ("levels", "sfd"):
        assert_array_equal(a.draws[e], b.draws[e])
        assert_array_equal(a.draws[e], c.draws[e])


def test_mc_standard_error_scaling():
    cfg = DGPConfig(N=100)
    se = {n: monte_carlo(cfg, ["sfd"], reps=n, seed=5).mc_se("sfd") for n in (250, 500, 1000)}
    assert se[250] / se[1000] == pytest.approx(2.0, rel=0.15)
    assert se[250] / se[500] == pytest.approx(math.sqrt(2), rel=0.15)
    assert se[500] / se[1000] == pytest.approx(math.sqrt(2), rel=0.15)


def test_lambda_grid():
    out = monte_carlo_lambda_grid(DGPConfig(N=100), [90, 360], reps=5)
    assert sorted(out) == [90.0, 360.0]
    assert out[90.0].config.lam == 90.0
    with pytest.raises(DomainError):
        monte_carlo_lambda_grid(DGPConfig("iid", N=100), [90], reps=5)


def test_estimator_spec_parse():
    assert EstimatorSpec.parse("robinson:3") == EstimatorSpec("robinson", 3)
    assert EstimatorSpec.parse("sfd[x]").columns == ("x",)
    assert EstimatorSpec.parse("sdd").name == "sdd"
    for bad in ("robinson", "sfd:2", "ols"):
        with pytest.raises(DomainError):
            EstimatorSpec.parse(bad)


def test_smooth_trend_and_iid_shapes():
    assert simulate_smooth_trend(60).dataset.n == 60
    sim = simulate_iid(80, beta=2.0, seed=1)
    assert sim.alpha == 0 and np.all(sim.c == 0)
    assert fit(sim.dataset, sim.path, "levels").coef("x") == pytest.approx(2, abs=0.4)
