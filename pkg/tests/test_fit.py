import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from twinforge.fit import (
    BindConflict,
    FitResult,
    NoViableFit,
    SampleSet,
    UnsupportedData,
    bind,
    fit_family,
    fits_from_json,
    fits_json,
    read_samples,
    select_fit,
)
from twinforge.model import DistSpec, Family
from twinforge.netlist import write_netlist

from conftest import line_graph


def test_constant_data_is_degenerate():
    r = fit_family([3.0] * 20, "normal")
    assert r.family is Family.DETERMINISTIC and r.params == (3.0,) and r.degenerate


def test_exponential_rate():
    x = np.random.default_rng(2024).exponential(scale=2.0, size=10_000)
    r = fit_family(x, Family.EXPONENTIAL)
    assert 0.475 <= r.params[0] <= 0.525
    assert r.params[0] == pytest.approx(1 / x.mean())


def test_normal_closed_form():
    r = fit_family([1.0, 2.0, 3.0], "normal")
    assert r.params == pytest.approx((2.0, math.sqrt(2 / 3)))
    assert r.aic == pytest.approx(2 * 2 - 2 * r.loglik)
    assert 0 <= r.ks_stat <= 1


def test_positive_support():
    with pytest.raises(UnsupportedData):
        fit_family([1.0, -2.0, 3.0], "lognormal")
    with pytest.raises(UnsupportedData):
        fit_family([1.0], "gamma")


def test_gamma_mle_matches_scipy():
    from scipy import stats

    x = np.random.default_rng(5).gamma(2.5, 1.3, size=5000)
    a, _, scale = stats.gamma.fit(x, floc=0)
    r = fit_family(x, "gamma")
    assert r.params == pytest.approx((a, scale), rel=1e-4)


@pytest.mark.parametrize("seed", range(3))
def test_selection(seed):
    rng = np.random.default_rng(seed)
    cands = ["exp", "normal", "uniform"]
    assert select_fit(rng.exponential(2.0, 10_000), cands).family is Family.EXPONENTIAL
    assert select_fit(rng.uniform(0, 1, 10_000), cands).family is Family.UNIFORM


def test_single_candidate_and_no_viable():
    x = [1.0, 2.0, 4.0]
    assert select_fit(x, ["gamma"]) == fit_family(x, "gamma")
    with pytest.raises(NoViableFit):
        select_fit([-1.0, 2.0], ["exp", "lognormal"])
    assert select_fit(x, ["normal", "uniform"], criterion="ks").family in (Family.NORMAL, Family.UNIFORM)


def test_window():
    s = SampleSet((1.0, 2.0, 50.0), "M1.delay", window=(0.0, 1.5), times=(0.0, 1.0, 2.0))
    assert fit_family(s, "normal").params[0] == pytest.approx(1.5)


def test_bind_examples():
    g = line_graph(3)
    fit = fit_family([1.0, 2.0, 3.0], "normal")
    bound, plan = bind(g, {"M1.delay": fit})
    assert bound.nodes["M1"].params["delay"] == DistSpec.normal(*fit.params)
    assert [(e.node_id, e.param_name) for e in plan.entries] == [("M1", "delay")]
    same, plan = bind(g, {"M9.delay": fit})
    assert plan.unmatched == ("M9.delay",) and write_netlist(same) == write_netlist(g)
    with pytest.raises(BindConflict):
        bind(g, {"a": fit, "b": fit}, overrides={"a": "M1.delay", "b": "M1.delay"})


def test_override_wins():
    g = line_graph(2)
    f1, f2 = fit_family([1.0, 2.0], "uniform"), fit_family([5.0, 6.0], "uniform")
    bound, plan = bind(g, {"M1.delay": f1, "press": f2}, overrides={"press": "M1.delay"})
    assert bound.nodes["M1"].params["delay"] == f2.dist
    assert plan.unmatched == ("M1.delay",)


@settings(max_examples=40, deadline=None)
@given(st.lists(st.floats(0.1, 10), min_size=2, max_size=30), st.sampled_from(["M1", "M2", "M3", "B1", "SRC"]))
def test_bind_orthogonality(values, target):
    g = line_graph(3)
    param = {"B1": "capacity", "SRC": "inter_arrival"}.get(target, "delay")
    fit = fit_family(values, "exp")
    bound, _ = bind(g, {f"{target}.{param}": fit})
    assert set(bound.nodes) == set(g.nodes) and set(bound.edges) == set(g.edges) and bound.scopes == g.scopes
    assert all((bound.edges[e].src, bound.edges[e].dst) == (g.edges[e].src, g.edges[e].dst) for e in g.edges)
    assert all(bound.nodes[n].kind == g.nodes[n].kind and bound.nodes[n].scope == g.nodes[n].scope for n in g.nodes)


def test_csv_and_json_io():
    sets = read_samples("source_name,value\nM1.delay,1.0\nM1.delay,2.0\nM2.delay,3.0\n")
    assert sets["M1.delay"].values == (1.0, 2.0) and sets["M2.delay"].values == (3.0,)
    assert read_samples("value\n1\n2\n", name="X")["X"].values == (1.0, 2.0)
    fits = {"M1.delay": fit_family([1.0, 2.0, 3.0], "normal")}
    back = fits_from_json(fits_json(fits))
    assert back["M1.delay"].params == pytest.approx(fits["M1.delay"].params)
    assert isinstance(back["M1.delay"], FitResult)
