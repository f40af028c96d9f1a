import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from scipy.integrate import quad

from kncalc.geometry import (
    GridFunction,
    ModelKind,
    anchor_apply,
    lie_bracket,
    make_model,
    riemannian_volume_weights,
    spectral_derivative,
)


def test_circle_frame_is_one_and_has_no_boundary():
    g = make_model("circle", 64)
    assert np.all(g.frame(g.nodes) == 1.0)
    assert g.bdf == ()
    assert g.is_compact


def test_b_interval_frame_at_half():
    g = make_model("BInterval", 128, window=10)
    assert g.frame(0.5) == pytest.approx(0.25, abs=0)


@pytest.mark.parametrize("alias,kind", [
    ("Circle", ModelKind.CIRCLE), ("binterval", ModelKind.B_INTERVAL),
    ("ScLine", ModelKind.SC_LINE), ("sc-line", ModelKind.SC_LINE),
])
def test_kind_aliases(alias, kind):
    assert ModelKind.parse(alias) is kind


@pytest.mark.parametrize("kwargs", [
    dict(kind="torus"), dict(kind="circle", n=8), dict(kind="circle", n=-4),
    dict(kind="b_interval", window=0.0), dict(kind="sc_line", window=-1.0),
    dict(kind="sc_line", c=0.0), dict(kind="circle", n=65),
])
def test_make_model_rejects_bad_parameters(kwargs):
    with pytest.raises(ValueError):
        make_model(**kwargs)


def test_sc_line_unit_geodesic_length():
    # arclength of the metric ds = dx / frame(x) by adaptive quadrature
    g = make_model("sc_line", 128, window=10, c=1.0)
    a, b = g.unstraighten(0.0), g.unstraighten(1.0)
    length, _ = quad(lambda x: 1.0 / g.frame(x), a, b, epsabs=1e-13, epsrel=1e-13)
    assert length == pytest.approx(1.0, abs=1e-10)


@pytest.mark.parametrize("kind,c", [("b_interval", 1.0), ("sc_line", 1.0), ("sc_line", 2.5)])
def test_isometry_on_random_pairs(kind, c, rng):
    g = make_model(kind, 64, c=c)
    lo, hi = g.interior_chart
    pts = rng.uniform(lo + 1e-3, hi - 1e-3, size=(100, 2))
    for x1, x2 in pts:
        length, _ = quad(lambda x: 1.0 / g.frame(x), min(x1, x2), max(x1, x2), epsabs=1e-12, epsrel=1e-12)
        assert length == pytest.approx(abs(g.straighten(x1) - g.straighten(x2)), abs=1e-8)


def test_frame_vanishes_at_boundary(model_kind):
    g = make_model(model_kind, 32)
    for p in g.boundary_points:
        assert abs(g.frame(p)) <= 1e-14
        assert any(abs(h(p)) <= 1e-14 for h in g.bdf)


def test_nodes_strictly_interior(model_kind):
    g = make_model(model_kind, 512, window=10)
    for h in g.bdf:
        assert np.all(h(g.nodes) > 0)


def test_frame_length_matches_metric(model_kind):
    # the g0-length of the frame field is sqrt(g) = 1 in the straightened chart
    g = make_model(model_kind, 64)
    x = g.nodes
    ds_dx = 1.0 / g.frame(x)
    assert np.allclose(g.frame(x) * ds_dx, np.sqrt(g.metric_coeff(x)), atol=1e-12)


@settings(max_examples=60, deadline=None)
@given(u=st.floats(0.001, 0.999), kind=st.sampled_from(["b_interval", "sc_line"]))
def test_straightening_roundtrip(u, kind):
    g = make_model(kind, 16)
    lo, hi = g.interior_chart
    x = lo + (hi - lo) * u
    assert g.unstraighten(g.straighten(x)) == pytest.approx(x, abs=1e-12)


@pytest.mark.parametrize("kind", ["b_interval", "sc_line"])
def test_straightened_chart_is_unbounded(kind):
    g = make_model(kind, 16)
    lo, hi = g.interior_chart
    eps = 10.0 ** -np.arange(2, 12)
    assert np.all(np.diff(np.abs(g.straighten(hi - eps))) > 0)
    assert np.all(np.diff(np.abs(g.straighten(lo + eps))) > 0)
    assert abs(g.straighten(hi - 1e-11)) > 10


def test_circle_weights():
    g = make_model("circle", 64)
    assert np.allclose(riemannian_volume_weights(g), 2 * np.pi / 64, rtol=0, atol=1e-15)


@pytest.mark.parametrize("kind,window", [("b_interval", 10.0), ("sc_line", 10.0), ("sc_line", 3.5)])
def test_window_volume(kind, window):
    g = make_model(kind, 128, window=window)
    w = riemannian_volume_weights(g)
    assert np.all(w > 0)
    assert w.sum() == pytest.approx(2 * window, abs=1e-8)
    assert GridFunction.from_function(g, np.ones_like).integrate().real == pytest.approx(2 * window, abs=1e-8)


def test_anchor_circle_sine():
    g = make_model("circle", 64)
    out = anchor_apply(g, GridFunction.from_function(g, np.sin))
    assert np.abs(out.values - np.cos(g.nodes)).max() <= 1e-10


def test_anchor_of_straightening_is_one():
    g = make_model("b_interval", 128, window=10)
    out = anchor_apply(g, GridFunction.from_function(g, g.straighten))
    assert np.abs(out.values - 1.0).max() <= 1e-10


def test_anchor_sc_line_gaussian():
    g = make_model("sc_line", 256, window=10)
    s = g.s_nodes
    out = anchor_apply(g, GridFunction.from_straightened(g, lambda s: np.exp(-s**2)))
    assert np.abs(out.values - (-2 * s * np.exp(-s**2))).max() <= 1e-8


def test_anchor_is_a_derivation(model_kind):
    g = make_model(model_kind, 256, window=10)
    if g.is_compact:
        bump = np.exp(-2.0 * (1.0 + np.cos(g.s_nodes)))
    else:
        bump = np.exp(-g.s_nodes**2)
    f = GridFunction(g, bump * np.cos(g.s_nodes))
    h = GridFunction(g, bump * (1 + 0.5 * np.sin(2 * g.s_nodes)))
    lhs = anchor_apply(g, f * h)
    rhs = f * anchor_apply(g, h) + h * anchor_apply(g, f)
    assert np.abs((lhs - rhs).values).max() <= 1e-9


def test_anchor_grid_mismatch():
    g1, g2 = make_model("circle", 64), make_model("circle", 128)
    with pytest.raises(ValueError, match="grid mismatch"):
        anchor_apply(g1, GridFunction.from_function(g2, np.sin))


def test_grid_function_shape_checked():
    g = make_model("circle", 32)
    with pytest.raises(ValueError):
        GridFunction(g, np.zeros(31))


def test_grid_arrays_are_read_only():
    g = make_model("sc_line", 32)
    with pytest.raises(ValueError):
        g.nodes[0] = 0.0
    f = GridFunction.from_function(g, np.cos)
    with pytest.raises(ValueError):
        f.values[0] = 1.0


@pytest.mark.parametrize("order", [1, 2, 3])
def test_spectral_derivative_on_circle(order):
    g = make_model("circle", 64)
    d = spectral_derivative(g, np.sin(3 * g.s_nodes), order)
    exact = [None, 3 * np.cos(3 * g.s_nodes), -9 * np.sin(3 * g.s_nodes), -27 * np.cos(3 * g.s_nodes)]
    assert np.abs(d - exact[order]).max() <= 1e-10


def test_lie_bracket_of_frame_with_itself_vanishes():
    g = make_model("b_interval", 64)
    h = lie_bracket(g, np.ones_like, np.ones_like)
    assert np.abs(h(np.linspace(0.1, 0.9, 9))).max() <= 1e-8


def test_lie_bracket_matches_s_derivative():
    # [e, w e] = (d_s w) e; for w = x on b_interval, d_s x = x (1 - x)
    g = make_model("b_interval", 64)
    h = lie_bracket(g, np.ones_like, lambda x: np.asarray(x, float))
    x = np.linspace(0.05, 0.95, 19)
    assert np.abs(h(x) - x * (1 - x)).max() <= 1e-8


def test_describe_mentions_parameters():
    assert "N=64" in make_model("sc_line", 64, window=5).describe()
    assert math.isclose(make_model("circle", 64).window, math.pi)
