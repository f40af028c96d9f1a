import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from kncalc.geometry import lie_bracket, make_model
from kncalc.symbols import (
    PolySymbol,
    PrincipalSymbolError,
    Symbol,
    SymbolClass,
    estimate_order,
    gauss_symbol,
    jbracket,
    jbracket_power,
    multiplication_symbol,
    poisson_bracket,
    poly_symbol,
    principal_symbol,
    principal_value,
    registry_names,
    rescale_covariable,
    symbol_from_function,
    symbol_from_name,
    vector_field_symbol,
)

XS = np.linspace(0.1, 0.9, 9)


@pytest.mark.parametrize("xi,expected", [(0.0, 1.0), (1.0, math.sqrt(2)), (3.0, math.sqrt(10))])
def test_jbracket_values(model_kind, xi, expected):
    g = make_model(model_kind, 16)
    assert jbracket(g, xi) == pytest.approx(expected, abs=1e-15)


@pytest.mark.parametrize("m", [2.0, 1.0, -1.0, 0.5])
def test_jbracket_power_values(m):
    sym = jbracket_power(m)
    xi = np.array([-5.0, 0.0, 0.3, 40.0])
    assert np.allclose(sym(0.5, xi), (1 + xi**2) ** (m / 2), rtol=1e-14)
    assert sym.order == m


def test_even_powers_are_polynomials():
    sym = jbracket_power(4)
    assert isinstance(sym, PolySymbol)
    assert sym.kind is SymbolClass.CLASSICAL
    assert np.allclose(sym.coefficient_values(0.3), [1, 0, 2, 0, 1])


@pytest.mark.parametrize("name,order", [("jbracket_pow:2", 2.0), ("xi", 1.0), ("frame_field", 1.0),
                                        ("jbracket_pow:1", 1.0), ("jbracket_pow:-2", -2.0)])
def test_estimate_order(name, order):
    est = estimate_order(symbol_from_name(name), XS)
    assert est.order == pytest.approx(order, abs=0.05)
    assert not est.violation
    assert not est.smoothing_candidate
    assert all(np.isfinite(c) for c in est.constants.values())


def test_gaussian_is_a_smoothing_candidate():
    est = estimate_order(gauss_symbol(), XS)
    assert est.order <= -3
    assert est.smoothing_candidate
    assert all(np.isfinite(c) for c in est.constants.values())


def test_order_violation_flagged():
    # oscillation in xi makes the first derivative grow as fast as the symbol
    sym = symbol_from_function(lambda x, xi: np.cos(xi) * np.sqrt(1 + xi**2), 1.0)
    assert estimate_order(sym, XS).violation


def test_non_finite_symbol_rejected():
    sym = symbol_from_function(lambda x, xi: np.full(np.shape(xi), np.nan), 0.0)
    with pytest.raises(ValueError):
        estimate_order(sym, XS)


@pytest.mark.parametrize("m", [1.0, -1.0, 3.0, 0.5])
@pytest.mark.parametrize("k", [1, 2, 3, 4])
def test_analytic_fiber_derivatives_match_differences(m, k):
    analytic = jbracket_power(m)
    numeric = symbol_from_function(analytic.func, m)
    xi = np.array([-7.0, -0.4, 0.0, 1.3, 12.0])
    exact = analytic.xi_derivative(0.5, xi, k)
    approx = numeric.xi_derivative(0.5, xi, k)
    scale = (1 + xi**2) ** ((m - k) / 2)
    assert np.abs(exact - approx).max() / scale.max() <= 1e-4


@pytest.mark.parametrize("k", [0, 1, 2, 3])
def test_gauss_fiber_derivatives(k):
    xi = np.linspace(-3, 3, 13)
    numeric = symbol_from_function(gauss_symbol().func, 0.0).xi_derivative(0.0, xi, k)
    assert np.abs(gauss_symbol().xi_derivative(0.0, xi, k) - numeric).max() <= 1e-4


def test_polynomial_principal_part():
    sym = poly_symbol([np.sin, 3.0, 1.0])
    top = principal_symbol(sym)
    xi = np.array([-2.0, 0.5, 7.0])
    assert np.allclose(top(0.4, xi), xi**2, atol=0)
    assert top.degree == 2


def test_jbracket_principal_part():
    top = principal_symbol(jbracket_power(1))
    xi = np.array([-4.0, 0.25, 9.0])
    assert np.allclose(top(0.5, xi), np.abs(xi), rtol=1e-15)


def test_vector_field_principal_part():
    sym = vector_field_symbol(np.cos)
    top = principal_symbol(sym)
    assert np.allclose(top(XS, 2.0), 2 * np.cos(XS), rtol=1e-15)


def test_principal_value_limit_of_type10_symbol():
    # (1 + xi^2)^(1/2) + xi^0 has limit |xi| after dividing by lam
    sym = symbol_from_function(lambda x, xi: np.sqrt(1 + xi**2) + 1.0, 1.0)
    value, err = principal_value(sym, 0.3, 2.0)
    assert value == pytest.approx(2.0, abs=1e-4)
    assert err < 1e-2
    generic = principal_symbol(sym)
    assert generic(0.3, -1.5) == pytest.approx(1.5, abs=1e-4)


def test_principal_value_diverges():
    sym = symbol_from_function(lambda x, xi: xi * np.log(1 + np.abs(xi)), 1.0)
    with pytest.raises(PrincipalSymbolError):
        principal_value(sym, 0.3, 2.0)


def test_principal_symbol_is_multiplicative():
    a, b = jbracket_power(1), jbracket_power(3)
    xi = np.array([-3.0, 0.7, 10.0])
    prod = principal_symbol(a * b)
    assert np.allclose(prod(0.2, xi), principal_symbol(a)(0.2, xi) * principal_symbol(b)(0.2, xi))
    p, q = poly_symbol([1.0, np.cos]), poly_symbol([0.0, 2.0, np.sin])
    pq = poly_symbol([lambda x: 0 * x, 2.0, lambda x: np.sin(x) + 2 * np.cos(x), lambda x: np.cos(x) * np.sin(x)])
    assert np.allclose(principal_symbol(pq)(XS, 1.7),
                       principal_symbol(p)(XS, 1.7) * principal_symbol(q)(XS, 1.7), atol=1e-15)


def test_smoothing_principal_symbol_is_zero():
    assert np.all(principal_symbol(gauss_symbol())(0.5, np.array([0.0, 3.0])) == 0)


def test_vector_field_symbol_is_linear():
    sym = vector_field_symbol(lambda x: x**2)
    assert sym.degree == 1
    assert np.allclose(sym(XS, 3.0), 3 * XS**2)
    assert np.allclose(multiplication_symbol(np.exp)(XS, 8.0), np.exp(XS))


def test_rescaled_covariable():
    sym = rescale_covariable(jbracket_power(1), 0.5)
    xi = np.array([0.0, 2.0, 6.0])
    assert np.allclose(sym(0.1, xi), np.sqrt(1 + 0.25 * xi**2))
    assert np.allclose(sym.xi_derivative(0.1, xi, 1), 0.25 * xi / np.sqrt(1 + 0.25 * xi**2))
    poly = rescale_covariable(poly_symbol([1.0, 2.0, 3.0]), 2.0)
    assert np.allclose(poly.coefficient_values(0.0), [1, 4, 12])


def test_registry_round_trip():
    assert "gauss" in registry_names()
    assert np.allclose(symbol_from_name("poly:[1, 0, 2]")(0.0, 3.0), 19.0)
    assert symbol_from_name("one")(0.3, 50.0) == 1.0
    with pytest.raises(KeyError):
        symbol_from_name("unknown")
    with pytest.raises(ValueError):
        symbol_from_name("poly:[1,")
    with pytest.raises(ValueError):
        symbol_from_name('poly:["a"]')


# -- Poisson bracket ----------------------------------------------------------


def test_bracket_of_linear_symbols_is_lie_bracket():
    g = make_model("b_interval", 128)
    w = lambda x: x**2  # noqa: E731
    ax, ay = vector_field_symbol(1.0), vector_field_symbol(w)
    h = lie_bracket(g, lambda x: np.ones_like(x), w)
    lhs = poisson_bracket(g, ax, ay)
    rhs = vector_field_symbol(h)
    x = g.nodes
    xi = np.array([-3.0, 0.5, 2.0])[:, None]
    # hand value: d/ds x^2 = 2x * dx/ds = 2 x^2 (1 - x)
    assert np.abs(lhs(x, xi) - rhs(x, xi)).max() <= 1e-8
    assert np.abs(lhs(x, xi) - 2 * x**2 * (1 - x) * xi).max() <= 1e-8


@pytest.mark.parametrize("sym", [poly_symbol([np.sin, np.cos, 1.0]), jbracket_power(1),
                                 symbol_from_function(lambda x, xi: np.sin(x) * np.sqrt(1 + xi**2), 1.0)])
def test_bracket_is_antisymmetric(sym):
    g = make_model("sc_line", 32)
    assert np.abs(poisson_bracket(g, sym, sym)(XS - 0.5, 1.5)).max() <= 1e-12


@pytest.mark.parametrize("kind", ["b_interval", "sc_line"])
def test_xi_bracket_with_function(kind):
    g = make_model(kind, 32)
    x = g.nodes[4:-4]
    out = poisson_bracket(g, symbol_from_name("xi"), multiplication_symbol(lambda x: x))(x, 2.0)
    # d/ds of the coordinate x is the frame coefficient
    assert np.abs(out - g.frame(x)).max() <= 1e-8


def test_generic_bracket_matches_hand_value():
    g = make_model("circle", 32)
    a = symbol_from_function(lambda x, xi: np.sin(x) * xi**3, 3.0)
    b = symbol_from_function(lambda x, xi: np.cos(x) * xi, 1.0)
    xi = 1.7
    # da/dxi db/ds - da/ds db/dxi
    hand = 3 * np.sin(XS) * xi**2 * (-np.sin(XS)) * xi - np.cos(XS) * xi**3 * np.cos(XS)
    out = poisson_bracket(g, a, b)
    assert out.order == 3.0
    assert np.abs(out(XS, xi) - hand).max() <= 1e-6


def _leibniz_symbols():
    f = lambda x: np.exp(-4 * x**2)  # noqa: E731
    a = symbol_from_function(lambda x, xi: f(x) * np.sqrt(1 + xi**2), 1.0)
    b = symbol_from_function(lambda x, xi: np.sin(3 * x) * f(x) * xi, 1.0)
    c = symbol_from_function(lambda x, xi: f(x - 0.2) * np.exp(-xi**2), -math.inf)
    return a, b, c


def test_leibniz_rule():
    g = make_model("sc_line", 32)
    a, b, c = _leibniz_symbols()
    x = np.linspace(-0.8, 0.8, 17)[:, None]
    xi = np.linspace(-2, 2, 9)[None, :]
    lhs = poisson_bracket(g, a, b * c)(x, xi)
    rhs = poisson_bracket(g, a, b)(x, xi) * c(x, xi) + b(x, xi) * poisson_bracket(g, a, c)(x, xi)
    assert np.abs(lhs - rhs).max() <= 1e-8


def test_jacobi_identity_on_polynomials():
    g = make_model("b_interval", 64)
    p = poly_symbol([np.sin, lambda x: x**2, 1.0])
    q = poly_symbol([np.cos, np.exp])
    r = poly_symbol([lambda x: x, 0.0, lambda x: 1 - x])
    pb = lambda u, v: poisson_bracket(g, u, v)  # noqa: E731
    total = pb(p, pb(q, r)) + pb(q, pb(r, p)) + pb(r, pb(p, q))
    x = np.linspace(0.2, 0.8, 13)[:, None]
    xi = np.linspace(-2, 2, 5)[None, :]
    assert np.abs(total(x, xi)).max() <= 1e-7


@settings(max_examples=30, deadline=None)
@given(c=st.lists(st.floats(-3, 3), min_size=1, max_size=5), xi=st.floats(-10, 10))
def test_polynomial_evaluation_matches_numpy(c, xi):
    sym = poly_symbol(c)
    assert sym(0.3, xi) == pytest.approx(np.polynomial.polynomial.polyval(xi, c), abs=1e-9)
    assert sym.xi_derivative(0.3, xi, 1) == pytest.approx(
        np.polynomial.polynomial.polyval(xi, np.polynomial.polynomial.polyder(c)) if len(c) > 1 else 0.0,
        abs=1e-9)


@settings(max_examples=30, deadline=None)
@given(xi=st.floats(-100, 100), m=st.sampled_from([-2.0, -1.0, 1.0, 3.0]))
def test_sum_and_product_symbols(xi, m):
    a, b = jbracket_power(m), poly_symbol([1.0, 1.0])
    assert (a + b)(0.0, xi) == pytest.approx(a(0.0, xi) + b(0.0, xi))
    assert (a * b)(0.0, xi) == pytest.approx(a(0.0, xi) * b(0.0, xi))
    assert (a * b).order == m + 1


def test_symbols_are_immutable():
    sym = jbracket_power(1)
    with pytest.raises(AttributeError):
        sym.order = 3.0  # type: ignore[misc]
    assert isinstance(sym, Symbol)
