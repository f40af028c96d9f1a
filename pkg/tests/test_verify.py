import math

import numpy as np
import pytest

from kncalc.config import RunConfig, parse_config
from kncalc.geometry import GridFunction, make_model
from kncalc.quantize import assemble_kernel, identity_operator
from kncalc.symbols import gauss_symbol, symbol_from_name, vector_field_symbol
from kncalc.verify import (
    CHECKS,
    REQUIRED_CLAIMS,
    CheckReport,
    CheckSpec,
    bandlimited_field,
    calibrate_kappa,
    check_names,
    estimate_sobolev_bound,
    oracle_weylq,
    run_check,
    run_suite,
    sobolev_ladder,
    sobolev_norm,
)
from kncalc.verify import _finish

EXPECTED_CHECKS = [
    "identity", "vector_field", "weylq_oracle", "chi_independence", "composition_law",
    "commutator_poisson", "adjoint_order_drop", "conjugation_power", "flow_conjugation",
    "diff_recovery", "sobolev_ladder", "suspended_invariance", "semiclassical_scaling",
]


def test_registry_lists_the_thirteen_checks():
    assert check_names() == EXPECTED_CHECKS


def test_registry_covers_required_claims():
    covered = {c for spec in CHECKS.values() for c in spec.claims}
    assert REQUIRED_CLAIMS <= covered
    assert all(spec.summary and math.isfinite(spec.default_tol) for spec in CHECKS.values())


# -- oracles ---------------------------------------------------------------------------


def test_oracle_identity(rng):
    g = make_model("sc_line", 64, window=6)
    u = GridFunction(g, bandlimited_field(g, rng, taper=True))
    assert np.abs(oracle_weylq(g, symbol_from_name("one"), u).values - u.values).max() <= 1e-6


@pytest.mark.parametrize("kind,n,window", [("circle", 64, 0), ("sc_line", 128, 8)])
def test_oracle_plane_wave_eigen_action(kind, n, window):
    g = make_model(kind, n, window=window or 10)
    k = 3 if kind == "circle" else 2 * np.pi * 6 / (2 * g.window)
    u = GridFunction(g, np.exp(1j * k * g.s_nodes))
    out = oracle_weylq(g, symbol_from_name("xi"), u).values
    inner = np.abs(g.s_nodes - (np.pi if kind == "circle" else 0.0)) <= (3 if kind == "circle" else 5)
    assert np.abs(out - k * u.values)[inner].max() <= 1e-5


@pytest.mark.parametrize("kind", ["circle", "sc_line"])
def test_oracle_agrees_with_assembly_on_gauss(kind, rng):
    g = make_model(kind, 64, window=6)
    u = GridFunction(g, bandlimited_field(g, rng, taper=True))
    ours = assemble_kernel(g, gauss_symbol())(u).values
    assert np.abs(ours - oracle_weylq(g, gauss_symbol(), u).values).max() <= 1e-7


def test_bandlimited_field_spectrum(rng):
    g = make_model("circle", 64)
    u = bandlimited_field(g, rng, band=0.25)
    spec = np.abs(np.fft.rfft(u))
    assert spec[9:].max() <= 1e-12 * spec.max()
    assert np.abs(u).max() == pytest.approx(1.0)
    assert np.isrealobj(u)


def test_bandlimited_field_is_seeded():
    g = make_model("b_interval", 64, window=6)
    a = bandlimited_field(g, np.random.default_rng(3), taper=True)
    b = bandlimited_field(g, np.random.default_rng(3), taper=True)
    assert np.array_equal(a, b)
    assert abs(a[0]) <= 1e-12 and abs(a[-1]) <= 1e-12


# -- Sobolev estimates ---------------------------------------------------------------------


def test_sobolev_norm_of_constant():
    g = make_model("circle", 64)
    assert sobolev_norm(g, np.ones(64), 2.0) == pytest.approx(math.sqrt(2 * math.pi))
    # (1 + k^2)^(s/2) on a single mode
    assert sobolev_norm(g, np.cos(3 * g.nodes), 1.0) == pytest.approx(math.sqrt(10 * math.pi))


def test_identity_bound_is_one():
    est = estimate_sobolev_bound(identity_operator(make_model("circle", 64)), 0.0, 0.0)
    assert est == pytest.approx(1.0, abs=1e-6)


def test_estimate_below_exact_norm():
    g = make_model("b_interval", 64, window=6)
    P = assemble_kernel(g, symbol_from_name("xi"))
    est = estimate_sobolev_bound(P, 1.0, 1.0, band=1.0)
    exact = estimate_sobolev_bound(P, 1.0, 1.0, exact=True)
    assert est <= exact * (1 + 1e-12)
    assert est >= 0.9 * exact


def test_vector_field_bounded_across_ladder():
    f = lambda s, L: 1.0 + 0.5 * np.sin(np.pi * s / L)  # noqa: E731

    def build(n):
        g = make_model("b_interval", n, window=10)
        return assemble_kernel(g, vector_field_symbol(lambda x: f(g.straighten(x), g.window)))

    est = sobolev_ladder(build, 1.0, 1.0)
    assert (est.max() - est.min()) / est.min() < 0.1
    wrong = sobolev_ladder(build, 1.0, 0.0)
    # order 1 tagged as order 0: the estimate grows roughly like N
    assert np.all(np.diff(wrong) > 0)
    assert 4.0 <= wrong[-1] / wrong[0] <= 16.0


def test_sobolev_exponent_range():
    with pytest.raises(ValueError):
        estimate_sobolev_bound(identity_operator(make_model("circle", 16)), 5.0, 0.0)


# -- suite machinery ---------------------------------------------------------------------------


def test_empty_selection():
    assert run_suite(parse_config({"suite": {"checks": []}})) == []


def test_identity_on_small_circle():
    rep = run_check("identity", parse_config({"geometry": {"n": 64}}))
    assert rep.passed and rep.measured <= 1e-6
    assert rep.geometry == "circle" and rep.n == 64


def test_reports_are_reproducible():
    cfg = parse_config({"geometry": {"kind": "sc_line", "n": 64}, "seed": 5})
    a, b = run_check("identity", cfg), run_check("identity", cfg)
    assert a.measured == b.measured


def test_failure_sense_and_conditions():
    rep = _finish(CheckReport("x", "circle", 16, 1.0, 0.5, 0.2, False, sense="ge"))
    assert rep.passed
    rep = _finish(CheckReport("x", "circle", 16, 1.0, 0.1, 0.2, False, conditions={"c": np.bool_(False)}))
    assert not rep.passed and rep.conditions == {"c": False}
    rep = _finish(CheckReport("x", "circle", 16, 1.0, math.nan, 0.2, False))
    assert not rep.passed


def test_check_errors_become_failing_reports(monkeypatch):
    def boom(ctx):
        raise ArithmeticError("no convergence")

    monkeypatch.setitem(CHECKS, "identity", CheckSpec(boom, ("density-correction",), 1e-6, "x"))
    rep = run_check("identity", RunConfig())
    assert not rep.passed
    assert rep.error == "ArithmeticError: no convergence"
    assert math.isnan(rep.measured)


def test_kappa_calibration():
    kappa, gap = calibrate_kappa()
    assert kappa == -1j
    assert gap <= 1e-3
