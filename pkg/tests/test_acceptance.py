"""Acceptance criteria, each run at its stated scale and tolerance.

Every criterion records one ``PASS``/``FAIL`` line, printed directly and
repeated in the pytest terminal summary.
"""
import numpy as np
import pytest

from conftest import ACCEPTANCE_LINES, MODELS
from kncalc.config import parse_config
from kncalc.verify import run_suite, write_reports


def _cfg(kind, **extra):
    return parse_config({"geometry": {"kind": kind, "n": 128}, "seed": 2024, **extra})


@pytest.fixture(scope="module")
def suites():
    return {kind: {r.name: r for r in run_suite(_cfg(kind))} for kind in MODELS}


def _record(number, title, ok, detail):
    line = f"criterion {number}: {'PASS' if ok else 'FAIL'} {title} ({detail})"
    ACCEPTANCE_LINES.append(line)
    print(line)
    assert ok, line


def _summary(reports):
    return "; ".join(f"{r.geometry} measured={r.measured:.3g} tol={r.tolerance:.3g}"
                     + ("" if not r.error else f" error={r.error}") for r in reports)


def _criterion(number, title, reports):
    reports = list(reports)
    _record(number, title, all(r.passed for r in reports), _summary(reports))


def test_identity_quantization(suites):
    rep = suites["circle"]["identity"]
    assert rep.n == 128 and rep.tolerance == 1e-6
    _criterion(1, "identity quantization", [rep])


def test_vector_field_quantization(suites):
    rep = suites["circle"]["vector_field"]
    assert rep.details["N"] == 256 and set(rep.details["per_model"]) == set(MODELS)
    _criterion(2, "vector-field quantization", [rep])


def test_euclidean_oracle(suites):
    rep = suites["sc_line"]["weylq_oracle"]
    assert rep.geometry == "sc_line" and rep.n == 128
    assert set(rep.details["gaps"]) == {"gauss", "jbracket_pow:-2", "xi"}
    _criterion(3, "Euclidean-oracle agreement", [rep])


def test_cutoff_independence(suites):
    reps = [suites[k]["chi_independence"] for k in MODELS]
    for r in reps:
        assert r.tolerance == -3.0 and r.details["control_slope"] >= -1.0
    _criterion(4, "cutoff independence", reps)


def test_composition_law(suites):
    reps = [suites[k]["composition_law"] for k in MODELS]
    assert all(r.n == 512 and r.tolerance == 2e-2 for r in reps)
    _criterion(5, "composition symbol law", reps)


def test_commutator_poisson(suites):
    rep = suites["circle"]["commutator_poisson"]
    assert len(rep.details["pairs"]) == 5
    assert {p.split(":")[0] for p in rep.details["pairs"]} == set(MODELS)
    _criterion(6, "commutator-Poisson", [rep])


def test_conjugation_stability(suites):
    rep = suites["b_interval"]["conjugation_power"]
    assert rep.geometry == "b_interval"
    _criterion(7, "conjugation by x^s", [rep])


def test_sobolev_ladder(suites):
    reps = [suites[k]["sobolev_ladder"] for k in MODELS]
    for r in reps:
        assert set(r.details["spreads"]) == {"m=0,s=0", "m=1,s=1", "m=2,s=1"}
        assert r.tolerance == 0.1
    _criterion(8, "Sobolev ladder", reps)


def test_diff_recovery(suites):
    _criterion(9, "differential operator recovery", [suites[k]["diff_recovery"] for k in MODELS])


def test_suspended_invariance(suites):
    reps = [suites[k]["suspended_invariance"] for k in MODELS]
    assert all(r.details["composition_gap"] <= 1e-8 for r in reps)
    _criterion(10, "suspended invariance", reps)


def test_semiclassical_scaling(suites):
    rep = suites["circle"]["semiclassical_scaling"]
    slope = rep.details["slope"]
    _record(11, "semiclassical scaling", rep.passed and abs(slope - 1) <= 0.1,
            f"slope={slope:.4f} over t in (1, 1/2, 1/4, 1/8)")


def test_determinism(suites, tmp_path):
    first = write_reports(list(suites["b_interval"].values()), tmp_path / "a", plots=False)
    rerun = run_suite(_cfg("b_interval"))
    second = write_reports(rerun, tmp_path / "b", plots=False)
    names = sorted(p.name for p in (tmp_path / "a").glob("*.csv"))
    same = all((tmp_path / "a" / n).read_bytes() == (tmp_path / "b" / n).read_bytes() for n in names)
    same = same and first["csv"].read_bytes() == second["csv"].read_bytes()
    all_pass = len(rerun) == 13 and all(r.passed for r in rerun)
    _record(12, "determinism", same and all_pass,
            f"{len(names)} CSV files compared; full BInterval N=128 suite: "
            f"{sum(r.passed for r in rerun)}/{len(rerun)} pass")
