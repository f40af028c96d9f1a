"""Executable property checks for the quantization, with independent oracles.

Each check returns a :class:`CheckReport`. ``run_suite`` runs a selection of
checks from a :class:`~kncalc.config.RunConfig` and ``write_reports`` stores
a CSV table, a JSON summary, raw data series and SVG plots.
"""
from __future__ import annotations

import csv
import io
import json
import math
import warnings
import zlib
from dataclasses import dataclass, field
from pathlib import Path
from typing import Callable

import numpy as np

from ._numerics import loglog_slope
from ._quadrature import quadrature_kernel
from .config import RunConfig
from .expmap import Cutoff, FlowOp, FlowWindowWarning, flow_points, make_cutoff
from .extensions import (
    SemiclassicalFamily,
    SuspendedSymbol,
    ZGrid,
    check_invariance,
    suspended_operator,
)
from .geometry import GridFunction, ModelGeometry, anchor_apply, make_model
from .quantize import (
    DenseOperator,
    QuadratureError,
    assemble_kernel,
    conjugate_by_flow,
    conjugate_by_power,
    multiplication_operator,
    probe_bump,
    recover_symbol,
)
from .symbols import (
    jbracket_power,
    multiplication_symbol,
    poisson_bracket,
    poly_symbol,
    principal_symbol,
    symbol_from_function,
    symbol_from_name,
    vector_field_symbol,
)

__all__ = [
    "CheckReport",
    "CHECKS",
    "REQUIRED_CLAIMS",
    "check_names",
    "oracle_kernel",
    "oracle_weylq",
    "bandlimited_field",
    "sobolev_norm",
    "estimate_sobolev_bound",
    "sobolev_ladder",
    "calibrate_kappa",
    "run_check",
    "run_suite",
    "write_reports",
    "reports_csv",
]


@dataclass
class CheckReport:
    """Outcome of one check.

    ``passed`` compares ``measured`` with ``tolerance`` in the direction given
    by ``sense`` (``"le"``: measured must not exceed the tolerance) and also
    requires every auxiliary condition recorded in ``conditions``.
    """

    name: str
    geometry: str
    n: int
    window: float
    measured: float
    tolerance: float
    passed: bool
    sense: str = "le"
    claims: tuple = ()
    seed: int = 0
    details: dict = field(default_factory=dict)
    conditions: dict = field(default_factory=dict)
    series: dict = field(default_factory=dict)
    artifacts: list = field(default_factory=list)
    error: str | None = None

    def row(self) -> dict:
        return {"name": self.name, "geometry": self.geometry, "N": self.n,
                "L": _fmt(self.window), "measured": _fmt(self.measured),
                "tol": _fmt(self.tolerance), "pass": "true" if self.passed else "false"}


def _fmt(x: float) -> str:
    return repr(float(x))


def _finish(report: CheckReport) -> CheckReport:
    ok = np.isfinite(report.measured) and (
        report.measured <= report.tolerance if report.sense == "le"
        else report.measured >= report.tolerance)
    report.conditions = {k: bool(v) for k, v in report.conditions.items()}
    report.passed = bool(ok and all(report.conditions.values()))
    return report


def _report(name, geom: ModelGeometry | None, measured, tol, ctx, sense="le", n=None,
            window=None, **kw) -> CheckReport:
    spec = CHECKS[name]
    g = "multi" if geom is None else geom.kind.value
    n = (0 if geom is None else geom.n) if n is None else n
    window = (0.0 if geom is None else geom.window) if window is None else window
    return _finish(CheckReport(name, g, n, window, float(measured), float(tol), False, sense,
                               spec.claims, ctx.seed, **kw))


# -- oracles ----------------------------------------------------------------------


def oracle_kernel(geom: ModelGeometry, sym, chi: Cutoff | None = None,
                  tolerance: float = 1e-9, **kw) -> np.ndarray:
    """Kernel of ``a_chi(D)`` by Gauss-Legendre double quadrature.

    Raises ``QuadratureError`` if the estimated covariable tail exceeds
    ``tolerance``.
    """
    chi = make_cutoff(geom) if chi is None else chi
    M, tail = quadrature_kernel(geom, sym, chi, **kw)
    if tail > tolerance:
        raise QuadratureError(f"covariable tail {tail:.2e} exceeds tolerance {tolerance:.1e}")
    return M / geom.weights[None, :]


def oracle_weylq(geom: ModelGeometry, sym, u: GridFunction, chi: Cutoff | None = None,
                 tolerance: float = 1e-9) -> GridFunction:
    """Apply the Euclidean quantization formula by direct double quadrature."""
    K = oracle_kernel(geom, sym, chi, tolerance)
    return u.with_values(K @ (geom.weights * u.values))


# -- trial inputs and Sobolev norms --------------------------------------------------


def bandlimited_field(geom: ModelGeometry, rng: np.random.Generator, band: float = 0.5,
                      taper: bool = False) -> np.ndarray:
    """A real Gaussian random field with modes up to ``band`` times Nyquist.

    With ``taper`` the field is multiplied on the line models by the
    Gaussian envelope ``exp(-(6 s / L)^2)``, which is below ``3e-16`` at the
    window edges and keeps the product band-limited to rounding accuracy
    once ``N`` resolves the envelope.
    """
    n = geom.n
    kmax = max(1, int(band * n / 2))
    coef = np.zeros(n // 2 + 1, dtype=complex)
    coef[: kmax + 1] = rng.standard_normal(kmax + 1) + 1j * rng.standard_normal(kmax + 1)
    coef[0] = coef[0].real
    u = np.fft.irfft(coef, n=n)
    if taper and not geom.is_compact:
        u = u * np.exp(-((6.0 * geom.s_nodes / geom.window) ** 2))
    return u / np.abs(u).max()


def _lambda(geom: ModelGeometry, s: float) -> np.ndarray:
    return (1.0 + geom.frequencies**2) ** (s / 2)


def sobolev_norm(geom: ModelGeometry, values, s: float) -> float:
    """``||(1 + Delta)^(s/2) u||`` computed spectrally in the straightened chart."""
    v = np.fft.ifft(_lambda(geom, s) * np.fft.fft(np.asarray(values)))
    return float(np.sqrt(np.sum(geom.weights * np.abs(v) ** 2)))


def estimate_sobolev_bound(P: DenseOperator, s: float, m: float | None = None, trials: int = 8,
                           seed: int = 0, band: float = 0.5, power_steps: int = 12,
                           exact: bool = False) -> float:
    """Estimate of the ``H^s -> H^(s - m)`` norm of ``P``.

    Seeded band-limited random trial inputs are refined by ``power_steps``
    steps of power iteration inside the band-limited subspace; the result is
    the largest ratio ``||P u||_{s-m} / ||u||_s`` met. Without refinement a
    single trial measures an average over its spectrum rather than the
    worst frequency. With ``exact`` the full operator norm on the grid is
    computed from singular values instead.
    """
    geom = P.geometry
    m = P.order if m is None else m
    if not (-4 <= s <= 4 and -4 <= s - m <= 4):
        raise ValueError("Sobolev exponents must lie in [-4, 4]")
    n = geom.n
    F = np.fft.fft(np.eye(n), axis=0)
    Finv = np.fft.ifft(np.eye(n), axis=0)
    # B acts on v = Lambda^s u, so ||u||_s = ||v|| up to the uniform weight
    B = (Finv * _lambda(geom, s - m)) @ F @ P.matrix @ (Finv * _lambda(geom, -s)) @ F
    if exact:
        return float(np.linalg.norm(B, 2))
    keep = np.abs(np.fft.fftfreq(n, 1.0 / n)) <= max(1, int(band * n / 2))
    Pi = (Finv * keep) @ F
    Bb = B @ Pi
    G = Bb.conj().T @ Bb
    rng = np.random.default_rng(seed)
    best = 0.0
    for _ in range(trials):
        v = Pi @ bandlimited_field(geom, rng, band)
        for k in range(power_steps + 1):
            nv = np.linalg.norm(v)
            if nv == 0:
                break
            best = max(best, float(np.linalg.norm(Bb @ v) / nv))
            if k < power_steps:
                v = G @ (v / nv)
    return best


def sobolev_ladder(build: Callable[[int], DenseOperator], s: float, m: float | None = None,
                   ns=(64, 128, 256, 512), **kw) -> np.ndarray:
    """Sobolev norm estimates for operators built at each grid size."""
    return np.array([estimate_sobolev_bound(build(n), s, m, **kw) for n in ns])


# -- check machinery ---------------------------------------------------------------


@dataclass(frozen=True)
class CheckSpec:
    func: Callable
    claims: tuple
    default_tol: float
    summary: str


CHECKS: dict[str, CheckSpec] = {}

# claim tags the registry must cover
REQUIRED_CLAIMS = frozenset({
    "conjugation-by-defining-function",
    "flow-conjugation",
    "principal-symbol-isomorphism",
    "algebra-closure",
    "adjoint-closure",
    "sobolev-boundedness",
    "commutator-poisson",
    "vector-field-quantization",
    "diff-intersection",
    "cutoff-independence",
    "face-preservation",
})


def check(name: str, claims: tuple, tol: float, summary: str):
    def deco(func):
        CHECKS[name] = CheckSpec(func, claims, tol, summary)
        return func
    return deco


def check_names() -> list[str]:
    return list(CHECKS)


@dataclass
class Context:
    cfg: RunConfig
    name: str

    @property
    def seed(self) -> int:
        return self.cfg.seed

    @property
    def rng(self) -> np.random.Generator:
        return np.random.default_rng([self.cfg.seed, zlib.crc32(self.name.encode())])

    @property
    def tol(self) -> float:
        return self.cfg.tolerance(self.name, CHECKS[self.name].default_tol)

    def geometry(self, n: int | None = None, window: float | None = None, kind=None) -> ModelGeometry:
        g = self.cfg.geometry
        return make_model(kind or g.kind, g.n if n is None else n,
                          g.window if window is None else window, g.scattering_c)

    def cutoff(self, geom: ModelGeometry) -> Cutoff:
        return make_cutoff(geom, self.cfg.cutoff.r, self.cfg.cutoff.profile)


def _sfun(geom: ModelGeometry, f: Callable) -> Callable:
    """Lift a function of the straightened coordinate to the interior chart."""
    if geom.is_compact:
        return f
    return lambda x: f(geom.straighten(x))


PROBE_OFFSETS = (-0.8, 0.3, 0.9)


def _probe_points(geom: ModelGeometry) -> list[float]:
    """Evaluation points near the middle of the grid, in the interior chart."""
    centre = np.pi if geom.is_compact else 0.0
    return [float(geom.unstraighten(centre + d)) for d in PROBE_OFFSETS]


def _line_or(ctx: Context, circle_n: int, line_n: int, line_window: float) -> ModelGeometry:
    if ctx.cfg.geometry.kind == "circle":
        return ctx.geometry(circle_n)
    return ctx.geometry(line_n, line_window)


# -- the checks ------------------------------------------------------------------------


@check("identity", ("density-correction",), 1e-6,
       "symbol 1 quantizes to the identity on band-limited inputs")
def _identity(ctx: Context) -> CheckReport:
    geom = ctx.geometry()
    P = assemble_kernel(geom, symbol_from_name("one"), ctx.cutoff(geom))
    rng = ctx.rng
    err = max(float(np.abs(P.apply(u) - u).max())
              for u in (bandlimited_field(geom, rng) for _ in range(4)))
    return _report("identity", geom, err, ctx.tol, ctx)


@check("vector_field", ("vector-field-quantization",), 1e-6,
       "the linear symbol of a structural field quantizes to -i times the field")
def _vector_field(ctx: Context) -> CheckReport:
    rng = ctx.rng
    gaps = {}
    for kind in ("circle", "b_interval", "sc_line"):
        geom = ctx.geometry(256, kind=kind)
        P = assemble_kernel(geom, symbol_from_name("frame_field"), make_cutoff(geom))
        worst = 0.0
        for _ in range(3):
            u = GridFunction(geom, bandlimited_field(geom, rng, taper=True))
            worst = max(worst, float(np.abs(P.apply(u).values + 1j * anchor_apply(geom, u).values).max()))
        gaps[kind] = worst
    return _report("vector_field", None, max(gaps.values()), ctx.tol, ctx, n=256,
                   window=ctx.cfg.geometry.window,
                   details={"per_model": gaps, "N": 256})


@check("weylq_oracle", ("euclidean-formula",), 1e-7,
       "FFT assembly agrees with Gauss-Legendre double quadrature")
def _weylq(ctx: Context) -> CheckReport:
    window = ctx.cfg.geometry.window if ctx.cfg.geometry.kind == "sc_line" else 10.0
    geom = make_model("sc_line", 128, window, ctx.cfg.geometry.scattering_c)
    chi = make_cutoff(geom)
    gaps = {}
    for name in ("gauss", "jbracket_pow:-2", "xi"):
        sym = symbol_from_name(name)
        K = assemble_kernel(geom, sym, chi).kernel
        gaps[name] = float(np.abs(K - oracle_kernel(geom, sym, chi)).max())
    return _report("weylq_oracle", geom, max(gaps.values()), ctx.tol, ctx, details={"gaps": gaps})


CHI_LAMBDAS = (8.0, 16.0, 32.0, 64.0)


def cutoff_difference_decay(geom: ModelGeometry, sym, chi1: Cutoff, chi2: Cutoff,
                            lambdas=CHI_LAMBDAS) -> np.ndarray:
    """``||(a_chi1(D) - a_chi2(D)) e_lam|| / ||e_lam||`` with ``e_lam = exp(i lam s) phi``."""
    D = assemble_kernel(geom, sym, chi1).matrix - assemble_kernel(geom, sym, chi2).matrix
    phi = probe_bump(geom, np.pi if geom.is_compact else 0.0)
    out = []
    for lam in lambdas:
        e = np.exp(1j * lam * geom.s_nodes) * phi
        out.append(np.linalg.norm(D @ e) / np.linalg.norm(e))
    return np.array(out)


@check("chi_independence", ("cutoff-independence",), -3.0,
       "quantizations with two admissible cutoffs differ by a smoothing operator")
def _chi(ctx: Context) -> CheckReport:
    geom = _line_or(ctx, 256, 512, 8.0)
    chi1, chi2 = Cutoff(1.5), Cutoff(2.5)
    slopes, series = {}, {}
    for m in (1.0, 0.5, -1.0):
        decay = cutoff_difference_decay(geom, jbracket_power(m), chi1, chi2)
        slopes[f"m={m:g}"] = loglog_slope(CHI_LAMBDAS, decay)
        series[f"smooth m={m:g}"] = (list(CHI_LAMBDAS), decay.tolist())
    control = cutoff_difference_decay(geom, jbracket_power(1.0), chi1, Cutoff(1.5, "tent"))
    series["tent control"] = (list(CHI_LAMBDAS), control.tolist())
    control_slope = loglog_slope(CHI_LAMBDAS, control)
    return _report("chi_independence", geom, max(slopes.values()), ctx.tol, ctx,
                   details={"slopes": slopes, "control_slope": control_slope, "loglog": True},
                   conditions={"control_slope >= -1": control_slope >= -1.0}, series=series)


XI_SET = (1.0, -1.0, 2.0, -2.0)


def _ladder_series(est) -> tuple[list, list]:
    """Distance of each ladder sample from the extrapolated symbol value."""
    return list(est.ladder), [max(abs(v - est.value), 1e-300) for v in est.samples]


@check("composition_law", ("algebra-closure", "principal-symbol-isomorphism"), 2e-2,
       "the principal symbol of a product is the product of principal symbols")
def _composition(ctx: Context) -> CheckReport:
    geom = _line_or(ctx, 512, 512, 4.0)
    a = vector_field_symbol(_sfun(geom, lambda s: 1.0 + 0.5 * np.sin(s)), name="a")
    b = vector_field_symbol(_sfun(geom, lambda s: 2.0 + np.cos(s)), name="b")
    PQ = assemble_kernel(geom, a) @ assemble_kernel(geom, b)
    worst = 0.0
    series = {}
    for x in _probe_points(geom):
        for xi in XI_SET:
            est = recover_symbol(PQ, x, xi)
            ref = a(est.x_node, xi) * b(est.x_node, xi)
            worst = max(worst, abs(est.value - ref) / abs(ref))
            if xi > 0 and not series.get(f"xi={xi:g}"):
                series[f"xi={xi:g}"] = _ladder_series(est)
    return _report("composition_law", geom, worst, ctx.tol, ctx,
                   details={"loglog": True}, series=series)


_KAPPAS = (1.0, 1j, -1j, -1.0)


def calibrate_kappa(n: int = 256) -> tuple[complex, float]:
    """Fix the constant in ``sigma([P, Q]) = kappa {sigma P, sigma Q}`` on the circle.

    Uses ``a = xi`` and ``b = sin x``; returns the nearest of ``1, i, -i, -1``
    and the raw ratio's distance to it.
    """
    geom = make_model("circle", n)
    a, b = symbol_from_name("xi"), multiplication_symbol(np.sin)
    C = assemble_kernel(geom, a).commutator(assemble_kernel(geom, b))
    pb = poisson_bracket(geom, a, b)
    ratios = []
    for x in (0.4, 1.3, 2.9):
        for xi in (1.0, 2.0):
            est = recover_symbol(C, x, xi)
            ratios.append(est.value / complex(pb(est.x_node, xi)))
    raw = complex(np.mean(ratios))
    kappa = min(_KAPPAS, key=lambda k: abs(raw - k))
    return complex(kappa), abs(raw - kappa)


def commutator_pairs(c: float = 1.0):
    """Five symbol pairs on the three models for the commutator check."""
    circle = make_model("circle", 256)
    bint = make_model("b_interval", 512, 4.0)
    scl = make_model("sc_line", 512, 4.0, c)
    return [
        (circle, poly_symbol([0.0, 0.0, 1.0], name="xi^2"), multiplication_symbol(np.cos, "cos")),
        (bint, symbol_from_name("xi"), vector_field_symbol(lambda x: 1.0 + x, "a_Y")),
        (bint, jbracket_power(1.0), multiplication_symbol(lambda x: x, "x")),
        (scl, poly_symbol([0.0, 0.0, lambda x: 1.0 + x * x], name="(1+x^2)xi^2"),
         multiplication_symbol(lambda x: x, "x")),
        (scl, poly_symbol([0.0, 0.0, 1.0], name="xi^2"), vector_field_symbol(lambda x: x, "x xi")),
    ]


@check("commutator_poisson", ("commutator-poisson",), 5e-2,
       "the principal symbol of a commutator is a fixed multiple of the Poisson bracket")
def _commutator(ctx: Context) -> CheckReport:
    kappa, calib = calibrate_kappa()
    worst = 0.0
    per_pair = {}
    for geom, a, b in commutator_pairs(ctx.cfg.geometry.scattering_c):
        C = assemble_kernel(geom, a).commutator(assemble_kernel(geom, b))
        pb = poisson_bracket(geom, principal_symbol(a), principal_symbol(b))
        gap = 0.0
        for x in _probe_points(geom):
            for xi in (1.0, -1.0, 2.0):
                est = recover_symbol(C, x, xi)
                ref = kappa * complex(pb(est.x_node, xi))
                gap = max(gap, abs(est.value - ref) / abs(ref))
        per_pair[f"{geom.kind.value}:{{{a.name},{b.name}}}"] = gap
        worst = max(worst, gap)
    return _report("commutator_poisson", None, worst, ctx.tol, ctx,
                   details={"kappa": [kappa.real, kappa.imag], "calibration_gap": calib,
                            "pairs": per_pair},
                   conditions={"calibration": calib < 5e-2})


@check("adjoint_order_drop", ("adjoint-closure",), 1e-3,
       "P* - P has order one less than P for a real first-order symbol")
def _adjoint(ctx: Context) -> CheckReport:
    geom = _line_or(ctx, 256, 512, 4.0)
    P = assemble_kernel(geom, vector_field_symbol(_sfun(geom, lambda s: 1.0 + 0.5 * np.sin(s))))
    D = P.adjoint() - P
    worst = 0.0
    for x in _probe_points(geom):
        for xi in XI_SET:
            est = recover_symbol(D, x, xi, order=1.0)
            worst = max(worst, abs(est.value) / math.sqrt(1 + xi * xi))
    exact = np.abs(P.adjoint().adjoint().kernel - P.kernel).max()
    return _report("adjoint_order_drop", geom, worst, ctx.tol, ctx,
                   conditions={"adjoint is an involution": exact == 0.0})


CONJ_POWERS = (1.0, -1.0, 2.0, -2.0, 1j)


@check("conjugation_power", ("conjugation-by-defining-function",), 1e-3,
       "conjugation by powers of a boundary defining function preserves order")
def _conjugation(ctx: Context) -> CheckReport:
    geom = make_model("b_interval", 512, 4.0)
    P = assemble_kernel(geom, symbol_from_name("frame_field"))
    worst0 = worst1 = 0.0
    for s in CONJ_POWERS:
        Pc = conjugate_by_power(P, s)
        for x in (0.3, 0.5, 0.7):
            for xi in (1.0, -2.0):
                e0 = recover_symbol(Pc - P, x, xi, order=0.0)
                worst0 = max(worst0, abs(e0.value - 1j * s * (1.0 - e0.x_node)))
                e1 = recover_symbol(Pc, x, xi)
                worst1 = max(worst1, abs(e1.value - xi))
    return _report("conjugation_power", geom, worst0, ctx.tol, ctx,
                   details={"principal_gap": worst1},
                   conditions={"principal symbol preserved": worst1 <= ctx.tol})


def transported_symbol(geom: ModelGeometry, f: Callable, w: Callable, x: float, xi: float,
                       tol: float = 1e-10) -> complex:
    """Symbol of ``psi_X a_Y(D) psi_X^-1`` at ``(x, xi)`` for ``X = f e``, ``Y = w e``.

    In the straightened coordinate the conjugate is ``-i w(Phi(s)) / Phi'(s) d_s``
    with ``Phi`` the time-one flow and ``Phi'(s) = f(Phi(s)) / f(s)``.
    """
    s = float(geom.straighten(x))
    end = float(flow_points(geom, FlowOp(f, 1.0), s=np.array([s]), tol=tol)[0])
    xe = geom.unstraighten(end)
    dphi = f(xe) / f(x)
    return complex(w(xe) / dphi * xi)


def random_field_coefficients(geom: ModelGeometry, rng: np.random.Generator, count: int = 10):
    """Bounded smooth frame coefficients ``sum_j a_j sin(j s + p_j)``."""
    out = []
    for _ in range(count):
        amp = rng.uniform(-1.0, 1.0, 3)
        ph = rng.uniform(0, 2 * np.pi, 3)
        out.append(_sfun(geom, lambda s, a=amp, p=ph: sum(
            a[j] * np.sin((j + 1) * np.asarray(s) + p[j]) for j in range(3))))
    return out


@check("flow_conjugation", ("flow-conjugation", "face-preservation"), 2e-2,
       "conjugation by a flow transports the principal symbol; flows preserve faces")
def _flow(ctx: Context) -> CheckReport:
    geom = _line_or(ctx, 256, 512, 8.0)
    tol = ctx.cfg.flow.tol
    f = _sfun(geom, lambda s: 0.6 + 0.3 * np.sin(s))
    w = _sfun(geom, lambda s: 1.0 + 0.5 * np.cos(s))
    P = assemble_kernel(geom, vector_field_symbol(w))
    # probes reach half the Nyquist frequency, beyond what cubic splines resolve
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", FlowWindowWarning)
        Pc = conjugate_by_flow(P, FlowOp(f, 1.0), kind="fourier", tol=tol)
    worst = 0.0
    series = {}
    for x in _probe_points(geom):
        for xi in XI_SET:
            est = recover_symbol(Pc, x, xi)
            ref = transported_symbol(geom, f, w, est.x_node, xi, tol)
            worst = max(worst, abs(est.value - ref) / abs(ref))
            if xi > 0 and not series.get(f"xi={xi:g}"):
                series[f"xi={xi:g}"] = _ladder_series(est)
    interior = True
    if geom.bdf:
        for g in random_field_coefficients(geom, ctx.rng):
            xs = geom.unstraighten(flow_points(geom, FlowOp(g, 1.0), tol=tol, coordinate="x"))
            interior &= all(bool(np.all(h(xs) > 0)) for h in geom.bdf)
    return _report("flow_conjugation", geom, worst, ctx.tol, ctx,
                   details={"faces_checked": len(geom.bdf), "loglog": True}, series=series,
                   conditions={"flows keep nodes interior": interior})


def diff_operator(geom: ModelGeometry, coeffs: list[Callable], u: np.ndarray) -> np.ndarray:
    """``sum_k c_k (-i X)^k u`` built from repeated anchor applications."""
    out = np.zeros(geom.n, dtype=complex)
    v = GridFunction(geom, u)
    for k, c in enumerate(coeffs):
        out += c(geom.nodes) * v.values
        v = v.with_values(-1j * anchor_apply(geom, v).values)
    return out


@check("diff_recovery", ("diff-intersection",), 1e-4,
       "polynomial symbols quantize to the corresponding differential operators")
def _diff(ctx: Context) -> CheckReport:
    geom = ctx.geometry()
    rng = ctx.rng
    basis = [lambda s: 1.0 + 0.3 * np.sin(s), lambda s: np.cos(2 * s), lambda s: 0.5 + 0.0 * s,
             lambda s: 2.0 + np.sin(s) * np.cos(s)]
    worst = locality = 0.0
    rel = 0.0
    for degree in range(4):
        coeffs = [_sfun(geom, basis[k]) for k in range(degree + 1)]
        P = assemble_kernel(geom, poly_symbol(coeffs, name=f"deg{degree}"))
        for _ in range(2):
            u = bandlimited_field(geom, rng, taper=True)
            ref = diff_operator(geom, coeffs, u)
            gap = float(np.abs(P.apply(u) - ref).max())
            worst = max(worst, gap)
            rel = max(rel, gap / max(float(np.abs(ref).max()), 1e-300))
        # a Gaussian centred far from the evaluation node (antipodal on the circle)
        s0 = np.pi if geom.is_compact else 0.0
        off = geom.s_nodes - s0 - (np.pi if geom.is_compact else 5.0)
        if geom.is_compact:
            off = (off + np.pi) % (2 * np.pi) - np.pi
        far = np.exp(-((off / 0.6) ** 2))
        i = int(np.argmin(np.abs(geom.s_nodes - s0)))
        Pf = P.apply(far)
        locality = max(locality, float(abs(Pf[i]) / np.abs(Pf).max()))
    return _report("diff_recovery", geom, worst, ctx.tol, ctx,
                   details={"relative": rel, "locality": locality},
                   conditions={"locality": locality <= ctx.tol})


SOBOLEV_NS = (64, 128, 256, 512)


@check("sobolev_ladder", ("sobolev-boundedness",), 0.1,
       "operators of order m are bounded from H^s to H^(s-m) uniformly in N")
def _sobolev(ctx: Context) -> CheckReport:
    g = ctx.cfg.geometry
    seed = int(ctx.rng.integers(2**32))

    def geom_at(n):
        return make_model(g.kind, n, g.window, g.scattering_c)

    # coefficients periodic on the window so the periodic closure stays smooth
    def order0(geom):
        c = _sfun(geom, lambda s: 1.5 + 0.5 * np.sin(np.pi * s / geom.window))
        return symbol_from_function(lambda x, xi: c(x) * xi / np.sqrt(1 + xi * xi), 0.0,
                                    name="c xi/<xi>")

    def order1(geom):
        return vector_field_symbol(_sfun(geom, lambda s: 1.0 + 0.5 * np.sin(np.pi * s / geom.window)))

    def order2(geom):
        c = _sfun(geom, lambda s: 1.0 + 0.5 * np.cos(np.pi * s / geom.window))
        return poly_symbol([1.0, 0.0, c], name="c xi^2 + 1")

    cases = {"m=0,s=0": (order0, 0.0, 0.0), "m=1,s=1": (order1, 1.0, 1.0),
             "m=2,s=1": (order2, 1.0, 2.0)}
    spreads, series = {}, {}
    for label, (make, s, m) in cases.items():
        est = sobolev_ladder(lambda n: assemble_kernel(geom_at(n), make(geom_at(n))), s, m,
                             SOBOLEV_NS, seed=seed)
        spreads[label] = float((est.max() - est.min()) / est.min())
        series[label] = (list(SOBOLEV_NS), est.tolist())
    wrong = sobolev_ladder(lambda n: assemble_kernel(geom_at(n), order1(geom_at(n))), 1.0, 0.0,
                           SOBOLEV_NS, seed=seed)
    series["order 1 tagged 0"] = (list(SOBOLEV_NS), wrong.tolist())
    growth = float(wrong[-1] / wrong[0])
    grows = bool(np.all(np.diff(wrong) > 0) and growth > 2.0)
    return _report("sobolev_ladder", geom_at(SOBOLEV_NS[-1]), max(spreads.values()), ctx.tol, ctx,
                   details={"spreads": spreads, "control_growth": growth, "loglog": True},
                   conditions={"mis-tagged control grows": grows}, series=series)


@check("suspended_invariance", ("group-invariance",), 1e-10,
       "suspended operators commute with translations and compose frequency by frequency")
def _suspended(ctx: Context) -> CheckReport:
    geom = ctx.geometry(64)
    zb = ctx.cfg.suspended
    zg = ZGrid(zb.z_period, zb.n_z)
    c = _sfun(geom, lambda s: 1.0 + 0.3 * np.sin(s))
    sa = SuspendedSymbol(lambda x, xi, mu: c(x) * xi**2 + np.sqrt(1 + xi**2 + mu**2), 2.0,
                         name="c xi^2 + <xi, mu>")
    sb = SuspendedSymbol(lambda x, xi, mu: xi + mu + 0 * x, 1.0, name="xi + mu", x_independent=True)
    A = suspended_operator(geom, sa, zg)
    B = suspended_operator(geom, sb, zg)
    rep = check_invariance(A, seed=ctx.seed)
    rng = ctx.rng
    u = rng.standard_normal((geom.n, zg.n))
    comp = float(np.abs((A @ B)(u) - A(B(u))).max() / np.abs(A(B(u))).max())
    zdep = 1.0 + 0.5 * np.cos(2 * np.pi * np.arange(zg.n) / zg.n)

    def broken(v):
        return A(v) * zdep[None, :]

    broken.shape = (geom.n, zg.n)
    control = check_invariance(broken, zg, seed=ctx.seed).max_violation
    return _report("suspended_invariance", geom, rep.max_violation, ctx.tol, ctx,
                   details={"composition_gap": comp, "control_violation": control},
                   conditions={"composition <= 1e-8": comp <= 1e-8,
                               "control flagged": control > 1e3 * ctx.tol})


@check("semiclassical_scaling", ("semiclassical-family",), 0.1,
       "commutators of a semiclassical family with a function scale like t")
def _semiclassical(ctx: Context) -> CheckReport:
    geom = make_model("circle", 128)
    ladder = tuple(ctx.cfg.semiclassical.t_ladder)
    fam = SemiclassicalFamily.from_symbol(geom, jbracket_power(2.0), t_ladder=ladder)
    f = np.sin(geom.nodes)
    xi0 = 4.0
    norms = []
    for t in ladder:
        M = fam.operator(t).matrix
        C = M * f[None, :] - f[:, None] * M
        # wave packet at covariable xi0 on the semiclassical scale
        k = np.round(xi0 / t)
        e = np.exp(1j * k * geom.s_nodes)
        norms.append(float(np.linalg.norm(C @ e) / np.linalg.norm(e)))
    slope = loglog_slope(ladder, norms)
    return _report("semiclassical_scaling", geom, abs(slope - 1.0), ctx.tol, ctx,
                   details={"slope": slope, "loglog": True},
                   series={"||[P_t, f] e_t||": (list(ladder), norms)})


# -- running and reporting ------------------------------------------------------------


def run_check(name: str, cfg: RunConfig) -> CheckReport:
    """Run one check; failures of preconditions are reported, not raised."""
    ctx = Context(cfg, name)
    try:
        return CHECKS[name].func(ctx)
    except (ValueError, ArithmeticError, RuntimeError) as exc:
        return CheckReport(name, cfg.geometry.kind, cfg.geometry.n, cfg.geometry.window,
                           math.nan, ctx.tol, False, claims=CHECKS[name].claims, seed=cfg.seed,
                           error=f"{type(exc).__name__}: {exc}")


def run_suite(cfg: RunConfig, progress: Callable[[CheckReport], None] | None = None) -> list[CheckReport]:
    reports = []
    for name in cfg.checks(check_names()):
        rep = run_check(name, cfg)
        reports.append(rep)
        if progress is not None:
            progress(rep)
    return reports


CSV_FIELDS = ("name", "geometry", "N", "L", "measured", "tol", "pass")


def reports_csv(reports: list[CheckReport]) -> str:
    buf = io.StringIO()
    w = csv.DictWriter(buf, fieldnames=CSV_FIELDS, lineterminator="\n")
    w.writeheader()
    for r in reports:
        w.writerow(r.row())
    return buf.getvalue()


def _jsonable(obj):
    if isinstance(obj, dict):
        return {str(k): _jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_jsonable(v) for v in obj]
    if isinstance(obj, complex):
        return [obj.real, obj.imag]
    if isinstance(obj, (np.floating, float)):
        v = float(obj)
        return v if math.isfinite(v) else repr(v)
    if isinstance(obj, (np.integer, np.bool_)):
        return obj.item()
    return obj


def _plot(report: CheckReport, path: Path) -> None:
    import matplotlib

    matplotlib.use("Agg")
    import matplotlib.pyplot as plt

    plt.rcParams["svg.hashsalt"] = "kncalc"
    fig, ax = plt.subplots(figsize=(5, 3.5))
    for label, (x, y) in report.series.items():
        ax.plot(x, y, marker="o", label=label)
    if report.details.get("loglog", False):
        ax.set_xscale("log")
        ax.set_yscale("log")
    ax.set_title(report.name)
    ax.legend(fontsize=8)
    fig.tight_layout()
    fig.savefig(path, format="svg", metadata={"Date": None})
    plt.close(fig)


def write_reports(reports: list[CheckReport], out_dir, cfg: RunConfig | None = None,
                  plots: bool = True) -> dict[str, Path]:
    """Write ``reports.csv``, ``summary.json``, raw series CSVs and SVG plots."""
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    paths = {"csv": out / "reports.csv", "json": out / "summary.json"}
    for r in reports:
        if not r.series:
            continue
        raw = out / f"{r.name}_series.csv"
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(("series", "x", "y"))
        for label, (xs, ys) in r.series.items():
            w.writerows((label, repr(float(a)), repr(float(b))) for a, b in zip(xs, ys))
        raw.write_text(buf.getvalue())
        r.artifacts = [str(raw.name)]
        if plots:
            svg = out / f"{r.name}.svg"
            _plot(r, svg)
            r.artifacts.append(str(svg.name))
    paths["csv"].write_text(reports_csv(reports))
    summary = {
        "all_passed": all(r.passed for r in reports),
        "config": cfg.to_dict() if cfg is not None else None,
        "checks": [
            {**r.row(), "pass": r.passed, "measured": r.measured, "tol": r.tolerance,
             "sense": r.sense, "claims": list(r.claims), "details": r.details,
             "conditions": r.conditions, "artifacts": r.artifacts, "error": r.error}
            for r in reports
        ],
    }
    paths["json"].write_text(json.dumps(_jsonable(summary), indent=2, sort_keys=True) + "\n")
    return paths
