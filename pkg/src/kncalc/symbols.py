"""Symbols on the dual of the Lie algebroid.

A symbol is a function ``a(x, xi)`` of the interior chart coordinate ``x``
and the fiber coordinate ``xi`` dual to the frame. Evaluation follows numpy
broadcasting. Symbols carry an order and a class tag; order ``-inf`` is the
smoothing class.
"""
from __future__ import annotations

import json
import math
from dataclasses import dataclass, field, replace
from enum import Enum
from typing import Callable, Sequence

import numpy as np
from numpy.polynomial import hermite

from ._numerics import central_diff, loglog_slope, richardson
from .geometry import ModelGeometry, sderiv

__all__ = [
    "SymbolClass",
    "Symbol",
    "PolySymbol",
    "OrderEstimate",
    "jbracket",
    "jbracket_power",
    "gauss_symbol",
    "poly_symbol",
    "vector_field_symbol",
    "multiplication_symbol",
    "symbol_from_function",
    "symbol_from_name",
    "registry_names",
    "estimate_order",
    "principal_symbol",
    "principal_value",
    "poisson_bracket",
    "rescale_covariable",
    "PrincipalSymbolError",
]


class SymbolClass(str, Enum):
    TYPE10 = "type10"
    CLASSICAL = "classical"
    POLYNOMIAL = "polynomial"
    SMOOTHING = "smoothing"


class PrincipalSymbolError(ArithmeticError):
    """The homogeneous limit of a symbol did not converge."""


def _bracket(xi):
    return np.sqrt(1.0 + np.asarray(xi, dtype=float) ** 2)


def jbracket(geom: ModelGeometry, xi, x=None):
    """``<xi> = sqrt(1 + g(xi, xi))`` with the dual fiber metric."""
    xi = np.asarray(xi, dtype=float)
    g = geom.metric_coeff(geom.nodes[0] if x is None else x)
    return np.sqrt(1.0 + xi * xi / g)


# roundoff and O(h^4) truncation balance near eps^(1/(4+k))
_FD_STEPS = {1: 1e-5, 2: 2e-3, 3: 5e-3, 4: 1e-2}


@dataclass(frozen=True)
class Symbol:
    """A symbol ``a(x, xi)`` with declared order and class.

    ``dxi(x, xi, k)`` may supply analytic fiber derivatives; otherwise
    fourth-order central differences are used, with step ``<xi> * 1e-5`` for
    the first derivative and ``<xi> * (2e-3, 5e-3, 1e-2)`` for orders 2-4.
    ``principal`` is the homogeneous leading part for classical symbols.
    """

    func: Callable
    order: float
    kind: SymbolClass = SymbolClass.TYPE10
    name: str = "symbol"
    dxi: Callable | None = None
    principal: Callable | None = None
    x_independent: bool = False

    def __call__(self, x, xi):
        x, xi = np.broadcast_arrays(np.asarray(x, dtype=float), np.asarray(xi, dtype=float))
        return np.asarray(self.func(x, xi), dtype=complex)

    @property
    def is_smoothing(self) -> bool:
        return self.kind is SymbolClass.SMOOTHING or self.order == -math.inf

    def xi_derivative(self, x, xi, k: int = 1):
        if k == 0:
            return self(x, xi)
        if self.dxi is not None:
            x, xi = np.broadcast_arrays(np.asarray(x, float), np.asarray(xi, float))
            return np.asarray(self.dxi(x, xi, k), dtype=complex)
        if k > 4:
            raise ValueError("fiber derivatives are available up to order 4")
        step = _bracket(xi) * _FD_STEPS[k]
        return central_diff(lambda e: self(x, e), np.asarray(xi, float), step, k)

    def s_derivative(self, geom: ModelGeometry, x, xi):
        """Derivative along the frame field in the base variable."""
        return sderiv(geom, lambda xx: self(xx, xi), x)

    def __add__(self, other: "Symbol") -> "Symbol":
        return symbol_from_function(
            lambda x, xi: self(x, xi) + other(x, xi), max(self.order, other.order),
            name=f"({self.name}+{other.name})",
            x_independent=self.x_independent and other.x_independent)

    def __mul__(self, other: "Symbol") -> "Symbol":
        order = self.order + other.order
        kind = SymbolClass.TYPE10
        principal = None
        if self.principal is not None and other.principal is not None:
            kind = SymbolClass.CLASSICAL
            p1, p2 = self.principal, other.principal
            principal = lambda x, xi: p1(x, xi) * p2(x, xi)  # noqa: E731
        return Symbol(lambda x, xi: self(x, xi) * other(x, xi), order, kind,
                      name=f"({self.name}*{other.name})", principal=principal,
                      x_independent=self.x_independent and other.x_independent)


def _const(c):
    if callable(c):
        return c
    value = complex(c)
    return lambda x: np.full(np.shape(x), value, dtype=complex)


@dataclass(frozen=True)
class PolySymbol(Symbol):
    """Polynomial in the fiber: ``a(x, xi) = sum_k c_k(x) xi^k``."""

    coeffs: tuple = field(default=())
    constant_coeffs: bool = False

    @property
    def degree(self) -> int:
        return len(self.coeffs) - 1

    def coefficient_values(self, x) -> list[np.ndarray]:
        x = np.asarray(x, dtype=float)
        return [np.broadcast_to(np.asarray(c(x), dtype=complex), x.shape) for c in self.coeffs]

    def top(self) -> "PolySymbol":
        d = self.degree
        return poly_symbol([0.0] * d + [self.coeffs[d]], name=f"top({self.name})",
                           x_independent=self.x_independent)


def _poly_eval(coeffs):
    def func(x, xi):
        acc = 0.0
        for c in reversed(coeffs):
            acc = acc * xi + c(x)
        return acc + 0 * xi
    return func


def _poly_dxi(coeffs):
    def dxi(x, xi, k):
        acc = np.zeros(np.broadcast(x, xi).shape, dtype=complex)
        for j, c in enumerate(coeffs):
            if j >= k:
                acc = acc + math.perm(j, k) * c(x) * xi ** (j - k)
        return acc
    return dxi


def poly_symbol(coeffs: Sequence, name: str = "poly", x_independent: bool | None = None,
                kind: SymbolClass = SymbolClass.POLYNOMIAL) -> PolySymbol:
    """Polynomial symbol from coefficients (constants or callables of ``x``)."""
    if len(coeffs) == 0:
        coeffs = [0.0]
    if x_independent is None:
        x_independent = not any(callable(c) for c in coeffs)
    cs = tuple(_const(c) for c in coeffs)
    degree = len(cs) - 1
    top = cs[degree]
    return PolySymbol(
        func=_poly_eval(cs), order=float(degree), kind=kind, name=name,
        dxi=_poly_dxi(cs), principal=lambda x, xi: top(x) * xi**degree,
        x_independent=x_independent, coeffs=cs,
        constant_coeffs=not any(callable(c) for c in coeffs))


def vector_field_symbol(f=1.0, name: str = "a_X") -> PolySymbol:
    """The linear symbol ``a_X(xi) = xi(X)`` of ``X = f * frame``."""
    return poly_symbol([0.0, f], name=name)


def multiplication_symbol(f, name: str = "f") -> PolySymbol:
    return poly_symbol([f], name=name)


def _jbracket_dxi(p: float):
    # terms (coef, a, b) of xi^a (1 + xi^2)^b
    def dxi(x, xi, k):
        terms = [(1.0, 0, p)]
        for _ in range(k):
            new = []
            for c, a, b in terms:
                if a:
                    new.append((c * a, a - 1, b))
                if b:
                    new.append((2 * c * b, a + 1, b - 1))
            terms = new
        u = 1.0 + xi * xi
        return sum(c * xi**a * u**b for c, a, b in terms) + 0 * x
    return dxi


def jbracket_power(m: float) -> Symbol:
    """The classical symbol ``<xi>^m`` with principal part ``|xi|^m``.

    Even non-negative integer powers are returned as polynomials.
    """
    m = float(m)
    name = f"jbracket_pow:{m:g}"
    if m >= 0 and m == int(m) and int(m) % 2 == 0:
        half = int(m) // 2
        coeffs = [0.0] * (int(m) + 1)
        for j in range(half + 1):
            coeffs[2 * j] = float(math.comb(half, j))
        return poly_symbol(coeffs, name=name, kind=SymbolClass.CLASSICAL)
    return Symbol(lambda x, xi: (1.0 + xi * xi) ** (m / 2) + 0 * x, m, SymbolClass.CLASSICAL,
                  name=name, dxi=_jbracket_dxi(m / 2),
                  principal=lambda x, xi: np.abs(xi) ** m + 0 * x, x_independent=True)


def gauss_symbol() -> Symbol:
    """``exp(-xi^2)``, a smoothing symbol."""

    def dxi(x, xi, k):
        c = np.zeros(k + 1)
        c[k] = 1.0
        return (-1) ** k * hermite.hermval(xi, c) * np.exp(-xi * xi) + 0 * x

    return Symbol(lambda x, xi: np.exp(-xi * xi) + 0 * x, -math.inf, SymbolClass.SMOOTHING,
                  name="gauss", dxi=dxi, x_independent=True)


def symbol_from_function(func: Callable, order: float, kind: SymbolClass = SymbolClass.TYPE10,
                         name: str = "symbol", **kw) -> Symbol:
    return Symbol(func, float(order), SymbolClass(kind), name=name, **kw)


def rescale_covariable(sym: Symbol, t: float) -> Symbol:
    """The symbol ``(x, xi) -> a(x, t xi)``."""
    if isinstance(sym, PolySymbol):
        coeffs = [(lambda c, j: (lambda x: c(x) * t**j))(c, j) for j, c in enumerate(sym.coeffs)]
        out = poly_symbol(coeffs, name=f"{sym.name}@t={t:g}", x_independent=sym.x_independent,
                          kind=sym.kind)
        return out
    dxi = None
    if sym.dxi is not None:
        base = sym.dxi
        dxi = lambda x, xi, k: t**k * base(x, t * xi, k)  # noqa: E731
    principal = None
    if sym.principal is not None:
        p0 = sym.principal
        principal = lambda x, xi: p0(x, t * xi)  # noqa: E731
    return replace(sym, func=lambda x, xi: sym(x, t * xi), dxi=dxi, principal=principal,
                   name=f"{sym.name}@t={t:g}")


# -- registry -----------------------------------------------------------------

_FIXED = {
    "one": lambda: poly_symbol([1.0], name="one"),
    "xi": lambda: poly_symbol([0.0, 1.0], name="xi"),
    "frame_field": lambda: vector_field_symbol(1.0, name="frame_field"),
    "gauss": gauss_symbol,
}


def registry_names() -> list[str]:
    return sorted(_FIXED) + ["jbracket_pow:<m>", "poly:[c0,c1,...]"]


def symbol_from_name(name: str) -> Symbol:
    """Look up a built-in symbol.

    Names: ``one``, ``xi``, ``frame_field``, ``gauss``, ``jbracket_pow:<m>``
    and ``poly:[c0, c1, ...]`` (constant coefficients, increasing degree).
    """
    key = name.strip()
    if key in _FIXED:
        return _FIXED[key]()
    head, _, arg = key.partition(":")
    if head == "jbracket_pow" and arg:
        return jbracket_power(float(arg))
    if head == "poly" and arg:
        try:
            coeffs = json.loads(arg)
        except json.JSONDecodeError as exc:
            raise ValueError(f"bad polynomial coefficients in {name!r}") from exc
        if not isinstance(coeffs, list) or not all(isinstance(c, (int, float)) for c in coeffs):
            raise ValueError(f"bad polynomial coefficients in {name!r}")
        return poly_symbol([float(c) for c in coeffs], name=key)
    raise KeyError(f"unknown symbol {name!r}; known: {', '.join(registry_names())}")


# -- order estimation ---------------------------------------------------------


@dataclass(frozen=True)
class OrderEstimate:
    order: float
    constants: dict
    derivative_slope: float
    violation: bool
    smoothing_candidate: bool


def estimate_order(sym: Symbol, x, xi=None, smoothing_threshold: float = -3.0) -> OrderEstimate:
    """Fit the order of ``sym`` from its growth on a dyadic fiber ladder.

    The slope of ``log sup_x |a|`` against ``log <xi>`` over
    ``|xi| in {8, 16, ..., 1024}`` gives the order. The constants
    ``C_beta = sup |d^beta a| / <xi>^(m - beta)`` are reported for
    ``beta <= 2`` and ``xi`` sampled down to zero. The estimate is flagged if
    the first fiber derivative grows faster than ``m - 1`` by more than 0.25.
    """
    x = np.atleast_1d(np.asarray(x, dtype=float))
    ladder = 2.0 ** np.arange(3, 11) if xi is None else np.asarray(xi, dtype=float)
    brackets = _bracket(ladder)

    def sup_abs(k):
        vals = []
        for e in ladder:
            both = np.concatenate([np.abs(sym.xi_derivative(x, e, k)),
                                   np.abs(sym.xi_derivative(x, -e, k))])
            if not np.all(np.isfinite(both)):
                raise ValueError("symbol evaluation is not finite")
            vals.append(both.max())
        return np.array(vals)

    sup0 = sup_abs(0)
    m_hat = loglog_slope(brackets, sup0)
    d_slope = loglog_slope(brackets, sup_abs(1))
    smoothing = m_hat < smoothing_threshold
    m_ref = sym.order if np.isfinite(sym.order) else (0.0 if smoothing else m_hat)
    violation = (not smoothing) and d_slope > (m_hat - 1.0) + 0.25
    grid = np.concatenate([-ladder[::-1], np.linspace(-4, 4, 33), ladder])
    constants = {}
    for beta in range(3):
        vals = np.abs(sym.xi_derivative(x[:, None], grid[None, :], beta))
        constants[beta] = float(np.max(vals / _bracket(grid)[None, :] ** (m_ref - beta)))
    return OrderEstimate(m_hat, constants, d_slope, bool(violation), bool(smoothing))


# -- principal symbols --------------------------------------------------------


def principal_value(sym: Symbol, x, xi, ladder=(64.0, 128.0, 256.0), rtol: float = 1e-2):
    """Homogeneous limit ``lim lam^-m a(x, lam xi)`` with an error estimate."""
    m = sym.order
    vals = [lam ** (-m) * sym(x, lam * np.asarray(xi, float)) for lam in ladder]
    vals = np.asarray(vals)
    out = np.empty(vals.shape[1:], dtype=complex)
    err = np.empty(vals.shape[1:])
    for idx in np.ndindex(out.shape):
        out[idx], err[idx] = richardson(ladder, vals[(slice(None),) + idx])
    succ = np.abs(np.diff(vals, axis=0)).max(axis=0)
    if np.any(succ > rtol * np.maximum(np.abs(out), 1e-300)):
        raise PrincipalSymbolError("homogeneous limit did not converge on the ladder")
    return (out, err) if out.ndim else (complex(out), float(err))


def principal_symbol(sym: Symbol) -> Symbol:
    """A homogeneous representative of the principal symbol."""
    if isinstance(sym, PolySymbol):
        return sym.top()
    if sym.principal is not None:
        return Symbol(sym.principal, sym.order, SymbolClass.CLASSICAL,
                      name=f"sigma({sym.name})", principal=sym.principal,
                      x_independent=sym.x_independent)
    if sym.is_smoothing:
        return Symbol(lambda x, xi: np.zeros(np.broadcast(x, xi).shape), sym.order,
                      SymbolClass.SMOOTHING, name=f"sigma({sym.name})", x_independent=True)

    def limit(x, xi):
        return principal_value(sym, x, xi)[0]

    return Symbol(limit, sym.order, SymbolClass.CLASSICAL, name=f"sigma({sym.name})",
                  x_independent=sym.x_independent)


# -- Poisson bracket ----------------------------------------------------------


def poisson_bracket(geom: ModelGeometry, a: Symbol, b: Symbol) -> Symbol:
    """``{a, b} = d_xi a d_s b - d_s a d_xi b`` in canonical interior coordinates.

    ``d_s`` is the derivative along the frame (the straightened coordinate)
    and ``xi`` is the dual fiber coordinate.
    """
    order = a.order + b.order - 1
    if isinstance(a, PolySymbol) and isinstance(b, PolySymbol):
        da = [(lambda c: (lambda x: sderiv(geom, c, x)))(c) for c in a.coeffs]
        db = [(lambda c: (lambda x: sderiv(geom, c, x)))(c) for c in b.coeffs]
        deg = max(a.degree + b.degree - 1, 0)
        terms: list[list] = [[] for _ in range(deg + 1)]
        for j, pj in enumerate(a.coeffs):
            for k, qk in enumerate(b.coeffs):
                if j:
                    terms[j - 1 + k].append((j, pj, db[k]))
                if k:
                    terms[j + k - 1].append((-k, qk, da[j]))

        def make(ts):
            return lambda x: sum((c * f(x) * g(x) for c, f, g in ts), np.zeros(np.shape(x), complex))

        coeffs = [make(ts) for ts in terms]
        return poly_symbol(coeffs, name=f"{{{a.name},{b.name}}}", x_independent=False)

    def func(x, xi):
        return (a.xi_derivative(x, xi, 1) * b.s_derivative(geom, x, xi)
                - a.s_derivative(geom, x, xi) * b.xi_derivative(x, xi, 1))

    return Symbol(func, order, SymbolClass.TYPE10, name=f"{{{a.name},{b.name}}}")
