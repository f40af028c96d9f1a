"""Exponential map, the Riemann-Weyl fibration, cutoffs and flows.

Geodesics are straight lines in the straightened coordinate, so
``s(exp_x(v)) = s(x) + v`` with ``v`` the frame coordinate of the fiber
vector. ``exp_point(..., method="spray")`` integrates the geodesic equation
in the interior chart instead and is kept for cross-validation.
"""
from __future__ import annotations

import math
import warnings
from dataclasses import dataclass
from typing import Callable

import numpy as np
from scipy.integrate import solve_ivp
from scipy.interpolate import CubicSpline

from .geometry import GridFunction, ModelGeometry, _check_same_grid

__all__ = [
    "exp_point",
    "tau",
    "injectivity_radius",
    "Cutoff",
    "make_cutoff",
    "smooth_step",
    "FlowOp",
    "FlowWindowWarning",
    "flow_points",
    "flow_apply",
    "flow_matrix",
    "interpolation_matrix",
    "dirichlet_kernel",
]


def _require_interior(geom: ModelGeometry, x) -> np.ndarray:
    x = np.asarray(x, dtype=float)
    if geom.is_compact:
        return x
    lo, hi = geom.interior_chart
    if np.any(x <= lo) or np.any(x >= hi):
        raise ValueError("base point must lie in the interior of the model")
    return x


def exp_point(geom: ModelGeometry, x, v, method: str = "closed"):
    """Geodesic exponential ``exp_x(v)``; ``v`` is the frame coordinate."""
    x = _require_interior(geom, x)
    v = np.asarray(v, dtype=float)
    if method == "closed":
        return geom.unstraighten(geom.straighten(x) + v)
    if method != "spray":
        raise ValueError(f"unknown method {method!r}")

    def rhs(_t, y):
        pos, vel = y
        return [vel, geom.frame_dx(pos) / geom.frame(pos) * vel * vel]

    xs, vs = np.broadcast_arrays(x, v)
    out = np.empty(xs.shape)
    for idx in np.ndindex(xs.shape):
        x0 = float(xs[idx])
        sol = solve_ivp(rhs, (0.0, 1.0), [x0, float(vs[idx]) * float(geom.frame(x0))],
                        method="DOP853", rtol=1e-12, atol=1e-14)
        out[idx] = sol.y[0, -1]
    if geom.is_compact:
        out = np.mod(out, 2 * np.pi)
    return out if out.ndim else float(out)


def tau(geom: ModelGeometry, x, y):
    """Inverse of the Riemann-Weyl fibration: ``exp_x(-tau(x, y)) = y``."""
    x = _require_interior(geom, x)
    y = _require_interior(geom, y)
    t = geom.straighten(x) - geom.straighten(y)
    if geom.is_compact:
        t = np.mod(t + np.pi, 2 * np.pi) - np.pi
        if np.any(np.abs(np.abs(t) - np.pi) < 1e-14):
            raise ValueError("points are antipodal: beyond the injectivity radius")
    return t


def injectivity_radius(geom: ModelGeometry) -> float:
    """``pi`` on the circle, ``inf`` on the models isometric to the line."""
    return math.pi if geom.is_compact else math.inf


# -- cutoffs -----------------------------------------------------------------


def _expneg(t):
    t = np.asarray(t, dtype=float)
    out = np.zeros_like(t)
    pos = t > 0
    out[pos] = np.exp(-1.0 / t[pos])
    return out


def smooth_step(u):
    """C-infinity profile: 1 on ``[0, 1/2]``, 0 on ``[1, inf)``.

    ``rho(u) = e(2 - 2u) / (e(2 - 2u) + e(2u - 1))`` with
    ``e(t) = exp(-1/t)`` for ``t > 0`` and ``0`` otherwise.
    """
    u = np.asarray(u, dtype=float)
    a = _expneg(2.0 - 2.0 * u)
    b = _expneg(2.0 * u - 1.0)
    return a / (a + b)


def _tent(u):
    return np.clip(1.0 - np.asarray(u, dtype=float), 0.0, 1.0)


def _box(u):
    return (np.asarray(u, dtype=float) < 1.0).astype(float)


_PROFILES: dict[str, Callable] = {"smooth": smooth_step, "tent": _tent, "box": _box}


@dataclass(frozen=True)
class Cutoff:
    """Radial cutoff ``chi(x, v) = rho(|v| / r)`` on the fibers of ``A``.

    Only the ``smooth`` profile is admissible for the calculus. ``tent``
    and ``box`` are deliberately non-smooth and exist for negative controls.
    """

    r: float
    profile: str = "smooth"

    def __post_init__(self):
        if self.profile not in _PROFILES:
            raise ValueError(f"unknown cutoff profile {self.profile!r}")
        if not self.r > 0:
            raise ValueError("cutoff radius must be positive")

    @property
    def admissible(self) -> bool:
        return self.profile == "smooth"

    def rho(self, u):
        return _PROFILES[self.profile](u)

    def __call__(self, v, metric=1.0):
        return self.rho(np.abs(v) * np.sqrt(metric) / self.r)


def make_cutoff(geom: ModelGeometry, r: float | None = None, profile: str = "smooth") -> Cutoff:
    r0 = injectivity_radius(geom)
    if r is None:
        r = min(r0 / 2, 1.0)
    if not 0 < r < r0:
        raise ValueError(f"cutoff radius must satisfy 0 < r < {r0}, got {r}")
    return Cutoff(float(r), profile)


# -- flows -------------------------------------------------------------------


class FlowWindowWarning(UserWarning):
    """Flowed points left the truncation window; values there are set to zero."""


@dataclass(frozen=True)
class FlowOp:
    """A structural vector field ``coeff(x) X`` and a flow time."""

    coeff: Callable
    t: float = 1.0

    def scaled(self, factor: float) -> "FlowOp":
        return FlowOp(self.coeff, self.t * factor)

    def reversed(self) -> "FlowOp":
        return FlowOp(self.coeff, -self.t)


def _as_flow(X, t) -> FlowOp:
    if isinstance(X, FlowOp):
        return X if t is None else FlowOp(X.coeff, t)
    return FlowOp(X, 1.0 if t is None else t)


def flow_points(geom: ModelGeometry, X, t: float | None = None, s=None,
                tol: float = 1e-10, coordinate: str = "s") -> np.ndarray:
    """Straightened coordinates of the time-``t`` flow of ``X`` from ``s``.

    With ``coordinate="x"`` the flow ``dx/dt = coeff(x) frame(x)`` is
    integrated in the interior chart and mapped back; this path sees the
    vanishing of the frame at the boundary directly.
    """
    op = _as_flow(X, t)
    s0 = geom.s_nodes if s is None else np.asarray(s, dtype=float)
    if op.t == 0:
        return np.array(s0, dtype=float)
    f = op.coeff

    if coordinate == "s":
        def rhs(_t, y):
            val = np.broadcast_to(np.asarray(f(geom.unstraighten(y)), float), y.shape)
            if not np.all(np.isfinite(val)):
                raise ValueError("vector field is not finite along the flow")
            return val

        y0 = np.array(s0, dtype=float)
    elif coordinate == "x":
        def rhs(_t, y):
            val = np.broadcast_to(np.asarray(f(y), float) * geom.frame(y), y.shape)
            if not np.all(np.isfinite(val)):
                raise ValueError("vector field is not finite along the flow")
            return val

        y0 = geom.unstraighten(s0)
    else:
        raise ValueError(f"unknown coordinate {coordinate!r}")

    sol = solve_ivp(rhs, (0.0, op.t), y0.ravel(), method="RK45", rtol=tol, atol=tol)
    if not sol.success:
        raise RuntimeError(f"flow integration failed: {sol.message}")
    end = sol.y[:, -1].reshape(y0.shape)
    if coordinate == "x":
        if geom.is_compact:
            return end
        return geom.straighten(end)
    return end


def dirichlet_kernel(geom: ModelGeometry, y) -> np.ndarray:
    """Cardinal function of periodic trigonometric interpolation at ``y``.

    ``sin(N z) / (N tan z)``, ``z = pi y / P``; the Nyquist mode carries half
    weight on each side so the interpolant of real data is real.
    """
    n, period = geom.n, geom.period
    z = np.pi * np.asarray(y, dtype=float) / period
    num = np.sin(n * z)
    den = n * np.tan(z)
    out = np.ones_like(z)
    ok = np.abs(den) > 1e-13
    out[ok] = num[ok] / den[ok]
    return out


def interpolation_matrix(geom: ModelGeometry, points, kind: str | None = None) -> np.ndarray:
    """Matrix ``E`` with ``(E u)_i = u_interp(points_i)``.

    ``kind`` is ``"fourier"`` (bandlimited, the default on the circle) or
    ``"spline"`` (cubic, the default on the line models). Points outside the
    window ``|s| <= L`` of a line model get a zero row.
    """
    pts = np.asarray(points, dtype=float)
    if kind is None:
        kind = "fourier" if geom.is_compact else "spline"
    if kind == "fourier":
        E = dirichlet_kernel(geom, pts[:, None] - geom.s_nodes[None, :])
    elif kind == "spline":
        spline = CubicSpline(geom.s_nodes, np.eye(geom.n), axis=0)
        E = spline(pts)
    else:
        raise ValueError(f"unknown interpolation kind {kind!r}")
    if not geom.is_compact:
        outside = np.abs(pts) > geom.window
        if np.any(outside):
            warnings.warn(
                f"{int(outside.sum())} flowed points left the window |s| <= {geom.window:g}",
                FlowWindowWarning, stacklevel=3)
            E[outside] = 0.0
    return E


def flow_matrix(geom: ModelGeometry, X, t: float | None = None, kind: str | None = None,
                tol: float = 1e-10) -> np.ndarray:
    """Interpolation matrix realizing ``u -> u o Psi_X(t, .)`` on the grid."""
    return interpolation_matrix(geom, flow_points(geom, X, t, tol=tol), kind)


def flow_apply(geom: ModelGeometry, X, u: GridFunction, t: float | None = None,
               kind: str | None = None, tol: float = 1e-10) -> GridFunction:
    """Pull ``u`` back along the flow of ``X``: ``u o Psi_X(t, .)``."""
    _check_same_grid(geom, u.geometry)
    op = _as_flow(X, t)
    if op.t == 0:
        return u
    return u.with_values(flow_matrix(geom, op, kind=kind, tol=tol) @ u.values)
