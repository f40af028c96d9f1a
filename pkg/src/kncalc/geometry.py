"""One-dimensional model geometries with degenerate structural frames.

Three one-dimensional models are provided, each with a global frame
``X = frame(x) d/dx`` of the Lie algebroid ``A`` and the metric that makes
the frame unit length:

``circle``
    The compact case, ``M = M0 = S^1`` and ``frame = 1``.
``b_interval``
    ``M = [0, 1]`` with ``frame = x(1 - x)``. In dimension one the boundary
    consists of points, so the b- and 0-structures coincide here.
``sc_line``
    ``M = [-1, 1]`` (a compactified real line) with ``frame = c(1 - x^2)``.
    This frame vanishes to first order at the ends; the interior metric is
    the flat line, the same metric the scattering line carries, but as a
    Lie structure it is of b-type at ``x = +-1``.

Every model is globally isometric to the circle or to the real line through
a straightening map ``s``: in the coordinate ``s`` the frame is ``d/ds`` and
the Riemannian volume is ``ds``. All grids are uniform in ``s``. For the
non-compact models the grid covers the window ``|s| <= L`` and is closed
periodically, so spectral operations are exact FFT multipliers.
"""
from __future__ import annotations

from dataclasses import dataclass
from enum import Enum
from functools import cached_property
from typing import Callable

import numpy as np
from scipy.special import expit

__all__ = [
    "ModelKind",
    "ModelGeometry",
    "GridFunction",
    "make_model",
    "anchor_apply",
    "riemannian_volume_weights",
    "spectral_derivative",
    "lie_bracket",
    "xderiv",
    "sderiv",
]


class ModelKind(str, Enum):
    CIRCLE = "circle"
    B_INTERVAL = "b_interval"
    SC_LINE = "sc_line"

    @classmethod
    def parse(cls, kind: "str | ModelKind") -> "ModelKind":
        if isinstance(kind, ModelKind):
            return kind
        key = str(kind).strip().lower().replace("-", "_")
        aliases = {
            "circle": cls.CIRCLE,
            "binterval": cls.B_INTERVAL,
            "b_interval": cls.B_INTERVAL,
            "scline": cls.SC_LINE,
            "sc_line": cls.SC_LINE,
        }
        try:
            return aliases[key]
        except KeyError:
            raise ValueError(f"unknown model kind {kind!r}") from None


def _readonly(a: np.ndarray) -> np.ndarray:
    a.setflags(write=False)
    return a


@dataclass(frozen=True)
class ModelGeometry:
    """A discretized model manifold.

    Parameters
    ----------
    kind : ModelKind
    n : int
        Number of grid nodes.
    window : float
        Half-width ``L`` of the truncation window in the straightened
        coordinate (unused for the circle).
    c : float
        Scale of the ``sc_line`` frame.
    """

    kind: ModelKind
    n: int
    window: float = 10.0
    c: float = 1.0

    dim = 1

    @property
    def is_compact(self) -> bool:
        return self.kind is ModelKind.CIRCLE

    @property
    def interior_chart(self) -> tuple[float, float]:
        return {
            ModelKind.CIRCLE: (0.0, 2 * np.pi),
            ModelKind.B_INTERVAL: (0.0, 1.0),
            ModelKind.SC_LINE: (-1.0, 1.0),
        }[self.kind]

    @property
    def period(self) -> float:
        """Length of the periodic closure of the straightened grid."""
        return 2 * np.pi if self.is_compact else 2.0 * self.window

    @property
    def spacing(self) -> float:
        return self.period / self.n

    @property
    def nyquist(self) -> float:
        return np.pi / self.spacing

    # -- frame, metric, straightening -------------------------------------

    def frame(self, x):
        x = np.asarray(x, dtype=float)
        if self.kind is ModelKind.CIRCLE:
            return np.ones_like(x)
        if self.kind is ModelKind.B_INTERVAL:
            return x * (1.0 - x)
        return self.c * (1.0 - x * x)

    def frame_dx(self, x):
        x = np.asarray(x, dtype=float)
        if self.kind is ModelKind.CIRCLE:
            return np.zeros_like(x)
        if self.kind is ModelKind.B_INTERVAL:
            return 1.0 - 2.0 * x
        return -2.0 * self.c * x

    def metric_coeff(self, x):
        """Metric on the fiber ``A_x`` in the frame trivialization."""
        return np.ones_like(np.asarray(x, dtype=float))

    def straighten(self, x):
        x = np.asarray(x, dtype=float)
        if self.kind is ModelKind.CIRCLE:
            return x.copy()
        if self.kind is ModelKind.B_INTERVAL:
            return np.log(x) - np.log1p(-x)
        return np.arctanh(x) / self.c

    def unstraighten(self, s):
        s = np.asarray(s, dtype=float)
        if self.kind is ModelKind.CIRCLE:
            return np.mod(s, 2 * np.pi)
        if self.kind is ModelKind.B_INTERVAL:
            return expit(s)
        return np.tanh(self.c * s)

    @property
    def bdf(self) -> tuple[Callable, ...]:
        """Boundary defining functions, one per boundary point."""
        if self.kind is ModelKind.CIRCLE:
            return ()
        if self.kind is ModelKind.B_INTERVAL:
            return (lambda x: np.asarray(x, float), lambda x: 1.0 - np.asarray(x, float))
        return (lambda x: 1.0 + np.asarray(x, float), lambda x: 1.0 - np.asarray(x, float))

    @property
    def boundary_points(self) -> tuple[float, ...]:
        if self.kind is ModelKind.CIRCLE:
            return ()
        return self.interior_chart

    # -- grid --------------------------------------------------------------

    @cached_property
    def s_nodes(self) -> np.ndarray:
        h = self.spacing
        if self.is_compact:
            return _readonly(h * np.arange(self.n))
        return _readonly(-self.window + h * (np.arange(self.n) + 0.5))

    @cached_property
    def nodes(self) -> np.ndarray:
        return _readonly(self.unstraighten(self.s_nodes))

    @cached_property
    def weights(self) -> np.ndarray:
        return _readonly(np.full(self.n, self.spacing))

    @cached_property
    def frequencies(self) -> np.ndarray:
        """Angular frequencies of the grid in FFT order."""
        return _readonly(2 * np.pi * np.fft.fftfreq(self.n, d=self.spacing))

    def window_volume(self) -> float:
        return self.period

    def describe(self) -> str:
        if self.is_compact:
            return f"{self.kind.value}(N={self.n})"
        return f"{self.kind.value}(N={self.n}, L={self.window:g}, c={self.c:g})"


def make_model(kind, n: int = 128, window: float = 10.0, c: float = 1.0) -> ModelGeometry:
    """Build one of the model geometries.

    ``window`` is ignored for the circle. ``n`` must be even and at least 16.
    """
    kind = ModelKind.parse(kind)
    if int(n) != n or n < 16:
        raise ValueError(f"n must be an integer >= 16, got {n!r}")
    if n % 2:
        raise ValueError("n must be even")
    if kind is not ModelKind.CIRCLE and not window > 0:
        raise ValueError(f"window must be positive, got {window!r}")
    if kind is ModelKind.SC_LINE and not c > 0:
        raise ValueError(f"scattering constant must be positive, got {c!r}")
    if kind is ModelKind.CIRCLE:
        window = np.pi
    return ModelGeometry(kind=kind, n=int(n), window=float(window), c=float(c))


@dataclass(frozen=True)
class GridFunction:
    geometry: ModelGeometry
    values: np.ndarray

    def __post_init__(self):
        v = np.array(self.values, dtype=complex)
        if v.shape != (self.geometry.n,):
            raise ValueError(
                f"expected {self.geometry.n} values, got shape {v.shape}")
        object.__setattr__(self, "values", _readonly(v))

    @classmethod
    def from_function(cls, geom: ModelGeometry, f) -> "GridFunction":
        """Sample ``f(x)`` in the interior chart coordinate."""
        return cls(geom, f(geom.nodes))

    @classmethod
    def from_straightened(cls, geom: ModelGeometry, f) -> "GridFunction":
        """Sample ``f(s)`` in the straightened coordinate."""
        return cls(geom, f(geom.s_nodes))

    @property
    def nodes(self) -> np.ndarray:
        return self.geometry.nodes

    @property
    def weights(self) -> np.ndarray:
        return self.geometry.weights

    def integrate(self) -> complex:
        return complex(np.sum(self.weights * self.values))

    def norm(self) -> float:
        return float(np.sqrt(np.sum(self.weights * np.abs(self.values) ** 2)))

    def with_values(self, values) -> "GridFunction":
        return GridFunction(self.geometry, values)

    def __add__(self, other: "GridFunction") -> "GridFunction":
        _check_same_grid(self.geometry, other.geometry)
        return self.with_values(self.values + other.values)

    def __sub__(self, other: "GridFunction") -> "GridFunction":
        _check_same_grid(self.geometry, other.geometry)
        return self.with_values(self.values - other.values)

    def __mul__(self, other):
        if isinstance(other, GridFunction):
            _check_same_grid(self.geometry, other.geometry)
            return self.with_values(self.values * other.values)
        return self.with_values(self.values * other)

    __rmul__ = __mul__


def _check_same_grid(g1: ModelGeometry, g2: ModelGeometry) -> None:
    if g1 != g2:
        raise ValueError(f"grid mismatch: {g1.describe()} vs {g2.describe()}")


def riemannian_volume_weights(geom: ModelGeometry) -> np.ndarray:
    """Quadrature weights for the Riemannian volume.

    In the straightened coordinate the volume is ``ds``, so these are the
    uniform periodic trapezoid weights; they sum to the window length.
    """
    return geom.weights


def spectral_derivative(geom: ModelGeometry, values: np.ndarray, order: int = 1) -> np.ndarray:
    """Spectral ``d^k/ds^k`` on the periodic closure of the grid.

    For the line models the affine trend through the first and last node is
    removed first and differentiated exactly, so functions growing linearly
    in ``s`` (the straightening itself) are handled without Gibbs ringing.
    The Nyquist mode is dropped for odd ``order``.
    """
    v = np.asarray(values, dtype=complex)
    slope = 0.0
    if not geom.is_compact:
        s = geom.s_nodes
        slope = (v[-1] - v[0]) / (s[-1] - s[0])
        v = v - (v[0] + slope * (s - s[0]))
    mult = (1j * geom.frequencies) ** order
    if order % 2:
        mult[geom.n // 2] = 0.0
    out = np.fft.ifft(mult * np.fft.fft(v))
    if order == 1:
        out = out + slope
    return out


def anchor_apply(geom: ModelGeometry, f: GridFunction) -> GridFunction:
    """Apply the frame field, ``(Xf)(x) = frame(x) f'(x)``.

    Computed spectrally as ``d/ds`` in the straightened coordinate.
    """
    _check_same_grid(geom, f.geometry)
    return f.with_values(spectral_derivative(geom, f.values, 1))


def xderiv(func: Callable, x, step: float = 1e-3) -> np.ndarray:
    """Sixth-order central difference ``d func / dx``."""
    x = np.asarray(x, dtype=float)
    c = (-1 / 60, 3 / 20, -3 / 4, 0.0, 3 / 4, -3 / 20, 1 / 60)
    acc = 0.0
    for k, ck in zip(range(-3, 4), c):
        if ck:
            acc = acc + ck * np.asarray(func(x + k * step))
    return acc / step


def lie_bracket(geom: ModelGeometry, f: Callable, g: Callable) -> Callable:
    """Bracket of two structural vector fields given by frame coefficients.

    ``[f X, g X] = h X``; ``h`` is computed from the coordinate formula
    ``[F d/dx, G d/dx] = (F G' - G F') d/dx`` with ``F = f frame`` and
    ``G = g frame``, then divided by the frame.
    """

    def F(x):
        return f(x) * geom.frame(x)

    def G(x):
        return g(x) * geom.frame(x)

    def h(x):
        x = np.asarray(x, dtype=float)
        step = 1e-4 if geom.is_compact else 1e-4 * np.minimum(1.0, geom.frame(x) * 8)
        return (F(x) * xderiv(G, x, step) - G(x) * xderiv(F, x, step)) / geom.frame(x)

    return h


def sderiv(geom: ModelGeometry, func: Callable, x, step: float = 1e-3) -> np.ndarray:
    """Derivative of ``func(x)`` along the frame, i.e. ``d/ds`` at ``s(x)``."""
    s = geom.straighten(x)
    return xderiv(lambda ss: func(geom.unstraighten(ss)), s, step)
