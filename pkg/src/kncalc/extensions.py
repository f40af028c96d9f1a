"""Suspended operators (translation invariant in an extra real variable) and
semiclassical families.

The group direction ``z`` is discretized as a periodic grid of circumference
``z_period``; the group-Fourier transform becomes an FFT and a suspended
operator acts on each discrete frequency ``mu_k`` by an ordinary quantized
operator on the model geometry.
"""
from __future__ import annotations

import math
import threading
from dataclasses import dataclass, field
from typing import Callable, Sequence

import numpy as np
from scipy import fft as sfft

from .expmap import Cutoff, make_cutoff
from .geometry import GridFunction, ModelGeometry
from .quantize import DenseOperator, assemble_kernel
from .symbols import Symbol, SymbolClass, rescale_covariable, symbol_from_function

__all__ = [
    "SuspendedSymbol",
    "SuspendedOperator",
    "ZGrid",
    "suspended_operator",
    "suspended_apply",
    "check_invariance",
    "InvarianceReport",
    "SemiclassicalFamily",
    "semiclassical_apply",
]


@dataclass(frozen=True)
class SuspendedSymbol:
    """A symbol ``a(x, xi, mu)``; ``mu`` is dual to the group variable ``z``."""

    func: Callable
    order: float
    kind: SymbolClass = SymbolClass.TYPE10
    name: str = "suspended"
    x_independent: bool = False

    def __call__(self, x, xi, mu):
        return np.asarray(self.func(np.asarray(x, float), np.asarray(xi, float),
                                    np.asarray(mu, float)), dtype=complex)

    def at(self, mu: float) -> Symbol:
        """The ordinary symbol ``(x, xi) -> a(x, xi, mu)``."""
        return symbol_from_function(lambda x, xi: self(x, xi, mu) + 0 * xi, self.order,
                                    self.kind, name=f"{self.name}@mu={mu:g}",
                                    x_independent=self.x_independent)

    def joint_order_constant(self, x, xi, mu) -> float:
        """``sup |a| / (1 + xi^2 + mu^2)^(m/2)`` over the given sample box."""
        X, XI, MU = np.meshgrid(np.atleast_1d(x), np.atleast_1d(xi), np.atleast_1d(mu),
                                indexing="ij")
        return float(np.max(np.abs(self(X, XI, MU)) / (1 + XI**2 + MU**2) ** (self.order / 2)))

    @classmethod
    def from_symbol(cls, sym: Symbol) -> "SuspendedSymbol":
        return cls(lambda x, xi, mu: sym(x, xi) + 0 * mu, sym.order, sym.kind,
                   name=sym.name, x_independent=sym.x_independent)


@dataclass(frozen=True)
class ZGrid:
    """Uniform periodic grid for the group variable."""

    period: float
    n: int

    def __post_init__(self):
        if self.n < 2 or not self.period > 0:
            raise ValueError("the z-grid needs n >= 2 points and a positive period")

    @property
    def nodes(self) -> np.ndarray:
        return self.period * np.arange(self.n) / self.n

    @property
    def frequencies(self) -> np.ndarray:
        return 2 * np.pi * sfft.fftfreq(self.n, d=self.period / self.n)

    @classmethod
    def from_nodes(cls, z) -> "ZGrid":
        z = np.asarray(z, dtype=float)
        if z.ndim != 1 or z.size < 2:
            raise ValueError("z-grid must be a 1-D array of at least two nodes")
        dz = np.diff(z)
        if not np.allclose(dz, dz[0], rtol=1e-10, atol=0) or dz[0] <= 0:
            raise ValueError("z-grid is not uniform")
        return cls(float(dz[0] * z.size), z.size)


@dataclass(frozen=True)
class SuspendedOperator:
    """A translation-invariant operator on ``M0 x (periodic z)``.

    One operator matrix per group frequency, in FFT order. Inputs are arrays
    of shape ``(N, n_z)``.
    """

    geometry: ModelGeometry
    zgrid: ZGrid
    blocks: np.ndarray
    order: float
    name: str = "suspended"

    def apply(self, u) -> np.ndarray:
        u = np.asarray(u, dtype=complex)
        shape = (self.geometry.n, self.zgrid.n)
        if u.shape != shape:
            raise ValueError(f"input shape {u.shape} does not match grid {shape}")
        uh = sfft.fft(u, axis=1)
        vh = np.einsum("kij,jk->ik", self.blocks, uh)
        return sfft.ifft(vh, axis=1)

    __call__ = apply

    def compose(self, other: "SuspendedOperator") -> "SuspendedOperator":
        if other.geometry != self.geometry or other.zgrid != self.zgrid:
            raise ValueError("grid mismatch")
        return SuspendedOperator(self.geometry, self.zgrid, self.blocks @ other.blocks,
                                 self.order + other.order, f"{self.name}*{other.name}")

    def __matmul__(self, other):
        if isinstance(other, SuspendedOperator):
            return self.compose(other)
        return self.apply(other)

    def dense(self) -> np.ndarray:
        """The full ``(N n_z) x (N n_z)`` matrix, index ``i * n_z + l``."""
        n, nz = self.geometry.n, self.zgrid.n
        F = sfft.fft(np.eye(nz), axis=0)
        Finv = sfft.ifft(np.eye(nz), axis=0)
        out = np.einsum("lk,kij,km->iljm", Finv, self.blocks, F)
        return out.reshape(n * nz, n * nz)


def suspended_operator(geom: ModelGeometry, sa: SuspendedSymbol, zgrid: ZGrid,
                       chi: Cutoff | None = None) -> SuspendedOperator:
    """Quantize ``sa`` frequency by frequency in the group direction.

    At the Nyquist frequency of the z-grid the symbol is averaged over
    ``+mu`` and ``-mu``, matching the convention used on the model grid.
    """
    chi = make_cutoff(geom) if chi is None else chi
    mus = zgrid.frequencies
    blocks = np.empty((zgrid.n, geom.n, geom.n), dtype=complex)
    for k, mu in enumerate(mus):
        if zgrid.n % 2 == 0 and k == zgrid.n // 2:
            plus = assemble_kernel(geom, sa.at(abs(mu)), chi).matrix
            minus = assemble_kernel(geom, sa.at(-abs(mu)), chi).matrix
            blocks[k] = 0.5 * (plus + minus)
        else:
            blocks[k] = assemble_kernel(geom, sa.at(mu), chi).matrix
    return SuspendedOperator(geom, zgrid, blocks, sa.order, sa.name)


def suspended_apply(geom: ModelGeometry, sa: SuspendedSymbol, chi: Cutoff | None, u,
                    z=None, zgrid: ZGrid | None = None) -> np.ndarray:
    """Apply the suspended quantization of ``sa`` to samples ``u[i, l] = u(x_i, z_l)``.

    Give either the z-nodes ``z`` (checked for uniformity) or a ``ZGrid``.
    """
    if zgrid is None:
        if z is None:
            raise ValueError("pass the z-nodes or a ZGrid")
        zgrid = ZGrid.from_nodes(z)
    return suspended_operator(geom, sa, zgrid, chi).apply(u)


@dataclass(frozen=True)
class InvarianceReport:
    max_violation: float
    shifts: tuple
    tolerance: float

    @property
    def passed(self) -> bool:
        return self.max_violation <= self.tolerance


def check_invariance(op, zgrid: ZGrid | None = None, n_shifts: int = 6, n_inputs: int = 2,
                     seed: int = 0, tolerance: float = 1e-10) -> InvarianceReport:
    """Measure the failure of ``op`` to commute with grid translations in ``z``.

    ``op`` is a ``SuspendedOperator`` or any callable on arrays of shape
    ``(N, n_z)`` (with ``zgrid`` and a ``geometry`` attribute or ``N`` given
    through ``op.shape``). The violation is
    ``max |op(T u) - T op(u)| / max |op(u)|`` over random inputs and shifts.
    """
    if isinstance(op, SuspendedOperator):
        zgrid = op.zgrid
        n = op.geometry.n
        fn = op.apply
    else:
        n, nz = op.shape
        zgrid = zgrid or ZGrid(2 * np.pi, nz)
        fn = op
    rng = np.random.default_rng(seed)
    shifts = tuple(int(s) for s in rng.choice(np.arange(1, zgrid.n), size=min(n_shifts, zgrid.n - 1),
                                              replace=False))
    worst = 0.0
    for _ in range(n_inputs):
        u = rng.standard_normal((n, zgrid.n)) + 1j * rng.standard_normal((n, zgrid.n))
        base = fn(u)
        scale = max(float(np.abs(base).max()), 1e-300)
        for s in shifts:
            gap = np.abs(fn(np.roll(u, s, axis=1)) - np.roll(base, s, axis=1)).max()
            worst = max(worst, float(gap) / scale)
    return InvarianceReport(worst, shifts, tolerance)


# -- semiclassical families -------------------------------------------------------


@dataclass
class SemiclassicalFamily:
    """Operators ``a_chi(t, tD)`` for a symbol ``a(t, x, xi)``.

    The cutoff is the same for every ``t``. Assembled operators are cached;
    each ``t`` is assembled at most once.
    """

    geometry: ModelGeometry
    symbol: Callable
    chi: Cutoff | None = None
    t_ladder: tuple = (1.0, 0.5, 0.25, 0.125)
    _cache: dict = field(default_factory=dict, init=False, repr=False)
    _lock: threading.Lock = field(default_factory=threading.Lock, init=False, repr=False)

    def __post_init__(self):
        if self.chi is None:
            self.chi = make_cutoff(self.geometry)

    @classmethod
    def from_symbol(cls, geom: ModelGeometry, sym: Symbol, chi: Cutoff | None = None,
                    t_ladder: Sequence[float] = (1.0, 0.5, 0.25, 0.125)) -> "SemiclassicalFamily":
        """Family with no explicit ``t`` dependence: ``a(t, x, xi) = sym(x, xi)``."""
        return cls(geom, lambda t: sym, chi, tuple(t_ladder))

    def symbol_at(self, t: float) -> Symbol:
        return rescale_covariable(self.symbol(t), t)

    def operator(self, t: float) -> DenseOperator:
        t = float(t)
        if not t > 0:
            raise ValueError(f"t must be positive, got {t}")
        with self._lock:
            hit = self._cache.get(t)
        if hit is not None:
            return hit
        P = assemble_kernel(self.geometry, self.symbol_at(t), self.chi)
        with self._lock:
            return self._cache.setdefault(t, P)

    def ladder_operators(self) -> list[DenseOperator]:
        return [self.operator(t) for t in self.t_ladder]

    def cached(self) -> tuple[float, ...]:
        with self._lock:
            return tuple(sorted(self._cache))

    def continuity_gaps(self) -> np.ndarray:
        """Max-entry gaps between kernels at consecutive ladder points."""
        ops = [self.operator(t) for t in sorted(self.t_ladder)]
        return np.array([np.abs(a.kernel - b.kernel).max() for a, b in zip(ops[1:], ops[:-1])])


def semiclassical_apply(geom: ModelGeometry, fam: SemiclassicalFamily, t: float, u):
    """Apply ``a_chi(t, tD)`` to ``u``."""
    if fam.geometry != geom:
        raise ValueError("grid mismatch")
    if not t > 0 or not math.isfinite(t):
        raise ValueError(f"t must be positive, got {t}")
    return fam.operator(t).apply(u)
