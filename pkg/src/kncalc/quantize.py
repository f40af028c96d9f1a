"""Kohn-Nirenberg quantization of symbols into dense kernel operators.

On the grid, ``a_chi(D)`` acts on the trigonometric interpolant of the
samples (periodically closed for the line models) and is evaluated at the
nodes. Because ``tau(x, y) = s(x) - s(y)`` in the straightened coordinate,
the operator is a left-quantized Fourier multiplier by the smoothed symbol

    a_chi(x, w) = (2 pi)^-1 int a(x, w - z) chi^(z) dz,

and its operator matrix is ``M_ij = N^-1 sum_k a_chi(x_i, w_k) exp(i w_k (s_i - s_j))``.
The smoothed symbol is computed by FFT on a fine covariable grid. Polynomial
symbols take an exact path: a cutoff equal to one near the zero section
leaves them unchanged, and the result is ``sum_k c_k(x) (-i d_s)^k``.
"""
from __future__ import annotations

import io
import math
import struct
from dataclasses import dataclass, field, replace
from pathlib import Path
from typing import Sequence

import numpy as np
from scipy import fft as sfft

from ._numerics import richardson
from ._quadrature import quadrature_kernel
from .expmap import Cutoff, FlowOp, flow_matrix, injectivity_radius, make_cutoff, smooth_step
from .geometry import GridFunction, ModelGeometry, _check_same_grid
from .symbols import PolySymbol, Symbol

__all__ = [
    "DenseOperator",
    "QuadratureError",
    "SymbolEstimate",
    "assemble_kernel",
    "smoothed_symbol",
    "identity_operator",
    "multiplication_operator",
    "apply",
    "compose",
    "adjoint",
    "generator_chain",
    "conjugate_by_power",
    "conjugate_by_flow",
    "recover_symbol",
    "probe_bump",
    "write_kernel_csv",
    "read_kernel_csv",
    "write_kernel_binary",
    "read_kernel_binary",
]

# covariable taper width; |chi^| has fallen below 1e-16 at this distance for r = 1
_TAPER = 1300.0
# minimal period of the fine fiber grid
_T_MIN = 64.0


class QuadratureError(ArithmeticError):
    """The covariable quadrature did not reach the requested accuracy."""


@dataclass(frozen=True)
class DenseOperator:
    """An operator on grid functions stored as a kernel against volume weights.

    ``(P u)(x_i) = sum_j K[i, j] w_j u(x_j)``.

    Attributes
    ----------
    geometry : ModelGeometry
    kernel : ndarray of complex, shape (N, N)
    order : float
        Nominal order; ``-inf`` for smoothing operators.
    provenance : dict
        Symbol name, cutoff, density mode and generator chain.
    """

    geometry: ModelGeometry
    kernel: np.ndarray
    order: float
    provenance: dict = field(default_factory=dict, compare=False)

    def __post_init__(self):
        k = np.array(self.kernel, dtype=complex)
        n = self.geometry.n
        if k.shape != (n, n):
            raise ValueError(f"kernel shape {k.shape} does not match grid size {n}")
        k.setflags(write=False)
        object.__setattr__(self, "kernel", k)

    @classmethod
    def from_matrix(cls, geom: ModelGeometry, matrix, order: float, provenance=None):
        return cls(geom, np.asarray(matrix) / geom.weights[None, :], order, dict(provenance or {}))

    @property
    def matrix(self) -> np.ndarray:
        """``K[i, j] w_j``, the matrix acting on node values."""
        return self.kernel * self.geometry.weights[None, :]

    def apply(self, u):
        if isinstance(u, GridFunction):
            _check_same_grid(self.geometry, u.geometry)
            return u.with_values(self.matrix @ u.values)
        u = np.asarray(u)
        if u.shape[0] != self.geometry.n:
            raise ValueError(f"grid mismatch: input has {u.shape[0]} values, grid has {self.geometry.n}")
        return self.matrix @ u

    __call__ = apply

    def compose(self, other: "DenseOperator") -> "DenseOperator":
        _check_same_grid(self.geometry, other.geometry)
        prov = {"compose": [self.provenance.get("symbol", "?"), other.provenance.get("symbol", "?")]}
        return DenseOperator.from_matrix(self.geometry, self.matrix @ other.matrix,
                                         self.order + other.order, prov)

    def __matmul__(self, other):
        if isinstance(other, DenseOperator):
            return self.compose(other)
        return self.apply(other)

    def _combine(self, other: "DenseOperator", sign: float, tag: str) -> "DenseOperator":
        _check_same_grid(self.geometry, other.geometry)
        return DenseOperator(self.geometry, self.kernel + sign * other.kernel,
                             max(self.order, other.order), {tag: True})

    def __add__(self, other):
        return self._combine(other, 1.0, "sum")

    def __sub__(self, other):
        return self._combine(other, -1.0, "difference")

    def __mul__(self, c):
        return DenseOperator(self.geometry, c * self.kernel, self.order, dict(self.provenance))

    __rmul__ = __mul__

    def __neg__(self):
        return self * -1.0

    def commutator(self, other: "DenseOperator") -> "DenseOperator":
        m = self.matrix @ other.matrix - other.matrix @ self.matrix
        return DenseOperator.from_matrix(self.geometry, m, self.order + other.order - 1,
                                         {"commutator": True})

    def adjoint(self) -> "DenseOperator":
        """Adjoint for the weighted inner product: ``K*[i, j] = conj(K[j, i])``."""
        return DenseOperator(self.geometry, self.kernel.conj().T, self.order,
                             {**self.provenance, "adjoint": True})

    def with_order(self, order: float) -> "DenseOperator":
        return replace(self, order=float(order))


# -- assembly ----------------------------------------------------------------


def _polynomial_exact(sym: Symbol, chi: Cutoff) -> bool:
    # the tent profile is not constant near zero, so it perturbs polynomials
    return isinstance(sym, PolySymbol) and chi.profile != "tent"


def _nyquist_fix(vals: np.ndarray, n: int, plus: np.ndarray, minus: np.ndarray) -> np.ndarray:
    vals[..., n // 2] = 0.5 * (plus + minus)
    return vals


def _fine_grid(geom: ModelGeometry, chi: Cutoff):
    dw = 2 * np.pi / geom.period
    m = int(math.ceil(_T_MIN / geom.period))
    delta = dw / m
    z = _TAPER / chi.r
    omega = geom.nyquist + 2 * z
    n2 = sfft.next_fast_len(2 * int(math.ceil(omega / delta)) + 2)
    eta = sfft.fftfreq(n2, 1.0 / n2) * delta
    u = (np.abs(eta) - (geom.nyquist + z)) / z
    taper = _smooth_taper(u)
    tau = sfft.fftfreq(n2, 1.0 / n2) * (2 * np.pi / (delta * n2))
    k = np.rint(sfft.fftfreq(geom.n, 1.0 / geom.n)).astype(int)
    return eta, taper, chi(tau), (k * m) % n2, (-(geom.n // 2) * m) % n2


def _smooth_taper(u):
    return smooth_step(0.5 + 0.5 * np.clip(u, 0.0, None))


def smoothed_symbol(geom: ModelGeometry, sym: Symbol, chi: Cutoff, rows=None,
                    chunk: int = 8) -> np.ndarray:
    """Values of the cutoff-smoothed symbol at the nodes and grid frequencies.

    Returns an array of shape ``(len(rows), N)`` in FFT frequency order. The
    Nyquist column holds the mean of the values at ``+nyquist`` and
    ``-nyquist``. Symbols without ``x`` dependence give a single row.
    """
    n = geom.n
    w = geom.frequencies
    x = geom.nodes if rows is None else geom.nodes[np.asarray(rows)]
    if sym.x_independent:
        x = x[:1]
    ny = geom.nyquist
    if _polynomial_exact(sym, chi):
        vals = sym(x[:, None], w[None, :])
        return _nyquist_fix(vals, n, sym(x, ny), sym(x, -ny))
    eta, taper, chi_tau, idx, idx_minus = _fine_grid(geom, chi)
    out = np.empty((x.size, n), dtype=complex)
    for lo in range(0, x.size, chunk):
        xs = x[lo:lo + chunk]
        a = sym(xs[:, None], eta[None, :]) * taper[None, :]
        if not np.all(np.isfinite(a)):
            raise QuadratureError(f"symbol {sym.name!r} is not finite on the covariable grid")
        at = sfft.fft(chi_tau[None, :] * sfft.ifft(a, axis=1), axis=1)
        vals = at[:, idx]
        out[lo:lo + chunk] = _nyquist_fix(vals, n, at[:, idx[n // 2]], at[:, idx_minus])
    return out


def _matrix_from_smoothed(geom: ModelGeometry, vals: np.ndarray) -> np.ndarray:
    n = geom.n
    C = sfft.ifft(vals, axis=1)
    idx = (np.arange(n)[:, None] - np.arange(n)[None, :]) % n
    if C.shape[0] == 1:
        return C[0][idx]
    return np.take_along_axis(C, idx, axis=1)


def assemble_kernel(geom: ModelGeometry, sym: Symbol, chi: Cutoff | None = None,
                    method: str = "auto", density: str = "riemannian",
                    tolerance: float = 1e-8) -> DenseOperator:
    """Quantize ``sym`` to a dense operator on the grid of ``geom``.

    Parameters
    ----------
    geom : ModelGeometry
    sym : Symbol
    chi : Cutoff, optional
        Defaults to ``make_cutoff(geom)``.
    method : {"auto", "fft", "quadrature"}
        ``"auto"`` uses the exact path for polynomial symbols and the FFT
        path otherwise; ``"quadrature"`` uses Gauss-Legendre panels for both
        integrals (slow, for cross-checks).
    density : {"riemannian", "literal"}
        ``"riemannian"`` integrates against the Riemannian volume so the
        symbol 1 gives the identity. ``"literal"`` integrates against the
        coordinate measure ``dy`` of the interior chart instead.
    tolerance : float
        Maximal covariable tail contribution accepted by the quadrature path.

    Raises
    ------
    ValueError
        If the cutoff radius is not below the injectivity radius.
    QuadratureError
        If the symbol is not finite on the covariable grid or the quadrature
        tail exceeds ``tolerance``.
    """
    chi = make_cutoff(geom) if chi is None else chi
    r0 = injectivity_radius(geom)
    if not chi.r < r0:
        raise ValueError(f"cutoff radius {chi.r} must be below the injectivity radius {r0}")
    if density not in ("riemannian", "literal"):
        raise ValueError(f"unknown density mode {density!r}")
    if method in ("auto", "fft"):
        M = _matrix_from_smoothed(geom, smoothed_symbol(geom, sym, chi))
        used = "exact" if _polynomial_exact(sym, chi) else "fft"
        tail = 0.0
    elif method == "quadrature":
        M, tail = quadrature_kernel(geom, sym, chi)
        if tail > tolerance:
            raise QuadratureError(f"covariable tail {tail:.2e} exceeds tolerance {tolerance:.1e}")
        used = "quadrature"
    else:
        raise ValueError(f"unknown assembly method {method!r}")
    if density == "literal":
        M = M * geom.frame(geom.nodes)[None, :]
    prov = {"symbol": sym.name, "cutoff": {"r": chi.r, "profile": chi.profile},
            "density": density, "method": used, "tail": tail}
    return DenseOperator.from_matrix(geom, M, sym.order, prov)


def identity_operator(geom: ModelGeometry) -> DenseOperator:
    return DenseOperator.from_matrix(geom, np.eye(geom.n), 0.0, {"symbol": "identity"})


def multiplication_operator(geom: ModelGeometry, f, name: str = "f") -> DenseOperator:
    vals = f(geom.nodes) if callable(f) else np.broadcast_to(f, geom.n)
    return DenseOperator.from_matrix(geom, np.diag(np.asarray(vals, dtype=complex)), 0.0,
                                     {"symbol": name})


def apply(P: DenseOperator, u: GridFunction) -> GridFunction:
    return P.apply(u)


def compose(P: DenseOperator, Q: DenseOperator) -> DenseOperator:
    return P.compose(Q)


def adjoint(P: DenseOperator) -> DenseOperator:
    return P.adjoint()


def generator_chain(geom: ModelGeometry, b: Symbol, chi: Cutoff | None = None,
                    fields: Sequence = (), kind: str | None = None,
                    tol: float = 1e-10) -> DenseOperator:
    """``b_chi(D) psi_{X_1} ... psi_{X_k}`` for a smoothing symbol ``b``.

    Each entry of ``fields`` is a frame coefficient ``f`` (time 1) or a
    ``FlowOp``. Flows act as interpolation matrices.
    """
    if not b.is_smoothing:
        raise ValueError(f"generator symbols must be smoothing, {b.name!r} has order {b.order}")
    P = assemble_kernel(geom, b, chi)
    M = P.matrix
    for X in fields:
        M = M @ flow_matrix(geom, X, kind=kind, tol=tol)
    prov = {**P.provenance, "flows": len(fields)}
    return DenseOperator.from_matrix(geom, M, -math.inf, prov)


def conjugate_by_power(P: DenseOperator, s: complex, face: int = 0) -> DenseOperator:
    """``x_H^s P x_H^-s`` for the boundary defining function of face ``face``."""
    geom = P.geometry
    if not geom.bdf:
        raise ValueError(f"{geom.kind.value} has no boundary hyperface")
    if s == 0:
        return P
    xh = np.asarray(geom.bdf[face](geom.nodes), dtype=complex)
    d = xh ** s
    dinv = xh ** (-s)
    K = d[:, None] * P.kernel * dinv[None, :]
    return DenseOperator(geom, K, P.order, {**P.provenance, "conjugated_by_power": complex(s)})


def conjugate_by_flow(P: DenseOperator, X, t: float = 1.0, kind: str | None = None,
                      tol: float = 1e-10) -> DenseOperator:
    """``psi_X P psi_X^-1`` with flows realized as interpolation matrices."""
    geom = P.geometry
    op = X if isinstance(X, FlowOp) else FlowOp(X, t)
    F = flow_matrix(geom, op, kind=kind, tol=tol)
    Finv = flow_matrix(geom, op.reversed(), kind=kind, tol=tol)
    return DenseOperator.from_matrix(geom, F @ P.matrix @ Finv, P.order,
                                     {**P.provenance, "conjugated_by_flow": op.t})


# -- symbol recovery -----------------------------------------------------------


@dataclass(frozen=True)
class SymbolEstimate:
    value: complex
    error: float
    ladder: tuple
    samples: tuple
    node: int
    x_node: float


def probe_bump(geom: ModelGeometry, s0: float, radius: float | None = None) -> np.ndarray:
    """A smooth bump in ``s`` equal to one on ``|s - s0| <= radius / 2``."""
    if radius is None:
        radius = 2.8 if geom.is_compact else 3.0
    d = geom.s_nodes - s0
    if geom.is_compact:
        d = (d + np.pi) % (2 * np.pi) - np.pi
    return smooth_step(np.abs(d) / radius)


def _default_ladder(geom: ModelGeometry, xi: float, ladder: Sequence[float] | None):
    lam = np.asarray((32.0, 64.0, 128.0) if ladder is None else ladder, dtype=float)
    limit = geom.nyquist / 2
    if ladder is None:
        while lam.max() * abs(xi) > limit and lam.min() > 1.0:
            lam = lam / 2
    if lam.max() * abs(xi) > limit:
        raise ValueError(
            f"ladder reaches |lam xi| = {lam.max() * abs(xi):g}, above half the grid Nyquist {limit:g}")
    return lam


def recover_symbol(P: DenseOperator, x: float, xi: float, ladder: Sequence[float] | None = None,
                   order: float | None = None, rtol: float | None = None) -> SymbolEstimate:
    """Leading symbol of ``P`` at ``(x, xi)`` from oscillatory testing.

    Evaluates ``lam^-m exp(-i lam xi s) P[exp(i lam xi s) phi]`` at the node
    nearest to ``x`` for each ``lam`` in the ladder and extrapolates to
    ``lam = inf``. ``phi`` is a bump equal to one near ``x``. The default
    ladder ``(32, 64, 128)`` is halved until ``lam |xi|`` stays below half
    the grid Nyquist frequency.

    Parameters
    ----------
    order : float, optional
        The order ``m`` used for normalization; defaults to ``P.order``.
    rtol : float, optional
        If given, raise when the extrapolation error exceeds
        ``rtol * max(|value|, 1)``.
    """
    geom = P.geometry
    if xi == 0:
        raise ValueError("recover_symbol needs a nonzero covariable")
    x_arr = np.asarray(x, dtype=float)
    if not geom.is_compact and not (geom.interior_chart[0] < x_arr < geom.interior_chart[1]):
        raise ValueError(f"x = {x} is not interior")
    m = P.order if order is None else order
    if not np.isfinite(m):
        raise ValueError("recover_symbol needs a finite order")
    s0 = float(geom.straighten(x_arr))
    if geom.is_compact:
        s0 = s0 % (2 * np.pi)
        i = int(np.argmin(np.abs((geom.s_nodes - s0 + np.pi) % (2 * np.pi) - np.pi)))
    else:
        i = int(np.argmin(np.abs(geom.s_nodes - s0)))
    si = geom.s_nodes[i]
    phi = probe_bump(geom, si)
    lam = _default_ladder(geom, xi, ladder)
    row = P.matrix[i]
    samples = []
    for L in lam:
        wave = np.exp(1j * L * xi * (geom.s_nodes - si))
        samples.append(L ** (-m) * (row @ (wave * phi)))
    value, err = richardson(lam, samples)
    if rtol is not None and err > rtol * max(abs(value), 1.0):
        raise ArithmeticError(f"symbol recovery did not converge: error {err:.2e}")
    return SymbolEstimate(complex(value), float(err), tuple(float(v) for v in lam),
                          tuple(complex(v) for v in samples), i, float(geom.nodes[i]))


# -- kernel I/O ------------------------------------------------------------------

_MAGIC = b"LIEK"


def write_kernel_csv(P: DenseOperator, path) -> Path:
    """One line per kernel row: ``re,im,re,im,...``."""
    path = Path(path)
    K = P.kernel
    pairs = np.empty((K.shape[0], 2 * K.shape[1]))
    pairs[:, 0::2] = K.real
    pairs[:, 1::2] = K.imag
    buf = io.StringIO()
    np.savetxt(buf, pairs, delimiter=",", fmt="%.17g")
    path.write_text(buf.getvalue())
    return path


def read_kernel_csv(path) -> np.ndarray:
    pairs = np.loadtxt(path, delimiter=",", ndmin=2)
    return pairs[:, 0::2] + 1j * pairs[:, 1::2]


def write_kernel_binary(P: DenseOperator, path) -> Path:
    """Header ``b"LIEK"``, u32 ``N``, f64 order, then little-endian f64 re/im pairs."""
    path = Path(path)
    n = P.geometry.n
    body = np.empty((n, n, 2), dtype="<f8")
    body[..., 0] = P.kernel.real
    body[..., 1] = P.kernel.imag
    path.write_bytes(_MAGIC + struct.pack("<Id", n, float(P.order)) + body.tobytes())
    return path


def read_kernel_binary(path) -> tuple[np.ndarray, float]:
    data = Path(path).read_bytes()
    if data[:4] != _MAGIC:
        raise ValueError("not a kernel snapshot (bad magic)")
    n, order = struct.unpack("<Id", data[4:16])
    body = np.frombuffer(data[16:], dtype="<f8")
    if body.size != 2 * n * n:
        raise ValueError(f"kernel snapshot truncated: expected {2 * n * n} values, found {body.size}")
    body = body.reshape(n, n, 2)
    return body[..., 0] + 1j * body[..., 1], order
