"""Gauss-Legendre double quadrature of the fiber integral.

Independent of the FFT assembly path: both integrals, over the fiber
variable ``tau`` and the covariable ``eta``, use composite Gauss-Legendre
panels. Grid data enter through the periodic trigonometric interpolant, so
the result is the same discrete operator reached by a different route.
"""
from __future__ import annotations

import numpy as np

from .expmap import Cutoff, dirichlet_kernel
from .geometry import ModelGeometry


def gauss_panels(a: float, b: float, panels: int, nodes: int):
    x, w = np.polynomial.legendre.leggauss(nodes)
    edges = np.linspace(a, b, panels + 1)
    mid = 0.5 * (edges[1:] + edges[:-1])
    half = 0.5 * np.diff(edges)
    return (mid[:, None] + half[:, None] * x).ravel(), (half[:, None] * w).ravel()


def _eta_rule(eta_max: float, eta_lo: float = 0.0, panel: float = 2.0, nodes: int = 16):
    """Rule on ``eta_lo <= |eta| <= eta_max`` (both signs)."""
    panels = max(1, int(np.ceil((eta_max - eta_lo) / panel)))
    e, w = gauss_panels(eta_lo, eta_max, panels, nodes)
    if eta_lo == 0.0:
        e, w = gauss_panels(-eta_max, eta_max, 2 * panels, nodes)
        return e, w
    return np.concatenate([-e[::-1], e]), np.concatenate([w[::-1], w])


def fiber_transform(geom: ModelGeometry, chi: Cutoff, eta, tau_panels: int = 160,
                    tau_nodes: int = 20, chunk: int = 2048) -> np.ndarray:
    """``G[n, q] = int chi(tau) I(n h - tau) exp(i tau eta_q) dtau``.

    ``I`` is the cardinal function of trigonometric interpolation.
    """
    n = geom.n
    h = geom.spacing
    tau, wt = gauss_panels(-chi.r, chi.r, tau_panels, tau_nodes)
    A = (wt * chi(tau))[None, :] * dirichlet_kernel(geom, np.arange(n)[:, None] * h - tau[None, :])
    eta = np.asarray(eta, dtype=float)
    G = np.empty((n, eta.size), dtype=complex)
    for lo in range(0, eta.size, chunk):
        hi = min(lo + chunk, eta.size)
        G[:, lo:hi] = A @ np.exp(1j * np.outer(tau, eta[lo:hi]))
    return G


def quadrature_kernel(geom: ModelGeometry, sym, chi: Cutoff, eta_pad: float = 1000.0,
                      tail_band: float = 200.0, tau_panels: int = 160, tau_nodes: int = 20):
    """Operator matrix ``M`` with ``(P u)_i = sum_j M_ij u_j`` and a tail estimate.

    The covariable integral runs over ``|eta| <= nyquist + eta_pad / r``;
    the tail estimate is the largest entry contributed by the next band of
    width ``tail_band / r``.
    """
    n = geom.n
    eta_max = geom.nyquist + eta_pad / chi.r
    eta, we = _eta_rule(eta_max)
    eta_t, we_t = _eta_rule(eta_max + tail_band / chi.r, eta_lo=eta_max)
    G = fiber_transform(geom, chi, eta, tau_panels, tau_nodes)
    Gt = fiber_transform(geom, chi, eta_t, tau_panels, tau_nodes)
    x = geom.nodes
    idx = (np.arange(n)[:, None] - np.arange(n)[None, :]) % n
    if getattr(sym, "x_independent", False):
        col = G @ (we * sym(x[0], eta)) / (2 * np.pi)
        tail_col = Gt @ (we_t * sym(x[0], eta_t)) / (2 * np.pi)
        return col[idx], float(np.abs(tail_col).max())
    M = np.empty((n, n), dtype=complex)
    tail = 0.0
    for i in range(n):
        col = G @ (we * sym(x[i], eta)) / (2 * np.pi)
        M[i] = col[idx[i]]
        tail = max(tail, float(np.abs(Gt @ (we_t * sym(x[i], eta_t))).max() / (2 * np.pi)))
    return M, tail
