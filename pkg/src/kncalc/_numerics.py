"""Small numerical helpers shared across modules."""
from __future__ import annotations

import numpy as np


def richardson(lams, values):
    """Extrapolate ``v(lam) = v0 + c1/lam + c2/lam^2 + ...`` to ``lam = inf``.

    Neville's scheme in ``h = 1/lam`` using every ladder point. Returns the
    limit and the difference to the extrapolation that drops the smallest
    ``lam``, which serves as an error estimate.
    """
    h = 1.0 / np.asarray(lams, dtype=float)
    v = np.asarray(values, dtype=complex)
    if len(h) == 1:
        return v[0], np.inf

    def neville(hh, vv):
        p = list(vv)
        n = len(hh)
        for k in range(1, n):
            for i in range(n - k):
                p[i] = (hh[i + k] * p[i] - hh[i] * p[i + 1]) / (hh[i + k] - hh[i])
        return p[0]

    full = neville(h, v)
    reduced = neville(h[1:], v[1:])
    return full, float(abs(full - reduced))


def loglog_slope(x, y, floor: float = 1e-300) -> float:
    """Least-squares slope of ``log y`` against ``log x``."""
    lx = np.log(np.asarray(x, dtype=float))
    ly = np.log(np.maximum(np.abs(np.asarray(y, dtype=float)), floor))
    return float(np.polyfit(lx, ly, 1)[0])


def central_diff(func, x, step, order: int = 1):
    """Central finite difference of ``func`` (orders 1-4, error O(step^4))."""
    stencils = {
        1: ((-2, 1 / 12), (-1, -2 / 3), (1, 2 / 3), (2, -1 / 12)),
        2: ((-2, -1 / 12), (-1, 4 / 3), (0, -5 / 2), (1, 4 / 3), (2, -1 / 12)),
        3: ((-3, 1 / 8), (-2, -1.0), (-1, 13 / 8), (1, -13 / 8), (2, 1.0), (3, -1 / 8)),
        4: ((-3, -1 / 6), (-2, 2.0), (-1, -13 / 2), (0, 28 / 3), (1, -13 / 2), (2, 2.0), (3, -1 / 6)),
    }
    acc = 0.0
    for k, c in stencils[order]:
        acc = acc + c * np.asarray(func(x + k * step))
    return acc / step**order
