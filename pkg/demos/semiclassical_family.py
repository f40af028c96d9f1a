"""A semiclassical family ``a(tD)`` and the scaling of its commutators.

For ``a = <xi>^2`` the commutator ``[a(tD), f]`` acting on wave packets at
covariable ``4 / t`` has size proportional to ``t``.
"""
import numpy as np

from kncalc import SemiclassicalFamily, jbracket_power, make_model
from kncalc._numerics import loglog_slope

geom = make_model("circle", 128)
ladder = (1.0, 0.5, 0.25, 0.125)
fam = SemiclassicalFamily.from_symbol(geom, jbracket_power(2.0), t_ladder=ladder)
f = np.sin(geom.nodes)
norms = []
for t in ladder:
    M = fam.operator(t).matrix
    C = M * f[None, :] - f[:, None] * M
    e = np.exp(1j * np.round(4.0 / t) * geom.s_nodes)
    norms.append(np.linalg.norm(C @ e) / np.linalg.norm(e))
    print(f"t = {t:<6g} ||[P_t, f] e|| = {norms[-1]:.4f}")
print(f"fitted slope in t: {loglog_slope(ladder, norms):.4f}")
print("cached parameters:", fam.cached())
