"""Principal symbols of commutators and the Poisson bracket.

The constant relating ``sigma([P, Q])`` to ``{sigma P, sigma Q}`` is fixed
once on the circle and then reused on the other models.
"""
import numpy as np

from kncalc import assemble_kernel, make_model, poisson_bracket, recover_symbol
from kncalc.symbols import multiplication_symbol, symbol_from_name, vector_field_symbol
from kncalc.verify import calibrate_kappa

kappa, gap = calibrate_kappa()
print(f"kappa = {kappa}, distance of the raw ratio from it: {gap:.1e}")

geom = make_model("b_interval", 512, window=4.0)
a = symbol_from_name("xi")
b = vector_field_symbol(lambda x: 1.0 + x, name="a_Y")
C = assemble_kernel(geom, a).commutator(assemble_kernel(geom, b))
pb = poisson_bracket(geom, a, b)
for x in (0.3, 0.5, 0.7):
    est = recover_symbol(C, x, 1.0)
    ref = kappa * complex(pb(est.x_node, 1.0))
    print(f"x = {est.x_node:.4f}: recovered {est.value:.6f}, kappa*bracket {ref:.6f}")

# the bracket of a_X with a function is the derivative of the function along X
f = multiplication_symbol(np.sin, "sin")
print("{xi, sin} at x = 0.4:", complex(poisson_bracket(make_model("circle", 64), a, f)(0.4, 2.0)),
      "vs cos(0.4) =", np.cos(0.4))
