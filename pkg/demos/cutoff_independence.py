"""Changing the cutoff only changes the operator by a smoothing term.

The difference of two quantizations of ``<xi>^m`` with admissible cutoffs
is tested on oscillatory inputs ``exp(i lam s) phi``. Its norm falls off
quickly in ``lam``; a cutoff with a kink at the diagonal (the ``tent``
profile) breaks this and serves as a negative control.
"""
import numpy as np

from kncalc import Cutoff, jbracket_power, make_model
from kncalc._numerics import loglog_slope
from kncalc.verify import CHI_LAMBDAS, cutoff_difference_decay

geom = make_model("circle", 256)
chi1, chi2 = Cutoff(1.5), Cutoff(2.5)
for m in (1.0, -1.0):
    decay = cutoff_difference_decay(geom, jbracket_power(m), chi1, chi2)
    print(f"m = {m:+g}: norms {np.array2string(decay, precision=2)}, "
          f"slope {loglog_slope(CHI_LAMBDAS, decay):.2f}")

control = cutoff_difference_decay(geom, jbracket_power(1.0), chi1, Cutoff(1.5, "tent"))
print(f"tent control: norms {np.array2string(control, precision=2)}, "
      f"slope {loglog_slope(CHI_LAMBDAS, control):.2f}")
