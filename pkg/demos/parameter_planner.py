"""
Driving parameters into the admissible region
=============================================

The refresh rule halves T, shrinks g and delta, and grows sigma and M. How
many refreshes are needed grows like the logarithm of the problem scale.
"""
import dataclasses

import numpy as np

from superbath.solver import DensityCharacteristics, ParameterPlanner, default_parameters, fit_log_law
from superbath.spectral import super_ohmic_density

base = DensityCharacteristics.from_density(super_ohmic_density(), 3)

scales, counts = [], []
for s in (1, 2, 4, 8, 16, 32):
    chars = dataclasses.replace(base, n_ops=s)
    planner = ParameterPlanner(chars, b=s, r=s, h=s)
    p, log, n = planner.plan(default_parameters(chars, s))
    scales.append(s)
    counts.append(n)
    print(f"N=b=r=h={s:<3d} updates {n:3d}  T={p.T:.2e}  g={p.g:.2e}  delta={p.delta:.2e}  sigma={p.sigma:.2e}  M={p.M:.2e}")

c, c0 = fit_log_law(scales, counts)
print(f"\nupdates ~ {c:.2f} log2(scale) + {c0:.2f}")

# %%
# The witness point sits halfway inside every range
planner = ParameterPlanner(base, b=1.0, r=1.0, h=1.0)
rg = planner.ranges()
w = planner.witness()
print(f"T_max {rg.T_max:.3e}  g_max {rg.g_max:.3e}  delta_max {rg.delta_max:.3e}  sigma_min {rg.sigma_min:.3e}")
print("witness admissible:", planner.admissible(w), " step duration t =", np.format_float_scientific(w.t, 3))
