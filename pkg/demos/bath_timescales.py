"""
Bath timescales of the s=3 super-Ohmic density
==============================================

The correlation function of J(w) = w^3 exp(-w) sets two timescales: the
relaxation time tau_R and the bath memory time tau_B. The cooling step
duration is t = tau_R(J_S) / g, so both numbers feed directly into a run.
"""
import numpy as np

from superbath.spectral import check_proper, correlation_integrals, super_ohmic_density, superbath

f = super_ohmic_density(3.0, 1.0)

# zero temperature has a closed form: tau_R = 1/(6 pi), tau_B = 2/pi
r0 = correlation_integrals(f, 0.0)
print(f"T=0    tau_R = {r0.tau_R:.6f} (1/6pi = {1 / (6 * np.pi):.6f})  tau_B = {r0.tau_B:.6f} (2/pi = {2 / np.pi:.6f})")

for T in (0.1, 0.25, 0.5, 1.0):
    r = correlation_integrals(f, T)
    print(f"T={T:<5} tau_R = {r.tau_R:.6f}  tau_B = {r.tau_B:.6f}  tau_B/tau_R = {r.tau_B / r.tau_R:.2f}")

# %%
# Every coupling operator of a 2-qubit system gets its own copy of the bath.
# The relaxation time shrinks by the number of copies, the memory time does not.
JS = superbath(f, 6)
rs = correlation_integrals(JS, 0.5)
r1 = correlation_integrals(f, 0.5)
print(f"\nsuper-bath of 6 copies at T=0.5: tau_R ratio {r1.tau_R / rs.tau_R:.4f}, tau_B ratio {r1.tau_B / rs.tau_B:.4f}")

# %%
# The regularity conditions, checked on a temperature grid up to T_sup = 1
rep = check_proper(f)
print(f"\nproper: {rep.proper}; tau_R over (0, 1] in [{rep.tau_R_min:.5f}, {rep.tau_R_max:.5f}]")
