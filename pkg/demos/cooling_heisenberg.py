"""
Cooling a two-qubit Heisenberg model
====================================

Each cycle dephases the state in the energy basis and then lets it relax
under the weakly coupled super-bath. After M cycles a batch of K ideal energy
measurements gives an estimate of the ground energy (-3 here).
"""
import numpy as np

from superbath.core import build_operator_set, heisenberg, maximally_mixed
from superbath.solver import CoolingProblem, SqeParams, cooling_cycle, qpe_batch
from superbath.spectral import super_ohmic_density

problem = CoolingProblem(heisenberg(2), build_operator_set("qubit", 2), super_ohmic_density())
sd = problem.sd
print("levels:", sd.energies, "ground energy", sd.energies[0])

# zero temperature, g = 0.5, sigma = 10
params = SqeParams.make(0.0, 0.5, 10.0, 400, problem.chars.tau_R_S(0.0))
rho, trace = cooling_cycle(maximally_mixed(4), params, problem)
for cycle, energy, pop in trace[[0, 1, 10, 50, 100, 200, 400]]:
    print(f"cycle {int(cycle):4d}  <H> = {energy:+.5f}  ground population {pop:.5f}")

# %%
# K = 7 measurements per batch; the batch fails only if all seven miss the ground level
seeds = np.random.SeedSequence(0).spawn(200)
hits = sum(qpe_batch(rho, 7, s, sd)[0] == sd.energies[0] for s in seeds)
print(f"\n{hits}/200 batches returned the ground energy")

# %%
# The Lindblad (secular) generator cools too; compare the final populations
lind = CoolingProblem(heisenberg(2), build_operator_set("qubit", 2), super_ohmic_density(), generator_kind="lindblad")
_, trace_l = cooling_cycle(maximally_mixed(4), params, lind)
print(f"final ground population: Redfield {trace[-1, 2]:.6f}, Lindblad {trace_l[-1, 2]:.6f}")
