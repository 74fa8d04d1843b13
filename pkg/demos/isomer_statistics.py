"""
Isomer half-lives by shell region
=================================

A small synthetic table run through the statistics pipeline. Real tables
use the same column layout (Z, N, E_gamma_keV, half_life_s, label).
"""
import numpy as np

from superbath.nuclear import IsomerRecord, dissipation_power, region_stats

rng = np.random.default_rng(7)
records = [IsomerRecord(int(z), int(n), float(e), float(10 ** lt))
           for z, n, e, lt in zip(rng.integers(10, 100, 80), rng.integers(10, 150, 80),
                                   rng.uniform(10, 3000, 80), rng.normal(0, 4, 80))]

print("power of a 1 keV photon with 1 s half-life:", dissipation_power(1.0, 1.0), "keV/s")

st = region_stats(records)
for label, (xs, cs) in st.cdfs.items():
    print(f"region {label:>7}: {len(xs):3d} isomers, median log10 T1/2 = {np.median(xs):+.2f}")
