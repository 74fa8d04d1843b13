"""
Verification suites. Each suite evaluates both sides of one inequality or
identity on small testbeds and returns a machine-readable report.
"""
from __future__ import annotations

import time

import numpy as np

from . import dynamics as dy
from .channels import delta_stationary_from, gaussian_stabilize, lemma3_bound
from .coarse import coarse_transfer, energy_transfer_exact, lemma4_bound, lemma5_bound
from .core import (
    PAULI,
    build_operator_set,
    eigendecompose,
    embed,
    heisenberg,
    ket_to_dm,
    preset_hamiltonian,
    random_density_matrix,
    trace_distance,
)
from .solver import CoolingProblem, ParameterPlanner, energy_drops
from .spectral import (
    as_matrix_density,
    correlation_integrals,
    rates_and_shifts,
    sub_bath_check,
    super_ohmic_density,
    superbath,
)

SUITES = ("lemma2", "lemma3", "lemma45", "kms", "appendixE", "stationary-power", "lemma1")


def _report(suite, checks, started, **extra) -> dict:
    failed = [c for c in checks if not c["ok"]]
    return {"suite": suite, "passed": not failed, "n_checks": len(checks), "n_failed": len(failed),
            "seconds": round(time.perf_counter() - started, 3), "checks": checks, **extra}


def _qubit_testbeds():
    """(name, H, operator set) for the 1- and 2-qubit systems used by several suites."""
    return [
        ("qubit-z", PAULI["Z"], build_operator_set("qubit", 1)),
        ("heisenberg-2+field", heisenberg(2) + 0.3 * embed(PAULI["Z"], 0, 2), build_operator_set("qubit", 2)),
    ]


def stationary_power(n_states: int = 100, seed: int = 0, T: float = 0.5) -> dict:
    """Redfield and Lindblad powers agree on states diagonal in the energy basis."""
    started = time.perf_counter()
    rng = np.random.default_rng(seed)
    f = super_ohmic_density()
    systems = []
    for name in ("qubit-z", "heisenberg-2", "ising-3"):
        h, n = preset_hamiltonian(name)
        ops = build_operator_set("qubit", n)
        sd = eigendecompose(h)
        systems.append((name, sd, ops, rates_and_shifts(T, superbath(f, ops.size), sd.bohr, with_timescales=False)))
    checks = []
    for i in range(n_states):
        name, sd, ops, bath = systems[i % len(systems)]
        p = rng.dirichlet(np.ones(sd.dim))
        rho = sd.from_eigenbasis(np.diag(p).astype(complex))
        pk = dy.dissipation_power("K", sd, ops, bath, rho)
        pl = dy.dissipation_power("L", sd, ops, bath, rho)
        tol = 1e-9 * max(1.0, abs(pk))
        checks.append({"system": name, "P_K": pk, "P_L": pl, "diff": abs(pk - pl), "tol": tol,
                       "ok": abs(pk - pl) <= tol})
    return _report("stationary-power", checks, started, T=T)


def kms(temperatures=(0.1, 0.5, 1.0), tol: float = 1e-6) -> dict:
    """Detailed balance of the computed rates on all Bohr frequencies of the testbeds."""
    started = time.perf_counter()
    f = super_ohmic_density()
    checks = []
    for name in ("qubit-z", "heisenberg-2", "heisenberg-3", "ising-2", "ising-3"):
        h, n = preset_hamiltonian(name)
        sd = eigendecompose(h)
        J = superbath(f, 3 * n)
        for T in temperatures:
            v = rates_and_shifts(T, J, sd.bohr, with_timescales=False).kms_violation()
            checks.append({"system": name, "T": T, "violation": v, "tol": tol, "ok": v <= tol})
    return _report("kms", checks, started)


ROUNDING = 1e-12  # relative slack for bounds attained with equality (T = 0)


def appendix_e(temperatures=(0.0, 0.25, 0.5, 1.0), cutoff: float = 1.0, zero_tol: float = 1e-6) -> dict:
    """Correlation-function integrals of the s=3 density against their closed-form bounds.

    At T = 0 the upper bounds hold with equality, so comparisons carry a
    relative rounding slack of 1e-12.
    """
    started = time.perf_counter()
    f = super_ohmic_density(3.0, cutoff)
    W = cutoff
    checks = []
    for T in temperatures:
        r = correlation_integrals(f, T)
        lo, hi = 3 * W, 1.5 * np.pi * W + 6 * np.pi * T ** 3 / W ** 2
        hi_t = 3 + np.pi ** 2 * T ** 2 / W ** 2
        checks.append({"T": T, "quantity": "int|C|", "value": r.int_abs, "lower": lo, "upper": hi,
                       "ok": bool(lo * (1 - ROUNDING) <= r.int_abs <= hi * (1 + ROUNDING))})
        checks.append({"T": T, "quantity": "int t|C|", "value": r.int_t_abs, "upper": hi_t,
                       "ok": bool(r.int_t_abs <= hi_t * (1 + ROUNDING))})
        if T == 0.0:
            for q, v, exact in (("int|C| at T=0", r.int_abs, 1.5 * np.pi * W), ("int t|C| at T=0", r.int_t_abs, 3.0)):
                checks.append({"T": T, "quantity": q, "value": v, "exact": exact, "error": abs(v - exact),
                               "ok": abs(v - exact) <= zero_tol})
    return _report("appendixE", checks, started)


def lemma3(n_samples: int = 50, seed: int = 0, allowance: float = 1e-6, n_points: int = 4096) -> dict:
    """Gaussian-stabilized state against its delta-stationary approximation.

    The quadrature contribution is estimated separately by rebuilding the
    approximation on a grid twice as fine.
    """
    started = time.perf_counter()
    rng = np.random.default_rng(seed)
    beds = _qubit_testbeds()
    checks = []
    for i in range(n_samples):
        name, h, _ = beds[i % len(beds)]
        sd = eigendecompose(h)
        rho = random_density_matrix(sd.dim, rng)
        delta = rng.uniform(0.05, 1.0)
        sigma = rng.uniform(1.0, 6.0) / delta
        g = gaussian_stabilize(rho, sigma, sd)
        rs = delta_stationary_from(rho, sigma, delta, sd, n_points=n_points).assembled()
        fine = delta_stationary_from(rho, sigma, delta, sd, n_points=2 * n_points).assembled()
        dist = trace_distance(g, rs)
        bound = lemma3_bound(sigma, delta, sd.norm)
        checks.append({"system": name, "sigma": sigma, "delta": delta, "sigma_delta": sigma * delta,
                       "distance": dist, "bound": bound, "grid_error": trace_distance(rs, fine),
                       "ok": dist <= bound + allowance})
    return _report("lemma3", checks, started, allowance=allowance)


def lemma2(n_pairs: int = 20, seed: int = 0, n_modes: int = 3, max_dim: int = 1024) -> dict:
    """Exact star-bath reduced dynamics against Redfield propagation for the continuum density."""
    started = time.perf_counter()
    rng = np.random.default_rng(seed)
    f = super_ohmic_density()
    h = 0.5 * PAULI["Z"] + 0.3 * PAULI["X"]
    a = PAULI["X"]
    ops = build_operator_set("custom", 1, custom=[a])
    sd = eigendecompose(h)
    rho0 = ket_to_dm(np.array([1.0, 0.0]))
    checks = []
    for _ in range(n_pairs):
        c = rng.uniform(0.005, 0.1)
        fc = f.scaled(c)
        bath = rates_and_shifts(0.0, as_matrix_density(fc), sd.bohr)
        t = rng.uniform(0.02, 1.0) * dy.lemma2_domain(bath.tau_R, bath.tau_B)
        red = dy.propagate(dy.liouvillian(sd, ops, bath), rho0, t)
        ref = dy.exact_reference(h, (a, dy.star_from_density(fc, n_modes=n_modes)), rho0, t, max_dim=max_dim)
        dist = trace_distance(ref.rho, red)
        bound = dy.lemma2_bound(t, bath.tau_R, bath.tau_B)
        checks.append({"coupling": c, "t": t, "tau_R": bath.tau_R, "tau_B": bath.tau_B, "distance": dist,
                       "bound": bound, "fock_levels": ref.levels, "fock_converged": ref.converged,
                       "ok": dist <= bound})
    return _report("lemma2", checks, started, n_modes=n_modes)


def lemma45(deltas=(0.05, 0.1, 0.2), times=(0.01, 0.05, 0.2), temperatures=(0.0, 0.2, 0.5), coupling: float = 0.05,
            seed: int = 0) -> dict:
    """Coarse-grained against exact energy transfer, and the bound on energy absorbed from the bath."""
    started = time.perf_counter()
    rng = np.random.default_rng(seed)
    f = super_ohmic_density()
    checks = []
    for name, h, ops in _qubit_testbeds():
        sd = eigendecompose(h)
        N = ops.size
        J = superbath(f, N).scaled(coupling)
        for T in temperatures:
            bath = rates_and_shifts(T, J, sd.bohr)
            for delta in deltas:
                for t in times:
                    rho = random_density_matrix(sd.dim, rng)
                    dss = delta_stationary_from(rho, 6.0 / delta, delta, sd)
                    exact = energy_transfer_exact(bath, sd, ops, t, dss.assembled())
                    ct = coarse_transfer(J, T, sd, ops, delta, t, dss)
                    b4 = lemma4_bound(delta, t, bath.tau_R, bath.tau_B, sd.norm)
                    b5 = lemma5_bound(N, t, T, bath.tau_R)
                    checks.append({"system": name, "T": T, "delta": delta, "t": t, "lemma": 4,
                                   "error": abs(exact - ct.D), "bound": b4, "ok": abs(exact - ct.D) <= b4})
                    checks.append({"system": name, "T": T, "delta": delta, "t": t, "lemma": 5,
                                   "D_minus": ct.D_minus, "bound": b5, "ok": ct.D_minus >= b5})
    return _report("lemma45", checks, started)


def lemma1(n_cycles: int = 200, b: float = 1.0) -> dict:
    """Per-cycle energy decrease against ``P t - epsilon`` on the 2-qubit Heisenberg model.

    The good sub-bath is ``J_S / N``, which satisfies the sub-bath conditions
    with constraint factor 1; r is the inverse of its minimum power.
    """
    started = time.perf_counter()
    f = super_ohmic_density()
    h = heisenberg(2)
    ops = build_operator_set("qubit", 2)
    N = ops.size
    problem = CoolingProblem(h, ops, f)
    sd = problem.sd
    beta = dy.thermal_beta(sd)
    j_gsub = superbath(f, N).scaled(1.0 / N)
    sub = sub_bath_check(j_gsub, f, b, np.geomspace(0.01, 1.0, 4))
    pmin = dy.minimum_power(sd, ops, j_gsub, beta=beta)
    r = 1.0 / pmin.value
    planner = ParameterPlanner(problem.chars, b=b, r=r, h=sd.norm, beta=beta)
    witness = planner.witness()
    checks = [{"quantity": "sub-bath conditions", "ok": bool(sub.ok), "message": sub.message}]
    for label, params in (("witness", witness),):
        rep = energy_drops(problem, params, j_gsub, b, r, n_cycles=n_cycles)
        checks.append({"point": label, "quantity": "epsilon <= Pt/2", "epsilon": rep.epsilon.total,
                       "Pt": rep.Pt, "ok": rep.epsilon.total <= rep.Pt / 2})
        for k in np.flatnonzero(rep.checked):
            checks.append({"point": label, "cycle": int(k), "drop": float(rep.drops[k]),
                           "Pt_minus_eps": rep.Pt - rep.epsilon.total,
                           "ground_population": float(rep.ground_population[k]),
                           "ok": bool(rep.margins[k] >= 0)})
    return _report("lemma1", checks, started, r=r, b=b, beta=beta, T=witness.T, g=witness.g,
                   sigma=witness.sigma, delta=witness.delta, t=witness.t)


RUNNERS = {
    "lemma2": lemma2,
    "lemma3": lemma3,
    "lemma45": lemma45,
    "kms": kms,
    "appendixE": appendix_e,
    "stationary-power": stationary_power,
    "lemma1": lemma1,
}


def run_suite(name: str, **kwargs) -> dict:
    if name not in RUNNERS:
        raise KeyError(f"unknown suite {name!r}; choose from {', '.join(SUITES)}")
    return RUNNERS[name](**kwargs)
