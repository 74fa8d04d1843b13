import math

import numpy as np
import pytest

from superbath.core import PAULI, build_operator_set, eigendecompose, heisenberg, ket_to_dm, maximally_mixed, preset_hamiltonian
from superbath.solver import (
    CoolingProblem,
    DensityCharacteristics,
    ParameterPlanner,
    RunRecord,
    SqeConfig,
    SqeParams,
    admissible_ranges,
    batch_size,
    cooling_cycle,
    default_parameters,
    epsilon_bound,
    fit_log_law,
    outcome_probabilities,
    qpe_batch,
    qpe_trial,
    run_sqe,
    update_parameters,
)
from superbath.spectral import super_ohmic_density

F3 = super_ohmic_density()
TAU_R0 = 1 / (6 * math.pi)
TAU_B0 = 2 / math.pi


def stub_chars(n_ops=3, tau_R=TAU_R0, tau_B=TAU_B0, temps=()):
    """Characteristics with temperature-independent timescales."""
    cache = {float(T): (tau_R, tau_B) for T in temps}
    return DensityCharacteristics(F3, n_ops, 1.0, tau_R, tau_R, _cache=cache)


class ConstantChars(DensityCharacteristics):
    def timescales(self, T):
        return self.tau_R_min, TAU_B0


def const_chars(n_ops=3):
    return ConstantChars(F3, n_ops, 1.0, TAU_R0, TAU_R0)


# --- parameters --------------------------------------------------------------------

def test_params_enforce_step_duration():
    p = SqeParams.make(0.1, 0.5, 10, 1000, tau_R_S=0.02)
    assert p.t * p.g == pytest.approx(0.02, rel=1e-15)
    with pytest.raises(ValueError):
        SqeParams(T=0.1, g=0.5, t=1.0, sigma=10, M=10, tau_R_S=0.02)
    with pytest.raises(ValueError):
        SqeParams.make(0.1, -0.5, 10, 1000, tau_R_S=0.02)


def test_default_update_with_constant_tau_B():
    chars = const_chars()
    p = default_parameters(chars, h=1.0)
    assert (p.T, p.g, p.sigma, p.M) == (0.1, 0.5, 10.0, 1000)
    q, lam = update_parameters(p, chars)
    assert lam["lambda_1"] == 1.0
    assert (q.T, q.g, q.M) == (0.05, 0.25, 4000)
    assert q.t * q.g == pytest.approx(TAU_R0 / 3, rel=1e-12)
    assert q.sigma == pytest.approx(p.sigma * lam["sigma_factor"])
    assert lam["sigma_factor"] == pytest.approx(2 * lam["lambda_5"])
    assert lam["lambda_5"] == pytest.approx(4 / lam["lambda_4"] ** 2)


def test_update_with_real_density_keeps_constraint():
    chars = DensityCharacteristics.from_density(F3, 3, T_grid=[0.05, 0.1, 0.5, 1.0])
    p = default_parameters(chars, h=1.0)
    for _ in range(3):
        p, lam = update_parameters(p, chars)
        assert 0 < lam["lambda_1"] <= 1
        assert p.t * p.g == pytest.approx(chars.tau_R_S(p.T), rel=1e-12)


def test_range_arithmetic():
    chars = const_chars(3)
    rg = admissible_ranges(3, 1.0, 1.0, 1.0, None, chars)
    assert rg.T_max == pytest.approx(math.e / (324 * math.pi), rel=1e-14)
    tm, tb = TAU_R0, TAU_B0
    g_ref = min(0.5, tm / (3 * tb), tm / 36, tm**3 / (2304 * math.e**2 * 27 * tb))
    assert rg.g_max == pytest.approx(g_ref, rel=1e-14)
    f1 = 3 / tm + 2 * (1 / rg.g + 3 * tb / tm)
    f2 = 1 / tm + 2 * (tm / (rg.g * 3 * tm) + tb / tm)
    assert rg.delta_1 == pytest.approx(1 / (12 * f1), rel=1e-14)
    assert rg.delta_2 == pytest.approx(1 / (12 * f2), rel=1e-14)
    d = rg.delta
    s_ref = max(192 * math.sqrt(2) * 3 / (math.sqrt(math.pi) * d**2 * tm), (math.sqrt(math.pi) / (4 * math.sqrt(2))) ** (1 / 3) / d)
    assert rg.sigma_min == pytest.approx(s_ref, rel=1e-14)
    with pytest.raises(ValueError):
        admissible_ranges(4, 1.0, 1.0, 1.0, None, chars)


def test_doubling_b():
    chars = const_chars(3)
    a = ParameterPlanner(chars, b=1.0)
    b = ParameterPlanner(chars, b=2.0)
    assert b.T_max() == pytest.approx(a.T_max() / 2, rel=1e-14)
    # the binding g term here is the cubic one, which scales as 1/b^2
    assert b.g_max(0.01) == pytest.approx(a.g_max(0.01) / 4, rel=1e-14)


def test_witness_budget():
    chars = const_chars(3)
    pl = ParameterPlanner(chars, b=1.0, r=1.0, h=1.0)
    w = pl.witness()
    assert pl.admissible(w)
    js = (chars.tau_R_S(w.T), TAU_B0)
    eps = epsilon_bound(w, js, (TAU_R0, TAU_B0), 1.0, 1.0, 1.0, w.delta, 3)
    Pt = eps.P * w.t
    assert all(term <= Pt / 12 for term in eps.terms)
    assert eps.total <= Pt / 2


def test_epsilon_limits():
    js, jg = (0.05, 0.6), (0.15, 0.6)
    ratios = []
    # delta must vanish faster than g, otherwise the coarse-graining terms stay O(Pt)
    for g in (1e-2, 1e-3, 1e-4, 1e-5):
        p = SqeParams.make(0.0, g, (10 - np.log(g)) / g**2, 10, tau_R_S=js[0], delta=g**2)
        eps = epsilon_bound(p, js, jg, 1.0, 1.0, 1.0, p.delta, 3)
        ratios.append([term / (eps.P * p.t) for term in eps.terms])
    ratios = np.array(ratios)
    assert np.all(np.diff(ratios, axis=0) <= 0)
    assert ratios[-1].sum() < 0.1 * ratios[0].sum()
    p = SqeParams.make(0.0, 1e-3, 1e5, 10, tau_R_S=js[0], delta=1e-2)
    assert epsilon_bound(p, js, jg, 1.0, 1.0, 1.0, p.delta, 3).terms[3] == 0.0
    with pytest.raises(ValueError):
        epsilon_bound(SqeParams.make(0.0, 0.5, 1, 1, tau_R_S=0.05), js, jg, 1.0, 1.0, 1.0, 0.1, 3)


def test_fit_log_law():
    x = np.array([2, 4, 8, 16, 32])
    c, c0 = fit_log_law(x, 3 * np.log2(x) + 5)
    assert (c, c0) == pytest.approx((3.0, 5.0))


# --- cooling ---------------------------------------------------------------------------

def qubit_problem():
    return CoolingProblem(PAULI["Z"], build_operator_set("qubit", 1), F3)


def test_zero_cycles_identity():
    pr = qubit_problem()
    p = SqeParams.make(0.0, 0.5, 10, 0, tau_R_S=pr.chars.tau_R_S(0.0))
    rho = maximally_mixed(2)
    out, rows = cooling_cycle(rho, p, pr)
    np.testing.assert_array_equal(out, rho)
    assert len(rows) == 1


def test_qubit_cools_to_ground():
    pr = qubit_problem()
    p = SqeParams.make(0.0, 0.5, 10, 200, tau_R_S=pr.chars.tau_R_S(0.0))
    rho, rows = cooling_cycle(maximally_mixed(2), p, pr)
    assert rows[-1, 2] > 0.99
    assert np.all(np.diff(rows[:, 1]) <= 1e-12)


def test_trace_stride():
    pr = qubit_problem()
    p = SqeParams.make(0.0, 0.5, 10, 25, tau_R_S=pr.chars.tau_R_S(0.0))
    full, rows = cooling_cycle(maximally_mixed(2), p, pr)
    thin, rows2 = cooling_cycle(maximally_mixed(2), p, pr, max_trace_points=10)
    np.testing.assert_allclose(full, thin, atol=1e-12)
    assert list(rows2[:, 0]) == [0, 3, 6, 9, 12, 15, 18, 21, 24, 25]


# --- idealized phase estimation -----------------------------------------------------

def test_qpe_ground_state():
    sd = eigendecompose(PAULI["Z"])
    for s in range(20):
        e, post = qpe_trial(ket_to_dm([0, 1]), s, sd)
        assert e == -1.0
        np.testing.assert_allclose(post, ket_to_dm([0, 1]))


def test_qpe_mixed_nondegenerate():
    h, _ = preset_hamiltonian("ising-2")
    sd = eigendecompose(h)
    assert len(sd.energies) == 4
    np.testing.assert_allclose(outcome_probabilities(maximally_mixed(4), sd), 0.25)


def test_qpe_batch_one_equals_trial():
    sd = eigendecompose(heisenberg(2))
    rho = maximally_mixed(4)
    for s in range(10):
        child = np.random.SeedSequence(s).spawn(1)[0]
        assert qpe_batch(rho, 1, s, sd)[0] == qpe_trial(rho, child, sd)[0]


def test_qpe_batch_failure_rate():
    sd = eigendecompose(PAULI["Z"])
    rho = np.diag([0.5, 0.5]).astype(complex)
    n = 4000
    fails = sum(qpe_batch(rho, 7, s, sd)[0] != -1.0 for s in range(n))
    p = 0.5**7
    assert abs(fails / n - p) <= 3 * math.sqrt(p * (1 - p) / n)
    excited = ket_to_dm([1, 0])
    assert all(qpe_batch(excited, 7, s, sd)[0] == 1.0 for s in range(50))


def test_batch_size():
    assert batch_size(0.01) == math.ceil(math.log(0.01) / math.log(0.75))
    with pytest.raises(ValueError):
        batch_size(1.5)


# --- runs ------------------------------------------------------------------------------

def test_run_qubit():
    cfg = SqeConfig(PAULI["Z"], build_operator_set("qubit", 1), F3, seed=3)
    rec = run_sqe(cfg)
    assert rec.E_min_history[1] == -1.0
    assert rec.stop_reason == "stable"
    assert all(np.diff(rec.E_min_history) <= 0)


def test_run_heisenberg():
    cfg = SqeConfig(heisenberg(2), build_operator_set("qubit", 2), F3, T=0.0, M=200, seed=1)
    rec = run_sqe(cfg)
    assert rec.E_min == pytest.approx(-3.0)
    assert rec.stop_reason == "stable" and rec.next_batch < 10
    for row in rec.params_history:
        assert row["t"] * row["g"] == pytest.approx(row["tau_R_S"], rel=1e-12)


def test_run_without_bath():
    cfg = SqeConfig(heisenberg(2), build_operator_set("qubit", 2), F3.scaled(0.0), M=5, L_max=4, seed=0)
    rec = run_sqe(cfg)
    assert rec.stop_reason == "L_max"
    energies = np.array([e for _, _, e, _ in rec.energy_trace])
    np.testing.assert_allclose(energies, 0.0, atol=1e-12)
    assert rec.E_min in (-3.0, 1.0)


def test_record_roundtrip_and_resume(tmp_path):
    cfg = SqeConfig(PAULI["Z"], build_operator_set("qubit", 1), F3, M=20, L_max=6, seed=5, stop_rel=-1.0)
    full = run_sqe(cfg, checkpoint=tmp_path / "ck.json")
    path = tmp_path / "rec.json"
    full.save(path)
    assert RunRecord.load(path).to_document() == full.to_document()
    assert RunRecord.load(tmp_path / "ck.json").to_document() == full.to_document()

    # rewind the record to the middle of the run and continue
    doc = full.to_document()
    keep = 3
    doc["E_min_history"] = doc["E_min_history"][:keep]
    doc["batches"] = doc["batches"][:keep]
    doc["energy_trace"] = [r for r in doc["energy_trace"] if r[0] < keep]
    doc["params_history"] = doc["params_history"][:keep + 1]
    doc["params"] = {k: v for k, v in doc["params_history"][-1].items() if k in SqeParams.__dataclass_fields__}
    doc["next_batch"], doc["stop_reason"] = keep, ""
    resumed = run_sqe(cfg, resume=RunRecord.from_document(doc))
    assert resumed.to_document() == full.to_document()
