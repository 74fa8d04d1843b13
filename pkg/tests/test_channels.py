import math

import numpy as np
import pytest
from scipy import integrate

from superbath.channels import (
    delta_stationary_from,
    full_dephasing,
    gaussian_filter,
    gaussian_stabilize,
    lemma3_bound,
    rectangular_filter,
)
from superbath.core import PAULI, eigendecompose, embed, heisenberg, ket_to_dm, random_density_matrix, trace_distance

Z, X = PAULI["Z"], PAULI["X"]
SD_Z = eigendecompose(Z)
SD_H = eigendecompose(heisenberg(2) + 0.3 * embed(Z, 0, 2))


def test_sigma_zero_identity():
    rho = random_density_matrix(4, np.random.default_rng(0))
    np.testing.assert_allclose(gaussian_stabilize(rho, 0.0, SD_H), rho, atol=1e-12)


def test_qubit_dephasing_factor():
    rho = np.array([[0.5, 0.5], [0.5, 0.5]], dtype=complex)
    out = gaussian_stabilize(rho, 1.0, SD_Z)
    assert out[0, 1] == pytest.approx(0.5 * math.exp(-2.0), rel=1e-12)
    assert out[0, 0] == pytest.approx(0.5)


def test_large_sigma_full_dephasing():
    rho = random_density_matrix(4, np.random.default_rng(1))
    gap = np.min(np.diff(SD_H.energies))
    out = gaussian_stabilize(rho, 10.0 / gap, SD_H)
    np.testing.assert_allclose(out, full_dephasing(rho, SD_H), atol=1e-12)


def test_negative_sigma_rejected():
    with pytest.raises(ValueError):
        gaussian_stabilize(np.eye(2) / 2, -1.0, SD_Z)


def test_channel_properties_random_states():
    rng = np.random.default_rng(2)
    h = SD_H.hamiltonian
    for _ in range(200):
        rho = random_density_matrix(4, rng)
        out = gaussian_stabilize(rho, rng.uniform(0, 3), SD_H)
        assert np.trace(out).real == pytest.approx(1.0, abs=1e-12)
        np.testing.assert_allclose(out, out.conj().T, atol=1e-12)
        assert np.linalg.eigvalsh(out)[0] >= -1e-10
        assert np.trace(h @ out).real == pytest.approx(np.trace(h @ rho).real, abs=1e-10)
        for p in SD_H.projectors:
            np.testing.assert_allclose(p @ out @ p, p @ rho @ p, atol=1e-10)


def test_composition():
    rho = random_density_matrix(4, np.random.default_rng(3))
    a = gaussian_stabilize(gaussian_stabilize(rho, 0.4, SD_H), 0.7, SD_H)
    np.testing.assert_allclose(a, gaussian_stabilize(rho, math.hypot(0.4, 0.7), SD_H), atol=1e-10)


def test_monte_carlo_converges():
    rho = random_density_matrix(4, np.random.default_rng(4))
    exact = gaussian_stabilize(rho, 0.8, SD_H)
    errs = []
    for n in (400, 6400):
        runs = [trace_distance(gaussian_stabilize(rho, 0.8, SD_H, mode="monte-carlo", n_samples=n,
                                                  rng=np.random.default_rng(s)), exact) for s in range(20)]
        errs.append(np.mean(runs))
    # 16x more samples: error should shrink by about 4
    assert 2.5 < errs[0] / errs[1] < 6.5


def test_monte_carlo_needs_rng():
    with pytest.raises(ValueError):
        gaussian_stabilize(np.eye(2) / 2, 1.0, SD_Z, mode="monte-carlo")


# --- filters ------------------------------------------------------------------------

def test_rectangular_filter():
    np.testing.assert_allclose(rectangular_filter(0.0, 2.0, SD_Z), np.eye(2), atol=1e-12)
    np.testing.assert_allclose(rectangular_filter(1.0, 0.5, SD_Z), np.diag([1.0, 0.0]), atol=1e-12)
    f = rectangular_filter(0.4, 0.7, SD_H)
    np.testing.assert_allclose(f @ f, f, atol=1e-12)


def test_gaussian_filter_norm_bound():
    sigma = 1.7
    cap = (math.sqrt(2) * sigma / math.sqrt(math.pi)) ** 0.5
    for x in np.linspace(-4, 4, 17):
        assert np.linalg.norm(gaussian_filter(x, sigma, SD_H), 2) <= cap + 1e-12


def test_filter_integral_reproduces_channel():
    rho = random_density_matrix(4, np.random.default_rng(5))
    sigma = 1.3

    def integrand(x):
        g = gaussian_filter(x, sigma, SD_H)
        return g @ rho @ g

    val, _ = integrate.quad_vec(integrand, -12, 12, epsabs=1e-12)
    np.testing.assert_allclose(val, gaussian_stabilize(rho, sigma, SD_H), atol=1e-6)


# --- delta-stationary states --------------------------------------------------------

def test_diagonal_state_is_stationary():
    rho = SD_H.from_eigenbasis(np.diag([0.1, 0.2, 0.3, 0.4]).astype(complex))
    gap = np.min(np.diff(SD_H.energies))
    dss = delta_stationary_from(rho, 5.0, gap, SD_H)
    assert dss.normalization == pytest.approx(1.0, abs=1e-8)
    assert trace_distance(dss.assembled(), rho) < 1e-3
    for k in range(0, len(dss.x), 256):
        comp = dss.component(k)
        f = rectangular_filter(dss.x[k], dss.delta, SD_H)
        np.testing.assert_allclose(f @ comp @ f, comp, atol=1e-10)
        assert np.trace(comp).real == pytest.approx(1.0, abs=1e-10)


def test_plus_state_example():
    rho = ket_to_dm(np.array([1, 1]) / math.sqrt(2))
    sigma, delta = 3.0, 1.0
    dss = delta_stationary_from(rho, sigma, delta, SD_Z)
    dist = trace_distance(gaussian_stabilize(rho, sigma, SD_Z), dss.assembled())
    bound = lemma3_bound(sigma, delta, 1.0)
    assert bound == pytest.approx(8 * math.sqrt(2) * 3 * 2 / math.sqrt(math.pi) * math.exp(-9) + 2 * math.exp(-18))
    assert dist <= bound


def test_grid_must_cover_range():
    with pytest.raises(ValueError):
        delta_stationary_from(np.eye(2) / 2, 1.0, 0.5, SD_Z, x_grid=np.linspace(-1, 1, 11))


def test_stabilization_bound_arithmetic():
    ref = 160 * math.sqrt(2) * 2 / math.sqrt(math.pi) * math.exp(-100) + 2 * math.exp(-200)
    assert lemma3_bound(10.0, 1.0, 1.0) == pytest.approx(ref, rel=1e-14)
    assert lemma3_bound(10.0, 1.0, 1.0) == pytest.approx(9.5e-42, rel=0.05)
    assert lemma3_bound(6.0, 1.0, 1.0) < 1e-13
    # delta -> 0 does not make the bound vanish
    assert lemma3_bound(2.0, 1e-9, 1.0) == pytest.approx(8 * math.sqrt(2) * 2 / math.sqrt(math.pi) + 2, rel=1e-6)


def test_stabilization_bound_decreasing_past_peak():
    delta, h = 0.5, 1.0
    sig = np.linspace(1 / delta, 20 / delta, 400)
    vals = np.array([lemma3_bound(s, delta, h) for s in sig])
    assert np.all(np.diff(vals) <= 0)
