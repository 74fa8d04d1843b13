import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from superbath.core import (
    PAULI,
    DimensionError,
    NotHermitianError,
    annihilation_ops,
    as_density_matrix,
    build_operator_set,
    eigendecompose,
    embed,
    heisenberg,
    jump_decompose,
    ket_to_dm,
    l1_matrix_norm,
    matrix_from_document,
    matrix_to_document,
    random_density_matrix,
    random_hermitian,
    spectral_norm,
    trace_distance,
)

X, Y, Z, I2 = PAULI["X"], PAULI["Y"], PAULI["Z"], PAULI["I"]


def test_pauli_z_spectrum():
    sd = eigendecompose(Z)
    np.testing.assert_allclose(sd.energies, [-1, 1])
    np.testing.assert_allclose(sd.bohr, [-2, 0, 2])


def test_identity_single_projector():
    sd = eigendecompose(np.eye(4))
    assert len(sd.energies) == 1
    np.testing.assert_allclose(sd.projectors[0], np.eye(4), atol=1e-12)
    np.testing.assert_allclose(sd.bohr, [0.0])


def test_heisenberg_two_sites():
    h = heisenberg(2)
    ref = np.linalg.eigvalsh(h)  # independent dense eigensolve
    np.testing.assert_allclose(ref, [-3, 1, 1, 1], atol=1e-12)
    sd = eigendecompose(h)
    np.testing.assert_allclose(sd.energies, [-3, 1], atol=1e-12)
    np.testing.assert_allclose(sd.bohr, [-4, 0, 4], atol=1e-12)
    singlet = np.array([0, 1, -1, 0]) / np.sqrt(2)
    np.testing.assert_allclose(sd.ground_projector, ket_to_dm(singlet), atol=1e-12)


def test_non_hermitian_rejected():
    with pytest.raises(NotHermitianError):
        eigendecompose(np.array([[0, 1], [0, 0]]))


@settings(max_examples=30, deadline=None)
@given(st.integers(2, 16), st.integers(0, 2**31 - 1))
def test_random_reconstruction(d, seed):
    h = random_hermitian(d, np.random.default_rng(seed))
    sd = eigendecompose(h)
    recon = sum(e * p for e, p in zip(sd.energies, sd.projectors))
    np.testing.assert_allclose(recon, h, atol=1e-10)
    np.testing.assert_allclose(sum(sd.projectors), np.eye(d), atol=1e-10)
    for m, pm in enumerate(sd.projectors):
        for n, pn in enumerate(sd.projectors):
            np.testing.assert_allclose(pm @ pn, pm if m == n else 0 * pm, atol=1e-10)
    np.testing.assert_allclose(np.sort(-sd.bohr), sd.bohr, atol=0)
    assert np.min(np.abs(sd.bohr)) == 0


def test_jump_z_x():
    sd = eigendecompose(Z)
    comps = jump_decompose(X, sd)
    k2, k0, km2 = sd.bohr_index(2.0), sd.bohr_index(0.0), sd.bohr_index(-2.0)
    # lowers energy by 2: maps the E=1 state |0> to the E=-1 state |1>
    np.testing.assert_allclose(comps[k2], np.array([[0, 0], [1, 0]]), atol=1e-12)
    np.testing.assert_allclose(comps[km2], comps[k2].conj().T, atol=1e-12)
    np.testing.assert_allclose(comps[k0], 0, atol=1e-12)


def test_jump_commuting_operator():
    sd = eigendecompose(Z)
    comps = jump_decompose(Z, sd)
    np.testing.assert_allclose(comps[sd.bohr_index(0.0)], Z, atol=1e-12)
    np.testing.assert_allclose(comps[sd.bohr_index(2.0)], 0, atol=1e-12)


def test_jump_dimension_mismatch():
    with pytest.raises(DimensionError):
        jump_decompose(np.eye(4), eigendecompose(Z))


def test_jump_properties_random_pairs():
    rng = np.random.default_rng(1)
    for _ in range(100):
        d = int(rng.integers(2, 7))
        h = random_hermitian(d, rng)
        a = random_hermitian(d, rng)
        sd = eigendecompose(h)
        comps = jump_decompose(a, sd)
        np.testing.assert_allclose(comps.sum(axis=0), a, atol=1e-10)
        for k, w in enumerate(sd.bohr):
            np.testing.assert_allclose(h @ comps[k] - comps[k] @ h, -w * comps[k], atol=1e-9)
            np.testing.assert_allclose(comps[sd.bohr_index(-w)], comps[k].conj().T, atol=1e-10)


def test_operator_sets():
    s1 = build_operator_set("qubit", 1)
    assert s1.size == 3
    np.testing.assert_allclose(s1.operators, [X, Y, Z])
    s2 = build_operator_set("qubit", 2)
    assert s2.size == 6 and s2.dim == 4
    np.testing.assert_allclose(s2.operators[3], np.kron(I2, X))
    for n in (1, 2, 3):
        fs = build_operator_set("fermion", n)
        assert fs.size == n * n
        for a in fs:
            assert abs(spectral_norm(a) - 1) < 1e-10


def test_fermion_hopping_expansion():
    fs = build_operator_set("fermion", 2)
    k = fs.labels.index("hopx12")
    expected = (np.kron(X, X) + np.kron(Y, Y)) / 2  # symbolic Jordan-Wigner result
    np.testing.assert_allclose(fs.operators[k] * fs.scales[k], expected, atol=1e-12)


@pytest.mark.parametrize("n", [1, 2, 3])
def test_fermion_anticommutation(n):
    c = annihilation_ops(n)
    d = 2**n
    for i in range(n):
        for j in range(n):
            acomm = c[i] @ c[j].conj().T + c[j].conj().T @ c[i]
            np.testing.assert_allclose(acomm, np.eye(d) * (i == j), atol=1e-12)
            np.testing.assert_allclose(c[i] @ c[j] + c[j] @ c[i], 0, atol=1e-12)


def test_operator_set_errors():
    with pytest.raises(ValueError):
        build_operator_set("boson", 1)
    with pytest.raises(ValueError):
        build_operator_set("qubit", 0)


def test_trace_distance_examples():
    rho = ket_to_dm([1, 0])
    assert trace_distance(rho, rho) == pytest.approx(0, abs=1e-15)
    assert trace_distance(rho, ket_to_dm([0, 1])) == pytest.approx(2.0)
    assert trace_distance(np.diag([1.0, 0]), np.diag([0.6, 0.4])) == pytest.approx(0.8)
    with pytest.raises(DimensionError):
        trace_distance(np.eye(2), np.eye(3))


def test_trace_distance_metric():
    rng = np.random.default_rng(3)
    for _ in range(20):
        a, b, c = (random_density_matrix(4, rng) for _ in range(3))
        assert trace_distance(a, b) == pytest.approx(trace_distance(b, a))
        assert trace_distance(a, c) <= trace_distance(a, b) + trace_distance(b, c) + 1e-12


def test_norms():
    assert spectral_norm(np.diag([3.0, -5.0])) == pytest.approx(5.0)
    assert l1_matrix_norm(np.array([[1, -2], [3j, 0]])) == pytest.approx(6.0)


def test_density_matrix_validation():
    as_density_matrix(np.eye(2) / 2)
    with pytest.raises(ValueError):
        as_density_matrix(np.eye(2))


def test_document_roundtrip():
    a = random_hermitian(3, np.random.default_rng(0))
    np.testing.assert_array_equal(matrix_from_document(matrix_to_document(a)), a)


def test_embed():
    np.testing.assert_allclose(embed(Z, 1, 3), np.kron(np.kron(I2, Z), I2))
