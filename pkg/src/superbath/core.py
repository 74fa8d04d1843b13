"""
Dense operator and state algebra.

Operators and states are plain complex ``numpy`` arrays. This module supplies
the validation helpers, the spectral decomposition of a system Hamiltonian
(with degeneracy merging), the Bohr-frequency decomposition of coupling
operators, the qubit / fermion coupling-operator sets and a small JSON-like
serialization used for checkpoints.

Conventions
-----------
- Natural units, hbar = k_B = 1.
- Qubit 1 is the most significant tensor factor, ``kron(P_1, kron(P_2, ...))``.
- ``trace_distance`` is the unnormalized trace norm ``||a - b||_1`` (two
  orthogonal pure states are at distance 2).
"""
from __future__ import annotations

from dataclasses import dataclass, field
from functools import reduce

import numpy as np

HERMITIAN_TOL = 1e-12
DEGENERACY_RTOL = 1e-9
PSD_TOL = 1e-9

PAULI = {
    "I": np.eye(2, dtype=complex),
    "X": np.array([[0, 1], [1, 0]], dtype=complex),
    "Y": np.array([[0, -1j], [1j, 0]], dtype=complex),
    "Z": np.array([[1, 0], [0, -1]], dtype=complex),
}


class NotHermitianError(ValueError):
    pass


class DimensionError(ValueError):
    pass


# --- validation ---------------------------------------------------------------

def as_hermitian(a, tol: float = HERMITIAN_TOL) -> np.ndarray:
    """Return ``a`` as a complex square array, checking Hermiticity elementwise."""
    a = np.asarray(a, dtype=complex)
    if a.ndim != 2 or a.shape[0] != a.shape[1]:
        raise DimensionError(f"expected a square matrix, got shape {a.shape}")
    dev = np.max(np.abs(a - a.conj().T)) if a.size else 0.0
    if dev > tol:
        raise NotHermitianError(f"matrix is not Hermitian (max |A - A^dag| = {dev:.3e})")
    return a


def check_density_matrix(rho, psd_tol: float = PSD_TOL) -> dict:
    """Report how well ``rho`` satisfies the density-matrix invariants.

    Returns a dict with ``hermitian_dev``, ``trace``, ``min_eig`` and ``valid``.
    Negative eigenvalues down to ``-psd_tol`` are tolerated (Redfield leakage);
    anything below is flagged as invalid rather than raised.
    """
    rho = np.asarray(rho, dtype=complex)
    herm = float(np.max(np.abs(rho - rho.conj().T)))
    tr = complex(np.trace(rho))
    min_eig = float(np.linalg.eigvalsh(0.5 * (rho + rho.conj().T))[0])
    valid = herm <= 1e-10 and abs(tr - 1) <= 1e-8 and min_eig >= -psd_tol
    return {"hermitian_dev": herm, "trace": tr, "min_eig": min_eig, "valid": valid}


def as_density_matrix(rho, psd_tol: float = PSD_TOL) -> np.ndarray:
    rho = as_hermitian(rho, tol=1e-10)
    rep = check_density_matrix(rho, psd_tol)
    if not rep["valid"]:
        raise ValueError(f"not a density matrix: trace={rep['trace']:.6g}, min eig={rep['min_eig']:.3e}")
    return rho


def _check_same_shape(*mats):
    shapes = {m.shape for m in mats}
    if len(shapes) != 1:
        raise DimensionError(f"dimension mismatch: {sorted(shapes)}")


# --- norms --------------------------------------------------------------------

def trace_distance(rho1, rho2) -> float:
    """Trace norm of ``rho1 - rho2`` (sum of singular values, no factor 1/2)."""
    rho1, rho2 = np.asarray(rho1), np.asarray(rho2)
    _check_same_shape(rho1, rho2)
    return float(np.sum(np.linalg.svd(rho1 - rho2, compute_uv=False)))


def spectral_norm(a) -> float:
    a = np.asarray(a)
    if a.size == 0:
        return 0.0
    return float(np.linalg.norm(a, ord=2))


def l1_matrix_norm(c) -> float:
    """Entry-wise L1 norm, sum of |c_ij|."""
    return float(np.sum(np.abs(c)))


# --- spectral data ------------------------------------------------------------

@dataclass(frozen=True)
class SpectralData:
    """Eigenstructure of a Hermitian operator with merged degenerate levels.

    Attributes
    ----------
    hamiltonian : (d, d) array
    energies : (m,) ascending distinct eigenvalues
    projectors : (m, d, d) eigenprojectors, ordered like ``energies``
    eigvecs : (d, d) unitary whose columns are eigenvectors
    level_of : (d,) level index of each eigenvector column
    bohr : (k,) sorted distinct differences E_i - E_j (closed under negation)
    bohr_pairs : tuple of lists; ``bohr_pairs[k]`` holds the (m, n) level pairs
        with E_n - E_m = bohr[k]
    """

    hamiltonian: np.ndarray
    energies: np.ndarray
    projectors: np.ndarray
    eigvecs: np.ndarray
    level_of: np.ndarray
    bohr: np.ndarray
    bohr_pairs: tuple
    norm: float
    tol: float = field(default=0.0)

    @property
    def dim(self) -> int:
        return self.hamiltonian.shape[0]

    @property
    def ground_energy(self) -> float:
        return float(self.energies[0])

    @property
    def ground_projector(self) -> np.ndarray:
        return self.projectors[0]

    def level_indices(self, m: int) -> np.ndarray:
        return np.flatnonzero(self.level_of == m)

    def bohr_index(self, omega: float) -> int:
        k = int(np.argmin(np.abs(self.bohr - omega)))
        if abs(self.bohr[k] - omega) > max(self.tol, 1e-300):
            raise KeyError(f"{omega!r} is not a Bohr frequency")
        return k

    def to_eigenbasis(self, a) -> np.ndarray:
        v = self.eigvecs
        return v.conj().T @ a @ v

    def from_eigenbasis(self, a) -> np.ndarray:
        v = self.eigvecs
        return v @ a @ v.conj().T


def _cluster(values: np.ndarray, tol: float) -> list[list[int]]:
    """Group sorted ``values`` into runs whose consecutive gaps are < tol."""
    groups: list[list[int]] = []
    for i, v in enumerate(values):
        if groups and v - values[groups[-1][-1]] < tol:
            groups[-1].append(i)
        else:
            groups.append([i])
    return groups


def eigendecompose(h, rtol: float = DEGENERACY_RTOL) -> SpectralData:
    """Spectral decomposition of a Hermitian matrix.

    Eigenvalues closer than ``rtol * ||H||_inf`` are merged into one level.
    """
    h = as_hermitian(h)
    d = h.shape[0]
    evals, evecs = np.linalg.eigh(h)
    norm = float(np.max(np.abs(evals))) if d else 0.0
    tol = rtol * norm if norm > 0 else rtol

    groups = _cluster(evals, tol)
    energies = np.array([evals[g].mean() for g in groups])
    level_of = np.empty(d, dtype=int)
    projectors = np.empty((len(groups), d, d), dtype=complex)
    for m, g in enumerate(groups):
        level_of[g] = m
        vg = evecs[:, g]
        projectors[m] = vg @ vg.conj().T

    diffs = energies[None, :] - energies[:, None]  # diffs[m, n] = E_n - E_m
    flat = np.sort(diffs.ravel())
    bohr_groups = _cluster(flat, tol)
    bohr = np.array([flat[g].mean() for g in bohr_groups])
    # symmetrize so the set is exactly closed under negation
    bohr = 0.5 * (bohr - bohr[::-1])
    pairs: list[list[tuple[int, int]]] = [[] for _ in bohr]
    for m in range(len(energies)):
        for n in range(len(energies)):
            k = int(np.argmin(np.abs(bohr - diffs[m, n])))
            pairs[k].append((m, n))

    return SpectralData(
        hamiltonian=h, energies=energies, projectors=projectors, eigvecs=evecs,
        level_of=level_of, bohr=bohr, bohr_pairs=tuple(pairs), norm=norm, tol=tol,
    )


def jump_decompose(a, sd: SpectralData) -> np.ndarray:
    """Bohr-frequency components ``A(omega) = sum_{E_n - E_m = omega} P_m A P_n``.

    Returns an array of shape ``(len(sd.bohr), d, d)`` aligned with ``sd.bohr``.
    ``A(omega)`` lowers the energy by ``omega``: ``[H, A(omega)] = -omega A(omega)``.
    """
    a = np.asarray(a, dtype=complex)
    if a.shape != sd.hamiltonian.shape:
        raise DimensionError(f"operator shape {a.shape} does not match system dim {sd.dim}")
    a_eig = sd.to_eigenbasis(a)
    lv = sd.level_of
    out = np.zeros((len(sd.bohr),) + a.shape, dtype=complex)
    for k, pairs in enumerate(sd.bohr_pairs):
        mask = np.zeros(a.shape, dtype=bool)
        for m, n in pairs:
            mask |= np.outer(lv == m, lv == n)
        out[k] = sd.from_eigenbasis(np.where(mask, a_eig, 0))
    return out


# --- operator sets ------------------------------------------------------------

@dataclass(frozen=True)
class OperatorSet:
    kind: str
    operators: np.ndarray  # (N, d, d)
    labels: tuple
    scales: np.ndarray  # spectral norm of each operator before normalization

    @property
    def size(self) -> int:
        return self.operators.shape[0]

    @property
    def dim(self) -> int:
        return self.operators.shape[1]

    def __len__(self):
        return self.size

    def __iter__(self):
        return iter(self.operators)


def embed(op, site: int, n: int) -> np.ndarray:
    """Place a single-qubit operator on ``site`` (0-based) of an ``n``-qubit register."""
    factors = [PAULI["I"]] * n
    factors[site] = np.asarray(op, dtype=complex)
    return reduce(np.kron, factors)


def pauli_string(labels: str) -> np.ndarray:
    return reduce(np.kron, [PAULI[c] for c in labels])


def annihilation_ops(n: int) -> list[np.ndarray]:
    """Jordan-Wigner ``c_j = (prod_{k<j} Z_k) (X_j + i Y_j) / 2``."""
    lower = 0.5 * (PAULI["X"] + 1j * PAULI["Y"])
    ops = []
    for j in range(n):
        factors = [PAULI["Z"]] * j + [lower] + [PAULI["I"]] * (n - j - 1)
        ops.append(reduce(np.kron, factors))
    return ops


def build_operator_set(kind: str, n: int, custom=None) -> OperatorSet:
    """Coupling-operator set for ``n`` qubits or fermion modes.

    ``kind='qubit'`` gives the 3n single-site Paulis (X_1, Y_1, Z_1, X_2, ...).
    ``kind='fermion'`` gives the n^2 Hermitian one-body operators
    c_j^dag c_j, c_i^dag c_j + h.c. and i(c_i^dag c_j - h.c.) for i < j.
    ``kind='custom'`` normalizes the Hermitian matrices passed in ``custom``.
    Every operator is rescaled to unit spectral norm; the original norms are
    kept in ``scales``.
    """
    if kind not in ("qubit", "fermion", "custom"):
        raise ValueError(f"unsupported operator-set kind {kind!r}")
    if kind != "custom" and n < 1:
        raise ValueError("need at least one qubit / mode")

    labels: list[str] = []
    ops: list[np.ndarray] = []
    if kind == "qubit":
        for j in range(n):
            for p in "XYZ":
                ops.append(embed(PAULI[p], j, n))
                labels.append(f"{p}{j + 1}")
    elif kind == "fermion":
        c = annihilation_ops(n)
        cd = [x.conj().T for x in c]
        for j in range(n):
            ops.append(cd[j] @ c[j])
            labels.append(f"n{j + 1}")
        for i in range(n):
            for j in range(i + 1, n):
                hop = cd[i] @ c[j]
                ops.append(hop + hop.conj().T)
                labels.append(f"hopx{i + 1}{j + 1}")
                ops.append(1j * (hop - hop.conj().T))
                labels.append(f"hopy{i + 1}{j + 1}")
    else:
        if custom is None or len(custom) == 0:
            raise ValueError("custom operator set needs at least one operator")
        for k, a in enumerate(custom):
            ops.append(as_hermitian(a))
            labels.append(f"A{k + 1}")

    scales = np.array([spectral_norm(a) for a in ops])
    if np.any(scales == 0):
        raise ValueError("zero operator in coupling set")
    normed = np.array([a / s for a, s in zip(ops, scales)])
    return OperatorSet(kind=kind, operators=normed, labels=tuple(labels), scales=scales)


# --- model Hamiltonians -------------------------------------------------------

def heisenberg(n: int, j: float = 1.0, periodic: bool = False) -> np.ndarray:
    """Nearest-neighbour XXX chain ``J sum (X X + Y Y + Z Z)``."""
    d = 2 ** n
    h = np.zeros((d, d), dtype=complex)
    bonds = [(i, i + 1) for i in range(n - 1)]
    if periodic and n > 2:
        bonds.append((n - 1, 0))
    for i, k in bonds:
        for p in "XYZ":
            h += j * embed(PAULI[p], i, n) @ embed(PAULI[p], k, n)
    return h


def transverse_ising(n: int, j: float = 1.0, hx: float = 0.7, hz: float = 0.3) -> np.ndarray:
    """Open Ising chain with transverse and longitudinal fields (generically nondegenerate)."""
    d = 2 ** n
    h = np.zeros((d, d), dtype=complex)
    for i in range(n - 1):
        h += j * embed(PAULI["Z"], i, n) @ embed(PAULI["Z"], i + 1, n)
    for i in range(n):
        h += hx * embed(PAULI["X"], i, n) + hz * (1 + 0.37 * i) * embed(PAULI["Z"], i, n)
    return h


PRESETS = {
    "qubit-z": lambda: (PAULI["Z"].copy(), 1),
    "heisenberg-2": lambda: (heisenberg(2), 2),
    "heisenberg-3": lambda: (heisenberg(3), 3),
    "ising-2": lambda: (transverse_ising(2), 2),
    "ising-3": lambda: (transverse_ising(3), 3),
}


def preset_hamiltonian(name: str):
    """Return ``(H, n_qubits)`` for a named preset."""
    try:
        return PRESETS[name]()
    except KeyError:
        raise ValueError(f"unknown Hamiltonian preset {name!r}; choose from {sorted(PRESETS)}") from None


# --- random helpers -----------------------------------------------------------

def random_hermitian(d: int, rng: np.random.Generator, scale: float = 1.0) -> np.ndarray:
    g = rng.normal(size=(d, d)) + 1j * rng.normal(size=(d, d))
    return scale * 0.5 * (g + g.conj().T)


def random_density_matrix(d: int, rng: np.random.Generator, rank: int | None = None) -> np.ndarray:
    g = rng.normal(size=(d, rank or d)) + 1j * rng.normal(size=(d, rank or d))
    rho = g @ g.conj().T
    return rho / np.trace(rho).real


def maximally_mixed(d: int) -> np.ndarray:
    return np.eye(d, dtype=complex) / d


def ket_to_dm(psi) -> np.ndarray:
    psi = np.asarray(psi, dtype=complex).ravel()
    psi = psi / np.linalg.norm(psi)
    return np.outer(psi, psi.conj())


# --- serialization ------------------------------------------------------------

def matrix_to_document(a) -> dict:
    """``{"dim": d, "rows": [[[re, im], ...], ...]}``"""
    a = np.asarray(a, dtype=complex)
    return {
        "dim": int(a.shape[0]),
        "rows": [[[float(z.real), float(z.imag)] for z in row] for row in a],
    }


def matrix_from_document(doc: dict) -> np.ndarray:
    rows = doc["rows"]
    a = np.array([[complex(re, im) for re, im in row] for row in rows], dtype=complex)
    if a.shape != (doc["dim"], doc["dim"]):
        raise DimensionError(f"document says dim {doc['dim']} but rows give {a.shape}")
    return a
