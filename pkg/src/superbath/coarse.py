"""
Coarse-grained Hamiltonians and the energy-transfer decomposition.

``H_delta(x)`` snaps every eigenvalue of H to the nearest center ``x + 2 j delta``
(bins are half-open, ``(c - delta, c + delta]``, so edge values go to the lower
bin). Energy transfer to the bath over a time t is compared between the exact
Redfield expression for a state rho_s and its coarse-grained counterpart
evaluated on the components of a delta-stationary state.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .channels import DeltaStationaryState
from .core import SpectralData, jump_decompose
from .dynamics import _bath_on_bohr, _operators, jump_table
from .spectral import BathCharacteristics, MatrixSpectralDensity, as_matrix_density, bose

EDGE_SNAP = 1e-12


@dataclass(frozen=True)
class CoarseGrid:
    delta: float
    x: float
    bins: np.ndarray  # bin index j of each level of sd
    centers: np.ndarray  # x + 2 j delta per level

    @property
    def signature(self) -> tuple:
        return tuple(int(j) for j in self.bins)


def coarse_grid(sd: SpectralData, delta: float, x: float = 0.0) -> CoarseGrid:
    if delta <= 0:
        raise ValueError("delta must be positive")
    v = (sd.energies - x - delta) / (2 * delta)
    r = np.round(v)
    v = np.where(np.abs(v - r) < EDGE_SNAP * np.maximum(1.0, np.abs(v)), r, v)
    j = np.ceil(v).astype(int)
    return CoarseGrid(delta, float(x), j, x + 2 * delta * j)


def coarse_spectral_data(sd: SpectralData, delta: float, x: float = 0.0) -> SpectralData:
    """Spectral data of H_delta(x), reusing the eigenvectors of H."""
    grid = coarse_grid(sd, delta, x)
    uniq, inverse = np.unique(grid.bins, return_inverse=True)
    energies = x + 2 * delta * uniq.astype(float)
    level_of = inverse[sd.level_of]
    projectors = np.array([sum(sd.projectors[m] for m in np.flatnonzero(inverse == k)) for k in range(len(uniq))])
    h = sd.from_eigenbasis(np.diag(energies[level_of]).astype(complex))
    # Bohr frequencies are exact multiples of 2 delta: group by integer differences
    dj = uniq[None, :] - uniq[:, None]  # dj[m, n] = j_n - j_m
    steps = np.unique(dj)
    bohr = 2 * delta * steps.astype(float)
    pairs = tuple([(m, n) for m in range(len(uniq)) for n in range(len(uniq)) if dj[m, n] == s] for s in steps)
    return SpectralData(
        hamiltonian=h, energies=energies, projectors=projectors, eigvecs=sd.eigvecs, level_of=level_of,
        bohr=bohr, bohr_pairs=pairs, norm=float(np.max(np.abs(energies))), tol=1e-9 * delta,
    )


def coarse_hamiltonian(sd: SpectralData, delta: float, x: float = 0.0) -> np.ndarray:
    """``H_delta(x) = sum_j (x + 2 j delta) F_delta(x + 2 j delta)``."""
    return coarse_spectral_data(sd, delta, x).hamiltonian


# --- rates --------------------------------------------------------------------


def rate_matrix(J, w: float, T: float) -> np.ndarray:
    """Closed-form ``gamma(w)`` for a matrix density (detailed-balance formula)."""
    J = as_matrix_density(J)
    out = np.zeros((J.dim, J.dim), dtype=complex)
    for f, m in J.components:
        m = np.asarray(m, dtype=complex)
        if w > 0:
            out += 2 * np.pi * float(f(w)) * (1 + float(bose(w, T))) * m.conj()
        elif w < 0:
            if T > 0:
                out += 2 * np.pi * float(f(-w)) * float(bose(-w, T)) * m
        elif T > 0:
            out += 2 * np.pi * T * f.slope_at_zero() * m
    return out


# --- energy transfer ----------------------------------------------------------------


def _phi(diff, t):
    """``int_0^t e^{i diff s} ds``."""
    diff = np.asarray(diff, dtype=float)
    small = np.abs(diff * t) < 1e-8
    with np.errstate(divide="ignore", invalid="ignore"):
        val = np.expm1(1j * diff * t) / (1j * diff)
    return np.where(small, t + 0.5j * diff * t * t, val)


def transfer_kernel(sd: SpectralData, ops, bath: BathCharacteristics, rho) -> np.ndarray:
    """``T[k, k'] = -w_{k'} sum_ab Gamma_ab(w_k) Tr(A_a(w_k')^dag A_b(w_k) rho)``.

    ``Tr(H K(s) rho) = sum_{k,k'} e^{i(w_k' - w_k)s} T[k, k'] + c.c.``
    """
    A = jump_table(sd, ops)  # (N, K, d, d)
    Gam = _bath_on_bohr(sd, bath)  # (K, N, N)
    rho = np.asarray(rho, dtype=complex)
    # Y[a, k', b, k] = Tr(A_a(k')^dag A_b(k) rho)
    arho = np.einsum("bkij,jl->bkil", A, rho)
    Y = np.einsum("apij,bkij->apbk", A.conj(), arho, optimize=True)
    Tm = np.einsum("kab,apbk->kp", Gam, Y, optimize=True)
    return -sd.bohr[None, :] * Tm


def energy_transfer_exact(bath: BathCharacteristics, sd: SpectralData, ops, t: float, rho) -> float:
    """``D_R(t, rho) = -int_0^t Tr(H K(s) rho) ds`` with the time integral done analytically."""
    if t < 0:
        raise ValueError("t must be non-negative")
    Tm = transfer_kernel(sd, ops, bath, rho)
    w = sd.bohr
    phi = _phi(w[None, :] - w[:, None], t)  # diff = w_k' - w_k
    return float(-2 * np.real(np.sum(phi * Tm)))


@dataclass
class CoarseTransfer:
    D: float
    D_plus: float
    D_minus: float
    cross_residual: float  # largest |Tr(A(w) rho' A(w')^dag)| with w != w'
    terms: list  # per coarse frequency (w, contribution)


def coarse_transfer(J, T: float, sd: SpectralData, ops, delta: float, t: float,
                    dss: DeltaStationaryState) -> CoarseTransfer:
    """Coarse-grained energy transfer ``D_{R,delta}`` and its sign split.

    ``D = t int dx p(x) sum_{w in Omega_delta} w sum_ab gamma_ab(w) Tr(A_b,delta(w) rho'(x) A_a,delta(w)^dag)``;
    ``D_plus`` collects ``w > 0`` and ``D_minus`` the ``w < 0`` terms.
    """
    if abs(dss.delta - delta) > 1e-12 * delta:
        raise ValueError("delta-stationary state was built with a different delta")
    if dss.sd is not sd and not np.allclose(dss.sd.energies, sd.energies):
        raise ValueError("delta-stationary state belongs to a different Hamiltonian")
    ops_arr = _operators(ops)
    # the partition of levels into bins only changes at finitely many x
    sigs = [coarse_grid(sd, delta, float(x)).signature for x in dss.x]
    groups: dict[tuple, list[int]] = {}
    for k, s in enumerate(sigs):
        groups.setdefault(s, []).append(k)

    rates: dict[float, np.ndarray] = {}
    totals: dict[float, float] = {}
    cross = 0.0
    for s, idx in groups.items():
        x0 = float(dss.x[idx[0]])
        csd = coarse_spectral_data(sd, delta, x0)
        rho_agg = csd.from_eigenbasis(dss.aggregate_eig(np.array(idx)))
        A = np.array([jump_decompose(a, csd) for a in ops_arr])  # (N, K, d, d)
        arho = np.einsum("akij,jl->akil", A, rho_agg)
        # M[b, k, a, k'] = Tr(A_b(k) rho A_a(k')^dag)
        M = np.einsum("bkil,apil->bkap", arho, A.conj(), optimize=True)
        nk = len(csd.bohr)
        for k in range(nk):
            for p in range(nk):
                if k != p:
                    cross = max(cross, float(np.max(np.abs(M[:, k, :, p]))))
        for k, w in enumerate(csd.bohr):
            w = float(w)
            if w == 0:
                continue
            key = round(w / (2 * delta))
            if key not in rates:
                rates[key] = rate_matrix(J, w, T)
            g = rates[key]
            val = w * float(np.real(np.einsum("ab,ba->", g, M[:, k, :, k])))
            totals[key] = totals.get(key, 0.0) + val
    terms = sorted((2 * delta * k, t * v) for k, v in totals.items())
    d_plus = sum(v for w, v in terms if w > 0)
    d_minus = sum(v for w, v in terms if w < 0)
    return CoarseTransfer(D=d_plus + d_minus, D_plus=d_plus, D_minus=d_minus, cross_residual=cross, terms=terms)


def lemma4_bound(delta: float, t: float, tau_R: float, tau_B: float, h: float) -> float:
    """``delta (t/tau_R + 2 (t/tau_R + tau_B/tau_R) h t)``."""
    return float(delta * (t / tau_R + 2 * (t / tau_R + tau_B / tau_R) * h * t))


def lemma5_bound(n_ops: int, t: float, T: float, tau_R: float) -> float:
    """Lower bound ``-N t T / (2 e tau_R)`` on the energy gained from the bath."""
    return float(-n_ops * t * T / (2 * np.e * tau_R))
