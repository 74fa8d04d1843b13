"""
Redfield and Lindblad generators, propagation and dissipated power.

Superoperators are dense ``d^2 x d^2`` matrices acting on column-stacked
density matrices, ``vec(A X B) = (B^T kron A) vec(X)`` (``order='F'``).
Generators returned here contain only the bath part; add ``hamiltonian_part``
for the full Schroedinger-picture Liouvillian.
"""
from __future__ import annotations

import warnings
from dataclasses import dataclass, field

import numpy as np
from scipy import integrate, linalg, optimize, special

from .core import OperatorSet, SpectralData, jump_decompose, spectral_norm
from .spectral import BathCharacteristics, ExpCutoffDensity, ScalarSpectralDensity, rates_and_shifts

PSD_FLAG_TOL = 1e-9


class PositivityWarning(UserWarning):
    """A propagated state has an eigenvalue below -1e-9."""


def vec(x) -> np.ndarray:
    return np.asarray(x, dtype=complex).reshape(-1, order="F")


def unvec(v, d: int | None = None) -> np.ndarray:
    v = np.asarray(v)
    d = d or int(round(np.sqrt(v.size)))
    return v.reshape(d, d, order="F")


def hamiltonian_part(h) -> np.ndarray:
    """Superoperator of ``-i[H, .]``."""
    h = np.asarray(h, dtype=complex)
    eye = np.eye(h.shape[0])
    return -1j * (np.kron(eye, h) - np.kron(h.T, eye))


def apply(superop, x) -> np.ndarray:
    x = np.asarray(x, dtype=complex)
    return unvec(superop @ vec(x), x.shape[0])


def _term(lam, b) -> np.ndarray:
    """Superoperator of ``X -> lam X b^dag - b^dag lam X`` plus its Hermitian conjugate."""
    d = lam.shape[0]
    eye = np.eye(d)
    bl = b.conj().T @ lam
    return (np.kron(b.conj(), lam) + np.kron(lam.conj(), b)
            - np.kron(eye, bl) - np.kron(bl.conj(), eye))


def _operators(ops) -> np.ndarray:
    if isinstance(ops, OperatorSet):
        return ops.operators
    return np.asarray(ops, dtype=complex)


def jump_table(sd: SpectralData, ops) -> np.ndarray:
    """``A_alpha(omega)`` for every operator, shape ``(N, n_bohr, d, d)``."""
    return np.array([jump_decompose(a, sd) for a in _operators(ops)])


def _bath_on_bohr(sd: SpectralData, bath: BathCharacteristics) -> np.ndarray:
    """Gamma tabulated on sd.bohr (shape (n_bohr, N, N))."""
    try:
        idx = [bath.index(w) for w in sd.bohr]
    except KeyError as exc:
        raise KeyError(f"bath is missing Gamma at a Bohr frequency: {exc}") from None
    return bath.Gamma[idx]


def redfield_generator(sd: SpectralData, ops, bath: BathCharacteristics, t: float = 0.0,
                       secular: bool = False) -> np.ndarray:
    """Bath part of the Redfield generator K(t).

    ``K(t) rho = sum_{w,w'} sum_{ab} e^{i(w'-w)t} Gamma_ab(w)
    (A_b(w) rho A_a(w')^dag - A_a(w')^dag A_b(w) rho) + h.c.``

    ``secular=True`` keeps only ``w = w'``, which is the Lindblad dissipator
    together with its Lamb-shift commutator.
    """
    A = jump_table(sd, ops)
    n_ops = A.shape[0]
    if bath.dim != n_ops:
        raise ValueError(f"bath has {bath.dim} channels but {n_ops} coupling operators were given")
    Gam = _bath_on_bohr(sd, bath)
    d = sd.dim
    out = np.zeros((d * d, d * d), dtype=complex)
    if secular:
        for k in range(len(sd.bohr)):
            lam = np.einsum("ab,bij->aij", Gam[k], A[:, k])
            for a in range(n_ops):
                if np.any(A[a, k]) and np.any(lam[a]):
                    out += _term(lam[a], A[a, k])
        return out
    phases = np.exp(-1j * sd.bohr * t)  # A(t) = sum_w e^{-iwt} A(w)
    a_t = np.einsum("k,akij->aij", phases, A)
    lam = np.einsum("k,kab,bkij->aij", phases, Gam, A)
    for a in range(n_ops):
        out += _term(lam[a], a_t[a])
    return out


def lindblad_generator(sd: SpectralData, ops, bath: BathCharacteristics):
    """Lamb-shift Hamiltonian and Lindblad dissipator.

    Returns ``(H_LS, L)`` with ``H_LS = sum_w sum_ab S_ab(w) A_a(w)^dag A_b(w)`` and
    ``L rho = 1/2 sum_w sum_ab gamma_ab(w)(A_b(w) rho A_a(w)^dag - A_a(w)^dag A_b(w) rho) + h.c.``
    """
    A = jump_table(sd, ops)
    Gam = _bath_on_bohr(sd, bath)
    gam = Gam + np.conj(np.swapaxes(Gam, -1, -2))
    S = (Gam - np.conj(np.swapaxes(Gam, -1, -2))) / 2j
    d = sd.dim
    L = np.zeros((d * d, d * d), dtype=complex)
    h_ls = np.zeros((d, d), dtype=complex)
    for k in range(len(sd.bohr)):
        lam = np.einsum("ab,bij->aij", 0.5 * gam[k], A[:, k])
        h_ls += np.einsum("ab,aji,bjk->ik", S[k], A[:, k].conj(), A[:, k])
        for a in range(A.shape[0]):
            if np.any(A[a, k]) and np.any(lam[a]):
                L += _term(lam[a], A[a, k])
    return 0.5 * (h_ls + h_ls.conj().T), L


def liouvillian(sd: SpectralData, ops, bath: BathCharacteristics, kind: str = "redfield") -> np.ndarray:
    """Full generator ``-i[H, .] + K(0)`` (redfield) or ``-i[H + H_LS, .] + L`` (lindblad)."""
    if kind == "redfield":
        return hamiltonian_part(sd.hamiltonian) + redfield_generator(sd, ops, bath, 0.0)
    if kind == "lindblad":
        h_ls, L = lindblad_generator(sd, ops, bath)
        return hamiltonian_part(sd.hamiltonian + h_ls) + L
    raise ValueError(f"unknown generator kind {kind!r}")


def trace_annihilation_error(superop) -> float:
    d = int(round(np.sqrt(superop.shape[0])))
    return float(np.max(np.abs(vec(np.eye(d)).conj() @ superop)))


def min_eigenvalue(rho) -> float:
    rho = np.asarray(rho)
    return float(np.linalg.eigvalsh(0.5 * (rho + rho.conj().T))[0])


def project_psd(rho) -> np.ndarray:
    """Clip negative eigenvalues and renormalize the trace."""
    w, v = np.linalg.eigh(0.5 * (rho + rho.conj().T))
    w = np.clip(w, 0, None)
    out = (v * w) @ v.conj().T
    return out / np.trace(out).real


def propagate(generator, rho0, t: float, method: str = "expm", project: bool = False,
              rtol: float = 1e-10, atol: float = 1e-12) -> np.ndarray:
    """Evolve ``rho0`` for time ``t`` under a full Liouvillian.

    ``method='expm'`` exponentiates the dense generator (scaling and squaring);
    ``method='rk'`` integrates with an adaptive 8th-order Runge-Kutta scheme.
    States with an eigenvalue below -1e-9 raise a ``PositivityWarning`` and are
    projected back to the PSD cone only when ``project`` is set.
    """
    rho0 = np.asarray(rho0, dtype=complex)
    d = rho0.shape[0]
    if t == 0:
        return rho0.copy()
    if method == "expm":
        v = linalg.expm(generator * t) @ vec(rho0)
    elif method == "rk":
        sol = integrate.solve_ivp(lambda _, y: generator @ y, (0.0, t), vec(rho0), method="DOP853",
                                  rtol=rtol, atol=atol)
        if not sol.success:
            raise RuntimeError(f"adaptive integration failed: {sol.message}")
        v = sol.y[:, -1]
    else:
        raise ValueError(f"unknown propagation method {method!r}")
    rho = unvec(v, d)
    rho = 0.5 * (rho + rho.conj().T)
    lo = min_eigenvalue(rho)
    if lo < -PSD_FLAG_TOL:
        warnings.warn(f"propagated state has eigenvalue {lo:.3e}", PositivityWarning, stacklevel=2)
        if project:
            rho = project_psd(rho)
    return rho


def propagation_trace(generator, h, rho0, times, ground_projector=None):
    """Rows ``(t, energy, ground_population, trace, min_eig)`` on a time grid."""
    h = np.asarray(h, dtype=complex)
    rows = []
    rho0 = np.asarray(rho0, dtype=complex)
    for t in np.asarray(times, dtype=float):
        with warnings.catch_warnings():
            warnings.simplefilter("ignore", PositivityWarning)
            rho = propagate(generator, rho0, float(t))
        gp = float(np.real(np.trace(ground_projector @ rho))) if ground_projector is not None else np.nan
        rows.append((float(t), float(np.real(np.trace(h @ rho))), gp, float(np.real(np.trace(rho))),
                     min_eigenvalue(rho)))
    return rows


# --- error bounds --------------------------------------------------------------------


def lemma2_domain(tau_R: float, tau_B: float) -> float:
    """Largest admissible time ``tau_R ln(1 + tau_R / (2 tau_B))``."""
    return float(tau_R * np.log1p(tau_R / (2 * tau_B)))


def lemma2_bound(t: float, tau_R: float, tau_B: float) -> float:
    """Trace-norm bound on the distance between exact and Redfield evolution."""
    if t < 0 or tau_R <= 0 or tau_B <= 0:
        raise ValueError("need t >= 0 and positive timescales")
    if t > lemma2_domain(tau_R, tau_B) * (1 + 1e-12):
        raise ValueError("t exceeds tau_R ln(1 + tau_R / 2 tau_B)")
    x = t / tau_R
    main = 2 * np.expm1(x) * tau_B / tau_R
    if t <= tau_B:
        eps_l = 2 * np.expm1(x)
    else:
        r = tau_B / tau_R
        eps_l = 2 * np.exp(x) * (-np.expm1(-r) + r * np.log(t / tau_B))
    return float(main + eps_l)


def corollary2_bound(t: float, tau_R: float, tau_B: float) -> float:
    """``4 e sqrt(tau_B t) / tau_R`` for ``tau_B < t <= tau_R``."""
    if not (tau_B < t <= tau_R):
        raise ValueError("corollary bound needs tau_B < t <= tau_R")
    return float(4 * np.e * np.sqrt(tau_B * t) / tau_R)


# --- exact few-mode reference -----------------------------------------------------------


@dataclass(frozen=True)
class StarBathSpec:
    """Discrete bosonic modes coupled to one system operator.

    ``H_int = A kron sum_k u_k (b_k + b_k^dag)``, so the discretized density is
    ``sum_k u_k^2 delta(w - w_k)``.
    """

    omegas: np.ndarray
    couplings: np.ndarray
    levels: int = 4  # Fock states kept per mode
    T: float = 0.0

    @property
    def n_modes(self) -> int:
        return len(self.omegas)

    def with_levels(self, levels: int) -> "StarBathSpec":
        return StarBathSpec(self.omegas, self.couplings, levels, self.T)

    def scaled(self, c: float) -> "StarBathSpec":
        """Density scaled by c (couplings by sqrt(c))."""
        return StarBathSpec(self.omegas, np.sqrt(c) * self.couplings, self.levels, self.T)


def _gauss_from_measure(x, w, n):
    """n-point Gauss rule for the discrete measure sum w_i delta(x - x_i) (Stieltjes)."""
    x, w = np.asarray(x, float), np.asarray(w, float)
    alpha, beta = np.zeros(n), np.zeros(n)
    p_prev = np.zeros_like(x)
    p = np.ones_like(x)
    norm_prev = 1.0
    for k in range(n):
        norm = np.sum(w * p * p)
        alpha[k] = np.sum(w * x * p * p) / norm
        if k > 0:
            beta[k] = norm / norm_prev
        p_next = (x - alpha[k]) * p - (beta[k] * p_prev if k > 0 else 0.0)
        p_prev, p, norm_prev = p, p_next, norm
    jac = np.diag(alpha) + np.diag(np.sqrt(beta[1:]), 1) + np.diag(np.sqrt(beta[1:]), -1)
    nodes, vecs = np.linalg.eigh(jac)
    weights = np.sum(w) * vecs[0] ** 2
    return nodes, weights


def star_from_density(f: ScalarSpectralDensity, n_modes: int = 3, levels: int = 4, T: float = 0.0) -> StarBathSpec:
    """Discretize a continuum density into ``n_modes`` modes matching its low moments.

    The exponential-cutoff family uses generalized Gauss-Laguerre nodes, which
    match the moments of ``w^s e^{-w/W}`` on the whole half line; other densities
    use a Gauss rule built from a fine tabulation.
    """
    if isinstance(f, ExpCutoffDensity):
        x, wts = special.roots_genlaguerre(n_modes, f.s)
        omegas = f.cutoff * x
        mass = f.scale * f.cutoff ** 2 * wts
    else:
        top = f.upper if np.isfinite(f.upper) else 60 * f.scale_frequency
        grid = np.linspace(0, top, 20001)[1:]
        dens = f(grid) * (grid[1] - grid[0])
        omegas, mass = _gauss_from_measure(grid, dens, n_modes)
    return StarBathSpec(np.asarray(omegas, float), np.sqrt(np.asarray(mass, float)), levels, T)


def _mode_ops(levels: int):
    b = np.diag(np.sqrt(np.arange(1, levels)), 1).astype(complex)
    return b, b.conj().T @ b


def _thermal_mode(w, levels, T):
    if T == 0.0:
        p = np.zeros(levels)
        p[0] = 1.0
    else:
        p = np.exp(-w * np.arange(levels) / T)
        p /= p.sum()
    return np.diag(p).astype(complex)


def _joint_hamiltonian(h, couplings, levels):
    """System plus star modes; couplings is a list of (A, StarBathSpec)."""
    d = h.shape[0]
    n_modes_total = sum(s.n_modes for _, s in couplings)
    dims = [d] + [levels] * n_modes_total
    dim = int(np.prod(dims))
    b, num = _mode_ops(levels)
    x = b + b.conj().T

    def embed(op_sys, mode, op_mode):
        mats = [op_sys] + [np.eye(levels)] * n_modes_total
        if mode is not None:
            mats[1 + mode] = op_mode
        out = mats[0]
        for m in mats[1:]:
            out = np.kron(out, m)
        return out

    H = embed(h, None, None)
    eye_s = np.eye(d)
    m = 0
    for a, star in couplings:
        for wk, uk in zip(star.omegas, star.couplings):
            H = H + wk * embed(eye_s, m, num) + uk * embed(np.asarray(a, complex), m, x)
            m += 1
    return H, dims, dim


@dataclass
class ReferenceResult:
    rho: np.ndarray
    levels: int
    converged: bool
    change: float
    history: list = field(default_factory=list)


def _exact_once(h, couplings, rho0, times, levels):
    H, dims, dim = _joint_hamiltonian(h, couplings, levels)
    env = None
    for _, star in couplings:
        for wk in star.omegas:
            m = _thermal_mode(wk, levels, star.T)
            env = m if env is None else np.kron(env, m)
    d = h.shape[0]
    rho_tot = np.kron(rho0, env)
    evals, evecs = np.linalg.eigh(H)
    r = evecs.conj().T @ rho_tot @ evecs
    out = []
    env_dim = dim // d
    for t in times:
        ph = np.exp(-1j * evals * t)
        rt = evecs @ (ph[:, None] * r * ph.conj()[None, :]) @ evecs.conj().T
        rs = np.trace(rt.reshape(d, env_dim, d, env_dim), axis1=1, axis2=3)
        out.append(rs)
    return out


def exact_reference(h, couplings, rho0, t, levels_start: int | None = None, tol: float = 1e-4,
                    max_dim: int = 4096):
    """Reduced system state under exact system + star-bath unitary evolution.

    ``couplings`` is a list of ``(A, StarBathSpec)``; a single pair is accepted.
    The Fock cutoff is doubled until the reduced state changes by less than
    ``tol`` in trace norm or the joint dimension would exceed ``max_dim``.
    ``t`` may be a scalar or a sequence; a list of results is returned for a
    sequence.
    """
    if isinstance(couplings, tuple) and len(couplings) == 2 and isinstance(couplings[1], StarBathSpec):
        couplings = [couplings]
    h = np.asarray(h, dtype=complex)
    rho0 = np.asarray(rho0, dtype=complex)
    scalar = np.ndim(t) == 0
    times = [float(t)] if scalar else [float(x) for x in t]
    n_modes = sum(s.n_modes for _, s in couplings)
    levels = levels_start or couplings[0][1].levels
    if h.shape[0] * levels ** n_modes > max_dim:
        raise ValueError("joint Hilbert space exceeds the dimension cap")
    history = []
    prev = _exact_once(h, couplings, rho0, times, levels)
    converged, change = False, np.inf
    while h.shape[0] * (2 * levels) ** n_modes <= max_dim:
        levels *= 2
        cur = _exact_once(h, couplings, rho0, times, levels)
        change = max(np.sum(np.linalg.svd(a - b, compute_uv=False)) for a, b in zip(cur, prev))
        history.append((levels, change))
        prev = cur
        if change < tol:
            converged = True
            break
    results = [ReferenceResult(r, levels, converged, change, history) for r in prev]
    return results[0] if scalar else results


# --- dissipated power -------------------------------------------------------------------


def power_operator(sd: SpectralData, ops, bath: BathCharacteristics) -> np.ndarray:
    """Hermitian ``F = -K(0)^dag(H)`` so that ``P_K(rho) = Tr(F rho)``."""
    K = redfield_generator(sd, ops, bath, 0.0)
    f = -unvec(K.conj().T @ vec(sd.hamiltonian), sd.dim)
    return 0.5 * (f + f.conj().T)


def dissipation_power(kind: str, sd: SpectralData, ops, bath: BathCharacteristics, rho) -> float:
    """Instantaneous dissipated power.

    ``kind='K'``: ``-Tr[H K(0) rho]`` with the Redfield generator.
    ``kind='L'``: ``-Tr[H L rho] = sum_w w sum_ab gamma_ab(w) Tr(A_a(w)^dag A_b(w) rho)``.
    """
    rho = np.asarray(rho, dtype=complex)
    if kind == "K":
        K = redfield_generator(sd, ops, bath, 0.0)
        return float(-np.real(vec(sd.hamiltonian).conj() @ (K @ vec(rho))))
    if kind == "L":
        A = jump_table(sd, ops)
        Gam = _bath_on_bohr(sd, bath)
        gam = Gam + np.conj(np.swapaxes(Gam, -1, -2))
        total = 0.0
        for k, w in enumerate(sd.bohr):
            if w == 0:
                continue
            Ak = A[:, k]
            x = np.einsum("aji,bjk,ki->ab", Ak.conj(), Ak, rho)  # Tr(A_a^dag A_b rho)
            total += w * np.real(np.sum(gam[k] * x))
        return float(total)
    raise ValueError(f"unknown power kind {kind!r}")


@dataclass
class MinimumPowerResult:
    value: float
    T_argmin: float
    per_T: list
    mu: float


def _min_power_fixed(F, pg):
    """min Tr(F rho) over rho >= 0, Tr rho = 1, Tr(pg rho) <= 1/2 via the exact dual.

    The dual ``max_{mu >= 0} lambda_min(F + mu pg) - mu/2`` is concave with
    supergradient ``<v|pg|v> - 1/2`` (v the lowest eigenvector), so the optimum
    is located by bisection on the sign of the supergradient.
    """

    def dual_and_slope(mu):
        w, v = np.linalg.eigh(F + mu * pg)
        v0 = v[:, 0]
        return w[0] - 0.5 * mu, float(np.real(v0.conj() @ pg @ v0)) - 0.5

    val0, g0 = dual_and_slope(0.0)
    if g0 <= 0:
        return float(val0), 0.0
    lo, hi = 0.0, 4 * max(spectral_norm(F), 1e-12)
    while dual_and_slope(hi)[1] > 0:
        lo, hi = hi, 2 * hi
        if hi > 1e300:
            raise ArithmeticError("minimum-power dual did not converge")
    for _ in range(200):
        mid = 0.5 * (lo + hi)
        if mid in (lo, hi):
            break
        if dual_and_slope(mid)[1] > 0:
            lo = mid
        else:
            hi = mid
    v_lo, v_hi = dual_and_slope(lo)[0], dual_and_slope(hi)[0]
    return (float(v_lo), lo) if v_lo >= v_hi else (float(v_hi), hi)


def minimum_power(sd: SpectralData, ops, J, beta: float | None = None, T_grid=None,
                  bath_factory=None) -> MinimumPowerResult:
    """Minimum of ``P_K(T, J; rho)`` over states with ground overlap <= 1/2 and T in the grid.

    ``T_grid`` defaults to 8 points on (0, 1/beta]. ``T = 0.0`` is allowed and
    means the zero-temperature limit.
    """
    if T_grid is None:
        if beta is None:
            raise ValueError("give beta or an explicit temperature grid")
        T_grid = np.linspace(1 / beta / 8, 1 / beta, 8)
    T_grid = [float(T) for T in T_grid]
    if beta is not None and any(T > 1 / beta * (1 + 1e-12) for T in T_grid):
        raise ValueError("temperature grid exceeds the supremum 1/beta")
    pg = sd.ground_projector
    per_T = []
    best = None
    for T in T_grid:
        bath = bath_factory(T) if bath_factory else rates_and_shifts(T, J, sd.bohr, with_timescales=False)
        F = power_operator(sd, ops, bath)
        val, mu = _min_power_fixed(F, pg)
        per_T.append((T, val))
        if best is None or val < best[1]:
            best = (T, val, mu)
    return MinimumPowerResult(value=best[1], T_argmin=best[0], per_T=per_T, mu=best[2])


def thermal_beta(sd: SpectralData, ground_weight: float = 0.75) -> float:
    """Inverse temperature at which the Gibbs ground-state weight equals ``ground_weight``."""
    e = sd.energies - sd.energies[0]
    deg = np.array([np.trace(p).real for p in sd.projectors])
    g0 = deg[0]

    def wgt(b):
        return g0 / np.sum(deg * np.exp(-b * e))

    if len(e) == 1:
        raise ValueError("a single-level Hamiltonian has no thermal crossover")
    if wgt(1e-12) >= ground_weight:
        return 1e-12
    hi = 1.0
    while wgt(hi) < ground_weight:
        hi *= 2
    return float(optimize.brentq(lambda b: wgt(b) - ground_weight, 1e-12, hi, xtol=1e-14))


__all__ = [
    "PositivityWarning", "vec", "unvec", "hamiltonian_part", "apply", "jump_table", "redfield_generator",
    "lindblad_generator", "liouvillian", "propagate", "propagation_trace", "lemma2_bound", "lemma2_domain",
    "corollary2_bound", "StarBathSpec", "star_from_density", "exact_reference", "dissipation_power",
    "power_operator", "minimum_power", "thermal_beta",
]
