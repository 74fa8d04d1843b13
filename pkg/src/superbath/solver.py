"""
Super-bath eigensolver driver.

A run alternates blocks of M cooling cycles (Gaussian stabilization followed by
open-system evolution under the scaled super-bath ``g^2 J_S``) with batches of
idealized energy measurements, and tightens (T, g, delta, sigma, M) between
batches. The error budget of one cooling cycle, the admissible parameter ranges
and the update rule that drives the parameters into them live here too.
"""
from __future__ import annotations

import csv
import hashlib
import json
import math
from dataclasses import asdict, dataclass, field, replace

import numpy as np
from scipy import linalg

from .channels import dephasing_factors
from .core import OperatorSet, SpectralData, eigendecompose, maximally_mixed
from .dynamics import hamiltonian_part, liouvillian, redfield_generator, vec, unvec
from .spectral import (
    ScalarSpectralDensity,
    as_matrix_density,
    check_proper,
    correlation_integrals,
    default_omega_grid,
    rates_and_shifts,
    superbath,
)

DEFAULT_T = 0.1
DEFAULT_G = 0.5
DEFAULT_SIGMA = 10.0
DEFAULT_M = 1000
DEFAULT_K = 7
DEFAULT_WINDOW = 3
DEFAULT_STOP_REL = 1e-6
MAX_TRACE_POINTS = 100_000


# --- bath characteristics -----------------------------------------------------


@dataclass
class DensityCharacteristics:
    """Timescales of a proper scalar density ``f`` driving an N-operator super-bath.

    ``tau_R_min`` and ``tau_R_max`` bound ``tau_R(T, f)`` over (0, T_sup].
    Values for the super-bath follow from ``tau_R(J_S) = tau_R(f) / N`` and
    ``tau_B(J_S) = tau_B(f)``.
    """

    density: ScalarSpectralDensity
    n_ops: int
    T_sup: float
    tau_R_min: float
    tau_R_max: float
    _cache: dict = field(default_factory=dict, repr=False)

    @classmethod
    def from_density(cls, f: ScalarSpectralDensity, n_ops: int, T_sup: float = 1.0, T_grid=None):
        rep = check_proper(f, T_grid=T_grid, T_sup=T_sup)
        if not rep.proper:
            raise ValueError(f"spectral density is not proper: {rep}")
        # the zero-temperature limit belongs to the closure of (0, T_sup]
        r0 = correlation_integrals(f, 0.0).tau_R
        return cls(f, int(n_ops), float(T_sup), min(rep.tau_R_min, r0), max(rep.tau_R_max, r0))

    def timescales(self, T: float) -> tuple[float, float]:
        key = float(T)
        if key not in self._cache:
            r = correlation_integrals(self.density, key)
            self._cache[key] = (float(r.tau_R), float(r.tau_B))
        return self._cache[key]

    def tau_R(self, T: float) -> float:
        return self.timescales(T)[0]

    def tau_B(self, T: float) -> float:
        return self.timescales(T)[1]

    def tau_R_S(self, T: float) -> float:
        return self.tau_R(T) / self.n_ops


def _is_zero_density(f: ScalarSpectralDensity) -> bool:
    return not np.any(f(default_omega_grid(f.scale_frequency)))


# --- parameters ---------------------------------------------------------------------


@dataclass(frozen=True)
class SqeParams:
    """Cooling parameters. ``t * g = tau_R(T, J_S)`` is checked on construction.

    ``T = 0.0`` is the exact zero-temperature limit. ``tau_R_S = inf`` marks a
    bath that does not dissipate; then ``t`` is infinite as well.
    """

    T: float
    g: float
    t: float
    sigma: float
    M: int
    K: int = DEFAULT_K
    L_max: int = 10
    delta: float = 0.5
    tau_R_S: float = 1.0

    def __post_init__(self):
        if self.T < 0:
            raise ValueError("temperature must be non-negative")
        for name in ("g", "t", "sigma", "delta", "tau_R_S"):
            if not getattr(self, name) > 0:
                raise ValueError(f"{name} must be positive")
        if self.M < 0 or self.K < 1 or self.L_max < 1:
            raise ValueError("need M >= 0, K >= 1 and L_max >= 1")
        if np.isfinite(self.tau_R_S) and abs(self.t * self.g - self.tau_R_S) > 1e-12 * self.tau_R_S:
            raise ValueError("step duration must equal tau_R(T, J_S) / g")

    @classmethod
    def make(cls, T, g, sigma, M, tau_R_S, K=DEFAULT_K, L_max=10, delta=0.5) -> "SqeParams":
        return cls(T=float(T), g=float(g), t=float(tau_R_S) / float(g), sigma=float(sigma), M=int(M), K=int(K),
                   L_max=int(L_max), delta=float(delta), tau_R_S=float(tau_R_S))


@dataclass(frozen=True)
class ParameterRanges:
    """Admissible region evaluated at the point (T, g, delta)."""

    N: int
    b: float
    r: float
    h: float
    beta: float | None
    tau_R_min: float
    tau_R_max: float
    tau_B: float  # tau_B(T, f) at the evaluation temperature
    T: float
    g: float
    delta: float
    T_max: float
    g_max: float
    delta_1: float
    delta_2: float
    sigma_min: float

    @property
    def delta_max(self) -> float:
        return min(self.delta_1, self.delta_2)

    def contains(self, T: float, g: float, delta: float, sigma: float) -> bool:
        return bool(T <= self.T_max and g < self.g_max and delta < self.delta_max and sigma > self.sigma_min)


@dataclass
class ParameterPlanner:
    """Range formulas and the lambda-factor update for fixed (N, b, r, h)."""

    chars: DensityCharacteristics
    b: float = 1.0
    r: float = 1.0
    h: float = 1.0
    beta: float | None = None

    def __post_init__(self):
        if self.b <= 0 or self.r <= 0 or self.h <= 0:
            raise ValueError("b, r and h must be positive")

    @property
    def N(self) -> int:
        return self.chars.n_ops

    def T_max(self) -> float:
        c = self.chars
        t_max = np.e * c.tau_R_min / (6 * self.N ** 2 * self.b * self.r)
        if self.beta is not None:
            t_max = min(t_max, 1 / self.beta)
        return float(min(t_max, c.T_sup))

    def g_max(self, T: float) -> float:
        N, b, r, h = self.N, self.b, self.r, self.h
        tm, tb = self.chars.tau_R_min, self.chars.tau_B(T)
        return float(min(0.5, tm / (N * tb), tm / (12 * N * b * r * h),
                         tm ** 3 / (2304 * np.e ** 2 * N ** 3 * b ** 2 * r ** 2 * h ** 2 * tb)))

    def f1(self, g: float, T: float) -> float:
        tm = self.chars.tau_R_min
        return self.N / tm + 2 * (1 / g + self.N * self.chars.tau_B(T) / tm) * self.h

    def f2(self, g: float, T: float) -> float:
        tm, tM = self.chars.tau_R_min, self.chars.tau_R_max
        return 1 / tm + 2 * (tM / (g * self.N * tm) + self.b * self.chars.tau_B(T) / tm) * self.h

    def delta_bounds(self, g: float, T: float) -> tuple[float, float]:
        br12 = 12 * self.b * self.r
        return 1 / (br12 * self.f1(g, T)), 1 / (br12 * self.f2(g, T))

    def sigma_min(self, delta: float) -> float:
        N, b, r, h = self.N, self.b, self.r, self.h
        tm = self.chars.tau_R_min
        return float(max(192 * np.sqrt(2) * N * b * r * h ** 2 / (np.sqrt(np.pi) * delta ** 2 * tm),
                         (np.sqrt(np.pi) / (4 * np.sqrt(2))) ** (1 / 3) / delta))

    def ranges(self, T: float | None = None, g: float | None = None, delta: float | None = None) -> ParameterRanges:
        """Bounds at (T, g, delta); missing coordinates are taken at half their bound."""
        t_max = self.T_max()
        T = 0.5 * t_max if T is None else float(T)
        g_max = self.g_max(T)
        g = 0.5 * g_max if g is None else float(g)
        d1, d2 = self.delta_bounds(g, T)
        delta = 0.5 * min(d1, d2) if delta is None else float(delta)
        return ParameterRanges(
            N=self.N, b=self.b, r=self.r, h=self.h, beta=self.beta, tau_R_min=self.chars.tau_R_min,
            tau_R_max=self.chars.tau_R_max, tau_B=self.chars.tau_B(T), T=T, g=g, delta=delta, T_max=t_max,
            g_max=g_max, delta_1=d1, delta_2=d2, sigma_min=self.sigma_min(delta),
        )

    def witness(self, M: int = DEFAULT_M, K: int = DEFAULT_K) -> SqeParams:
        """Point with every coordinate at half (sigma: twice) its bound."""
        rg = self.ranges()
        return SqeParams.make(rg.T, rg.g, 2 * rg.sigma_min, M, self.chars.tau_R_S(rg.T), K=K, delta=rg.delta)

    def admissible(self, p: SqeParams) -> bool:
        return self.ranges(p.T, p.g, p.delta).contains(p.T, p.g, p.delta, p.sigma)

    def update(self, p: SqeParams) -> tuple[SqeParams, dict]:
        """One refresh: T/2, g scaled by lambda_1/2, delta by lambda_4/2, sigma by 2 lambda_5, M by 4/lambda_1^2."""
        T1 = p.T / 2
        tb0, tb1 = self.chars.tau_B(p.T), self.chars.tau_B(T1)
        lam1 = min(1.0, tb0 / tb1)
        g1 = lam1 * p.g / 2
        lam2 = min(1.0, self.f1(p.g, p.T) / self.f1(g1, T1))
        lam3 = min(1.0, self.f2(p.g, p.T) / self.f2(g1, T1))
        lam4 = min(lam2, lam3)
        if not lam4 > 0:
            raise ArithmeticError("degenerate delta refresh factor")
        lam5 = 4 / lam4 ** 2
        new = SqeParams.make(T1, g1, 2 * lam5 * p.sigma, math.ceil(4 * p.M / lam1 ** 2), self.chars.tau_R_S(T1),
                             K=p.K, L_max=p.L_max, delta=lam4 * p.delta / 2)
        return new, {"lambda_1": lam1, "lambda_2": lam2, "lambda_3": lam3, "lambda_4": lam4, "lambda_5": lam5,
                     "sigma_factor": 2 * lam5}

    def plan(self, p: SqeParams, max_updates: int = 500) -> tuple[SqeParams, list[dict], int]:
        """Apply updates until the parameters are admissible. Returns (params, log, number of updates)."""
        log = []
        for n in range(max_updates + 1):
            if self.admissible(p):
                return p, log, n
            if n == max_updates:
                break
            p, lam = self.update(p)
            log.append(lam)
        raise RuntimeError(f"parameters not admissible after {max_updates} updates")


def admissible_ranges(N: int, b: float, r: float, h: float, beta, chars: DensityCharacteristics,
                      T=None, g=None, delta=None) -> ParameterRanges:
    if chars.n_ops != N:
        raise ValueError("operator count does not match the characteristics")
    return ParameterPlanner(chars, b, r, h, beta).ranges(T, g, delta)


def update_parameters(params: SqeParams, chars: DensityCharacteristics, b: float = 1.0, h: float = 1.0):
    return ParameterPlanner(chars, b=b, h=h).update(params)


def default_parameters(chars: DensityCharacteristics | None, h: float, T: float = DEFAULT_T, g: float = DEFAULT_G,
                       sigma: float = DEFAULT_SIGMA, M: int = DEFAULT_M, K: int = DEFAULT_K, L_max: int = 10,
                       delta: float | None = None) -> SqeParams:
    """Starting point of a run; delta defaults to h/2."""
    tau = chars.tau_R_S(T) if chars is not None else np.inf
    delta = 0.5 * h if delta is None else delta
    return SqeParams(T=float(T), g=float(g), t=tau / g, sigma=float(sigma), M=int(M), K=int(K), L_max=int(L_max),
                     delta=float(delta), tau_R_S=float(tau))


def fit_log_law(scales, counts) -> tuple[float, float]:
    """Least-squares ``counts ~ c log2(scale) + c'``."""
    x = np.log2(np.asarray(scales, dtype=float))
    A = np.vstack([x, np.ones_like(x)]).T
    (c, c0), *_ = np.linalg.lstsq(A, np.asarray(counts, dtype=float), rcond=None)
    return float(c), float(c0)


# --- error budget ---------------------------------------------------------------


@dataclass(frozen=True)
class EpsilonTerms:
    terms: tuple
    P: float | None = None  # power that the budget is compared against

    @property
    def total(self) -> float:
        return float(sum(self.terms))


def _taus(x) -> tuple[float, float]:
    if isinstance(x, tuple):
        return float(x[0]), float(x[1])
    return float(x.tau_R), float(x.tau_B)


def epsilon_bound(params: SqeParams, js, jg, b: float, r: float, h: float, delta: float, N: int) -> EpsilonTerms:
    """Six-term error of one cooling cycle.

    ``js`` and ``jg`` give (tau_R, tau_B) of the super-bath and of the good
    sub-bath at the cycle temperature, unscaled by g.
    """
    g, t, T, sigma = params.g, params.t, params.T, params.sigma
    rS, bS = _taus(js)
    rG, bG = _taus(jg)
    if not bS <= t <= rS / g ** 2 * (1 + 1e-12):
        raise ValueError(f"step duration {t} outside [tau_B, tau_R / g^2] = [{bS}, {rS / g ** 2}]")
    x = g ** 2 * t / rS
    sd2 = (sigma * delta) ** 2
    t1 = 4 * np.e * g ** 2 * np.sqrt(bS * t) / rS * h
    t2 = np.expm1(x) - x
    t2 = t2 * h
    t3 = g ** 2 * t * delta * (1 / rS + 2 * (t / rS + bS / rS) * h)
    t4 = h * x * (8 * np.sqrt(2) * sigma * (h + delta) / np.sqrt(np.pi) * np.exp(-sd2) + 2 * np.exp(-2 * sd2))
    t5 = g ** 2 * t * delta / b * (1 / rG + 2 * (t / rG + bG / rG) * h)
    t6 = g ** 2 * t * N * T / (2 * np.e * rS)
    return EpsilonTerms(tuple(float(v) for v in (t1, t2, t3, t4, t5, t6)), P=g ** 2 / (b * r))


# --- cooling --------------------------------------------------------------------------


@dataclass
class CoolingProblem:
    """System, coupling operators and scalar density of a super-bath run."""

    hamiltonian: np.ndarray
    ops: OperatorSet
    density: ScalarSpectralDensity
    generator_kind: str = "redfield"
    T_sup: float = 1.0
    sd: SpectralData = field(init=False)
    chars: DensityCharacteristics | None = field(init=False)
    _baths: dict = field(default_factory=dict, init=False, repr=False)
    _maps: dict = field(default_factory=dict, init=False, repr=False)

    def __post_init__(self):
        if self.generator_kind not in ("redfield", "lindblad"):
            raise ValueError(f"unknown generator kind {self.generator_kind!r}")
        self.sd = eigendecompose(self.hamiltonian)
        if self.ops.dim != self.sd.dim:
            raise ValueError("operator dimension does not match the Hamiltonian")
        if _is_zero_density(self.density):
            self.chars = None
        else:
            self.chars = DensityCharacteristics.from_density(self.density, self.ops.size, self.T_sup)

    @property
    def dissipative(self) -> bool:
        return self.chars is not None

    @property
    def J_S(self):
        return superbath(self.density, self.ops.size)

    def bath(self, T: float):
        """Rates of the unscaled super-bath at temperature T (cached)."""
        key = float(T)
        if key not in self._baths:
            self._baths[key] = rates_and_shifts(key, self.J_S, self.sd.bohr)
        return self._baths[key]

    def dephasing_superop(self, sigma: float) -> np.ndarray:
        V = self.sd.eigvecs
        U = np.kron(V.conj(), V)
        return (U * vec(dephasing_factors(self.sd, sigma))) @ U.conj().T

    def cycle_map(self, params: SqeParams, kind: str | None = None) -> np.ndarray:
        """Superoperator of one cooling cycle, ``exp(L t) G_sigma``."""
        kind = kind or self.generator_kind
        key = (params.T, params.g, params.t, params.sigma, kind)
        if key not in self._maps:
            G = self.dephasing_superop(params.sigma)
            if self.dissipative:
                L = liouvillian(self.sd, self.ops, self.bath(params.T).scaled(params.g ** 2), kind)
                G = linalg.expm(L * params.t) @ G
            # without a bath the unitary part changes neither energies nor QPE statistics
            self._maps = {key: G}
        return self._maps[key]


def _energy(h, v) -> float:
    return float(np.real(np.vdot(vec(h), v)))


def cooling_cycle(rho, params: SqeParams, problem: CoolingProblem, generator_kind: str | None = None,
                  max_trace_points: int = MAX_TRACE_POINTS):
    """Apply M cooling cycles to ``rho``.

    Returns ``(rho_f, trace)`` where ``trace`` has rows (cycle, energy, ground
    population). Every cycle is recorded unless M exceeds ``max_trace_points``,
    in which case every ``ceil(M / max_trace_points)``-th cycle is.
    """
    d = problem.sd.dim
    v = vec(np.asarray(rho, dtype=complex))
    h = problem.sd.hamiltonian
    pg = vec(problem.sd.ground_projector)
    rows = [(0, _energy(h, v), _energy(pg, v))]
    if params.M == 0:
        return unvec(v, d), np.array(rows)
    phi = problem.cycle_map(params, generator_kind)
    stride = max(1, math.ceil(params.M / max_trace_points))
    step = np.linalg.matrix_power(phi, stride) if stride > 1 else phi
    n = 0
    while n + stride <= params.M:
        v = step @ v
        n += stride
        rows.append((n, _energy(h, v), _energy(pg, v)))
    while n < params.M:
        v = phi @ v
        n += 1
    if rows[-1][0] != n:
        rows.append((n, _energy(h, v), _energy(pg, v)))
    rho_f = unvec(v, d)
    return 0.5 * (rho_f + rho_f.conj().T), np.array(rows)


# --- idealized phase estimation ----------------------------------------------------


def outcome_probabilities(rho, sd: SpectralData) -> np.ndarray:
    p = np.array([np.real(np.trace(P @ rho)) for P in sd.projectors])
    p = np.clip(p, 0.0, None)
    return p / p.sum()


def qpe_trial(rho, seed, sd: SpectralData):
    """Projective energy measurement. Returns (energy, post-measurement state)."""
    rng = np.random.default_rng(seed)
    p = outcome_probabilities(rho, sd)
    m = int(rng.choice(len(p), p=p))
    P = sd.projectors[m]
    post = P @ rho @ P
    return float(sd.energies[m]), post / np.real(np.trace(post))


def qpe_batch(rho, K: int, seed, sd: SpectralData) -> tuple[float, list[float]]:
    """Minimum over K independent trials, each with its own spawned seed. Returns (E_min, samples)."""
    if K < 1:
        raise ValueError("K must be at least 1")
    seeds = np.random.SeedSequence(seed).spawn(K) if not isinstance(seed, np.random.SeedSequence) else seed.spawn(K)
    samples = [qpe_trial(rho, s, sd)[0] for s in seeds]
    return min(samples), samples


def batch_size(kappa: float) -> int:
    """``K = ceil(log kappa / log(3/4))`` trials for failure probability kappa at ground overlap 1/4."""
    if not 0 < kappa < 1:
        raise ValueError("kappa must lie in (0, 1)")
    return int(math.ceil(math.log(kappa) / math.log(0.75)))


# --- runs --------------------------------------------------------------------------------


@dataclass
class SqeConfig:
    hamiltonian: np.ndarray
    ops: OperatorSet
    density: ScalarSpectralDensity
    T: float = DEFAULT_T
    g: float = DEFAULT_G
    sigma: float = DEFAULT_SIGMA
    M: int = DEFAULT_M
    K: int = DEFAULT_K
    L_max: int = 10
    delta: float | None = None
    b: float = 1.0
    generator_kind: str = "redfield"
    window: int = DEFAULT_WINDOW
    stop_rel: float = DEFAULT_STOP_REL
    seed: int = 0
    rho_i: np.ndarray | None = None
    T_sup: float = 1.0
    max_trace_points: int = MAX_TRACE_POINTS
    tag: str = ""  # free-form provenance, e.g. a config hash


@dataclass
class RunRecord:
    seed: int
    tag: str = ""
    energy_trace: list = field(default_factory=list)  # (batch, cycle, energy, ground population)
    batches: list = field(default_factory=list)  # dicts with samples, E_min, params
    params_history: list = field(default_factory=list)  # dicts with params and lambda factors
    E_min_history: list = field(default_factory=list)
    stop_reason: str = ""
    next_batch: int = 0
    params: dict | None = None

    @property
    def E_min(self) -> float:
        return self.E_min_history[-1] if self.E_min_history else np.inf

    def to_document(self) -> dict:
        return json.loads(json.dumps(asdict(self), default=_json_default))

    @classmethod
    def from_document(cls, doc: dict) -> "RunRecord":
        return cls(**doc)

    def save(self, path):
        with open(path, "w") as fh:
            json.dump(self.to_document(), fh, indent=1, sort_keys=True)

    @classmethod
    def load(cls, path) -> "RunRecord":
        with open(path) as fh:
            return cls.from_document(json.load(fh))

    def write_energy_trace(self, path):
        with open(path, "w", newline="") as fh:
            w = csv.writer(fh)
            w.writerow(["batch", "cycle", "energy", "ground_population"])
            for b, c, e, p in self.energy_trace:
                w.writerow([int(b), int(c), repr(float(e)), repr(float(p))])

    def write_params_history(self, path):
        keys = ["batch", "T", "g", "t", "sigma", "M", "delta", "lambda_1", "lambda_2", "lambda_3", "lambda_4",
                "lambda_5", "sigma_factor"]
        with open(path, "w", newline="") as fh:
            w = csv.DictWriter(fh, fieldnames=keys, extrasaction="ignore")
            w.writeheader()
            for row in self.params_history:
                w.writerow({k: row.get(k, "") for k in keys})


def _json_default(o):
    if isinstance(o, np.integer):
        return int(o)
    if isinstance(o, np.floating):
        return float(o)
    if isinstance(o, np.ndarray):
        return o.tolist()
    raise TypeError(f"cannot serialize {type(o).__name__}")


def _params_doc(p: SqeParams) -> dict:
    return {k: (v if np.isfinite(v) else "inf") if isinstance(v, float) else v for k, v in asdict(p).items()}


def _params_from_doc(doc: dict) -> SqeParams:
    return SqeParams(**{k: (float("inf") if v == "inf" else v) for k, v in doc.items()})


def _stable(history, window: int, tol: float) -> bool:
    if len(history) <= window:
        return False
    last = history[-1]
    return all(abs(last - history[-1 - j]) <= tol for j in range(1, window + 1))


def run_sqe(config: SqeConfig, resume: RunRecord | None = None, checkpoint=None) -> RunRecord:
    """Alternate cooling blocks and measurement batches until the estimate is stable.

    Each batch restarts from ``rho_i`` (maximally mixed by default). ``resume``
    continues a saved record; ``checkpoint`` is a path rewritten after every batch.
    """
    problem = CoolingProblem(config.hamiltonian, config.ops, config.density, config.generator_kind, config.T_sup)
    sd = problem.sd
    h = sd.norm
    rho_i = maximally_mixed(sd.dim) if config.rho_i is None else np.asarray(config.rho_i, dtype=complex)
    planner = ParameterPlanner(problem.chars, b=config.b, h=h) if problem.dissipative else None
    root = np.random.SeedSequence(config.seed)
    tol = config.stop_rel * h

    if resume is not None:
        rec = resume
        if rec.seed != config.seed:
            raise ValueError("checkpoint was produced with a different seed")
        if rec.stop_reason:
            return rec
        params = _params_from_doc(rec.params)
    else:
        rec = RunRecord(seed=config.seed, tag=config.tag)
        params = default_parameters(problem.chars, h, config.T, config.g, config.sigma, config.M, config.K,
                                    config.L_max, config.delta)
        rec.params_history.append({"batch": 0, **_params_doc(params)})

    # batch seeds are fixed by the root seed alone, so a resumed run draws the same numbers
    batch_seeds = root.spawn(params.L_max)
    for ell in range(rec.next_batch, params.L_max):
        rho_f, trace = cooling_cycle(rho_i, params, problem, max_trace_points=config.max_trace_points)
        rec.energy_trace.extend((ell, int(c), float(e), float(p)) for c, e, p in trace)
        e_min, samples = qpe_batch(rho_f, params.K, batch_seeds[ell], sd)
        running = min(e_min, rec.E_min)
        rec.E_min_history.append(float(running))
        rec.batches.append({"batch": ell, "samples": samples, "E_min": float(running),
                            "ground_population": float(trace[-1, 2]), "M": params.M})
        rec.next_batch = ell + 1
        if problem.dissipative and _stable(rec.E_min_history, config.window, tol):
            rec.stop_reason = "stable"
        elif ell + 1 == params.L_max:
            rec.stop_reason = "L_max"
        else:
            if planner is not None:
                params, lam = planner.update(params)
            else:
                params = replace(params, T=params.T / 2, g=params.g / 2, delta=params.delta / 2,
                                 sigma=8 * params.sigma, M=4 * params.M)
                lam = {}
            rec.params_history.append({"batch": ell + 1, **_params_doc(params), **lam})
        rec.params = _params_doc(params)
        if checkpoint is not None:
            rec.save(checkpoint)
        if rec.stop_reason:
            break
    return rec


def config_hash(doc: dict) -> str:
    """Stable short hash of a JSON-serializable configuration."""
    text = json.dumps(doc, sort_keys=True, default=_json_default)
    return hashlib.sha256(text.encode()).hexdigest()[:16]


# --- per-cycle energy drop ----------------------------------------------------------


@dataclass
class EnergyDropReport:
    drops: np.ndarray  # energy removed in each checked cycle
    ground_population: np.ndarray
    checked: np.ndarray  # cycles whose input overlap with the ground space is <= 1/2
    Pt: float
    epsilon: EpsilonTerms

    @property
    def margins(self) -> np.ndarray:
        return self.drops - (self.Pt - self.epsilon.total)

    @property
    def ok(self) -> bool:
        return bool(np.all(self.margins[self.checked] >= 0) and self.epsilon.total <= self.Pt / 2)


def energy_drops(problem: CoolingProblem, params: SqeParams, j_gsub, b: float, r: float, n_cycles: int = 200,
                 rho0=None) -> EnergyDropReport:
    """Energy removed by each of ``n_cycles`` cooling cycles, with the error budget.

    The computation runs in the eigenbasis of H, where a dephased state commutes
    with H exactly. The change of the state over one step is evaluated as
    ``t phi_1(L t) L G rho`` with ``phi_1(z) = (e^z - 1)/z``, which keeps its
    relative accuracy even when g is tiny and ``||L t||`` is large.
    """
    sd = problem.sd
    V = sd.eigvecs
    d = sd.dim
    h_diag = np.diag(sd.energies[sd.level_of]).astype(complex)
    sd_e = eigendecompose(h_diag)
    if not np.allclose(sd_e.eigvecs, np.eye(d)):
        # keep the eigenbasis ordering of the diagonal Hamiltonian
        raise RuntimeError("eigenbasis of a diagonal Hamiltonian is not the identity")
    ops_e = OperatorSet(problem.ops.kind, np.array([V.conj().T @ a @ V for a in problem.ops.operators]),
                        problem.ops.labels, problem.ops.scales)
    bath = problem.bath(params.T).scaled(params.g ** 2)
    K0 = redfield_generator(sd_e, ops_e, bath, 0.0) if problem.generator_kind == "redfield" else None
    if K0 is None:
        L = liouvillian(sd_e, ops_e, bath, "lindblad")
    else:
        L = hamiltonian_part(h_diag) + K0
    n2 = d * d
    aug = np.zeros((2 * n2, 2 * n2), dtype=complex)
    aug[:n2, :n2] = L * params.t
    aug[:n2, n2:] = np.eye(n2)
    phi1 = linalg.expm(aug)[:n2, n2:]
    fac = vec(dephasing_factors(sd_e, params.sigma))
    hv = vec(h_diag)
    pg = vec(sd_e.ground_projector)

    rho = maximally_mixed(d) if rho0 is None else V.conj().T @ np.asarray(rho0, dtype=complex) @ V
    v = vec(rho)
    drops, pops = [], []
    for _ in range(n_cycles):
        pops.append(_energy(pg, v))
        x = fac * v
        dv = params.t * (phi1 @ (L @ x))
        drops.append(-_energy(hv, dv))
        v = x + dv
        m = unvec(v, d)
        v = vec(0.5 * (m + m.conj().T))
    drops, pops = np.array(drops), np.array(pops)

    chars = problem.chars
    js = (chars.tau_R_S(params.T), chars.tau_B(params.T))
    rg = correlation_integrals(as_matrix_density(j_gsub), params.T)
    eps = epsilon_bound(params, js, (rg.tau_R, rg.tau_B), b, r, sd.norm, params.delta, problem.ops.size)
    return EnergyDropReport(drops, pops, pops <= 0.5, eps.P * params.t, eps)
