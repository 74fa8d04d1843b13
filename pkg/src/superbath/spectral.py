"""
Spectral densities, bath correlation functions, rates and timescales.

A bosonic bath at temperature T with (matrix) spectral density J has the
two-time correlation

    C_ab(s) = int_0^inf J_ab(w) n(w) e^{iws} + J*_ab(w) (n(w) + 1) e^{-iws} dw,

with n the Bose occupation. Its half-Fourier transform
Gamma(w) = int_0^inf e^{iws} C(s) ds = gamma(w)/2 + i S(w) supplies the rates
and Lamb-shift coefficients of the master equations in ``dynamics``.

Matrix densities are represented as a short list of components
``(scalar density f_k, Hermitian N x N matrix M_k)`` with
``J(w) = sum_k f_k(w) M_k``. Every matrix-valued quantity (C, Gamma, gamma, S)
is then assembled from scalar emission/absorption pieces of each f_k:

    X_ab = sum_k (M_k)_ab X_k^abs + (M_k)*_ab X_k^emit.

``T == 0.0`` is the exact zero-temperature limit (n = 0), not a small float.
"""
from __future__ import annotations

import csv
import math
from dataclasses import dataclass, field
from functools import cached_property

import numpy as np
from scipy import integrate, special

# --- Bose factors -------------------------------------------------------------


def bose(w, T: float):
    """Occupation n(w) = 1/(e^{w/T} - 1); identically 0 when ``T == 0``."""
    w = np.asarray(w, dtype=float)
    if T == 0.0:
        return np.zeros_like(w)
    with np.errstate(divide="ignore", over="ignore"):
        return 1.0 / np.expm1(w / T)


def _check_temperature(T):
    if not T >= 0.0 or not np.isfinite(T):
        raise ValueError(f"temperature must be finite and >= 0, got {T!r}")


# --- Hurwitz zeta -------------------------------------------------------------

_EM_TERMS = 12
_B2K = special.bernoulli(2 * _EM_TERMS)[2::2]  # B_2, B_4, ..., B_{2K}
_FACT2K = np.array([math.factorial(2 * k) for k in range(1, _EM_TERMS + 1)], dtype=float)


def hurwitz_zeta(z: float, u, tol: float = 1e-15):
    """Generalized zeta ``sum_{n>=0} (n + u)^{-z}`` for real ``z > 1`` and complex ``u``.

    The first N terms are summed directly, with N chosen so the shifted argument
    has real part at least 25; the remainder uses the Euler-Maclaurin formula
    with up to 12 Bernoulli corrections, stopping once a correction falls below
    ``tol`` relative to the running value. Vectorized over ``u``.
    """
    if not z > 1:
        raise ValueError("hurwitz_zeta requires z > 1")
    u = np.asarray(u, dtype=complex)
    scalar = u.ndim == 0
    u = np.atleast_1d(u)
    bad = (u.imag == 0) & (u.real <= 0) & (u.real == np.round(u.real))
    if np.any(bad):
        raise ValueError("hurwitz_zeta is undefined at non-positive integer u")

    n_direct = max(0, int(math.ceil(25.0 - u.real.min())))
    total = np.zeros_like(u)
    for n in range(n_direct):
        total += (u + n) ** (-z)
    a = u + n_direct
    tail = a ** (1 - z) / (z - 1) + 0.5 * a ** (-z)
    rising = z  # (z)_{2k-1}
    apow = a ** (-z - 1)
    for k in range(_EM_TERMS):
        term = _B2K[k] / _FACT2K[k] * rising * apow
        tail += term
        if np.max(np.abs(term)) <= tol * max(np.max(np.abs(total + tail)), 1e-300):
            break
        rising *= (z + 2 * k + 1) * (z + 2 * k + 2)
        apow = apow / (a * a)
    out = total + tail
    return out[0] if scalar else out


# --- scalar densities ---------------------------------------------------------


class ScalarSpectralDensity:
    """Base class: a non-negative function on w >= 0.

    Subclasses implement ``__call__``. Closed-form families may override
    ``correlation_parts``; the default evaluates the defining integrals by
    oscillatory quadrature.
    """

    family = "generic"
    #: characteristic frequency used to place quadrature breakpoints
    scale_frequency = 1.0

    def __call__(self, w):
        raise NotImplementedError

    def _checked(self, w):
        w = np.asarray(w, dtype=float)
        if np.any(w < 0):
            raise ValueError("spectral density is defined for w >= 0 only")
        return w

    @property
    def upper(self) -> float:
        """Upper end of the support (np.inf if unbounded)."""
        return np.inf

    def slope_at_zero(self) -> float:
        """lim_{w -> 0+} J(w)/w, controls the w = 0 rate at finite T."""
        eps = 1e-9 * self.scale_frequency
        return float(self(eps) / eps)

    def scaled(self, c: float) -> "ScalarSpectralDensity":
        return ScaledDensity(self, c)

    # default numerical correlation
    def correlation_parts(self, t, T: float):
        """Absorption and emission pieces of C(t).

        ``C_abs(t) = int J n e^{iwt}``, ``C_emit(t) = int J (n+1) e^{-iwt}``.
        """
        t = np.atleast_1d(np.asarray(t, dtype=float))
        c_abs = np.empty(t.shape, dtype=complex)
        c_emit = np.empty(t.shape, dtype=complex)
        for i, ti in enumerate(t):
            c_abs[i], c_emit[i] = _quad_correlation_parts(self, ti, T)
        return c_abs, c_emit


def _quad_correlation_parts(f, t: float, T: float, epsabs=1e-13, epsrel=1e-11):
    upper = f.upper
    w_scale = f.scale_frequency

    def wn(w):
        if T == 0 or w == 0:
            return 0.0
        return float(f(w) * bose(w, T))

    def wn1(w):
        if w == 0:
            return 0.0
        return float(f(w) * (1.0 + (bose(w, T) if T > 0 else 0.0)))

    def _q(g, weight=None):
        kw = dict(epsabs=epsabs, epsrel=epsrel, limit=400)
        if weight is None or t == 0:
            if weight == "sin":
                return 0.0
            if np.isinf(upper):
                head = integrate.quad(g, 0, 50 * w_scale, **kw)[0]
                return head + integrate.quad(g, 50 * w_scale, np.inf, **kw)[0]
            return integrate.quad(g, 0, upper, **kw)[0]
        if np.isinf(upper):
            head = integrate.quad(g, 0, 50 * w_scale, weight=weight, wvar=t, **kw)[0]
            tail = integrate.quad(g, 50 * w_scale, np.inf, weight=weight, wvar=t, limlst=200, epsabs=epsabs)[0]
            return head + tail
        return integrate.quad(g, 0, upper, weight=weight, wvar=t, **kw)[0]

    c_abs = _q(wn, "cos") + 1j * _q(wn, "sin") if T > 0 else 0.0
    c_emit = _q(wn1, "cos") - 1j * _q(wn1, "sin")
    return complex(c_abs), complex(c_emit)


@dataclass(frozen=True)
class ExpCutoffDensity(ScalarSpectralDensity):
    """``J(w) = scale * w^s / W^{s-1} * exp(-w / W)``.

    ``s > 1`` is super-Ohmic, ``s = 1`` Ohmic, ``s < 1`` sub-Ohmic.
    """

    s: float = 3.0
    cutoff: float = 1.0
    scale: float = 1.0
    family = "super-ohmic-exp-cutoff"

    def __post_init__(self):
        if not (self.s > 0 and self.cutoff > 0 and self.scale >= 0):
            raise ValueError("need s > 0, cutoff > 0 and scale >= 0")

    @property
    def scale_frequency(self):
        return self.cutoff

    def __call__(self, w):
        w = self._checked(w)
        return self.scale * w ** self.s / self.cutoff ** (self.s - 1) * np.exp(-w / self.cutoff)

    def slope_at_zero(self):
        if self.s > 1:
            return 0.0
        if self.s == 1:
            return self.scale
        return np.inf

    def scaled(self, c):
        return ExpCutoffDensity(self.s, self.cutoff, self.scale * c)

    def correlation_parts(self, t, T):
        """Closed form through the Hurwitz zeta function."""
        _check_temperature(T)
        t = np.asarray(t, dtype=float)
        s, W = self.s, self.cutoff
        pref = self.scale * special.gamma(s + 1) / W ** (s - 1)
        z = s + 1
        # n = 0 emission term kept separate so T -> 0 stays well conditioned
        c_emit = (1.0 / W + 1j * t) ** (-z) + 0j
        if T == 0.0:
            return np.zeros_like(c_emit), pref * c_emit
        tz = T ** z
        c_emit = c_emit + tz * hurwitz_zeta(z, T / W + 1 + 1j * T * t)
        c_abs = tz * hurwitz_zeta(z, T / W + 1 - 1j * T * t)
        return pref * c_abs, pref * c_emit


@dataclass(frozen=True)
class ScaledDensity(ScalarSpectralDensity):
    base: ScalarSpectralDensity
    factor: float

    family = "scaled"

    @property
    def scale_frequency(self):
        return self.base.scale_frequency

    @property
    def upper(self):
        return self.base.upper

    def __call__(self, w):
        return self.factor * self.base(w)

    def slope_at_zero(self):
        return self.factor * self.base.slope_at_zero()

    def correlation_parts(self, t, T):
        a, e = self.base.correlation_parts(t, T)
        return self.factor * a, self.factor * e


@dataclass(frozen=True)
class SumDensity(ScalarSpectralDensity):
    terms: tuple

    family = "sum"

    @property
    def scale_frequency(self):
        return max(f.scale_frequency for f in self.terms)

    @property
    def upper(self):
        return max(f.upper for f in self.terms)

    def __call__(self, w):
        return sum(f(w) for f in self.terms)

    def slope_at_zero(self):
        return sum(f.slope_at_zero() for f in self.terms)

    def scaled(self, c):
        return SumDensity(tuple(f.scaled(c) for f in self.terms))

    def correlation_parts(self, t, T):
        parts = [f.correlation_parts(t, T) for f in self.terms]
        return sum(p[0] for p in parts), sum(p[1] for p in parts)


class TabulatedDensity(ScalarSpectralDensity):
    """Piecewise-linear density through ``(omega, value)`` samples, zero outside."""

    family = "custom-tabulated"

    def __init__(self, omega, values):
        omega = np.asarray(omega, dtype=float)
        values = np.asarray(values, dtype=float)
        if omega.ndim != 1 or omega.shape != values.shape or len(omega) < 2:
            raise ValueError("need matching 1-d omega/value arrays with >= 2 points")
        order = np.argsort(omega)
        self.omega, self.values = omega[order], values[order]
        if self.omega[0] < 0:
            raise ValueError("tabulated frequencies must be >= 0")

    @property
    def upper(self):
        return float(self.omega[-1])

    @property
    def scale_frequency(self):
        w, v = self.omega, self.values
        tot = np.trapezoid(v, w)
        return float(np.trapezoid(v * w, w) / tot) if tot > 0 else float(w[-1])

    def __call__(self, w):
        w = self._checked(w)
        return np.interp(w, self.omega, self.values, left=0.0, right=0.0)

    @classmethod
    def from_csv(cls, path):
        """Two-column CSV ``omega,J`` (a non-numeric header line is skipped)."""
        rows = []
        with open(path, newline="") as fh:
            for k, row in enumerate(csv.reader(fh)):
                if not row or row[0].lstrip().startswith("#"):
                    continue
                try:
                    rows.append((float(row[0]), float(row[1])))
                except (ValueError, IndexError):
                    if k == 0:
                        continue
                    raise ValueError(f"{path}: malformed row {k + 1}: {row!r}") from None
        if not rows:
            raise ValueError(f"{path}: no data rows")
        w, v = np.array(rows).T
        return cls(w, v)


def super_ohmic_density(s: float = 3.0, cutoff: float = 1.0) -> ExpCutoffDensity:
    return ExpCutoffDensity(s=s, cutoff=cutoff)


# --- multipole radiation --------------------------------------------------------


def _double_factorial(n: int) -> int:
    return math.prod(range(n, 0, -2)) if n > 0 else 1


def multipole_rate(l: int, w: float, B: float) -> float:
    """Electromagnetic multipole transition rate (c = hbar = 1).

    ``8 pi (l+1) / (l [(2l+1)!!]^2) * w^{2l+1} * B``.
    """
    if l < 1:
        raise ValueError("multipole order must be >= 1 (no monopole radiation)")
    if B < 0 or w < 0:
        raise ValueError("need w >= 0 and B >= 0")
    df = _double_factorial(2 * l + 1)
    return 8 * math.pi * (l + 1) / (l * df ** 2) * w ** (2 * l + 1) * B


def multipole_density(weights, ls, cutoff: float = 1.0) -> SumDensity:
    """``sum_i weights_i * w^{2 l_i + 1} e^{-w/cutoff}`` (each term unit-normalized at the cutoff)."""
    weights, ls = list(weights), list(ls)
    if len(weights) != len(ls) or not weights:
        raise ValueError("weights and multipole orders must be non-empty and aligned")
    terms = []
    for wt, l in zip(weights, ls):
        if l < 1:
            raise ValueError("multipole order must be >= 1")
        if wt < 0:
            raise ValueError("multipole weights must be non-negative")
        terms.append(ExpCutoffDensity(s=2 * l + 1, cutoff=cutoff, scale=wt))
    return SumDensity(tuple(terms))


# --- matrix densities -----------------------------------------------------------


@dataclass(frozen=True)
class MatrixSpectralDensity:
    """``J(w) = sum_k f_k(w) M_k`` with scalar densities f_k and Hermitian M_k."""

    components: tuple  # of (ScalarSpectralDensity, (N, N) array)
    tag: str = "custom"

    def __post_init__(self):
        dims = {np.shape(m) for _, m in self.components}
        if len(dims) != 1:
            raise ValueError("all component matrices must share one shape")
        (shape,) = dims
        if len(shape) != 2 or shape[0] != shape[1]:
            raise ValueError("component matrices must be square")
        for _, m in self.components:
            if np.max(np.abs(m - np.conj(m).T)) > 1e-12:
                raise ValueError("component matrices must be Hermitian")

    @property
    def dim(self) -> int:
        return np.shape(self.components[0][1])[0]

    def __call__(self, w) -> np.ndarray:
        return sum(f(w) * np.asarray(m, dtype=complex) for f, m in self.components)

    def scaled(self, c: float) -> "MatrixSpectralDensity":
        return MatrixSpectralDensity(tuple((f, c * np.asarray(m, dtype=complex)) for f, m in self.components), self.tag)

    def __add__(self, other):
        return MatrixSpectralDensity(self.components + other.components, "custom")

    def __sub__(self, other):
        return self + other.scaled(-1.0)

    @property
    def scale_frequency(self):
        return max(f.scale_frequency for f, _ in self.components)

    def correlation(self, t, T: float) -> np.ndarray:
        """C_ab(t), shape ``t.shape + (N, N)``."""
        t = np.asarray(t, dtype=float)
        out = np.zeros(t.shape + (self.dim, self.dim), dtype=complex)
        for f, m in self.components:
            a, e = f.correlation_parts(t, T)
            m = np.asarray(m, dtype=complex)
            out += a[..., None, None] * m + e[..., None, None] * m.conj()
        return out

    def l1_correlation(self, t, T: float) -> np.ndarray:
        """Entry-wise L1 norm ``sum_ab |C_ab(t)|``."""
        t = np.asarray(t, dtype=float)
        if len(self.components) == 1:
            f, m = self.components[0]
            m = np.asarray(m, dtype=complex)
            if np.all(m.imag == 0):
                # C = (C_abs + C_emit) M for a real structure matrix
                a, e = f.correlation_parts(t, T)
                return np.abs(m).sum() * np.abs(a + e)
        return np.abs(self.correlation(t, T)).sum(axis=(-2, -1))


def as_matrix_density(J) -> MatrixSpectralDensity:
    if isinstance(J, MatrixSpectralDensity):
        return J
    if isinstance(J, ScalarSpectralDensity):
        return MatrixSpectralDensity(((J, np.eye(1, dtype=complex)),), "scalar")
    raise TypeError(f"not a spectral density: {type(J).__name__}")


def superbath(f: ScalarSpectralDensity, n: int) -> MatrixSpectralDensity:
    """Every coupling operator sees an independent copy of ``f``: ``f(w) I_N``."""
    if n < 1:
        raise ValueError("super-bath needs at least one coupling operator")
    return MatrixSpectralDensity(((f, np.eye(n, dtype=complex)),), "super")


def good_density(f: ScalarSpectralDensity, m) -> MatrixSpectralDensity:
    """``f(w) M`` for a PSD coupling-structure matrix ``M``."""
    m = np.asarray(m, dtype=complex)
    if np.linalg.eigvalsh(0.5 * (m + m.conj().T))[0] < -1e-12:
        raise ValueError("good-bath structure matrix must be positive semidefinite")
    return MatrixSpectralDensity(((f, m),), "good")


def complementary(j_super: MatrixSpectralDensity, eta: float, j_good: MatrixSpectralDensity) -> MatrixSpectralDensity:
    """``J_C = J_S - eta J_good``."""
    out = j_super - j_good.scaled(eta)
    return MatrixSpectralDensity(out.components, "complementary")


def default_omega_grid(w_scale: float = 1.0, n: int = 512) -> np.ndarray:
    return np.geomspace(1e-4 * w_scale, 50 * w_scale, n)


def min_eigenvalue_on_grid(J: MatrixSpectralDensity, grid=None):
    """Smallest eigenvalue of J(w) over the grid and where it occurs."""
    grid = default_omega_grid(J.scale_frequency) if grid is None else grid
    lows = np.array([np.linalg.eigvalsh(J(w))[0] for w in grid])
    k = int(np.argmin(lows))
    return float(lows[k]), float(grid[k])


def eta_max(f: ScalarSpectralDensity, j_good: MatrixSpectralDensity, grid=None) -> float:
    """``min_w f(w) / ||J_good(w)||`` over the grid (points with J_good = 0 skipped)."""
    grid = default_omega_grid(f.scale_frequency) if grid is None else grid
    best = np.inf
    for w in grid:
        ng = np.linalg.norm(j_good(w), 2)
        if ng <= 1e-300:
            continue
        fw = float(f(w))
        if fw <= 0:
            return 0.0
        best = min(best, fw / ng)
    return float(best) if np.isfinite(best) else 0.0


# --- timescales -----------------------------------------------------------------

_GL_X, _GL_W = np.polynomial.legendre.leggauss(32)


def _panel_integrals(func, edges):
    """Composite 32-point Gauss-Legendre integrals of ``func`` and ``s*func``."""
    a, b = edges[:-1], edges[1:]
    half = 0.5 * (b - a)
    mid = 0.5 * (b + a)
    nodes = (mid[:, None] + half[:, None] * _GL_X[None, :]).ravel()
    vals = func(nodes).reshape(len(a), -1)
    w = (half[:, None] * _GL_W[None, :])
    i0 = np.sum(w * vals)
    i1 = np.sum(w * vals * nodes.reshape(len(a), -1))
    return i0, i1


@dataclass(frozen=True)
class TimescaleResult:
    tau_R: float
    tau_B: float
    int_abs: float  # int_0^inf ||C||_L1
    int_t_abs: float  # int_0^inf s ||C||_L1
    s_max: float
    tail_exponent: float
    rel_error: float


def correlation_integrals(J, T: float, rel_tol: float = 1e-6, cutoff_ratio: float = 1e-14) -> TimescaleResult:
    """Integrals of ``||C(s)||_L1`` and ``s ||C(s)||_L1`` over s in [0, inf).

    Integrates to s_max where ``||C||`` has dropped below ``cutoff_ratio`` of
    its s = 0 value, then adds a power-law tail fitted to the decay.
    """
    _check_temperature(T)
    J = as_matrix_density(J)

    def norm_c(s):
        return J.l1_correlation(s, T)

    c0 = float(norm_c(np.array([0.0]))[0])
    if not np.isfinite(c0):
        raise ArithmeticError("C(0) diverges: the density is not proper")
    if c0 == 0.0:
        return TimescaleResult(np.inf, 0.0, 0.0, 0.0, 0.0, np.nan, 0.0)

    w0 = J.scale_frequency
    s_max = 1.0 / w0
    while float(norm_c(np.array([s_max]))[0]) > cutoff_ratio * c0:
        s_max *= 2.0
        if s_max > 1e12 / w0:
            raise ArithmeticError("correlation function does not decay: the density is not proper")

    def run(per_decade):
        lo = 1e-4 / w0
        n = max(4, int(per_decade * np.log10(s_max / lo)))
        edges = np.concatenate([[0.0], np.geomspace(lo, s_max, n)])
        return _panel_integrals(norm_c, edges)

    i0a, i1a = run(4)
    i0b, i1b = run(8)
    rel = max(abs(i0a - i0b) / abs(i0b), abs(i1a - i1b) / max(abs(i1b), 1e-300))

    # power-law tail beyond s_max
    c1 = float(norm_c(np.array([s_max]))[0])
    c2 = float(norm_c(np.array([s_max / 2]))[0])
    p = np.log(c2 / c1) / np.log(2.0) if c1 > 0 and c2 > 0 else np.inf
    tail0 = c1 * s_max / (p - 1) if p > 1 else 0.0
    tail1 = c1 * s_max ** 2 / (p - 2) if p > 2 else 0.0
    if np.isfinite(p) and p <= 2:
        raise ArithmeticError(f"s*|C(s)| is not integrable (decay exponent {p:.3f})")
    int0 = i0b + tail0
    int1 = i1b + tail1
    if rel > rel_tol:
        raise ArithmeticError(f"timescale quadrature did not converge (relative change {rel:.2e})")
    tau_R = 1.0 / (4.0 * int0)
    tau_B = 4.0 * tau_R * int1
    return TimescaleResult(tau_R, tau_B, int0, int1, s_max, float(p), float(rel))


def timescales(T: float, J) -> tuple[float, float]:
    """``(tau_R, tau_B)`` for temperature T and (scalar or matrix) density J."""
    r = correlation_integrals(J, T)
    return r.tau_R, r.tau_B


# --- rates, shifts and half-Fourier transform -----------------------------------


def _emission_rate(f, w, T):
    """2 pi f(w)(n(w)+1) for w > 0."""
    return 2 * np.pi * f(w) * (1.0 + bose(w, T))


def _scalar_half_fourier(f: ScalarSpectralDensity, w: float, T: float, epsabs=1e-12, epsrel=1e-10):
    """Absorption and emission pieces of ``Gamma(w) = int_0^inf e^{iws} C(s) ds``.

    ``Gamma_emit(w) = pi f(w)(n+1)[w > 0] + i PV int f(v)(n(v)+1)/(w - v) dv``
    ``Gamma_abs(w)  = pi f(-w) n(-w)[w < 0] + i PV int f(v) n(v)/(w + v) dv``
    """
    kw = dict(epsabs=epsabs, epsrel=epsrel, limit=500)
    W = f.scale_frequency
    top = f.upper

    def emit(v):
        return float(f(v) * (1.0 + bose(v, T))) if v > 0 else 0.0

    def absn(v):
        return float(f(v) * bose(v, T)) if (T > 0 and v > 0) else 0.0

    def pv(g, pole):
        """PV int_0^top g(v)/(v - pole) dv."""
        if pole <= 0:
            # no singularity inside the integration range (g(0) = 0 handles pole = 0)
            if np.isinf(top):
                return integrate.quad(lambda v: g(v) / (v - pole), 0, 60 * W, **kw)[0] + integrate.quad(
                    lambda v: g(v) / (v - pole), 60 * W, np.inf, **kw)[0]
            return integrate.quad(lambda v: g(v) / (v - pole), 0, top, **kw)[0]
        b = min(top, 2 * pole + 60 * W)
        if pole >= b:
            val = integrate.quad(lambda v: g(v) / (v - pole), 0, b, **kw)[0]
            return val
        val = integrate.quad(g, 0, b, weight="cauchy", wvar=pole, **kw)[0]
        if b < top:
            val += integrate.quad(lambda v: g(v) / (v - pole), b, top, **kw)[0]
        return val

    if w == 0:
        slope = f.slope_at_zero()
        # gamma(0) = 2 pi T J'(0) is shared equally by the two pieces
        g_emit = 0.5 * np.pi * T * slope if T > 0 else 0.0
        g_abs = g_emit
        if T > 0 and slope != 0:
            # f n / v is not integrable at 0 here; only the sum -int f / v is finite
            return complex(g_abs, 0.0), complex(g_emit, -pv(lambda v: float(f(v)) if v > 0 else 0.0, 0.0))
        s_emit = -pv(emit, 0.0)
        s_abs = pv(absn, 0.0) if T > 0 else 0.0
        return complex(g_abs, s_abs), complex(g_emit, s_emit)

    if w > 0:
        re_emit = np.pi * float(f(w)) * (1.0 + float(bose(w, T)))
        re_abs = 0.0
    else:
        re_emit = 0.0
        re_abs = np.pi * float(f(-w)) * float(bose(-w, T))
    # Im Gamma_emit = PV int emit(v)/(w - v) = -PV int emit(v)/(v - w)
    im_emit = -pv(emit, w)
    # Im Gamma_abs = PV int absn(v)/(w + v) = PV int absn(v)/(v - (-w))
    im_abs = pv(absn, -w) if T > 0 else 0.0
    return complex(re_abs, im_abs), complex(re_emit, im_emit)


def half_fourier_time_domain(f: ScalarSpectralDensity, w: float, T: float, s_max: float | None = None):
    """``int_0^inf e^{iws} C(s) ds`` by direct time-domain quadrature.

    Independent route used to cross-check the frequency-domain evaluation; the
    correlation tail beyond ``s_max`` is neglected.
    """
    J = as_matrix_density(f)
    if s_max is None:
        s_max = correlation_integrals(J, T).s_max

    def c(s):
        a, e = f.correlation_parts(s, T)
        return (a + e) * np.exp(1j * w * s)

    lo = 1e-4 / f.scale_frequency
    n = int(8 * np.log10(s_max / lo)) + 1
    edges = np.concatenate([[0.0], np.geomspace(lo, s_max, n)])
    # refine to resolve oscillation at frequency w
    if w != 0:
        step = np.pi / (4 * abs(w))
        fine = [edges[0]]
        for a, b in zip(edges[:-1], edges[1:]):
            k = max(1, int(np.ceil((b - a) / step)))
            fine.extend(np.linspace(a, b, k + 1)[1:])
        edges = np.array(fine)
    a, b = edges[:-1], edges[1:]
    half, mid = 0.5 * (b - a), 0.5 * (a + b)
    nodes = mid[:, None] + half[:, None] * _GL_X[None, :]
    return complex(np.sum(half[:, None] * _GL_W[None, :] * c(nodes)))


@dataclass
class BathCharacteristics:
    """Rates and timescales of bath ``J`` at temperature ``T`` on a frequency table.

    ``gamma``, ``S`` and ``Gamma`` have shape ``(len(omegas), N, N)`` and are
    aligned with ``omegas``.
    """

    T: float
    density: MatrixSpectralDensity
    omegas: np.ndarray
    Gamma: np.ndarray
    tau_R: float = np.nan
    tau_B: float = np.nan
    timescale_info: TimescaleResult | None = None

    @cached_property
    def gamma(self) -> np.ndarray:
        return self.Gamma + np.conj(np.swapaxes(self.Gamma, -1, -2))

    @cached_property
    def S(self) -> np.ndarray:
        return (self.Gamma - np.conj(np.swapaxes(self.Gamma, -1, -2))) / 2j

    @property
    def dim(self) -> int:
        return self.density.dim

    def index(self, w: float, tol: float = 1e-9) -> int:
        k = int(np.argmin(np.abs(self.omegas - w)))
        if abs(self.omegas[k] - w) > tol * max(1.0, abs(w)):
            raise KeyError(f"frequency {w!r} not tabulated")
        return k

    def rate(self, w: float) -> np.ndarray:
        return self.gamma[self.index(w)]

    def scaled(self, c: float) -> "BathCharacteristics":
        """Characteristics of ``c J`` (rates scale by c, tau_R by 1/c)."""
        return BathCharacteristics(
            T=self.T, density=self.density.scaled(c), omegas=self.omegas.copy(), Gamma=c * self.Gamma,
            tau_R=self.tau_R / c if c else np.inf, tau_B=self.tau_B, timescale_info=None,
        )

    def correlation(self, t) -> np.ndarray:
        return self.density.correlation(t, self.T)

    def kms_violation(self) -> float:
        """Largest relative deviation from ``gamma(-w) = e^{-w/T} gamma(w)^T``."""
        worst = 0.0
        for k, w in enumerate(self.omegas):
            if w <= 0:
                continue
            try:
                km = self.index(-w)
            except KeyError:
                continue
            target = (np.exp(-w / self.T) if self.T > 0 else 0.0) * self.gamma[k].T
            scale = max(np.max(np.abs(self.gamma[k])), 1e-300)
            worst = max(worst, float(np.max(np.abs(self.gamma[km] - target)) / scale))
        return worst

    def to_csv(self, path):
        """One row per (omega, a, b) with gamma and S entries."""
        with open(path, "w", newline="") as fh:
            wr = csv.writer(fh)
            wr.writerow(["omega", "a", "b", "gamma_re", "gamma_im", "S_re", "S_im"])
            for k, w in enumerate(self.omegas):
                for a in range(self.dim):
                    for b in range(self.dim):
                        g, s = self.gamma[k, a, b], self.S[k, a, b]
                        wr.writerow([repr(float(w)), a, b, repr(g.real), repr(g.imag), repr(s.real), repr(s.imag)])


def scalar_half_fourier_table(f: ScalarSpectralDensity, omegas, T: float):
    """Arrays of the absorption and emission half-Fourier pieces on ``omegas``."""
    omegas = np.asarray(omegas, dtype=float)
    ga = np.empty(omegas.shape, dtype=complex)
    ge = np.empty(omegas.shape, dtype=complex)
    for i, w in enumerate(omegas):
        ga[i], ge[i] = _scalar_half_fourier(f, float(w), T)
    return ga, ge


def rates_and_shifts(T: float, J, omegas, with_timescales: bool = True) -> BathCharacteristics:
    """Tabulate Gamma (hence gamma and S) of bath ``J`` on the given frequencies."""
    _check_temperature(T)
    J = as_matrix_density(J)
    omegas = np.asarray(omegas, dtype=float)
    Gam = np.zeros((len(omegas), J.dim, J.dim), dtype=complex)
    cache: dict[int, tuple] = {}
    for f, m in J.components:
        key = id(f)
        if key not in cache:
            cache[key] = scalar_half_fourier_table(f, omegas, T)
        ga, ge = cache[key]
        m = np.asarray(m, dtype=complex)
        Gam += ga[:, None, None] * m + ge[:, None, None] * m.conj()
    bc = BathCharacteristics(T=T, density=J, omegas=omegas, Gamma=Gam)
    if with_timescales:
        info = correlation_integrals(J, T)
        bc.tau_R, bc.tau_B, bc.timescale_info = info.tau_R, info.tau_B, info
    return bc


def closed_form_rate(f: ScalarSpectralDensity, w: float, T: float) -> float:
    """Scalar rate ``gamma(w)`` from the piecewise detailed-balance formula."""
    if w > 0:
        return float(_emission_rate(f, w, T))
    if w < 0:
        return float(2 * np.pi * f(-w) * bose(-w, T)) if T > 0 else 0.0
    return 2 * np.pi * T * f.slope_at_zero() if T > 0 else 0.0


# --- propriety and sub-bath checks ------------------------------------------------


@dataclass
class PropertyReport:
    nonnegative: bool
    vanishing_ends: bool
    bounded_c0: bool
    polynomial_tau_B: bool
    bounded_tau_R: bool
    tau_R_min: float = np.nan
    tau_R_max: float = np.nan
    tau_B_exponent: float = np.nan
    details: dict = field(default_factory=dict)

    @property
    def proper(self) -> bool:
        return self.nonnegative and self.vanishing_ends and self.bounded_c0 and self.polynomial_tau_B and self.bounded_tau_R


def check_proper(f: ScalarSpectralDensity, T_grid=None, T_sup: float = 1.0) -> PropertyReport:
    """Sampled check of the four regularity conditions on (0, T_sup]."""
    T_grid = np.geomspace(0.01 * T_sup, T_sup, 8) if T_grid is None else np.asarray(T_grid, dtype=float)
    if len(T_grid) == 0:
        raise ValueError("temperature grid must be non-empty")
    W = f.scale_frequency
    grid = default_omega_grid(W)
    vals = f(grid)
    nonneg = bool(np.all(vals >= 0))

    big = 1e4 * W if np.isinf(f.upper) else f.upper
    # a table ending on a non-negligible value is read as a truncated tail that
    # does not decay, so C(T; 0) diverges once the table is extended
    decays = float(f(big)) < 1e-12 * max(float(vals.max()), float(f(big)), 1e-300)
    ends = float(f(0.0)) == 0.0 and decays
    details: dict = {"J(0)": float(f(0.0)), "J(large)": float(f(big))}

    c0 = []
    ok_c0 = decays
    if ok_c0:
        for T in T_grid:
            try:
                a, e = f.correlation_parts(np.array([0.0]), float(T))
                c0.append(float(np.real(a[0] + e[0])))
            except Exception:  # quadrature blow-up
                c0.append(np.inf)
        ok_c0 = bool(np.all(np.isfinite(c0)))
        if ok_c0 and f.slope_at_zero() != 0.0:
            # f(w) coth(w/2T) ~ 2T f(w)/w near 0: divergent if f/w does not vanish integrably
            ok_c0 = np.isfinite(f.slope_at_zero())
    details["C0"] = c0

    tau_R, tau_B = [], []
    if ok_c0:
        for T in T_grid:
            try:
                r, b = timescales(float(T), f)
            except ArithmeticError:
                r, b = np.nan, np.inf
            tau_R.append(r)
            tau_B.append(b)
    tau_R, tau_B = np.array(tau_R), np.array(tau_B)
    bounded_r = bool(ok_c0 and np.all(np.isfinite(tau_R)) and np.all(tau_R > 0))
    poly_b = False
    expo = np.nan
    if ok_c0 and np.all(np.isfinite(tau_B)) and np.all(tau_B > 0):
        expo = float(np.polyfit(np.log(1 / T_grid), np.log(tau_B), 1)[0])
        # polynomial growth: log-log slope stays bounded between grid halves
        half = len(T_grid) // 2
        if half >= 2:
            e1 = np.polyfit(np.log(1 / T_grid[:half + 1]), np.log(tau_B[:half + 1]), 1)[0]
            e2 = np.polyfit(np.log(1 / T_grid[half:]), np.log(tau_B[half:]), 1)[0]
            poly_b = bool(abs(e1 - e2) < 2.0 and max(e1, e2) < 20)
        else:
            poly_b = True
    details["tau_R"], details["tau_B"] = tau_R, tau_B
    return PropertyReport(
        nonnegative=nonneg, vanishing_ends=bool(ends), bounded_c0=bool(ok_c0), polynomial_tau_B=poly_b,
        bounded_tau_R=bounded_r, tau_R_min=float(np.min(tau_R)) if bounded_r else np.nan,
        tau_R_max=float(np.max(tau_R)) if bounded_r else np.nan, tau_B_exponent=expo, details=details,
    )


@dataclass
class SubBathReport:
    ok: bool
    psd: bool
    dominated: bool
    tau_ok: bool
    offending_omega: float | None = None
    message: str = ""


def sub_bath_check(j_sub: MatrixSpectralDensity, f: ScalarSpectralDensity, b: float, T_grid, grid=None,
                   rtol: float = 1e-9) -> SubBathReport:
    """Check the sub-bath conditions for constraint factor ``b`` on sampled grids."""
    grid = default_omega_grid(f.scale_frequency) if grid is None else grid
    for w in grid:
        jw = j_sub(w)
        lo = np.linalg.eigvalsh(0.5 * (jw + jw.conj().T))[0]
        if lo < -1e-10:
            return SubBathReport(False, False, False, False, float(w), f"J_sub not PSD at w={w:.6g} (min eig {lo:.3e})")
    for w in grid:
        if np.linalg.norm(j_sub(w), 2) > b * float(f(w)) * (1 + rtol) + 1e-300:
            return SubBathReport(False, True, False, False, float(w), f"||J_sub|| exceeds b*J at w={w:.6g}")
    for T in np.asarray(T_grid, dtype=float):
        rs, bs = timescales(float(T), j_sub)
        rf, bf = timescales(float(T), f)
        if rs < rf / b * (1 - 1e-6) or bs > b * bf * (1 + 1e-6):
            return SubBathReport(False, True, True, False, None, f"timescale constraint fails at T={T:.6g}")
    return SubBathReport(True, True, True, True)
