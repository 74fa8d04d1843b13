"""
Gaussian stabilization, energy filters and delta-stationary states.

Averaging the unitary evolution ``e^{-iHt} rho e^{iHt}`` over a Gaussian time
``t ~ N(0, sigma^2)`` multiplies the coherence between levels i and j by
``exp(-sigma^2 (E_i - E_j)^2 / 2)``. The same channel is produced by the
Gaussian energy filters G_sigma(x) integrated over x, which is the starting
point for building a delta-stationary approximation of the dephased state.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .core import SpectralData

MC_TRUNCATION = 10.0  # |t| > 10 sigma draws are redrawn
DEFAULT_X_POINTS = 4096


def _level_energies(sd: SpectralData) -> np.ndarray:
    """Energy of every eigenvector column."""
    return sd.energies[sd.level_of]


def dephasing_factors(sd: SpectralData, sigma: float) -> np.ndarray:
    """Matrix of ``exp(-sigma^2 (E_i - E_j)^2 / 2)`` in the eigenbasis."""
    if sigma < 0:
        raise ValueError("sigma must be non-negative")
    e = _level_energies(sd)
    diff = e[:, None] - e[None, :]
    same = sd.level_of[:, None] == sd.level_of[None, :]
    with np.errstate(over="ignore", under="ignore"):
        fac = np.exp(-0.5 * sigma ** 2 * diff ** 2)
    # exact 1 inside a level even when sigma is huge
    return np.where(same, 1.0, fac)


def gaussian_stabilize(rho, sigma: float, sd: SpectralData, mode: str = "analytic",
                       n_samples: int = 1000, rng: np.random.Generator | None = None) -> np.ndarray:
    """Gaussian stabilization channel.

    Parameters
    ----------
    mode : {"analytic", "monte-carlo"}
        ``analytic`` applies the exact dephasing factors. ``monte-carlo``
        averages ``e^{-iHt} rho e^{iHt}`` over ``n_samples`` Gaussian times
        drawn from ``rng`` (truncated at 10 sigma).
    """
    if sigma < 0:
        raise ValueError("sigma must be non-negative")
    rho_e = sd.to_eigenbasis(np.asarray(rho, dtype=complex))
    if mode == "analytic":
        out = rho_e * dephasing_factors(sd, sigma)
    elif mode == "monte-carlo":
        if rng is None:
            raise ValueError("monte-carlo mode needs an explicit random generator")
        ts = rng.normal(0.0, sigma, size=n_samples)
        bad = np.abs(ts) > MC_TRUNCATION * sigma
        while np.any(bad):
            ts[bad] = rng.normal(0.0, sigma, size=int(bad.sum()))
            bad = np.abs(ts) > MC_TRUNCATION * sigma
        e = _level_energies(sd)
        diff = e[:, None] - e[None, :]
        phase = np.mean(np.exp(-1j * np.multiply.outer(ts, diff)), axis=0)
        out = rho_e * phase
    else:
        raise ValueError(f"unknown mode {mode!r}")
    return sd.from_eigenbasis(out)


def full_dephasing(rho, sd: SpectralData) -> np.ndarray:
    """``sum_m P_m rho P_m``."""
    rho = np.asarray(rho, dtype=complex)
    return sum(p @ rho @ p for p in sd.projectors)


# --- filters --------------------------------------------------------------------


def gaussian_filter_weights(x, sigma: float, sd: SpectralData) -> np.ndarray:
    """Per-eigenvector weights ``(sqrt(2) sigma / sqrt(pi))^{1/2} e^{-sigma^2 (E - x)^2}``."""
    if sigma <= 0:
        raise ValueError("sigma must be positive")
    e = _level_energies(sd)
    x = np.asarray(x, dtype=float)
    norm = np.sqrt(np.sqrt(2.0) * sigma / np.sqrt(np.pi))
    return norm * np.exp(-sigma ** 2 * (e - x[..., None]) ** 2)


def window_indicator(x, delta: float, sd: SpectralData) -> np.ndarray:
    """1 where the eigenvalue lies in the half-open window (x - delta, x + delta]."""
    if delta <= 0:
        raise ValueError("delta must be positive")
    e = _level_energies(sd)
    x = np.asarray(x, dtype=float)[..., None]
    return ((e > x - delta) & (e <= x + delta)).astype(float)


def gaussian_filter(x: float, sigma: float, sd: SpectralData) -> np.ndarray:
    w = gaussian_filter_weights(x, sigma, sd)
    return sd.from_eigenbasis(np.diag(w).astype(complex))


def rectangular_filter(x: float, delta: float, sd: SpectralData) -> np.ndarray:
    f = window_indicator(x, delta, sd)
    return sd.from_eigenbasis(np.diag(f).astype(complex))


# --- delta-stationary states -------------------------------------------------------


@dataclass
class DeltaStationaryState:
    """Mixture ``int p(x) rho'(x) dx`` of states confined to windows of half-width delta.

    Stored in the eigenbasis of H: for grid point x the component is
    ``rho'(x)_ij = rho_ij f_i f_j w_i w_j / q(x)``, with window indicators f,
    Gaussian filter weights w and ``q(x) = sum_i rho_ii f_i w_i^2``.
    """

    sd: SpectralData
    rho_eig: np.ndarray  # input state in the eigenbasis
    sigma: float
    delta: float
    x: np.ndarray  # retained grid points
    dx: float
    p: np.ndarray  # density on the retained points, sum p * dx = 1
    weights: np.ndarray  # (n_x, d) products f_i w_i
    q: np.ndarray

    def component(self, k: int) -> np.ndarray:
        """rho'(x_k) in the computational basis."""
        fw = self.weights[k]
        comp = self.rho_eig * np.outer(fw, fw) / self.q[k]
        return self.sd.from_eigenbasis(comp)

    def component_eig(self, k: int) -> np.ndarray:
        fw = self.weights[k]
        return self.rho_eig * np.outer(fw, fw) / self.q[k]

    @property
    def normalization(self) -> float:
        return float(np.sum(self.p) * self.dx)

    def assembled(self) -> np.ndarray:
        """``rho_s = int p(x) rho'(x) dx`` in the computational basis."""
        kern = np.einsum("k,ki,kj->ij", self.p * self.dx / self.q, self.weights, self.weights)
        return self.sd.from_eigenbasis(self.rho_eig * kern)

    def aggregate_eig(self, mask) -> np.ndarray:
        """``sum_{k in mask} p_k dx rho'(x_k)`` in the eigenbasis."""
        c = (self.p * self.dx / self.q)[mask]
        w = self.weights[mask]
        kern = np.einsum("k,ki,kj->ij", c, w, w)
        return self.rho_eig * kern


def delta_stationary_from(rho, sigma: float, delta: float, sd: SpectralData, x_grid=None,
                          n_points: int = DEFAULT_X_POINTS, q_floor: float = 1e-14) -> DeltaStationaryState:
    """Construct the delta-stationary state obtained by filtering ``rho``.

    ``q(x) = Tr[F G rho G F]`` sets the mixing density and ``rho'(x)`` the
    normalized filtered states; grid points with ``q < q_floor`` are skipped.
    """
    if sigma <= 0 or delta <= 0:
        raise ValueError("sigma and delta must be positive")
    h = sd.norm
    if x_grid is None:
        x_grid = np.linspace(-h - delta, h + delta, n_points)
    x_grid = np.asarray(x_grid, dtype=float)
    if x_grid[0] > -h - delta + 1e-12 or x_grid[-1] < h + delta - 1e-12:
        raise ValueError("x grid must cover [-||H|| - delta, ||H|| + delta]")
    dx = float(x_grid[1] - x_grid[0])
    rho_e = sd.to_eigenbasis(np.asarray(rho, dtype=complex))
    fw = window_indicator(x_grid, delta, sd) * gaussian_filter_weights(x_grid, sigma, sd)
    q = fw ** 2 @ np.real(np.diag(rho_e))
    keep = q >= q_floor
    if not np.any(keep):
        raise RuntimeError("every filter window annihilates the state")
    total = np.sum(q[keep]) * dx
    return DeltaStationaryState(
        sd=sd, rho_eig=rho_e, sigma=sigma, delta=delta, x=x_grid[keep], dx=dx,
        p=q[keep] / total, weights=fw[keep], q=q[keep],
    )


def lemma3_bound(sigma: float, delta: float, h: float) -> float:
    """``8 sqrt(2) sigma (h + delta) / sqrt(pi) e^{-sigma^2 delta^2} + 2 e^{-2 sigma^2 delta^2}``."""
    if sigma <= 0 or delta <= 0 or h < 0:
        raise ValueError("need sigma, delta > 0 and h >= 0")
    a = (sigma * delta) ** 2
    return float(8 * np.sqrt(2) * sigma * (h + delta) / np.sqrt(np.pi) * np.exp(-a) + 2 * np.exp(-2 * a))
