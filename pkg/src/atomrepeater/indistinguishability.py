"""Telecom-photon indistinguishability from (herald, telecom) arrival-time pairs.

A 2D Gaussian kernel density estimate gives the joint arrival density. Each
herald time selects a conditional telecom envelope; two remote photons with
herald times t1, t2 interfere with contrast (int sqrt(p1 p2) dt)^2, assuming
transform-limited wave packets with flat phase.
"""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

GRID_STEP = 0.25e-9
MIN_SAMPLES = 100


class SampleError(ValueError):
    pass


@dataclass(frozen=True)
class KdeEstimate:
    """Joint density on a regular grid; rows are herald times, columns telecom times."""

    t_herald: np.ndarray
    t_telecom: np.ndarray
    density: np.ndarray
    sigma_herald: float
    sigma_telecom: float

    @property
    def dh(self):
        return self.t_herald[1] - self.t_herald[0]

    @property
    def dt(self):
        return self.t_telecom[1] - self.t_telecom[0]

    def total(self):
        return float(self.density.sum() * self.dh * self.dt)

    def herald_marginal(self):
        return self.density.sum(axis=1) * self.dt

    def telecom_marginal(self):
        return self.density.sum(axis=0) * self.dh

    @classmethod
    def from_density(cls, t_herald, t_telecom, density, sigma_herald=0.0, sigma_telecom=0.0):
        """Wrap an arbitrary nonnegative joint density (normalized on the grid)."""
        t_herald, t_telecom = np.asarray(t_herald, float), np.asarray(t_telecom, float)
        d = np.asarray(density, float)
        if d.shape != (t_herald.size, t_telecom.size):
            raise ValueError("density shape must be (len(t_herald), len(t_telecom))")
        if np.any(d < 0):
            raise ValueError("density must be nonnegative")
        norm = d.sum() * (t_herald[1] - t_herald[0]) * (t_telecom[1] - t_telecom[0])
        if not norm > 0:
            raise ValueError("density integrates to zero")
        return cls(t_herald, t_telecom, d / norm, sigma_herald, sigma_telecom)


def _gauss_rows(grid, centres, sigma):
    z = (grid[None, :] - centres[:, None]) / sigma
    return np.exp(-0.5 * z * z) / (np.sqrt(2 * np.pi) * sigma)


def _as_pairs(samples):
    if hasattr(samples, "pairs"):
        return samples.pairs()
    t_h, t_t = samples
    return np.asarray(t_h, float), np.asarray(t_t, float)


def kde2d(samples, kappa_t, kappa_h, window=None, step=GRID_STEP, min_samples=MIN_SAMPLES):
    """Gaussian KDE with temporal kernel widths 1/(6 kappa_t) and 1/(6 kappa_h).

    Parameters
    ----------
    samples : ArrivalSampleSet or (t_herald, t_telecom) arrays [s]
    kappa_t, kappa_h : float
        Total field decay rates of the entangling and heralding cavities [rad/s].
    window : (t0, t1), optional
        Grid extent; defaults to the sample range padded by four kernel widths.
    """
    t_h, t_t = _as_pairs(samples)
    if t_h.size != t_t.size:
        raise SampleError("herald and telecom samples differ in length")
    if t_h.size < min_samples:
        raise SampleError(f"need at least {min_samples} heralded samples, got {t_h.size}")
    if np.ptp(t_h) == 0 and np.ptp(t_t) == 0:
        raise SampleError("all samples are identical")
    s_t, s_h = 1 / (6 * kappa_t), 1 / (6 * kappa_h)
    if window is None:
        lo = min(t_h.min() - 4 * s_h, t_t.min() - 4 * s_t)
        hi = max(t_h.max() + 4 * s_h, t_t.max() + 4 * s_t)
        window = (max(0.0, lo), hi)
    grid = np.arange(window[0], window[1] + 0.5 * step, step)
    a_h = _gauss_rows(grid, t_h, s_h)
    a_t = _gauss_rows(grid, t_t, s_t)
    density = a_h.T @ a_t / t_h.size
    return KdeEstimate.from_density(grid, grid, density, s_h, s_t)


def conditional_envelope(kde, t_h):
    """Telecom-time density given a herald at ``t_h``, normalized on the grid."""
    th = kde.t_herald
    if not th[0] <= t_h <= th[-1]:
        raise ValueError("herald time outside the grid")
    marg = kde.herald_marginal()
    k = np.clip(np.searchsorted(th, t_h) - 1, 0, th.size - 2)
    w = (t_h - th[k]) / (th[k + 1] - th[k])
    row = (1 - w) * kde.density[k] + w * kde.density[k + 1]
    if (1 - w) * marg[k] + w * marg[k + 1] <= 1e-12 * marg.max():
        raise ValueError("herald time outside the support of the density")
    return row / (row.sum() * kde.dt)


def pair_contrast(p1, p2, dt):
    """Two-photon interference contrast of two normalized envelopes on a common grid."""
    overlap = np.sum(np.sqrt(np.clip(p1, 0, None) * np.clip(p2, 0, None))) * dt
    return float(min(1.0, overlap**2))


def _support(kde, rel=1e-12):
    p = kde.herald_marginal()
    keep = p > rel * p.max()
    return keep, p


def contrast_matrix(kde):
    """Herald-time weights and the pairwise contrast between their conditional envelopes."""
    keep, p = _support(kde)
    rows = kde.density[keep]
    env = rows / (rows.sum(axis=1, keepdims=True) * kde.dt)
    amp = np.sqrt(env)
    overlap = np.clip(amp @ amp.T * kde.dt, 0, 1)
    weights = p[keep] / (p[keep].sum() * kde.dh)
    return kde.t_herald[keep], weights, overlap**2


def average_contrast(kde):
    """C = double integral of P(t1) P(t2) c(t1, t2) over the herald marginal P."""
    _, w, c = contrast_matrix(kde)
    return float(w @ c @ w * kde.dh**2)


def fidelity_from_contrast(C):
    if not 0 <= C <= 1:
        raise ValueError("contrast must lie in [0, 1]")
    return (1 + C) / 2


def postselect_tradeoff(kde, windows):
    """(window, C restricted to |t1 - t2| <= window, retained fraction) per window [s]."""
    t, w, c = contrast_matrix(kde)
    sep = np.abs(t[:, None] - t[None, :])
    pp = np.outer(w, w) * kde.dh**2
    out = []
    for win in windows:
        if not win > 0:
            raise ValueError("windows must be positive")
        mask = sep <= win + 1e-9 * kde.dh
        kept = pp[mask].sum()
        out.append((float(win), float((pp * c)[mask].sum() / kept), float(kept)))
    return out


@dataclass
class ContrastReport:
    C: float
    F: float
    envelopes: dict = field(default_factory=dict)
    postselection: list = field(default_factory=list)
    C_stderr: float = float("nan")


def bootstrap_contrast(samples, kappa_t, kappa_h, n_boot=30, seed=0, window=None):
    """Standard deviation of C over bootstrap resamples of the arrival pairs."""
    t_h, t_t = _as_pairs(samples)
    rng = np.random.default_rng(seed)
    vals = []
    for _ in range(n_boot):
        idx = rng.integers(0, t_h.size, t_h.size)
        vals.append(average_contrast(kde2d((t_h[idx], t_t[idx]), kappa_t, kappa_h, window)))
    return float(np.std(vals, ddof=1))


def contrast_report(samples, kappa_t, kappa_h, herald_times=(), windows=(), n_boot=0, seed=0):
    kde = kde2d(samples, kappa_t, kappa_h)
    C = average_contrast(kde)
    env = {float(t): conditional_envelope(kde, t) for t in herald_times}
    report = ContrastReport(C, fidelity_from_contrast(C), env, postselect_tradeoff(kde, windows) if windows else [])
    if n_boot:
        report.C_stderr = bootstrap_contrast(samples, kappa_t, kappa_h, n_boot, seed, (kde.t_herald[0], kde.t_herald[-1]))
    return report
