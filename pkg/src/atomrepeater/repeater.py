"""Repeater-chain rates and memory storage times.

Time advances in cycles of length L0/c_f + tau. In every cycle each
unentangled elementary link attempts entanglement and succeeds with p_e.
Adjacent entangled segments are swapped in the same cycle with success
probability p_es. Two strategies differ in what a failed swap destroys:

* restart: swaps wait until all links are entangled; any failure resets all;
* keep: swaps happen as soon as possible; a failure resets only the two
  segments it consumed.

The Monte Carlo is vectorized over runs and jumps between cycles in which
something happens, drawing geometric waiting times for link generation.
"""
from __future__ import annotations

from dataclasses import dataclass, replace
from math import comb

import numpy as np
from scipy.optimize import brentq

BLOCK = 65_536  # runs per random stream


@dataclass(frozen=True)
class LinkParams:
    """Elementary-link parameters; lengths in km, speeds in km/s, tau in s."""

    L0: float = 50.0
    L_a: float = 22.0
    c_f: float = 2e5
    tau: float = 100e-6
    p_ht: float = 0.53
    eta_h: float = 0.8
    eta_t: float = 0.8
    R: float = 0.61
    p_p: float = 0.8

    def __post_init__(self):
        for name in ("p_ht", "eta_h", "eta_t", "R", "p_p"):
            v = getattr(self, name)
            if not 0 <= v <= 1:
                raise ValueError(f"{name} = {v} must lie in [0, 1]")
        if self.L0 < 0:
            raise ValueError("L0 must be >= 0")
        if not (self.L_a > 0 and self.c_f > 0 and self.tau > 0):
            raise ValueError("L_a, c_f and tau must be positive")

    @property
    def cycle_time(self):
        return self.L0 / self.c_f + self.tau

    def for_distance(self, L, N):
        return replace(self, L0=L / N)


def p_e(params):
    """Elementary-link success probability per attempt (photonic BSM accepts 2 of 4 Bell states)."""
    return 0.5 * (params.p_ht * params.eta_h * params.eta_t) ** 2 * np.exp(-params.L0 / params.L_a)


def p_es(params):
    """Success probability of one atomic entanglement swap."""
    return params.R * params.p_p * params.eta_h


def z_n(N, p):
    """Mean number of attempts until all of N independent geometric processes succeeded."""
    if N < 1:
        raise ValueError("N must be >= 1")
    if not 0 < p <= 1:
        raise ValueError("p must lie in (0, 1]")
    if p == 1:
        return 1.0
    lq = np.log1p(-p)
    terms = [comb(N, j) * (-1) ** (j + 1) / -np.expm1(j * lq) for j in range(1, N + 1)]
    # sum smallest magnitudes first
    return float(np.sum(sorted(terms, key=abs)))


def attempts_restart(N, pe, pes):
    return z_n(N, pe) / pes ** (N - 1)


def storage_restart(N, pe):
    """Expected storage cycles, Z_{N-1}(p_e) + 1."""
    if N < 2:
        raise ValueError("storage needs N >= 2")
    return z_n(N - 1, pe) + 1


def avg_time(n, params):
    """(mean time [s], rate [1/s]) for ``n`` expected cycles."""
    T = n * params.cycle_time
    return T, 1 / T


def _check_n(N):
    if N < 1 or N & (N - 1):
        raise ValueError("N must be a power of two")


def _geom(rng, p, size):
    return rng.geometric(p, size=size).astype(np.int64)


def _segment_bounds(joined):
    """Leftmost and rightmost link index of the segment containing each link."""
    runs, N1 = joined.shape
    N = N1 + 1
    left = np.zeros((runs, N), np.int64)
    right = np.zeros((runs, N), np.int64)
    left[:, 0] = 0
    for k in range(1, N):
        left[:, k] = np.where(joined[:, k - 1], left[:, k - 1], k)
    right[:, N - 1] = N - 1
    for k in range(N - 2, -1, -1):
        right[:, k] = np.where(joined[:, k], right[:, k + 1], k)
    return left, right


def _seg_ready(ready, lo, hi):
    """Per-run max of ready over links lo..hi (inclusive)."""
    N = ready.shape[1]
    idx = np.arange(N)[None, :]
    mask = (idx >= lo[:, None]) & (idx <= hi[:, None])
    return np.where(mask, ready, -1).max(axis=1)


def _tree_span(N):
    """Half-width of the sub-chains each boundary joins in a balanced swap tree."""
    b = np.arange(1, N)
    return b & -b


def _simulate_block(N, pe, pes, strategy, runs, rng, order="left", topology="tree"):
    ready = _geom(rng, pe, (runs, N))
    joined = np.zeros((runs, max(N - 1, 0)), bool)
    t_done = np.zeros(runs, np.int64)
    first = np.zeros(runs, np.int64)
    if N == 1:
        t_done[:] = ready[:, 0]
        first[:] = ready[:, 0]
        return t_done, first
    active = np.ones(runs, bool)
    nodes = range(N - 1) if order == "left" else range(N - 2, -1, -1)
    span = _tree_span(N)
    while active.any():
        a = np.nonzero(active)[0]
        r, jn = ready[a], joined[a]
        if strategy == "restart":
            t = r.max(axis=1)
            ok = rng.random(a.size) < pes ** (N - 1)
            done = a[ok]
            t_done[done] = t[ok]
            first[done] = r[ok].min(axis=1)
            fail = a[~ok]
            ready[fail] = t[~ok, None] + _geom(rng, pe, (fail.size, N))
            active[done] = False
            continue
        # keep: next cycle in which some unjoined node has both sides ready
        left, right = _segment_bounds(jn)
        seg_max = np.empty_like(r)
        for k in range(N):
            seg_max[:, k] = _seg_ready(r, left[:, k], right[:, k])
        elig = np.maximum(seg_max[:, :-1], seg_max[:, 1:])
        blocked = jn
        if topology == "tree":
            # a boundary swaps only once both of its sub-chains are complete
            b = np.arange(1, N)[None, :]
            blocked = jn | (left[:, :-1] != b - span) | (right[:, 1:] != b + span - 1)
        elig = np.where(blocked, np.iinfo(np.int64).max, elig)
        t = elig.min(axis=1)
        for j in nodes:
            left, right = _segment_bounds(jn)
            lo_l, hi_l = left[:, j], right[:, j]
            lo_r, hi_r = left[:, j + 1], right[:, j + 1]
            can = ~jn[:, j] & (_seg_ready(r, lo_l, hi_l) <= t) & (_seg_ready(r, lo_r, hi_r) <= t)
            if topology == "tree":
                can &= (lo_l == j + 1 - span[j]) & (hi_r == j + span[j])
            if not can.any():
                continue
            ok = rng.random(a.size) < pes
            win = can & ok
            jn[win, j] = True
            lose = np.nonzero(can & ~ok)[0]
            if lose.size:
                idx = np.arange(N)[None, :]
                reset = (idx >= lo_l[lose, None]) & (idx <= hi_r[lose, None])
                fresh = t[lose, None] + _geom(rng, pe, (lose.size, N))
                r[lose] = np.where(reset, fresh, r[lose])
                nidx = np.arange(N - 1)[None, :]
                jn[lose] &= ~((nidx >= lo_l[lose, None]) & (nidx < hi_r[lose, None]))
        ready[a], joined[a] = r, jn
        fin = jn.all(axis=1)
        done = a[fin]
        t_done[done] = t[fin]
        first[done] = r[fin].min(axis=1)
        active[done] = False
    return t_done, first


def simulate(N, pe, pes, strategy, runs, seed, order="left", topology="tree"):
    """Per-run (completion cycle, creation cycle of the oldest surviving link).

    Runs are split into fixed blocks of 65536, each with its own random stream
    derived from (seed, block index), so results do not depend on how the
    caller batches work.
    """
    _check_n(N)
    if strategy not in ("keep", "restart"):
        raise ValueError("strategy must be 'keep' or 'restart'")
    if runs < 1:
        raise ValueError("runs must be >= 1")
    if not (0 < pe <= 1 and 0 <= pes <= 1):
        raise ValueError("probabilities out of range")
    if N > 1 and pes == 0:
        raise ValueError("p_es = 0: the chain never completes")
    n_out = np.empty(runs, np.int64)
    f_out = np.empty(runs, np.int64)
    for b, start in enumerate(range(0, runs, BLOCK)):
        size = min(BLOCK, runs - start)
        rng = np.random.default_rng(np.random.SeedSequence(seed, spawn_key=(b,)))
        n_out[start:start + size], f_out[start:start + size] = _simulate_block(N, pe, pes, strategy, size, rng, order, topology)
    return n_out, f_out


def bootstrap_mean_ci(values, n_boot=1000, seed=0, level=0.95):
    """Percentile bootstrap CI of the mean of integer-valued samples.

    Resampling is done on the value histogram with multinomial draws, which
    is equivalent to resampling individual runs.
    """
    values = np.asarray(values, np.int64)
    uniq, counts = np.unique(values, return_counts=True)
    rng = np.random.default_rng(np.random.SeedSequence(seed, spawn_key=(2**31,)))
    draws = rng.multinomial(values.size, counts / values.size, size=n_boot)
    means = draws @ uniq / values.size
    a = (1 - level) / 2
    return float(np.quantile(means, a)), float(np.quantile(means, 1 - a))


@dataclass
class RateReport:
    p_e: float
    p_es: float
    attempts: float
    attempts_ci: tuple
    time: float
    rate: float


@dataclass
class StorageReport:
    cycles: float
    cycles_ci: tuple
    time: float
    time_ci: tuple


def attempts_keep(N, pe, pes, runs, seed, n_boot=1000):
    """(mean cycles, bootstrap CI) for the keep strategy."""
    n, _ = simulate(N, pe, pes, "keep", runs, seed)
    return float(n.mean()), bootstrap_mean_ci(n, n_boot, seed)


def storage_keep(N, pe, pes, runs, seed, n_boot=1000):
    if N < 2:
        raise ValueError("storage needs N >= 2")
    n, f = simulate(N, pe, pes, "keep", runs, seed)
    m = n - f + 1
    return float(m.mean()), bootstrap_mean_ci(m, n_boot, seed)


def rate_report(params, N, strategy="restart", runs=None, seed=None):
    """Expected cycles, time and rate for a chain of N links of length params.L0.

    Restart uses the closed form; keep needs ``runs`` and ``seed`` for Monte Carlo.
    """
    _check_n(N)
    pe, pes = p_e(params), p_es(params)
    if N == 1 or strategy == "restart":
        n = attempts_restart(N, pe, pes)
        ci = (n, n)
    elif strategy == "keep":
        if runs is None or seed is None:
            raise ValueError("the keep strategy needs runs and seed")
        n, ci = attempts_keep(N, pe, pes, runs, seed)
    else:
        raise ValueError("strategy must be 'keep' or 'restart'")
    T, rate = avg_time(n, params)
    return RateReport(pe, pes, n, ci, T, rate)


def storage_report(params, N, strategy="restart", runs=None, seed=None):
    pe, pes = p_e(params), p_es(params)
    if strategy == "restart" and runs is None:
        m = storage_restart(N, pe)
        ci = (m, m)
    else:
        if runs is None or seed is None:
            raise ValueError("Monte Carlo storage needs runs and seed")
        if strategy == "restart":
            n, f = simulate(N, pe, pes, "restart", runs, seed)
            mm = n - f + 1
            m, ci = float(mm.mean()), bootstrap_mean_ci(mm, 1000, seed)
        else:
            m, ci = storage_keep(N, pe, pes, runs, seed)
    ct = params.cycle_time
    return StorageReport(m, ci, m * ct, (ci[0] * ct, ci[1] * ct))


def rate_vs_distance(L_grid, scenarios, params=None, runs=None, seed=None):
    """Rows (L, {label: rate}) for scenarios given as (label, N, strategy)."""
    params = params or LinkParams()
    rows = []
    for L in L_grid:
        rates = {}
        for label, N, strategy in scenarios:
            rates[label] = rate_report(params.for_distance(L, N), N, strategy, runs, seed).rate
        rows.append((float(L), rates))
    return rows


def break_even(L_lo, L_hi, rate_a, rate_b, tol=1e-3):
    """Distance in [L_lo, L_hi] where rate_a(L) = rate_b(L)."""
    f = lambda L: np.log(rate_a(L)) - np.log(rate_b(L))  # noqa: E731
    if np.sign(f(L_lo)) == np.sign(f(L_hi)):
        raise ValueError("no crossing in the interval")
    return float(brentq(f, L_lo, L_hi, xtol=tol))


def brute_force_zn(N, p, runs, seed):
    """(mean, standard error) of the max of N geometric variables."""
    rng = np.random.default_rng(seed)
    x = rng.geometric(p, size=(runs, N)).max(axis=1)
    return float(x.mean()), float(x.std(ddof=1) / np.sqrt(runs))
