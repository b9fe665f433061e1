"""Open-system dynamics: Lindblad master equation and quantum-jump trajectories.

All rates and Hamiltonians are in angular-frequency units (rad/s) and times
in seconds. Collapse operators already contain the square root of their rate.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from math import prod
from typing import Callable, Sequence

import numpy as np
from scipy.integrate import solve_ivp
from scipy.linalg import expm

__all__ = [
    "DimensionError",
    "IntegrationError",
    "NonFiniteStateError",
    "HilbertSpace",
    "QuantumState",
    "TimeDependentHamiltonian",
    "LindbladModel",
    "TrajectoryRecord",
    "EnsembleSummary",
    "evolve_master",
    "evolve_no_jump",
    "expectation",
    "run_trajectory",
    "batch_trajectories",
    "trajectory_stream",
]


class DimensionError(ValueError):
    """Operator or state does not match the Hilbert space."""


class IntegrationError(RuntimeError):
    """The ODE integrator failed; ``time`` is where it stopped."""

    def __init__(self, message, time):
        super().__init__(f"{message} (at t = {time:.6e} s)")
        self.time = time


class NonFiniteStateError(FloatingPointError):
    """A state vector acquired NaN or inf entries."""


@dataclass(frozen=True)
class HilbertSpace:
    """Ordered tensor product of labelled factors.

    Parameters
    ----------
    factors : sequence of (label, dimension)
    """

    factors: tuple[tuple[str, int], ...]

    def __post_init__(self):
        factors = tuple((str(lab), int(d)) for lab, d in self.factors)
        labels = [lab for lab, _ in factors]
        if len(set(labels)) != len(labels):
            raise ValueError(f"factor labels must be unique: {labels}")
        if any(d < 1 for _, d in factors):
            raise ValueError("every factor dimension must be >= 1")
        object.__setattr__(self, "factors", factors)

    @property
    def labels(self):
        return tuple(lab for lab, _ in self.factors)

    @property
    def dims(self):
        return tuple(d for _, d in self.factors)

    @property
    def dim(self):
        return prod(self.dims)

    def position(self, label):
        try:
            return self.labels.index(label)
        except ValueError:
            raise KeyError(f"no factor named {label!r}") from None

    def embed(self, label, local):
        """Lift an operator acting on one factor to the full space."""
        pos = self.position(label)
        local = np.asarray(local, dtype=complex)
        if local.shape != (self.dims[pos],) * 2:
            raise DimensionError(
                f"operator for {label!r} must be {self.dims[pos]}x{self.dims[pos]}, got {local.shape}"
            )
        out = np.ones((1, 1), dtype=complex)
        for i, d in enumerate(self.dims):
            out = np.kron(out, local if i == pos else np.eye(d))
        return out

    def basis_index(self, **levels):
        """Flat index of a product basis state; unspecified factors are 0."""
        unknown = set(levels) - set(self.labels)
        if unknown:
            raise KeyError(f"unknown factors {sorted(unknown)}")
        idx = tuple(int(levels.get(lab, 0)) for lab in self.labels)
        return int(np.ravel_multi_index(idx, self.dims))

    def ket(self, **levels):
        vec = np.zeros(self.dim, dtype=complex)
        vec[self.basis_index(**levels)] = 1.0
        return QuantumState(self, vec)

    def check_operator(self, op, what="operator"):
        op = np.asarray(op)
        if op.shape != (self.dim, self.dim):
            raise DimensionError(f"{what} has shape {op.shape}, space dimension is {self.dim}")
        return op


@dataclass(frozen=True)
class QuantumState:
    """A pure state vector or a density operator on ``space``."""

    space: HilbertSpace
    data: np.ndarray

    def __post_init__(self):
        data = np.asarray(self.data, dtype=complex)
        d = self.space.dim
        if data.shape not in ((d,), (d, d)):
            raise DimensionError(f"state shape {data.shape} incompatible with dimension {d}")
        if not np.all(np.isfinite(data)):
            raise NonFiniteStateError("state has non-finite entries")
        object.__setattr__(self, "data", data)

    @property
    def is_pure(self):
        return self.data.ndim == 1

    def density(self):
        if self.is_pure:
            return np.outer(self.data, self.data.conj())
        return self.data

    def validate(self, tol=1e-9, eig_tol=1e-8):
        """Raise ValueError unless the state is normalized (and positive)."""
        if self.is_pure:
            norm = np.linalg.norm(self.data)
            if abs(norm - 1) > tol:
                raise ValueError(f"state vector norm {norm} deviates from 1")
            return self
        rho = self.data
        if np.max(np.abs(rho - rho.conj().T)) > tol:
            raise ValueError("density operator is not Hermitian")
        tr = np.trace(rho).real
        if abs(tr - 1) > tol:
            raise ValueError(f"density operator trace {tr} deviates from 1")
        if np.linalg.eigvalsh(rho).min() < -eig_tol:
            raise ValueError("density operator has negative eigenvalues")
        return self

    def populations(self):
        if self.is_pure:
            return np.abs(self.data) ** 2
        return np.real(np.diag(self.data))


class TimeDependentHamiltonian:
    """``H(t) = static + sum_j f_j(t) * H_j`` as a callable."""

    def __init__(self, static, terms=()):
        self.static = np.asarray(static, dtype=complex)
        self.terms = tuple((f, np.asarray(op, dtype=complex)) for f, op in terms)

    def __call__(self, t):
        h = self.static.copy()
        for f, op in self.terms:
            c = f(t)
            if c != 0:
                h += c * op
        return h


@dataclass(frozen=True)
class LindbladModel:
    """Hamiltonian plus labelled collapse channels on one Hilbert space.

    ``max_step`` bounds integrator and trajectory step sizes; it must resolve
    the fastest time dependence of the Hamiltonian (e.g. a short pulse).
    """

    space: HilbertSpace
    hamiltonian: Callable[[float], np.ndarray]
    collapse: tuple[tuple[str, np.ndarray], ...] = ()
    max_step: float = 1e-10
    metadata: dict = field(default_factory=dict, compare=False)

    def __post_init__(self):
        coll = tuple((str(lab), np.asarray(op, dtype=complex)) for lab, op in self.collapse)
        labels = [lab for lab, _ in coll]
        if len(set(labels)) != len(labels):
            raise ValueError(f"collapse labels must be unique: {labels}")
        for lab, op in coll:
            self.space.check_operator(op, f"collapse operator {lab!r}")
        self.space.check_operator(self.hamiltonian(0.0), "Hamiltonian")
        if not self.max_step > 0:
            raise ValueError("max_step must be positive")
        object.__setattr__(self, "collapse", coll)

    @property
    def channel_labels(self):
        return tuple(lab for lab, _ in self.collapse)

    def channel_index(self, label):
        return self.channel_labels.index(label)

    def decay_operator(self):
        """Sum of C^dagger C over all channels."""
        d = self.space.dim
        k = np.zeros((d, d), dtype=complex)
        for _, c in self.collapse:
            k += c.conj().T @ c
        return k

    def effective_hamiltonian(self, t, decay=None):
        if decay is None:
            decay = self.decay_operator()
        return self.hamiltonian(t) - 0.5j * decay


def _check_grid(grid):
    grid = np.asarray(grid, dtype=float)
    if grid.ndim != 1 or grid.size < 1:
        raise ValueError("time grid must be a non-empty 1-D sequence")
    if np.any(np.diff(grid) <= 0):
        raise ValueError("time grid must be strictly increasing")
    return grid


def _same_space(model, state):
    if state.space.dim != model.space.dim or state.space.dims != model.space.dims:
        raise DimensionError("state and model live on different Hilbert spaces")


def evolve_master(model, rho0, grid, atol=1e-9, rtol=1e-7):
    """Integrate the Lindblad master equation and sample it on ``grid``.

    Parameters
    ----------
    model : LindbladModel
    rho0 : QuantumState
        Initial state at ``grid[0]``; a pure state is converted to a density operator.
    grid : array_like
        Strictly increasing output times [s].

    Returns
    -------
    list of QuantumState
        Density operators at every grid time.
    """
    _same_space(model, rho0)
    grid = _check_grid(grid)
    d = model.space.dim
    rho_init = rho0.density()
    if not np.all(np.isfinite(rho_init)):
        raise NonFiniteStateError("initial state has non-finite entries")
    if grid.size == 1:
        return [QuantumState(model.space, rho_init.copy())]

    cs = [c for _, c in model.collapse]
    cds = [c.conj().T for c in cs]
    half_k = 0.5 * model.decay_operator()

    def rhs(t, y):
        rho = y.reshape(d, d)
        h = model.hamiltonian(t)
        a = -1j * h - half_k
        out = a @ rho
        out += out.conj().T
        for c, cd in zip(cs, cds):
            out += c @ rho @ cd
        return out.ravel()

    sol = solve_ivp(
        rhs,
        (grid[0], grid[-1]),
        rho_init.astype(complex).ravel(),
        method="DOP853",
        t_eval=grid,
        atol=atol,
        rtol=rtol,
        max_step=model.max_step,
    )
    if not sol.success:
        raise IntegrationError(sol.message, sol.t[-1] if sol.t.size else grid[0])
    if not np.all(np.isfinite(sol.y)):
        raise NonFiniteStateError("master equation produced non-finite entries")
    states = []
    for col in sol.y.T:
        rho = col.reshape(d, d)
        rho = 0.5 * (rho + rho.conj().T)
        states.append(QuantumState(model.space, rho))
    return states


def expectation(op, state):
    """Expectation value ``Tr(op rho)`` (or ``<psi|op|psi>``)."""
    op = state.space.check_operator(op)
    if state.is_pure:
        return complex(np.vdot(state.data, op @ state.data))
    return complex(np.trace(op @ state.data))


# --- trajectories -----------------------------------------------------------


@dataclass(frozen=True)
class TrajectoryRecord:
    """Jumps of one quantum trajectory.

    ``jumps`` holds (time [s], channel label) pairs in increasing time order;
    ``stream`` identifies the random stream as (seed, index).
    """

    jumps: tuple[tuple[float, str], ...]
    final_state: QuantumState
    stream: tuple[int, int]

    @property
    def times(self):
        return np.array([t for t, _ in self.jumps])

    @property
    def channels(self):
        return tuple(lab for _, lab in self.jumps)


def trajectory_stream(seed, index):
    """Independent generator for trajectory ``index`` of ensemble ``seed``."""
    return np.random.default_rng(np.random.SeedSequence(int(seed), spawn_key=(int(index),)))


def _taylor_powers(h_eff, psi, dt_max, tol=1e-15, max_order=60):
    """Columns of (-i H dt_max)^n psi / n!, stopped once terms fall below tol."""
    a = -1j * dt_max * h_eff
    terms = [psi]
    term = psi
    for n in range(1, max_order + 1):
        term = (a @ term) / n
        terms.append(term)
        if np.max(np.abs(term), initial=0.0) < tol:
            break
    return terms


def _taylor_eval(terms, frac):
    """Combine Taylor terms with per-column step fraction ``frac`` in [0, 1]."""
    frac = np.asarray(frac, dtype=float)
    out = np.zeros((terms[0].shape[0], frac.size), dtype=complex)
    scale = np.ones_like(frac)
    for term in terms:
        out += term * scale
        scale = scale * frac
    return out


def _norm2(psi):
    return np.einsum("ij,ij->j", psi.conj(), psi).real


class _Unraveller:
    """Vectorised quantum-jump engine shared by single and batched runs.

    All trajectories start from the same state, so they share one no-jump
    evolution until their first jump; afterwards each is an independent column.
    Within a step the Hamiltonian is frozen at the step midpoint; the step
    propagator is an exact matrix exponential and jump times are found by
    bisection on a Taylor expansion inside the step.
    """

    def __init__(self, model, interval, time_tol=1e-12):
        self.model = model
        t0, t1 = map(float, interval)
        if not t1 > t0:
            raise ValueError("interval must satisfy t1 > t0")
        self.t0, self.t1 = t0, t1
        self.n_steps = max(1, int(np.ceil((t1 - t0) / model.max_step - 1e-9)))
        self.dt = (t1 - t0) / self.n_steps
        self.decay = model.decay_operator()
        self.c_stack = np.array([c for _, c in model.collapse]) if model.collapse else None
        self.n_bisect = max(1, int(np.ceil(np.log2(self.dt / time_tol))))

    def _draw_channel(self, psi, u):
        amps = self.c_stack @ psi
        weights = np.einsum("cj,cj->c", amps.conj(), amps).real
        total = weights.sum()
        if not total > 0:
            return None, psi
        ch = int(np.searchsorted(np.cumsum(weights) / total, u, side="right"))
        ch = min(ch, len(weights) - 1)
        new = amps[ch] / np.sqrt(weights[ch])
        return ch, new

    def _locate(self, terms, lo, hi, r):
        """Bisection for the fraction where the column norm^2 hits r."""
        for _ in range(self.n_bisect):
            mid = 0.5 * (lo + hi)
            n_mid = _norm2(_taylor_eval(terms, mid))
            below = n_mid <= r
            hi = np.where(below, mid, hi)
            lo = np.where(below, lo, mid)
        n_lo = _norm2(_taylor_eval(terms, lo))
        n_hi = _norm2(_taylor_eval(terms, hi))
        with np.errstate(divide="ignore", invalid="ignore"):
            w = np.where(n_lo > n_hi, (n_lo - r) / (n_lo - n_hi), 1.0)
        return lo + np.clip(w, 0.0, 1.0) * (hi - lo)

    def run(self, psi0, rngs):
        model = self.model
        if not psi0.is_pure:
            raise ValueError("trajectories need a pure initial state")
        _same_space(model, psi0)
        n = len(rngs)
        d = model.space.dim
        phi = psi0.data / np.linalg.norm(psi0.data)
        jumps = [[] for _ in range(n)]
        thresholds = np.array([rng.random() for rng in rngs])

        # not-yet-jumped trajectories, ordered so the largest threshold crosses first
        pending = list(np.argsort(-thresholds, kind="stable"))
        pend_ptr = 0
        active_ids = np.zeros(0, dtype=int)
        active = np.zeros((d, 0), dtype=complex)
        active_r = np.zeros(0)
        has_channels = self.c_stack is not None

        for k in range(self.n_steps):
            t_start = self.t0 + k * self.dt
            h_eff = model.effective_hamiltonian(t_start + 0.5 * self.dt, self.decay)
            u_step = expm(-1j * self.dt * h_eff)

            new_ids, new_cols, new_t = [], [], []
            # shared no-jump state
            phi_end = u_step @ phi
            if not np.all(np.isfinite(phi_end)):
                raise NonFiniteStateError(f"non-finite state at t = {t_start:.6e} s")
            n_phi = float(_norm2(phi_end[:, None])[0])
            if has_channels and pend_ptr < n:
                crossing = []
                while pend_ptr < n and thresholds[pending[pend_ptr]] >= n_phi:
                    crossing.append(pending[pend_ptr])
                    pend_ptr += 1
                if crossing:
                    terms = _taylor_powers(h_eff, phi[:, None], self.dt)
                    r = thresholds[crossing]
                    frac = self._locate(terms, np.zeros(len(crossing)), np.ones(len(crossing)), r)
                    states = _taylor_eval(terms, frac)
                    for j, tid in enumerate(crossing):
                        new_ids.append(tid)
                        new_cols.append(states[:, j])
                        new_t.append(frac[j])
            phi = phi_end

            # independent columns
            if active.shape[1]:
                act_end = u_step @ active
                if not np.all(np.isfinite(act_end)):
                    raise NonFiniteStateError(f"non-finite state at t = {t_start:.6e} s")
                cross = _norm2(act_end) <= active_r
                if np.any(cross):
                    idx = np.flatnonzero(cross)
                    terms = _taylor_powers(h_eff, active[:, idx], self.dt)
                    frac = self._locate(terms, np.zeros(idx.size), np.ones(idx.size), active_r[idx])
                    states = _taylor_eval(terms, frac)
                    for j, col in enumerate(idx):
                        new_ids.append(active_ids[col])
                        new_cols.append(states[:, j])
                        new_t.append(frac[j])
                    keep = ~cross
                    active_ids, act_end, active_r = active_ids[keep], act_end[:, keep], active_r[keep]
                active = act_end

            # apply jumps and carry the post-jump states to the end of the step
            while new_ids:
                ids = np.array(new_ids, dtype=int)
                fracs = np.array(new_t)
                cols = np.empty((d, ids.size), dtype=complex)
                r_new = np.empty(ids.size)
                for j, tid in enumerate(ids):
                    rng = rngs[tid]
                    norm = np.linalg.norm(new_cols[j])
                    ch, post = self._draw_channel(new_cols[j] / norm, rng.random())
                    jumps[tid].append((t_start + fracs[j] * self.dt, ch))
                    cols[:, j] = post
                    r_new[j] = rng.random()
                new_ids, new_cols, new_t = [], [], []
                remaining = 1.0 - fracs
                terms = _taylor_powers(h_eff, cols, self.dt)
                ends = _taylor_eval(terms, remaining)
                again = _norm2(ends) <= r_new
                if np.any(again):
                    idx = np.flatnonzero(again)
                    sub = [t[:, idx] for t in terms]
                    f = self._locate(sub, np.zeros(idx.size), remaining[idx], r_new[idx])
                    st = _taylor_eval(sub, f)
                    for j, col in enumerate(idx):
                        new_ids.append(ids[col])
                        new_cols.append(st[:, j])
                        new_t.append(fracs[col] + f[j])
                    keep = ~again
                    ids, ends, r_new = ids[keep], ends[:, keep], r_new[keep]
                active_ids = np.concatenate([active_ids, ids])
                active = np.concatenate([active, ends], axis=1)
                active_r = np.concatenate([active_r, r_new])

        finals = np.empty((d, n), dtype=complex)
        finals[:, :] = (phi / np.sqrt(max(_norm2(phi[:, None])[0], 1e-300)))[:, None]
        if active.shape[1]:
            finals[:, active_ids] = active / np.sqrt(np.maximum(_norm2(active), 1e-300))
        return jumps, finals


def _records(model, jumps, finals, seed, start):
    labels = model.channel_labels
    out = []
    for j, jl in enumerate(jumps):
        out.append(
            TrajectoryRecord(
                jumps=tuple((float(t), labels[ch]) for t, ch in jl if ch is not None),
                final_state=QuantumState(model.space, finals[:, j]),
                stream=(int(seed), start + j),
            )
        )
    return out


def run_trajectory(model, psi0, interval, seed, index=0):
    """Simulate one quantum-jump trajectory.

    Parameters
    ----------
    model : LindbladModel
    psi0 : QuantumState
        Pure initial state.
    interval : (float, float)
        Start and end time [s].
    seed, index : int
        The random stream is ``SeedSequence(seed, spawn_key=(index,))``, so the
        result depends only on (seed, index).

    Returns
    -------
    TrajectoryRecord
    """
    eng = _Unraveller(model, interval)
    jumps, finals = eng.run(psi0, [trajectory_stream(seed, index)])
    return _records(model, jumps, finals, seed, index)[0]


@dataclass
class EnsembleSummary:
    """Per-channel statistics of a trajectory ensemble.

    ``counts[i, c]`` is the number of jumps of trajectory i through channel c.
    """

    channel_labels: tuple[str, ...]
    records: list[TrajectoryRecord]
    counts: np.ndarray

    @property
    def n(self):
        return len(self.records)

    def jump_times(self, label):
        return np.array([t for rec in self.records for t, lab in rec.jumps if lab == label])

    def mean_counts(self):
        return dict(zip(self.channel_labels, self.counts.mean(axis=0)))

    def standard_errors(self):
        if self.n < 2:
            return dict.fromkeys(self.channel_labels, np.nan)
        se = self.counts.std(axis=0, ddof=1) / np.sqrt(self.n)
        return dict(zip(self.channel_labels, se))

    def flux(self, label, bins):
        """Jump rate per trajectory [1/s] histogrammed on ``bins``."""
        hist, edges = np.histogram(self.jump_times(label), bins=bins)
        return hist / (self.n * np.diff(edges)), edges


def batch_trajectories(model, psi0, n, seed, interval, chunk_size=4096):
    """Run ``n`` trajectories with streams (seed, 0..n-1).

    Trajectories are processed in chunks; each trajectory's stream depends
    only on its index, so the outcome does not depend on ``chunk_size``.
    """
    if n < 1:
        raise ValueError("n must be >= 1")
    eng = _Unraveller(model, interval)
    records = []
    for start in range(0, n, chunk_size):
        stop = min(n, start + chunk_size)
        rngs = [trajectory_stream(seed, i) for i in range(start, stop)]
        jumps, finals = eng.run(psi0, rngs)
        records.extend(_records(model, jumps, finals, seed, start))
    labels = model.channel_labels
    counts = np.zeros((n, len(labels)), dtype=int)
    lookup = {lab: i for i, lab in enumerate(labels)}
    for i, rec in enumerate(records):
        for _, lab in rec.jumps:
            counts[i, lookup[lab]] += 1
    return EnsembleSummary(labels, records, counts)


def evolve_no_jump(model, psi0, grid):
    """Unnormalized no-jump evolution under the effective Hamiltonian.

    Returns the state vectors at the grid times as a (len(grid), dim) array;
    their squared norm is the probability that no jump has occurred.
    """
    _same_space(model, psi0)
    grid = _check_grid(grid)
    decay = model.decay_operator()
    psi = np.asarray(psi0.data, dtype=complex).copy()
    out = [psi.copy()]
    for a, b in zip(grid[:-1], grid[1:]):
        n_sub = max(1, int(np.ceil((b - a) / model.max_step - 1e-9)))
        h = (b - a) / n_sub
        for j in range(n_sub):
            h_eff = model.effective_hamiltonian(a + (j + 0.5) * h, decay)
            psi = expm(-1j * h * h_eff) @ psi
        out.append(psi.copy())
    return np.array(out)
