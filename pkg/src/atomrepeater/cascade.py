"""Crossed-cavity cascade source of heralded atom-telecom-photon entanglement.

The atom (ground state g, excited state e, intermediate states i-/i+, final
qubit states f-/f+, and a sink collecting decays out of the scheme) couples to
the two polarization modes of the entangling cavity (telecom) and to the
pi-polarized mode of the heralding cavity. The two-photon control transition
g -> e is replaced by an effective Gaussian Rabi pulse.
"""
from __future__ import annotations

from dataclasses import dataclass, field, replace

import numpy as np

from .cavity import reference_designs
from .constants import (
    BRANCH_HERALD,
    BRANCH_TELECOM,
    GAMMA_4D32,
    GAMMA_4D_TO_5P12,
    GAMMA_5P12,
    RB87_AMPLITUDES_F2,
    mhz2pi,
)
from .dynamics import (
    HilbertSpace,
    LindbladModel,
    TimeDependentHamiltonian,
    batch_trajectories,
    evolve_master,
    evolve_no_jump,
    expectation,
)

NS = 1e-9
FIBER_EFFICIENCY = 0.96

# atomic levels; the last three only exist with a second heralding mode
LEVELS = ("g", "e", "i-", "i+", "f-", "f+", "sink", "f0", "f-2", "f+2")

TELECOM_OC = ("telecom_oc_plus", "telecom_oc_minus")
HERALD_OC = "herald_oc"


@dataclass(frozen=True)
class LevelScheme:
    """Decay rates, branching ratios and relative amplitudes of the cascade.

    ``amplitudes`` are (a, a', b, b', c, c') for decays of i-/i+ into the
    F=2 manifold (mF = 0, same mF, |mF| = 2). ``theta`` is the phase of the
    e -> i+ telecom coupling relative to e -> i-.
    """

    gamma_e: float = GAMMA_4D32
    gamma_i: float = GAMMA_5P12
    branch_e_to_i: float = BRANCH_TELECOM * GAMMA_4D_TO_5P12 / GAMMA_4D32
    branch_i_to_f: float = BRANCH_HERALD
    amplitudes: tuple = (
        RB87_AMPLITUDES_F2[0], RB87_AMPLITUDES_F2[0],
        RB87_AMPLITUDES_F2[1], RB87_AMPLITUDES_F2[1],
        RB87_AMPLITUDES_F2[2], RB87_AMPLITUDES_F2[2],
    )
    theta: float = 0.0

    def __post_init__(self):
        a, a2, b, b2, c, c2 = self.amplitudes
        if not (np.isclose(abs(a), abs(a2)) and np.isclose(abs(b), abs(b2)) and np.isclose(abs(c), abs(c2))):
            raise ValueError("amplitudes must satisfy |a|=|a'|, |b|=|b'|, |c|=|c'|")
        if b == 0:
            raise ValueError("the heralding transition amplitude b must be nonzero")
        if not (0 <= 2 * self.branch_e_to_i <= 1 and 0 <= self.branch_i_to_f <= 1):
            raise ValueError("branching ratios out of range")

    def partial_rates(self):
        """Population decay rates of every free-space channel [rad/s]."""
        e_i = self.branch_e_to_i * self.gamma_e
        i_f = self.branch_i_to_f * self.gamma_i
        return {
            "e->i-": e_i,
            "e->i+": e_i,
            "e->other": self.gamma_e - 2 * e_i,
            "i-->f-": i_f,
            "i-->other": self.gamma_i - i_f,
            "i+->f+": i_f,
            "i+->other": self.gamma_i - i_f,
        }


@dataclass(frozen=True)
class CrossedCavityParams:
    """Coupling and field decay rates [rad/s] of the two cavities.

    The entangling-cavity values apply to both degenerate polarization modes.
    ``herald_v_detuning`` is the detuning of the optional second (V) heralding
    mode; ``None`` leaves it out of the model.
    """

    g_t: float = mhz2pi(70)
    kappa_t_oc: float = mhz2pi(95)
    kappa_t_loss: float = mhz2pi(8)
    g_h: float = mhz2pi(16.3)
    kappa_h_oc: float = mhz2pi(11.9)
    kappa_h_loss: float = mhz2pi(1.5)
    herald_v_detuning: float | None = None
    fiber_efficiency: float = FIBER_EFFICIENCY

    def __post_init__(self):
        rates = (self.g_t, self.kappa_t_oc, self.kappa_t_loss, self.g_h, self.kappa_h_oc, self.kappa_h_loss)
        if min(rates) < 0:
            raise ValueError("cavity rates must be >= 0")
        if not 0 <= self.fiber_efficiency <= 1:
            raise ValueError("fiber efficiency must lie in [0, 1]")

    @property
    def kappa_t(self):
        return self.kappa_t_oc + self.kappa_t_loss

    @property
    def kappa_h(self):
        return self.kappa_h_oc + self.kappa_h_loss

    @classmethod
    def from_design(cls, atom_offset=0.0, **overrides):
        """Parameters computed from the reference mirror and geometry design."""
        d = reference_designs(atom_offset)
        h, t = d["heralding"], d["entangling"]
        kw = dict(
            g_t=t.g_coupling, kappa_t_oc=t.kappa_oc, kappa_t_loss=t.kappa_loss,
            g_h=h.g_coupling, kappa_h_oc=h.kappa_oc, kappa_h_loss=h.kappa_loss,
            fiber_efficiency=d["fiber_overlap"],
        )
        kw.update(overrides)
        return cls(**kw)


@dataclass(frozen=True)
class ControlPulse:
    """Gaussian effective Rabi pulse Omega(t) = peak * exp(-4 ln2 (t - center)^2 / fwhm^2)."""

    fwhm: float
    peak_rabi: float = 0.0
    center: float | None = None
    detuning: float = 0.0

    def __post_init__(self):
        if not self.fwhm > 0:
            raise ValueError("fwhm must be positive")
        if self.peak_rabi < 0:
            raise ValueError("peak Rabi rate must be >= 0")
        if self.center is None:
            object.__setattr__(self, "center", default_center(self.fwhm))

    def rabi(self, t):
        return self.peak_rabi * np.exp(-4 * np.log(2) * (t - self.center) ** 2 / self.fwhm**2)

    @property
    def area(self):
        return self.peak_rabi * self.fwhm * np.sqrt(np.pi / (4 * np.log(2)))


def default_center(fwhm):
    return max(10 * NS, 1.7 * fwhm)


def default_window(pulse):
    """Simulation window: the pulse plus 50 ns for the slow heralding emission."""
    return (0.0, max(60 * NS, pulse.center + 1.7 * pulse.fwhm + 50 * NS))


@dataclass(frozen=True)
class CascadeOptions:
    worst_case_recycling: bool = False
    recycling_scale: float = 1.0
    # excited levels ("e", "i") whose decays out of the scheme return to g
    recycle_levels: tuple = ("e", "i")
    telecom_truncation: int | None = None

    def truncation(self):
        if self.telecom_truncation is not None:
            return self.telecom_truncation
        return 2 if self.worst_case_recycling else 1


def _lower(space, n_atom, lo, hi):
    op = np.zeros((n_atom, n_atom), dtype=complex)
    op[LEVELS.index(lo), LEVELS.index(hi)] = 1
    return space.embed("atom", op)


def build_model(scheme=None, cavities=None, pulse=None, options=None):
    """Assemble the cascade as a :class:`LindbladModel`.

    Returns
    -------
    LindbladModel
        ``metadata`` carries the scheme, cavity parameters, pulse, options and
        the simulation window.
    """
    scheme = scheme or LevelScheme()
    cavities = cavities or CrossedCavityParams()
    pulse = pulse or ControlPulse(fwhm=5.9 * NS)
    options = options or CascadeOptions()
    n_t = options.truncation() + 1
    if n_t < 2:
        raise ValueError("telecom mode truncation must be >= 1")
    if options.worst_case_recycling and n_t < 3:
        raise ValueError("worst-case recycling needs telecom truncation >= 2")
    second = cavities.herald_v_detuning is not None
    n_atom = 10 if second else 7
    factors = [("atom", n_atom), ("tel_plus", n_t), ("tel_minus", n_t), ("herald", 2)]
    if second:
        factors.append(("herald_v", 2))
    space = HilbertSpace(tuple(factors))

    def low(lo, hi):
        return _lower(space, n_atom, lo, hi)

    def annihilate(mode):
        n = dict(space.factors)[mode]
        return space.embed(mode, np.diag(np.sqrt(np.arange(1, n)), 1))

    a_p, a_m, a_h = annihilate("tel_plus"), annihilate("tel_minus"), annihilate("herald")
    a, a2, b, b2, c, c2 = scheme.amplitudes

    # telecom: e -> i- emits sigma+, e -> i+ emits sigma-
    phase = np.exp(1j * scheme.theta)
    coupling = cavities.g_t * (a_p.conj().T @ low("i-", "e") + phase * a_m.conj().T @ low("i+", "e"))
    # heralding pi mode: i-/+ -> f-/+
    coupling += cavities.g_h * a_h.conj().T @ (low("f-", "i-") + (b2 / b) * low("f+", "i+"))
    static = coupling + coupling.conj().T
    if second:
        a_v = annihilate("herald_v")
        g_v = cavities.g_h / (np.sqrt(2) * b)
        cv = g_v * a_v.conj().T @ (
            a * low("f0", "i-") + a2 * low("f0", "i+") + c * low("f-2", "i-") + c2 * low("f+2", "i+")
        )
        static = static + cv + cv.conj().T + cavities.herald_v_detuning * a_v.conj().T @ a_v
    e_proj = low("e", "e")
    static = static + pulse.detuning * e_proj
    drive = low("e", "g") + low("g", "e")
    hamiltonian = TimeDependentHamiltonian(static, [(lambda t: 0.5 * pulse.rabi(t), drive)])

    rates = scheme.partial_rates()
    def target(level):
        recycled = options.worst_case_recycling and level in options.recycle_levels
        return ("g", options.recycling_scale) if recycled else ("sink", 1.0)

    (out_e, rec_e), (out_i, rec_i) = target("e"), target("i")
    collapse = [
        ("telecom_oc_plus", np.sqrt(2 * cavities.kappa_t_oc) * a_p),
        ("telecom_oc_minus", np.sqrt(2 * cavities.kappa_t_oc) * a_m),
        ("telecom_loss_plus", np.sqrt(2 * cavities.kappa_t_loss) * a_p),
        ("telecom_loss_minus", np.sqrt(2 * cavities.kappa_t_loss) * a_m),
        ("herald_oc", np.sqrt(2 * cavities.kappa_h_oc) * a_h),
        ("herald_loss", np.sqrt(2 * cavities.kappa_h_loss) * a_h),
        ("e_to_i-", np.sqrt(rates["e->i-"]) * low("i-", "e")),
        ("e_to_i+", np.sqrt(rates["e->i+"]) * low("i+", "e")),
        ("e_other", np.sqrt(rec_e * rates["e->other"]) * low(out_e, "e")),
        ("i-_to_f-", np.sqrt(rates["i-->f-"]) * low("f-", "i-")),
        ("i+_to_f+", np.sqrt(rates["i+->f+"]) * low("f+", "i+")),
        ("i-_other", np.sqrt(rec_i * rates["i-->other"]) * low(out_i, "i-")),
        ("i+_other", np.sqrt(rec_i * rates["i+->other"]) * low(out_i, "i+")),
    ]
    if second:
        collapse += [
            ("herald_v_oc", np.sqrt(2 * cavities.kappa_h_oc) * a_v),
            ("herald_v_loss", np.sqrt(2 * cavities.kappa_h_loss) * a_v),
        ]
    max_step = min(0.05 * NS, pulse.fwhm / 20)
    return LindbladModel(
        space,
        hamiltonian,
        tuple(collapse),
        max_step=max_step,
        metadata=dict(scheme=scheme, cavities=cavities, pulse=pulse, options=options, window=default_window(pulse)),
    )


def initial_state(model):
    return model.space.ket(atom=LEVELS.index("g"))


def residual_ground_population(model):
    """Population left in g at the end of the window (no-jump evolution)."""
    window = model.metadata["window"]
    psi = evolve_no_jump(model, initial_state(model), [window[0], window[1]])[-1]
    return float(abs(psi[model.space.basis_index(atom=0)]) ** 2)


class CalibrationError(RuntimeError):
    pass


def calibrate_pulse(fwhm, target=0.01, rel_tol=1e-3, make_model=None, omega_max=None):
    """Smallest peak Rabi rate that leaves less than ``target`` population in g.

    Parameters
    ----------
    fwhm : float
        Pulse FWHM [s], within 0.5-50 ns.
    make_model : callable, optional
        ``make_model(pulse) -> LindbladModel``; defaults to the reference cascade.

    Returns
    -------
    float
        Peak Rabi rate [rad/s].
    """
    if not 0.5 * NS <= fwhm <= 50 * NS:
        raise ValueError("fwhm must lie in [0.5, 50] ns")
    make_model = make_model or (lambda p: build_model(pulse=p))
    omega_max = omega_max or 2e3 * np.pi / fwhm

    def residual(omega):
        return residual_ground_population(make_model(ControlPulse(fwhm=fwhm, peak_rabi=omega)))

    # the residual oscillates with Omega, so walk up in small steps to find the
    # first crossing rather than bracketing by doubling
    lo = 0.0
    hi = 0.25 * np.pi / fwhm
    while residual(hi) >= target:
        lo = hi
        hi *= 1.05
        if hi > omega_max:
            raise CalibrationError(f"residual population stays above {target} up to {omega_max:.3e} rad/s")
    while hi - lo > rel_tol * hi:
        mid = 0.5 * (lo + hi)
        if residual(mid) < target:
            hi = mid
        else:
            lo = mid
    return hi


def calibrated_pulse(fwhm, **kwargs):
    return ControlPulse(fwhm=fwhm, peak_rabi=calibrate_pulse(fwhm, **kwargs))


def flux_curves(model, grid=None):
    """Output photon fluxes 2 kappa_oc <n> of both cavities from the master equation.

    Returns
    -------
    dict
        ``time`` [s], ``entangling`` (sum of both polarizations) and
        ``heralding`` fluxes [1/s].
    """
    cav = model.metadata["cavities"]
    if grid is None:
        w = model.metadata["window"]
        grid = np.arange(w[0], w[1] + 0.5 * 0.1 * NS, 0.1 * NS)
    sp = model.space
    n_p = sp.embed("tel_plus", np.diag(np.arange(dict(sp.factors)["tel_plus"])))
    n_m = sp.embed("tel_minus", np.diag(np.arange(dict(sp.factors)["tel_minus"])))
    n_h = sp.embed("herald", np.diag([0, 1]))
    states = evolve_master(model, initial_state(model), grid)
    ent = np.array([expectation(n_p + n_m, s).real for s in states]) * 2 * cav.kappa_t_oc
    her = np.array([expectation(n_h, s).real for s in states]) * 2 * cav.kappa_h_oc
    return {"time": np.asarray(grid), "entangling": ent, "heralding": her}


@dataclass
class ArrivalSampleSet:
    """Per-trajectory arrival data.

    ``t_herald`` / ``t_telecom`` hold the first herald / telecom output-coupler
    jump time (NaN if none). ``herald_ok`` marks exactly one herald through the
    output coupler; ``telecom_ok`` exactly one telecom photon through the
    output coupler (fiber coupling is applied as a classical efficiency).
    """

    t_herald: np.ndarray
    t_telecom: np.ndarray
    herald_ok: np.ndarray
    telecom_ok: np.ndarray
    extra_telecom: np.ndarray

    @property
    def heralded(self):
        return self.herald_ok & self.telecom_ok

    def pairs(self):
        """(t_herald, t_telecom) of successful trajectories."""
        m = self.heralded
        return self.t_herald[m], self.t_telecom[m]

    def __len__(self):
        return self.t_herald.size


LOSS_CATEGORIES = ("atomic_decay", "entangling_parasitic", "heralding_parasitic", "fiber_coupling", "other")

_FAILURE_OF = {
    "telecom_loss_plus": "entangling_parasitic",
    "telecom_loss_minus": "entangling_parasitic",
    "herald_loss": "heralding_parasitic",
    "e_to_i-": "atomic_decay",
    "e_to_i+": "atomic_decay",
    "e_other": "atomic_decay",
    "i-_to_f-": "atomic_decay",
    "i+_to_f+": "atomic_decay",
    "i-_other": "atomic_decay",
    "i+_other": "atomic_decay",
}


@dataclass
class CascadeOutcome:
    """Success probability, loss budget and arrival samples of a trajectory run."""

    p_ht: float
    p_ht_stderr: float
    losses: dict
    loss_stderr: dict
    samples: ArrivalSampleSet
    n_traj: int
    detail: dict = field(default_factory=dict)

    def as_dict(self):
        return {
            "n_traj": self.n_traj,
            "p_ht": self.p_ht,
            "p_ht_stderr": self.p_ht_stderr,
            "losses": dict(self.losses),
            "loss_stderr": dict(self.loss_stderr),
        }


def _classify(records, fiber):
    n = len(records)
    t_h = np.full(n, np.nan)
    t_t = np.full(n, np.nan)
    h_ok = np.zeros(n, bool)
    t_ok = np.zeros(n, bool)
    extra = np.zeros(n, int)
    weights = {k: np.zeros(n) for k in LOSS_CATEGORIES}
    success = np.zeros(n)
    for i, rec in enumerate(records):
        heralds = [t for t, lab in rec.jumps if lab == HERALD_OC]
        telecoms = [t for t, lab in rec.jumps if lab in TELECOM_OC]
        if heralds:
            t_h[i] = heralds[0]
        if telecoms:
            t_t[i] = telecoms[0]
        h_ok[i] = len(heralds) == 1
        t_ok[i] = len(telecoms) == 1
        extra[i] = max(0, len(telecoms) - 1)
        if h_ok[i] and t_ok[i]:
            success[i] = fiber
            weights["fiber_coupling"][i] = 1 - fiber
            continue
        cat = "other"
        for _, lab in rec.jumps:
            if lab in _FAILURE_OF:
                cat = _FAILURE_OF[lab]
                break
        weights[cat][i] = 1.0
    return ArrivalSampleSet(t_h, t_t, h_ok, t_ok, extra), success, weights


def _mean_se(x):
    x = np.asarray(x, dtype=float)
    se = x.std(ddof=1) / np.sqrt(x.size) if x.size > 1 else np.nan
    return float(x.mean()), float(se)


def success_probability(model, n_traj, seed, interval=None):
    """Monte Carlo estimate of p_ht and the loss budget.

    p_ht is the probability of exactly one herald photon through the heralding
    output coupler and exactly one telecom photon through the entangling output
    coupler, times the fiber coupling efficiency.
    """
    if n_traj < 1:
        raise ValueError("n_traj must be >= 1")
    interval = interval or model.metadata["window"]
    ens = batch_trajectories(model, initial_state(model), n_traj, seed, interval)
    fiber = model.metadata["cavities"].fiber_efficiency
    samples, success, weights = _classify(ens.records, fiber)
    p, se = _mean_se(success)
    losses, loss_se = {}, {}
    for k, w in weights.items():
        losses[k], loss_se[k] = _mean_se(w)
    detail = {
        "telecom_plus": ens.mean_counts()["telecom_oc_plus"],
        "telecom_minus": ens.mean_counts()["telecom_oc_minus"],
        "counts": ens.counts,
        "channel_labels": ens.channel_labels,
    }
    return CascadeOutcome(p, se, losses, loss_se, samples, n_traj, detail)


def sweep_fwhm(fwhms, n_traj, seed, cavities=None, scheme=None):
    """p_ht with its standard error for each control-pulse FWHM [s]."""
    rows = []
    for fwhm in fwhms:
        pulse = calibrated_pulse(fwhm, make_model=lambda p: build_model(scheme, cavities, p))
        out = success_probability(build_model(scheme, cavities, pulse), n_traj, seed)
        rows.append((fwhm, out.p_ht, out.p_ht_stderr))
    return rows


def multiphoton_fraction(fwhm=5.9 * NS, n_traj=20_000, seed=0, recycling=True, recycling_scale=1.0, cavities=None, z=1.96,
                         recycle_levels=("e", "i"), pulse=None):
    """Fraction of heralded trajectories with two or more telecom photons.

    The pulse is calibrated on the model without recycling and then applied to
    the worst-case model in which every decay out of the scheme returns the
    atom to g. ``recycle_levels`` limits which excited manifolds recycle; a
    ``pulse`` given explicitly skips the calibration.

    Returns
    -------
    (fraction, (ci_low, ci_high), n_heralded)
        Wilson score interval at ``z`` standard deviations.
    """
    if pulse is None:
        pulse = calibrated_pulse(fwhm, make_model=lambda p: build_model(cavities=cavities, pulse=p))
    options = CascadeOptions(worst_case_recycling=recycling, recycling_scale=recycling_scale,
                             recycle_levels=tuple(recycle_levels), telecom_truncation=2)
    model = build_model(cavities=cavities, pulse=pulse, options=options)
    ens = batch_trajectories(model, initial_state(model), n_traj, seed, model.metadata["window"])
    lab = ens.channel_labels
    herald = ens.counts[:, lab.index(HERALD_OC)] == 1
    tel = ens.counts[:, lab.index(TELECOM_OC[0])] + ens.counts[:, lab.index(TELECOM_OC[1])]
    heralded = herald & (tel >= 1)
    n_h = int(heralded.sum())
    k = int((heralded & (tel >= 2)).sum())
    if n_h == 0:
        return 0.0, (0.0, 1.0), 0
    frac = k / n_h
    denom = 1 + z**2 / n_h
    centre = (frac + z**2 / (2 * n_h)) / denom
    half = z * np.sqrt(frac * (1 - frac) / n_h + z**2 / (4 * n_h**2)) / denom
    return frac, (max(0.0, centre - half), min(1.0, centre + half)), n_h


def with_cavities(model_cavities=None, **changes):
    return replace(model_cavities or CrossedCavityParams(), **changes)
