"""Bell-diagonal states along a repeater chain and their secret-key fraction.

States are stored as weights over (Psi+, Psi-, Phi+, Phi-). Psi+ is the
target state throughout. An imperfect two-qubit gate is a depolarizing map:
with probability 1 - P the pair is replaced by the maximally mixed state.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.optimize import brentq

ORDER = ("Psi+", "Psi-", "Phi+", "Phi-")
# Pauli label (x bit, z bit) of each Bell state relative to Phi+
_PAULI = {"Phi+": (0, 0), "Psi+": (1, 0), "Psi-": (1, 1), "Phi-": (0, 1)}
_LABELS = [_PAULI[name] for name in ORDER]
_INDEX = {lab: i for i, lab in enumerate(_LABELS)}
_X = (1, 0)


@dataclass(frozen=True)
class BellDiagonalState:
    weights: tuple

    def __post_init__(self):
        w = np.asarray(self.weights, dtype=float)
        if w.shape != (4,):
            raise ValueError("a Bell-diagonal state needs four weights")
        if np.any(w < -1e-15) or abs(w.sum() - 1) > 1e-12:
            raise ValueError(f"invalid Bell weights {w}")
        object.__setattr__(self, "weights", tuple(float(x) for x in np.clip(w, 0, None)))

    @property
    def array(self):
        return np.array(self.weights)

    @property
    def fidelity(self):
        """Overlap with the target Psi+."""
        return self.weights[0]

    def __getitem__(self, name):
        return self.weights[ORDER.index(name)]

    @classmethod
    def pure(cls, name="Psi+"):
        w = np.zeros(4)
        w[ORDER.index(name)] = 1
        return cls(tuple(w))

    @classmethod
    def maximally_mixed(cls):
        return cls((0.25,) * 4)


@dataclass(frozen=True)
class SwapModel:
    """Depolarizing gate parameter P; the resulting BSM fidelity is (1 + 3P)/4."""

    P: float = 1.0

    def __post_init__(self):
        if not 0 <= self.P <= 1:
            raise ValueError("P must lie in [0, 1]")

    @property
    def bsm_fidelity(self):
        return (1 + 3 * self.P) / 4

    @classmethod
    def from_fidelity(cls, fidelity):
        return cls(bsm_fidelity_to_P(fidelity))


@dataclass(frozen=True)
class ErrorRates:
    eps_x: float
    eps_y: float
    eps_z: float

    @property
    def Q(self):
        return self.eps_z


def bsm_fidelity_to_P(fidelity):
    if not 0.25 <= fidelity <= 1:
        raise ValueError("BSM fidelity must lie in [1/4, 1]")
    return (4 * fidelity - 1) / 3


def depolarize(state, P):
    return BellDiagonalState(tuple(P * state.array + (1 - P) / 4))


def state_after_photonic_bsm(C):
    """Remote pair heralded by a photonic BSM with two-photon interference contrast C."""
    if not 0 <= C <= 1:
        raise ValueError("contrast must lie in [0, 1]")
    return BellDiagonalState(((1 + C) / 2, (1 - C) / 2, 0.0, 0.0))


def swap(sA, sB, model=SwapModel()):
    """Entanglement swapping of two Bell-diagonal pairs with Psi+ corrections.

    The ideal output label is the Pauli product of both input labels and X,
    so that two Psi+ inputs give Psi+; the gate error then depolarizes it.
    """
    out = np.zeros(4)
    for i, la in enumerate(_LABELS):
        for j, lb in enumerate(_LABELS):
            lab = (la[0] ^ lb[0] ^ _X[0], la[1] ^ lb[1] ^ _X[1])
            out[_INDEX[lab]] += sA.weights[i] * sB.weights[j]
    return depolarize(BellDiagonalState(tuple(out / out.sum())), model.P)


def chain_state(N, C, P=1.0):
    """Final state of N elementary links joined by a balanced tree of swaps."""
    if N < 1 or N & (N - 1):
        raise ValueError("N must be a power of two")
    s = state_after_photonic_bsm(C)
    model = SwapModel(P)
    while N > 1:
        s = swap(s, s, model)
        N //= 2
    return s


def error_rates(s):
    l1, l2, l3, l4 = s.weights
    return ErrorRates(l2 + l4, l2 + l3, l3 + l4)


def binary_entropy(p):
    p = float(np.clip(p, 0.0, 1.0))
    if p in (0.0, 1.0):
        return 0.0
    return float(-p * np.log2(p) - (1 - p) * np.log2(1 - p))


def secret_fraction(e, clamp=True):
    """Asymptotic secret fraction of entanglement-based six-state QKD.

    Returns the value clamped to [0, 1] if ``clamp``; otherwise the raw value.
    """
    ex, ey, ez = e.eps_x, e.eps_y, e.eps_z
    for v in (ex, ey, ez):
        if not -1e-12 <= v <= 0.5 + 1e-12:
            raise ValueError("error rates must lie in [0, 1/2]")
    r = 1 - binary_entropy(ez)
    if ez > 0:
        r -= ez * binary_entropy((1 + (ex - ey) / ez) / 2)
    if ez < 1:
        r -= (1 - ez) * binary_entropy((1 - (ex + ey + ez) / 2) / (1 - ez))
    return min(1.0, max(0.0, r)) if clamp else r


def chain_secret_fraction(C, bsm_fidelity, N, clamp=True):
    P = bsm_fidelity_to_P(bsm_fidelity)
    return secret_fraction(error_rates(chain_state(N, C, P)), clamp=clamp)


class UnreachableTargetError(ValueError):
    pass


def threshold_fidelity(C, N, target, tol=1e-6):
    """Smallest BSM fidelity for which the chain's secret fraction reaches ``target``.

    For N = 1 no atomic BSM takes place, so the answer is the lower bound 1/4
    whenever the target is reachable at all.
    """
    def f(F):
        return chain_secret_fraction(C, F, N, clamp=False) - target

    if f(1.0) < -tol:
        raise UnreachableTargetError(f"secret fraction {target} unreachable for C={C}, N={N}")
    lo = 0.25
    if f(lo) >= -tol:
        return lo
    if f(1.0) < 0:
        return 1.0
    return brentq(f, lo, 1.0, xtol=1e-12, rtol=1e-12)


# Deutsch et al. recurrence -------------------------------------------------
# The recurrence is written for target Phi+ with ordering (Phi+, Psi-, Psi+, Phi-).
# An X on Bob's qubit maps the package frame into that one:
#   Psi+ -> Phi+, Phi- -> Psi-, Phi+ -> Psi+, Psi- -> Phi-.
_TO_DEUTSCH = np.array([0, 3, 2, 1])  # deutsch slot k holds package index _TO_DEUTSCH[k]


def dejmps_purify(s1, s2=None, P_g=1.0):
    """One round of the Deutsch et al. recurrence on two Bell-diagonal pairs.

    Each input is first depolarized with the gate parameter ``P_g``.

    Returns
    -------
    (success probability, BellDiagonalState)
    """
    if not 0 <= P_g <= 1:
        raise ValueError("P_g must lie in [0, 1]")
    s2 = s1 if s2 is None else s2
    a = depolarize(s1, P_g).array[_TO_DEUTSCH]
    b = depolarize(s2, P_g).array[_TO_DEUTSCH]
    A1, B1, C1, D1 = a
    A2, B2, C2, D2 = b
    p = (A1 + B1) * (A2 + B2) + (C1 + D1) * (C2 + D2)
    if p <= 0:
        raise ZeroDivisionError("purification success probability is zero")
    out = np.array([A1 * A2 + B1 * B2, C1 * D2 + D1 * C2, C1 * C2 + D1 * D2, A1 * B2 + B1 * A2]) / p
    pkg = np.empty(4)
    pkg[_TO_DEUTSCH] = out
    return float(p), BellDiagonalState(tuple(pkg / pkg.sum()))


# threshold analysis ---------------------------------------------------------
def gate_error(P, convention="depolarizing"):
    """Gate error quoted as 1 - P ("depolarizing") or as the infidelity 3(1 - P)/4."""
    if convention == "depolarizing":
        return 1 - P
    if convention == "infidelity":
        return 0.75 * (1 - P)
    raise ValueError(f"unknown convention {convention!r}")


def _P_from_error(err, convention):
    return 1 - err if convention == "depolarizing" else 1 - err / 0.75


@dataclass
class PurificationReport:
    fidelity_plain: float
    fidelity_purified: float
    success_probability: float
    r_plain: float
    r_purified: float

    @property
    def fidelity_gain(self):
        return self.fidelity_purified - self.fidelity_plain

    @property
    def key_rate_ratio(self):
        """Secret-key rate with one purification round over the rate without it."""
        if self.r_plain == 0:
            return np.inf if self.r_purified > 0 else 1.0
        return self.success_probability / 2 * self.r_purified / self.r_plain


def purification_benefit(C, N, P_g, placement="final"):
    """Compare the chain state with and without one purification round.

    Swaps and purification share the gate parameter ``P_g``. With
    ``placement="final"`` two copies of the finished chain are purified;
    with ``"links"`` each elementary link is purified before swapping.
    """
    plain = chain_state(N, C, P_g)
    if placement == "final":
        p, pur = dejmps_purify(plain, plain, P_g)
    elif placement == "links":
        p, s = dejmps_purify(state_after_photonic_bsm(C), None, P_g)
        n = N
        while n > 1:
            s = swap(s, s, SwapModel(P_g))
            n //= 2
        pur = s
    else:
        raise ValueError(f"unknown placement {placement!r}")
    return PurificationReport(
        plain.fidelity, pur.fidelity, p,
        secret_fraction(error_rates(plain)), secret_fraction(error_rates(pur)),
    )


def _scan_root(f, lo, hi, n=400):
    xs = np.linspace(lo, hi, n)
    vals = np.array([f(x) for x in xs])
    idx = np.nonzero(np.sign(vals[:-1]) != np.sign(vals[1:]))[0]
    if idx.size == 0:
        return None
    k = idx[0]
    return brentq(f, xs[k], xs[k + 1], xtol=1e-12)


def fidelity_gain_threshold(C, N, convention="depolarizing", placement="final"):
    """Largest gate error for which one purification round raises the final fidelity."""
    def gain(err):
        return purification_benefit(C, N, _P_from_error(err, convention), placement).fidelity_gain

    hi = 0.5 if convention == "depolarizing" else 0.375
    return _scan_root(gain, 1e-6, hi)


def key_rate_contrast_threshold(N, P_g=1.0, placement="final", grid=None):
    """Largest contrast C below which one purification round raises the key rate.

    Returns None if purification never helps on the scanned contrast grid.
    """
    grid = np.linspace(0.02, 0.995, 196) if grid is None else np.asarray(grid)

    def excess(C):
        ratio = purification_benefit(C, N, P_g, placement).key_rate_ratio
        return 1.0 if not np.isfinite(ratio) else ratio - 1

    vals = np.array([excess(c) for c in grid])
    cross = np.nonzero((vals[:-1] > 0) & (vals[1:] <= 0))[0]
    if cross.size == 0:
        return None
    k = cross[-1]
    return brentq(excess, grid[k], grid[k + 1], xtol=1e-10)
