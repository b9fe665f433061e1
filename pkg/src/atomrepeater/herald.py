"""Entanglement fidelity when the heralding cavity also supports a degenerate V mode.

If the V-polarized heralding mode is degenerate with the pi mode, the two
telecom-polarization branches emit a pi herald with different probabilities,
so post-selecting on a pi photon unbalances the entangled state.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .constants import RB87_AMPLITUDES_F1, RB87_AMPLITUDES_F2


@dataclass(frozen=True)
class TransitionAmplitudes:
    """Real amplitudes from i- (a, b, c) and i+ (a', b', c') into mF = 0, same mF and |mF| = 2."""

    a: float
    b: float
    c: float
    a_p: float | None = None
    b_p: float | None = None
    c_p: float | None = None

    def __post_init__(self):
        for name in ("a", "b", "c"):
            if getattr(self, name + "_p") is None:
                object.__setattr__(self, name + "_p", getattr(self, name))
        pairs = ((self.a, self.a_p), (self.b, self.b_p), (self.c, self.c_p))
        if any(not np.isclose(abs(x), abs(y), rtol=1e-12, atol=0) for x, y in pairs):
            raise ValueError("primed amplitudes must equal the unprimed ones up to sign")
        if self.a == 0 and self.b == 0 and self.c == 0:
            raise ValueError("amplitudes must not all vanish")
        if self.b == 0:
            raise ValueError("b = 0 leaves no pi-polarized herald")

    @classmethod
    def rb87_f2(cls):
        a, b, c = RB87_AMPLITUDES_F2
        return cls(a, b, c)

    @classmethod
    def rb87_f1(cls):
        a, b, c = RB87_AMPLITUDES_F1
        return cls(a, b, c, a_p=-a, b_p=-b, c_p=c)


def _branch_norms(amps):
    a, b, c, a2, b2, c2 = amps.a, amps.b, amps.c, amps.a_p, amps.b_p, amps.c_p
    rest = b**2 + b2**2 + (c**2 + c2**2) / 2
    return (a + a2) ** 2 / 2 + rest, (a - a2) ** 2 / 2 + rest


def postselected_state(amps):
    """Normalized (H, V) telecom-branch weights after detecting a pi herald.

    Each weight multiplies a normalized atom-qubit state, so the pair has unit norm.
    """
    n_h, n_v = _branch_norms(amps)
    # pi component of each branch: |b| sqrt(2) / sqrt(branch norm)
    w = np.array([np.sqrt(2) * abs(amps.b) / np.sqrt(n_h), np.sqrt(2) * abs(amps.b) / np.sqrt(n_v)])
    return w / np.linalg.norm(w)


def fidelity_from_weights(w):
    return float((w[0] + w[1]) ** 2 / 2)


def degenerate_mode_fidelity(a, b, c):
    """Closed-form fidelity for the symmetric branch a' = a, b' = b, c' = c."""
    a2, b2, c2 = a * a, b * b, c * c
    s = a2 + 2 * b2 + c2
    if s == 0:
        raise ValueError("amplitudes must not all vanish")
    return 0.5 + 0.5 * np.sqrt((2 * a2 + 2 * b2 + c2) * (2 * b2 + c2)) / s


def explicit_state_fidelity(amps):
    """Fidelity from the full telecom x herald x atom state vector.

    Basis ordering: telecom {H, V} x herald {pi, V} x atom mF in {-2..2}.
    V-mode emission from i+ carries a relative sign between the two telecom
    branches, so the mF = 0 amplitudes add in the H branch and cancel as
    a - a' in the V branch.
    """
    def ket(tel, her, mf):
        v = np.zeros(20)
        v[(tel * 2 + her) * 5 + mf + 2] = 1
        return v

    H, V, PI, VH = 0, 1, 0, 1
    a, b, c, a2, b2, c2 = amps.a, amps.b, amps.c, amps.a_p, amps.b_p, amps.c_p
    s2 = 1 / np.sqrt(2)

    def branch(tel, sign):
        v = (b * ket(tel, PI, -1) + sign * b2 * ket(tel, PI, 1)
             + s2 * (c * ket(tel, VH, -2) - sign * c2 * ket(tel, VH, 2))
             + s2 * (a - sign * a2) * ket(tel, VH, 0))
        return v / np.linalg.norm(v)

    total = s2 * (branch(H, -1) + branch(V, 1))
    proj = np.zeros_like(total)
    for tel in (H, V):
        sl = slice(tel * 10, tel * 10 + 5)
        proj[sl] = total[sl]
    proj /= np.linalg.norm(proj)
    sb = np.sign(b2 / b)
    ideal = 0.5 * (ket(H, PI, -1) - sb * ket(H, PI, 1) + ket(V, PI, -1) + sb * ket(V, PI, 1))
    return float(abs(ideal @ proj) ** 2)
