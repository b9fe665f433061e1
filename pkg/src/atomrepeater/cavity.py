"""Gaussian-resonator and cavity-QED design formulas.

Lengths in metres, mirror transmissions and losses in ppm, rates in rad/s
(field decay rates for cavities, population decay rates for atoms).
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .constants import (
    BRANCH_HERALD,
    BRANCH_TELECOM,
    C_LIGHT,
    GAMMA_4D32,
    GAMMA_4D_TO_5P12,
    GAMMA_5P12,
    LAMBDA_HERALD,
    LAMBDA_TELECOM,
)

FUSED_SILICA_INDEX = 1.444  # near 1.5 um


class UnstableResonatorError(ValueError):
    pass


@dataclass(frozen=True)
class MirrorSet:
    """Output-coupler and high-reflector transmissions plus parasitic loss per mirror [ppm]."""

    transmission_oc: float
    transmission_hr: float
    parasitic_loss_per_mirror: float

    def __post_init__(self):
        if min(self.transmission_oc, self.transmission_hr, self.parasitic_loss_per_mirror) < 0:
            raise ValueError("mirror transmissions and losses must be >= 0")


@dataclass(frozen=True)
class CavityGeometry:
    """Two-mirror Fabry-Perot cavity. Mirror 1 sits at z = 0, mirror 2 at z = length."""

    length: float
    roc1: float
    roc2: float
    wavelength: float

    def __post_init__(self):
        if not self.length > 0:
            raise ValueError("cavity length must be positive")
        if not self.wavelength > 0:
            raise ValueError("wavelength must be positive")

    @property
    def g_factors(self):
        return 1 - self.length / self.roc1, 1 - self.length / self.roc2

    @property
    def is_stable(self):
        g1, g2 = self.g_factors
        return 0 <= g1 * g2 <= 1


@dataclass(frozen=True)
class ModeGeometry:
    """Fundamental Gaussian mode of a resonator."""

    waist: float
    waist_position: float  # from mirror 1
    rayleigh_range: float

    def radius(self, z):
        """Mode radius at distance ``z`` from the waist."""
        z = np.asarray(z, dtype=float)
        return self.waist * np.sqrt(1 + (z / self.rayleigh_range) ** 2)

    def radius_at(self, position):
        """Mode radius at ``position`` measured from mirror 1."""
        return self.radius(np.asarray(position) - self.waist_position)

    def wavefront_roc(self, z):
        """Phase-front radius of curvature at distance ``z`` from the waist (inf at the waist)."""
        z = np.asarray(z, dtype=float)
        with np.errstate(divide="ignore"):
            return np.where(z == 0, np.inf, z * (1 + (self.rayleigh_range / z) ** 2))


@dataclass(frozen=True)
class DerivedCavityParams:
    waist_w0: float
    waist_position: float
    kappa_oc: float
    kappa_loss: float
    g_coupling: float
    cooperativity: float

    @property
    def kappa_total(self):
        return self.kappa_oc + self.kappa_loss


def mode_geometry(geom):
    """Waist size and location of the fundamental mode of a stable two-mirror resonator.

    Returns
    -------
    ModeGeometry
    """
    if not geom.is_stable:
        raise UnstableResonatorError(f"g1*g2 = {np.prod(geom.g_factors):.4f} outside [0, 1]")
    g1, g2 = geom.g_factors
    L, lam = geom.length, geom.wavelength
    denom = g1 + g2 - 2 * g1 * g2
    if denom <= 0 or g1 * g2 in (0.0, 1.0):
        raise UnstableResonatorError("resonator is on the edge of stability")
    w0_sq = lam * L / np.pi * np.sqrt(g1 * g2 * (1 - g1 * g2)) / denom
    z1 = L * g2 * (1 - g1) / denom
    w0 = np.sqrt(w0_sq)
    return ModeGeometry(waist=w0, waist_position=z1, rayleigh_range=np.pi * w0_sq / lam)


def kappa_rates(mirrors, length):
    """Field decay rates through the output coupler and through all other losses.

    Returns
    -------
    (kappa_oc, kappa_loss) : rad/s
    """
    if not length > 0:
        raise ValueError("length must be positive")
    per_ppm = C_LIGHT * 1e-6 / (4 * length)
    kappa_oc = per_ppm * mirrors.transmission_oc
    kappa_loss = per_ppm * (mirrors.transmission_hr + 2 * mirrors.parasitic_loss_per_mirror)
    return kappa_oc, kappa_loss


def coupling_g(geom, partial_linewidth, atom_position=None):
    """Atom-cavity coupling rate for an atom on the cavity axis at an antinode.

    Parameters
    ----------
    geom : CavityGeometry
    partial_linewidth : float
        Partial decay rate of the transition [rad/s].
    atom_position : float, optional
        Position along the axis measured from mirror 1; defaults to the cavity centre.
    """
    if atom_position is None:
        atom_position = geom.length / 2
    if not 0 <= atom_position <= geom.length:
        raise ValueError("atom must lie between the mirrors")
    if partial_linewidth < 0:
        raise ValueError("partial linewidth must be >= 0")
    mode = mode_geometry(geom)
    w = float(mode.radius_at(atom_position))
    v_eff = np.pi * w**2 * geom.length / 4
    lam = geom.wavelength
    return float(np.sqrt(3 * C_LIGHT * lam**2 * partial_linewidth / (8 * np.pi * v_eff)))


def cooperativity(g, kappa_total, gamma):
    """C = g^2 / (kappa * Gamma)."""
    if not (kappa_total > 0 and gamma > 0):
        raise ValueError("kappa_total and gamma must be positive")
    return g**2 / (kappa_total * gamma)


def fiber_overlap(mode_radius, wavefront_roc, fiber_mode_radius, wavelength, refractive_index=FUSED_SILICA_INDEX):
    """Power coupling between a cavity mode at its output mirror and a fibre mode.

    The cavity field at the mirror has radius ``mode_radius`` and a curved phase
    front of radius ``wavefront_roc``; the fibre mode is flat. The phase mismatch
    is evaluated inside the substrate of index ``refractive_index``.
    """
    if not (mode_radius > 0 and fiber_mode_radius > 0):
        raise ValueError("mode radii must be positive")
    w1, w2 = mode_radius, fiber_mode_radius
    size = (w1 / w2 + w2 / w1) ** 2
    phase = 0.0 if np.isinf(wavefront_roc) else (np.pi * refractive_index * w1 * w2 / (wavelength * wavefront_roc)) ** 2
    return 4 / (size + phase)


def output_mode(geom, mirror=2):
    """Mode radius and phase-front curvature at one of the mirrors."""
    mode = mode_geometry(geom)
    pos = 0.0 if mirror == 1 else geom.length
    z = pos - mode.waist_position
    return float(mode.radius(z)), float(abs(mode.wavefront_roc(z)))


def design_cavity(geom, mirrors, partial_linewidth, gamma, atom_position=None):
    """All derived parameters of one atom-cavity system."""
    mode = mode_geometry(geom)
    k_oc, k_l = kappa_rates(mirrors, geom.length)
    g = coupling_g(geom, partial_linewidth, atom_position)
    return DerivedCavityParams(
        waist_w0=mode.waist,
        waist_position=mode.waist_position,
        kappa_oc=k_oc,
        kappa_loss=k_l,
        g_coupling=g,
        cooperativity=cooperativity(g, k_oc + k_l, gamma),
    )


# reference designs
HERALDING_GEOMETRY = CavityGeometry(length=400e-6, roc1=500e-6, roc2=500e-6, wavelength=LAMBDA_HERALD)
HERALDING_MIRRORS = MirrorSet(transmission_oc=400, transmission_hr=10, parasitic_loss_per_mirror=20)
ENTANGLING_GEOMETRY = CavityGeometry(length=75e-6, roc1=100e-6, roc2=200e-6, wavelength=LAMBDA_TELECOM)
ENTANGLING_MIRRORS = MirrorSet(transmission_oc=600, transmission_hr=10, parasitic_loss_per_mirror=20)
FIBER_MODE_FIELD_DIAMETER = 10e-6
ATOM_OFFSET_TWO_ATOM_NODE = 100e-6


def reference_designs(atom_offset=0.0):
    """Derived parameters of the heralding and entangling cavities.

    ``atom_offset`` displaces the atom along the heralding-cavity axis from its centre.
    """
    herald = design_cavity(
        HERALDING_GEOMETRY,
        HERALDING_MIRRORS,
        BRANCH_HERALD * GAMMA_5P12,
        GAMMA_5P12,
        atom_position=HERALDING_GEOMETRY.length / 2 + atom_offset,
    )
    telecom = design_cavity(
        ENTANGLING_GEOMETRY,
        ENTANGLING_MIRRORS,
        BRANCH_TELECOM * GAMMA_4D_TO_5P12,
        GAMMA_4D32,
    )
    w, roc = output_mode(ENTANGLING_GEOMETRY, mirror=2)
    overlap = fiber_overlap(w, roc, FIBER_MODE_FIELD_DIAMETER / 2, LAMBDA_TELECOM)
    return {"heralding": herald, "entangling": telecom, "fiber_overlap": overlap}
