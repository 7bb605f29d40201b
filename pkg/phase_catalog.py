"""Closed-form dilaton phase contributions of a single Mach-Zehnder interferometer.

Labels are ``"m"`` (oscillating transition frequency) and ``"1"`` .. ``"14"``.
Every oscillating contribution is a prefactor times one of the time scales of
:mod:`timescales`; the rest are constant in time.
"""
from __future__ import annotations

import enum
import logging
from dataclasses import dataclass, field, replace

import numpy as np

from core_model import (
    CODATA,
    AtomSpecies,
    DilatonParams,
    DomainError,
    PerturbationParameters,
    perturbation_parameters,
    transition_modulation_amplitude,
)
from timescales import TimescaleKind, mirror_phase, timescale, timescale_harmonics

LOGGER = logging.getLogger(__name__)

__all__ = [
    "BRAGG_NULL_LABELS",
    "LABELS",
    "Diffraction",
    "MziGeometry",
    "PhaseBreakdown",
    "PhaseHarmonic",
    "diffraction_inputs",
    "normalize_label",
    "phase_breakdown",
    "phase_contribution",
    "phase_harmonics",
    "standard_phase",
]

LABELS: tuple[str, ...] = ("m",) + tuple(str(i) for i in range(1, 15))
# Labels carrying a mass-defect or coupling-difference factor.
BRAGG_NULL_LABELS = frozenset({"m", "3", "4", "5", "6", "8", "11", "12", "13", "14"})


class Diffraction(str, enum.Enum):
    SINGLE_PHOTON = "single-photon"
    RAMAN = "raman"
    BRAGG = "bragg"

    @property
    def changes_internal_state(self) -> bool:
        return self is not Diffraction.BRAGG


@dataclass(frozen=True)
class MziGeometry:
    k: float
    T: float
    t0: float = 0.0
    z0: float = 0.0
    p0: float = 0.0
    g0: float = 9.81
    diffraction: Diffraction = Diffraction.SINGLE_PHOTON

    def __post_init__(self) -> None:
        if self.k == 0:
            raise DomainError("wavevector k must be non-zero")
        if not self.T > 0:
            raise DomainError(f"T must be positive, got {self.T!r}")
        object.__setattr__(self, "diffraction", Diffraction(self.diffraction))

    @property
    def photon_momentum(self) -> float:
        return CODATA.hbar * self.k

    def dimensionless_momentum(self) -> float:
        return self.p0 / self.photon_momentum

    def midpoint_momentum(self, species: AtomSpecies) -> float:
        """Mean dimensionless momentum of both arms right before the mirror pulse."""

        return (
            self.p0 - species.mean_mass * self.g0 * self.T + 0.5 * self.photon_momentum
        ) / self.photon_momentum

    def recoil_frequency(self, species: AtomSpecies) -> float:
        return CODATA.hbar * self.k**2 / (2.0 * species.mean_mass)

    def moved(self, *, z0: float, p0: float, t0: float) -> "MziGeometry":
        return replace(self, z0=z0, p0=p0, t0=t0)


def normalize_label(label) -> str:
    text = str(label).strip().lower()
    if text not in LABELS:
        raise DomainError(f"Unknown phase label {label!r} (valid: {', '.join(LABELS)})")
    return text


def standard_phase(geom: MziGeometry) -> float:
    return -geom.k * geom.g0 * geom.T**2


def diffraction_inputs(
    geom: MziGeometry,
    species: AtomSpecies,
    dilaton: DilatonParams,
    pert: PerturbationParameters,
) -> tuple[AtomSpecies, PerturbationParameters]:
    """Species and amplitudes as seen by the diffraction process of ``geom``."""

    if geom.diffraction.changes_internal_state:
        return species, pert
    species = species.state_preserving()
    return species, perturbation_parameters(species, dilaton, pert.include_brace_terms)


def _mass_defect_phase(geom: MziGeometry, species: AtomSpecies) -> float:
    k, g, T = geom.k, geom.g0, geom.T
    return species.delta_mu0 * k * g * T**2 * geom.midpoint_momentum(species)


def _transition_kinetic_drift(geom: MziGeometry, pert: PerturbationParameters) -> float:
    return -pert.delta_mu_amp * geom.k * geom.g0 * (geom.dimensionless_momentum() + 0.5)


def _transition_gravity_curvature(
    geom: MziGeometry, species: AtomSpecies, pert: PerturbationParameters
) -> float:
    return pert.delta_mu_amp * geom.g0**2 / (2.0 * CODATA.c**2) * species.compton_frequency


def _label_term(
    label: str,
    geom: MziGeometry,
    species: AtomSpecies,
    dilaton: DilatonParams,
    pert: PerturbationParameters,
) -> tuple[float, TimescaleKind | None]:
    """Return ``(prefactor, kind)``; constant contributions come back with ``kind=None``."""

    k, g, T = geom.k, geom.g0, geom.T
    momentum = geom.dimensionless_momentum()
    recoil = geom.recoil_frequency(species)
    if label == "m":
        return -transition_modulation_amplitude(species, dilaton.rho_0), TimescaleKind.TAU1
    if label == "1":
        return pert.mu_bar_amp * recoil * (1.0 + 2.0 * momentum), TimescaleKind.TAU1
    if label == "2":
        return -pert.mu_bar_amp * k * g, TimescaleKind.TAU2_SQ
    if label in ("3", "11"):
        return _mass_defect_phase(geom, species), None
    if label == "4":
        factor = momentum * momentum + momentum + 0.5
        return pert.delta_mu_amp * recoil * factor, TimescaleKind.TAU1
    if label in ("5", "13"):
        return _transition_kinetic_drift(geom, pert), TimescaleKind.TAU2_SQ
    if label in ("6", "14"):
        return _transition_gravity_curvature(geom, species, pert), TimescaleKind.TAU3_CU
    if label == "7":
        return -pert.gamma_bar_EP * k * g * T**2, None
    if label == "8":
        return pert.delta_gamma_EP * k * g * T**2 * geom.midpoint_momentum(species), None
    if label == "9":
        return -pert.gamma_DM_amp * k * g, TimescaleKind.TAU_S_SQ
    if label == "10":
        return -pert.mu_bar_amp * k * g, TimescaleKind.TAU_EP_SQ
    # label 12: gravitational redshift of the transition frequency at z0
    redshift = g * geom.z0 / CODATA.c**2
    return -pert.delta_mu_amp * redshift * species.compton_frequency, TimescaleKind.TAU1


def phase_contribution(
    label,
    geom: MziGeometry,
    species: AtomSpecies,
    dilaton: DilatonParams,
    pert: PerturbationParameters,
) -> float:
    label = normalize_label(label)
    if not geom.diffraction.changes_internal_state and label in BRAGG_NULL_LABELS:
        return 0.0
    species, pert = diffraction_inputs(geom, species, dilaton, pert)
    prefactor, kind = _label_term(label, geom, species, dilaton, pert)
    if kind is None:
        return prefactor
    return prefactor * timescale(
        kind, geom.t0, geom.T, dilaton.omega_rho, dilaton.phi_rho, dilaton.phi_S
    )


@dataclass(frozen=True)
class PhaseHarmonic:
    """``phi = sin_coeff*sin(theta) + cos_coeff*cos(theta) + constant``.

    ``theta`` is the dilaton phase at the mirror pulse of the interferometer.
    """

    sin_coeff: float = 0.0
    cos_coeff: float = 0.0
    constant: float = 0.0

    def evaluate(self, theta):
        return self.sin_coeff * np.sin(theta) + self.cos_coeff * np.cos(theta) + self.constant


def phase_harmonics(
    label,
    geom: MziGeometry,
    species: AtomSpecies,
    dilaton: DilatonParams,
    pert: PerturbationParameters,
    phi_S: float | None = None,
) -> PhaseHarmonic:
    """Decompose a contribution into harmonics of the mirror-pulse phase.

    ``phi_S`` overrides ``dilaton.phi_S`` (used when averaging over it).
    """

    label = normalize_label(label)
    if not geom.diffraction.changes_internal_state and label in BRAGG_NULL_LABELS:
        return PhaseHarmonic()
    species, pert = diffraction_inputs(geom, species, dilaton, pert)
    prefactor, kind = _label_term(label, geom, species, dilaton, pert)
    if kind is None:
        return PhaseHarmonic(constant=prefactor)
    phase_offset = dilaton.phi_S if phi_S is None else phi_S
    a, b = timescale_harmonics(kind, geom.T, dilaton.omega_rho, phase_offset)
    return PhaseHarmonic(prefactor * a, prefactor * b)


@dataclass(frozen=True)
class PhaseBreakdown:
    standard: float
    contributions: dict[str, float] = field(default_factory=dict)
    total: float = 0.0

    def nonzero_labels(self) -> tuple[str, ...]:
        return tuple(label for label in LABELS if self.contributions.get(label, 0.0) != 0.0)


def phase_breakdown(
    geom: MziGeometry,
    species: AtomSpecies,
    dilaton: DilatonParams,
    pert: PerturbationParameters,
) -> PhaseBreakdown:
    contributions = {
        label: phase_contribution(label, geom, species, dilaton, pert) for label in LABELS
    }
    standard = standard_phase(geom)
    total = standard
    for label in LABELS:
        total += contributions[label]
    LOGGER.debug(
        "phase breakdown at t0=%g: theta=%g, total=%g",
        geom.t0,
        float(mirror_phase(geom.t0, geom.T, dilaton.omega_rho, dilaton.phi_rho)),
        total,
    )
    return PhaseBreakdown(standard, contributions, total)
