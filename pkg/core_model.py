"""Physical constants, atomic species and dilaton parameters.

All quantities are stored in SI units.  Conversions from laboratory units
(atomic mass units, Hz, GeV/cm^3) happen in the constructors below and in
:mod:`scenario_config`.
"""
from __future__ import annotations

import logging
import math
from dataclasses import dataclass, replace

import numpy as np
import scipy.constants as sc

LOGGER = logging.getLogger(__name__)

__all__ = [
    "CODATA",
    "DEFAULT_RHO_DM",
    "AtomSpecies",
    "DilatonParams",
    "DomainError",
    "PerturbationParameters",
    "PhysicalConstants",
    "SPECIES_PRESETS",
    "compton_modulation_amplitude",
    "dilaton_amplitude",
    "dilaton_field",
    "gev_per_cm3_to_si",
    "perturbation_parameters",
    "species_preset",
    "transition_modulation_amplitude",
]


class DomainError(ValueError):
    """Raised when an input lies outside the domain of a model formula."""


@dataclass(frozen=True)
class PhysicalConstants:
    c: float
    hbar: float
    G: float

    @classmethod
    def codata(cls) -> "PhysicalConstants":
        return cls(c=sc.c, hbar=sc.hbar, G=sc.G)

    @property
    def planck_mass(self) -> float:
        return math.sqrt(self.hbar * self.c / self.G)

    @property
    def planck_length(self) -> float:
        return math.sqrt(self.hbar * self.G / self.c**3)


CODATA = PhysicalConstants.codata()


def gev_per_cm3_to_si(value: float) -> float:
    """Convert an energy density from GeV/cm^3 to J/m^3."""

    return value * sc.giga * sc.electron_volt / sc.centi**3


# Local dark-matter density, 0.4 GeV/cm^3.
DEFAULT_RHO_DM = gev_per_cm3_to_si(0.4)


@dataclass(frozen=True)
class AtomSpecies:
    """Two-level atom with state-dependent dilaton couplings.

    ``mean_mass`` and ``mass_defect`` are the mean rest mass of the two
    internal states and their difference (excited minus ground), in kg.
    The couplings are stored as their mean ``eps_bar`` and difference
    ``delta_eps`` (excited minus ground); the per-state values are derived.
    """

    mean_mass: float
    mass_defect: float = 0.0
    eps_bar: float = 0.0
    delta_eps: float = 0.0
    name: str = "custom"

    def __post_init__(self) -> None:
        if not self.mean_mass > 0:
            raise DomainError(f"mean_mass must be positive, got {self.mean_mass!r}")
        if not abs(self.mass_defect) < self.mean_mass:
            raise DomainError("mass_defect must be smaller in magnitude than mean_mass")

    @classmethod
    def from_state_couplings(
        cls,
        mean_mass: float,
        mass_defect: float = 0.0,
        eps_g: float = 0.0,
        eps_e: float = 0.0,
        name: str = "custom",
    ) -> "AtomSpecies":
        return cls(mean_mass, mass_defect, 0.5 * (eps_e + eps_g), eps_e - eps_g, name)

    @classmethod
    def from_transition_frequency(
        cls,
        mass_u: float,
        transition_hz: float,
        *,
        eps_bar: float = 0.0,
        delta_eps: float = 0.0,
        name: str = "custom",
    ) -> "AtomSpecies":
        """Build a species from its mass in u and its transition frequency in Hz."""

        mean_mass = mass_u * sc.atomic_mass
        mass_defect = sc.hbar * 2.0 * math.pi * transition_hz / sc.c**2
        return cls(mean_mass, mass_defect, eps_bar, delta_eps, name)

    @property
    def eps_g(self) -> float:
        return self.eps_bar - 0.5 * self.delta_eps

    @property
    def eps_e(self) -> float:
        return self.eps_bar + 0.5 * self.delta_eps

    @property
    def delta_mu0(self) -> float:
        return self.mass_defect / self.mean_mass

    @property
    def compton_frequency(self) -> float:
        return self.mean_mass * CODATA.c**2 / CODATA.hbar

    @property
    def transition_frequency(self) -> float:
        return self.mass_defect * CODATA.c**2 / CODATA.hbar

    def with_couplings(self, eps_g: float, eps_e: float) -> "AtomSpecies":
        return replace(self, eps_bar=0.5 * (eps_e + eps_g), delta_eps=eps_e - eps_g)

    def state_preserving(self) -> "AtomSpecies":
        """Species seen by a diffraction process that never changes the internal state.

        Both arms then share one internal state: the mass defect and the
        coupling difference drop out while the mean coupling is kept.
        """

        return replace(self, mass_defect=0.0, delta_eps=0.0)


# Mass in u and transition frequency in Hz.  Strontium: 1S0-3P0 clock line,
# rubidium: ground-state hyperfine splitting.
SPECIES_PRESETS: dict[str, tuple[float, float]] = {
    "strontium-88": (87.9056122571, 429_228_004_229_873.0),
    "rubidium-87": (86.909180531, 6_834_682_610.904),
}


def species_preset(name: str, *, eps_g: float = 0.0, eps_e: float = 0.0) -> AtomSpecies:
    try:
        mass_u, transition_hz = SPECIES_PRESETS[name]
    except KeyError as exc:
        valid = ", ".join(sorted(SPECIES_PRESETS))
        raise DomainError(f"Unknown species preset {name!r} (valid: {valid})") from exc
    species = AtomSpecies.from_transition_frequency(mass_u, transition_hz, name=name)
    return species.with_couplings(eps_g, eps_e)


def dilaton_amplitude(
    omega_rho: float, rho_dm: float, constants: PhysicalConstants = CODATA
) -> float:
    """Dimensionless field amplitude for a dark-matter energy density ``rho_dm`` (J/m^3)."""

    if not omega_rho > 0:
        raise DomainError(f"omega_rho must be positive, got {omega_rho!r}")
    if rho_dm < 0:
        raise DomainError(f"rho_dm must be non-negative, got {rho_dm!r}")
    rest_energy = constants.planck_mass * constants.c**2
    ratio = 8.0 * math.pi * rho_dm * constants.planck_length**3 / rest_energy
    return rest_energy / (constants.hbar * omega_rho) * math.sqrt(ratio)


@dataclass(frozen=True)
class DilatonParams:
    omega_rho: float
    rho_0: float
    phi_rho: float = 0.0
    eps_S: float = 0.0
    phi_S: float = 0.0
    rho_dm: float | None = None

    def __post_init__(self) -> None:
        if not self.omega_rho > 0:
            raise DomainError(f"omega_rho must be positive, got {self.omega_rho!r}")
        if self.rho_0 < 0:
            raise DomainError(f"rho_0 must be non-negative, got {self.rho_0!r}")
        object.__setattr__(self, "phi_rho", float(np.mod(self.phi_rho, 2.0 * math.pi)))

    @classmethod
    def from_density(
        cls,
        omega_rho: float,
        rho_dm: float = DEFAULT_RHO_DM,
        *,
        phi_rho: float = 0.0,
        eps_S: float = 0.0,
        phi_S: float = 0.0,
    ) -> "DilatonParams":
        rho_0 = dilaton_amplitude(omega_rho, rho_dm)
        return cls(omega_rho, rho_0, phi_rho, eps_S, phi_S, rho_dm)

    def with_phase(self, phi_rho: float) -> "DilatonParams":
        return replace(self, phi_rho=phi_rho)


def dilaton_field(z, t, params: DilatonParams, g0: float):
    """Field value at height ``z`` and time ``t``; accepts scalars or arrays."""

    gradient = params.eps_S * g0 * np.asarray(z) / CODATA.c**2
    oscillation = params.rho_0 * np.cos(params.omega_rho * np.asarray(t) + params.phi_rho)
    result = gradient + oscillation
    return float(result) if np.ndim(result) == 0 else result


@dataclass(frozen=True)
class PerturbationParameters:
    mu_bar_amp: float
    delta_mu_amp: float
    gamma_bar_EP: float
    delta_gamma_EP: float
    gamma_DM_amp: float
    include_brace_terms: bool = False


def perturbation_parameters(
    species: AtomSpecies, dilaton: DilatonParams, include_brace_terms: bool = False
) -> PerturbationParameters:
    rho_0 = dilaton.rho_0
    mu_bar = species.eps_bar
    delta_mu = species.delta_eps
    if include_brace_terms:
        mu_bar += species.mass_defect * species.delta_eps / (4.0 * species.mean_mass)
        delta_mu += species.mass_defect * species.eps_bar / species.mean_mass
    return PerturbationParameters(
        mu_bar_amp=rho_0 * mu_bar,
        delta_mu_amp=rho_0 * delta_mu,
        gamma_bar_EP=dilaton.eps_S * species.eps_bar,
        delta_gamma_EP=dilaton.eps_S * species.delta_eps,
        gamma_DM_amp=dilaton.eps_S * rho_0,
        include_brace_terms=include_brace_terms,
    )


def transition_modulation_amplitude(species: AtomSpecies, rho_0: float) -> float:
    """Amplitude of the oscillation of the transition frequency, in rad/s."""

    return (
        species.compton_frequency * species.delta_eps
        + species.transition_frequency * species.eps_bar
    ) * rho_0


def compton_modulation_amplitude(species: AtomSpecies, rho_0: float) -> float:
    """Amplitude of the oscillation of the Compton frequency, in rad/s."""

    return (
        species.compton_frequency * species.eps_bar
        + species.transition_frequency * species.delta_eps / 4.0
    ) * rho_0
