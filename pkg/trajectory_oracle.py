"""Brute-force phases from the perturbation potentials along classical arms.

The perturbative phase of an interferometer is
``-(1/hbar) * integral (V_upper - V_lower) dt`` over ``[t0, t0 + 2T]``,
with "upper" the arm kicked by the first pulse.  Operators are replaced by
their classical centroid values on the unperturbed trajectories.

On every segment the arm difference of a term is a polynomial in ``t - t0``
times a carrier (``1``, ``cos(theta)`` or ``cos(theta + phi_S)``).  Single
catalog labels are the parts of one polynomial order, so each label gets its
own oracle value.
"""
from __future__ import annotations

import enum
import logging
from dataclasses import dataclass
from typing import Iterable

import numpy as np
from numpy.polynomial import Polynomial

from core_model import CODATA, AtomSpecies, DilatonParams, PerturbationParameters
from phase_catalog import LABELS, MziGeometry, diffraction_inputs, normalize_label, phase_contribution
from quadrature import DEFAULT_RTOL, QuadratureResult, integrate_oscillatory

LOGGER = logging.getLogger(__name__)

__all__ = [
    "ArmSegment",
    "ArmTrajectory",
    "PerturbationTerm",
    "catalog_row_phase",
    "classical_trajectories",
    "label_orders",
    "oracle_label_phase",
    "oracle_label_result",
    "oracle_phase",
    "oracle_phase_result",
]

GROUND = -1
EXCITED = 1


@dataclass(frozen=True)
class ArmSegment:
    t_start: float
    t_end: float
    p_start: float
    z_start: float
    lam: int

    def momentum(self, t, mass: float, g0: float):
        return self.p_start - mass * g0 * (np.asarray(t) - self.t_start)

    def position(self, t, mass: float, g0: float):
        dt = np.asarray(t) - self.t_start
        return self.z_start + self.p_start / mass * dt - 0.5 * g0 * dt * dt

    def momentum_polynomial(self, t0: float, mass: float, g0: float) -> Polynomial:
        """Momentum as a polynomial in ``t - t0``, continued outside the segment."""
        return Polynomial([float(self.momentum(t0, mass, g0)), -mass * g0])

    def position_polynomial(self, t0: float, mass: float, g0: float) -> Polynomial:
        origin = float(self.position(t0, mass, g0))
        velocity = float(self.momentum(t0, mass, g0)) / mass
        return Polynomial([origin, velocity, -0.5 * g0])


@dataclass(frozen=True)
class ArmTrajectory:
    segments: tuple[ArmSegment, ...]
    mass: float
    g0: float

    def segment_at(self, t: float) -> ArmSegment:
        for segment in self.segments:
            if segment.t_start <= t <= segment.t_end:
                return segment
        raise ValueError(f"time {t!r} lies outside the trajectory")

    def position(self, t: float) -> float:
        return float(self.segment_at(t).position(t, self.mass, self.g0))

    def momentum(self, t: float) -> float:
        return float(self.segment_at(t).momentum(t, self.mass, self.g0))

    def state_label(self, t: float) -> int:
        return self.segment_at(t).lam

    @property
    def end_position(self) -> float:
        last = self.segments[-1]
        return float(last.position(last.t_end, self.mass, self.g0))


def _next_segment(previous: ArmSegment, kick: float, lam: int, mass: float, g0: float, T: float):
    t = previous.t_end
    return ArmSegment(
        t_start=t,
        t_end=t + T,
        p_start=float(previous.momentum(t, mass, g0)) + kick,
        z_start=float(previous.position(t, mass, g0)),
        lam=lam,
    )


def classical_trajectories(
    geom: MziGeometry, species: AtomSpecies
) -> tuple[ArmTrajectory, ArmTrajectory]:
    """Unperturbed (upper, lower) arms of the interferometer described by ``geom``."""

    mass, g0, T, t0 = species.mean_mass, geom.g0, geom.T, geom.t0
    hk = geom.photon_momentum
    switches = geom.diffraction.changes_internal_state
    upper_first = ArmSegment(t0, t0 + T, geom.p0 + hk, geom.z0, EXCITED if switches else GROUND)
    lower_first = ArmSegment(t0, t0 + T, geom.p0, geom.z0, GROUND)
    upper = (upper_first, _next_segment(upper_first, -hk, GROUND, mass, g0, T))
    lower = (
        lower_first,
        _next_segment(lower_first, hk, EXCITED if switches else GROUND, mass, g0, T),
    )
    return ArmTrajectory(upper, mass, g0), ArmTrajectory(lower, mass, g0)


class PerturbationTerm(str, enum.Enum):
    """Additive terms of the rest-mass, kinetic and potential perturbations."""

    REST_MEAN_MASS = "rest.mean_mass"
    REST_MASS_DEFECT = "rest.mass_defect"
    REST_TRANSITION = "rest.transition"
    KINETIC_MEAN_MASS = "kinetic.mean_mass"
    KINETIC_MASS_DEFECT = "kinetic.mass_defect"
    KINETIC_TRANSITION = "kinetic.transition"
    POTENTIAL_EP = "potential.ep"
    POTENTIAL_STATE_EP = "potential.state_ep"
    POTENTIAL_SOURCE = "potential.source"
    POTENTIAL_MEAN_MASS = "potential.mean_mass"
    POTENTIAL_MASS_DEFECT = "potential.mass_defect"
    POTENTIAL_TRANSITION = "potential.transition"

    @property
    def labels(self) -> tuple[str, ...]:
        """Catalog labels whose sum this term produces."""
        return tuple(label for label in LABELS if _LABEL_ORDERS[label][0] is self)

    @property
    def family(self) -> str:
        return self.value.split(".", 1)[0]


# label -> (term, polynomial orders in t - t0); None takes every order
_LABEL_ORDERS: dict[str, tuple[PerturbationTerm, tuple[int, ...] | None]] = {
    "m": (PerturbationTerm.REST_TRANSITION, None),
    "1": (PerturbationTerm.KINETIC_MEAN_MASS, (0,)),
    "2": (PerturbationTerm.KINETIC_MEAN_MASS, (1, 2)),
    "3": (PerturbationTerm.KINETIC_MASS_DEFECT, None),
    "4": (PerturbationTerm.KINETIC_TRANSITION, (0,)),
    "5": (PerturbationTerm.KINETIC_TRANSITION, (1,)),
    "6": (PerturbationTerm.KINETIC_TRANSITION, (2,)),
    "7": (PerturbationTerm.POTENTIAL_EP, None),
    "8": (PerturbationTerm.POTENTIAL_STATE_EP, None),
    "9": (PerturbationTerm.POTENTIAL_SOURCE, None),
    "10": (PerturbationTerm.POTENTIAL_MEAN_MASS, None),
    "11": (PerturbationTerm.POTENTIAL_MASS_DEFECT, None),
    "12": (PerturbationTerm.POTENTIAL_TRANSITION, (0,)),
    "13": (PerturbationTerm.POTENTIAL_TRANSITION, (1,)),
    "14": (PerturbationTerm.POTENTIAL_TRANSITION, (2,)),
}

_STATIC_TERMS = frozenset(
    {
        PerturbationTerm.REST_MASS_DEFECT,
        PerturbationTerm.KINETIC_MASS_DEFECT,
        PerturbationTerm.POTENTIAL_EP,
        PerturbationTerm.POTENTIAL_STATE_EP,
        PerturbationTerm.POTENTIAL_MASS_DEFECT,
    }
)


def label_orders(label) -> tuple[PerturbationTerm, tuple[int, ...] | None]:
    return _LABEL_ORDERS[normalize_label(label)]


def _state_weight(
    term: PerturbationTerm,
    species: AtomSpecies,
    dilaton: DilatonParams,
    pert: PerturbationParameters,
    lam: int,
) -> float:
    half_lam = 0.5 * lam
    if term is PerturbationTerm.REST_TRANSITION:
        # state part of m_lam * eps_lam with m_lam = m(1 + lam*dmu0/2), eps_lam = eps + lam*deps/2
        return half_lam * dilaton.rho_0 * (species.delta_eps + species.delta_mu0 * species.eps_bar)
    if term in (
        PerturbationTerm.REST_MASS_DEFECT,
        PerturbationTerm.KINETIC_MASS_DEFECT,
        PerturbationTerm.POTENTIAL_MASS_DEFECT,
    ):
        return half_lam * species.delta_mu0
    if term in (PerturbationTerm.KINETIC_TRANSITION, PerturbationTerm.POTENTIAL_TRANSITION):
        return half_lam * pert.delta_mu_amp
    if term is PerturbationTerm.POTENTIAL_STATE_EP:
        return half_lam * pert.delta_gamma_EP
    if term is PerturbationTerm.POTENTIAL_EP:
        return pert.gamma_bar_EP
    if term is PerturbationTerm.POTENTIAL_SOURCE:
        return pert.gamma_DM_amp
    return pert.mu_bar_amp


def _energy(
    term: PerturbationTerm,
    segment: ArmSegment,
    species: AtomSpecies,
    dilaton: DilatonParams,
    pert: PerturbationParameters,
    t0: float,
    g0: float,
) -> Polynomial:
    """Energy of ``term`` on ``segment`` without its carrier, in powers of ``t - t0``."""

    mass = species.mean_mass
    if term.family == "rest":
        base = Polynomial([mass * CODATA.c**2])
    elif term.family == "kinetic":
        p = segment.momentum_polynomial(t0, mass, g0)
        base = p * p * (-0.5 / mass)
    else:
        base = segment.position_polynomial(t0, mass, g0) * (mass * g0)
    return base * _state_weight(term, species, dilaton, pert, segment.lam)


def _carrier(term: PerturbationTerm, dilaton: DilatonParams, t):
    if term in _STATIC_TERMS:
        return np.ones_like(t)
    theta = dilaton.omega_rho * t + dilaton.phi_rho
    if term is PerturbationTerm.POTENTIAL_SOURCE:
        return np.cos(theta + dilaton.phi_S)
    return np.cos(theta)


def _keep_orders(poly: Polynomial, orders: tuple[int, ...] | None) -> Polynomial:
    if orders is None:
        return poly
    return Polynomial([c if n in orders else 0.0 for n, c in enumerate(poly.coef)])


def _integrate(
    parts: tuple[tuple[PerturbationTerm, tuple[int, ...] | None], ...],
    geom: MziGeometry,
    species: AtomSpecies,
    dilaton: DilatonParams,
    pert: PerturbationParameters,
    rtol: float,
) -> QuadratureResult:
    species, pert = diffraction_inputs(geom, species, dilaton, pert)
    upper, lower = classical_trajectories(geom, species)
    t0, g0 = geom.t0, geom.g0

    def integrand(upper_segment: ArmSegment, lower_segment: ArmSegment):
        pieces = []
        for term, orders in parts:
            difference = _energy(term, upper_segment, species, dilaton, pert, t0, g0) - _energy(
                term, lower_segment, species, dilaton, pert, t0, g0
            )
            pieces.append((term, _keep_orders(difference, orders)))

        def phase_rate(t):
            total = np.zeros_like(t)
            for term, poly in pieces:
                total = total + poly(t - t0) * _carrier(term, dilaton, t)
            return -total / CODATA.hbar

        return phase_rate

    result = QuadratureResult(0.0, 0.0, 0)
    for upper_segment, lower_segment in zip(upper.segments, lower.segments):
        result = result + integrate_oscillatory(
            integrand(upper_segment, lower_segment),
            upper_segment.t_start,
            upper_segment.t_end,
            dilaton.omega_rho,
            rtol=rtol,
        )
    return result


def oracle_phase_result(
    terms: PerturbationTerm | Iterable[PerturbationTerm],
    geom: MziGeometry,
    species: AtomSpecies,
    dilaton: DilatonParams,
    pert: PerturbationParameters,
    *,
    rtol: float = DEFAULT_RTOL,
) -> QuadratureResult:
    """Integrate the arm difference of the summed potentials of ``terms``."""

    if isinstance(terms, (PerturbationTerm, str)):
        terms = (terms,)
    terms = tuple(PerturbationTerm(term) for term in terms)
    result = _integrate(tuple((term, None) for term in terms), geom, species, dilaton, pert, rtol)
    LOGGER.debug(
        "oracle %s: %.6e rad (magnitude %.3e, %d panels)",
        ",".join(term.value for term in terms),
        result.value,
        result.magnitude,
        result.panels,
    )
    return result


def oracle_label_result(
    label,
    geom: MziGeometry,
    species: AtomSpecies,
    dilaton: DilatonParams,
    pert: PerturbationParameters,
    *,
    rtol: float = DEFAULT_RTOL,
) -> QuadratureResult:
    """Oracle value of one catalog label: its term restricted to the label's orders."""

    term, orders = label_orders(label)
    return _integrate(((term, orders),), geom, species, dilaton, pert, rtol)


def oracle_phase(
    term: PerturbationTerm,
    geom: MziGeometry,
    species: AtomSpecies,
    dilaton: DilatonParams,
    pert: PerturbationParameters,
) -> float:
    return oracle_phase_result(term, geom, species, dilaton, pert).value


def oracle_label_phase(
    label,
    geom: MziGeometry,
    species: AtomSpecies,
    dilaton: DilatonParams,
    pert: PerturbationParameters,
) -> float:
    return oracle_label_result(label, geom, species, dilaton, pert).value


def catalog_row_phase(
    term: PerturbationTerm,
    geom: MziGeometry,
    species: AtomSpecies,
    dilaton: DilatonParams,
    pert: PerturbationParameters,
) -> float:
    """Sum of the closed-form contributions produced by ``term``."""

    total = 0.0
    for label in PerturbationTerm(term).labels:
        total += phase_contribution(label, geom, species, dilaton, pert)
    return total
