"""Gradiometer differential phases and the stochastic signal amplitude.

Two interferometers share the light pulses; the upper one starts a light
travel time ``tau_L = L/c`` later, at height ``z0 + L`` with momentum ``p1``.
The signal amplitude is twice the average over the dilaton phase of the
squared differential phase:

    Phi_S^2 = 2 * < (sum_i dphi_i)^2 > = 2 * sum_{i,j} <dphi_i dphi_j>

``SignalBreakdown.correlations`` stores ``<dphi_i dphi_j>`` for both orders
of every pair, so an off-diagonal pair enters ``Phi_S^2`` with weight 4.
"""
from __future__ import annotations

import enum
import logging
import math
from dataclasses import dataclass, field, replace
from typing import Iterable, Sequence

import numpy as np

from core_model import (
    CODATA,
    AtomSpecies,
    DilatonParams,
    DomainError,
    PerturbationParameters,
    transition_modulation_amplitude,
)
from phase_catalog import (
    LABELS,
    Diffraction,
    MziGeometry,
    PhaseHarmonic,
    diffraction_inputs,
    normalize_label,
    phase_harmonics,
)
from timescales import linear_moment, mirror_phase, quadratic_moment

LOGGER = logging.getLogger(__name__)

__all__ = [
    "CATALOGED_PAIRS",
    "DEFAULT_PHI_NODES",
    "DEFAULT_PHI_S_NODES",
    "AveragingMode",
    "GradiometerConfig",
    "NotCatalogedError",
    "Regime",
    "SignalBreakdown",
    "SignalMethod",
    "correlation_analytic",
    "coupling_ratio_map",
    "differential_phase",
    "dominance_ranking",
    "frequency_scales",
    "next_order_ratio",
    "reduced_correlation",
    "regime_amplitude",
    "regime_applies",
    "signal_amplitude_catalog",
    "signal_amplitude_numeric",
    "uncataloged_remainder",
]

DEFAULT_PHI_NODES = 256
DEFAULT_PHI_S_NODES = 64


class NotCatalogedError(LookupError):
    pass


@dataclass(frozen=True)
class GradiometerConfig:
    geom: MziGeometry
    L: float
    p1: float = 0.0

    def __post_init__(self) -> None:
        if not self.L > 0:
            raise DomainError(f"baseline L must be positive, got {self.L!r}")

    @property
    def tau_L(self) -> float:
        return self.L / CODATA.c

    def upper_geometry(self) -> MziGeometry:
        geom = self.geom
        return geom.moved(z0=geom.z0 + self.L, p0=self.p1, t0=geom.t0 + self.tau_L)

    def mean_momentum(self) -> float:
        return (self.p1 + self.geom.p0) / (2.0 * self.geom.photon_momentum)

    def momentum_spread(self) -> float:
        return (self.p1 - self.geom.p0) / self.geom.photon_momentum


def _pair_key(i, j) -> tuple[str, str]:
    a, b = normalize_label(i), normalize_label(j)
    if LABELS.index(a) > LABELS.index(b):
        a, b = b, a
    return a, b


def _harmonic_difference(lower: PhaseHarmonic, upper: PhaseHarmonic, theta, delta: float):
    """``upper(theta + delta) - lower(theta)`` without cancelling near-equal terms."""

    chord = 2.0 * math.sin(0.5 * delta)
    mid = theta + 0.5 * delta
    shifted = theta + delta
    return (
        (upper.sin_coeff - lower.sin_coeff) * np.sin(shifted)
        + lower.sin_coeff * chord * np.cos(mid)
        + (upper.cos_coeff - lower.cos_coeff) * np.cos(shifted)
        - lower.cos_coeff * chord * np.sin(mid)
        + (upper.constant - lower.constant)
    )


def differential_phase(
    label,
    grad: GradiometerConfig,
    species: AtomSpecies,
    dilaton: DilatonParams,
    pert: PerturbationParameters,
    phi_rho=None,
    *,
    phi_S: float | None = None,
):
    """``phi(upper) - phi(lower)`` for one label; ``phi_rho`` may be an array.

    ``phi_rho`` defaults to ``dilaton.phi_rho``.
    """

    if phi_rho is None:
        phi_rho = dilaton.phi_rho
    geom = grad.geom
    lower = phase_harmonics(label, geom, species, dilaton, pert, phi_S)
    upper = phase_harmonics(label, grad.upper_geometry(), species, dilaton, pert, phi_S)
    theta = mirror_phase(geom.t0, geom.T, dilaton.omega_rho, phi_rho)
    value = _harmonic_difference(lower, upper, theta, dilaton.omega_rho * grad.tau_L)
    return float(value) if np.ndim(value) == 0 else value


class SignalMethod(str, enum.Enum):
    ANALYTIC_CATALOG = "analytic-catalog"
    NUMERIC_AVERAGE = "numeric-average"


class AveragingMode(str, enum.Enum):
    COHERENT = "coherent"
    INDEPENDENT_PHI_S = "independent-phiS"


@dataclass(frozen=True)
class SignalBreakdown:
    correlations: dict[tuple[str, str], float] = field(default_factory=dict)
    total: float = 0.0
    method: SignalMethod = SignalMethod.NUMERIC_AVERAGE

    def value(self, i, j) -> float:
        return self.correlations[_pair_key(i, j)]

    def pairs(self) -> list[tuple[str, str]]:
        """Pairs with ``i`` not after ``j`` in label order."""
        return sorted(
            {_pair_key(i, j) for i, j in self.correlations},
            key=lambda pair: (LABELS.index(pair[0]), LABELS.index(pair[1])),
        )

    def weighted(self, i, j) -> float:
        """Contribution of the unordered pair to ``total``."""
        key = _pair_key(i, j)
        return (2.0 if key[0] == key[1] else 4.0) * self.correlations[key]


def _symmetric(values: dict[tuple[str, str], float]) -> dict[tuple[str, str], float]:
    full: dict[tuple[str, str], float] = {}
    for (i, j), value in values.items():
        full[(i, j)] = value
        full[(j, i)] = value
    return full


def _phase_nodes(nodes: int, offset: float) -> np.ndarray:
    if nodes < 1:
        raise DomainError("at least one averaging node is required")
    return offset + 2.0 * math.pi * np.arange(nodes) / nodes


def signal_amplitude_numeric(
    grad: GradiometerConfig,
    species: AtomSpecies,
    dilaton: DilatonParams,
    pert: PerturbationParameters,
    mode: AveragingMode | str = AveragingMode.COHERENT,
    *,
    nodes: int = DEFAULT_PHI_NODES,
    phi_s_nodes: int = DEFAULT_PHI_S_NODES,
    offset: float = 0.0,
    labels: Sequence[str] = LABELS,
) -> SignalBreakdown:
    """Average the differential phases over uniform dilaton-phase nodes.

    The integrands are trigonometric polynomials of low order, for which the
    uniform trapezoid rule is exact.
    """

    mode = AveragingMode(mode)
    labels = list(dict.fromkeys(normalize_label(label) for label in labels))
    phi_rho = _phase_nodes(nodes, offset)
    if mode is AveragingMode.COHERENT:
        phases = [dilaton.phi_S]
    else:
        phases = list(_phase_nodes(phi_s_nodes, 0.0))

    blocks = []
    for phi_S in phases:
        blocks.append(
            np.vstack(
                [
                    differential_phase(label, grad, species, dilaton, pert, phi_rho, phi_S=phi_S)
                    for label in labels
                ]
            )
        )
    rows = np.hstack(blocks)
    count = rows.shape[1]

    correlations: dict[tuple[str, str], float] = {}
    for a, first in enumerate(labels):
        for b in range(a, len(labels)):
            correlations[(first, labels[b])] = math.fsum(rows[a] * rows[b]) / count
    combined = rows.sum(axis=0)
    total = 2.0 * math.fsum(combined * combined) / count
    LOGGER.debug("numeric signal (%s, %d nodes): %.6e", mode.value, count, total)
    return SignalBreakdown(_symmetric(correlations), total, SignalMethod.NUMERIC_AVERAGE)


@dataclass(frozen=True)
class _PairInputs:
    omega: float
    x: float
    S: float
    C: float
    SL: float
    CL: float
    S2L: float
    a1: float
    b2: float
    delta_omega: float
    mu_bar: float
    delta_mu: float
    gamma_dm: float
    recoil: float
    kg: float
    T: float
    g0: float
    compton: float
    mean_momentum: float
    spread: float
    phi_S: float
    height_sum: float


def _pair_inputs(
    grad: GradiometerConfig,
    species: AtomSpecies,
    dilaton: DilatonParams,
    pert: PerturbationParameters,
) -> _PairInputs:
    geom = grad.geom
    species, pert = diffraction_inputs(geom, species, dilaton, pert)
    omega = dilaton.omega_rho
    x = omega * geom.T
    delta = omega * grad.tau_L
    return _PairInputs(
        omega=omega,
        x=x,
        S=math.sin(0.5 * x),
        C=math.cos(0.5 * x),
        SL=math.sin(0.5 * delta),
        CL=math.cos(0.5 * delta),
        S2L=math.sin(delta),
        a1=linear_moment(x),
        b2=quadratic_moment(x),
        delta_omega=transition_modulation_amplitude(species, dilaton.rho_0),
        mu_bar=pert.mu_bar_amp,
        delta_mu=pert.delta_mu_amp,
        gamma_dm=pert.gamma_DM_amp,
        recoil=geom.recoil_frequency(species),
        kg=geom.k * geom.g0,
        T=geom.T,
        g0=geom.g0,
        compton=species.compton_frequency,
        mean_momentum=grad.mean_momentum(),
        spread=grad.momentum_spread(),
        phi_S=dilaton.phi_S,
        height_sum=2.0 * geom.z0 + grad.L,
    )


def _mm(p: _PairInputs) -> float:
    return 32.0 * (p.delta_omega / p.omega) ** 2 * p.SL**2 * p.S**4


def _m1(p: _PairInputs) -> float:
    factor = 2.0 + 4.0 * p.mean_momentum
    return (
        -16.0 * (p.delta_omega / p.omega) * (p.recoil / p.omega) * p.mu_bar
        * factor * p.SL**2 * p.S**4
    )


def _m2(p: _PairInputs) -> float:
    return 32.0 * (p.delta_omega / p.omega) * (p.kg * p.T / p.omega) * p.mu_bar * p.SL**2 * p.S**4


def _m4(p: _PairInputs) -> float:
    pb, dp = p.mean_momentum, p.spread
    factor = 2.0 + 4.0 * pb * (1.0 + pb) + dp * dp
    return (
        -8.0 * (p.delta_omega / p.omega) * (p.recoil / p.omega) * p.delta_mu
        * factor * p.SL**2 * p.S**4
    )


def _m5(p: _PairInputs) -> float:
    drift = 2.0 * (1.0 + 2.0 * p.mean_momentum) * p.x * (2.0 * p.SL**2) * p.S**2
    # cos(x) + x sin(x) - 1 == x^2 * linear_moment(x)
    spread = p.spread * p.S2L * p.x * p.x * p.a1
    return (
        4.0 * (p.delta_omega / p.omega) * (p.kg / p.omega**2) * p.delta_mu
        * p.S**2 * (drift - spread)
    )


def _m6(p: _PairInputs) -> float:
    # 2 + 2(x^2 - 1)cos(x) - x^2 - 2x sin(x), free of cancellation at small x
    bracket = -(2.0 * p.S**2 * p.x**2 + p.x**3 * p.b2)
    scale = p.g0**2 / (CODATA.c**2 * p.omega**2)
    return (
        8.0 * (p.delta_omega / p.omega) * scale * (p.compton / p.omega) * p.delta_mu
        * p.SL**2 * p.S**2 * bracket
    )


def _m9(p: _PairInputs) -> float:
    return (
        -32.0 * (p.delta_omega / p.omega) * (p.kg / p.omega**2) * p.gamma_dm
        * math.sin(p.phi_S) * p.SL**2 * p.S**4
    )


def _m12(p: _PairInputs) -> float:
    redshift = p.g0 * p.height_sum / CODATA.c**2
    return (
        16.0 * (p.delta_omega / p.omega) * redshift * (p.compton / p.omega) * p.delta_mu
        * p.SL**2 * p.S**4
    )


def _gravity_scale(p: _PairInputs) -> float:
    return 32.0 * p.kg**2 / p.omega**4


def _s9_9(p: _PairInputs) -> float:
    return _gravity_scale(p) * p.gamma_dm**2 * p.SL**2 * p.S**4


def _s9_10(p: _PairInputs) -> float:
    return _gravity_scale(p) * p.gamma_dm * p.mu_bar * math.cos(p.phi_S) * p.SL**2 * p.S**4


def _s1_9(p: _PairInputs) -> float:
    bracket = (
        p.spread * math.cos(p.phi_S) * p.S2L
        + 2.0 * (1.0 + 2.0 * p.mean_momentum) * math.sin(p.phi_S) * p.SL**2
    )
    return (
        16.0 * (p.kg / p.omega**2) * (p.recoil / p.omega) * p.gamma_dm * p.mu_bar
        * p.S**4 * bracket
    )


def _s2_9(p: _PairInputs) -> float:
    bracket = p.S**4 * math.cos(p.phi_S) - p.x * (
        p.S**4 * math.sin(p.phi_S) + p.S**3 * p.C * math.cos(p.phi_S)
    )
    return _gravity_scale(p) * p.gamma_dm * p.mu_bar * p.SL**2 * bracket


def _s10_10(p: _PairInputs) -> float:
    return _gravity_scale(p) * p.mu_bar**2 * p.SL**2 * p.S**4


def _s1_10(p: _PairInputs) -> float:
    return (
        16.0 * (p.kg / p.omega**2) * (p.recoil / p.omega) * p.mu_bar**2
        * p.spread * p.S2L * p.S**4
    )


def _s2_10(p: _PairInputs) -> float:
    return _gravity_scale(p) * p.mu_bar**2 * p.SL**2 * p.S**3 * (p.S - p.x * p.C)


def _s1_1(p: _PairInputs) -> float:
    pb, dp = p.mean_momentum, p.spread
    bracket = 2.0 * p.SL**2 * (1.0 + 4.0 * pb * (1.0 + pb)) + dp * dp * 2.0 * p.CL**2
    return 16.0 * (p.recoil / p.omega) ** 2 * p.mu_bar**2 * p.S**4 * bracket


def _s1_2(p: _PairInputs) -> float:
    drift = 4.0 * (1.0 + 2.0 * p.mean_momentum) * p.x * p.SL**2 * p.S**2
    spread = p.spread * p.S2L * p.x * p.x * p.a1
    return (
        -8.0 * (p.kg / p.omega**2) * (p.recoil / p.omega) * p.mu_bar**2
        * p.S**2 * (drift + spread)
    )


def _s2_2(p: _PairInputs) -> float:
    bracket = 2.0 * p.x**2 * (1.0 - p.a1) - 2.0 * p.S**2
    return 16.0 * p.kg**2 / p.omega**4 * p.mu_bar**2 * p.SL**2 * p.S**2 * bracket


_CATALOG = {
    ("m", "m"): _mm,
    ("m", "1"): _m1,
    ("m", "2"): _m2,
    ("m", "4"): _m4,
    ("m", "5"): _m5,
    ("m", "6"): _m6,
    ("m", "9"): _m9,
    ("m", "12"): _m12,
    ("m", "13"): _m5,
    ("m", "14"): _m6,
    ("9", "9"): _s9_9,
    ("9", "10"): _s9_10,
    ("1", "9"): _s1_9,
    ("2", "9"): _s2_9,
    ("10", "10"): _s10_10,
    ("1", "10"): _s1_10,
    ("2", "10"): _s2_10,
    ("1", "1"): _s1_1,
    ("1", "2"): _s1_2,
    ("2", "2"): _s2_2,
}

CATALOGED_PAIRS: tuple[tuple[str, str], ...] = tuple(_CATALOG)


def correlation_analytic(
    i,
    j,
    grad: GradiometerConfig,
    species: AtomSpecies,
    dilaton: DilatonParams,
    pert: PerturbationParameters,
) -> float:
    """Closed form of ``<dphi_i dphi_j>`` averaged over the dilaton phase."""

    key = _pair_key(i, j)
    try:
        entry = _CATALOG[key]
    except KeyError as exc:
        raise NotCatalogedError(f"pair {key} has no closed form; use the numeric average") from exc
    return entry(_pair_inputs(grad, species, dilaton, pert))


def reduced_correlation(
    i,
    j,
    grad: GradiometerConfig,
    species: AtomSpecies,
    dilaton: DilatonParams,
    pert: PerturbationParameters,
) -> float | None:
    """Entry in printed table form: pairs with ``m`` divided by ``delta_omega/(rho_0 omega)``."""

    value = correlation_analytic(i, j, grad, species, dilaton, pert)
    if "m" not in _pair_key(i, j):
        return value
    inputs = _pair_inputs(grad, species, dilaton, pert)
    if inputs.delta_omega == 0.0 or dilaton.rho_0 == 0.0:
        return None
    return value / (inputs.delta_omega / (dilaton.rho_0 * inputs.omega))


def signal_amplitude_catalog(
    grad: GradiometerConfig,
    species: AtomSpecies,
    dilaton: DilatonParams,
    pert: PerturbationParameters,
    mode: AveragingMode | str = AveragingMode.COHERENT,
    *,
    phi_s_nodes: int = DEFAULT_PHI_S_NODES,
) -> SignalBreakdown:
    """Signal amplitude restricted to the cataloged pairs."""

    mode = AveragingMode(mode)
    if mode is AveragingMode.COHERENT:
        phases = [dilaton.phi_S]
    else:
        phases = list(_phase_nodes(phi_s_nodes, 0.0))
    samples = [
        _pair_inputs(grad, species, replace(dilaton, phi_S=float(phi_S)), pert) for phi_S in phases
    ]
    values = {
        key: math.fsum(entry(inputs) for inputs in samples) / len(samples)
        for key, entry in _CATALOG.items()
    }
    correlations = _symmetric(values)
    total = 2.0 * math.fsum(correlations.values())
    return SignalBreakdown(correlations, total, SignalMethod.ANALYTIC_CATALOG)


def uncataloged_remainder(numeric: SignalBreakdown, catalog: SignalBreakdown) -> float:
    """Part of the numeric signal carried by pairs without a closed form."""

    return numeric.total - catalog.total


def dominance_ranking(breakdown: SignalBreakdown) -> list[tuple[tuple[str, str], float]]:
    """Unordered pairs sorted by the magnitude of their share of ``total``."""

    ranked = [(pair, breakdown.weighted(*pair)) for pair in breakdown.pairs()]
    ranked.sort(key=lambda item: -abs(item[1]))
    return ranked


def frequency_scales(species: AtomSpecies, geom: MziGeometry) -> dict[str, float]:
    """Compton, transition and recoil frequencies (rad/s), largest first."""

    scales = {
        "compton": species.compton_frequency,
        "transition": abs(species.transition_frequency),
        "recoil": geom.recoil_frequency(species),
    }
    return dict(sorted(scales.items(), key=lambda item: -item[1]))


class Regime(str, enum.Enum):
    MEAN_ONLY = "mean-only"
    DIFF_ONLY = "diff-only"
    BRAGG_ZERO_G = "bragg-zero-g"


def regime_applies(regime: Regime | str, grad: GradiometerConfig, species: AtomSpecies) -> bool:
    regime = Regime(regime)
    if regime is Regime.MEAN_ONLY:
        return grad.geom.diffraction.changes_internal_state and species.delta_eps == 0.0
    if regime is Regime.DIFF_ONLY:
        return grad.geom.diffraction.changes_internal_state and species.eps_bar == 0.0
    return grad.geom.diffraction is Diffraction.BRAGG and grad.geom.g0 == 0.0


def regime_amplitude(
    regime: Regime | str,
    grad: GradiometerConfig,
    species: AtomSpecies,
    dilaton: DilatonParams,
    pert: PerturbationParameters,
) -> float:
    """Leading-order signal amplitude in one of the limiting regimes."""

    regime = Regime(regime)
    if not regime_applies(regime, grad, species):
        raise DomainError(f"scenario does not satisfy the {regime.value} preconditions")
    p = _pair_inputs(grad, species, dilaton, pert)
    interferometric = p.SL**2 * p.S**4
    rho_0 = dilaton.rho_0
    if regime is Regime.MEAN_ONLY:
        frequency = species.transition_frequency / p.omega
        return 64.0 * frequency**2 * species.eps_bar**2 * rho_0**2 * interferometric
    if regime is Regime.DIFF_ONLY:
        frequency = species.compton_frequency / p.omega
        return 64.0 * frequency**2 * species.delta_eps**2 * rho_0**2 * interferometric
    pb, dp = p.mean_momentum, p.spread
    factor = p.S**4 * (
        2.0 * p.SL**2 * (1.0 + 4.0 * pb * (1.0 + pb)) + 2.0 * dp * dp * p.CL**2
    )
    return 32.0 * (p.recoil / p.omega) ** 2 * species.eps_bar**2 * rho_0**2 * factor


def next_order_ratio(
    grad: GradiometerConfig,
    species: AtomSpecies,
    dilaton: DilatonParams,
    pert: PerturbationParameters,
) -> float:
    """First-order prediction of ``Phi_S^2 / (2 <dphi_m dphi_m>)``.

    With equal couplings this is
    ``1 - (w_k/W)(2 + 4 pbar) + 2 k g T/W - 2 (k g/(W w)) (eps_S/eps_bar) sin(phi_S)``.
    """

    inputs = _pair_inputs(grad, species, dilaton, pert)
    leading = _mm(inputs)
    if leading == 0.0:
        raise DomainError("transition-frequency term vanishes; ratio undefined")
    corrections = math.fsum(
        _CATALOG[key](inputs) for key in CATALOGED_PAIRS if key[0] == "m" and key[1] != "m"
    )
    return 1.0 + 2.0 * corrections / leading


def coupling_ratio_map(
    omega_over_omegac: Iterable[float], deltaeps_over_bareps: Iterable[float]
) -> np.ndarray:
    """Share of the transition-frequency signal due to the mean coupling alone.

    Rows follow ``omega_over_omegac``, columns ``deltaeps_over_bareps``.
    """

    frequencies = np.asarray(list(omega_over_omegac), dtype=float)
    couplings = np.asarray(list(deltaeps_over_bareps), dtype=float)
    if np.any(frequencies <= 0) or np.any(couplings <= 0):
        raise DomainError("ratio grids must contain positive values only")
    return 1.0 / (1.0 + couplings[None, :] / frequencies[:, None]) ** 2
