"""Seeded self-checks of the closed forms against their brute-force oracles.

Three gates run on every random scenario:

* ``oracle``: each catalog label against its own slice of the perturbation
  integrated along the classical arms, relative to the catalog value (labels
  whose catalog value is exactly zero are measured against the whole term);
* ``pair``: each cataloged correlation against the numeric phase average;
* ``timescale``: each closed-form time scale against direct quadrature, once
  at the trial's ``omega*T`` and once deep in the series branch.
"""
from __future__ import annotations

import logging
import math
from dataclasses import dataclass, field, replace

import numpy as np

from core_model import DilatonParams, dilaton_amplitude
from gradiometer import (
    CATALOGED_PAIRS,
    AveragingMode,
    GradiometerConfig,
    correlation_analytic,
    signal_amplitude_numeric,
)
from phase_catalog import LABELS, Diffraction, phase_contribution
from quadrature import QuadratureError
from scan_scheduler import ScanScheduler
from scenario_config import ScenarioConfig
from timescales import TimescaleKind, timescale, timescale_quadrature_result
from trajectory_oracle import PerturbationTerm, label_orders, oracle_label_result, oracle_phase_result

LOGGER = logging.getLogger(__name__)

__all__ = [
    "EXIT_GATE_FAILED",
    "EXIT_NOT_CONVERGED",
    "EXIT_OK",
    "GateResidual",
    "TrialResult",
    "VerificationReport",
    "random_scenario",
    "run_trial",
    "run_verification",
]

EXIT_OK = 0
EXIT_GATE_FAILED = 2
EXIT_NOT_CONVERGED = 3

GATES = ("oracle", "pair", "timescale")


def _relative(difference: float, scale: float) -> float:
    if difference == 0.0:
        return 0.0
    if scale == 0.0:
        return math.inf
    return difference / scale


def random_scenario(base: ScenarioConfig, seed: int, index: int) -> ScenarioConfig:
    """Scenario of trial ``index``, drawn around ``base``.

    Couplings and the mass defect are scaled by random factors of at most one,
    so a base scenario without couplings stays without couplings.  Odd trials
    switch the diffraction process between Bragg and state-changing.
    """

    rng = np.random.default_rng([seed, index])
    species = base.species
    dilaton = base.dilaton
    geometry = base.geometry
    hbar_k = geometry.photon_momentum

    couplings = rng.uniform(-1.0, 1.0, size=3)
    species = replace(
        species.with_couplings(species.eps_g * couplings[0], species.eps_e * couplings[1]),
        mass_defect=species.mass_defect * rng.uniform(0.0, 1.0),
    )

    omega_t = 10.0 ** rng.uniform(-2.0, 2.0)
    omega = omega_t / geometry.T
    if base.rho_dm is not None:
        rho_0 = dilaton_amplitude(omega, base.rho_dm)
    else:
        rho_0 = dilaton.rho_0
    dilaton = DilatonParams(
        omega_rho=omega,
        rho_0=rho_0,
        phi_rho=rng.uniform(0.0, 2.0 * math.pi),
        eps_S=dilaton.eps_S * couplings[2],
        phi_S=rng.uniform(0.0, 2.0 * math.pi),
        rho_dm=base.rho_dm,
    )

    diffraction = geometry.diffraction
    if index % 2 == 1:
        diffraction = (
            Diffraction.SINGLE_PHOTON if diffraction is Diffraction.BRAGG else Diffraction.BRAGG
        )
    L = base.gradiometer.L * rng.uniform(0.5, 2.0)
    geometry = replace(
        geometry,
        t0=geometry.t0 + rng.uniform(0.0, 2.0) * geometry.T,
        z0=geometry.z0 + rng.uniform(-1.0, 1.0) * L,
        p0=geometry.p0 + rng.uniform(-5.0, 5.0) * hbar_k,
        diffraction=diffraction,
    )
    p1 = base.gradiometer.p1 + rng.uniform(-5.0, 5.0) * hbar_k
    gradiometer = GradiometerConfig(geometry, L, p1)
    return replace(
        base,
        species=species,
        dilaton=dilaton,
        geometry=geometry,
        gradiometer=gradiometer,
        phi_rho_averaged=False,
        phi_s_averaged=False,
    )


@dataclass(frozen=True)
class TrialResult:
    index: int
    residuals: dict[tuple[str, str], float] = field(default_factory=dict)
    error: str | None = None


def _oracle_residuals(scenario: ScenarioConfig) -> dict[tuple[str, str], float]:
    geom, species, dilaton = scenario.geometry, scenario.species, scenario.dilaton
    pert = scenario.perturbation()
    rtol = scenario.numerics.quadrature_rtol
    term_scales: dict[PerturbationTerm, float] = {}
    residuals = {}
    for label in LABELS:
        oracle = oracle_label_result(label, geom, species, dilaton, pert, rtol=rtol).value
        catalog = phase_contribution(label, geom, species, dilaton, pert)
        if catalog != 0.0:
            scale = abs(catalog)
        else:
            term, _ = label_orders(label)
            if term not in term_scales:
                term_scales[term] = oracle_phase_result(
                    term, geom, species, dilaton, pert, rtol=rtol
                ).magnitude
            scale = term_scales[term]
        residuals[("oracle", label)] = _relative(abs(oracle - catalog), scale)
    return residuals


def _pair_residuals(scenario: ScenarioConfig) -> dict[tuple[str, str], float]:
    grad, species, dilaton = scenario.gradiometer, scenario.species, scenario.dilaton
    pert = scenario.perturbation()
    numeric = signal_amplitude_numeric(
        grad, species, dilaton, pert, AveragingMode.COHERENT, nodes=scenario.numerics.phi_nodes
    )
    residuals = {}
    for i, j in CATALOGED_PAIRS:
        analytic = correlation_analytic(i, j, grad, species, dilaton, pert)
        value = numeric.value(i, j)
        scale = max(math.sqrt(abs(numeric.value(i, i) * numeric.value(j, j))), abs(analytic))
        residuals[("pair", f"{i},{j}")] = _relative(abs(value - analytic), scale)
    return residuals


def _timescale_residuals(
    scenario: ScenarioConfig, seed: int, index: int
) -> dict[tuple[str, str], float]:
    geom, dilaton = scenario.geometry, scenario.dilaton
    small_omega = 10.0 ** np.random.default_rng([seed, index, 1]).uniform(-8.0, -4.0) / geom.T
    residuals = {}
    for kind in TimescaleKind:
        worst = 0.0
        for omega in (dilaton.omega_rho, small_omega):
            args = (kind, geom.t0, geom.T, omega, dilaton.phi_rho, dilaton.phi_S)
            closed = timescale(*args)
            direct = timescale_quadrature_result(*args, rtol=scenario.numerics.quadrature_rtol)
            scale = max(abs(closed), geom.T**kind.power)
            worst = max(worst, _relative(abs(direct.value - closed), scale))
        residuals[("timescale", kind.value)] = worst
    return residuals


def run_trial(base: ScenarioConfig, seed: int, index: int) -> TrialResult:
    scenario = random_scenario(base, seed, index)
    residuals: dict[tuple[str, str], float] = {}
    try:
        residuals.update(_oracle_residuals(scenario))
        residuals.update(_pair_residuals(scenario))
        residuals.update(_timescale_residuals(scenario, seed, index))
    except QuadratureError as exc:
        LOGGER.warning("Trial %d did not converge: %s", index, exc)
        return TrialResult(index, residuals, str(exc))
    return TrialResult(index, residuals)


@dataclass(frozen=True)
class GateResidual:
    gate: str
    name: str
    worst: float
    worst_trial: int | None
    tolerance: float

    @property
    def passed(self) -> bool:
        return self.worst <= self.tolerance


@dataclass(frozen=True)
class VerificationReport:
    seed: int
    trials: int
    residuals: tuple[GateResidual, ...]
    failures: tuple[tuple[int, str], ...] = ()

    @property
    def passed(self) -> bool:
        return not self.failures and all(item.passed for item in self.residuals)

    @property
    def exit_code(self) -> int:
        if self.failures:
            return EXIT_NOT_CONVERGED
        if not self.passed:
            return EXIT_GATE_FAILED
        return EXIT_OK

    def failing(self) -> list[GateResidual]:
        return [item for item in self.residuals if not item.passed]


def _tolerance(scenario: ScenarioConfig, gate: str) -> float:
    numerics = scenario.numerics
    return {
        "oracle": numerics.oracle_tolerance,
        "pair": numerics.pair_tolerance,
        "timescale": numerics.timescale_tolerance,
    }[gate]


def run_verification(
    base: ScenarioConfig, *, trials: int, seed: int, threads: int = 1
) -> VerificationReport:
    if trials < 1:
        raise ValueError("trials must be at least 1")
    with ScanScheduler(threads) as scheduler:
        results = scheduler.map(lambda index: run_trial(base, seed, index), range(trials))

    worst: dict[tuple[str, str], tuple[float, int | None]] = {}
    failures = []
    for result in results:
        if result.error is not None:
            failures.append((result.index, result.error))
        for key, value in result.residuals.items():
            if math.isnan(value):
                value = math.inf
            previous = worst.get(key)
            if previous is None or value > previous[0]:
                worst[key] = (value, result.index)

    order = {gate: position for position, gate in enumerate(GATES)}
    residuals = tuple(
        GateResidual(gate, name, value, trial, _tolerance(base, gate))
        for (gate, name), (value, trial) in sorted(
            worst.items(), key=lambda item: order[item[0][0]]
        )
    )
    report = VerificationReport(seed, trials, residuals, tuple(failures))
    LOGGER.info(
        "Verification with seed %d over %d trial(s): %s",
        seed,
        trials,
        "passed" if report.passed else "FAILED",
    )
    return report
