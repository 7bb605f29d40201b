import math
from dataclasses import replace

import numpy as np
import pytest

from core_model import CODATA, DilatonParams, DomainError, perturbation_parameters, species_preset
from gradiometer import (
    CATALOGED_PAIRS,
    AveragingMode,
    GradiometerConfig,
    NotCatalogedError,
    SignalMethod,
    correlation_analytic,
    differential_phase,
    dominance_ranking,
    frequency_scales,
    reduced_correlation,
    signal_amplitude_catalog,
    signal_amplitude_numeric,
    uncataloged_remainder,
)
from phase_catalog import LABELS, Diffraction, MziGeometry, phase_contribution

K = 9.0e6
HBAR_K = CODATA.hbar * K


def _scenario(
    diffraction=Diffraction.SINGLE_PHOTON,
    *,
    omega=2.3,
    eps=(1e-4, 2.5e-4),
    eps_S=2e-4,
    phi_S=0.7,
    p0=0.4,
    p1=-1.3,
    z0=3.0,
    rho_0=None,
):
    species = species_preset("strontium-88", eps_g=eps[0], eps_e=eps[1])
    dilaton = DilatonParams.from_density(omega, phi_rho=0.9, eps_S=eps_S, phi_S=phi_S)
    if rho_0 is not None:
        dilaton = replace(dilaton, rho_0=rho_0, rho_dm=None)
    geom = MziGeometry(k=K, T=1.1, t0=0.35, z0=z0, p0=p0 * HBAR_K, g0=9.81, diffraction=diffraction)
    grad = GradiometerConfig(geom, L=100.0, p1=p1 * HBAR_K)
    return grad, species, dilaton, perturbation_parameters(species, dilaton)


def test_baseline_must_be_positive():
    geom = MziGeometry(k=K, T=1.0)
    with pytest.raises(DomainError):
        GradiometerConfig(geom, L=0.0)
    grad = GradiometerConfig(geom, L=30.0, p1=3.0 * HBAR_K)
    upper = grad.upper_geometry()
    assert upper.z0 == 30.0
    assert upper.t0 == pytest.approx(30.0 / CODATA.c, rel=1e-15)
    assert grad.mean_momentum() == pytest.approx(1.5)
    assert grad.momentum_spread() == pytest.approx(3.0)


@pytest.mark.parametrize("label", LABELS)
def test_differential_phase_is_difference_of_contributions(label):
    grad, species, dilaton, pert = _scenario()
    upper = phase_contribution(label, grad.upper_geometry(), species, dilaton, pert)
    lower = phase_contribution(label, grad.geom, species, dilaton, pert)
    value = differential_phase(label, grad, species, dilaton, pert)
    tolerance = 1e-9 * max(abs(upper), abs(lower))
    assert value == pytest.approx(upper - lower, abs=tolerance + 1e-300)


def test_constant_equivalence_principle_phase_cancels():
    grad, species, dilaton, pert = _scenario()
    assert differential_phase("7", grad, species, dilaton, pert) == 0.0


def test_transition_phase_shrinks_with_baseline():
    grad, species, dilaton, pert = _scenario()
    short = GradiometerConfig(grad.geom, L=1.0, p1=grad.p1)
    ratio = differential_phase("m", short, species, dilaton, pert) / differential_phase(
        "m", grad, species, dilaton, pert
    )
    # linear in omega * tau_L as long as the phase lag is small
    assert ratio == pytest.approx(0.01, rel=1e-4)


def test_no_dilaton_gives_no_signal():
    grad, species, dilaton, pert = _scenario(rho_0=0.0, eps_S=0.0, p1=0.4)
    numeric = signal_amplitude_numeric(grad, species, dilaton, pert, nodes=32)
    assert numeric.total == 0.0
    assert numeric.method is SignalMethod.NUMERIC_AVERAGE


def test_transition_term_alone():
    grad, species, dilaton, pert = _scenario()
    numeric = signal_amplitude_numeric(grad, species, dilaton, pert, labels=["m", "M"], nodes=64)
    analytic = correlation_analytic("m", "m", grad, species, dilaton, pert)
    assert numeric.pairs() == [("m", "m")]
    assert numeric.total == pytest.approx(2.0 * numeric.value("m", "m"), rel=1e-12)
    assert numeric.value("m", "m") == pytest.approx(analytic, rel=1e-9)


@pytest.mark.parametrize("diffraction", [Diffraction.SINGLE_PHOTON, Diffraction.BRAGG])
@pytest.mark.parametrize("pair", CATALOGED_PAIRS, ids=lambda pair: f"{pair[0]}-{pair[1]}")
def test_cataloged_pairs_match_numeric_average(pair, diffraction):
    grad, species, dilaton, pert = _scenario(diffraction)
    numeric = signal_amplitude_numeric(grad, species, dilaton, pert, nodes=64)
    i, j = pair
    analytic = correlation_analytic(i, j, grad, species, dilaton, pert)
    value = numeric.value(i, j)
    scale = max(math.sqrt(abs(numeric.value(i, i) * numeric.value(j, j))), abs(analytic))
    assert abs(value - analytic) <= 1e-9 * scale


def test_duplicate_catalog_entries():
    grad, species, dilaton, pert = _scenario()
    args = (grad, species, dilaton, pert)
    assert correlation_analytic("m", "13", *args) == correlation_analytic("m", "5", *args)
    assert correlation_analytic("14", "m", *args) == correlation_analytic("m", "6", *args)


def test_source_term_needs_phase_offset():
    grad, species, dilaton, pert = _scenario(phi_S=0.0)
    assert correlation_analytic("m", "9", grad, species, dilaton, pert) == 0.0


def test_transition_correlation_vanishes_at_full_period():
    grad, species, dilaton, pert = _scenario(omega=2.0 * math.pi / 1.1)
    full = correlation_analytic("m", "m", grad, species, dilaton, pert)
    grad, species, dilaton, pert = _scenario(omega=math.pi / 1.1)
    half = correlation_analytic("m", "m", grad, species, dilaton, pert)
    assert abs(full) < 1e-50 * half


def test_uncataloged_pair_is_reported():
    grad, species, dilaton, pert = _scenario()
    with pytest.raises(NotCatalogedError):
        correlation_analytic("3", "7", grad, species, dilaton, pert)


def test_numeric_average_ignores_node_offset():
    grad, species, dilaton, pert = _scenario()
    base = signal_amplitude_numeric(grad, species, dilaton, pert, nodes=64)
    shifted = signal_amplitude_numeric(grad, species, dilaton, pert, nodes=64, offset=0.37)
    assert shifted.total == pytest.approx(base.total, rel=1e-9)
    assert shifted.value("m", "2") == pytest.approx(base.value("m", "2"), rel=1e-9)


def test_total_is_weighted_sum_of_pairs():
    grad, species, dilaton, pert = _scenario(p1=0.4)
    numeric = signal_amplitude_numeric(grad, species, dilaton, pert, nodes=64)
    weighted = math.fsum(numeric.weighted(i, j) for i, j in numeric.pairs())
    assert numeric.total == pytest.approx(weighted, rel=1e-9)
    assert numeric.total == pytest.approx(2.0 * math.fsum(numeric.correlations.values()), rel=1e-9)


def test_independent_source_phase_averaging():
    grad, species, dilaton, pert = _scenario(phi_S=0.5 * math.pi)
    coherent = signal_amplitude_numeric(grad, species, dilaton, pert, nodes=32)
    independent = signal_amplitude_numeric(
        grad, species, dilaton, pert, AveragingMode.INDEPENDENT_PHI_S, nodes=32, phi_s_nodes=8
    )
    assert independent.value("9", "9") == pytest.approx(coherent.value("9", "9"), rel=1e-9)

    catalog = signal_amplitude_catalog(grad, species, dilaton, pert, "independent-phiS", phi_s_nodes=8)
    reference = correlation_analytic("m", "9", grad, species, dilaton, pert)
    assert abs(catalog.value("m", "9")) < 1e-12 * abs(reference)
    assert catalog.method is SignalMethod.ANALYTIC_CATALOG


def test_bragg_catalog_covers_the_whole_signal():
    grad, species, dilaton, pert = _scenario(Diffraction.BRAGG)
    numeric = signal_amplitude_numeric(grad, species, dilaton, pert, nodes=64)
    catalog = signal_amplitude_catalog(grad, species, dilaton, pert)
    assert catalog.total == pytest.approx(numeric.total, rel=1e-9)
    assert abs(uncataloged_remainder(numeric, catalog)) <= 1e-9 * numeric.total


def test_reduced_correlation():
    grad, species, dilaton, pert = _scenario()
    args = (grad, species, dilaton, pert)
    delta_omega = species.compton_frequency * species.delta_eps + species.transition_frequency * species.eps_bar
    factor = delta_omega * dilaton.rho_0 / (dilaton.rho_0 * dilaton.omega_rho)
    assert reduced_correlation("m", "2", *args) == pytest.approx(
        correlation_analytic("m", "2", *args) / factor, rel=1e-12
    )
    assert reduced_correlation("9", "9", *args) == correlation_analytic("9", "9", *args)

    grad, species, dilaton, pert = _scenario(rho_0=0.0)
    assert reduced_correlation("m", "m", grad, species, dilaton, pert) is None


def test_transition_pairs_dominate():
    grad, species, dilaton, pert = _scenario(
        omega=1.0, eps=(1e-3 - 5e-4, 1e-3 + 5e-4), eps_S=1e-3, phi_S=0.4, p0=0.0, p1=0.0, z0=0.0
    )
    # eps_bar = 1e-3 and delta_eps = 1e-3
    assert species.eps_bar == pytest.approx(1e-3)
    catalog = signal_amplitude_catalog(grad, species, dilaton, pert)
    ranking = [pair for pair, _ in dominance_ranking(catalog)]
    assert ranking[0] == ("m", "m")
    transition = [index for index, pair in enumerate(ranking) if pair[0] == "m"]
    others = [index for index, pair in enumerate(ranking) if pair[0] != "m"]
    assert max(transition) < min(others)


def test_frequency_scales_order():
    grad, species, _, _ = _scenario()
    scales = frequency_scales(species, grad.geom)
    assert list(scales) == ["compton", "transition", "recoil"]
    assert scales["recoil"] == pytest.approx(CODATA.hbar * K**2 / (2.0 * species.mean_mass))


def test_transition_signal_is_quadratic_in_the_modulation():
    grad, species, dilaton, pert = _scenario()
    ratio = species.transition_frequency / species.compton_frequency

    def mm(delta_eps, eps_bar):
        variant = replace(species, delta_eps=delta_eps, eps_bar=eps_bar)
        numeric = signal_amplitude_numeric(grad, variant, dilaton, pert, labels=["m"], nodes=64)
        return numeric.value("m", "m")

    # both couplings move the transition frequency by comparable amounts
    d, e = 0.7e-4 * ratio, 1e-4
    assert mm(d, e) + mm(d, -e) == pytest.approx(2.0 * (mm(d, 0.0) + mm(0.0, e)), rel=1e-9)
    assert mm(3.0 * d, 3.0 * e) == pytest.approx(9.0 * mm(d, e), rel=1e-12)
    assert mm(-e * ratio, e) < 1e-12 * mm(0.0, e)


def test_signal_falls_with_fourth_power_of_frequency():
    envelope = []
    for omega in np.geomspace(0.5, 100.0, 80):
        grad, species, dilaton, pert = _scenario(omega=float(omega))
        S = math.sin(0.5 * omega * grad.geom.T)
        if abs(S) < 0.05:
            continue
        SL = math.sin(0.5 * omega * grad.tau_L)
        total = signal_amplitude_numeric(grad, species, dilaton, pert, nodes=64).total
        envelope.append(total * omega**4 / (SL**2 * S**4))
    assert len(envelope) > 60
    assert max(envelope) == pytest.approx(min(envelope), rel=1e-6)
