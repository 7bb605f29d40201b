import math

import numpy as np
import pytest

from core_model import CODATA, DilatonParams, DomainError, perturbation_parameters, species_preset
from gradiometer import (
    GradiometerConfig,
    Regime,
    correlation_analytic,
    coupling_ratio_map,
    next_order_ratio,
    regime_amplitude,
    regime_applies,
    signal_amplitude_catalog,
    signal_amplitude_numeric,
)
from phase_catalog import Diffraction, MziGeometry

K = 9.0e6
HBAR_K = CODATA.hbar * K


def _scenario(
    eps_g,
    eps_e,
    *,
    diffraction=Diffraction.SINGLE_PHOTON,
    eps_S=0.0,
    phi_S=0.0,
    p0=0.5,
    p1=0.5,
    g0=9.81,
    omega=1.0,
):
    species = species_preset("strontium-88", eps_g=eps_g, eps_e=eps_e)
    dilaton = DilatonParams.from_density(omega, eps_S=eps_S, phi_S=phi_S)
    geom = MziGeometry(k=K, T=1.0, p0=p0 * HBAR_K, g0=g0, diffraction=diffraction)
    grad = GradiometerConfig(geom, L=100.0, p1=p1 * HBAR_K)
    return grad, species, dilaton, perturbation_parameters(species, dilaton)


def test_next_order_ratio_for_equal_couplings():
    grad, species, dilaton, pert = _scenario(1e-3, 1e-3, eps_S=1e-3, phi_S=0.4, p0=0.5, p1=1.5)
    W = species.transition_frequency
    omega = dilaton.omega_rho
    kg = K * grad.geom.g0
    pbar = grad.mean_momentum()
    assert pbar == pytest.approx(1.0)
    recoil = grad.geom.recoil_frequency(species)
    expected = (
        1.0
        - recoil / W * (2.0 + 4.0 * pbar)
        + 2.0 * kg * grad.geom.T / W
        - 2.0 * kg / (W * omega) * (dilaton.eps_S / species.eps_bar) * math.sin(dilaton.phi_S)
    )
    value = next_order_ratio(grad, species, dilaton, pert)
    assert value - 1.0 == pytest.approx(expected - 1.0, rel=1e-9)


def test_next_order_ratio_tracks_numeric_signal():
    grad, species, dilaton, pert = _scenario(1e-3, 1e-3, eps_S=1e-3, phi_S=0.4)
    numeric = signal_amplitude_numeric(grad, species, dilaton, pert, nodes=64)
    leading = correlation_analytic("m", "m", grad, species, dilaton, pert)
    deviation = numeric.total / (2.0 * leading) - 1.0
    predicted = next_order_ratio(grad, species, dilaton, pert) - 1.0
    assert deviation == pytest.approx(predicted, rel=1e-3)


def test_next_order_ratio_needs_transition_term():
    grad, species, dilaton, pert = _scenario(0.0, 0.0)
    with pytest.raises(DomainError):
        next_order_ratio(grad, species, dilaton, pert)


def test_mean_only_regime():
    grad, species, dilaton, pert = _scenario(1e-3, 1e-3)
    assert regime_applies(Regime.MEAN_ONLY, grad, species)
    assert not regime_applies(Regime.DIFF_ONLY, grad, species)
    amplitude = regime_amplitude("mean-only", grad, species, dilaton, pert)
    leading = correlation_analytic("m", "m", grad, species, dilaton, pert)
    assert amplitude == pytest.approx(2.0 * leading, rel=1e-12)


def test_diff_only_regime():
    grad, species, dilaton, pert = _scenario(-5e-4, 5e-4)
    assert species.eps_bar == 0.0
    amplitude = regime_amplitude(Regime.DIFF_ONLY, grad, species, dilaton, pert)
    leading = correlation_analytic("m", "m", grad, species, dilaton, pert)
    assert amplitude == pytest.approx(2.0 * leading, rel=1e-12)
    numeric = signal_amplitude_numeric(grad, species, dilaton, pert, nodes=64)
    assert numeric.total == pytest.approx(amplitude, rel=1e-6)


def test_bragg_without_gravity():
    grad, species, dilaton, pert = _scenario(
        2e-4, 6e-4, diffraction=Diffraction.BRAGG, eps_S=1e-3, phi_S=1.0, g0=0.0, p0=0.3, p1=2.3
    )
    assert regime_applies(Regime.BRAGG_ZERO_G, grad, species)
    amplitude = regime_amplitude(Regime.BRAGG_ZERO_G, grad, species, dilaton, pert)
    numeric = signal_amplitude_numeric(grad, species, dilaton, pert, nodes=64)
    assert amplitude == pytest.approx(numeric.total, rel=1e-9)

    catalog = signal_amplitude_catalog(grad, species, dilaton, pert)
    for pair in catalog.pairs():
        if pair != ("1", "1"):
            assert catalog.value(*pair) == 0.0
    assert catalog.total == pytest.approx(amplitude, rel=1e-12)


def test_regime_preconditions():
    grad, species, dilaton, pert = _scenario(1e-4, 3e-4)
    for regime in Regime:
        assert not regime_applies(regime, grad, species)
        with pytest.raises(DomainError):
            regime_amplitude(regime, grad, species, dilaton, pert)


def test_coupling_ratio_map():
    frequencies = np.geomspace(1e-6, 1e6, 7)
    couplings = np.geomspace(1e-6, 1e6, 5)
    grid = coupling_ratio_map(frequencies, couplings)
    assert grid.shape == (7, 5)
    assert grid[0, -1] < 1e-20
    assert grid[-1, 0] == pytest.approx(1.0, abs=1e-11)
    assert coupling_ratio_map([2.0], [2.0])[0, 0] == 0.25
    assert np.all(np.diff(grid, axis=0) > 0)
    assert np.all(np.diff(grid, axis=1) < 0)


def test_coupling_ratio_map_rejects_non_positive_values():
    with pytest.raises(DomainError):
        coupling_ratio_map([0.0, 1.0], [1.0])
    with pytest.raises(DomainError):
        coupling_ratio_map([1.0], [-2.0])
