"""Oscillatory time scales of a Mach-Zehnder sequence.

Each time scale is an integral of ``cos(omega * t + phi)`` with a polynomial
weight over the two interrogation windows ``[t0, t0 + T]`` and
``[t0 + T, t0 + 2T]``.  They all reduce to ``a * sin(theta) + b * cos(theta)``
with ``theta = omega * (t0 + T) + phi_rho`` the dilaton phase at the mirror
pulse; :func:`timescale_harmonics` returns ``(a, b)`` and everything else is
built on it.
"""
from __future__ import annotations

import enum
import logging
import math

import numpy as np

from core_model import DomainError
from quadrature import DEFAULT_RTOL, QuadratureResult, integrate_oscillatory

LOGGER = logging.getLogger(__name__)

__all__ = [
    "SERIES_CROSSOVER",
    "TimescaleKind",
    "half_sine_ratio",
    "linear_moment",
    "mirror_phase",
    "quadratic_moment",
    "timescale",
    "timescale_harmonics",
    "timescale_quadrature",
    "timescale_quadrature_result",
]

# Below omega*T = SERIES_CROSSOVER the window moments are summed as power
# series truncated at (omega*T)**6.
SERIES_CROSSOVER = 1e-4
_SERIES_TERMS = 4
# The cubic moment loses digits like 1/x**2 in closed form; it keeps its
# series up to a larger argument, summed to machine precision.
_QUADRATIC_MOMENT_CROSSOVER = 0.5
_QUADRATIC_MOMENT_TERMS = 10


class TimescaleKind(str, enum.Enum):
    TAU1 = "tau1"
    TAU2_SQ = "tau2_sq"
    TAU3_CU = "tau3_cu"
    TAU_S_SQ = "tau_s_sq"
    TAU_EP_SQ = "tau_ep_sq"

    @property
    def power(self) -> int:
        """Power of seconds carried by the value."""
        return {"tau1": 1, "tau2_sq": 2, "tau3_cu": 3}.get(self.value, 2)


def _series(x: float, coefficient, terms: int) -> float:
    x2 = x * x
    total = 0.0
    power = 1.0
    for k in range(terms):
        total += coefficient(k) * power
        power *= -x2
    return total


def half_sine_ratio(omega: float, T: float) -> float:
    """``sin(omega*T/2) / omega``, continuous at ``omega = 0`` where it is ``T/2``."""

    x = omega * T
    if x < SERIES_CROSSOVER:
        y = 0.5 * x
        return 0.5 * T * _series(y, lambda k: 1.0 / math.factorial(2 * k + 1), _SERIES_TERMS)
    return math.sin(0.5 * x) / omega


def linear_moment(x: float) -> float:
    """``integral_0^1 v cos(x v) dv``."""

    if x < SERIES_CROSSOVER:
        return _series(x, lambda k: 1.0 / (math.factorial(2 * k) * (2 * k + 2)), _SERIES_TERMS)
    half = math.sin(0.5 * x) / x
    return math.sin(x) / x - 2.0 * half * half


def quadratic_moment(x: float) -> float:
    """``integral_0^1 v**2 sin(x v) dv``."""

    if x < _QUADRATIC_MOMENT_CROSSOVER:
        return x * _series(
            x,
            lambda k: 1.0 / (math.factorial(2 * k + 1) * (2 * k + 4)),
            _QUADRATIC_MOMENT_TERMS,
        )
    return (2.0 * x * math.sin(x) - x * x * math.cos(x) - 2.0 * (1.0 - math.cos(x))) / x**3


def _check_window(T: float, omega: float) -> None:
    if not T > 0:
        raise DomainError(f"T must be positive, got {T!r}")
    if omega < 0:
        raise DomainError(f"omega_rho must be non-negative, got {omega!r}")


def timescale_harmonics(
    kind: TimescaleKind, T: float, omega: float, phi_S: float = 0.0
) -> tuple[float, float]:
    """Return ``(a, b)`` with ``tau = a*sin(theta) + b*cos(theta)``."""

    _check_window(T, omega)
    kind = TimescaleKind(kind)
    x = omega * T
    ratio = half_sine_ratio(omega, T)
    # 4 sin^2(x/2) / omega, written so that omega = 0 gives 0
    k_factor = 4.0 * ratio * math.sin(0.5 * x)
    if kind is TimescaleKind.TAU1:
        return k_factor, 0.0
    if kind is TimescaleKind.TAU2_SQ:
        return T * k_factor, -2.0 * T * T * linear_moment(x)
    if kind is TimescaleKind.TAU3_CU:
        sin_part = T * T * k_factor + 2.0 * T**3 * quadratic_moment(x)
        return sin_part, -4.0 * T**3 * linear_moment(x)
    q_factor = 4.0 * ratio * ratio
    if kind is TimescaleKind.TAU_EP_SQ:
        return 0.0, q_factor
    return -q_factor * math.sin(phi_S), q_factor * math.cos(phi_S)


def mirror_phase(t0: float, T: float, omega: float, phi_rho):
    """Dilaton phase at the mirror pulse, ``omega*(t0 + T) + phi_rho`` reduced to ``[0, 2*pi)``."""

    turn = 2.0 * math.pi
    elapsed = np.mod(omega * (t0 + T), turn)
    return np.mod(elapsed + np.mod(np.asarray(phi_rho, dtype=float), turn), turn)


def timescale(
    kind: TimescaleKind,
    t0: float,
    T: float,
    omega: float,
    phi_rho,
    phi_S: float = 0.0,
):
    """Closed-form time scale; ``phi_rho`` may be an array."""

    a, b = timescale_harmonics(kind, T, omega, phi_S)
    theta = mirror_phase(t0, T, omega, phi_rho)
    value = a * np.sin(theta) + b * np.cos(theta)
    return float(value) if np.ndim(value) == 0 else value


_WINDOW_WEIGHTS = {
    TimescaleKind.TAU1: (lambda s, T: np.ones_like(s), lambda s, T: -np.ones_like(s)),
    TimescaleKind.TAU2_SQ: (lambda s, T: s, lambda s, T: -s),
    TimescaleKind.TAU3_CU: (lambda s, T: s * s, lambda s, T: -s * s),
    TimescaleKind.TAU_S_SQ: (lambda s, T: s, lambda s, T: 2.0 * T - s),
    TimescaleKind.TAU_EP_SQ: (lambda s, T: s, lambda s, T: 2.0 * T - s),
}


def timescale_quadrature_result(
    kind: TimescaleKind,
    t0: float,
    T: float,
    omega: float,
    phi_rho: float,
    phi_S: float = 0.0,
    *,
    rtol: float = DEFAULT_RTOL,
) -> QuadratureResult:
    """Integrate the defining window integrals directly."""

    _check_window(T, omega)
    kind = TimescaleKind(kind)
    first, second = _WINDOW_WEIGHTS[kind]
    shift = phi_rho + (phi_S if kind is TimescaleKind.TAU_S_SQ else 0.0)

    def window(weight):
        return lambda s: weight(s, T) * np.cos(omega * (t0 + s) + shift)

    return integrate_oscillatory(window(first), 0.0, T, omega, rtol=rtol) + integrate_oscillatory(
        window(second), T, 2.0 * T, omega, rtol=rtol
    )


def timescale_quadrature(
    kind: TimescaleKind,
    t0: float,
    T: float,
    omega: float,
    phi_rho: float,
    phi_S: float = 0.0,
) -> float:
    return timescale_quadrature_result(kind, t0, T, omega, phi_rho, phi_S).value
