"""Composite Gauss-Legendre quadrature for smooth oscillatory integrands.

The integrands met in this project are polynomials times ``cos`` of a linear
phase.  They are integrated panel by panel with a fixed-order rule, with at
least ``panels_per_period`` panels per oscillation period, and the panel count
is doubled until two successive estimates agree.
"""
from __future__ import annotations

import logging
import math
from dataclasses import dataclass
from functools import lru_cache
from typing import Callable

import numpy as np

LOGGER = logging.getLogger(__name__)

__all__ = ["QuadratureError", "QuadratureResult", "gauss_legendre_panels", "integrate_oscillatory"]

DEFAULT_ORDER = 16
DEFAULT_RTOL = 1e-12
PANELS_PER_PERIOD = 8
MAX_DOUBLINGS = 8


class QuadratureError(RuntimeError):
    pass


@dataclass(frozen=True)
class QuadratureResult:
    value: float
    # integral of |f|, the scale against which the error is controlled
    magnitude: float
    panels: int

    def __add__(self, other: "QuadratureResult") -> "QuadratureResult":
        return QuadratureResult(
            self.value + other.value,
            self.magnitude + other.magnitude,
            self.panels + other.panels,
        )

    def __neg__(self) -> "QuadratureResult":
        return QuadratureResult(-self.value, self.magnitude, self.panels)

    def __sub__(self, other: "QuadratureResult") -> "QuadratureResult":
        return self + (-other)


@lru_cache(maxsize=8)
def _reference_rule(order: int) -> tuple[np.ndarray, np.ndarray]:
    nodes, weights = np.polynomial.legendre.leggauss(order)
    nodes.setflags(write=False)
    weights.setflags(write=False)
    return nodes, weights


def gauss_legendre_panels(
    a: float, b: float, panels: int, order: int = DEFAULT_ORDER
) -> tuple[np.ndarray, np.ndarray]:
    """Return flattened nodes and weights of a composite rule on ``[a, b]``."""

    ref_nodes, ref_weights = _reference_rule(order)
    edges = np.linspace(a, b, panels + 1)
    half = 0.5 * np.diff(edges)
    mid = 0.5 * (edges[:-1] + edges[1:])
    nodes = mid[:, None] + half[:, None] * ref_nodes[None, :]
    weights = half[:, None] * ref_weights[None, :]
    return nodes.ravel(), weights.ravel()


def _initial_panels(a: float, b: float, omega: float, panels_per_period: int) -> int:
    periods = abs(omega) * (b - a) / (2.0 * math.pi)
    return max(1, math.ceil(panels_per_period * periods))


def _estimate(
    func: Callable[[np.ndarray], np.ndarray], a: float, b: float, panels: int, order: int
) -> tuple[float, float]:
    nodes, weights = gauss_legendre_panels(a, b, panels, order)
    values = np.asarray(func(nodes), dtype=float)
    return float(np.dot(weights, values)), float(np.dot(weights, np.abs(values)))


def integrate_oscillatory(
    func: Callable[[np.ndarray], np.ndarray],
    a: float,
    b: float,
    omega: float,
    *,
    rtol: float = DEFAULT_RTOL,
    order: int = DEFAULT_ORDER,
    panels_per_period: int = PANELS_PER_PERIOD,
    max_doublings: int = MAX_DOUBLINGS,
) -> QuadratureResult:
    """Integrate ``func`` over ``[a, b]`` where its fastest oscillation is ``omega``.

    ``func`` receives an array of nodes and returns an array of the same shape.
    Raises :class:`QuadratureError` when the estimate has not settled after
    ``max_doublings`` refinements.
    """

    if b == a:
        return QuadratureResult(0.0, 0.0, 0)
    panels = _initial_panels(a, b, omega, panels_per_period)
    coarse, _ = _estimate(func, a, b, panels, order)
    for _ in range(max_doublings):
        panels *= 2
        fine, magnitude = _estimate(func, a, b, panels, order)
        if magnitude == 0.0:
            return QuadratureResult(0.0, 0.0, panels)
        if abs(fine - coarse) <= rtol * magnitude:
            LOGGER.debug("quadrature on [%g, %g] settled with %d panels", a, b, panels)
            return QuadratureResult(fine, magnitude, panels)
        coarse = fine
    raise QuadratureError(
        f"quadrature on [{a!r}, {b!r}] did not converge after {max_doublings} doublings "
        f"({panels} panels, omega={omega!r})"
    )
