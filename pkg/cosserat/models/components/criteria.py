"""Classical failure criteria expressed as ``q Gamma(theta) + M p - sigma0``.

Every criterion is calibrated on the compression meridian ``theta = pi/6`` where ``Gamma = 1``. A criterion
owns the mapping from soil-mechanics parameters ``(c, phi)`` to the slope ``M`` and the strength ``sigma0``:

    M = 6 sin(phi) / (3 - sin(phi)),    sigma0 = 6 c cos(phi) / (3 - sin(phi))

Criteria without a closed-form trace (Matsuoka-Nakai, Lade-Duncan) are traced numerically on their conical
surface and ingested through :class:`SplineShape`.
"""
import math
from dataclasses import dataclass
from typing import Callable

import numpy as np
from scipy.optimize import brentq

from cosserat.errors import MaterialError
from cosserat.models.components.shapes import (
    ConstantShape,
    RoundedMohrCoulombShape,
    ShapeFunction,
    SplineShape,
)
from cosserat.tensors import LODE_LIMIT, PRINCIPAL_OFFSETS


@dataclass(frozen=True)
class Criterion:
    """A deviatoric shape, a meridional slope and a cohesion-to-strength factor.

    :param name: Human readable label used in logs and summaries.
    :param shape: Deviatoric trace.
    :param slope: ``M``; zero for pressure-insensitive criteria.
    :param strength_factor: ``sigma0 = strength_factor * c``.
    :param phi: Angle of shearing resistance in degrees (zero when not applicable).
    """

    name: str
    shape: ShapeFunction
    slope: float
    strength_factor: float
    phi: float = 0.0

    def strength(self, cohesion: float) -> float:
        return self.strength_factor * cohesion


def _friction_slope(phi: float) -> float:
    s = math.sin(math.radians(phi))
    return 6.0 * s / (3.0 - s)


def _friction_strength_factor(phi: float) -> float:
    r = math.radians(phi)
    return 6.0 * math.cos(r) / (3.0 - math.sin(r))


def von_mises() -> Criterion:
    """Pressure-insensitive circular criterion; ``c`` is the strength in pure shear."""
    return Criterion("von_mises", ConstantShape(), 0.0, math.sqrt(3.0))


def drucker_prager(slope: float, strength_factor: float = 1.0) -> Criterion:
    """Circular cone given directly by ``M``; with the default factor the cohesion entry is ``sigma0`` itself."""
    if slope < 0.0:
        raise MaterialError(f"Drucker-Prager slope must be non-negative, got {slope}")
    return Criterion("drucker_prager", ConstantShape(), slope, strength_factor)


def mohr_coulomb(phi: float, beta: float = 0.9999) -> Criterion:
    """C2-rounded Mohr-Coulomb criterion.

    :param phi: Angle of shearing resistance in degrees.
    :param beta: Corner rounding parameter.
    """
    return Criterion(
        "mohr_coulomb",
        RoundedMohrCoulombShape(phi=phi, beta=beta),
        _friction_slope(phi),
        _friction_strength_factor(phi),
        phi,
    )


def tresca(beta: float = 0.999) -> Criterion:
    """Rounded Tresca criterion, the frictionless limit of Mohr-Coulomb (``sigma0 = 2c``)."""
    return Criterion("tresca", RoundedMohrCoulombShape(phi=0.0, beta=beta), 0.0, 2.0, 0.0)


def _trace_conical(residual: Callable[[np.ndarray], float], n_points: int) -> SplineShape:
    """Traces a cone through the unit mean pressure and returns ``Gamma = M / q(theta)``.

    For each angle the equivalent stress ``q`` on the surface is the root of ``residual`` on the segment
    where all compression-positive principal stresses stay positive.
    """

    def principal(q: float, theta: float) -> np.ndarray:
        return np.array([1.0 - 2.0 * q / 3.0 * math.sin(theta + off) for off in PRINCIPAL_OFFSETS])

    def radius(theta: float) -> float:
        q_max = 1.5 / math.sin(theta + PRINCIPAL_OFFSETS[0]) * (1.0 - 1e-9)
        return brentq(lambda q: residual(principal(q, theta)), 0.0, q_max, xtol=1e-14, rtol=1e-14)

    thetas = np.linspace(-LODE_LIMIT, LODE_LIMIT, n_points)
    radii = np.array([radius(t) for t in thetas])
    return SplineShape(thetas, radii[-1] / radii)


def _triaxial_ratio(phi: float) -> float:
    s = math.sin(math.radians(phi))
    return (1.0 + s) / (1.0 - s)


def matsuoka_nakai(phi: float, n_points: int = 121) -> Criterion:
    """Matsuoka-Nakai criterion ``I1 I2 / I3 = const`` matched to Mohr-Coulomb in compression and extension."""
    if not 0.0 < phi < 90.0:
        raise MaterialError(f"Matsuoka-Nakai needs 0 < phi < 90 degrees, got {phi}")
    n = _triaxial_ratio(phi)
    k = (n + 2.0) * (2.0 * n + 1.0) / n

    def residual(s: np.ndarray) -> float:
        i1 = s.sum()
        i2 = s[0] * s[1] + s[1] * s[2] + s[2] * s[0]
        return i1 * i2 - k * s.prod()

    shape = _trace_conical(residual, n_points)
    return Criterion("matsuoka_nakai", shape, _friction_slope(phi), _friction_strength_factor(phi), phi)


def lade_duncan(phi: float, n_points: int = 121) -> Criterion:
    """Lade-Duncan criterion ``I1**3 / I3 = const`` matched to Mohr-Coulomb in compression."""
    if not 0.0 < phi < 90.0:
        raise MaterialError(f"Lade-Duncan needs 0 < phi < 90 degrees, got {phi}")
    n = _triaxial_ratio(phi)
    k = (n + 2.0) ** 3 / n

    def residual(s: np.ndarray) -> float:
        return s.sum() ** 3 - k * s.prod()

    shape = _trace_conical(residual, n_points)
    return Criterion("lade_duncan", shape, _friction_slope(phi), _friction_strength_factor(phi), phi)
