"""Deviatoric shape functions ``Gamma(theta)`` of yield surfaces and plastic potentials.

Every shape is defined on ``[-pi/6, pi/6]``, is positive, has two continuous derivatives and a vanishing
first derivative at both ends. Shapes are normalized so that ``Gamma(pi/6) = 1`` (compression meridian)
unless stated otherwise.
"""
import math
from abc import ABC, abstractmethod
from functools import cached_property
from typing import Callable, List, Optional, Sequence

import numpy as np
from scipy.interpolate import CubicSpline
from scipy.optimize import bisect

from cosserat.errors import MaterialError
from cosserat.tensors import LODE_LIMIT
from cosserat.utils import pylogger

log = pylogger.get_pylogger(__name__)

EVERYWHERE = "everywhere"


class ShapeFunction(ABC):
    """Evaluation handle for ``Gamma``, ``Gamma'`` and ``Gamma''``."""

    circular: bool = False

    @abstractmethod
    def value(self, theta: float) -> float:
        ...

    @abstractmethod
    def d1(self, theta: float) -> float:
        ...

    @abstractmethod
    def d2(self, theta: float) -> float:
        ...

    @cached_property
    def stationary_angles(self):
        """Angles where ``Gamma'`` vanishes, or :data:`EVERYWHERE` for circular shapes."""
        return stationary_angles(self)

    def interior_stationary_angles(self) -> List[float]:
        """Stationary angles strictly inside ``(-pi/6, pi/6)``; empty for circular shapes."""
        if self.stationary_angles == EVERYWHERE:
            return []
        return [t for t in self.stationary_angles if abs(t) < LODE_LIMIT]


def stationary_angles(shape: ShapeFunction, n_scan: int = 10_000, xtol: float = 1e-12):
    """Roots of ``Gamma'`` on ``[-pi/6, pi/6]``.

    The ends are always included. Interior roots are bracketed on a uniform scan of the open interval and
    refined by bisection to ``xtol``.

    :return: Sorted list of angles, or :data:`EVERYWHERE` for circular shapes.
    """
    if shape.circular:
        return EVERYWHERE

    edge = 1e-9
    grid = np.linspace(-LODE_LIMIT + edge, LODE_LIMIT - edge, n_scan)
    slopes = np.array([shape.d1(t) for t in grid])

    roots = [-LODE_LIMIT]
    for i in range(n_scan - 1):
        a, b = slopes[i], slopes[i + 1]
        if a == 0.0:
            roots.append(float(grid[i]))
        elif a * b < 0.0:
            roots.append(float(bisect(shape.d1, grid[i], grid[i + 1], xtol=xtol)))
    roots.append(LODE_LIMIT)
    return roots


class ConstantShape(ShapeFunction):
    """``Gamma = 1``: the circular trace of von Mises and Drucker-Prager surfaces."""

    circular = True

    def value(self, theta: float) -> float:
        return 1.0

    def d1(self, theta: float) -> float:
        return 0.0

    def d2(self, theta: float) -> float:
        return 0.0

    def __repr__(self) -> str:
        return "ConstantShape()"


class SplineShape(ShapeFunction):
    """Clamped cubic spline through tabulated ``(theta, Gamma)`` samples.

    The clamped end conditions impose ``Gamma'(+-pi/6) = 0``, which lets any criterion be ingested numerically.

    :param thetas: Strictly increasing sample angles spanning exactly ``[-pi/6, pi/6]``.
    :param values: Positive shape values at the samples.
    """

    def __init__(self, thetas: Sequence[float], values: Sequence[float]):
        thetas = np.asarray(thetas, dtype=float)
        values = np.asarray(values, dtype=float)
        if thetas.ndim != 1 or thetas.shape != values.shape or thetas.size < 4:
            raise MaterialError("spline shape needs at least four matching samples")
        if not (np.isclose(thetas[0], -LODE_LIMIT) and np.isclose(thetas[-1], LODE_LIMIT)):
            raise MaterialError("spline samples must span [-pi/6, pi/6]")
        if np.any(values <= 0.0):
            raise MaterialError("shape values must be positive")
        self._spline = CubicSpline(thetas, values, bc_type="clamped")
        self._d1 = self._spline.derivative(1)
        self._d2 = self._spline.derivative(2)
        if np.any(self._spline(np.linspace(-LODE_LIMIT, LODE_LIMIT, 2001)) <= 0.0):
            raise MaterialError("spline shape is not positive on the whole interval")

    @classmethod
    def from_function(cls, func: Callable[[float], float], n_points: int = 121) -> "SplineShape":
        thetas = np.linspace(-LODE_LIMIT, LODE_LIMIT, n_points)
        return cls(thetas, [func(t) for t in thetas])

    def value(self, theta: float) -> float:
        return float(self._spline(theta))

    def d1(self, theta: float) -> float:
        return float(self._d1(theta))

    def d2(self, theta: float) -> float:
        return float(self._d2(theta))


class RoundedMohrCoulombShape(ShapeFunction):
    """Mohr-Coulomb trace with C2 rounding of the corners at ``|theta| > beta pi/6``.

    Inside the rounding band the shape is a cubic in ``sin(3 theta)``. It matches value, slope and curvature
    of the sharp trace at ``theta_T = beta pi/6`` and takes the sharp corner value at ``+-pi/6``, so the rounded
    trace circumscribes the hexagon and touches it at the meridians. Its slope vanishes at ``+-pi/6``
    automatically. ``phi = 0`` gives the rounded Tresca hexagon.

    :param phi: Angle of shearing resistance in degrees.
    :param beta: Rounding parameter in ``(0, 1)``; values close to 1 round only a thin band near the corners.
    """

    def __init__(self, phi: float = 0.0, beta: float = 0.9999):
        if not 0.0 <= phi < 90.0:
            raise MaterialError(f"phi must lie in [0, 90) degrees, got {phi}")
        if not 0.0 < beta < 1.0:
            raise MaterialError(f"beta must lie in (0, 1), got {beta}")
        self.phi = phi
        self.beta = beta
        self._sin_phi = math.sin(math.radians(phi))
        self._scale = 6.0 / (3.0 - self._sin_phi)
        self.theta_t = beta * LODE_LIMIT
        self._coefficients = {side: self._rounding(side) for side in (1.0, -1.0)}

    def _sharp(self, theta: float, order: int) -> float:
        c, s = math.cos(theta), math.sin(theta)
        k, sp = self._scale, self._sin_phi
        if order == 0:
            return k * (c / math.sqrt(3.0) - s * sp / 3.0)
        if order == 1:
            return k * (-s / math.sqrt(3.0) - c * sp / 3.0)
        return -self._sharp(theta, 0)

    def _rounding(self, side: float):
        t = side * self.theta_t
        x_t = math.sin(3.0 * t)
        c3 = math.cos(3.0 * t)
        a0 = self._sharp(t, 0)
        a1 = self._sharp(t, 1) / (3.0 * c3)
        a2 = (self._sharp(t, 2) + 9.0 * x_t * a1) / (18.0 * c3 * c3)
        x_c = self._offset(side * LODE_LIMIT, t)
        a3 = (self._sharp(side * LODE_LIMIT, 0) - a0 - x_c * (a1 + a2 * x_c)) / x_c**3
        return t, a0, a1, a2, a3

    def _band(self, theta: float) -> Optional[tuple]:
        if theta > self.theta_t:
            return self._coefficients[1.0]
        if theta < -self.theta_t:
            return self._coefficients[-1.0]
        return None

    @staticmethod
    def _offset(theta: float, t: float) -> float:
        # sin(3 theta) - sin(3 t) without cancellation
        return 2.0 * math.cos(1.5 * (theta + t)) * math.sin(1.5 * (theta - t))

    def value(self, theta: float) -> float:
        band = self._band(theta)
        if band is None:
            return self._sharp(theta, 0)
        t, a0, a1, a2, a3 = band
        dx = self._offset(theta, t)
        return a0 + dx * (a1 + dx * (a2 + dx * a3))

    def d1(self, theta: float) -> float:
        band = self._band(theta)
        if band is None:
            return self._sharp(theta, 1)
        t, _, a1, a2, a3 = band
        dx = self._offset(theta, t)
        return (a1 + dx * (2.0 * a2 + 3.0 * a3 * dx)) * 3.0 * math.cos(3.0 * theta)

    def d2(self, theta: float) -> float:
        band = self._band(theta)
        if band is None:
            return self._sharp(theta, 2)
        t, _, a1, a2, a3 = band
        dx = self._offset(theta, t)
        c3, s3 = math.cos(3.0 * theta), math.sin(3.0 * theta)
        slope = a1 + dx * (2.0 * a2 + 3.0 * a3 * dx)
        return 9.0 * (2.0 * a2 + 6.0 * a3 * dx) * c3 * c3 - 9.0 * slope * s3

    @cached_property
    def stationary_angles(self):
        # the sharp trace peaks at -atan(sin(phi)/sqrt(3)); the rounding bands add only the two ends
        roots = [-LODE_LIMIT]
        theta_mid = -math.atan(self._sin_phi / math.sqrt(3.0))
        if abs(theta_mid) <= self.theta_t:
            roots.append(theta_mid)
        roots.append(LODE_LIMIT)
        return roots

    def __repr__(self) -> str:
        return f"RoundedMohrCoulombShape(phi={self.phi}, beta={self.beta})"
