"""Isotropic hardening/softening laws ``sigma0(lambda)``."""
import math
from abc import ABC, abstractmethod
from dataclasses import dataclass
from typing import Optional

from cosserat.errors import MaterialError


class HardeningLaw(ABC):
    """Strength parameter ``sigma0`` as a function of the accumulated plastic multiplier."""

    @abstractmethod
    def sigma0(self, lam: float) -> float:
        ...

    @abstractmethod
    def dsigma0_dlambda(self, lam: float) -> float:
        ...


@dataclass(frozen=True)
class LinearHardening(HardeningLaw):
    """``sigma0 = sigma0_bar + h * lambda``; ``h = 0`` is perfect plasticity, ``h < 0`` linear softening."""

    sigma0_bar: float
    h: float = 0.0

    def __post_init__(self):
        if self.sigma0_bar < 0.0:
            raise MaterialError(f"sigma0_bar must be non-negative, got {self.sigma0_bar}")

    def sigma0(self, lam: float) -> float:
        return self.sigma0_bar + self.h * lam

    def dsigma0_dlambda(self, lam: float) -> float:
        return self.h


@dataclass(frozen=True)
class ExponentialHardening(HardeningLaw):
    """``sigma0 = sigma0_f + (sigma0_i - sigma0_f) exp(-a_lambda lambda)``.

    ``a_lambda = 0`` gives perfect plasticity at ``sigma0_i``.
    """

    sigma0_i: float
    sigma0_f: float = 0.0
    a_lambda: float = 0.0

    def __post_init__(self):
        if self.sigma0_i < 0.0 or self.sigma0_f < 0.0:
            raise MaterialError(f"strengths must be non-negative, got ({self.sigma0_i}, {self.sigma0_f})")
        if self.a_lambda < 0.0:
            raise MaterialError(f"a_lambda must be non-negative, got {self.a_lambda}")

    def sigma0(self, lam: float) -> float:
        return self.sigma0_f + (self.sigma0_i - self.sigma0_f) * math.exp(-self.a_lambda * lam)

    def dsigma0_dlambda(self, lam: float) -> float:
        return -self.a_lambda * (self.sigma0_i - self.sigma0_f) * math.exp(-self.a_lambda * lam)


@dataclass(frozen=True)
class CohesionLaw:
    """Cohesion softening ``c(lambda)`` expressed in soil-mechanics terms.

    It becomes an :class:`ExponentialHardening` once a yield criterion supplies the cohesion-to-strength
    mapping (see :meth:`resolve`).

    :param c_i: Initial cohesion.
    :param c_f: Residual cohesion, defaults to ``c_i``.
    :param a_lambda: Softening rate.
    """

    c_i: float
    c_f: Optional[float] = None
    a_lambda: float = 0.0

    def resolve(self, criterion) -> ExponentialHardening:
        c_f = self.c_i if self.c_f is None else self.c_f
        return ExponentialHardening(
            sigma0_i=criterion.strength(self.c_i),
            sigma0_f=criterion.strength(c_f),
            a_lambda=self.a_lambda,
        )
