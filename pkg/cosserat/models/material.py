"""Cosserat linear elasticity and the plastic material model.

The elastic law is split into spherical, deviatoric-symmetric and skew blocks:

    sigma = K tr(eps) I + 2G e + 2G_c omega
    mu    = K_c tr(chi) I + 2B g_sym + 2B_c g_skw

where ``e`` is the deviatoric part of the symmetric strain and ``g_sym``/``g_skw`` are the deviatoric-symmetric
and skew parts of the wryness tensor.
"""
from dataclasses import dataclass
from typing import Optional, Tuple, Union

import numpy as np

from cosserat.errors import MaterialError
from cosserat.models.components.criteria import Criterion
from cosserat.models.components.hardening import CohesionLaw, HardeningLaw
from cosserat.models.components.shapes import ShapeFunction
from cosserat.tensors import IDENTITY, dev, skw, sym
from cosserat.utils import pylogger

log = pylogger.get_pylogger(__name__)


@dataclass(frozen=True)
class ElasticModuli:
    """Isotropic Cosserat moduli.

    :param G: Shear modulus (stress).
    :param K: Bulk modulus (stress).
    :param G_c: Cosserat shear modulus of the skew stress (stress).
    :param B: Bending modulus of the symmetric couple stress (force).
    :param B_c: Bending modulus of the skew couple stress (force).
    :param K_c: Volumetric curvature modulus (force). Plays no role in plane strain, hence the default.
    """

    G: float
    K: float
    G_c: float
    B: float
    B_c: float
    K_c: Optional[float] = None

    def __post_init__(self):
        if self.K_c is None:
            object.__setattr__(self, "K_c", self.B)
        for name in ("G", "K", "G_c", "B", "B_c", "K_c"):
            value = getattr(self, name)
            if not value > 0.0:
                raise MaterialError(f"elastic modulus {name} must be strictly positive, got {value}")

    @property
    def internal_length(self) -> float:
        """``sqrt(B / G)``, the bending length scale of the medium."""
        return float(np.sqrt(self.B / self.G))


def elastic_stress(
    eps: np.ndarray, omega: np.ndarray, chi: np.ndarray, moduli: ElasticModuli
) -> Tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Stress, skew stress and couple stress from elastic strains.

    :param eps: Symmetric elastic strain (symmetrized if it is not).
    :param omega: Skew elastic relative rotation (skew part taken).
    :param chi: Elastic wryness.
    :return: ``(sigma_sym, s_skw, mu)``.
    """
    eps = sym(eps)
    sigma_sym = moduli.K * np.trace(eps) * IDENTITY + 2.0 * moduli.G * dev(eps)
    s_skw = 2.0 * moduli.G_c * skw(omega)
    mu = (
        moduli.K_c * np.trace(chi) * IDENTITY
        + 2.0 * moduli.B * dev(sym(chi))
        + 2.0 * moduli.B_c * skw(chi)
    )
    return sigma_sym, s_skw, mu


def elastic_strain(
    sigma_sym: np.ndarray, s_skw: np.ndarray, mu: np.ndarray, moduli: ElasticModuli
) -> Tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Inverse of :func:`elastic_stress`, block by block."""
    eps = np.trace(sigma_sym) / (9.0 * moduli.K) * IDENTITY + dev(sym(sigma_sym)) / (2.0 * moduli.G)
    omega = skw(s_skw) / (2.0 * moduli.G_c)
    chi = (
        np.trace(mu) / (9.0 * moduli.K_c) * IDENTITY
        + dev(sym(mu)) / (2.0 * moduli.B)
        + skw(mu) / (2.0 * moduli.B_c)
    )
    return eps, omega, chi


@dataclass(frozen=True)
class MaterialModel:
    """Elastoplastic Cosserat material.

    Yield function ``f = q Gamma(theta) + M p - sigma0(lambda)`` and plastic potential
    ``g = q Gamma_hat(theta) + M_hat p``.
    """

    moduli: ElasticModuli
    yield_shape: ShapeFunction
    M: float
    potential_shape: ShapeFunction
    M_hat: float
    hardening: HardeningLaw
    name: str = "material"

    def __post_init__(self):
        if self.M < 0.0 or self.M_hat < 0.0:
            raise MaterialError(f"slopes must be non-negative, got M={self.M}, M_hat={self.M_hat}")

    @property
    def associated(self) -> bool:
        return self.yield_shape is self.potential_shape and self.M == self.M_hat

    def sigma0(self, lam: float) -> float:
        return self.hardening.sigma0(lam)

    def dsigma0_dlambda(self, lam: float) -> float:
        return self.hardening.dsigma0_dlambda(lam)

    def yield_function(self, p: float, q: float, theta: float, lam: float) -> float:
        return q * self.yield_shape.value(theta) + self.M * p - self.sigma0(lam)


def build_material(
    moduli: ElasticModuli,
    yield_criterion: Criterion,
    hardening: Union[HardeningLaw, CohesionLaw],
    potential_criterion: Optional[Criterion] = None,
    name: Optional[str] = None,
) -> MaterialModel:
    """Assembles a :class:`MaterialModel` from criterion plug-ins.

    Without a potential criterion the flow is associated. A :class:`CohesionLaw` is converted into
    ``sigma0(lambda)`` through the yield criterion's cohesion mapping.
    """
    if isinstance(hardening, CohesionLaw):
        hardening = hardening.resolve(yield_criterion)
    potential = yield_criterion if potential_criterion is None else potential_criterion
    model = MaterialModel(
        moduli=moduli,
        yield_shape=yield_criterion.shape,
        M=yield_criterion.slope,
        potential_shape=potential.shape,
        M_hat=potential.slope,
        hardening=hardening,
        name=name or yield_criterion.name,
    )
    log.debug(f"Built material <{model.name}> M={model.M:.6g} M_hat={model.M_hat:.6g}")
    return model
