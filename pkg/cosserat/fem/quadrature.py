"""Gauss-Legendre rules on the parent square and the parent segment."""
from dataclasses import dataclass
from typing import Optional

import numpy as np

from cosserat.errors import ConfigError

CONTINUA = ("cosserat", "cauchy")

# full 3x3 integration for the Cosserat medium, reduced 2x2 for the classical one
_DEFAULT_SCHEME = {"cosserat": "full", "cauchy": "reduced"}
_SCHEME_ORDER = {"full": 3, "reduced": 2}


@dataclass(frozen=True)
class QuadratureRule:
    """Points ``(n, dim)`` and weights ``(n,)`` on the parent domain."""

    points: np.ndarray
    weights: np.ndarray
    name: str

    def __len__(self) -> int:
        return len(self.weights)


def gauss_legendre_1d(order: int) -> QuadratureRule:
    points, weights = np.polynomial.legendre.leggauss(order)
    return QuadratureRule(points.reshape(-1, 1), weights, f"gauss{order}")


def gauss_legendre_2d(order: int) -> QuadratureRule:
    """Tensor-product rule; point ``k = i * order + j`` sits at ``(xi_i, eta_j)``."""
    x, w = np.polynomial.legendre.leggauss(order)
    xi, eta = np.meshgrid(x, x, indexing="ij")
    weights = np.outer(w, w).ravel()
    return QuadratureRule(np.column_stack([xi.ravel(), eta.ravel()]), weights, f"gauss{order}x{order}")


def quadrature_rule(mode: str, scheme: Optional[str] = None) -> QuadratureRule:
    """Element rule for a continuum.

    :param mode: ``"cosserat"`` or ``"cauchy"``.
    :param scheme: ``"full"`` (3x3) or ``"reduced"`` (2x2); defaults to full for Cosserat and reduced for Cauchy.
    """
    if mode not in CONTINUA:
        raise ConfigError(f"unknown continuum <{mode}>, expected one of {CONTINUA}")
    scheme = scheme or _DEFAULT_SCHEME[mode]
    if scheme not in _SCHEME_ORDER:
        raise ConfigError(f"unknown integration scheme <{scheme}>, expected one of {tuple(_SCHEME_ORDER)}")
    return gauss_legendre_2d(_SCHEME_ORDER[scheme])
