"""Second-order tensor algebra in 3D for the Cosserat constitutive kernel.

Second-order tensors are ``(3, 3)`` numpy arrays and fourth-order operators are ``(3, 3, 3, 3)`` arrays acting
as ``A[i, j, k, l] B[k, l]``. Whenever tensors are flattened (finite-element vectors, tangent matrices) the
component ordering is ``COMPONENTS``::

    xx, yy, zz, xy, yx, yz, zy, zx, xz

Stresses are tension-positive.
"""
import math
from dataclasses import dataclass
from typing import NamedTuple, Tuple

import numpy as np

from cosserat.errors import DegenerateSpectrumError, StationaryLodeAngleError

COMPONENTS: Tuple[str, ...] = ("xx", "yy", "zz", "xy", "yx", "yz", "zy", "zx", "xz")

_AXIS = {"x": 0, "y": 1, "z": 2}

# position of each ordered component in a row-major flattened (3, 3) array
FLAT_INDEX = np.array([3 * _AXIS[c[0]] + _AXIS[c[1]] for c in COMPONENTS])

IDENTITY = np.eye(3)

# offsets of the ordered principal values in the (p, q_s, theta) parametrization
PRINCIPAL_OFFSETS = (2.0 * math.pi / 3.0, 0.0, -2.0 * math.pi / 3.0)

LODE_LIMIT = math.pi / 6.0

dyad = lambda a, b: np.einsum("ij,kl->ijkl", a, b)  # noqa: E731
ddot = lambda a, b: float(np.einsum("ij,ij", a, b))  # noqa: E731
ddot42 = lambda a, b: np.einsum("ijkl,kl->ij", a, b)  # noqa: E731
ddot44 = lambda a, b: np.einsum("ijmn,mnkl->ijkl", a, b)  # noqa: E731


def component_index(name: str) -> int:
    """Position of a named component in the flattened ordering, e.g. ``component_index("xz") == 8``."""
    return COMPONENTS.index(name)


def to_vector(t: np.ndarray) -> np.ndarray:
    """Flattens a second-order tensor into the nine-component ordering."""
    return np.asarray(t, dtype=float).reshape(9)[FLAT_INDEX]


def from_vector(v: np.ndarray) -> np.ndarray:
    """Inverse of :func:`to_vector`."""
    flat = np.empty(9)
    flat[FLAT_INDEX] = v
    return flat.reshape(3, 3)


def to_matrix(a: np.ndarray) -> np.ndarray:
    """Flattens a fourth-order operator into a 9x9 matrix in the component ordering."""
    return np.asarray(a, dtype=float).reshape(9, 9)[np.ix_(FLAT_INDEX, FLAT_INDEX)]


def from_matrix(m: np.ndarray) -> np.ndarray:
    """Inverse of :func:`to_matrix`."""
    flat = np.empty((9, 9))
    flat[np.ix_(FLAT_INDEX, FLAT_INDEX)] = m
    return flat.reshape(3, 3, 3, 3)


def sym(t: np.ndarray) -> np.ndarray:
    return 0.5 * (t + t.T)


def skw(t: np.ndarray) -> np.ndarray:
    return 0.5 * (t - t.T)


def split_sym_skw(t: np.ndarray) -> Tuple[np.ndarray, np.ndarray]:
    """Splits ``t`` into its symmetric and skew-symmetric parts."""
    return sym(t), skw(t)


def dev_sph_split(t: np.ndarray) -> Tuple[np.ndarray, np.ndarray]:
    """Splits ``t`` into its deviatoric and spherical parts."""
    sph = np.trace(t) / 3.0 * IDENTITY
    return t - sph, sph


def dev(t: np.ndarray) -> np.ndarray:
    return t - np.trace(t) / 3.0 * IDENTITY


def norm(t: np.ndarray) -> float:
    return math.sqrt(ddot(t, t))


@dataclass(frozen=True)
class Projector4:
    """Constant fourth-order operators.

    ``identity`` maps ``T -> T``; ``sym`` and ``skw`` extract the symmetric and skew parts; ``spherical`` is
    ``I (x) I``; ``dev_sym`` extracts the deviatoric part of the symmetric part.
    """

    identity: np.ndarray
    sym: np.ndarray
    skw: np.ndarray
    spherical: np.ndarray
    dev_sym: np.ndarray


def _build_projectors() -> Projector4:
    identity = np.einsum("ik,jl->ijkl", IDENTITY, IDENTITY)
    transpose = np.einsum("il,jk->ijkl", IDENTITY, IDENTITY)
    sym4 = 0.5 * (identity + transpose)
    skw4 = 0.5 * (identity - transpose)
    spherical = dyad(IDENTITY, IDENTITY)
    dev_sym = sym4 - spherical / 3.0
    for array in (identity, sym4, skw4, spherical, dev_sym):
        array.setflags(write=False)
    return Projector4(identity=identity, sym=sym4, skw=skw4, spherical=spherical, dev_sym=dev_sym)


PROJECTORS = _build_projectors()


class LodeInvariants(NamedTuple):
    q_s: float
    theta: float
    degenerate: bool


def invariants_sym(s: np.ndarray, atol: float = 0.0) -> LodeInvariants:
    """Equivalent stress and Lode angle of a symmetric deviatoric tensor.

    ``q_s = sqrt(3/2 s:s)`` and ``theta = asin(-27/2 det(s) / q_s**3) / 3``. When ``q_s <= atol`` the angle is
    undefined and ``theta = 0`` is returned with ``degenerate=True``.

    >>> inv = invariants_sym(np.diag([2.0, -1.0, -1.0]))
    >>> round(inv.q_s, 12), round(inv.theta, 12) == round(-math.pi / 6, 12)
    (3.0, True)
    """
    q_s = math.sqrt(1.5 * ddot(s, s))
    if q_s <= atol or q_s == 0.0:
        return LodeInvariants(q_s, 0.0, True)
    arg = -13.5 * float(np.linalg.det(s)) / q_s**3
    theta = math.asin(min(1.0, max(-1.0, arg))) / 3.0
    return LodeInvariants(q_s, theta, False)


def principal_from_invariants(p: float, q_s: float, theta: float) -> Tuple[float, float, float]:
    """Ordered principal values ``sigma_I >= sigma_II >= sigma_III`` from ``(p, q_s, theta)``."""
    c = 2.0 * q_s / 3.0
    return tuple(p + c * math.sin(theta + offset) for offset in PRINCIPAL_OFFSETS)


def cosserat_q(
    s_sym: np.ndarray,
    s_skw: np.ndarray,
    m_sym: np.ndarray,
    m_skw: np.ndarray,
    tr_mu: float,
    moduli,
) -> float:
    """Cosserat equivalent von Mises stress.

    The skew stress and the couple-stress parts are weighted by modulus ratios so that, under the elastic
    law, ``q`` is the work-conjugate measure of ``3G`` times the equivalent strain.

    :param s_sym: Deviatoric symmetric stress.
    :param s_skw: Skew-symmetric stress.
    :param m_sym: Deviatoric symmetric couple stress.
    :param m_skw: Skew-symmetric couple stress.
    :param tr_mu: Trace of the couple stress.
    :param moduli: An object with ``G, G_c, B, B_c, K_c`` attributes.
    :return: ``q >= q_s``.
    """
    g = moduli.G
    bracket = (
        ddot(s_sym, s_sym)
        + g / moduli.G_c * ddot(s_skw, s_skw)
        + g / moduli.B * ddot(m_sym, m_sym)
        + g / moduli.B_c * ddot(m_skw, m_skw)
        + 2.0 * g / (9.0 * moduli.K_c) * tr_mu**2
    )
    return math.sqrt(1.5 * bracket)


@dataclass(frozen=True)
class EigenSystem:
    """Ordered spectral data of a symmetric tensor.

    ``values`` are descending, ``bases[i] = n_i (x) n_i`` and ``spins[i]`` is the fourth-order derivative of
    ``bases[i]`` with respect to the (symmetric) argument.
    """

    values: np.ndarray
    bases: np.ndarray
    spins: np.ndarray

    def reconstruct(self) -> np.ndarray:
        return np.einsum("i,ijk->jk", self.values, self.bases)


def eigensystem(a: np.ndarray, gap_tol: float = 1e-10) -> EigenSystem:
    """Eigenvalues, eigenprojections and their spins for a symmetric tensor with distinct eigenvalues.

    The spin of the projection ``E_a`` is the sum over ``b != a`` of the symmetrized dyads of ``E_a`` and
    ``E_b`` divided by the gap ``lambda_a - lambda_b``.

    :param a: Symmetric tensor.
    :param gap_tol: Smallest admissible gap relative to ``|a|``.
    :raises DegenerateSpectrumError: If two eigenvalues are closer than ``gap_tol * |a|``.
    """
    values, vectors = np.linalg.eigh(sym(a))
    values = values[::-1].copy()
    vectors = vectors[:, ::-1]

    scale = max(norm(a), np.finfo(float).tiny)
    gaps = -np.diff(values)
    if np.any(gaps < gap_tol * scale):
        raise DegenerateSpectrumError(f"degenerate spectrum: eigenvalues {values}")

    bases = np.einsum("ia,ja->aij", vectors, vectors)
    spins = np.zeros((3, 3, 3, 3, 3))
    for i in range(3):
        for j in range(3):
            if i == j:
                continue
            e_i, e_j = bases[i], bases[j]
            term = (
                np.einsum("ik,jl->ijkl", e_j, e_i)
                + np.einsum("il,jk->ijkl", e_j, e_i)
                + np.einsum("il,jk->ijkl", e_i, e_j)
                + np.einsum("ik,jl->ijkl", e_i, e_j)
            )
            spins[i] += 0.5 * term / (values[i] - values[j])
    return EigenSystem(values=values, bases=bases, spins=spins)


def lode_derivative(s: np.ndarray, stationary_tol: float = 1e-12) -> np.ndarray:
    """Derivative of the Lode angle with respect to a symmetric deviatoric tensor.

    :raises StationaryLodeAngleError: At ``q_s = 0`` or ``theta = +-pi/6`` where the gradient is unbounded.
    """
    q_s, theta, degenerate = invariants_sym(s)
    cos3 = math.cos(3.0 * theta)
    if degenerate or cos3 <= stationary_tol:
        raise StationaryLodeAngleError(f"stationary Lode angle: theta={theta}, q_s={q_s}")
    j3 = float(np.linalg.det(s))
    d_arg = -13.5 * (dev(s @ s) / q_s**3 - 4.5 * j3 * s / q_s**5)
    return d_arg / (3.0 * cos3)


def lode_gradient(s: np.ndarray, shear_modulus: float) -> np.ndarray:
    """Gradient of the predictor Lode angle with respect to total strain.

    The symmetric deviatoric predictor is ``s = 2G dev(sym(eps))``, so the gradient is ``2G`` times
    :func:`lode_derivative`.
    """
    return 2.0 * shear_modulus * lode_derivative(s)

