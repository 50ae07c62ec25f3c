"""Eight-node serendipity quadrilateral for plane-strain Cosserat and Cauchy media.

Element vectors are node-major: ``[u_x0, u_y0, theta_z0, u_x1, ...]`` for the Cosserat medium and
``[u_x0, u_y0, u_x1, ...]`` for the classical one. Nodes are numbered counter-clockwise, corners first::

    3---6---2
    |       |
    7       5
    |       |
    0---4---1
"""
from typing import Optional, Tuple

import numpy as np

from cosserat.errors import MeshError

NODES_PER_ELEMENT = 8

# local node triples (start, mid, end) of the four edges, traversed counter-clockwise
EDGE_NODES = ((0, 4, 1), (1, 5, 2), (2, 6, 3), (3, 7, 0))

PARENT_NODES = np.array(
    [[-1.0, -1.0], [1.0, -1.0], [1.0, 1.0], [-1.0, 1.0], [0.0, -1.0], [1.0, 0.0], [0.0, 1.0], [-1.0, 0.0]]
)

# generalized strain layout: eps (xx, yy, zz, xy, yx), omega (same), chi_xz, chi_yz
GENERALIZED_SIZE = {"cosserat": 12, "cauchy": 3}
DOFS_PER_NODE = {"cosserat": 3, "cauchy": 2}


def shape_functions(xi: float, eta: float) -> Tuple[np.ndarray, np.ndarray]:
    """Serendipity shape functions and their parent derivatives.

    :return: ``N`` of shape ``(8,)`` and ``dN`` of shape ``(8, 2)`` holding ``(dN/dxi, dN/deta)``.
    """
    N = np.empty(8)
    dN = np.empty((8, 2))
    for a in range(4):
        xa, ya = PARENT_NODES[a]
        s, t = 1.0 + xa * xi, 1.0 + ya * eta
        N[a] = 0.25 * s * t * (xa * xi + ya * eta - 1.0)
        dN[a, 0] = 0.25 * xa * t * (2.0 * xa * xi + ya * eta)
        dN[a, 1] = 0.25 * ya * s * (xa * xi + 2.0 * ya * eta)
    for a in (4, 6):
        ya = PARENT_NODES[a, 1]
        N[a] = 0.5 * (1.0 - xi * xi) * (1.0 + ya * eta)
        dN[a, 0] = -xi * (1.0 + ya * eta)
        dN[a, 1] = 0.5 * ya * (1.0 - xi * xi)
    for a in (5, 7):
        xa = PARENT_NODES[a, 0]
        N[a] = 0.5 * (1.0 + xa * xi) * (1.0 - eta * eta)
        dN[a, 0] = 0.5 * xa * (1.0 - eta * eta)
        dN[a, 1] = -eta * (1.0 + xa * xi)
    return N, dN


def jacobian(
    coords: np.ndarray, xi: float, eta: float, element: Optional[int] = None
) -> Tuple[np.ndarray, np.ndarray, float]:
    """Shape functions with real-coordinate derivatives.

    :param coords: ``(8, 2)`` nodal coordinates.
    :return: ``(N, dN_dx, det_j)`` with ``dN_dx`` of shape ``(8, 2)``.
    :raises MeshError: If the Jacobian determinant is not positive.
    """
    N, dN = shape_functions(xi, eta)
    jac = dN.T @ coords
    det_j = float(np.linalg.det(jac))
    if not det_j > 0.0:
        raise MeshError(f"non-positive Jacobian determinant {det_j:.3e} at ({xi:.3f}, {eta:.3f})", element)
    return N, np.linalg.solve(jac, dN.T).T, det_j


def bwm_matrices(
    coords: np.ndarray, xi: float, eta: float, element: Optional[int] = None
) -> Tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Strain, relative-rotation and wryness operators of the Cosserat element.

    Rows of ``B`` and ``W`` are ``(xx, yy, zz, xy, yx)``; rows of ``M`` are ``(d theta_z/dx, d theta_z/dy)``.

    :return: ``B`` and ``W`` of shape ``(5, 24)``, ``M`` of shape ``(2, 24)``.
    """
    N, dN_dx, _ = jacobian(coords, xi, eta, element)
    return _bwm(N, dN_dx)


def _bwm(N: np.ndarray, dN_dx: np.ndarray) -> Tuple[np.ndarray, np.ndarray, np.ndarray]:
    B = np.zeros((5, 24))
    W = np.zeros((5, 24))
    M = np.zeros((2, 24))
    dx, dy = dN_dx[:, 0], dN_dx[:, 1]
    ux, uy, rz = slice(0, 24, 3), slice(1, 24, 3), slice(2, 24, 3)

    B[0, ux] = dx
    B[1, uy] = dy
    B[3, ux] = B[4, ux] = 0.5 * dy
    B[3, uy] = B[4, uy] = 0.5 * dx

    W[3, ux], W[3, uy], W[3, rz] = -0.5 * dy, 0.5 * dx, -N
    W[4, ux], W[4, uy], W[4, rz] = 0.5 * dy, -0.5 * dx, N

    M[0, rz] = dx
    M[1, rz] = dy
    return B, W, M


def cauchy_b_matrix(coords: np.ndarray, xi: float, eta: float, element: Optional[int] = None) -> np.ndarray:
    """Classical ``(3, 16)`` strain operator with rows ``(eps_xx, eps_yy, gamma_xy)``."""
    _, dN_dx, _ = jacobian(coords, xi, eta, element)
    return _cauchy_b(dN_dx)


def _cauchy_b(dN_dx: np.ndarray) -> np.ndarray:
    B = np.zeros((3, 16))
    dx, dy = dN_dx[:, 0], dN_dx[:, 1]
    B[0, 0::2] = dx
    B[1, 1::2] = dy
    B[2, 0::2] = dy
    B[2, 1::2] = dx
    return B


def generalized_operator(
    coords: np.ndarray, xi: float, eta: float, continuum: str, element: Optional[int] = None
) -> Tuple[np.ndarray, float]:
    """Stacked operator mapping element DOFs to the generalized strain vector, and ``det J``.

    Cosserat: rows ``[B; W; M]`` (12 rows). Cauchy: the classical strain operator (3 rows).
    """
    N, dN_dx, det_j = jacobian(coords, xi, eta, element)
    if continuum == "cauchy":
        return _cauchy_b(dN_dx), det_j
    return np.vstack(_bwm(N, dN_dx)), det_j


def edge_shape_functions(s: float) -> np.ndarray:
    """Quadratic shape functions of an edge ``(start, mid, end)`` at parent coordinate ``s``."""
    return np.array([0.5 * s * (s - 1.0), 1.0 - s * s, 0.5 * s * (s + 1.0)])


def edge_shape_derivatives(s: float) -> np.ndarray:
    return np.array([s - 0.5, -2.0 * s, s + 0.5])
