"""Gauss-point updates, element integrals and global assembly.

The generalized strain vector of a Cosserat Gauss point is
``[eps_xx, eps_yy, eps_zz, eps_xy, eps_yx, omega_xx, ..., omega_yx, chi_xz, chi_yz]`` and the stress vector
lists the work-conjugate components of ``(sigma_sym, s_skw, mu)`` in the same order. The Cauchy medium uses
``[eps_xx, eps_yy, gamma_xy]`` and ``[sigma_xx, sigma_yy, sigma_xy]``.
"""
from dataclasses import dataclass, field
from typing import Callable, Dict, Iterable, Mapping, Optional, Sequence, Tuple

import numpy as np
from scipy import sparse

from cosserat.errors import ConfigError
from cosserat.fem.boundary import DofMap
from cosserat.fem.element import (
    EDGE_NODES,
    GENERALIZED_SIZE,
    edge_shape_derivatives,
    edge_shape_functions,
    generalized_operator,
    shape_functions,
)
from cosserat.fem.mesh import Mesh
from cosserat.fem.quadrature import QuadratureRule, gauss_legendre_1d, quadrature_rule
from cosserat.fem.store import GaussPointStore
from cosserat.models.material import MaterialModel, elastic_strain
from cosserat.models.returnmap import (
    DEFAULT_TOL,
    GeneralizedState,
    Regime,
    StressState,
    compute_predictors,
    integrate,
)
from cosserat.models.tangent import consistent_tangent, tangent_elastic
from cosserat.utils import pylogger

log = pylogger.get_pylogger(__name__)

# positions of the Cosserat generalized components in the 27-component (sigma_sym, s_skw, mu) ordering
COSSERAT_COMPONENTS = np.r_[0:5, 9:14, 26, 23]


@dataclass
class Discretization:
    """Mesh plus everything precomputed per element and Gauss point.

    :param operators: ``(m, n_gp, n_gen, n_dof_e)`` generalized strain operators.
    :param weights: ``(m, n_gp)`` quadrature weights times ``det J`` (unit thickness).
    :param points: ``(m, n_gp, 2)`` physical Gauss point coordinates.
    """

    mesh: Mesh
    continuum: str
    rule: QuadratureRule
    dofmap: DofMap
    element_dofs: np.ndarray
    operators: np.ndarray
    weights: np.ndarray
    points: np.ndarray
    _elastic: Dict[int, np.ndarray] = field(default_factory=dict, repr=False)

    @property
    def n_generalized(self) -> int:
        return GENERALIZED_SIZE[self.continuum]

    def new_store(self) -> GaussPointStore:
        return GaussPointStore(self.mesh.n_elements, len(self.rule), self.n_generalized)

    def elastic_tangent(self, model: MaterialModel) -> np.ndarray:
        key = id(model)
        if key not in self._elastic:
            self._elastic[key] = reduce_tangent(tangent_elastic(model).as_matrix(), self.continuum)
        return self._elastic[key]


def discretize(mesh: Mesh, continuum: str, scheme: Optional[str] = None) -> Discretization:
    """Precomputes operators and weights; raises :class:`MeshError` on a non-positive Jacobian."""
    rule = quadrature_rule(continuum, scheme)
    dofmap = DofMap(mesh.n_nodes, continuum)
    n_gp = len(rule)
    n_dof_e = 8 * dofmap.dofs_per_node
    operators = np.empty((mesh.n_elements, n_gp, GENERALIZED_SIZE[continuum], n_dof_e))
    weights = np.empty((mesh.n_elements, n_gp))
    points = np.empty((mesh.n_elements, n_gp, 2))
    for e in range(mesh.n_elements):
        coords = mesh.element_coords(e)
        for g, ((xi, eta), w) in enumerate(zip(rule.points, rule.weights)):
            operators[e, g], det_j = generalized_operator(coords, xi, eta, continuum, e)
            weights[e, g] = w * det_j
            points[e, g] = shape_functions(xi, eta)[0] @ coords
    log.info(f"Discretized {mesh.n_elements} {continuum} elements with a {rule.name} rule")
    return Discretization(
        mesh, continuum, rule, dofmap, dofmap.element_dofs(mesh.elements), operators, weights, points
    )


def lift_strains(vector: np.ndarray, continuum: str) -> Tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Embeds a generalized strain vector into full 3D ``(eps, omega, chi)`` tensors (plane strain)."""
    eps, omega, chi = np.zeros((3, 3)), np.zeros((3, 3)), np.zeros((3, 3))
    if continuum == "cauchy":
        eps[0, 0], eps[1, 1] = vector[0], vector[1]
        eps[0, 1] = eps[1, 0] = 0.5 * vector[2]
        return eps, omega, chi
    for tensor, v in ((eps, vector[0:5]), (omega, vector[5:10])):
        tensor[0, 0], tensor[1, 1], tensor[2, 2], tensor[0, 1], tensor[1, 0] = v
    chi[0, 2], chi[1, 2] = vector[10], vector[11]
    return eps, omega, chi


def reduce_stress(stress: StressState, continuum: str) -> np.ndarray:
    sigma = stress.sigma_sym
    if continuum == "cauchy":
        return np.array([sigma[0, 0], sigma[1, 1], sigma[0, 1]])
    s, mu = stress.s_skw, stress.mu
    return np.array(
        [
            sigma[0, 0], sigma[1, 1], sigma[2, 2], sigma[0, 1], sigma[1, 0],
            s[0, 0], s[1, 1], s[2, 2], s[0, 1], s[1, 0],
            mu[0, 2], mu[1, 2],
        ]
    )  # fmt: skip


def reduce_tangent(matrix: np.ndarray, continuum: str) -> np.ndarray:
    """Restricts a 27x27 consistent tangent to the generalized components of ``continuum``."""
    if continuum == "cauchy":
        rows = matrix[[0, 1, 3], :9]
        return np.column_stack([rows[:, 0], rows[:, 1], 0.5 * (rows[:, 3] + rows[:, 4])])
    return matrix[np.ix_(COSSERAT_COMPONENTS, COSSERAT_COMPONENTS)]


def element_material(materials: Mapping[int, MaterialModel], region: int) -> MaterialModel:
    try:
        return materials[int(region)]
    except KeyError:
        raise ConfigError(f"no material assigned to region {region}") from None


def update_element(
    disc: Discretization,
    store: GaussPointStore,
    e: int,
    u: np.ndarray,
    model: MaterialModel,
    tol: float = DEFAULT_TOL,
) -> None:
    """Integrates the constitutive law at every Gauss point of element ``e`` for the displacement ``u``."""
    ue = u[disc.element_dofs[e]]
    for g in range(len(disc.rule)):
        strain = disc.operators[e, g] @ ue
        state_n = store.state(e, g)
        d_eps, d_omega, d_chi = lift_strains(strain - store.committed.strain[e, g], disc.continuum)
        pred = compute_predictors(state_n, d_eps, d_omega, d_chi, model)
        stress, new_state, _ = integrate(state_n, d_eps, d_omega, d_chi, model, tol=tol, pred=pred)
        if stress.regime is Regime.ELASTIC:
            tangent = disc.elastic_tangent(model)
        else:
            tangent = reduce_tangent(consistent_tangent(pred, stress, model, state_n.lam).as_matrix(), disc.continuum)
        store.record(e, g, new_state, strain, reduce_stress(stress, disc.continuum), tangent, stress)


def element_internal_force(disc: Discretization, store: GaussPointStore, e: int) -> np.ndarray:
    """``sum_g w_g G_g^T s_g``: the integral of ``B^T sigma + W^T s + M^T mu`` over element ``e``."""
    ops = disc.operators[e]
    return np.einsum("g,gij,gi->j", disc.weights[e], ops, store.trial.stress[e])


def element_stiffness(disc: Discretization, store: GaussPointStore, e: int) -> np.ndarray:
    """``sum_g w_g G_g^T D_g G_g`` with all nine Cosserat blocks inside ``D_g``."""
    ops = disc.operators[e]
    return np.einsum("g,gia,gij,gjb->ab", disc.weights[e], ops, store.trial.tangent[e], ops)


def assemble(
    disc: Discretization,
    store: GaussPointStore,
    u: np.ndarray,
    materials: Mapping[int, MaterialModel],
    tol: float = DEFAULT_TOL,
    elements: Optional[Iterable[int]] = None,
) -> Tuple[np.ndarray, sparse.csr_matrix]:
    """Updates the trial Gauss-point state for ``u`` and returns the internal force and consistent stiffness.

    Elements are processed serially. Each one writes only its own rows of ``store.trial``, so the result does
    not depend on the element order.
    """
    n = disc.dofmap.n_dofs
    f_int = np.zeros(n)
    elements = range(disc.mesh.n_elements) if elements is None else elements
    rows, cols, vals = [], [], []
    for e in elements:
        update_element(disc, store, e, u, element_material(materials, disc.mesh.regions[e]), tol)
        dofs = disc.element_dofs[e]
        np.add.at(f_int, dofs, element_internal_force(disc, store, e))
        k_e = element_stiffness(disc, store, e)
        rows.append(np.repeat(dofs, len(dofs)))
        cols.append(np.tile(dofs, len(dofs)))
        vals.append(k_e.ravel())
    stiffness = sparse.coo_matrix(
        (np.concatenate(vals), (np.concatenate(rows), np.concatenate(cols))), shape=(n, n)
    ).tocsr()
    return f_int, stiffness


def internal_force(disc: Discretization, store: GaussPointStore) -> np.ndarray:
    """Internal force of the current trial stresses without updating them."""
    f_int = np.zeros(disc.dofmap.n_dofs)
    for e in range(disc.mesh.n_elements):
        np.add.at(f_int, disc.element_dofs[e], element_internal_force(disc, store, e))
    return f_int


def initialize_stress(
    disc: Discretization,
    store: GaussPointStore,
    materials: Mapping[int, MaterialModel],
    stress_field: Callable[[np.ndarray], np.ndarray],
) -> None:
    """Sets an initial symmetric stress ``stress_field(xy) -> (3, 3)`` at every Gauss point.

    Elastic strains are recovered from the stress, total generalized strains start at zero.
    """
    m, n_gp = store.shape
    eps_e = np.zeros((m, n_gp, 3, 3))
    stress_vec = np.zeros((m, n_gp, disc.n_generalized))
    p, q, theta = np.zeros((m, n_gp)), np.zeros((m, n_gp)), np.zeros((m, n_gp))
    violations = 0
    zero = np.zeros((3, 3))
    for e in range(m):
        model = element_material(materials, disc.mesh.regions[e])
        for g in range(n_gp):
            sigma = np.asarray(stress_field(disc.points[e, g]), dtype=float)
            eps_e[e, g] = elastic_strain(sigma, zero, zero, model.moduli)[0]
            pred = compute_predictors(GeneralizedState(eps_e[e, g], zero, zero), zero, zero, zero, model)
            stress = StressState(
                pred.sigma_sym, pred.s_skw, pred.mu, pred.p, pred.q, pred.q_s, pred.theta, Regime.ELASTIC
            )
            stress_vec[e, g] = reduce_stress(stress, disc.continuum)
            p[e, g], q[e, g], theta[e, g] = pred.p, pred.q, pred.theta
            allowance = DEFAULT_TOL * max(model.sigma0(0.0), pred.q, 1.0)
            if model.yield_function(pred.p, pred.q, pred.theta, 0.0) > allowance:
                violations += 1
    if violations:
        log.warning(f"Initial stress violates the yield condition at {violations} Gauss points")
    store.initialize({"eps_e": eps_e, "stress": stress_vec, "p": p, "q": q, "theta": theta})


def body_force(disc: Discretization, density: Sequence[float]) -> np.ndarray:
    """Consistent nodal forces of a constant body force ``(b_x, b_y)`` per unit volume."""
    f = np.zeros(disc.dofmap.n_dofs)
    d = disc.dofmap.dofs_per_node
    shapes = np.array([shape_functions(xi, eta)[0] for xi, eta in disc.rule.points])
    for e in range(disc.mesh.n_elements):
        nodal = np.einsum("g,ga->a", disc.weights[e], shapes)
        dofs = disc.element_dofs[e].reshape(8, d)
        np.add.at(f, dofs[:, 0], nodal * density[0])
        np.add.at(f, dofs[:, 1], nodal * density[1])
    return f


def edge_pressure(disc: Discretization, edges: Sequence[Tuple[int, int]], pressure: float) -> np.ndarray:
    """Consistent nodal forces of a uniform pressure (positive in compression) on boundary edges.

    The outward normal of a counter-clockwise edge with tangent ``t`` is ``(t_y, -t_x)``.
    """
    f = np.zeros(disc.dofmap.n_dofs)
    d = disc.dofmap.dofs_per_node
    rule = gauss_legendre_1d(3)
    for e, k in edges:
        local = list(EDGE_NODES[k])
        nodes = disc.mesh.elements[e, local]
        xy = disc.mesh.nodes[nodes]
        force = np.zeros((3, 2))
        for (s,), w in zip(rule.points, rule.weights):
            tangent = edge_shape_derivatives(s) @ xy
            normal = np.array([tangent[1], -tangent[0]])
            force += w * np.outer(edge_shape_functions(s), -pressure * normal)
        np.add.at(f, nodes * d, force[:, 0])
        np.add.at(f, nodes * d + 1, force[:, 1])
    return f
