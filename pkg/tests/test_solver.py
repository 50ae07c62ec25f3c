import dataclasses
import math

import numpy as np
import pytest

from cosserat.errors import ConfigError, MaterialError, SolverDivergence
from cosserat.fem import solver
from cosserat.fem.assembly import assemble, discretize
from cosserat.fem.boundary import BoundaryConditions, DofMap, nodes_in_box, nodes_on_line
from cosserat.fem.element import cauchy_b_matrix, jacobian
from cosserat.fem.mesh import structured_rectangle
from cosserat.fem.quadrature import gauss_legendre_2d
from cosserat.fem.solver import LoadSchedule, NewtonConfig, Problem, solve_displacement_controlled
from cosserat.fem.store import GaussPointStore
from cosserat.models.components.criteria import mohr_coulomb, tresca
from cosserat.models.components.hardening import CohesionLaw
from cosserat.models.material import build_material
from tests.helpers.materials import FOOTING_MODULI
from tests.helpers.meshes import irregular_patch, single_element


def _uniaxial(continuum, model, stretch):
    mesh = single_element()
    disc = discretize(mesh, continuum)
    bcs = BoundaryConditions()
    bcs.add(nodes_on_line(mesh, x=0.0), "ux", name="left")
    bcs.add(nodes_on_line(mesh, x=0.0, y=0.0), "uy", name="pin")
    bcs.add(nodes_on_line(mesh, x=1.0), "ux", stretch, ramped=True, name="pull")
    return Problem(disc, bcs, {0: model}, np.zeros(disc.dofmap.n_dofs), disc.new_store(), "pull")


def _footing(model, n_steps=10, settlement=0.04, newton_cfg=None):
    """100 elements under a smooth strip footing of half width 1 on ``[0, 5] x [-5, 0]``."""
    mesh = structured_rectangle([(1.0, 3, 1.0), (4.0, 7, 3.0)], [(5.0, 10, 1.0 / 3.0)], origin=(0.0, -5.0))
    disc = discretize(mesh, "cosserat")
    bcs = BoundaryConditions()
    bcs.add(nodes_on_line(mesh, x=0.0), "ux", name="symmetry")
    bcs.add(nodes_on_line(mesh, x=5.0), "ux", name="side")
    base = nodes_on_line(mesh, y=-5.0)
    bcs.add(base, "ux", name="base").add(base, "uy", name="base")
    bcs.add(nodes_in_box(mesh, (0.0, 1.0), (0.0, 0.0)), "uy", -settlement, ramped=True, name="footing")
    problem = Problem(disc, bcs, {0: model}, np.zeros(disc.dofmap.n_dofs), disc.new_store(), "footing")
    return solve_displacement_controlled(problem, LoadSchedule(n_steps), newton_cfg, progress=False)


@pytest.mark.parametrize("continuum", ["cosserat", "cauchy"])
def test_uniaxial_plane_strain_stretch(continuum, vm_linear):
    stretch = 1e-5
    problem = _uniaxial(continuum, vm_linear, stretch)
    history = solve_displacement_controlled(problem, LoadSchedule(2), progress=False)

    G, K = vm_linear.moduli.G, vm_linear.moduli.K
    stiffness = 4.0 * G * (3.0 * K + G) / (3.0 * K + 4.0 * G)
    assert history.completed and len(history.records) == 2
    assert history.column("displacement") == pytest.approx([0.5 * stretch, stretch])
    assert history.records[-1].reaction == pytest.approx(stiffness * stretch, rel=1e-9)
    assert history.records[-1].iterations == 1
    if continuum == "cosserat":
        np.testing.assert_allclose(problem.u[2::3], 0.0, atol=1e-14)


@pytest.mark.parametrize("continuum", ["cosserat", "cauchy"])
def test_patch_of_distorted_elements_reproduces_uniform_stress(continuum, vm_linear):
    mesh = irregular_patch()
    disc = discretize(mesh, continuum)
    grad = np.array([[1e-6, 3e-6], [-2e-6, -4e-6]])
    sides = [nodes_on_line(mesh, x=x) for x in (0.0, 2.0)] + [nodes_on_line(mesh, y=y) for y in (0.0, 2.0)]
    boundary = np.unique(np.concatenate(sides))
    linear = mesh.nodes[boundary] @ grad.T
    bcs = BoundaryConditions()
    bcs.add(boundary, "ux", linear[:, 0], ramped=True, name="patch")
    bcs.add(boundary, "uy", linear[:, 1], ramped=True, name="patch")
    problem = Problem(disc, bcs, {0: vm_linear}, np.zeros(disc.dofmap.n_dofs), disc.new_store(), "patch")
    history = solve_displacement_controlled(problem, LoadSchedule(1), progress=False)
    assert history.completed

    u = problem.u.reshape(mesh.n_nodes, -1)
    np.testing.assert_allclose(u[:, :2], mesh.nodes @ grad.T, atol=1e-13)
    eps = np.zeros((3, 3))
    eps[:2, :2] = 0.5 * (grad + grad.T)
    G, K = vm_linear.moduli.G, vm_linear.moduli.K
    sigma = K * np.trace(eps) * np.eye(3) + 2.0 * G * (eps - np.trace(eps) / 3.0 * np.eye(3))
    if continuum == "cauchy":
        expected = [sigma[0, 0], sigma[1, 1], sigma[0, 1]]
    else:
        # micro-rotation follows the macro rotation, leaving no relative rotation or curvature
        np.testing.assert_allclose(u[:, 2], 0.5 * (grad[1, 0] - grad[0, 1]), atol=1e-13)
        expected = [sigma[0, 0], sigma[1, 1], sigma[2, 2], sigma[0, 1], sigma[1, 0]] + [0.0] * 7
    stresses = problem.store.committed.stress.reshape(-1, disc.n_generalized)
    np.testing.assert_allclose(stresses, np.tile(expected, (len(stresses), 1)), atol=1e-9 * np.abs(sigma).max())


def test_cauchy_assembly_matches_classical_stiffness(vm_linear):
    mesh = irregular_patch()
    disc = discretize(mesh, "cauchy")
    _, stiffness = assemble(disc, disc.new_store(), np.zeros(disc.dofmap.n_dofs), {0: vm_linear})

    G, K = vm_linear.moduli.G, vm_linear.moduli.K
    lam = K - 2.0 * G / 3.0
    D = np.array([[lam + 2.0 * G, lam, 0.0], [lam, lam + 2.0 * G, 0.0], [0.0, 0.0, G]])
    rule = gauss_legendre_2d(2)
    dofmap = DofMap(mesh.n_nodes, "cauchy")
    reference = np.zeros((dofmap.n_dofs, dofmap.n_dofs))
    for e, dofs in enumerate(dofmap.element_dofs(mesh.elements)):
        coords = mesh.element_coords(e)
        for (xi, eta), w in zip(rule.points, rule.weights):
            B = cauchy_b_matrix(coords, xi, eta)
            det_j = jacobian(coords, xi, eta)[2]
            reference[np.ix_(dofs, dofs)] += w * det_j * B.T @ D @ B
    k = stiffness.toarray()
    assert np.abs(k - reference).max() <= 1e-10 * np.abs(reference).max()


def test_store_commit_and_rollback():
    store = GaussPointStore(2, 4, 12)
    store.trial.lam[...] = 1.0
    store.trial.regime[0, 0] = 2
    store.rollback()
    assert not store.trial.lam.any() and not store.trial.regime.any()

    store.trial.lam[0, 1] = 2.0
    store.trial.stress[1, 3, 5] = -7.0
    store.commit()
    store.trial.lam[0, 1] = 5.0
    assert store.committed.lam[0, 1] == 2.0
    store.rollback()
    assert store.trial.lam[0, 1] == 2.0 and store.trial.stress[1, 3, 5] == -7.0
    assert store.regime_counts() == {"elastic": 8, "radial": 0, "general": 0, "apex": 0}
    np.testing.assert_allclose(store.element_average("lam"), [0.5, 0.0])


def test_boundary_condition_errors():
    mesh = single_element()
    dofmap = DofMap(mesh.n_nodes, "cauchy")
    bcs = BoundaryConditions()
    with pytest.raises(ConfigError, match="selects no nodes"):
        bcs.add([], "ux", name="nothing")
    with pytest.raises(ConfigError, match="not available"):
        dofmap.dofs([0], "rz")

    bcs.add([0, 3, 7], "ux", name="left").add([0], "ux", 0.0, name="corner")
    dofs, values = bcs.prescribed(dofmap)
    np.testing.assert_array_equal(dofs, [0, 6, 14])
    assert not values.any()
    with pytest.raises(ConfigError, match="no constraint named"):
        bcs.dofs_of(dofmap, "missing")

    bcs.add([3], "ux", 1e-3, ramped=True, name="pull")
    with pytest.raises(ConfigError, match="conflicting"):
        bcs.prescribed(dofmap)


def test_per_node_values_are_ramped():
    mesh = single_element()
    dofmap = DofMap(mesh.n_nodes, "cosserat")
    bcs = BoundaryConditions().add([1, 5, 2], "uy", [1.0, 2.0, 3.0], ramped=True, name="edge")
    bcs.add([0], "rz", 0.5, name="held")
    dofs, values = bcs.prescribed(dofmap, load_factor=0.5)
    # sorted by DOF: rz of node 0, then uy of nodes 1, 2 and 5
    np.testing.assert_array_equal(dofs, [2, 4, 7, 16])
    np.testing.assert_allclose(values, [0.5, 0.5, 1.5, 1.0])
    assert len(bcs.free_dofs(dofmap)) == dofmap.n_dofs - 4


def test_failed_step_bisects_then_raises(vm_linear):
    problem = _uniaxial("cosserat", vm_linear, 1e-5)
    cfg = NewtonConfig(max_iter=0, max_bisections=2)
    with pytest.raises(SolverDivergence) as info:
        solve_displacement_controlled(problem, LoadSchedule(1), cfg, progress=False)
    diagnostics = info.value.diagnostics
    assert diagnostics["bisections"] == 2
    assert diagnostics["load_factor"] == pytest.approx(0.25)
    assert diagnostics["last_converged"] == 0.0
    assert len(diagnostics["residuals"]) == 1


def test_failure_is_recorded_and_state_rolled_back(vm_linear):
    problem = _uniaxial("cosserat", vm_linear, 1e-5)
    cfg = NewtonConfig(max_iter=0, max_bisections=1)
    history = solve_displacement_controlled(problem, LoadSchedule(1), cfg, progress=False, raise_on_failure=False)
    assert not history.completed and not history.records
    assert history.failure["step"] == 1 and "iterations" in history.failure["reason"]
    assert not problem.u.any()
    np.testing.assert_array_equal(problem.store.trial.strain, problem.store.committed.strain)


def test_material_error_in_the_kernel_bisects_then_raises(vm_linear, monkeypatch):
    def failing_assembly(*args, **kwargs):
        raise MaterialError("apex undefined for pressure-insensitive model")

    monkeypatch.setattr(solver, "assemble", failing_assembly)
    problem = _uniaxial("cosserat", vm_linear, 1e-5)
    with pytest.raises(SolverDivergence) as info:
        solve_displacement_controlled(problem, LoadSchedule(1), NewtonConfig(max_bisections=1), progress=False)
    diagnostics = info.value.diagnostics
    assert diagnostics["bisections"] == 1
    assert diagnostics["reason"].startswith("constitutive update failed")
    assert not problem.u.any()


def test_regime_counts_cover_every_evaluation(tresca_clay):
    problem = _uniaxial("cosserat", tresca_clay, 2e-3)
    history = solve_displacement_controlled(problem, LoadSchedule(4), progress=False)
    for record in history.records:
        assert sum(record.regime_counts.values()) == 9 * len(record.residuals)
    totals = history.regime_totals()
    assert totals["general"] + totals["radial"] > 0
    assert totals["apex"] == 0


@pytest.mark.slow
def test_newton_converges_quadratically_in_every_plastic_step():
    """Frictional footing reaching the general and apex returns; the Gauss-point solves run far below ``rtol``."""
    model = build_material(FOOTING_MODULI, mohr_coulomb(30.0), CohesionLaw(20.0), mohr_coulomb(10.0))
    history = _footing(model, settlement=2e-3, newton_cfg=NewtonConfig(return_tol=1e-13))
    assert history.completed
    totals = history.regime_totals()
    assert totals["general"] > 0 and totals["apex"] > 0

    checked, floored = 0, 0
    for record in history.records:
        r = record.residuals
        plastic = sum(record.regime_counts[k] for k in ("radial", "general", "apex"))
        if record.bisections or len(r) < 4 or not plastic:
            continue
        r1, r2, r3 = r[-3:]
        if r3 <= 1e-10 * abs(record.reaction):
            # round-off floor of the Gauss-point returns
            floored += 1
            continue
        slope = math.log(r3 / r2) / math.log(r2 / r1)
        assert slope >= 1.9, f"step {record.step}: residuals {r}"
        checked += 1
    assert checked >= 1
    assert checked + floored >= 3


@pytest.mark.slow
def test_plane_strain_results_ignore_volumetric_curvature_modulus():
    model = build_material(FOOTING_MODULI, tresca(), CohesionLaw(490.0))
    moduli = dataclasses.replace(FOOTING_MODULI, K_c=1000.0 * FOOTING_MODULI.B)
    stiff = build_material(moduli, tresca(), CohesionLaw(490.0))
    a = _footing(model, n_steps=4).column("reaction")
    b = _footing(stiff, n_steps=4).column("reaction")
    np.testing.assert_allclose(a, b, rtol=1e-12)
