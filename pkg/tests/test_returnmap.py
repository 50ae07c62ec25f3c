import math

import numpy as np
import pytest

from cosserat.errors import MaterialError, ReturnMapDivergence
from cosserat.models import returnmap
from cosserat.models.components.criteria import drucker_prager, matsuoka_nakai, mohr_coulomb, tresca, von_mises
from cosserat.models.components.hardening import CohesionLaw, ExponentialHardening, LinearHardening
from cosserat.models.material import build_material, elastic_stress
from cosserat.models.returnmap import (
    GeneralizedState,
    Regime,
    ScalarSolveReport,
    _GeneralPoint,
    compute_predictors,
    general_point,
    integrate,
    return_apex,
    return_general,
    return_radial,
)
from cosserat.models.tangent import integrate_with_tangent
from cosserat.tensors import cosserat_q, dev, invariants_sym, skw, sym
from tests.helpers.materials import BIAXIAL_MODULI, random_increment
from tests.helpers.oracle import reference_return

TOL = 1e-12


def _stress_invariants(stress, model):
    s = dev(stress.sigma_sym)
    q = cosserat_q(s, stress.s_skw, dev(sym(stress.mu)), skw(stress.mu), float(np.trace(stress.mu)), model.moduli)
    q_s, theta, _ = invariants_sym(s)
    return float(np.trace(stress.sigma_sym)) / 3.0, q, q_s, theta


def _check_consistency(stress, new_state, state_n, increment, model):
    """Yield condition, non-negative multiplier and elastic-strain bookkeeping of a converged state.

    Tolerances scale with the trial state, like the round-off of the return itself.
    """
    trial = compute_predictors(state_n, *increment, model)
    scale = max(model.sigma0(state_n.lam), abs(stress.p), stress.q, abs(trial.p), trial.q, 1.0)
    p, q, _, theta = _stress_invariants(stress, model)
    assert stress.p == pytest.approx(p, abs=1e-10 * scale)
    assert stress.q == pytest.approx(q, abs=1e-9 * scale)
    sigma, s_skw, mu = elastic_stress(new_state.eps_e, new_state.omega_e, new_state.chi_e, model.moduli)
    np.testing.assert_allclose(sigma, stress.sigma_sym, atol=1e-9 * scale)
    np.testing.assert_allclose(s_skw, stress.s_skw, atol=1e-9 * scale)
    np.testing.assert_allclose(mu, stress.mu, atol=1e-9 * scale)
    if stress.regime is Regime.ELASTIC:
        assert new_state.lam == state_n.lam
        return
    assert stress.delta_lambda >= 0.0
    assert new_state.lam == pytest.approx(state_n.lam + stress.delta_lambda)
    theta = stress.theta if stress.regime is not Regime.APEX else 0.0
    f = model.yield_function(stress.p, stress.q, theta, new_state.lam)
    assert abs(f) <= 1e-9 * scale


def test_elastic_step_returns_trial(biaxial_mc):
    state = GeneralizedState.zero()
    d_eps = np.diag([-1e-5, -2e-5, -1e-5])
    stress, new_state, report = integrate(state, d_eps, np.zeros((3, 3)), np.zeros((3, 3)), biaxial_mc)
    assert stress.regime is Regime.ELASTIC
    assert report.iterations == 0
    np.testing.assert_allclose(new_state.eps_e, d_eps)
    sigma, _, _ = elastic_stress(d_eps, np.zeros((3, 3)), np.zeros((3, 3)), biaxial_mc.moduli)
    np.testing.assert_allclose(stress.sigma_sym, sigma)


def test_predictors_project_their_inputs(biaxial_mc, rng):
    a, b, c = rng.normal(size=(3, 3, 3)) * 1e-4
    pred = compute_predictors(GeneralizedState.zero(), a, b, c, biaxial_mc)
    np.testing.assert_allclose(pred.eps, sym(a))
    np.testing.assert_allclose(pred.omega, skw(b))
    np.testing.assert_allclose(pred.chi, c)
    assert pred.q >= pred.q_s


def test_radial_return_closed_form_with_linear_hardening(dp_linear, rng):
    moduli = dp_linear.moduli
    hits = 0
    for _ in range(200):
        lam_n = rng.uniform(0.0, 1e-3)
        state = GeneralizedState(np.zeros((3, 3)), np.zeros((3, 3)), np.zeros((3, 3)), lam_n)
        increment = random_increment(rng, 2e-3, volumetric=rng.uniform(-2e-3, 0.0))
        pred = compute_predictors(state, *increment, dp_linear)
        f_trial = pred.q + dp_linear.M * pred.p - dp_linear.sigma0(lam_n)
        if f_trial <= 0.0:
            continue
        dl, stress, _ = return_radial(pred, lam_n, dp_linear, tol=TOL)
        if stress is None:
            continue
        expected = f_trial / (3.0 * moduli.G + moduli.K * dp_linear.M * dp_linear.M_hat + 2000.0)
        assert dl == pytest.approx(expected, rel=1e-12)
        assert stress.regime is Regime.RADIAL
        hits += 1
    assert hits > 50


def test_apex_return_closed_form_with_linear_hardening(dp_linear, rng):
    moduli = dp_linear.moduli
    hits = 0
    for _ in range(200):
        lam_n = rng.uniform(0.0, 1e-3)
        state = GeneralizedState(np.zeros((3, 3)), np.zeros((3, 3)), np.zeros((3, 3)), lam_n)
        increment = random_increment(rng, 1e-5, volumetric=rng.uniform(1e-3, 5e-3))
        stress, new_state, _ = integrate(state, *increment, dp_linear, tol=TOL)
        if stress.regime is not Regime.APEX:
            continue
        pred = compute_predictors(state, *increment, dp_linear)
        expected = (dp_linear.M * pred.p - dp_linear.sigma0(lam_n)) / (
            moduli.K * dp_linear.M * dp_linear.M_hat + 2000.0
        )
        assert stress.delta_lambda == pytest.approx(expected, rel=1e-12)
        np.testing.assert_allclose(stress.sigma_sym, stress.p * np.eye(3))
        assert stress.q == 0.0
        np.testing.assert_array_equal(stress.mu, 0.0)
        _check_consistency(stress, new_state, state, increment, dp_linear)
        hits += 1
    assert hits > 50


def test_apex_undefined_without_friction(tresca_clay):
    zero = np.zeros((3, 3))
    pred = compute_predictors(GeneralizedState.zero(), np.eye(3) * 1e-3, zero, zero, tresca_clay)
    with pytest.raises(MaterialError):
        return_apex(pred, 0.0, tresca_clay)


def test_general_return_matches_its_scalar_equation(biaxial_mc, rng):
    checked = 0
    for _ in range(100):
        increment = random_increment(rng, 2e-3, volumetric=-1e-3)
        pred = compute_predictors(GeneralizedState.zero(), *increment, biaxial_mc)
        if pred.q + biaxial_mc.M * pred.p <= biaxial_mc.sigma0(0.0):
            continue
        if min(abs(pred.theta - t) for t in biaxial_mc.potential_shape.stationary_angles) < 1e-3:
            continue
        dl, theta, stress, _ = return_general(pred, 0.0, biaxial_mc, tol=TOL)
        if stress is None:
            continue
        point = general_point(pred, 0.0, biaxial_mc, theta)
        assert abs(point.f) <= 1e-9 * max(pred.q, biaxial_mc.sigma0(0.0), 1.0)
        assert point.dl == pytest.approx(dl)
        # the Lode angle moves from the trial angle towards a stationary angle of the potential
        assert (theta - pred.theta) * biaxial_mc.potential_shape.d1(pred.theta) < 0.0
        assert stress.theta == pytest.approx(invariants_sym(dev(stress.sigma_sym)).theta, abs=1e-9)
        checked += 1
    assert checked > 20


def test_general_return_derivative_is_consistent(biaxial_mc):
    pred = compute_predictors(
        GeneralizedState.zero(), np.diag([-3e-3, 1e-3, 0.5e-3]), np.zeros((3, 3)), np.zeros((3, 3)), biaxial_mc
    )
    theta, h = pred.theta + 0.05 * math.copysign(1.0, -biaxial_mc.potential_shape.d1(pred.theta)), 1e-7
    plus = general_point(pred, 0.0, biaxial_mc, theta + h)
    minus = general_point(pred, 0.0, biaxial_mc, theta - h)
    point = general_point(pred, 0.0, biaxial_mc, theta)
    assert point.df == pytest.approx((plus.f - minus.f) / (2.0 * h), rel=1e-5)
    assert point.ddl == pytest.approx((plus.dl - minus.dl) / (2.0 * h), rel=1e-5)


@pytest.mark.parametrize("fixture", ["biaxial_mc", "softening_mc", "tresca_clay", "dp_exponential", "vm_linear"])
def test_converged_states_are_consistent(fixture, rng, request):
    model = request.getfixturevalue(fixture)
    scale = 5.0 * model.sigma0(0.0) / (3.0 * model.moduli.G) + 1e-4
    regimes = set()
    for _ in range(60):
        increment = random_increment(rng, scale, volumetric=rng.uniform(-scale, 0.5 * scale))
        state = GeneralizedState.zero()
        stress, new_state, _ = integrate(state, *increment, model, tol=TOL)
        _check_consistency(stress, new_state, state, increment, model)
        regimes.add(stress.regime)
    assert regimes - {Regime.ELASTIC}


def test_tresca_apex_handoff_never_triggers(tresca_clay, rng):
    """Pressure-insensitive models never reach the apex: the radial and general returns always end at q > 0."""
    for _ in range(50):
        increment = random_increment(rng, 1e-3, volumetric=rng.uniform(-1e-3, 1e-3))
        stress, _, _ = integrate(GeneralizedState.zero(), *increment, tresca_clay, tol=TOL)
        assert stress.regime is not Regime.APEX
        assert stress.q >= 0.0


_KIND = {Regime.ELASTIC: "elastic", Regime.RADIAL: "smooth", Regime.GENERAL: "smooth", Regime.APEX: "apex"}


def _trials(model, rng, n, volumetric):
    """Increments from random converged states, sized from well inside to far beyond the elastic range."""
    base = 4.0 * max(model.sigma0(0.0), 50.0) / (3.0 * model.moduli.G)
    for _ in range(n):
        lam_n = rng.uniform(0.0, 1e-3)
        state = GeneralizedState(np.zeros((3, 3)), np.zeros((3, 3)), np.zeros((3, 3)), lam_n)
        scale = base * 10.0 ** rng.uniform(-2.0, 0.0)
        yield state, random_increment(rng, scale, volumetric=rng.uniform(*volumetric) * scale)


def _agrees_with_reference(model, state, increment):
    """Compares one integrated increment with the tensor-space reference; ``None`` when the flow is undefined."""
    stress, _, _ = integrate(state, *increment, model, tol=TOL)
    if stress.regime in (Regime.RADIAL, Regime.GENERAL) and not model.potential_shape.circular:
        # the flow direction is undefined on the meridians of a non-circular potential
        theta = invariants_sym(dev(stress.sigma_sym)).theta
        if abs(abs(theta) - math.pi / 6) < 1e-4:
            return None

    pred = compute_predictors(state, *increment, model)
    sigma, skew, mu, dl, kind = reference_return((pred.sigma_sym, pred.s_skw, pred.mu), state.lam, model)
    assert kind == _KIND[stress.regime]
    scale = max(np.abs(sigma).max(), np.abs(mu).max(), 1.0)
    np.testing.assert_allclose(stress.sigma_sym, sigma, rtol=0.0, atol=1e-8 * scale)
    np.testing.assert_allclose(stress.s_skw, skew, rtol=0.0, atol=1e-8 * scale)
    np.testing.assert_allclose(stress.mu, mu, rtol=0.0, atol=1e-8 * scale)
    assert stress.delta_lambda == pytest.approx(dl, rel=1e-8, abs=1e-10 * scale / model.moduli.G)
    return stress.regime


def _mohr_coulomb():
    return build_material(BIAXIAL_MODULI, mohr_coulomb(30.0), CohesionLaw(20.0), mohr_coulomb(20.0))


def _softening():
    return build_material(BIAXIAL_MODULI, mohr_coulomb(25.0), CohesionLaw(40.0, 5.0, 30.0), mohr_coulomb(5.0))


def _tresca():
    return build_material(BIAXIAL_MODULI, tresca(0.99), CohesionLaw(50.0))


def _drucker_prager():
    return build_material(BIAXIAL_MODULI, drucker_prager(0.8), LinearHardening(60.0, 2000.0), drucker_prager(0.3))


def _von_mises():
    return build_material(BIAXIAL_MODULI, von_mises(), LinearHardening(100.0, 5000.0))


def _matsuoka_nakai():
    return build_material(
        BIAXIAL_MODULI, matsuoka_nakai(30.0), ExponentialHardening(60.0, 30.0, 40.0), matsuoka_nakai(10.0)
    )


REFERENCE_CASES = [
    (_mohr_coulomb, (-1.0, 0.5), {Regime.ELASTIC, Regime.GENERAL}),
    (_softening, (-1.0, 0.0), {Regime.ELASTIC, Regime.GENERAL}),
    (_tresca, (-0.5, 0.5), {Regime.ELASTIC, Regime.GENERAL}),
    (_drucker_prager, (-1.0, 3.0), {Regime.ELASTIC, Regime.RADIAL, Regime.APEX}),
    (_von_mises, (-1.0, 1.0), {Regime.ELASTIC, Regime.RADIAL}),
    (_matsuoka_nakai, (-1.0, 0.0), {Regime.ELASTIC, Regime.GENERAL}),
]
REFERENCE_IDS = ["mohr_coulomb", "softening", "tresca", "drucker_prager", "von_mises", "matsuoka_nakai"]


@pytest.mark.parametrize("factory,volumetric,expected", REFERENCE_CASES, ids=REFERENCE_IDS)
def test_integrator_agrees_with_tensor_space_solve(factory, volumetric, expected, rng):
    model = factory()
    regimes = set()
    for state, increment in _trials(model, rng, 60, volumetric):
        regimes.add(_agrees_with_reference(model, state, increment))
    assert expected <= regimes


@pytest.mark.slow
def test_integrator_agrees_with_tensor_space_solve_sweep(rng):
    checked, regimes = 0, set()
    for factory, volumetric, _ in REFERENCE_CASES:
        model = factory()
        for state, increment in _trials(model, rng, 250, volumetric):
            regime = _agrees_with_reference(model, state, increment)
            if regime is not None:
                checked += 1
                regimes.add(regime)
    assert checked >= 1000
    assert regimes == set(Regime)


def _meridian_increments():
    compression = np.diag([0.0, -1e-3, 0.0])
    extension = np.diag([-1e-3, 0.0, -1e-3])
    rotation, _ = np.linalg.qr(np.random.default_rng(7).normal(size=(3, 3)))
    for name, d_eps in (("compression", compression), ("extension", extension)):
        yield name, d_eps
        yield f"rotated {name}", rotation @ d_eps @ rotation.T


@pytest.mark.parametrize("fixture", ["biaxial_mc", "tresca_clay"])
def test_meridian_increments_take_the_radial_return(fixture, request):
    """Two coinciding principal strains put the trial on a meridian, where only the radial return applies."""
    model = request.getfixturevalue(fixture)
    zero = np.zeros((3, 3))
    state = GeneralizedState.zero()
    for name, d_eps in _meridian_increments():
        pred = compute_predictors(state, d_eps, zero, zero, model)
        assert pred.at_corner, name
        stress, new_state, _, tangent = integrate_with_tangent(state, d_eps, zero, zero, model, tol=TOL)
        assert stress.regime is Regime.RADIAL, name
        assert stress.theta == pred.theta
        assert np.all(np.isfinite(tangent.blocks))
        _check_consistency(stress, new_state, state, (d_eps, zero, zero), model)


def test_radial_return_keeps_the_trial_lode_angle_bitwise(dp_exponential, rng):
    hits = 0
    for _ in range(100):
        increment = random_increment(rng, 2e-3, volumetric=rng.uniform(-2e-3, 0.0))
        pred = compute_predictors(GeneralizedState.zero(), *increment, dp_exponential)
        stress, _, _ = integrate(GeneralizedState.zero(), *increment, dp_exponential, pred=pred)
        if stress.regime is not Regime.RADIAL:
            continue
        assert stress.theta == pred.theta
        hits += 1
    assert hits > 50


def test_frictionless_model_never_hands_off_to_the_apex(tresca_clay, rng, monkeypatch):
    """A ``q < 0`` root of a pressure-insensitive model is reported as a failed return, not as a material error."""

    def no_root(pred, lam_n, model, tol, max_iter):
        return 0.0, None, ScalarSolveReport(iterations=1)

    def no_general_root(pred, lam_n, model, tol, max_iter):
        return 0.0, 0.0, None, ScalarSolveReport(iterations=1)

    monkeypatch.setattr(returnmap, "return_radial", no_root)
    monkeypatch.setattr(returnmap, "return_general", no_general_root)
    increment = random_increment(rng, 1e-3)
    with pytest.raises(ReturnMapDivergence, match="pressure-insensitive") as info:
        integrate(GeneralizedState.zero(), *increment, tresca_clay)
    assert not info.value.report.converged


def test_general_return_raises_when_the_bracket_collapses(biaxial_mc, monkeypatch):
    """A sign change without a root can only be narrowed down to the angle resolution, never accepted."""
    zero = np.zeros((3, 3))
    pred = compute_predictors(GeneralizedState.zero(), np.diag([-3e-3, 1e-3, 0.5e-3]), zero, zero, biaxial_mc)
    assert not pred.at_corner
    jump = pred.theta - 0.01 * math.copysign(1.0, biaxial_mc.potential_shape.d1(pred.theta))

    def step_function(pred, lam_n, model, theta):
        f = 1.0 if abs(theta - pred.theta) < abs(jump - pred.theta) else -1.0
        return _GeneralPoint(theta, pred.theta - theta, 1.0, 0.0, 1.0, 0.0, f, 0.0, 0.0, 0.0, 0.0, 0.0)

    monkeypatch.setattr(returnmap, "general_point", step_function)
    with pytest.raises(ReturnMapDivergence, match="bracket collapsed") as info:
        return_general(pred, 0.0, biaxial_mc, max_iter=500)
    report = info.value.report
    assert not report.converged
    assert abs(report.residual) == 1.0
    assert report.iterations < 500
