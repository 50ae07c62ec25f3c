"""Backward-Euler predictor/corrector integration of the Cosserat elastoplastic model.

Every plastic correction is reduced to a single scalar equation:

* radial return, when the potential's Lode derivative vanishes at the trial angle: unknown ``dlambda``;
* general return: unknown Lode angle ``theta``, with ``dlambda`` and ``r`` following from deviatoric geometry;
* apex return, when the two above end with ``q < 0``: unknown ``dlambda`` on the hydrostatic axis.
"""
import math
from dataclasses import dataclass, field
from enum import Enum
from typing import Optional, Tuple

import numpy as np

from cosserat.errors import MaterialError, ReturnMapDivergence
from cosserat.models.material import MaterialModel, elastic_strain, elastic_stress
from cosserat.tensors import (
    IDENTITY,
    LODE_LIMIT,
    EigenSystem,
    cosserat_q,
    dev,
    eigensystem,
    invariants_sym,
    principal_from_invariants,
    skw,
    sym,
)
from cosserat.utils import pylogger

log = pylogger.get_pylogger(__name__)

STATIONARY_TOL = 1e-10
# the Lode angle of an exact two-fold spectrum is only resolved to ~1e-8 rad, so corners are detected on sin(3 theta)
CORNER_TOL = 1e-14
LODE_CLAMP = LODE_LIMIT - 1e-12
# spacing of representable Lode angles near the meridians, widened to a few ulps
THETA_RESOLUTION = 8.0 * float(np.spacing(LODE_LIMIT))
# largest |f| accepted at the Lode-angle resolution, relative to max(sigma0, q*, 1)
ROUNDOFF_FLOOR = 1e-9
DEFAULT_TOL = 1e-10
DEFAULT_MAX_ITER = 50


class Regime(Enum):
    ELASTIC = 0
    RADIAL = 1
    GENERAL = 2
    APEX = 3


@dataclass(frozen=True)
class GeneralizedState:
    """Converged elastic strains and accumulated plastic multiplier at a Gauss point."""

    eps_e: np.ndarray
    omega_e: np.ndarray
    chi_e: np.ndarray
    lam: float = 0.0

    @classmethod
    def zero(cls) -> "GeneralizedState":
        return cls(np.zeros((3, 3)), np.zeros((3, 3)), np.zeros((3, 3)), 0.0)


@dataclass
class PredictorSet:
    """Elastic trial state and its invariants."""

    eps: np.ndarray
    omega: np.ndarray
    chi: np.ndarray
    p: float
    q: float
    q_s: float
    theta: float
    degenerate: bool
    s_sym: np.ndarray
    s_skw: np.ndarray
    mu: np.ndarray
    _eigen: Optional[EigenSystem] = field(default=None, repr=False)

    @property
    def tr_mu(self) -> float:
        return float(np.trace(self.mu))

    @property
    def eigen(self) -> EigenSystem:
        """Spectral data of the symmetric strain predictor, computed on first use."""
        if self._eigen is None:
            self._eigen = eigensystem(self.eps, gap_tol=1e-13)
        return self._eigen

    @property
    def at_corner(self) -> bool:
        """True on the compression or extension meridian, where two principal strains coincide."""
        return 1.0 - abs(math.sin(3.0 * self.theta)) <= CORNER_TOL

    @property
    def sigma_sym(self) -> np.ndarray:
        return self.s_sym + self.p * IDENTITY


@dataclass
class StressState:
    sigma_sym: np.ndarray
    s_skw: np.ndarray
    mu: np.ndarray
    p: float
    q: float
    q_s: float
    theta: float
    regime: Regime
    delta_lambda: float = 0.0
    r: Optional[float] = None


@dataclass
class ScalarSolveReport:
    iterations: int = 0
    residual: float = 0.0
    damping_events: int = 0
    converged: bool = True


def compute_predictors(
    state_n: GeneralizedState,
    d_eps: np.ndarray,
    d_omega: np.ndarray,
    d_chi: np.ndarray,
    model: MaterialModel,
) -> PredictorSet:
    """Elastic trial state from the converged elastic strains plus the total strain increments.

    Strain inputs are projected: ``eps`` onto its symmetric part and ``omega`` onto its skew part.
    """
    eps = sym(state_n.eps_e + d_eps)
    omega = skw(state_n.omega_e + d_omega)
    chi = state_n.chi_e + d_chi
    sigma, s_skw, mu = elastic_stress(eps, omega, chi, model.moduli)
    p = float(np.trace(sigma)) / 3.0
    s_sym = dev(sigma)
    tr_mu = float(np.trace(mu))
    q = cosserat_q(s_sym, s_skw, dev(sym(mu)), skw(mu), tr_mu, model.moduli)
    q_s, theta, degenerate = invariants_sym(s_sym, atol=1e-13 * max(q, abs(p)))
    return PredictorSet(eps, omega, chi, p, q, q_s, theta, degenerate, s_sym, s_skw, mu)


def _absolute_tol(model: MaterialModel, pred: PredictorSet, lam_n: float, tol: float) -> float:
    return tol * max(model.sigma0(lam_n), pred.q, 1.0)


def _near_stationary(model: MaterialModel, pred: PredictorSet) -> bool:
    shape = model.potential_shape
    if shape.circular or pred.degenerate or pred.at_corner:
        return True
    return any(abs(pred.theta - t) <= STATIONARY_TOL for t in shape.stationary_angles)


def return_radial(
    pred: PredictorSet, lam_n: float, model: MaterialModel, tol: float = DEFAULT_TOL, max_iter: int = DEFAULT_MAX_ITER
) -> Tuple[float, Optional[StressState], ScalarSolveReport]:
    """Radial return at fixed Lode angle.

    Newton on ``f(dlambda) = (q* - 3G Gh dlambda) Gamma + M (p* - K Mh dlambda) - sigma0(lambda_n + dlambda)``
    started from the linear-hardening closed form, safeguarded by bisection.

    :return: ``(dlambda, state, report)``; ``state`` is ``None`` when the root lies beyond ``q = 0`` and the
        apex return has to take over.
    """
    mod = model.moduli
    theta = pred.theta
    gamma = model.yield_shape.value(theta)
    gamma_hat = model.potential_shape.value(theta)
    h0 = 3.0 * mod.G * gamma * gamma_hat + mod.K * model.M * model.M_hat
    atol = _absolute_tol(model, pred, lam_n, tol)

    def residual(dl: float) -> float:
        q = pred.q - 3.0 * mod.G * gamma_hat * dl
        p = pred.p - mod.K * model.M_hat * dl
        return q * gamma + model.M * p - model.sigma0(lam_n + dl)

    def slope(dl: float) -> float:
        return -h0 - model.dsigma0_dlambda(lam_n + dl)

    report = ScalarSolveReport()
    f_trial = residual(0.0)
    dl_apex = pred.q / (3.0 * mod.G * gamma_hat)
    f_apex = residual(dl_apex)
    if f_apex > 0.0:
        report.residual = f_apex
        return dl_apex, None, report

    lo, hi = 0.0, dl_apex
    dl = f_trial / (h0 + model.dsigma0_dlambda(lam_n))
    if not lo < dl < hi:
        dl = 0.5 * (lo + hi)
        report.damping_events += 1
    f = residual(dl)
    while abs(f) > atol:
        if report.iterations >= max_iter:
            report.converged, report.residual = False, f
            raise ReturnMapDivergence(f"radial return did not converge: |f|={abs(f):.3e}", report)
        report.iterations += 1
        if f > 0.0:
            lo = dl
        else:
            hi = dl
        df = slope(dl)
        step = dl - f / df if df < 0.0 else None
        if step is None or not lo < step < hi:
            step = 0.5 * (lo + hi)
            report.damping_events += 1
        dl = step
        f = residual(dl)
    report.residual = f

    q = pred.q - 3.0 * mod.G * gamma_hat * dl
    p = pred.p - mod.K * model.M_hat * dl
    ratio = q / pred.q
    state = StressState(
        sigma_sym=ratio * pred.s_sym + p * IDENTITY,
        s_skw=ratio * pred.s_skw,
        mu=ratio * pred.mu,
        p=p,
        q=q,
        q_s=ratio * pred.q_s,
        theta=pred.theta,
        regime=Regime.RADIAL,
        delta_lambda=dl,
        r=pred.q,
    )
    return dl, state, report


@dataclass
class _GeneralPoint:
    """All quantities of the general return evaluated at one trial Lode angle."""

    theta: float
    delta: float
    r: float
    dl: float
    q: float
    p: float
    f: float
    dr: float
    ddl: float
    dq: float
    dp: float
    df: float


def general_point(pred: PredictorSet, lam_n: float, model: MaterialModel, theta: float) -> _GeneralPoint:
    """Evaluates ``f`` and its Lode-angle derivative for the general return at ``theta``."""
    mod = model.moduli
    g = mod.G
    qs2 = pred.q_s**2
    delta = pred.theta - theta
    sin_d, sin_2d, cos_2d = math.sin(delta), math.sin(2.0 * delta), math.cos(2.0 * delta)

    gh = model.potential_shape.value(theta)
    gh1 = model.potential_shape.d1(theta)
    gh2 = model.potential_shape.d2(theta)
    gam = model.yield_shape.value(theta)
    gam1 = model.yield_shape.d1(theta)

    r = math.sqrt(max(pred.q**2 - qs2 * sin_d**2, 0.0))
    a = qs2 * sin_2d
    dl = a / (6.0 * g * r * gh1)
    q = r - 3.0 * g * gh * dl
    p = pred.p - mod.K * model.M_hat * dl
    lam = lam_n + dl
    f = q * gam + model.M * p - model.sigma0(lam)

    dr = qs2 * sin_2d / (2.0 * r)
    da = -2.0 * qs2 * cos_2d
    ddl = (da / (6.0 * g) - dl * (dr * gh1 + r * gh2)) / (r * gh1)
    dq = dr - 3.0 * g * (gh1 * dl + gh * ddl)
    dp = -mod.K * model.M_hat * ddl
    df = gam1 * q + gam * dq + model.M * dp - model.dsigma0_dlambda(lam) * ddl
    return _GeneralPoint(theta, delta, r, dl, q, p, f, dr, ddl, dq, dp, df)


def _general_bracket(pred: PredictorSet, model: MaterialModel) -> float:
    """Far end of the search interval: the stationary angle adjacent to the trial angle on the descent side."""
    direction = -math.copysign(1.0, model.potential_shape.d1(pred.theta))
    candidates = [t for t in model.potential_shape.stationary_angles if (t - pred.theta) * direction > 0.0]
    far = min(candidates, key=lambda t: abs(t - pred.theta)) if candidates else direction * LODE_LIMIT
    return max(-LODE_CLAMP, min(LODE_CLAMP, far))


def return_general(
    pred: PredictorSet, lam_n: float, model: MaterialModel, tol: float = DEFAULT_TOL, max_iter: int = DEFAULT_MAX_ITER
) -> Tuple[float, float, Optional[StressState], ScalarSolveReport]:
    """General return with the Lode angle as unknown.

    The root lies strictly between the trial angle (where ``f = f* > 0``) and the adjacent stationary angle of
    the potential (where ``dlambda`` diverges and ``f -> -inf``). A damped Newton iteration is kept inside that
    bracket by bisection.

    Inside a thin corner-rounding band ``f`` changes by more than ``atol`` between neighbouring representable
    angles. The iteration therefore also stops once the Newton correction falls below
    :data:`THETA_RESOLUTION`, or once the bracket shrinks to that width. Either way the point is accepted only
    when ``|f|`` is below :data:`ROUNDOFF_FLOOR` of the stress scale.

    :raises ReturnMapDivergence: On the iteration cap, or on a collapsed bracket with ``|f|`` above the floor.
    :return: ``(dlambda, theta, state, report)``; ``state`` is ``None`` on a ``q < 0`` root (apex handoff).
    """
    atol = _absolute_tol(model, pred, lam_n, tol)
    floor = _absolute_tol(model, pred, lam_n, ROUNDOFF_FLOOR)
    report = ScalarSolveReport()
    far = _general_bracket(pred, model)
    near = pred.theta
    direction = math.copysign(1.0, far - near)

    def settled(point: _GeneralPoint) -> bool:
        return abs(point.f) <= atol or abs(point.f) <= min(floor, abs(point.df) * THETA_RESOLUTION)

    # bracket [pos, neg] in the sense of the sign of f
    pos, neg = near, far
    theta = near + direction * min(1e-3, 0.5 * abs(far - near))
    pt = general_point(pred, lam_n, model, theta)
    while not settled(pt):
        if report.iterations >= max_iter:
            report.converged, report.residual = False, pt.f
            raise ReturnMapDivergence(f"general return did not converge: |f|={abs(pt.f):.3e}", report)
        report.iterations += 1
        if pt.f > 0.0:
            pos = pt.theta
        else:
            neg = pt.theta
        lo, hi = min(pos, neg), max(pos, neg)
        if hi - lo <= THETA_RESOLUTION:
            if abs(pt.f) <= floor:
                log.debug(f"General return bracket collapsed at theta={pt.theta:.17g} with |f|={abs(pt.f):.3e}")
                break
            report.converged, report.residual = False, pt.f
            raise ReturnMapDivergence(
                f"general return bracket collapsed at theta={pt.theta:.17g} with |f|={abs(pt.f):.3e}", report
            )
        step = -pt.f / pt.df if pt.df != 0.0 else math.inf
        if lo < pt.theta + step < hi:
            trial = general_point(pred, lam_n, model, pt.theta + step)
            halvings = 0
            while abs(trial.f) > abs(pt.f) and halvings < 8:
                step *= 0.5
                halvings += 1
                trial = general_point(pred, lam_n, model, pt.theta + step)
            report.damping_events += halvings
        else:
            trial = general_point(pred, lam_n, model, 0.5 * (lo + hi))
            report.damping_events += 1
        pt = trial
    report.residual = pt.f

    if pt.q < 0.0:
        return pt.dl, pt.theta, None, report

    ratio = pt.q / pt.r
    q_s = ratio * pred.q_s * math.cos(pt.delta)
    principal = principal_from_invariants(pt.p, q_s, pt.theta)
    sigma_sym = np.einsum("i,ijk->jk", np.asarray(principal), pred.eigen.bases)
    state = StressState(
        sigma_sym=sigma_sym,
        s_skw=ratio * pred.s_skw,
        mu=ratio * pred.mu,
        p=pt.p,
        q=pt.q,
        q_s=q_s,
        theta=pt.theta,
        regime=Regime.GENERAL,
        delta_lambda=pt.dl,
        r=pt.r,
    )
    return pt.dl, pt.theta, state, report


def return_apex(
    pred: PredictorSet, lam_n: float, model: MaterialModel, tol: float = DEFAULT_TOL, max_iter: int = DEFAULT_MAX_ITER
) -> Tuple[float, StressState, ScalarSolveReport]:
    """Return to the apex of the cone: ``M (p* - K Mh dlambda) - sigma0(lambda_n + dlambda) = 0``.

    :raises MaterialError: For pressure-insensitive models where the apex does not exist.
    """
    if model.M == 0.0 or model.M_hat == 0.0:
        raise MaterialError("apex undefined for pressure-insensitive model")
    mod = model.moduli
    kmm = mod.K * model.M * model.M_hat
    atol = _absolute_tol(model, pred, lam_n, tol)

    def residual(dl: float) -> float:
        return model.M * (pred.p - mod.K * model.M_hat * dl) - model.sigma0(lam_n + dl)

    report = ScalarSolveReport()
    dl = (model.M * pred.p - model.sigma0(lam_n)) / (kmm + model.dsigma0_dlambda(lam_n))
    f = residual(dl)
    while abs(f) > atol:
        if report.iterations >= max_iter:
            report.converged, report.residual = False, f
            raise ReturnMapDivergence(f"apex return did not converge: |f|={abs(f):.3e}", report)
        report.iterations += 1
        dl -= f / -(kmm + model.dsigma0_dlambda(lam_n + dl))
        f = residual(dl)
    report.residual = f

    p = pred.p - mod.K * model.M_hat * dl
    zero = np.zeros((3, 3))
    state = StressState(
        sigma_sym=p * IDENTITY,
        s_skw=zero,
        mu=zero.copy(),
        p=p,
        q=0.0,
        q_s=0.0,
        theta=0.0,
        regime=Regime.APEX,
        delta_lambda=dl,
    )
    return dl, state, report


def integrate(
    state_n: GeneralizedState,
    d_eps: np.ndarray,
    d_omega: np.ndarray,
    d_chi: np.ndarray,
    model: MaterialModel,
    tol: float = DEFAULT_TOL,
    max_iter: int = DEFAULT_MAX_ITER,
    pred: Optional[PredictorSet] = None,
) -> Tuple[StressState, GeneralizedState, ScalarSolveReport]:
    """Integrates one strain increment at a stress point.

    :param state_n: Converged state at the beginning of the step.
    :param d_eps: Total strain increment.
    :param d_omega: Relative-rotation increment.
    :param d_chi: Wryness increment.
    :param model: Material model.
    :param tol: Relative tolerance on the yield function, scaled by ``max(sigma0(lambda_n), q*, 1)``.
    :param max_iter: Iteration cap of the scalar solves.
    :param pred: Precomputed predictors for the same increment.
    :raises ReturnMapDivergence: When a scalar solve fails, or when a pressure-insensitive model would need the
        apex return.
    :return: ``(stress, new_state, report)``.
    """
    if pred is None:
        pred = compute_predictors(state_n, d_eps, d_omega, d_chi, model)
    lam_n = state_n.lam
    gamma = model.yield_shape.value(pred.theta)
    f_trial = pred.q * gamma + model.M * pred.p - model.sigma0(lam_n)

    if f_trial <= 0.0:
        stress = StressState(
            sigma_sym=pred.sigma_sym,
            s_skw=pred.s_skw,
            mu=pred.mu,
            p=pred.p,
            q=pred.q,
            q_s=pred.q_s,
            theta=pred.theta,
            regime=Regime.ELASTIC,
            r=pred.q,
        )
        new_state = GeneralizedState(pred.eps, pred.omega, pred.chi, lam_n)
        return stress, new_state, ScalarSolveReport()

    if _near_stationary(model, pred):
        _, stress, report = return_radial(pred, lam_n, model, tol, max_iter)
    else:
        _, _, stress, report = return_general(pred, lam_n, model, tol, max_iter)

    if stress is None:
        if model.M == 0.0 or model.M_hat == 0.0:
            # no apex without friction; q < 0 only follows from a runaway trial state
            report.converged = False
            raise ReturnMapDivergence(
                f"return ended at q < 0 for pressure-insensitive model <{model.name}> (q*={pred.q:.3e})", report
            )
        log.debug("Return ended with q < 0, switching to the apex return")
        _, stress, apex_report = return_apex(pred, lam_n, model, tol, max_iter)
        apex_report.iterations += report.iterations
        apex_report.damping_events += report.damping_events
        report = apex_report

    eps_e, omega_e, chi_e = elastic_strain(stress.sigma_sym, stress.s_skw, stress.mu, model.moduli)
    new_state = GeneralizedState(eps_e, omega_e, chi_e, lam_n + stress.delta_lambda)
    return stress, new_state, report
