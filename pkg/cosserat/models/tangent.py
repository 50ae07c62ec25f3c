"""Consistent (algorithmic) tangent operators of the return mapping.

A :class:`ConsistentTangent` holds nine fourth-order blocks ``d{sigma_sym, s_skw, mu} / d{eps, omega, chi}``
where the derivatives are taken with respect to the total strain measures at the end of the step.
"""
import math
from dataclasses import dataclass
from typing import Dict, Optional, Tuple

import numpy as np

from cosserat.errors import MaterialError, RegimeBoundaryError
from cosserat.models.material import ElasticModuli, MaterialModel
from cosserat.models.returnmap import (
    DEFAULT_TOL,
    GeneralizedState,
    PredictorSet,
    Regime,
    StressState,
    compute_predictors,
    general_point,
    integrate,
)
from cosserat.tensors import IDENTITY, PRINCIPAL_OFFSETS, PROJECTORS, dyad, lode_gradient, to_matrix

STRESSES = ("sigma_sym", "s_skw", "mu")
STRAINS = ("eps", "omega", "chi")


@dataclass
class ConsistentTangent:
    """Nine fourth-order Jacobian blocks.

    ``blocks[a, b]`` is the ``(3, 3, 3, 3)`` derivative of stress measure ``STRESSES[a]`` with respect to strain
    measure ``STRAINS[b]``.
    """

    blocks: np.ndarray
    regime: Regime

    @classmethod
    def zeros(cls, regime: Regime) -> "ConsistentTangent":
        return cls(np.zeros((3, 3, 3, 3, 3, 3)), regime)

    def block(self, stress: str, strain: str) -> np.ndarray:
        return self.blocks[STRESSES.index(stress), STRAINS.index(strain)]

    def set_block(self, stress: str, strain: str, value: np.ndarray) -> None:
        self.blocks[STRESSES.index(stress), STRAINS.index(strain)] = value

    def as_matrix(self) -> np.ndarray:
        """27x27 matrix: rows ``(sigma_sym, s_skw, mu)``, columns ``(eps, omega, chi)``, each in component order."""
        return np.block([[to_matrix(self.blocks[a, b]) for b in range(3)] for a in range(3)])


def couple_stiffness(moduli: ElasticModuli) -> np.ndarray:
    """``d mu / d chi`` of the elastic law."""
    return (
        moduli.K_c * PROJECTORS.spherical
        + 2.0 * moduli.B * (PROJECTORS.sym - PROJECTORS.spherical / 3.0)
        + 2.0 * moduli.B_c * PROJECTORS.skw
    )


def tangent_elastic(model: MaterialModel) -> ConsistentTangent:
    mod = model.moduli
    tangent = ConsistentTangent.zeros(Regime.ELASTIC)
    tangent.set_block("sigma_sym", "eps", mod.K * PROJECTORS.spherical + 2.0 * mod.G * PROJECTORS.dev_sym)
    tangent.set_block("s_skw", "omega", 2.0 * mod.G_c * PROJECTORS.skw)
    tangent.set_block("mu", "chi", couple_stiffness(mod))
    return tangent


@dataclass
class _PredictorGradients:
    """Gradients of the predictor invariants with respect to ``eps``, ``omega`` and ``chi``."""

    p: Dict[str, np.ndarray]
    q: Dict[str, np.ndarray]
    q_s: Dict[str, np.ndarray]
    theta: Dict[str, np.ndarray]


def _predictor_gradients(pred: PredictorSet, model: MaterialModel, with_theta: bool) -> _PredictorGradients:
    mod = model.moduli
    zero = np.zeros((3, 3))
    g = mod.G
    grads = _PredictorGradients(
        p={"eps": mod.K * IDENTITY, "omega": zero, "chi": zero},
        q={
            "eps": 3.0 * g * pred.s_sym / pred.q,
            "omega": 3.0 * g * pred.s_skw / pred.q,
            "chi": 3.0 * g * pred.mu / pred.q,
        },
        q_s={"eps": zero, "omega": zero, "chi": zero},
        theta={"eps": zero, "omega": zero, "chi": zero},
    )
    if pred.q_s > 0.0:
        grads.q_s["eps"] = 3.0 * g * pred.s_sym / pred.q_s
    if with_theta:
        grads.theta["eps"] = lode_gradient(pred.s_sym, g)
    return grads


def _predictor_stress_derivatives(model: MaterialModel) -> Dict[Tuple[str, str], np.ndarray]:
    """Non-zero derivatives of the trial tensors ``s*_sym``, ``s*_skw`` and ``mu*``."""
    mod = model.moduli
    return {
        ("sigma_sym", "eps"): 2.0 * mod.G * PROJECTORS.dev_sym,
        ("s_skw", "omega"): 2.0 * mod.G_c * PROJECTORS.skw,
        ("mu", "chi"): couple_stiffness(mod),
    }


def tangent_radial(
    pred: PredictorSet, converged: StressState, model: MaterialModel, lam_n: float = 0.0
) -> ConsistentTangent:
    """Tangent of the radial return.

    ``d dlambda = [Gamma dq* + M dp* + q Gamma'(theta*) dtheta*] / (3G Gamma Gamma_hat + K M M_hat + sigma0')``;
    the stresses scale with ``q / q*`` and the mean stress shifts by ``-K M_hat dlambda``.
    """
    if pred.q == 0.0:
        raise MaterialError("radial tangent undefined at q* = 0")
    mod = model.moduli
    theta = pred.theta
    gam = model.yield_shape.value(theta)
    gam1 = model.yield_shape.d1(theta)
    gh = model.potential_shape.value(theta)
    dsig0 = model.dsigma0_dlambda(lam_n + converged.delta_lambda)
    h = 3.0 * mod.G * gam * gh + mod.K * model.M * model.M_hat + dsig0

    use_theta = gam1 != 0.0 and not pred.degenerate and not pred.at_corner
    grads = _predictor_gradients(pred, model, with_theta=use_theta)
    d_trial = _predictor_stress_derivatives(model)
    ratio = converged.q / pred.q

    tangent = ConsistentTangent.zeros(Regime.RADIAL)
    for x in STRAINS:
        d_dl = (gam * grads.q[x] + model.M * grads.p[x] + converged.q * gam1 * grads.theta[x]) / h
        d_q = grads.q[x] - 3.0 * mod.G * gh * d_dl
        d_p = grads.p[x] - mod.K * model.M_hat * d_dl
        d_ratio = d_q / pred.q - converged.q * grads.q[x] / pred.q**2
        tangent.set_block("sigma_sym", x, dyad(pred.s_sym, d_ratio) + dyad(IDENTITY, d_p))
        tangent.set_block("s_skw", x, dyad(pred.s_skw, d_ratio))
        tangent.set_block("mu", x, dyad(pred.mu, d_ratio))
    for (a, b), value in d_trial.items():
        tangent.set_block(a, b, tangent.block(a, b) + ratio * value)
    return tangent


def tangent_general(
    pred: PredictorSet, converged: StressState, model: MaterialModel, lam_n: float
) -> ConsistentTangent:
    """Tangent of the general return.

    Partial derivatives at fixed ``theta`` of ``r``, ``dlambda``, ``q``, ``p`` and ``f`` are combined with
    ``dtheta = -f_X / f_theta``; the symmetric stress is differentiated through its principal values and the
    spins of the predictor eigenbasis.
    """
    mod = model.moduli
    g = mod.G
    pt = general_point(pred, lam_n, model, converged.theta)
    theta, delta, r, dl, q = pt.theta, pt.delta, pt.r, pt.dl, pt.q
    qs_t = pred.q_s
    sin_d = math.sin(delta)
    sin_2d, cos_2d = math.sin(2.0 * delta), math.cos(2.0 * delta)
    gam = model.yield_shape.value(theta)
    gh = model.potential_shape.value(theta)
    gh1 = model.potential_shape.d1(theta)
    dsig0 = model.dsigma0_dlambda(lam_n + dl)

    grads = _predictor_gradients(pred, model, with_theta=True)
    eigen = pred.eigen
    q_s = converged.q_s
    betas = [theta + offset for offset in PRINCIPAL_OFFSETS]
    principal = [converged.p + 2.0 * q_s / 3.0 * math.sin(b) for b in betas]

    tangent = ConsistentTangent.zeros(Regime.GENERAL)
    for x in STRAINS:
        d_q2 = 2.0 * pred.q * grads.q[x]
        d_qs = grads.q_s[x]
        d_th = grads.theta[x]
        r_x = (d_q2 - 2.0 * qs_t * sin_d**2 * d_qs - qs_t**2 * sin_2d * d_th) / (2.0 * r)
        a_x = 2.0 * qs_t * sin_2d * d_qs + 2.0 * qs_t**2 * cos_2d * d_th
        dl_x = a_x / (6.0 * g * r * gh1) - dl * r_x / r
        q_x = r_x - 3.0 * g * gh * dl_x
        p_x = grads.p[x] - mod.K * model.M_hat * dl_x
        f_x = gam * q_x + model.M * p_x - dsig0 * dl_x
        theta_x = -f_x / pt.df

        total_dl = dl_x + pt.ddl * theta_x
        total_r = r_x + pt.dr * theta_x
        total_q = q_x + pt.dq * theta_x
        total_p = grads.p[x] - mod.K * model.M_hat * total_dl
        d_ratio = total_q / r - q * total_r / r**2
        total_qs = q_s * (total_q / q - total_r / r + d_qs / qs_t - math.tan(delta) * (d_th - theta_x))

        block = np.zeros((3, 3, 3, 3))
        for i, beta in enumerate(betas):
            d_sigma_i = total_p + 2.0 / 3.0 * (math.sin(beta) * total_qs + q_s * math.cos(beta) * theta_x)
            block += dyad(eigen.bases[i], d_sigma_i)
            if x == "eps":
                block += principal[i] * eigen.spins[i]
        tangent.set_block("sigma_sym", x, block)
        tangent.set_block("s_skw", x, dyad(pred.s_skw, d_ratio))
        tangent.set_block("mu", x, dyad(pred.mu, d_ratio))

    ratio = q / r
    mod_ratio_blocks = _predictor_stress_derivatives(model)
    for key in (("s_skw", "omega"), ("mu", "chi")):
        tangent.set_block(*key, tangent.block(*key) + ratio * mod_ratio_blocks[key])
    return tangent


def tangent_apex(model: MaterialModel, lam: float) -> ConsistentTangent:
    """``d sigma_sym / d eps = K [1 - M M_hat K / (K M M_hat + sigma0')] I (x) I``; all other blocks vanish."""
    mod = model.moduli
    denominator = mod.K * model.M * model.M_hat + model.dsigma0_dlambda(lam)
    if denominator == 0.0:
        raise MaterialError("apex tangent singular")
    tangent = ConsistentTangent.zeros(Regime.APEX)
    coefficient = mod.K * (1.0 - model.M * model.M_hat * mod.K / denominator)
    tangent.set_block("sigma_sym", "eps", coefficient * PROJECTORS.spherical)
    return tangent


def consistent_tangent(
    pred: PredictorSet, converged: StressState, model: MaterialModel, lam_n: float
) -> ConsistentTangent:
    """Dispatches to the tangent of the regime that produced ``converged``."""
    if converged.regime is Regime.ELASTIC:
        return tangent_elastic(model)
    if converged.regime is Regime.RADIAL:
        return tangent_radial(pred, converged, model, lam_n)
    if converged.regime is Regime.GENERAL:
        return tangent_general(pred, converged, model, lam_n)
    return tangent_apex(model, lam_n + converged.delta_lambda)


def fd_tangent(
    state_n: GeneralizedState,
    d_eps: np.ndarray,
    d_omega: np.ndarray,
    d_chi: np.ndarray,
    model: MaterialModel,
    h: float = 1e-7,
    tol: float = 1e-13,
    max_shrinks: int = 5,
) -> ConsistentTangent:
    """Central finite differences of :func:`integrate` with respect to all 27 strain components.

    A perturbation that changes the return regime is retried with ``h / 10``.

    :raises RegimeBoundaryError: When the regime still flips after ``max_shrinks`` reductions.
    """
    base, _, _ = integrate(state_n, d_eps, d_omega, d_chi, model, tol=tol)
    tangent = ConsistentTangent.zeros(base.regime)
    increments = [d_eps, d_omega, d_chi]

    for b in range(3):
        for k in range(3):
            for l in range(3):
                step = h
                for _ in range(max_shrinks + 1):
                    results = []
                    for sign in (1.0, -1.0):
                        perturbed = [np.array(inc, dtype=float, copy=True) for inc in increments]
                        perturbed[b][k, l] += sign * step
                        stress, _, _ = integrate(state_n, *perturbed, model, tol=tol)
                        results.append(stress)
                    if all(s.regime is base.regime for s in results):
                        break
                    step *= 0.1
                else:
                    raise RegimeBoundaryError("state too close to regime boundary")
                plus, minus = results
                tangent.blocks[0, b, :, :, k, l] = (plus.sigma_sym - minus.sigma_sym) / (2.0 * step)
                tangent.blocks[1, b, :, :, k, l] = (plus.s_skw - minus.s_skw) / (2.0 * step)
                tangent.blocks[2, b, :, :, k, l] = (plus.mu - minus.mu) / (2.0 * step)
    return tangent


def integrate_with_tangent(
    state_n: GeneralizedState,
    d_eps: np.ndarray,
    d_omega: np.ndarray,
    d_chi: np.ndarray,
    model: MaterialModel,
    tol: float = DEFAULT_TOL,
    pred: Optional[PredictorSet] = None,
):
    """:func:`integrate` followed by the matching consistent tangent."""
    if pred is None:
        pred = compute_predictors(state_n, d_eps, d_omega, d_chi, model)
    stress, new_state, report = integrate(state_n, d_eps, d_omega, d_chi, model, tol=tol, pred=pred)
    return stress, new_state, report, consistent_tangent(pred, stress, model, state_n.lam)
