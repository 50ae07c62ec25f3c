"""Displacement-controlled Newton-Raphson solver with load-step bisection."""
import time
from dataclasses import asdict, dataclass, field
from typing import Any, Dict, List, Mapping, Optional

import numpy as np
from scipy.sparse.linalg import spsolve
from tqdm.auto import tqdm

from cosserat.errors import (
    DegenerateSpectrumError,
    MaterialError,
    ReturnMapDivergence,
    SolverDivergence,
    StationaryLodeAngleError,
)
from cosserat.fem.assembly import Discretization, assemble
from cosserat.fem.boundary import BoundaryConditions
from cosserat.fem.store import GaussPointStore
from cosserat.models.material import MaterialModel
from cosserat.models.returnmap import DEFAULT_TOL
from cosserat.utils import pylogger

log = pylogger.get_pylogger(__name__)

# kernel failures that make a trial step fail instead of the whole run
_RECOVERABLE = (ReturnMapDivergence, DegenerateSpectrumError, StationaryLodeAngleError, MaterialError)


@dataclass
class NewtonConfig:
    """Convergence when ``||r_free|| <= rtol * ||reaction|| + atol * char`` with ``char`` a characteristic force."""

    rtol: float = 1e-8
    atol: float = 1e-10
    max_iter: int = 25
    max_bisections: int = 4
    return_tol: float = DEFAULT_TOL


@dataclass
class LoadSchedule:
    """``n_steps`` equal increments of the load factor up to ``final_factor``."""

    n_steps: int = 20
    final_factor: float = 1.0

    def factors(self) -> np.ndarray:
        return np.linspace(0.0, self.final_factor, self.n_steps + 1)[1:]


@dataclass
class StepRecord:
    step: int
    load_factor: float
    displacement: float
    reaction: float
    iterations: int
    residuals: List[float]
    bisections: int
    regime_counts: Dict[str, int]
    wall_time: float


@dataclass
class Snapshot:
    step: int
    load_factor: float
    u: np.ndarray
    fields: Dict[str, np.ndarray]


@dataclass
class History:
    records: List[StepRecord] = field(default_factory=list)
    snapshots: List[Snapshot] = field(default_factory=list)
    completed: bool = True
    failure: Optional[Dict[str, Any]] = None

    def column(self, name: str) -> np.ndarray:
        return np.array([getattr(r, name) for r in self.records])

    def regime_totals(self) -> Dict[str, int]:
        totals: Dict[str, int] = {}
        for r in self.records:
            for k, v in r.regime_counts.items():
                totals[k] = totals.get(k, 0) + v
        return totals

    def as_dicts(self) -> List[Dict[str, Any]]:
        return [asdict(r) for r in self.records]


@dataclass
class Problem:
    """Everything the solver needs besides the schedule.

    :param control: Name of the ramped constraint whose displacement and reaction are reported.
    """

    disc: Discretization
    bcs: BoundaryConditions
    materials: Mapping[int, MaterialModel]
    f_ext: np.ndarray
    store: GaussPointStore
    control: str
    u: np.ndarray = None

    def __post_init__(self):
        if self.u is None:
            self.u = np.zeros(self.disc.dofmap.n_dofs)


class _StepFailed(Exception):
    def __init__(self, reason: str, residuals: List[float]):
        super().__init__(reason)
        self.reason = reason
        self.residuals = residuals


def _newton(problem: Problem, load_factor: float, cfg: NewtonConfig, free: np.ndarray):
    """Equilibrium iterations at a fixed load factor, starting from the committed displacement.

    :return: ``(u, f_int, residuals, regime_counts)``.
    :raises _StepFailed: On divergence, a singular system or a failed Gauss-point integration.
    """
    disc, store = problem.disc, problem.store
    store.rollback()
    u = problem.u.copy()
    prescribed, values = problem.bcs.prescribed(disc.dofmap, load_factor)
    u[prescribed] = values

    residuals: List[float] = []
    counts: Dict[str, int] = {}
    char = max(float(np.linalg.norm(problem.f_ext)), 1.0)
    for it in range(cfg.max_iter + 1):
        try:
            f_int, stiffness = assemble(disc, store, u, problem.materials, cfg.return_tol)
        except _RECOVERABLE as ex:
            raise _StepFailed(f"constitutive update failed: {ex}", residuals) from ex
        for k, v in store.regime_counts().items():
            counts[k] = counts.get(k, 0) + v

        r = f_int - problem.f_ext
        norm = float(np.linalg.norm(r[free]))
        reaction = float(np.linalg.norm(r[prescribed]))
        char = max(char, reaction)
        residuals.append(norm)
        log.info(f"load factor {load_factor:.6g} iteration {it}: |r| = {norm:.3e} (reaction {reaction:.3e})")
        if not np.isfinite(norm):
            raise _StepFailed("non-finite residual", residuals)
        if norm <= cfg.rtol * reaction + cfg.atol * char:
            return u, f_int, residuals, counts
        if it == cfg.max_iter:
            break

        k_ff = stiffness[free][:, free].tocsc()
        du = spsolve(k_ff, -r[free])
        if not np.all(np.isfinite(du)):
            raise _StepFailed("singular stiffness", residuals)
        u[free] += du
    raise _StepFailed(f"no convergence in {cfg.max_iter} iterations", residuals)


def solve_displacement_controlled(
    problem: Problem,
    schedule: LoadSchedule,
    newton_cfg: Optional[NewtonConfig] = None,
    snapshot_stride: int = 0,
    progress: bool = True,
    raise_on_failure: bool = True,
) -> History:
    """Runs the load steps of ``schedule``, bisecting a failed step up to ``max_bisections`` times.

    Gauss-point states are committed only after a converged (sub)step.

    :param snapshot_stride: Store fields every ``snapshot_stride`` steps (and at the last one); 0 disables.
    :param raise_on_failure: When false a final failure is recorded in the history instead of raised.
    :raises SolverDivergence: With step diagnostics once all bisections are exhausted.
    """
    cfg = newton_cfg or NewtonConfig()
    disc = problem.disc
    free = problem.bcs.free_dofs(disc.dofmap)
    control = problem.bcs.dofs_of(disc.dofmap, problem.control)
    history = History()
    factors = schedule.factors()
    previous = 0.0

    for step, target in enumerate(tqdm(factors, desc="load steps", disable=not progress), start=1):
        start = time.perf_counter()
        pending = [(target, 0)]
        iterations, residuals, bisections = 0, [], 0
        counts: Dict[str, int] = {}
        f_int = None
        while pending:
            factor, depth = pending[-1]
            try:
                u, f_int, res, step_counts = _newton(problem, factor, cfg, free)
            except _StepFailed as ex:
                if depth >= cfg.max_bisections:
                    diagnostics = {
                        "step": step,
                        "load_factor": factor,
                        "last_converged": previous,
                        "reason": ex.reason,
                        "residuals": ex.residuals,
                        "bisections": bisections,
                    }
                    problem.store.rollback()
                    history.completed = False
                    history.failure = diagnostics
                    log.error(f"Step {step} failed after {depth} bisections: {ex.reason}")
                    if raise_on_failure:
                        raise SolverDivergence(f"step {step} did not converge: {ex.reason}", diagnostics) from ex
                    return history
                bisections += 1
                log.warning(f"Step {step}: {ex.reason}, bisecting load increment at {factor:.6g}")
                pending[-1] = (factor, depth + 1)
                pending.append((0.5 * (previous + factor), depth + 1))
                continue
            problem.u = u
            problem.store.commit()
            previous = factor
            pending.pop()
            iterations += len(res) - 1
            residuals.extend(res)
            for k, v in step_counts.items():
                counts[k] = counts.get(k, 0) + v

        reaction = float(np.sum(f_int[control] - problem.f_ext[control]))
        displacement = float(np.mean(problem.u[control]))
        history.records.append(
            StepRecord(
                step=step,
                load_factor=float(target),
                displacement=displacement,
                reaction=reaction,
                iterations=iterations,
                residuals=residuals,
                bisections=bisections,
                regime_counts=counts,
                wall_time=time.perf_counter() - start,
            )
        )
        if snapshot_stride and (step % snapshot_stride == 0 or step == len(factors)):
            history.snapshots.append(_snapshot(problem, step, float(target)))
    return history


def _snapshot(problem: Problem, step: int, load_factor: float) -> Snapshot:
    store = problem.store
    fields = {name: store.element_average(name) for name in ("lam", "p", "q", "theta")}
    fields["plastic_fraction"] = (store.committed.regime != 0).mean(axis=1)
    fields["regime"] = store.committed.regime.max(axis=1).astype(float)
    return Snapshot(step, load_factor, problem.u.copy(), fields)
