"""Benchmark scenarios: biaxial compression with a weak inclusion, rigid strip footing and user-defined runs.

Each scenario turns a composed run config into a :class:`~cosserat.fem.solver.Problem`, solves it and condenses
the history into a normalized :class:`CurveRecord` and a JSON-ready summary.
"""
import copy
import math
import time
from dataclasses import dataclass, field
from typing import Any, Callable, Dict, Optional, Sequence

import hydra
import numpy as np
import pandas as pd
from omegaconf import DictConfig, OmegaConf, open_dict

from cosserat.errors import ConfigError, SolverDivergence
from cosserat.fem.assembly import Discretization, body_force, discretize, edge_pressure, initialize_stress
from cosserat.fem.boundary import BoundaryConditions, nodes_in_box, nodes_on_line
from cosserat.fem.mesh import Mesh, read_mesh, select_edges, structured_rectangle
from cosserat.fem.quadrature import CONTINUA
from cosserat.fem.solver import History, LoadSchedule, NewtonConfig, Problem, solve_displacement_controlled
from cosserat.models.material import MaterialModel
from cosserat.utils import pylogger

log = pylogger.get_pylogger(__name__)

SCENARIOS = ("biaxial", "footing", "custom")
NORMALIZATIONS = ("su", "ngamma", "reference", "none")


@dataclass
class CurveRecord:
    """Per-step curve: raw load factor, control displacement and reaction plus their normalized forms."""

    x_label: str
    y_label: str
    step: np.ndarray
    load_factor: np.ndarray
    displacement: np.ndarray
    reaction: np.ndarray
    x: np.ndarray
    y: np.ndarray

    def to_frame(self) -> pd.DataFrame:
        return pd.DataFrame(
            {
                "step": self.step.astype(int),
                "load_factor": self.load_factor,
                "displacement": self.displacement,
                "reaction": self.reaction,
                self.x_label: self.x,
                self.y_label: self.y,
            }
        )

    @property
    def peak(self) -> float:
        return float(self.y.max()) if self.y.size else float("nan")

    def plateau(self, fraction: float = 0.1) -> float:
        """Mean of the last ``fraction`` of the curve."""
        if not self.y.size:
            return float("nan")
        n = max(1, int(math.ceil(fraction * self.y.size)))
        return float(self.y[-n:].mean())


@dataclass
class RunResult:
    name: str
    continuum: str
    mesh: Mesh
    disc: Discretization
    problem: Problem
    history: History
    curve: CurveRecord
    summary: Dict[str, Any] = field(default_factory=dict)


def validate_config(cfg: DictConfig) -> None:
    """Checks the scenario schema before anything is instantiated.

    :raises ConfigError: On the first violation.
    """
    for key in ("scenario", "material", "mesh", "solver", "continuum"):
        if cfg.get(key) is None:
            raise ConfigError(f"missing config entry <{key}>")
    kind = cfg.scenario.get("kind")
    if kind not in SCENARIOS:
        raise ConfigError(f"unknown scenario <{kind}>, expected one of {SCENARIOS}")
    if cfg.continuum not in CONTINUA:
        raise ConfigError(f"unknown continuum <{cfg.continuum}>, expected one of {CONTINUA}")
    mesh_kind = cfg.mesh.get("kind", "structured")
    if mesh_kind == "structured":
        level = cfg.mesh.get("level")
        if not isinstance(level, int) or level < 1:
            raise ConfigError(f"mesh level must be a positive integer, got {level}")
        if level not in cfg.mesh.levels:
            raise ConfigError(f"mesh level {level} not defined, available: {sorted(cfg.mesh.levels)}")
    elif mesh_kind == "file":
        if not cfg.mesh.get("path"):
            raise ConfigError("file meshes need <mesh.path>")
    else:
        raise ConfigError(f"unknown mesh kind <{mesh_kind}>")
    if cfg.solver.schedule.n_steps < 1:
        raise ConfigError(f"schedule needs at least one step, got {cfg.solver.schedule.n_steps}")
    for key in ("rtol", "atol"):
        if not cfg.solver.newton[key] > 0.0:
            raise ConfigError(f"solver.newton.{key} must be positive")
    if cfg.solver.newton.max_iter < 1:
        raise ConfigError("solver.newton.max_iter must be positive")
    normalization = cfg.scenario.get("normalization", "none")
    if normalization not in NORMALIZATIONS:
        raise ConfigError(f"unknown normalization <{normalization}>, expected one of {NORMALIZATIONS}")
    if normalization == "reference" and not cfg.scenario.get("reference_stress"):
        raise ConfigError("normalization <reference> needs a positive <scenario.reference_stress>")


def build_materials(cfg: DictConfig) -> Dict[int, MaterialModel]:
    """Region 0 gets ``cfg.material``; each ``scenario.weak_zone`` adds region 1 with reduced friction angles.

    Criteria without a friction angle keep their parameters in the weak zone.
    """
    materials = {0: hydra.utils.instantiate(cfg.material)}
    weak = cfg.scenario.get("weak_zone")
    if weak:
        weak_cfg = OmegaConf.to_container(cfg.material, resolve=True)
        for key, reduction in (("yield_criterion", weak.dphi), ("potential_criterion", weak.dphi_g)):
            criterion = weak_cfg.get(key)
            if not criterion:
                continue
            if "phi" in criterion:
                criterion["phi"] -= reduction
            else:
                log.warning(f"Weak zone: <{key}> of <{materials[0].name}> has no friction angle to reduce")
        weak_cfg["name"] = f"{materials[0].name}_weak"
        materials[1] = hydra.utils.instantiate(weak_cfg)
    return materials


def build_mesh(cfg: DictConfig, origin: Sequence[float] = (0.0, 0.0)) -> Mesh:
    if cfg.mesh.get("kind", "structured") == "file":
        return read_mesh(cfg.mesh.path)
    level = cfg.mesh.levels[cfg.mesh.level]
    return structured_rectangle(level.x, level.y, origin)


def friction_angle(cfg: DictConfig) -> float:
    return float(cfg.material.yield_criterion.get("phi", 0.0) or 0.0)


def _newton_config(cfg: DictConfig) -> NewtonConfig:
    return hydra.utils.instantiate(cfg.solver.newton)


def _schedule(cfg: DictConfig) -> LoadSchedule:
    return hydra.utils.instantiate(cfg.solver.schedule)


def _solve(problem: Problem, cfg: DictConfig) -> History:
    return solve_displacement_controlled(
        problem,
        _schedule(cfg),
        _newton_config(cfg),
        snapshot_stride=cfg.solver.get("snapshot_stride", 0),
        progress=cfg.solver.get("progress", True),
    )


def reference_stress(cfg: DictConfig, model: MaterialModel) -> float:
    """Stress used to normalize the load axis.

    ``su``: undrained strength ``sigma0(0) / 2`` (the cohesion for Tresca); ``ngamma``: ``gamma B / 2`` so that
    the normalized footing pressure reads as ``N_gamma``; ``reference``: an explicit value; ``none``: 1.
    """
    kind = cfg.scenario.get("normalization", "none")
    if kind == "su":
        value = model.sigma0(0.0) / 2.0
    elif kind == "ngamma":
        value = 0.5 * cfg.scenario.unit_weight * 2.0 * cfg.scenario.footing_half_width
    elif kind == "reference":
        value = float(cfg.scenario.reference_stress)
    else:
        value = 1.0
    if not value > 0.0:
        raise ConfigError(f"normalization <{kind}> gives a non-positive reference stress {value}")
    return value


def _summary(cfg: DictConfig, result: RunResult, wall_time: float) -> Dict[str, Any]:
    history, curve = result.history, result.curve
    regimes = history.regime_totals()
    return {
        "scenario": cfg.scenario.name,
        "continuum": result.continuum,
        "mesh_level": cfg.mesh.get("level"),
        "n_nodes": result.mesh.n_nodes,
        "n_elements": result.mesh.n_elements,
        "n_dofs": result.disc.dofmap.n_dofs,
        "quadrature": result.disc.rule.name,
        "steps_requested": int(cfg.solver.schedule.n_steps),
        "steps_completed": len(history.records),
        "completed": history.completed,
        "failure": history.failure,
        "newton_iterations": int(history.column("iterations").sum()) if history.records else 0,
        "bisections": int(history.column("bisections").sum()) if history.records else 0,
        "regime_counts": regimes,
        "gauss_point_evaluations": int(sum(regimes.values())),
        "peak": curve.peak,
        "plateau": curve.plateau(),
        "final": float(curve.y[-1]) if curve.y.size else float("nan"),
        "wall_time": wall_time,
        "seed": cfg.get("seed"),
    }


def _curve(history: History, x_label: str, y_label: str, x_scale: float, y_scale: float, y_shift: float = 0.0):
    d, r = history.column("displacement"), history.column("reaction")
    return CurveRecord(
        x_label=x_label,
        y_label=y_label,
        step=history.column("step"),
        load_factor=history.column("load_factor"),
        displacement=d,
        reaction=r,
        x=d * x_scale if d.size else np.zeros(0),
        y=(r * y_scale - y_shift) if r.size else np.zeros(0),
    )


def _problem(
    disc: Discretization,
    bcs: BoundaryConditions,
    materials: Dict[int, MaterialModel],
    f_ext: np.ndarray,
    control: str,
    stress_field: Optional[Callable[[np.ndarray], np.ndarray]] = None,
) -> Problem:
    store = disc.new_store()
    if stress_field is not None:
        initialize_stress(disc, store, materials, stress_field)
    return Problem(disc, bcs, materials, f_ext, store, control)


def run_biaxial(cfg: DictConfig) -> RunResult:
    """Plane-strain compression of a half specimen with a weak inclusion at mid-height of the symmetry edge.

    The specimen is confined by ``scenario.confinement`` on its free side and in its initial stress; the top is
    pushed down by ``axial_strain * height``. The curve reports axial strain against the deviatoric stress.
    """
    sc = cfg.scenario
    start = time.perf_counter()
    mesh = build_mesh(cfg)
    materials = build_materials(cfg)
    if sc.get("weak_zone"):
        tagged = mesh.tag_box(sc.weak_zone.x, sc.weak_zone.y, 1)
        log.info(f"Weak zone covers {tagged} elements")
        if not tagged:
            raise ConfigError("weak zone selects no element at this mesh level")
    disc = discretize(mesh, cfg.continuum, cfg.solver.get("integration"))

    bcs = BoundaryConditions()
    bcs.add(nodes_on_line(mesh, x=0.0), "ux", name="symmetry")
    bcs.add(nodes_on_line(mesh, y=0.0), "uy", name="base")
    bcs.add(nodes_on_line(mesh, y=sc.height), "uy", -sc.axial_strain * sc.height, ramped=True, name="top")

    p0 = float(sc.confinement)
    side = select_edges(mesh, lambda xy: abs(xy[0] - sc.width) < 1e-9)
    f_ext = edge_pressure(disc, side, p0)
    problem = _problem(disc, bcs, materials, f_ext, "top", lambda xy: -p0 * np.eye(3))

    history = _solve(problem, cfg)
    # reaction on the top is the compressive force over the half width
    curve = _curve(history, "axial_strain", "deviatoric_stress", -1.0 / sc.height, -1.0 / sc.width, p0)
    result = RunResult(sc.name, cfg.continuum, mesh, disc, problem, history, curve)
    result.summary = _summary(cfg, result, time.perf_counter() - start)
    return result


def geostatic_stress(unit_weight: float, k0: float, surface: float = 0.0) -> Callable[[np.ndarray], np.ndarray]:
    """``sigma_yy = -gamma * depth`` and ``sigma_xx = sigma_zz = K0 * sigma_yy``."""

    def stress(xy: np.ndarray) -> np.ndarray:
        s_v = -unit_weight * (surface - xy[1])
        return np.diag([k0 * s_v, s_v, k0 * s_v])

    return stress


def run_footing(cfg: DictConfig) -> RunResult:
    """Rigid strip footing on a half domain ``[0, width] x [-depth, 0]``.

    The footing occupies ``x <= footing_half_width`` on the surface and settles by ``settlement * B`` with
    ``B = 2 * footing_half_width``. A smooth interface leaves the footing nodes free horizontally, a rough one
    restrains them. With ``unit_weight > 0`` self-weight and a geostatic initial stress are added.
    """
    sc = cfg.scenario
    start = time.perf_counter()
    mesh = build_mesh(cfg, origin=(0.0, -sc.depth))
    materials = build_materials(cfg)
    disc = discretize(mesh, cfg.continuum, cfg.solver.get("integration"))
    breadth = 2.0 * sc.footing_half_width

    footing = nodes_in_box(mesh, (0.0, sc.footing_half_width), (0.0, 0.0))
    bcs = BoundaryConditions()
    bcs.add(nodes_on_line(mesh, x=0.0), "ux", name="symmetry")
    bcs.add(nodes_on_line(mesh, x=sc.width), "ux", name="side")
    base = nodes_on_line(mesh, y=-sc.depth)
    bcs.add(base, "ux", name="base").add(base, "uy", name="base")
    bcs.add(footing, "uy", -sc.settlement * breadth, ramped=True, name="footing")
    if sc.interface == "rough":
        bcs.add(footing, "ux", name="footing_rough")
    elif sc.interface != "smooth":
        raise ConfigError(f"unknown footing interface <{sc.interface}>")

    gamma = float(sc.get("unit_weight", 0.0) or 0.0)
    f_ext = np.zeros(disc.dofmap.n_dofs)
    stress_field = None
    if gamma > 0.0:
        k0 = sc.get("k0")
        if k0 is None:
            k0 = 1.0 - math.sin(math.radians(friction_angle(cfg)))
        f_ext = body_force(disc, (0.0, -gamma))
        stress_field = geostatic_stress(gamma, k0)
        log.info(f"Geostatic initial stress with gamma={gamma} and K0={k0:.4f}")
    problem = _problem(disc, bcs, materials, f_ext, "footing", stress_field)

    history = _solve(problem, cfg)
    # the half footing carries half the load over half the breadth
    scale = -1.0 / (sc.footing_half_width * reference_stress(cfg, materials[0]))
    curve = _curve(history, "settlement_ratio", "normalized_pressure", -1.0 / breadth, scale)
    result = RunResult(sc.name, cfg.continuum, mesh, disc, problem, history, curve)
    result.summary = _summary(cfg, result, time.perf_counter() - start)
    result.summary["reference_stress"] = reference_stress(cfg, materials[0])
    return result


def _node_selector(mesh: Mesh, entry: DictConfig) -> np.ndarray:
    if entry.get("box") is not None:
        return nodes_in_box(mesh, entry.box[0], entry.box[1])
    return nodes_on_line(mesh, x=entry.get("x"), y=entry.get("y"))


def _edge_predicate(entry: DictConfig) -> Callable[[np.ndarray], bool]:
    if entry.get("x") is not None:
        return lambda xy: abs(xy[0] - entry.x) < 1e-9
    if entry.get("y") is not None:
        return lambda xy: abs(xy[1] - entry.y) < 1e-9
    raise ConfigError("pressure edges need <x> or <y>")


def run_custom(cfg: DictConfig) -> RunResult:
    """User-defined run: any mesh, constraints selected by coordinates, edge pressures and an optional
    spherical initial stress ``scenario.confinement``."""
    sc = cfg.scenario
    start = time.perf_counter()
    mesh = build_mesh(cfg)
    materials = build_materials(cfg)
    disc = discretize(mesh, cfg.continuum, cfg.solver.get("integration"))

    bcs = BoundaryConditions()
    for entry in sc.constraints:
        bcs.add(
            _node_selector(mesh, entry),
            entry.component,
            entry.get("value", 0.0),
            ramped=entry.get("ramped", False),
            name=entry.name,
        )
    f_ext = np.zeros(disc.dofmap.n_dofs)
    for entry in sc.get("pressure_edges") or []:
        f_ext += edge_pressure(disc, select_edges(mesh, _edge_predicate(entry)), entry.pressure)
    gamma = float(sc.get("unit_weight", 0.0) or 0.0)
    if gamma > 0.0:
        f_ext += body_force(disc, (0.0, -gamma))
    p0 = float(sc.get("confinement", 0.0) or 0.0)
    stress_field = (lambda xy: -p0 * np.eye(3)) if p0 else None
    problem = _problem(disc, bcs, materials, f_ext, sc.control, stress_field)

    history = _solve(problem, cfg)
    curve = _curve(history, "displacement", "reaction", 1.0, 1.0)
    result = RunResult(sc.name, cfg.continuum, mesh, disc, problem, history, curve)
    result.summary = _summary(cfg, result, time.perf_counter() - start)
    return result


RUNNERS: Dict[str, Callable[[DictConfig], RunResult]] = {
    "biaxial": run_biaxial,
    "footing": run_footing,
    "custom": run_custom,
}


def run_scenario(cfg: DictConfig) -> RunResult:
    """Validates and runs ``cfg``; a ``scenario.companion`` continuum is run afterwards and its failure recorded."""
    validate_config(cfg)
    if cfg.get("seed") is not None:
        np.random.seed(cfg.seed)
    log.info(f"Running <{cfg.scenario.name}> on the {cfg.continuum} continuum")
    result = RUNNERS[cfg.scenario.kind](cfg)
    companion = cfg.scenario.get("companion")
    if companion:
        result.summary["companion"] = run_companion(cfg, companion)
    return result


def run_companion(cfg: DictConfig, continuum: str) -> Dict[str, Any]:
    """Runs the same config on another continuum; a divergence is recorded, not raised."""
    other = copy.deepcopy(cfg)
    with open_dict(other):
        other.continuum = continuum
        other.scenario.companion = None
    try:
        result = RUNNERS[other.scenario.kind](other)
    except SolverDivergence as ex:
        log.warning(f"{continuum} companion run diverged: {ex}")
        return {"continuum": continuum, "completed": False, "failure": ex.diagnostics}
    return result.summary


def _post_peak(curve: CurveRecord, grid: np.ndarray) -> np.ndarray:
    return np.interp(grid, curve.x, curve.y)


def refine(cfg: DictConfig, levels: Sequence[int]) -> Dict[str, Any]:
    """Runs ``cfg`` at several mesh levels and compares the curves.

    :return: ``{"results": {level: RunResult}, "summary": {...}}`` where the summary holds the relative spread of
        the peaks, the largest relative pointwise post-peak difference between the coarsest and finest curves and
        the plateau of every level.
    """
    results: Dict[int, RunResult] = {}
    for level in levels:
        level_cfg = copy.deepcopy(cfg)
        with open_dict(level_cfg):
            level_cfg.mesh.level = int(level)
        results[int(level)] = run_scenario(level_cfg)

    peaks = np.array([r.curve.peak for r in results.values()])
    summary: Dict[str, Any] = {
        "levels": [int(v) for v in levels],
        "peaks": peaks.tolist(),
        "plateaus": [r.curve.plateau() for r in results.values()],
        "peak_spread": float((peaks.max() - peaks.min()) / abs(peaks.mean())) if peaks.size else float("nan"),
    }
    coarse, fine = results[int(levels[0])].curve, results[int(levels[-1])].curve
    if coarse.y.size and fine.y.size:
        x_peak = coarse.x[int(np.argmax(coarse.y))]
        grid = coarse.x[coarse.x > x_peak]
        grid = grid[grid <= fine.x.max()]
        if grid.size:
            a, b = _post_peak(coarse, grid), _post_peak(fine, grid)
            summary["post_peak_difference"] = float(np.max(np.abs(a - b) / np.maximum(np.abs(b), 1e-300)))
    log.info(f"Refinement summary: {summary}")
    return {"results": results, "summary": summary}

