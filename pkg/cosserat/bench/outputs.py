"""Result writers: CSV curves (pandas), legacy VTK field snapshots (meshio) and a JSON run summary."""
import json
from pathlib import Path
from typing import Any, Dict, Iterable, List, Union

import meshio
import numpy as np
import pandas as pd

from cosserat.bench.scenarios import CurveRecord, RunResult
from cosserat.errors import OutputError
from cosserat.utils import pylogger

log = pylogger.get_pylogger(__name__)

PathLike = Union[str, Path]


def _jsonable(value: Any) -> Any:
    if isinstance(value, dict):
        return {str(k): _jsonable(v) for k, v in value.items()}
    if isinstance(value, (list, tuple)):
        return [_jsonable(v) for v in value]
    if isinstance(value, np.ndarray):
        return _jsonable(value.tolist())
    if isinstance(value, np.generic):
        return value.item()
    if isinstance(value, float) and not np.isfinite(value):
        return None
    return value


def _named(filename: str, suffix: str) -> str:
    path = Path(filename)
    return f"{path.stem}_{suffix}{path.suffix}" if suffix else filename


class CsvCurveWriter:
    """Writes the curve of a run; an empty history gives a header-only file."""

    def __init__(self, filename: str = "curve.csv"):
        self.filename = filename

    def write(self, result: RunResult, out_dir: PathLike, suffix: str = "") -> List[Path]:
        path = Path(out_dir) / _named(self.filename, suffix)
        frame = result.curve.to_frame()
        try:
            frame.to_csv(path, index=False)
        except OSError as ex:
            raise OutputError("could not write curve", path) from ex
        return [path]


class VtkWriter:
    """One legacy VTK file per stored snapshot.

    Point data: displacement (3 components, ``z = 0``) and, for the Cosserat medium, the micro-rotation.
    Cell data: element averages of ``lam``, ``p``, ``q`` and ``theta``, the plastic Gauss-point fraction
    and the highest regime code of the element.
    """

    def __init__(self, prefix: str = "fields", binary: bool = False):
        self.prefix = prefix
        self.binary = binary

    def write(self, result: RunResult, out_dir: PathLike, suffix: str = "") -> List[Path]:
        mesh, dofmap = result.mesh, result.disc.dofmap
        points = np.column_stack([mesh.nodes, np.zeros(mesh.n_nodes)])
        cells = [("quad8", mesh.elements)]
        paths = []
        for snap in result.history.snapshots:
            u = snap.u.reshape(mesh.n_nodes, dofmap.dofs_per_node)
            point_data = {"displacement": np.column_stack([u[:, 0], u[:, 1], np.zeros(mesh.n_nodes)])}
            if dofmap.dofs_per_node == 3:
                point_data["rotation"] = u[:, 2].copy()
            cell_data = {name: [np.asarray(values, dtype=float)] for name, values in snap.fields.items()}
            cell_data["region"] = [mesh.regions.astype(float)]
            path = Path(out_dir) / f"{_named(self.prefix, suffix)}_{snap.step:04d}.vtk"
            try:
                meshio.write_points_cells(
                    path,
                    points,
                    cells,
                    point_data=point_data,
                    cell_data=cell_data,
                    file_format="vtk",
                    binary=self.binary,
                )
            except OSError as ex:
                raise OutputError("could not write field snapshot", path) from ex
            paths.append(path)
        return paths


class JsonSummaryWriter:
    """Run summary with timings, Newton iteration counts, regime statistics and per-step residual histories."""

    def __init__(self, filename: str = "summary.json", with_steps: bool = True):
        self.filename = filename
        self.with_steps = with_steps

    def write(self, result: RunResult, out_dir: PathLike, suffix: str = "") -> List[Path]:
        path = Path(out_dir) / _named(self.filename, suffix)
        payload: Dict[str, Any] = dict(result.summary)
        if self.with_steps:
            payload["steps"] = result.history.as_dicts()
        try:
            path.write_text(json.dumps(_jsonable(payload), indent=2))
        except OSError as ex:
            raise OutputError("could not write summary", path) from ex
        return [path]


def emit_outputs(result: RunResult, writers: Iterable[Any], out_dir: PathLike, suffix: str = "") -> List[Path]:
    """Runs every writer on ``result``.

    :raises OutputError: When the output directory cannot be created or a writer fails.
    """
    out_dir = Path(out_dir)
    try:
        out_dir.mkdir(parents=True, exist_ok=True)
    except OSError as ex:
        raise OutputError("could not create output directory", out_dir) from ex
    paths: List[Path] = []
    for writer in writers:
        paths.extend(writer.write(result, out_dir, suffix))
    for path in paths:
        log.info(f"Wrote {path}")
    return paths


def write_refinement(sweep: Dict[str, Any], writers: Iterable[Any], out_dir: PathLike) -> List[Path]:
    """Outputs of every level of a :func:`~cosserat.bench.scenarios.refine` sweep plus its comparison summary."""
    writers = list(writers)
    paths: List[Path] = []
    for level, result in sweep["results"].items():
        paths.extend(emit_outputs(result, writers, out_dir, suffix=f"level{level}"))
    path = Path(out_dir) / "refinement.json"
    try:
        path.write_text(json.dumps(_jsonable(sweep["summary"]), indent=2))
    except OSError as ex:
        raise OutputError("could not write refinement summary", path) from ex
    paths.append(path)
    return paths


def read_curve(path: PathLike) -> CurveRecord:
    """Loads a curve written by :class:`CsvCurveWriter`."""
    frame = pd.read_csv(path)
    x_label, y_label = frame.columns[-2], frame.columns[-1]
    return CurveRecord(
        x_label=x_label,
        y_label=y_label,
        step=frame["step"].to_numpy(),
        load_factor=frame["load_factor"].to_numpy(),
        displacement=frame["displacement"].to_numpy(),
        reaction=frame["reaction"].to_numpy(),
        x=frame[x_label].to_numpy(),
        y=frame[y_label].to_numpy(),
    )
