"""Eight-node quadrilateral meshes: structured generation, text I/O and region tagging.

Text format::

    nodes <n>
    <id> <x> <y>
    ...
    elements <m>
    <id> <n1> ... <n8> <region>
    ...

Ids are zero-based and contiguous; lines starting with ``#`` are ignored.
"""
from dataclasses import dataclass, field
from pathlib import Path
from typing import Callable, Dict, List, Sequence, Tuple, Union

import numpy as np

from cosserat.errors import MeshError
from cosserat.fem.element import EDGE_NODES, NODES_PER_ELEMENT, jacobian
from cosserat.fem.quadrature import gauss_legendre_2d
from cosserat.utils import pylogger

log = pylogger.get_pylogger(__name__)

Segment = Tuple[float, int, float]


@dataclass
class Mesh:
    """Node coordinates ``(n, 2)``, connectivity ``(m, 8)`` and integer region tags ``(m,)``."""

    nodes: np.ndarray
    elements: np.ndarray
    regions: np.ndarray = field(default=None)

    def __post_init__(self):
        self.nodes = np.asarray(self.nodes, dtype=float)
        self.elements = np.asarray(self.elements, dtype=int)
        if self.regions is None:
            self.regions = np.zeros(len(self.elements), dtype=int)
        self.regions = np.asarray(self.regions, dtype=int)

    @property
    def n_nodes(self) -> int:
        return len(self.nodes)

    @property
    def n_elements(self) -> int:
        return len(self.elements)

    def element_coords(self, e: int) -> np.ndarray:
        return self.nodes[self.elements[e]]

    def centroids(self) -> np.ndarray:
        return self.nodes[self.elements[:, :4]].mean(axis=1)

    def validate(self, check_order: int = 3) -> None:
        """Checks shapes, node references and the Jacobian sign at the points of a ``check_order`` rule.

        :raises MeshError: On the first violation, naming the element where applicable.
        """
        if self.nodes.ndim != 2 or self.nodes.shape[1] != 2:
            raise MeshError(f"node array must have shape (n, 2), got {self.nodes.shape}")
        if self.elements.ndim != 2 or self.elements.shape[1] != NODES_PER_ELEMENT:
            raise MeshError(f"connectivity must have shape (m, 8), got {self.elements.shape}")
        if self.regions.shape != (self.n_elements,):
            raise MeshError("one region tag per element is required")
        if self.elements.size and (self.elements.min() < 0 or self.elements.max() >= self.n_nodes):
            raise MeshError("connectivity references unknown nodes")
        rule = gauss_legendre_2d(check_order)
        for e in range(self.n_elements):
            if len(set(self.elements[e])) != NODES_PER_ELEMENT:
                raise MeshError("repeated node in connectivity", e)
            coords = self.element_coords(e)
            for xi, eta in rule.points:
                jacobian(coords, xi, eta, e)

    def tag_box(self, x_range: Sequence[float], y_range: Sequence[float], tag: int) -> int:
        """Assigns ``tag`` to elements whose centroid lies in the closed box; returns how many were tagged."""
        c = self.centroids()
        inside = (
            (c[:, 0] >= x_range[0]) & (c[:, 0] <= x_range[1]) & (c[:, 1] >= y_range[0]) & (c[:, 1] <= y_range[1])
        )
        self.regions[inside] = tag
        return int(inside.sum())


def graded_coordinates(segments: Sequence[Segment], origin: float = 0.0) -> np.ndarray:
    """Element-boundary coordinates along one axis.

    Each segment is ``(length, count, ratio)`` where ``ratio`` is the size of the last element over the size of
    the first; sizes follow a geometric progression.
    """
    coords = [origin]
    for length, count, ratio in segments:
        count = int(count)
        if length <= 0.0 or count < 1 or ratio <= 0.0:
            raise MeshError(f"invalid segment ({length}, {count}, {ratio})")
        growth = ratio ** (1.0 / (count - 1)) if count > 1 else 1.0
        sizes = growth ** np.arange(count)
        sizes *= length / sizes.sum()
        coords.extend(coords[-1] + np.cumsum(sizes))
    return np.asarray(coords)


def structured_rectangle(
    x_segments: Sequence[Segment], y_segments: Sequence[Segment], origin: Sequence[float] = (0.0, 0.0)
) -> Mesh:
    """Graded rectangular mesh of eight-node quads.

    :param x_segments: ``(length, count, ratio)`` segments along x.
    :param y_segments: ``(length, count, ratio)`` segments along y.
    :param origin: Lower-left corner.
    """
    xs = graded_coordinates([tuple(s) for s in x_segments], origin[0])
    ys = graded_coordinates([tuple(s) for s in y_segments], origin[1])
    nx, ny = len(xs) - 1, len(ys) - 1

    # lattice with midpoints; the element centers are dropped afterwards
    gx = np.empty(2 * nx + 1)
    gx[0::2], gx[1::2] = xs, 0.5 * (xs[:-1] + xs[1:])
    gy = np.empty(2 * ny + 1)
    gy[0::2], gy[1::2] = ys, 0.5 * (ys[:-1] + ys[1:])
    lattice = lambda i, j: j * (2 * nx + 1) + i  # noqa: E731

    elements = []
    for j in range(ny):
        for i in range(nx):
            i0, j0 = 2 * i, 2 * j
            elements.append(
                [
                    lattice(i0, j0),
                    lattice(i0 + 2, j0),
                    lattice(i0 + 2, j0 + 2),
                    lattice(i0, j0 + 2),
                    lattice(i0 + 1, j0),
                    lattice(i0 + 2, j0 + 1),
                    lattice(i0 + 1, j0 + 2),
                    lattice(i0, j0 + 1),
                ]
            )
    elements = np.asarray(elements)
    used = np.unique(elements)
    renumber = -np.ones((2 * nx + 1) * (2 * ny + 1), dtype=int)
    renumber[used] = np.arange(len(used))
    X, Y = np.meshgrid(gx, gy)
    nodes = np.column_stack([X.ravel(), Y.ravel()])[used]
    mesh = Mesh(nodes, renumber[elements])
    log.info(f"Structured mesh: {mesh.n_nodes} nodes, {mesh.n_elements} elements ({nx} x {ny})")
    return mesh


def boundary_edges(mesh: Mesh) -> List[Tuple[int, int]]:
    """``(element, local_edge)`` pairs of edges that belong to a single element."""
    owners: Dict[Tuple[int, int], List[Tuple[int, int]]] = {}
    for e, conn in enumerate(mesh.elements):
        for k, (a, _, b) in enumerate(EDGE_NODES):
            key = tuple(sorted((int(conn[a]), int(conn[b]))))
            owners.setdefault(key, []).append((e, k))
    return [pairs[0] for pairs in owners.values() if len(pairs) == 1]


def select_edges(mesh: Mesh, predicate: Callable[[np.ndarray], bool]) -> List[Tuple[int, int]]:
    """Boundary edges whose three nodes all satisfy ``predicate(xy)``."""
    selected = []
    for e, k in boundary_edges(mesh):
        xy = mesh.nodes[mesh.elements[e, list(EDGE_NODES[k])]]
        if all(predicate(p) for p in xy):
            selected.append((e, k))
    return selected


def write_mesh(mesh: Mesh, path: Union[str, Path]) -> Path:
    path = Path(path)
    lines = [f"nodes {mesh.n_nodes}"]
    lines += [f"{i} {x:.17g} {y:.17g}" for i, (x, y) in enumerate(mesh.nodes)]
    lines.append(f"elements {mesh.n_elements}")
    lines += [f"{e} {' '.join(str(n) for n in conn)} {mesh.regions[e]}" for e, conn in enumerate(mesh.elements)]
    path.write_text("\n".join(lines) + "\n")
    return path


def read_mesh(path: Union[str, Path]) -> Mesh:
    """Parses the text format described in the module docstring.

    :raises MeshError: On malformed headers, rows or ids.
    """
    path = Path(path)
    rows = [line.split() for line in path.read_text().splitlines() if line.strip() and not line.startswith("#")]
    try:
        if rows[0][0] != "nodes":
            raise MeshError(f"expected 'nodes' header in {path}")
        n = int(rows[0][1])
        node_rows = rows[1 : n + 1]
        header = rows[n + 1]
        if header[0] != "elements":
            raise MeshError(f"expected 'elements' header in {path}")
        m = int(header[1])
        element_rows = rows[n + 2 : n + 2 + m]
        if len(node_rows) != n or len(element_rows) != m:
            raise MeshError(f"truncated mesh file {path}")
        ids = [int(r[0]) for r in node_rows]
        if ids != list(range(n)) or [int(r[0]) for r in element_rows] != list(range(m)):
            raise MeshError(f"ids must be zero-based and contiguous in {path}")
        nodes = np.array([[float(r[1]), float(r[2])] for r in node_rows])
        elements = np.array([[int(v) for v in r[1:9]] for r in element_rows], dtype=int).reshape(m, 8)
        regions = np.array([int(r[9]) if len(r) > 9 else 0 for r in element_rows], dtype=int)
    except (IndexError, ValueError) as ex:
        raise MeshError(f"malformed mesh file {path}: {ex}") from ex
    mesh = Mesh(nodes, elements, regions)
    mesh.validate()
    return mesh
