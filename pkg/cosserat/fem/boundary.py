"""Degree-of-freedom numbering, prescribed displacements and node selectors.

Rotational DOFs are free unless a constraint names them explicitly.
"""
from dataclasses import dataclass, field
from typing import Dict, List, Optional, Sequence, Tuple, Union

import numpy as np

from cosserat.errors import ConfigError
from cosserat.fem.element import DOFS_PER_NODE
from cosserat.fem.mesh import Mesh

COMPONENTS = {"cosserat": ("ux", "uy", "rz"), "cauchy": ("ux", "uy")}


class DofMap:
    """Node-major DOF numbering: ``dof = node * dofs_per_node + component``."""

    def __init__(self, n_nodes: int, continuum: str):
        self.n_nodes = n_nodes
        self.continuum = continuum
        self.components = COMPONENTS[continuum]
        self.dofs_per_node = DOFS_PER_NODE[continuum]

    @property
    def n_dofs(self) -> int:
        return self.n_nodes * self.dofs_per_node

    def dofs(self, nodes: Sequence[int], component: str) -> np.ndarray:
        if component not in self.components:
            raise ConfigError(f"component <{component}> not available for the {self.continuum} medium")
        return np.asarray(nodes, dtype=int) * self.dofs_per_node + self.components.index(component)

    def element_dofs(self, connectivity: np.ndarray) -> np.ndarray:
        """``(m, 8 * dofs_per_node)`` global DOF indices in element vector order."""
        d = self.dofs_per_node
        return (connectivity[:, :, None] * d + np.arange(d)).reshape(len(connectivity), -1)


@dataclass
class Constraint:
    """Prescribed value on one component of a node set.

    :param ramped: When true the value is multiplied by the load factor, otherwise it is held constant.
    """

    nodes: np.ndarray
    component: str
    values: np.ndarray
    ramped: bool = False
    name: str = ""


@dataclass
class BoundaryConditions:
    constraints: List[Constraint] = field(default_factory=list)

    def add(
        self,
        nodes: Sequence[int],
        component: str,
        value: Union[float, Sequence[float]] = 0.0,
        ramped: bool = False,
        name: str = "",
    ):
        """Adds a constraint; ``value`` is a scalar or one value per entry of ``nodes``."""
        nodes = np.asarray(nodes, dtype=int).ravel()
        if nodes.size == 0:
            raise ConfigError(f"constraint <{name or component}> selects no nodes")
        values = np.broadcast_to(np.asarray(value, dtype=float), nodes.shape)
        nodes, first = np.unique(nodes, return_index=True)
        self.constraints.append(Constraint(nodes, component, values[first].copy(), ramped, name))
        return self

    def prescribed(self, dofmap: DofMap, load_factor: float = 1.0) -> Tuple[np.ndarray, np.ndarray]:
        """Prescribed DOFs (sorted, unique) and their values at ``load_factor``.

        Several constraints may name the same DOF as long as they agree.

        :raises ConfigError: When two constraints prescribe different values on the same DOF.
        """
        values: Dict[int, Tuple[float, float]] = {}
        for c in self.constraints:
            for dof, value in zip(dofmap.dofs(c.nodes, c.component), c.values):
                entry = (value if c.ramped else 0.0, 0.0 if c.ramped else value)
                previous = values.get(int(dof))
                if previous is not None and not np.allclose(previous, entry):
                    raise ConfigError(f"conflicting prescriptions on DOF {dof} (constraint <{c.name}>)")
                values[int(dof)] = entry
        dofs = np.array(sorted(values), dtype=int)
        vals = np.array([values[d][0] * load_factor + values[d][1] for d in dofs])
        return dofs, vals

    def dofs_of(self, dofmap: DofMap, name: str) -> np.ndarray:
        """DOFs of the constraints called ``name``."""
        selected = [dofmap.dofs(c.nodes, c.component) for c in self.constraints if c.name == name]
        if not selected:
            raise ConfigError(f"no constraint named <{name}>")
        return np.unique(np.concatenate(selected))

    def free_dofs(self, dofmap: DofMap) -> np.ndarray:
        prescribed, _ = self.prescribed(dofmap)
        mask = np.ones(dofmap.n_dofs, dtype=bool)
        mask[prescribed] = False
        return np.flatnonzero(mask)


def nodes_on_line(mesh: Mesh, x: Optional[float] = None, y: Optional[float] = None, tol: float = 1e-9) -> np.ndarray:
    """Nodes on the vertical line ``x`` and/or the horizontal line ``y``."""
    mask = np.ones(mesh.n_nodes, dtype=bool)
    if x is not None:
        mask &= np.abs(mesh.nodes[:, 0] - x) <= tol
    if y is not None:
        mask &= np.abs(mesh.nodes[:, 1] - y) <= tol
    return np.flatnonzero(mask)


def nodes_in_box(
    mesh: Mesh, x_range: Sequence[float], y_range: Sequence[float], tol: float = 1e-9
) -> np.ndarray:
    xy = mesh.nodes
    mask = (
        (xy[:, 0] >= x_range[0] - tol)
        & (xy[:, 0] <= x_range[1] + tol)
        & (xy[:, 1] >= y_range[0] - tol)
        & (xy[:, 1] <= y_range[1] + tol)
    )
    return np.flatnonzero(mask)
