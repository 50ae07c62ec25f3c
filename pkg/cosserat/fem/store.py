"""Per-Gauss-point state of a discretization with committed and trial copies."""
from dataclasses import dataclass, fields
from typing import Dict, Tuple

import numpy as np

from cosserat.models.returnmap import GeneralizedState, Regime, StressState


@dataclass
class GaussFields:
    """Arrays indexed by ``(element, point, ...)``."""

    eps_e: np.ndarray
    omega_e: np.ndarray
    chi_e: np.ndarray
    lam: np.ndarray
    strain: np.ndarray
    stress: np.ndarray
    tangent: np.ndarray
    regime: np.ndarray
    p: np.ndarray
    q: np.ndarray
    theta: np.ndarray

    @classmethod
    def zeros(cls, n_elements: int, n_points: int, n_generalized: int) -> "GaussFields":
        shape = (n_elements, n_points)
        return cls(
            eps_e=np.zeros(shape + (3, 3)),
            omega_e=np.zeros(shape + (3, 3)),
            chi_e=np.zeros(shape + (3, 3)),
            lam=np.zeros(shape),
            strain=np.zeros(shape + (n_generalized,)),
            stress=np.zeros(shape + (n_generalized,)),
            tangent=np.zeros(shape + (n_generalized, n_generalized)),
            regime=np.full(shape, Regime.ELASTIC.value, dtype=int),
            p=np.zeros(shape),
            q=np.zeros(shape),
            theta=np.zeros(shape),
        )

    def copy(self) -> "GaussFields":
        return GaussFields(**{f.name: getattr(self, f.name).copy() for f in fields(self)})


class GaussPointStore:
    """Committed state of the last converged step and the trial state of the current Newton iterate.

    Only :meth:`commit` changes the committed arrays, so :meth:`rollback` restores them exactly.
    """

    def __init__(self, n_elements: int, n_points: int, n_generalized: int):
        self.shape: Tuple[int, int] = (n_elements, n_points)
        self.committed = GaussFields.zeros(n_elements, n_points, n_generalized)
        self.trial = self.committed.copy()

    def state(self, e: int, g: int) -> GeneralizedState:
        c = self.committed
        return GeneralizedState(c.eps_e[e, g], c.omega_e[e, g], c.chi_e[e, g], float(c.lam[e, g]))

    def record(
        self,
        e: int,
        g: int,
        new_state: GeneralizedState,
        strain: np.ndarray,
        stress_vector: np.ndarray,
        tangent: np.ndarray,
        stress: StressState,
    ) -> None:
        t = self.trial
        t.eps_e[e, g] = new_state.eps_e
        t.omega_e[e, g] = new_state.omega_e
        t.chi_e[e, g] = new_state.chi_e
        t.lam[e, g] = new_state.lam
        t.strain[e, g] = strain
        t.stress[e, g] = stress_vector
        t.tangent[e, g] = tangent
        t.regime[e, g] = stress.regime.value
        t.p[e, g] = stress.p
        t.q[e, g] = stress.q
        t.theta[e, g] = stress.theta

    def initialize(self, state: Dict[str, np.ndarray]) -> None:
        """Overwrites committed and trial arrays with the given ``GaussFields`` entries, e.g. an initial stress."""
        for name, value in state.items():
            getattr(self.committed, name)[...] = value
        self.trial = self.committed.copy()

    def commit(self) -> None:
        self.committed = self.trial.copy()

    def rollback(self) -> None:
        self.trial = self.committed.copy()

    def regime_counts(self) -> Dict[str, int]:
        counts = np.bincount(self.trial.regime.ravel(), minlength=len(Regime))
        return {r.name.lower(): int(counts[r.value]) for r in Regime}

    def element_average(self, name: str, committed: bool = True) -> np.ndarray:
        """Average over the Gauss points of each element of a scalar field such as ``lam`` or ``q``."""
        source = self.committed if committed else self.trial
        return getattr(source, name).mean(axis=1)
