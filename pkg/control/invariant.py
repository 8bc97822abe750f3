"""
Maximal Robust Control Invariant Set
Fixpoint iteration of the robust controllable-predecessor map

    Omega_0 = X,   Omega_{k+1} = Pre(Omega_k) ∩ X,

where Pre(S) = {x : exists u in U, for all w in W, A x + B u + E w in S}.
"""

import logging
from dataclasses import dataclass, field
from typing import Dict, List, Sequence

import numpy as np
from tqdm import tqdm

from control.system import LinearSystem
from errors import DimensionMismatch, EmptyInvariant
from geometry.polytope import HPolytope
from lp.simplex import is_feasible_system

logger = logging.getLogger(__name__)

DEFAULT_MAX_ITER = 50
CERTIFICATE_TOL = 1e-7


@dataclass(frozen=True)
class InvariantResult:
    set: HPolytope
    iterations: int
    converged: bool
    history: List[int] = field(default_factory=list)

    def to_dict(self) -> Dict:
        return {
            "set": self.set.to_dict(),
            "dim": self.set.dim,
            "iterations": self.iterations,
            "converged": self.converged,
            "facets_per_iteration": list(self.history),
        }

    @classmethod
    def from_dict(cls, data: Dict) -> "InvariantResult":
        return cls(
            set=HPolytope.from_dict(data["set"]),
            iterations=int(data["iterations"]),
            converged=bool(data["converged"]),
            history=list(data.get("facets_per_iteration", [])),
        )


def disturbance_tightening(sys: LinearSystem, H: np.ndarray) -> np.ndarray:
    """Worst-case disturbance effect max_{w in W} H_i E w for every row of H"""
    return sys.W.supports(H @ sys.E) if len(H) else np.zeros(0)


def pre_robust(sys: LinearSystem, target: HPolytope) -> HPolytope:
    """
    Robust controllable predecessor of target.

    Args:
        sys: The plant
        target: Set the successor state must land in

    Returns:
        {x : exists u in U, for all w in W, A x + B u + E w in target},
        possibly empty (never raises for an emptied target)
    """
    if target.dim != sys.n:
        raise DimensionMismatch(f"target has dimension {target.dim}, plant has {sys.n}")
    if target.is_empty():
        return HPolytope.empty(sys.n)

    # Step 1: erode the target by E W
    H = target.H
    h_tight = target.h - disturbance_tightening(sys, H)

    # Step 2: lift to (x, u) space
    lifted_H = np.vstack([
        np.hstack([H @ sys.A, H @ sys.B]),
        np.hstack([np.zeros((sys.U.num_rows, sys.n)), sys.U.H]),
    ])
    lifted_h = np.concatenate([h_tight, sys.U.h])

    # Step 3: project out the input
    return HPolytope(lifted_H, lifted_h).project(range(sys.n))


def max_invariant(sys: LinearSystem, max_iter: int = DEFAULT_MAX_ITER) -> InvariantResult:
    """
    Maximal robust control invariant set contained in X.

    Args:
        sys: The plant
        max_iter: Iteration cap; hitting it returns converged=False

    Returns:
        InvariantResult with the last iterate

    Raises:
        EmptyInvariant: the iterates became empty
    """
    if max_iter < 1:
        raise ValueError("max_iter must be positive")

    omega = sys.X.remove_redundancies()
    history = [omega.num_rows]
    show_progress = logger.isEnabledFor(logging.INFO)

    for k in tqdm(range(1, max_iter + 1), desc="invariant set", disable=not show_progress):
        candidate = pre_robust(sys, omega).intersect(sys.X)
        if candidate.is_empty():
            raise EmptyInvariant(f"invariant-set iterate {k} is empty")
        candidate = candidate.remove_redundancies()
        history.append(candidate.num_rows)
        logger.debug("iteration %d: %d facets", k, candidate.num_rows)

        if candidate.equals(omega):
            logger.info("invariant set converged after %d iterations", k)
            return InvariantResult(candidate, k, True, history)
        omega = candidate

    logger.warning("invariant set did not converge in %d iterations", max_iter)
    return InvariantResult(omega, max_iter, False, history)


def one_step_feasible(sys: LinearSystem, c_inf: HPolytope, x: Sequence[float]) -> bool:
    """
    Is there an admissible u with A x + B u in C ⊖ E W?

    This is one-step robust invariance at a single point.
    """
    x = np.asarray(x, dtype=float).reshape(-1)
    H = c_inf.H
    h_tight = c_inf.h - disturbance_tightening(sys, H)
    slack = CERTIFICATE_TOL * (1.0 + np.max(np.abs(c_inf.h)))

    rows = np.vstack([H @ sys.B, sys.U.H])
    rhs = np.concatenate([h_tight - H @ sys.A @ x + slack, sys.U.h])
    return is_feasible_system(rows, rhs)


def invariance_certificate(sys: LinearSystem, c_inf: HPolytope, points: np.ndarray) -> List[int]:
    """
    Indices of sample points failing the one-step invariance LP.

    An empty list certifies (on the samples) robust control invariance.
    """
    return [i for i, x in enumerate(points) if not one_step_feasible(sys, c_inf, x)]
