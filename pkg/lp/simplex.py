"""
Simplex LP Kernel
Dense two-phase simplex with Bland's anti-cycling rule.

Every set operation in this package reduces to linear programs of the form

    maximize c.x  subject to  A x <= b,  x free.

The kernel solves the dual standard-form problem

    minimize b.y  subject to  A^T y = c,  y >= 0

on a (d+1) x (m+d+1) tableau. The constraint systems met here are tall and
thin (hundreds of rows, fewer than a dozen columns), so the dual tableau is
tiny and pivots are cheap. The primal point is read back from the simplex
multipliers of the optimal dual basis.
"""

import logging
from dataclasses import dataclass
from enum import Enum
from typing import Optional

import numpy as np

from errors import DimensionMismatch, NumericalFailure

logger = logging.getLogger(__name__)

FEAS_TOL = 1e-9
PIVOT_TOL = 1e-11
ITERATION_FACTOR = 50

_default_backend = "simplex"


class LPStatus(str, Enum):
    OPTIMAL = "Optimal"
    INFEASIBLE = "Infeasible"
    UNBOUNDED = "Unbounded"


@dataclass(frozen=True)
class LPProblem:
    """maximize objective.x subject to constraint_matrix x <= rhs"""

    objective: np.ndarray
    constraint_matrix: np.ndarray
    rhs: np.ndarray

    def __post_init__(self):
        c = np.asarray(self.objective, dtype=float).reshape(-1)
        A = np.asarray(self.constraint_matrix, dtype=float)
        b = np.asarray(self.rhs, dtype=float).reshape(-1)
        if A.size == 0:
            A = A.reshape(len(b), len(c))
        if A.ndim != 2 or A.shape != (len(b), len(c)):
            raise DimensionMismatch(
                f"constraint matrix {A.shape} does not match objective "
                f"({len(c)}) and rhs ({len(b)})"
            )
        if len(c) == 0:
            raise DimensionMismatch("LP needs at least one variable")
        if not (np.all(np.isfinite(c)) and np.all(np.isfinite(A)) and np.all(np.isfinite(b))):
            raise ValueError("LP data must be finite")
        object.__setattr__(self, "objective", c)
        object.__setattr__(self, "constraint_matrix", A)
        object.__setattr__(self, "rhs", b)

    @property
    def num_rows(self) -> int:
        return self.constraint_matrix.shape[0]

    @property
    def num_vars(self) -> int:
        return self.constraint_matrix.shape[1]


@dataclass(frozen=True)
class LPSolution:
    status: LPStatus
    value: Optional[float] = None
    point: Optional[np.ndarray] = None

    @property
    def is_optimal(self) -> bool:
        return self.status is LPStatus.OPTIMAL


def set_default_backend(name: str) -> None:
    """
    Select the backend used when solve() is called without one.

    Args:
        name: "simplex" (default, deterministic) or "highs" (scipy)
    """
    global _default_backend

    if name not in ("simplex", "highs"):
        raise ValueError(f"Unknown LP backend: {name}")
    _default_backend = name
    logger.debug("LP backend set to %s", name)


def get_default_backend() -> str:
    return _default_backend


def solve(problem: LPProblem, backend: Optional[str] = None) -> LPSolution:
    """
    Solve a maximization LP.

    Args:
        problem: The LP to solve
        backend: "simplex" or "highs"; defaults to the module-wide setting

    Returns:
        LPSolution with status, optimal value and maximizer (when optimal)
    """
    backend = backend or _default_backend
    if backend == "highs":
        from lp.highs import solve_highs
        return solve_highs(problem)

    A, b, c = problem.constraint_matrix, problem.rhs, problem.objective
    m, d = A.shape
    max_pivots = ITERATION_FACTOR * (m + d)

    # Step 1: dual problem  min b.y  s.t.  A^T y = c, y >= 0
    tableau = _Tableau(A.T, c, b, max_pivots)
    if not tableau.phase_one():
        # Dual infeasible: primal is unbounded or infeasible
        if is_feasible_system(A, b, backend="simplex"):
            return LPSolution(LPStatus.UNBOUNDED)
        return LPSolution(LPStatus.INFEASIBLE)

    # Step 2: dual optimum; dual unbounded means primal infeasible
    if not tableau.phase_two():
        return LPSolution(LPStatus.INFEASIBLE)

    x = _recover_point(A, b, tableau)
    slack_tol = FEAS_TOL * (1.0 + (np.max(np.abs(b)) if m else 0.0))
    if m and np.max(A @ x - b) > slack_tol:
        raise NumericalFailure(
            f"recovered point violates constraints by {np.max(A @ x - b):.3e}"
        )
    return LPSolution(LPStatus.OPTIMAL, float(c @ x), x)


def maximize(c, A, b, backend: Optional[str] = None) -> LPSolution:
    """Convenience wrapper: solve(LPProblem(c, A, b))"""
    return solve(LPProblem(c, A, b), backend=backend)


def is_feasible_system(A: np.ndarray, b: np.ndarray, backend: Optional[str] = None) -> bool:
    """
    Decide whether {x : A x <= b} is nonempty.

    The simplex backend runs the dual of the zero-objective LP,
    min b.y s.t. A^T y = 0, y >= 0. The origin is dual feasible, so phase
    one is skipped; an unbounded dual ray is a Farkas certificate of primal
    infeasibility. The highs backend solves the zero-objective LP directly.
    """
    A = np.asarray(A, dtype=float)
    b = np.asarray(b, dtype=float).reshape(-1)
    m, d = A.shape
    if m == 0:
        return True
    if (backend or _default_backend) == "highs":
        from lp.highs import solve_highs
        return solve_highs(LPProblem(np.zeros(d), A, b)).status is not LPStatus.INFEASIBLE

    tableau = _Tableau(A.T, np.zeros(d), b, ITERATION_FACTOR * (m + d))
    tableau.phase_one()
    return tableau.phase_two()


def _recover_point(A: np.ndarray, b: np.ndarray, tableau: "_Tableau") -> np.ndarray:
    """Primal maximizer from the optimal dual basis"""
    x = tableau.multipliers()
    basic_rows = tableau.basic_real_columns()
    if len(basic_rows) == A.shape[1]:
        # Nondegenerate vertex: re-solve the active rows for accuracy
        try:
            refined = np.linalg.solve(A[basic_rows], b[basic_rows])
            if np.max(A @ refined - b, initial=-np.inf) <= np.max(A @ x - b, initial=-np.inf) + FEAS_TOL:
                x = refined
        except np.linalg.LinAlgError:
            pass
    return x


class _Tableau:
    """
    Standard-form simplex tableau for  min cost.y  s.t.  M y = rhs, y >= 0.

    Columns are the real variables, then one artificial per row, then rhs.
    The last row holds reduced costs and minus the objective value.
    """

    def __init__(self, M: np.ndarray, rhs: np.ndarray, cost: np.ndarray, max_pivots: int):
        k, n = M.shape
        self.k, self.n = k, n
        self.cost = np.asarray(cost, dtype=float)
        self.max_pivots = max_pivots
        self.pivots = 0

        # Flip rows so the starting artificial basis is feasible
        self.sign = np.where(rhs < 0, -1.0, 1.0)
        T = np.zeros((k + 1, n + k + 1))
        T[:k, :n] = M * self.sign[:, None]
        T[:k, n:n + k] = np.eye(k)
        T[:k, -1] = rhs * self.sign
        self.T = T
        self.basis = np.arange(n, n + k)

        self.rhs_scale = 1.0 + (np.max(np.abs(rhs)) if k else 0.0)
        self.cost_scale = 1.0 + (np.max(np.abs(self.cost)) if n else 0.0)

    def phase_one(self) -> bool:
        """Drive the artificials to zero. Returns False if M y = rhs has no y >= 0"""
        k, n = self.k, self.n
        self.T[k, :] = 0.0
        self.T[k, :n] = -self.T[:k, :n].sum(axis=0)
        self.T[k, -1] = -self.T[:k, -1].sum()

        self._iterate(allowed=n + k, opt_tol=FEAS_TOL * self.rhs_scale)
        if -self.T[k, -1] > FEAS_TOL * self.rhs_scale:
            return False

        # Pivot remaining (zero-level) artificials out where possible
        for row in range(k):
            if self.basis[row] >= n:
                candidates = np.flatnonzero(np.abs(self.T[row, :n]) > PIVOT_TOL)
                if len(candidates):
                    self._pivot(row, int(candidates[0]))
        return True

    def phase_two(self) -> bool:
        """Minimize the true cost. Returns False if the problem is unbounded"""
        k, n = self.k, self.n
        objective = np.zeros(n + k + 1)
        objective[:n] = self.cost
        for row, col in enumerate(self.basis):
            weight = objective[col] if col < n else 0.0
            if weight != 0.0:
                objective -= weight * self.T[row]
        # Basic columns carry zero reduced cost
        for col in self.basis:
            objective[col] = 0.0
        self.T[k, :] = objective
        return self._iterate(allowed=n, opt_tol=FEAS_TOL * self.cost_scale)

    def multipliers(self) -> np.ndarray:
        """Simplex multipliers of the original (unflipped) rows"""
        k, n = self.k, self.n
        return -self.sign * self.T[k, n:n + k]

    def basic_real_columns(self) -> np.ndarray:
        return np.sort(self.basis[self.basis < self.n])

    def _iterate(self, allowed: int, opt_tol: float) -> bool:
        k = self.k
        while True:
            reduced = self.T[k, :allowed]
            entering = np.flatnonzero(reduced < -opt_tol)
            if len(entering) == 0:
                return True
            # Bland: lowest-index improving column
            col = int(entering[0])

            column = self.T[:k, col]
            rows = np.flatnonzero(column > PIVOT_TOL)
            if len(rows) == 0:
                return False
            ratios = self.T[rows, -1] / column[rows]
            best = np.min(ratios)
            ties = rows[ratios <= best + PIVOT_TOL * (1.0 + abs(best))]
            # Bland: among ties, leave the lowest-index basic variable
            row = int(ties[np.argmin(self.basis[ties])])
            self._pivot(row, col)

    def _pivot(self, row: int, col: int) -> None:
        self.pivots += 1
        if self.pivots > self.max_pivots:
            raise NumericalFailure(
                f"simplex exceeded {self.max_pivots} pivots"
            )
        T = self.T
        T[row] /= T[row, col]
        factors = T[:, col].copy()
        factors[row] = 0.0
        T -= np.outer(factors, T[row])
        T[:, col] = 0.0
        T[row, col] = 1.0
        self.basis[row] = col


# Quick test
if __name__ == "__main__":
    tests = [
        ([1.0], [[1.0], [-1.0]], [1.0, 1.0], LPStatus.OPTIMAL, 1.0),
        ([1.0], [[1.0], [-1.0]], [1.0, -2.0], LPStatus.INFEASIBLE, None),
        ([1.0, 1.0], [[1, 0], [0, 1], [-1, 0], [0, -1]], [3, 4, 0, 0], LPStatus.OPTIMAL, 7.0),
        ([2.0, 1.0], [[-1, 0], [0, -1], [1, 1]], [0, 0, 1], LPStatus.OPTIMAL, 2.0),
        ([1.0], [[-1.0]], [0.0], LPStatus.UNBOUNDED, None),
    ]

    print("Simplex Tests:")
    print("=" * 60)
    for c, A, b, expected_status, expected_value in tests:
        result = maximize(c, A, b)
        ok = result.status is expected_status and (
            expected_value is None or abs(result.value - expected_value) < 1e-9
        )
        status = "✅" if ok else "❌"
        print(f"{status} max {c} -> {result.status.value:10s} value={result.value}")
    print("=" * 60)
