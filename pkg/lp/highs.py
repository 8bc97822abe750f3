"""
HiGHS Backend
Alternative LP backend over scipy.optimize.linprog, used to cross-check
the simplex kernel and for faster runs when bit-exact determinism of the
pivoting rule is not required.
"""

import numpy as np
from scipy.optimize import linprog

from errors import NumericalFailure
from lp.simplex import LPProblem, LPSolution, LPStatus


def solve_highs(problem: LPProblem) -> LPSolution:
    """
    Solve a maximization LP with scipy's HiGHS solver.

    Args:
        problem: The LP to solve

    Returns:
        LPSolution following the same contract as the simplex kernel
    """
    A, b, c = problem.constraint_matrix, problem.rhs, problem.objective

    if problem.num_rows == 0:
        if np.any(c != 0):
            return LPSolution(LPStatus.UNBOUNDED)
        return LPSolution(LPStatus.OPTIMAL, 0.0, np.zeros(problem.num_vars))

    res = linprog(-c, A_ub=A, b_ub=b, bounds=(None, None), method="highs")

    if res.status == 0:
        x = np.asarray(res.x, dtype=float)
        return LPSolution(LPStatus.OPTIMAL, float(c @ x), x)
    if res.status == 2:
        return LPSolution(LPStatus.INFEASIBLE)
    if res.status == 3:
        return LPSolution(LPStatus.UNBOUNDED)
    raise NumericalFailure(f"HiGHS failed: {res.message}")
