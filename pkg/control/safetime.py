"""
Safe Time Interval
How many steps the invariant set stays invariant without a new sensor
transmission.

For a horizon j the states along an open-loop input sequence are

    x_t = A^t x_0 + sum_{i<t} A^{t-1-i} (B u_i + E w_i),

so "x_t in C for t = 0..j and u_t in U" stacks into

    M (x_0, u_hat) <= P - G w_hat.

Tightening every row for the worst disturbance sequence and projecting onto
x_0 gives the feasible set X_j. The safe time alpha is the largest j with
X_j = C.
"""

import logging
from dataclasses import dataclass, field
from typing import Dict, List, Optional, Sequence

import numpy as np
from tqdm import tqdm

from control.system import LinearSystem
from errors import DimensionMismatch, InvalidInvariant
from geometry.polytope import CONTAINS_TOL, ZERO_ROW_TOL, HPolytope

logger = logging.getLogger(__name__)


@dataclass(frozen=True)
class StackedConstraintSystem:
    """Rows of M (x_0, u_hat) <= P - G w_hat for horizon j"""

    M: np.ndarray
    P: np.ndarray
    G: np.ndarray
    j: int
    n: int
    m_u: int
    m_w: int

    @property
    def num_rows(self) -> int:
        return len(self.P)


@dataclass(frozen=True)
class SafeTimeResult:
    alpha: int
    feasible_sets: List[HPolytope] = field(default_factory=list)
    hit_cap: bool = False

    def to_dict(self, include_sets: bool = False) -> Dict:
        data = {
            "alpha": self.alpha,
            "hit_cap": self.hit_cap,
            "horizons_checked": len(self.feasible_sets),
        }
        if include_sets:
            data["feasible_sets"] = [
                {"j": j, "set": X.to_dict()} for j, X in enumerate(self.feasible_sets, 1)
            ]
        return data


def build_stacked(sys: LinearSystem, c_inf: HPolytope, j: int) -> StackedConstraintSystem:
    """
    Stack state constraints x_t in c_inf (t = 0..j) and input constraints
    u_t in U (t = 0..j-1) over the joint (x_0, u_0..u_{j-1}) space.

    Args:
        sys: The plant
        c_inf: Invariant set whose rows are imposed at every step
        j: Horizon (>= 1)

    Returns:
        StackedConstraintSystem with M, P and the disturbance matrix G
    """
    if c_inf.dim != sys.n:
        raise DimensionMismatch(f"invariant set has dimension {c_inf.dim}, plant has {sys.n}")
    if j < 1:
        raise ValueError("horizon must be at least 1")

    n, m_u, m_w = sys.n, sys.m_u, sys.m_w
    H, h = c_inf.H, c_inf.h
    Hu, hu = sys.U.H, sys.U.h

    # H A^k, H A^k B and H A^k E for k = 0..j
    powers = [np.eye(n)]
    for _ in range(j):
        powers.append(sys.A @ powers[-1])
    HA = [H @ Ak for Ak in powers]

    M_blocks, P_blocks, G_blocks = [], [], []

    # State rows, t = 0..j
    for t in range(j + 1):
        M_t = np.zeros((len(h), n + j * m_u))
        G_t = np.zeros((len(h), j * m_w))
        M_t[:, :n] = HA[t]
        for i in range(t):
            M_t[:, n + i * m_u:n + (i + 1) * m_u] = HA[t - 1 - i] @ sys.B
            G_t[:, i * m_w:(i + 1) * m_w] = HA[t - 1 - i] @ sys.E
        M_blocks.append(M_t)
        G_blocks.append(G_t)
        P_blocks.append(h)

    # Input rows, t = 0..j-1
    for t in range(j):
        M_t = np.zeros((len(hu), n + j * m_u))
        M_t[:, n + t * m_u:n + (t + 1) * m_u] = Hu
        M_blocks.append(M_t)
        G_blocks.append(np.zeros((len(hu), j * m_w)))
        P_blocks.append(hu)

    return StackedConstraintSystem(
        M=np.vstack(M_blocks),
        P=np.concatenate(P_blocks),
        G=np.vstack(G_blocks),
        j=j,
        n=n,
        m_u=m_u,
        m_w=m_w,
    )


def tighten(stacked: StackedConstraintSystem, W: HPolytope) -> HPolytope:
    """
    Worst-case disturbance tightening of the stacked system.

    W^j is a Cartesian product, so each row's maximum splits into one
    support evaluation of W per step.

    Args:
        stacked: Output of build_stacked
        W: Per-step disturbance set (bounded, nonempty)

    Returns:
        Polytope {(x_0, u_hat) : M (x_0, u_hat) <= P_tilde} (may be empty)
    """
    if W.dim != stacked.m_w:
        raise DimensionMismatch(f"W has dimension {W.dim}, stacked system expects {stacked.m_w}")

    supports: Dict[tuple, float] = {}
    shifts = np.zeros(stacked.num_rows)
    for r, row in enumerate(stacked.G):
        total = 0.0
        for i in range(stacked.j):
            block = row[i * stacked.m_w:(i + 1) * stacked.m_w]
            if not np.any(block):
                continue
            key = tuple(block)
            if key not in supports:
                supports[key] = W.support(block)
            total += supports[key]
        shifts[r] = total

    return HPolytope(stacked.M, stacked.P - shifts)


def feasible_set(sys: LinearSystem, c_inf: HPolytope, j: int) -> HPolytope:
    """
    X_j: initial states in c_inf from which one open-loop input sequence
    keeps x_1..x_j in c_inf for every disturbance sequence.
    """
    tightened = tighten(build_stacked(sys, c_inf, j), sys.W)
    return tightened.project(range(sys.n))


def fixed_x0_problem(
    sys: LinearSystem,
    c_inf: HPolytope,
    j: int,
    x0: Sequence[float],
    tightened: Optional[HPolytope] = None,
) -> HPolytope:
    """
    Tightened stacked system with x_0 fixed: the polytope of input sequences
    u_hat (length j*m_u) that certify x0 for j steps. Pass tightened to reuse
    an already built tighten(build_stacked(sys, c_inf, j), sys.W).
    """
    x0 = np.asarray(x0, dtype=float).reshape(-1)
    if len(x0) != sys.n:
        raise DimensionMismatch(f"x0 has length {len(x0)}, plant has {sys.n}")
    if tightened is None:
        tightened = tighten(build_stacked(sys, c_inf, j), sys.W)
    rhs = tightened.h - tightened.H[:, :sys.n] @ x0
    H_u = tightened.H[:, sys.n:]

    # Rows without inputs only constrain x0; they get the membership tolerance
    coupled = np.any(np.abs(H_u) > ZERO_ROW_TOL, axis=1)
    slack = CONTAINS_TOL * (1.0 + np.max(np.abs(c_inf.h)))
    if np.any(rhs[~coupled] < -slack):
        return HPolytope.empty(H_u.shape[1])
    return HPolytope(H_u[coupled], rhs[coupled])


def safe_time(sys: LinearSystem, c_inf: HPolytope, j_max: int) -> SafeTimeResult:
    """
    Largest horizon j <= j_max with X_j = c_inf.

    Args:
        sys: The plant
        c_inf: Converged maximal robust control invariant set
        j_max: Horizon cap

    Returns:
        SafeTimeResult; hit_cap is True when every j up to j_max passed

    Raises:
        InvalidInvariant: X_1 differs from c_inf
    """
    if j_max < 1:
        raise ValueError("j_max must be positive")

    alpha = 0
    feasible_sets: List[HPolytope] = []
    show_progress = logger.isEnabledFor(logging.INFO)

    for j in tqdm(range(1, j_max + 1), desc="safe time", disable=not show_progress):
        X_j = feasible_set(sys, c_inf, j)
        feasible_sets.append(X_j)

        if X_j.equals(c_inf):
            logger.info("X_%d equals the invariant set (%d facets)", j, X_j.num_rows)
            alpha = j
            continue

        if j == 1:
            raise InvalidInvariant("X_1 differs from the invariant set: it is not robust control invariant")
        logger.info("X_%d is strictly smaller than the invariant set", j)
        break

    return SafeTimeResult(alpha=alpha, feasible_sets=feasible_sets, hit_cap=alpha == j_max)
