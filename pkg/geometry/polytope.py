"""
H-Polytope
Convex polyhedra {x : H x <= h} and the set algebra the invariant-set and
safe-time computations are built from: membership, emptiness,
intersection, support function, projection, redundancy removal,
Pontryagin difference and set equality.

Values are immutable; every operation returns a new polytope. Operations
may return empty sets. Only the ones whose math needs a nonempty operand
(support, erosion, redundancy removal) raise EmptySet.
"""

import logging
from dataclasses import dataclass
from typing import Dict, List, Optional, Sequence, Tuple

import numpy as np
from scipy.spatial import HalfspaceIntersection, QhullError

from errors import DimensionMismatch, EmptySet
from lp.simplex import LPProblem, LPStatus, is_feasible_system, solve

logger = logging.getLogger(__name__)

CONTAINS_TOL = 1e-7
INCLUSION_TOL = 1e-7
REDUNDANCY_TOL = 1e-9
ZERO_ROW_TOL = 1e-12
INTERIOR_TOL = 1e-9


@dataclass(frozen=True, eq=False)
class HPolytope:
    """The polyhedron {x : H x <= h}"""

    H: np.ndarray
    h: np.ndarray

    def __post_init__(self):
        H = np.array(self.H, dtype=float)
        h = np.array(self.h, dtype=float).reshape(-1)
        if H.ndim != 2:
            raise DimensionMismatch(f"H must be a matrix, got shape {H.shape}")
        if H.shape[0] != len(h):
            raise DimensionMismatch(f"H has {H.shape[0]} rows but h has {len(h)} entries")
        if H.shape[1] < 1:
            raise DimensionMismatch("polytope dimension must be positive")
        if not (np.all(np.isfinite(H)) and np.all(np.isfinite(h))):
            raise ValueError("polytope data must be finite")
        H.setflags(write=False)
        h.setflags(write=False)
        object.__setattr__(self, "H", H)
        object.__setattr__(self, "h", h)

    # ------------------------------------------------------------------
    # Constructors and io

    @classmethod
    def box(cls, lower: Sequence[float], upper: Sequence[float]) -> "HPolytope":
        """Axis-aligned box lower <= x <= upper"""
        lower = np.asarray(lower, dtype=float).reshape(-1)
        upper = np.asarray(upper, dtype=float).reshape(-1)
        if lower.shape != upper.shape:
            raise DimensionMismatch("box bounds differ in length")
        n = len(lower)
        return cls(np.vstack([np.eye(n), -np.eye(n)]), np.concatenate([upper, -lower]))

    @classmethod
    def empty(cls, dim: int) -> "HPolytope":
        """Canonical empty set 0.x <= -1"""
        return cls(np.zeros((1, dim)), [-1.0])

    @classmethod
    def from_dict(cls, data: Dict) -> "HPolytope":
        """Build from the JSON form {"H": [[...], ...], "h": [...]}"""
        try:
            H, h = data["H"], data["h"]
        except (KeyError, TypeError) as e:
            raise ValueError(f"polytope JSON needs 'H' and 'h': {e}") from e
        H = np.asarray(H, dtype=float)
        if H.size == 0:
            dim = int(data.get("dim", 0))
            H = H.reshape(0, dim)
        return cls(H, h)

    def to_dict(self) -> Dict:
        return {
            "H": [[float(v) for v in row] for row in self.H],
            "h": [float(v) for v in self.h],
        }

    # ------------------------------------------------------------------
    # Basic properties

    @property
    def dim(self) -> int:
        return self.H.shape[1]

    @property
    def num_rows(self) -> int:
        return self.H.shape[0]

    def __repr__(self) -> str:
        return f"HPolytope(dim={self.dim}, rows={self.num_rows})"

    def _check_dim(self, other_dim: int, what: str) -> None:
        if other_dim != self.dim:
            raise DimensionMismatch(f"{what} has dimension {other_dim}, polytope has {self.dim}")

    def contains(self, x: Sequence[float], tol: float = CONTAINS_TOL) -> bool:
        """
        Membership test with a relative tolerance.

        Args:
            x: Point of length dim
            tol: Slack allowed, scaled by 1 + max|h|

        Returns:
            True iff H x <= h + tol (1 + ||h||_inf) componentwise
        """
        x = np.asarray(x, dtype=float).reshape(-1)
        self._check_dim(len(x), "point")
        if self.num_rows == 0:
            return True
        slack = tol * (1.0 + np.max(np.abs(self.h)))
        return bool(np.all(self.H @ x <= self.h + slack))

    def is_empty(self) -> bool:
        """Phase-one feasibility of H x <= h"""
        zero_rows = np.all(np.abs(self.H) <= ZERO_ROW_TOL, axis=1)
        if np.any(self.h[zero_rows] < 0):
            return True
        return not is_feasible_system(self.H, self.h)

    def is_bounded(self) -> bool:
        """Finite support in +/- every unit direction (assumes nonempty)"""
        for i in range(self.dim):
            e = np.zeros(self.dim)
            e[i] = 1.0
            if not np.isfinite(self.support(e)) or not np.isfinite(self.support(-e)):
                return False
        return True

    # ------------------------------------------------------------------
    # Set operations

    def intersect(self, other: "HPolytope") -> "HPolytope":
        """Row concatenation; exactly self ∩ other"""
        self._check_dim(other.dim, "intersected polytope")
        return HPolytope(np.vstack([self.H, other.H]), np.concatenate([self.h, other.h]))

    def support(self, c: Sequence[float]) -> float:
        """
        Support function max{c.x : x in P}.

        Args:
            c: Direction of length dim

        Returns:
            The optimal value, or numpy.inf if the LP is unbounded
        """
        c = np.asarray(c, dtype=float).reshape(-1)
        self._check_dim(len(c), "direction")
        result = solve(LPProblem(c, self.H, self.h))
        if result.status is LPStatus.INFEASIBLE:
            raise EmptySet("support function of an empty polytope")
        if result.status is LPStatus.UNBOUNDED:
            return np.inf
        return result.value

    def supports(self, C: np.ndarray) -> np.ndarray:
        """
        Support function for every row of C. Rows sharing a direction up to
        positive scaling share one LP; a zero row has support 0.
        """
        C = np.atleast_2d(np.asarray(C, dtype=float))
        if C.size == 0:
            return np.zeros(len(C))
        self._check_dim(C.shape[1], "direction")
        norms = np.linalg.norm(C, axis=1)
        values = np.zeros(len(C))
        cache: Dict[Tuple[float, ...], float] = {}
        for i, (c, norm) in enumerate(zip(C, norms)):
            if norm <= ZERO_ROW_TOL:
                continue
            unit = c / norm
            key = tuple(np.round(unit, 12) + 0.0)
            if key not in cache:
                cache[key] = self.support(unit)
            values[i] = norm * cache[key]
        return values

    def project(self, keep: Sequence[int]) -> "HPolytope":
        """
        Orthogonal projection onto the coordinates in keep (0-based, strictly
        increasing) by Fourier-Motzkin elimination of the others.
        """
        from geometry.fourier_motzkin import project
        return project(self, keep)

    def remove_redundancies(self) -> "HPolytope":
        """
        Drop every row implied by the others.

        A row survives iff the support of the remaining rows in its
        direction exceeds its bound. Row order of survivors is preserved.
        Bounded full-dimensional polytopes go through Qhull first; the LP
        pass covers everything Qhull cannot take.
        """
        H, h = self.H, self.h
        m = self.num_rows

        # Trivial rows: 0.x <= h_i
        zero_rows = np.all(np.abs(H) <= ZERO_ROW_TOL, axis=1)
        if np.any(h[zero_rows] < 0):
            raise EmptySet("redundancy removal on an empty polytope")
        rows = _tightest_copies(H, h, np.flatnonzero(~zero_rows))

        if len(rows) == 0:
            return HPolytope(np.zeros((0, self.dim)), [])
        if not is_feasible_system(H[rows], h[rows]):
            raise EmptySet("redundancy removal on an empty polytope")

        kept = _qhull_irredundant(H, h, rows)
        if kept is None:
            kept = _lp_irredundant(H, h, rows)
        logger.debug("redundancy removal: %d -> %d rows", m, len(kept))
        return HPolytope(H[kept], h[kept])

    def pontryagin_diff(self, other: "HPolytope") -> "HPolytope":
        """
        Erosion {x : x + s in P for all s in S}: each bound h_i is lowered
        by the support of S in direction H_i.
        """
        self._check_dim(other.dim, "eroding set")
        if self.is_empty() or other.is_empty():
            raise EmptySet("Pontryagin difference needs nonempty operands")
        shifts = other.supports(self.H) if self.num_rows else np.zeros(0)
        if not np.all(np.isfinite(shifts)):
            return HPolytope.empty(self.dim)
        return HPolytope(self.H, self.h - shifts)

    def affine_preimage(self, M: np.ndarray, offset: Optional[Sequence[float]] = None) -> "HPolytope":
        """{z : M z + offset in P}"""
        M = np.asarray(M, dtype=float)
        if M.ndim != 2 or M.shape[0] != self.dim:
            raise DimensionMismatch(f"map with shape {M.shape} does not land in dimension {self.dim}")
        rhs = self.h.copy()
        if offset is not None:
            offset = np.asarray(offset, dtype=float).reshape(-1)
            self._check_dim(len(offset), "offset")
            rhs = rhs - self.H @ offset
        return HPolytope(self.H @ M, rhs)

    def is_subset(self, other: "HPolytope", tol: float = INCLUSION_TOL) -> bool:
        """self ⊆ other, tested row by row on other's description"""
        self._check_dim(other.dim, "compared polytope")
        if self.is_empty():
            return True
        if other.is_empty():
            return False
        limits = other.h + tol * (1.0 + np.abs(other.h))
        V = self.vertices()
        if V is not None:
            # The support of a bounded polytope is attained at a vertex
            return bool(np.all(other.H @ V.T <= limits[:, None]))
        return all(self.support(row) <= limit for row, limit in zip(other.H, limits))

    def equals(self, other: "HPolytope", tol: float = INCLUSION_TOL) -> bool:
        """Set equality by mutual inclusion; empty sets equal only each other"""
        self._check_dim(other.dim, "compared polytope")
        self_empty, other_empty = self.is_empty(), other.is_empty()
        if self_empty or other_empty:
            return self_empty and other_empty
        return self.is_subset(other, tol) and other.is_subset(self, tol)

    def normalized(self) -> "HPolytope":
        """Same set with unit-norm rows; zero rows are left untouched"""
        norms = np.linalg.norm(self.H, axis=1)
        scale = np.where(norms > ZERO_ROW_TOL, norms, 1.0)
        return HPolytope(self.H / scale[:, None], self.h / scale)

    def chebyshev_ball(self) -> Optional[Tuple[np.ndarray, float]]:
        """Center and radius of the largest inscribed ball; None if empty or unbounded"""
        return _chebyshev_ball(self.H, self.h)

    def vertices(self) -> Optional[np.ndarray]:
        """
        Vertices of a bounded, full-dimensional polytope of dimension >= 2,
        computed by Qhull (a degenerate vertex may repeat). None when Qhull does not apply
        (flat, unbounded or one-dimensional sets).
        """
        if self.dim < 2 or self.num_rows <= self.dim:
            return None
        hull = _halfspace_intersection(self.H, self.h)
        return None if hull is None else hull.intersections

    def bounding_box(self) -> List[List[float]]:
        """[[lower_i, upper_i], ...] per coordinate (may contain inf)"""
        bounds = []
        for i in range(self.dim):
            e = np.zeros(self.dim)
            e[i] = 1.0
            bounds.append([-self.support(-e), self.support(e)])
        return bounds



# ----------------------------------------------------------------------
# Row reduction helpers

def _tightest_copies(H: np.ndarray, h: np.ndarray, rows: np.ndarray) -> np.ndarray:
    """Among rows with the same normalized direction keep the tightest (first on ties)"""
    if len(rows) == 0:
        return rows
    norms = np.linalg.norm(H[rows], axis=1)
    keys = np.round(H[rows] / norms[:, None], 12) + 0.0
    bounds = h[rows] / norms
    _, group = np.unique(keys, axis=0, return_inverse=True)
    group = group.reshape(-1)

    order = np.lexsort((np.arange(len(rows)), bounds, group))
    first = np.ones(len(order), dtype=bool)
    first[1:] = group[order][1:] != group[order][:-1]
    return np.sort(rows[order[first]])


def _chebyshev_ball(H: np.ndarray, h: np.ndarray) -> Optional[Tuple[np.ndarray, float]]:
    d = H.shape[1]
    norms = np.linalg.norm(H, axis=1)
    A = np.vstack([np.hstack([H, norms[:, None]]), np.r_[np.zeros(d), -1.0]])
    b = np.r_[h, 0.0]
    result = solve(LPProblem(np.r_[np.zeros(d), 1.0], A, b))
    if not result.is_optimal:
        return None
    return result.point[:-1], float(result.point[-1])


def _halfspace_intersection(H: np.ndarray, h: np.ndarray) -> Optional[HalfspaceIntersection]:
    """
    Qhull vertex enumeration around the Chebyshev center. None for flat,
    unbounded or empty polytopes and whenever Qhull gives up.
    """
    ball = _chebyshev_ball(H, h)
    if ball is None:
        return None
    center, radius = ball
    if radius <= INTERIOR_TOL * (1.0 + np.max(np.abs(h))):
        return None

    try:
        hull = HalfspaceIntersection(np.hstack([H, -h[:, None]]), center)
    except (QhullError, ValueError) as e:
        logger.debug("Qhull failed, falling back to LPs: %s", e)
        return None

    # Bounded iff the center is strictly inside the dual hull
    if np.any(hull.dual_equations[:, -1] >= 0) or not np.all(np.isfinite(hull.intersections)):
        return None
    return hull


def _qhull_irredundant(H: np.ndarray, h: np.ndarray, rows: np.ndarray) -> Optional[np.ndarray]:
    """Facet rows from the dual hull, checked against the vertices of the reduced set"""
    if H.shape[1] < 2 or len(rows) <= H.shape[1]:
        return None
    hull = _halfspace_intersection(H[rows], h[rows])
    if hull is None:
        return None
    kept = np.sort(rows[np.unique(hull.dual_vertices)])

    reduced = _halfspace_intersection(H[kept], h[kept])
    if reduced is None:
        return None
    slack = CONTAINS_TOL * (1.0 + np.max(np.abs(h[rows])))
    if np.any(H[rows] @ reduced.intersections.T > h[rows, None] + slack):
        logger.debug("Qhull dropped a supporting row, falling back to LPs")
        return None
    return kept


def _lp_irredundant(H: np.ndarray, h: np.ndarray, rows: np.ndarray) -> np.ndarray:
    """One LP per row against the current survivors"""
    active = np.zeros(len(h), dtype=bool)
    active[rows] = True
    for i in rows:
        active[i] = False
        others = np.flatnonzero(active)
        if len(others) == 0:
            active[i] = True
            continue
        result = solve(LPProblem(H[i], H[others], h[others]))
        if result.status is LPStatus.UNBOUNDED:
            active[i] = True
        elif result.is_optimal:
            if result.value > h[i] + REDUNDANCY_TOL * (1.0 + abs(h[i])):
                active[i] = True
        else:
            # Dropping a row of a feasible system cannot make it infeasible
            logger.debug("row %d: relaxation reported infeasible, keeping the row", i)
            active[i] = True
    return np.flatnonzero(active)
