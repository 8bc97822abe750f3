"""
Fourier-Motzkin Elimination
Exact projection of H-polyhedra, one coordinate at a time, with LP-based
redundancy removal after every elimination step.
"""

import logging
from typing import List, Sequence, Tuple

import numpy as np

from errors import DimensionMismatch
from geometry.polytope import HPolytope, ZERO_ROW_TOL

logger = logging.getLogger(__name__)

COEFFICIENT_TOL = 1e-12
VACUOUS_TOL = 1e-9


def project(P: HPolytope, keep: Sequence[int]) -> HPolytope:
    """
    Project P onto the coordinates listed in keep.

    Args:
        P: Polytope to project
        keep: Nonempty, strictly increasing 0-based coordinate indices

    Returns:
        The projection, of dimension len(keep), redundancy-free
    """
    keep = [int(k) for k in keep]
    if not keep:
        raise ValueError("projection needs at least one kept coordinate")
    if any(b <= a for a, b in zip(keep, keep[1:])):
        raise ValueError(f"kept coordinates must be strictly increasing: {keep}")
    if keep[0] < 0 or keep[-1] >= P.dim:
        raise DimensionMismatch(f"kept coordinates {keep} out of range for dimension {P.dim}")

    if P.is_empty():
        return HPolytope.empty(len(keep))

    current = P.normalized().remove_redundancies()
    columns = list(range(P.dim))
    to_drop = [c for c in columns if c not in keep]

    while to_drop:
        # Eliminate the coordinate producing the fewest new rows
        position = _cheapest_column(current.H, [columns.index(c) for c in to_drop])
        dropped = columns[position]
        H, h = _eliminate(current.H, current.h, position)
        columns.pop(position)
        to_drop.remove(dropped)

        current = HPolytope(H, h).normalized().remove_redundancies()
        logger.debug(
            "eliminated coordinate %d: %d rows remain, %d coordinates left to drop",
            dropped, current.num_rows, len(to_drop),
        )

    return current


def _cheapest_column(H: np.ndarray, candidates: List[int]) -> int:
    """Column whose elimination yields the smallest p*n - (p+n) growth"""
    best, best_cost = candidates[0], None
    for col in candidates:
        p = int(np.sum(H[:, col] > COEFFICIENT_TOL))
        n = int(np.sum(H[:, col] < -COEFFICIENT_TOL))
        cost = p * n - (p + n)
        if best_cost is None or cost < best_cost:
            best, best_cost = col, cost
    return best


def _eliminate(H: np.ndarray, h: np.ndarray, col: int) -> Tuple[np.ndarray, np.ndarray]:
    """
    One Fourier-Motzkin step: combine every (positive, negative) pair of rows
    so that column col cancels, keep the rows where it is already zero.
    """
    coeffs = H[:, col]
    pos = np.flatnonzero(coeffs > COEFFICIENT_TOL)
    neg = np.flatnonzero(coeffs < -COEFFICIENT_TOL)
    zero = np.flatnonzero(np.abs(coeffs) <= COEFFICIENT_TOL)

    rows = [H[zero]]
    rhs = [h[zero]]

    if len(pos) and len(neg):
        # Scale so the eliminated coefficient is +1 / -1, then add pairwise
        Hp = H[pos] / coeffs[pos, None]
        hp = h[pos] / coeffs[pos]
        Hn = H[neg] / -coeffs[neg, None]
        hn = h[neg] / -coeffs[neg]
        rows.append((Hp[:, None, :] + Hn[None, :, :]).reshape(-1, H.shape[1]))
        rhs.append((hp[:, None] + hn[None, :]).reshape(-1))

    H_new = np.delete(np.vstack(rows), col, axis=1)
    h_new = np.concatenate(rhs)

    # Rows that cancelled entirely are either vacuous or certify emptiness
    nonzero = np.any(np.abs(H_new) > ZERO_ROW_TOL, axis=1)
    vacuous = ~nonzero & (h_new >= -VACUOUS_TOL)
    return H_new[~vacuous], h_new[~vacuous]
