"""
Polytope Sampling
Chebyshev center and Hit & Run sampling of bounded H-polytopes, used for
invariance certificates, simulation start states and property tests.
"""

from typing import Optional, Tuple

import numpy as np

from errors import EmptySet
from geometry.polytope import HPolytope

DEFAULT_BURN_IN = 100


def chebyshev_center(P: HPolytope) -> Tuple[np.ndarray, float]:
    """
    Center and radius of the largest ball inscribed in P.

    Args:
        P: Nonempty bounded polytope

    Returns:
        (center, radius); radius is 0 for flat polytopes
    """
    ball = P.chebyshev_ball()
    if ball is None:
        if P.is_empty():
            raise EmptySet("Chebyshev center of an empty polytope")
        raise ValueError("Chebyshev center of an unbounded polytope")
    return ball


def hit_and_run(
    P: HPolytope,
    n_points: int,
    rng: np.random.Generator,
    burn_in: int = DEFAULT_BURN_IN,
    thin: int = 1,
    start: Optional[np.ndarray] = None,
) -> np.ndarray:
    """
    Draw approximately uniform samples from P with the Hit & Run walk.

    Args:
        P: Nonempty bounded polytope
        n_points: Number of samples to return
        rng: Seeded generator; equal seeds give equal samples
        burn_in: Steps discarded before the first sample
        thin: Steps between recorded samples
        start: Interior start point (default: Chebyshev center)

    Returns:
        Array of shape (n_points, dim)
    """
    x = chebyshev_center(P)[0] if start is None else np.array(start, dtype=float)
    samples = np.empty((n_points, P.dim))

    total_steps = burn_in + n_points * thin
    recorded = 0
    for step in range(total_steps):
        direction = rng.standard_normal(P.dim)
        direction /= np.linalg.norm(direction)

        # Chord of P through x along direction
        slack = np.maximum(P.h - P.H @ x, 0.0)
        rate = P.H @ direction
        with np.errstate(divide="ignore", invalid="ignore"):
            steps = slack / rate
        upper = steps[rate > 1e-14]
        lower = steps[rate < -1e-14]
        if len(upper) == 0 or len(lower) == 0:
            raise ValueError("Hit & Run needs a bounded polytope")
        lo, hi = float(np.max(lower)), float(np.min(upper))
        if hi < lo:
            lo = hi = 0.0
        x = x + rng.uniform(lo, hi) * direction

        if step >= burn_in and (step - burn_in) % thin == 0:
            samples[recorded] = x
            recorded += 1

    return samples


def boundary_samples(
    P: HPolytope,
    n_points: int,
    rng: np.random.Generator,
    margin: float = 0.02,
) -> np.ndarray:
    """
    Samples pushed toward the boundary of P.

    Each Hit & Run sample is moved along the ray from the Chebyshev center
    through it, to a fraction in [1 - margin, 1] of the distance to the
    boundary.
    """
    center, _ = chebyshev_center(P)
    interior = hit_and_run(P, n_points, rng)
    points = np.empty_like(interior)

    for i, x in enumerate(interior):
        ray = x - center
        if np.linalg.norm(ray) < 1e-12:
            ray = rng.standard_normal(P.dim)
        rate = P.H @ ray
        slack = P.h - P.H @ center
        reach = np.min(slack[rate > 1e-14] / rate[rate > 1e-14])
        points[i] = center + (1.0 - margin * rng.uniform()) * reach * ray

    return points
