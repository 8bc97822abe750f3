"""
Disturbance Generators
Meal-disturbance sequences for closed-loop runs: none, uniform random,
greedy worst case, and scheduled meal pulses. Every generated value lies
in the disturbance set W.
"""

import json
import logging
from dataclasses import dataclass, field
from pathlib import Path
from typing import Callable, Dict, List, Union

import numpy as np

from control.system import LinearSystem
from geometry.polytope import CONTAINS_TOL, ZERO_ROW_TOL, HPolytope
from lp.simplex import LPProblem, solve

logger = logging.getLogger(__name__)

ZERO = "zero"
UNIFORM = "uniform"
WORST = "worst"
MEALS = "meals"
KINDS = (ZERO, UNIFORM, WORST, MEALS)

Sampler = Callable[[int, np.ndarray, np.ndarray], np.ndarray]


@dataclass(frozen=True)
class DisturbanceGenerator:
    """
    Disturbance policy description.

    kind is one of "zero", "uniform", "worst", "meals". The seed only
    matters for "uniform"; times/magnitudes only for "meals".
    """

    kind: str = ZERO
    seed: int = 0
    times: tuple = field(default_factory=tuple)
    magnitudes: tuple = field(default_factory=tuple)

    def __post_init__(self):
        if self.kind not in KINDS:
            raise ValueError(f"unknown disturbance kind '{self.kind}' (expected one of {KINDS})")
        if len(self.times) != len(self.magnitudes):
            raise ValueError("meal times and magnitudes differ in length")

    def to_dict(self) -> Dict:
        data = {"kind": self.kind, "seed": int(self.seed)}
        if self.kind == MEALS:
            data["times"] = list(self.times)
            data["magnitudes"] = [np.atleast_1d(m).tolist() for m in self.magnitudes]
        return data

    def bind(self, sys: LinearSystem, c_inf: HPolytope) -> Sampler:
        """
        Build a fresh sampler for one run.

        Args:
            sys: The plant (supplies W, A, B, E)
            c_inf: Set the worst-case adversary tries to leave

        Returns:
            Callable (t, x_t, u_t) -> w_t
        """
        if self.kind == ZERO:
            return _zero_sampler(sys)
        if self.kind == UNIFORM:
            return _uniform_sampler(sys, np.random.default_rng(self.seed))
        if self.kind == WORST:
            return _worst_case_sampler(sys, c_inf)
        return _meal_sampler(sys, self.times, self.magnitudes)


def load_meals(path: Union[str, Path]) -> DisturbanceGenerator:
    """Read {"times": [...], "magnitudes": [...]} into a meal-pulse generator"""
    with open(path, "r", encoding="utf-8") as f:
        data = json.load(f)
    return DisturbanceGenerator(
        kind=MEALS,
        times=tuple(int(t) for t in data["times"]),
        magnitudes=tuple(tuple(np.atleast_1d(m).astype(float)) for m in data["magnitudes"]),
    )


def _zero_sampler(sys: LinearSystem) -> Sampler:
    zero = np.zeros(sys.m_w)
    if not sys.W.contains(zero):
        raise ValueError("zero disturbance lies outside W")
    return lambda t, x, u: zero.copy()


MAX_REJECTIONS = 1000
SUPPORT_POINTS = 8


def _uniform_sampler(sys: LinearSystem, rng: np.random.Generator) -> Sampler:
    W = sys.W
    bounds = np.array(W.bounding_box())
    lower, upper = bounds[:, 0], bounds[:, 1]
    ball = W.chebyshev_ball()
    flat = ball is None or ball[1] <= CONTAINS_TOL * (1.0 + np.max(np.abs(W.h)))
    if flat:
        logger.debug("W has no interior; uniform disturbances are mixed from support points")

    def mixture() -> np.ndarray:
        # Random convex combination of extreme points of W
        points = []
        for _ in range(SUPPORT_POINTS):
            direction = rng.standard_normal(W.dim)
            points.append(solve(LPProblem(direction, W.H, W.h)).point)
        weights = rng.dirichlet(np.ones(SUPPORT_POINTS))
        return weights @ np.array(points)

    def sample(t, x, u):
        if flat:
            return mixture()
        # Rejection from the bounding box; W is low dimensional
        for _ in range(MAX_REJECTIONS):
            w = rng.uniform(lower, upper)
            if W.contains(w):
                return w
        logger.debug("t=%d: %d rejections in a row, mixing support points instead", t, MAX_REJECTIONS)
        return mixture()

    return sample


def _worst_case_sampler(sys: LinearSystem, c_inf: HPolytope) -> Sampler:
    """
    Greedy adversary: push the successor state as far as possible past the
    facet of c_inf it is closest to violating.
    """
    target = c_inf.normalized()
    H, h = target.H, target.h
    directions = H @ sys.E

    # Disturbance maximizing each row's excursion; W is polytopic so these are vertices.
    # Rows of c_inf that share an E-direction share the LP.
    maximizers: List[np.ndarray] = []
    shifts = np.zeros(len(h))
    vertex_of: Dict[tuple, np.ndarray] = {}
    for i, d in enumerate(directions):
        norm = np.linalg.norm(d)
        unit = d / norm if norm > ZERO_ROW_TOL else np.zeros_like(d)
        key = tuple(np.round(unit, 12) + 0.0)
        if key not in vertex_of:
            vertex_of[key] = solve(LPProblem(unit, sys.W.H, sys.W.h)).point
        maximizers.append(vertex_of[key])
        shifts[i] = float(d @ vertex_of[key])

    def sample(t, x, u):
        nominal = H @ (sys.A @ x + sys.B @ u)
        margins = nominal + shifts - h
        return maximizers[int(np.argmax(margins))].copy()

    return sample


def _meal_sampler(sys: LinearSystem, times: tuple, magnitudes: tuple) -> Sampler:
    zero = np.zeros(sys.m_w)
    if not sys.W.contains(zero):
        raise ValueError("meal schedule needs zero disturbance between meals, but 0 is outside W")
    pulses: Dict[int, np.ndarray] = {}
    for t, m in zip(times, magnitudes):
        w = np.atleast_1d(np.asarray(m, dtype=float))
        if len(w) != sys.m_w:
            raise ValueError(f"meal at t={t} has size {len(w)}, W has dimension {sys.m_w}")
        if not sys.W.contains(w):
            raise ValueError(f"meal at t={t} with magnitude {w.tolist()} lies outside W")
        pulses[int(t)] = pulses.get(int(t), zero) + w
        if not sys.W.contains(pulses[int(t)]):
            raise ValueError(f"meals stacked at t={t} exceed W")

    return lambda t, x, u: pulses.get(t, zero).copy()
