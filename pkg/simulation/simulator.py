"""
Self-Triggered Simulator
Closed-loop runs of the self-triggered artificial pancreas. At every
transmission the controller reads the true state, plans an input sequence
certified against every disturbance until the next transmission, and
replays it open loop while the sensor sleeps.
"""

import logging
from dataclasses import dataclass, field
from typing import Dict, Iterable, List, Optional, Sequence

import numpy as np
from tqdm import tqdm

from control.safetime import build_stacked, fixed_x0_problem, tighten
from control.system import LinearSystem
from errors import Infeasible, SafetyViolation
from geometry.polytope import HPolytope
from lp.simplex import LPProblem, solve
from scheduling.scheduler import Schedule, random_feasible_schedule
from simulation.disturbances import DisturbanceGenerator

logger = logging.getLogger(__name__)

PLAN_TOL = 1e-7


@dataclass
class Trajectory:
    """Everything recorded during one closed-loop run"""

    states: List[np.ndarray] = field(default_factory=list)
    outputs: List[np.ndarray] = field(default_factory=list)
    inputs: List[np.ndarray] = field(default_factory=list)
    disturbances: List[np.ndarray] = field(default_factory=list)
    transmitted: List[bool] = field(default_factory=list)

    @property
    def horizon(self) -> int:
        return len(self.inputs)

    def summary(self) -> Dict:
        outputs = np.array(self.outputs)
        inputs = np.array(self.inputs) if self.inputs else np.zeros((0, 1))
        return {
            "horizon": self.horizon,
            "transmissions": int(sum(self.transmitted)),
            "min_glucose_deviation": float(outputs.min()),
            "max_glucose_deviation": float(outputs.max()),
            "min_input": float(inputs.min()) if len(inputs) else None,
            "max_input": float(inputs.max()) if len(inputs) else None,
        }

    def to_dict(self) -> Dict:
        return {
            "states": [x.tolist() for x in self.states],
            "outputs": [y.tolist() for y in self.outputs],
            "inputs": [u.tolist() for u in self.inputs],
            "disturbances": [w.tolist() for w in self.disturbances],
            "transmitted": list(self.transmitted),
        }


class InputCertifier:
    """
    Tightened stacked systems of one plant and invariant set, built once
    per horizon and shared by every plan of a run (or of many runs).
    """

    def __init__(self, sys: LinearSystem, c_inf: HPolytope):
        self.sys = sys
        self.c_inf = c_inf
        box = np.array(sys.U.bounding_box())
        self._u_lower, self._u_upper = box[:, 0], box[:, 1]
        self._tightened: Dict[int, HPolytope] = {}

    def tightened(self, j: int) -> HPolytope:
        if j not in self._tightened:
            self._tightened[j] = tighten(build_stacked(self.sys, self.c_inf, j), self.sys.W)
        return self._tightened[j]

    def problem(self, x0: Sequence[float], j: int) -> HPolytope:
        """Input sequences certifying x0 for j steps, as a polytope in u_hat"""
        Q = fixed_x0_problem(self.sys, self.c_inf, j, x0, tightened=self.tightened(j))

        # Rows that hold on the whole input box are implied by the box rows
        lower, upper = np.tile(self._u_lower, j), np.tile(self._u_upper, j)
        worst = np.maximum(Q.H, 0.0) @ upper + np.minimum(Q.H, 0.0) @ lower
        needed = worst > Q.h
        k = Q.dim
        return HPolytope(
            np.vstack([Q.H[needed], np.eye(k), -np.eye(k)]),
            np.concatenate([Q.h[needed], upper, -lower]),
        )


def plan_inputs(
    sys: LinearSystem,
    c_inf: HPolytope,
    x0: Sequence[float],
    j: int,
    certifier: Optional[InputCertifier] = None,
) -> np.ndarray:
    """
    L1-minimal open-loop input sequence certifying j steps from x0.

    Solves the tightened stacked system with x0 fixed, minimizing
    sum |u_t| through the usual split -s <= u <= s.

    Args:
        sys: The plant
        c_inf: Invariant set the states must stay in
        x0: Measured state at the transmission instant
        j: Number of steps until the next transmission
        certifier: Cached stacked systems for (sys, c_inf); built on the fly if omitted

    Returns:
        Array of shape (j, m_u)

    Raises:
        Infeasible: x0 is outside c_inf or outside X_j
    """
    x0 = np.asarray(x0, dtype=float).reshape(-1)
    if not c_inf.contains(x0):
        raise Infeasible(f"state {x0.tolist()} is outside the invariant set")

    if certifier is None:
        certifier = InputCertifier(sys, c_inf)
    Q = certifier.problem(x0, j)
    k = Q.dim

    # Step 1: L1-minimal certified sequence
    eye = np.eye(k)
    A = np.vstack([
        np.hstack([Q.H, np.zeros((Q.num_rows, k))]),
        np.hstack([eye, -eye]),
        np.hstack([-eye, -eye]),
    ])
    b = np.concatenate([Q.h, np.zeros(2 * k)])
    objective = np.concatenate([np.zeros(k), -np.ones(k)])
    result = solve(LPProblem(objective, A, b))
    if result.is_optimal:
        return result.point[:k].reshape(j, sys.m_u)

    # Step 2: x0 sits on the boundary up to round-off; take the sequence
    # with the largest uniform margin and accept it if the deficit is tiny
    A = np.hstack([Q.H, -np.ones((Q.num_rows, 1))])
    objective = np.concatenate([np.zeros(k), [-1.0]])
    result = solve(LPProblem(objective, A, Q.h))
    tol = PLAN_TOL * (1.0 + np.max(np.abs(Q.h)))
    if not result.is_optimal or result.point[-1] > tol:
        raise Infeasible(f"no admissible {j}-step input sequence from {x0.tolist()}")
    logger.debug("boundary start %s: margin plan with deficit %.2e", x0.tolist(), result.point[-1])
    return result.point[:k].reshape(j, sys.m_u)


def run(
    sys: LinearSystem,
    c_inf: HPolytope,
    schedule: Schedule,
    gen: DisturbanceGenerator,
    horizon: int,
    x0: Sequence[float],
    certifier: Optional[InputCertifier] = None,
) -> Trajectory:
    """
    Simulate the self-triggered loop.

    Each transmission plans min(gap, alpha) inputs; if a gap is longer than
    the schedule's alpha the last planned input is held for the rest of it.

    Args:
        sys: The plant
        c_inf: Certified invariant set
        schedule: Transmission instants (first one must be 0)
        gen: Disturbance policy
        horizon: Number of steps T
        x0: Initial state in c_inf
        certifier: Shared stacked-system cache (one is built if omitted)

    Returns:
        Trajectory with T+1 states and T inputs

    Raises:
        SafetyViolation: a state left c_inf
        Infeasible: propagated from plan_inputs
    """
    if horizon < 1:
        raise ValueError("horizon must be positive")
    instants = [t for t in schedule.instants if t < horizon]
    if not instants or instants[0] != 0:
        raise ValueError("schedule must transmit at t = 0")

    sample = gen.bind(sys, c_inf)
    if certifier is None:
        certifier = InputCertifier(sys, c_inf)
    flags = schedule.transmission_flags(horizon)

    x = np.asarray(x0, dtype=float).reshape(-1)
    traj = Trajectory(states=[x], outputs=[sys.output(x)])

    boundaries = instants + [horizon]
    for start, stop in zip(boundaries, boundaries[1:]):
        gap = stop - start
        j = min(gap, schedule.alpha)
        plan = plan_inputs(sys, c_inf, x, j, certifier)
        logger.debug("t=%d: transmission, planned %d inputs for a gap of %d", start, j, gap)

        for s in range(gap):
            t = start + s
            u = plan[min(s, j - 1)]
            w = np.asarray(sample(t, x, u), dtype=float)
            x = sys.step(x, u, w)

            traj.inputs.append(u)
            traj.disturbances.append(w)
            traj.transmitted.append(flags[t])
            traj.states.append(x)
            traj.outputs.append(sys.output(x))

            if not c_inf.contains(x):
                raise SafetyViolation(t + 1, x)

    return traj


def monte_carlo(
    sys: LinearSystem,
    c_inf: HPolytope,
    alpha: int,
    horizon: int,
    starts: Iterable[Sequence[float]],
    seeds: Sequence[int],
    schedules_per_seed: int = 1,
    kind: str = "worst",
) -> Dict:
    """
    Run random feasible schedules from many initial states and count
    safety violations.

    Returns:
        {"runs": int, "violations": int, "first_violation": {...} or None}
    """
    starts = [np.asarray(x, dtype=float) for x in starts]
    runs, violations = 0, 0
    first: Optional[Dict] = None
    certifier = InputCertifier(sys, c_inf)
    show_progress = logger.isEnabledFor(logging.INFO)

    for seed in tqdm(seeds, desc="monte carlo", disable=not show_progress):
        rng = np.random.default_rng(seed)
        gen = DisturbanceGenerator(kind=kind, seed=int(seed))
        for _ in range(schedules_per_seed):
            schedule = random_feasible_schedule(alpha, horizon, rng)
            for x0 in starts:
                runs += 1
                try:
                    run(sys, c_inf, schedule, gen, horizon, x0, certifier)
                except SafetyViolation as e:
                    violations += 1
                    if first is None:
                        first = {"seed": int(seed), "t": e.t, "state": e.state, "x0": x0.tolist()}

    return {"runs": runs, "violations": violations, "first_violation": first}
