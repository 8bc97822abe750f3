"""
Self-Triggered Scheduler
Transmission schedules for the glucose sensor. A schedule is feasible for a
safe time alpha when the sensor transmits at t = 0 and then at least once
every alpha steps; any such schedule keeps the state in the invariant set.
"""

import json
from dataclasses import dataclass
from pathlib import Path
from typing import Dict, List, Optional, Sequence, Union

import numpy as np

from errors import MalformedSequence

# Energy-reduction figure quoted for period-3 transmission; 1 - 1/3 is 0.6667
QUOTED_SAVINGS = 0.6767


def _check_sequence(instants: Sequence[int]) -> List[int]:
    values = [int(t) for t in instants]
    if any(int(t) != t for t in instants):
        raise MalformedSequence("transmission instants must be integers")
    if not values:
        raise MalformedSequence("schedule needs at least one transmission")
    if values[0] < 0:
        raise MalformedSequence("transmission instants must be nonnegative")
    if any(b <= a for a, b in zip(values, values[1:])):
        raise MalformedSequence(f"transmission instants must be strictly increasing: {values}")
    return values


def is_feasible(instants: Sequence[int], alpha: int) -> bool:
    """
    Check a transmission sequence against a safe time interval.

    Args:
        instants: Strictly increasing nonnegative transmission times
        alpha: Safe time interval (positive)

    Returns:
        True iff the first transmission is at t = 0 and no gap exceeds alpha
    """
    if alpha < 1:
        raise ValueError("alpha must be positive")
    values = _check_sequence(instants)
    if values[0] != 0:
        return False
    return all(b - a <= alpha for a, b in zip(values, values[1:]))


@dataclass(frozen=True)
class Schedule:
    """
    Transmission instants together with the alpha they are meant for.

    Construction only checks that the instants are well formed; use
    is_feasible() before trusting a schedule built from outside input.
    """

    instants: tuple
    alpha: int

    def __post_init__(self):
        object.__setattr__(self, "instants", tuple(_check_sequence(self.instants)))
        if int(self.alpha) < 1:
            raise ValueError("alpha must be positive")
        object.__setattr__(self, "alpha", int(self.alpha))

    def is_feasible(self) -> bool:
        return is_feasible(self.instants, self.alpha)

    def gaps(self) -> List[int]:
        return [b - a for a, b in zip(self.instants, self.instants[1:])]

    def transmission_flags(self, horizon: int) -> List[bool]:
        """One flag per step t = 0..horizon-1"""
        flags = [False] * horizon
        for t in self.instants:
            if t < horizon:
                flags[t] = True
        return flags

    def to_dict(self) -> Dict:
        return {"instants": list(self.instants), "alpha": self.alpha}

    @classmethod
    def from_dict(cls, data: Union[Dict, List[int]], alpha: Optional[int] = None) -> "Schedule":
        """Accepts Schedule JSON or a bare list of instants (alpha then required)"""
        if isinstance(data, list):
            if alpha is None:
                raise ValueError("a bare instant list needs an alpha")
            return cls(tuple(data), alpha)
        return cls(tuple(data["instants"]), int(data.get("alpha", alpha or 0)))


def load_schedule(path: Union[str, Path], alpha: int) -> Schedule:
    """Read an explicit schedule from JSON; a bare list takes the given alpha"""
    with open(path, "r", encoding="utf-8") as f:
        return Schedule.from_dict(json.load(f), alpha=alpha)


def periodic_schedule(alpha: int, horizon: int, period: Optional[int] = None) -> Schedule:
    """
    Transmit every `period` steps (default: every alpha steps).

    Args:
        alpha: Safe time interval the schedule is checked against
        horizon: Number of time steps covered
        period: Transmission period, at most alpha

    Returns:
        Schedule {0, period, 2 period, ...} ∩ [0, horizon)
    """
    if horizon < 1:
        raise ValueError("horizon must be positive")
    period = alpha if period is None else int(period)
    if period < 1 or period > alpha:
        raise ValueError(f"period {period} must lie in 1..alpha={alpha}")
    return Schedule(tuple(range(0, horizon, period)), alpha)


def max_sleep_schedule(alpha: int, horizon: int) -> Schedule:
    """Longest certified sleep: one transmission every alpha steps"""
    return periodic_schedule(alpha, horizon)


def random_feasible_schedule(alpha: int, horizon: int, rng: np.random.Generator) -> Schedule:
    """Feasible schedule with gaps drawn uniformly from 1..alpha"""
    if horizon < 1:
        raise ValueError("horizon must be positive")
    instants = []
    t = 0
    while t < horizon:
        instants.append(t)
        t += int(rng.integers(1, alpha + 1))
    return Schedule(tuple(instants), alpha)


def savings(schedule: Schedule, horizon: int) -> float:
    """
    Fraction of time steps without a transmission (energy-reduction proxy).

    Args:
        schedule: Schedule whose instants all lie below horizon
        horizon: Number of time steps

    Returns:
        1 - (number of transmissions) / horizon
    """
    if horizon < 1:
        raise ValueError("horizon must be positive")
    if schedule.instants[-1] >= horizon:
        raise ValueError(f"schedule transmits at t={schedule.instants[-1]} beyond horizon {horizon}")
    return 1.0 - len(schedule.instants) / horizon


# Quick test
if __name__ == "__main__":
    tests = [
        ([0, 2, 4, 7, 10], 3, True),
        ([0, 3, 6, 9, 12], 3, True),
        ([0, 4, 8], 3, False),
        ([1, 2, 3], 3, False),
    ]

    print("Schedule Feasibility Tests:")
    print("=" * 60)
    for instants, alpha, expected in tests:
        result = is_feasible(instants, alpha)
        status = "✅" if result == expected else "❌"
        print(f"{status} {str(instants):20s} alpha={alpha} -> {result}")
    print("=" * 60)

    schedule = periodic_schedule(3, 300)
    print(f"Periodic alpha=3 over 300 steps saves {savings(schedule, 300):.4f} "
          f"(quoted: {QUOTED_SAVINGS})")
