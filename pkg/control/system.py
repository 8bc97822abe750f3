"""
Linear System
The constrained, disturbed discrete plant

    x_{t+1} = A x_t + B u_t + E w_t,    y_t = C x_t,
    x_t in X,  u_t in U,  w_t in W,

and the insulin-glucose deviation model of the artificial pancreas.
"""

import json
from dataclasses import dataclass, replace
from pathlib import Path
from typing import Dict, Sequence, Union

import numpy as np

from errors import DimensionMismatch, EmptySet
from geometry.polytope import HPolytope

# Insulin-glucose model: deviations from basal insulin rate and 110 mg/dL
APS_GAIN = -2.0
APS_POLES = (0.98, 0.965, 0.965)
APS_INPUT_BOUNDS = (-10.0, 100.0)
APS_STATE_BOUND = 30.0
APS_DISTURBANCE_BOUNDS = (0.0, 10.0)


def _as_matrix(value, rows: int = None, name: str = "matrix") -> np.ndarray:
    M = np.array(value, dtype=float)
    if M.ndim == 1:
        # Column vector for B/E, row vector for C
        M = M.reshape(rows, -1) if rows is not None else M.reshape(1, -1)
    if M.ndim != 2:
        raise DimensionMismatch(f"{name} must be two-dimensional, got shape {M.shape}")
    M.setflags(write=False)
    return M


@dataclass(frozen=True, eq=False)
class LinearSystem:
    """Plant matrices plus state, input and disturbance constraint sets"""

    A: np.ndarray
    B: np.ndarray
    E: np.ndarray
    C: np.ndarray
    X: HPolytope
    U: HPolytope
    W: HPolytope
    sample_minutes: float = 5.0

    def __post_init__(self):
        A = _as_matrix(self.A, name="A")
        n = A.shape[0]
        if A.shape != (n, n):
            raise DimensionMismatch(f"A must be square, got {A.shape}")
        B = _as_matrix(self.B, rows=n, name="B")
        E = _as_matrix(self.E, rows=n, name="E")
        C = _as_matrix(self.C, name="C")
        if B.shape[0] != n or E.shape[0] != n:
            raise DimensionMismatch(f"B {B.shape} and E {E.shape} need {n} rows")
        if C.shape[1] != n:
            raise DimensionMismatch(f"C {C.shape} needs {n} columns")

        for name, P, dim in (("X", self.X, n), ("U", self.U, B.shape[1]), ("W", self.W, E.shape[1])):
            if P.dim != dim:
                raise DimensionMismatch(f"{name} has dimension {P.dim}, expected {dim}")
            if P.is_empty():
                raise EmptySet(f"constraint set {name} is empty")
            if not P.is_bounded():
                raise ValueError(f"constraint set {name} is unbounded")

        object.__setattr__(self, "A", A)
        object.__setattr__(self, "B", B)
        object.__setattr__(self, "E", E)
        object.__setattr__(self, "C", C)

    @property
    def n(self) -> int:
        return self.A.shape[0]

    @property
    def m_u(self) -> int:
        return self.B.shape[1]

    @property
    def m_w(self) -> int:
        return self.E.shape[1]

    @property
    def p(self) -> int:
        return self.C.shape[0]

    def step(self, x: Sequence[float], u: Sequence[float], w: Sequence[float]) -> np.ndarray:
        """
        One step of the dynamics.

        Args:
            x: State (length n)
            u: Input (length m_u)
            w: Disturbance (length m_w)

        Returns:
            A x + B u + E w
        """
        x = self._vector(x, self.n, "state")
        u = self._vector(u, self.m_u, "input")
        w = self._vector(w, self.m_w, "disturbance")
        return self.A @ x + self.B @ u + self.E @ w

    def output(self, x: Sequence[float]) -> np.ndarray:
        """Measured output C x (glucose deviation for the APS model)"""
        return self.C @ self._vector(x, self.n, "state")

    @staticmethod
    def _vector(value, length: int, name: str) -> np.ndarray:
        v = np.asarray(value, dtype=float).reshape(-1)
        if len(v) != length:
            raise DimensionMismatch(f"{name} has length {len(v)}, expected {length}")
        return v

    def with_matrix(self, **matrices) -> "LinearSystem":
        """Copy with some matrices replaced"""
        return replace(self, **matrices)

    def to_dict(self) -> Dict:
        return {
            "A": self.A.tolist(),
            "B": self.B.tolist(),
            "E": self.E.tolist(),
            "C": self.C.tolist(),
            "X": self.X.to_dict(),
            "U": self.U.to_dict(),
            "W": self.W.to_dict(),
            "sample_minutes": float(self.sample_minutes),
        }

    @classmethod
    def from_dict(cls, data: Dict) -> "LinearSystem":
        missing = [k for k in ("A", "B", "E", "C", "X", "U", "W") if k not in data]
        if missing:
            raise ValueError(f"system JSON is missing fields: {', '.join(missing)}")
        return cls(
            A=data["A"],
            B=data["B"],
            E=data["E"],
            C=data["C"],
            X=HPolytope.from_dict(data["X"]),
            U=HPolytope.from_dict(data["U"]),
            W=HPolytope.from_dict(data["W"]),
            sample_minutes=float(data.get("sample_minutes", 5.0)),
        )


def load_system(path: Union[str, Path]) -> LinearSystem:
    """Read a LinearSystem from its JSON description"""
    with open(path, "r", encoding="utf-8") as f:
        return LinearSystem.from_dict(json.load(f))


def aps_coefficients():
    """
    Characteristic coefficients (a1, a2, a3) of the insulin-glucose model:
    a1 = -0.965*2 - 0.98, a2 = 2*0.98*0.965 + 0.965^2, a3 = -0.98*0.965^2.
    """
    p1, p2, _ = APS_POLES
    a1 = -p2 * 2 - p1
    a2 = 2 * p1 * p2 + p2 ** 2
    a3 = -p1 * p2 ** 2
    return a1, a2, a3


def aps_model(companion_form: bool = False, sample_minutes: float = 5.0) -> LinearSystem:
    """
    Third-order insulin-glucose deviation model of the artificial pancreas.

    Args:
        companion_form: Use bottom row (0, 1, 0) instead of the printed (0, 1, 1)
        sample_minutes: Display-only sampling period

    Returns:
        LinearSystem with X = [-30, 30]^3, U = [-10, 100], W = [0, 10]
    """
    a1, a2, a3 = aps_coefficients()
    A = np.array([
        [-a1, -a2, -a3],
        [1.0, 0.0, 0.0],
        [0.0, 1.0, 0.0 if companion_form else 1.0],
    ])
    B = np.array([[APS_GAIN], [0.0], [0.0]])
    E = np.array([[0.0], [0.0], [1.0]])
    C = np.array([[0.0, 0.0, 1.0]])

    bound = APS_STATE_BOUND
    return LinearSystem(
        A=A,
        B=B,
        E=E,
        C=C,
        X=HPolytope.box([-bound] * 3, [bound] * 3),
        U=HPolytope.box([APS_INPUT_BOUNDS[0]], [APS_INPUT_BOUNDS[1]]),
        W=HPolytope.box([APS_DISTURBANCE_BOUNDS[0]], [APS_DISTURBANCE_BOUNDS[1]]),
        sample_minutes=sample_minutes,
    )


# Quick test
if __name__ == "__main__":
    sys_aps = aps_model()
    print("APS model:")
    print(f"  A =\n{sys_aps.A}")
    print(f"  B = {sys_aps.B.ravel()}")
    print(f"  step(e1, 0, 0) = {sys_aps.step([1, 0, 0], [0], [0])}")
    print(f"  output((5, 7, 9)) = {sys_aps.output([5, 7, 9])}")
