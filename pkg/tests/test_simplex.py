import numpy as np
import pytest

from errors import DimensionMismatch
from lp.simplex import (
    LPProblem,
    LPSolution,
    LPStatus,
    get_default_backend,
    is_feasible_system,
    maximize,
    set_default_backend,
    solve,
)
from tests.oracles import lp_max, random_polytope


@pytest.mark.parametrize(
    "c, A, b, status, value",
    [
        ([1.0], [[1.0], [-1.0]], [1.0, 1.0], LPStatus.OPTIMAL, 1.0),
        ([1.0], [[1.0], [-1.0]], [1.0, -2.0], LPStatus.INFEASIBLE, None),
        ([1.0, 1.0], [[1, 0], [0, 1], [-1, 0], [0, -1]], [3, 4, 0, 0], LPStatus.OPTIMAL, 7.0),
        ([2.0, 1.0], [[-1, 0], [0, -1], [1, 1]], [0, 0, 1], LPStatus.OPTIMAL, 2.0),
    ],
)
def test_small_lps(c, A, b, status, value):
    result = solve(LPProblem(c, A, b))
    assert result.status is status
    assert result.is_optimal is (status is LPStatus.OPTIMAL)
    if value is not None:
        assert result.value == pytest.approx(value, abs=1e-9)


def test_box_support_point():
    result = maximize([1.0], [[1.0], [-1.0]], [1.0, 1.0])
    np.testing.assert_allclose(result.point, [1.0], atol=1e-9)


def test_triangle_maximizer_is_the_vertex():
    result = maximize([2.0, 1.0], [[-1, 0], [0, -1], [1, 1]], [0, 0, 1])
    np.testing.assert_allclose(result.point, [1.0, 0.0], atol=1e-9)


def test_unbounded_ray():
    result = maximize([1.0, 0.0], [[-1.0, 0.0], [0.0, 1.0], [0.0, -1.0]], [0.0, 1.0, 1.0])
    assert result.status is LPStatus.UNBOUNDED
    assert result.value is None


def test_infeasible_with_zero_objective():
    result = maximize([0.0, 0.0], [[1.0, 0.0], [-1.0, 0.0]], [-1.0, -1.0])
    assert result.status is LPStatus.INFEASIBLE


def test_no_constraints():
    assert maximize([1.0], np.zeros((0, 1)), []).status is LPStatus.UNBOUNDED
    result = maximize([0.0, 0.0], np.zeros((0, 2)), [])
    assert result.status is LPStatus.OPTIMAL
    assert result.value == 0.0


def test_degenerate_vertex():
    # Three constraints active at the optimum (1, 1) in the plane
    A = [[1, 0], [0, 1], [1, 1], [-1, 0], [0, -1]]
    b = [1, 1, 2, 0, 0]
    result = maximize([1.0, 1.0], A, b)
    assert result.value == pytest.approx(2.0, abs=1e-9)


def test_shape_validation():
    with pytest.raises(DimensionMismatch):
        LPProblem([1.0, 2.0], [[1.0]], [1.0])
    with pytest.raises(ValueError):
        LPProblem([1.0], [[np.inf]], [1.0])


def test_is_feasible_system():
    assert is_feasible_system(np.array([[1.0], [-1.0]]), np.array([0.0, 0.0]))
    assert not is_feasible_system(np.array([[1.0], [-1.0]]), np.array([-1.0, -1.0]))


@pytest.mark.parametrize("dim", [1, 2, 3])
def test_random_lps_match_vertex_enumeration(dim):
    rng = np.random.default_rng(100 + dim)
    for _ in range(25):
        H, h = random_polytope(rng, dim, extra_rows=4)
        c = rng.standard_normal(dim)
        result = solve(LPProblem(c, H, h))

        assert result.status is LPStatus.OPTIMAL
        tol = 1e-9 * (1.0 + np.max(np.abs(h)))
        assert np.all(H @ result.point <= h + tol)
        assert result.value == pytest.approx(c @ result.point, abs=tol)
        assert result.value == pytest.approx(lp_max(c, H, h), abs=1e-7)


def test_random_lps_match_highs():
    rng = np.random.default_rng(7)
    for _ in range(30):
        dim = int(rng.integers(2, 6))
        H, h = random_polytope(rng, dim, extra_rows=8)
        c = rng.standard_normal(dim)
        ours = solve(LPProblem(c, H, h))
        theirs = solve(LPProblem(c, H, h), backend="highs")
        assert ours.status is theirs.status is LPStatus.OPTIMAL
        assert ours.value == pytest.approx(theirs.value, abs=1e-7)


def test_highs_classifies_like_simplex():
    infeasible = LPProblem([1.0], [[1.0], [-1.0]], [1.0, -2.0])
    unbounded = LPProblem([1.0], [[-1.0]], [0.0])
    assert solve(infeasible, backend="highs").status is LPStatus.INFEASIBLE
    assert solve(unbounded, backend="highs").status is LPStatus.UNBOUNDED


def test_deterministic():
    rng = np.random.default_rng(11)
    H, h = random_polytope(rng, 3, extra_rows=10)
    c = rng.standard_normal(3)
    first = solve(LPProblem(c, H, h))
    second = solve(LPProblem(c, H, h))
    assert first.value == second.value
    assert np.array_equal(first.point, second.point)


def test_default_backend_switch():
    set_default_backend("highs")
    assert get_default_backend() == "highs"
    result = maximize([1.0], [[1.0], [-1.0]], [1.0, 1.0])
    assert result.value == pytest.approx(1.0)
    with pytest.raises(ValueError):
        set_default_backend("glpk")


@pytest.mark.parametrize("backend", ["simplex", "highs"])
def test_is_feasible_system_backends_agree(backend):
    rng = np.random.default_rng(13)
    for _ in range(20):
        H, h = random_polytope(rng, 3, extra_rows=5)
        assert is_feasible_system(H, h, backend=backend)
        assert not is_feasible_system(np.vstack([H, [[1.0, 0.0, 0.0]]]), np.r_[h, -5.0], backend=backend)


def test_is_feasible_system_follows_the_default_backend(monkeypatch):
    import lp.highs

    calls = []

    def fake_highs(problem):
        calls.append(problem)
        return LPSolution(LPStatus.INFEASIBLE)

    monkeypatch.setattr(lp.highs, "solve_highs", fake_highs)
    set_default_backend("highs")
    assert not is_feasible_system(np.array([[1.0]]), np.array([1.0]))
    assert len(calls) == 1
