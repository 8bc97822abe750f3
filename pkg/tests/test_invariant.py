import numpy as np
import pytest

from control.invariant import (
    InvariantResult,
    disturbance_tightening,
    invariance_certificate,
    max_invariant,
    one_step_feasible,
    pre_robust,
)
from control.system import LinearSystem
from errors import EmptyInvariant
from geometry.polytope import HPolytope
from geometry.sampling import boundary_samples, chebyshev_center, hit_and_run
from lp.simplex import set_default_backend
from tests.conftest import scalar_system


def interval(lo, hi):
    return HPolytope.box([lo], [hi])


def autonomous(a: float) -> LinearSystem:
    """x+ = a x with U = W = {0}"""
    return LinearSystem(
        A=[[a]], B=[[0.0]], E=[[1.0]], C=[[1.0]],
        X=interval(-1, 1), U=interval(0, 0), W=interval(0, 0),
    )


# ----------------------------------------------------------------------
# pre_robust

def test_pre_of_scalar_system(scalar):
    # 0.5 x + u in [-1, 1] for some u in [-1, 1]  <=>  0.5 x in [-2, 2]
    assert pre_robust(scalar, interval(-1, 1)).equals(interval(-4, 4))


def test_pre_with_zero_disturbance_is_nominal(scalar):
    # No erosion: 0.5 x in [-0.5 - 1, 0.75 + 1]
    assert pre_robust(scalar, interval(-0.5, 0.75)).equals(interval(-3.0, 3.5))


def test_pre_without_input_is_preimage():
    sys = autonomous(2.0)
    assert pre_robust(sys, sys.X).equals(sys.X.affine_preimage(sys.A))
    assert pre_robust(sys, sys.X).equals(interval(-0.5, 0.5))


def test_pre_erodes_by_disturbance():
    # 0.5 x + u + w in [-1, 1] for all w in [0, 0.5]  <=>  0.5 x + u in [-1, 0.5]
    sys = scalar_system(w_upper=0.5)
    assert pre_robust(sys, interval(-1, 1)).equals(interval(-4, 3))


# ----------------------------------------------------------------------
# max_invariant

def test_scalar_invariant_converges_immediately(scalar):
    result = max_invariant(scalar)
    assert result.converged
    assert result.iterations == 1
    assert result.set.equals(interval(-1, 1))


def test_unstable_autonomous_system_does_not_converge():
    result = max_invariant(autonomous(2.0), max_iter=10)
    assert not result.converged
    assert result.iterations == 10
    assert result.set.equals(interval(-2.0 ** -10, 2.0 ** -10))


def test_empty_invariant():
    # The disturbance alone pushes every state out of X
    sys = LinearSystem(
        A=[[1.0]], B=[[1.0]], E=[[1.0]], C=[[1.0]],
        X=interval(-1, 1), U=interval(-0.1, 0.1), W=interval(2.5, 3.0),
    )
    with pytest.raises(EmptyInvariant):
        max_invariant(sys)


def test_max_iter_validation(scalar):
    with pytest.raises(ValueError):
        max_invariant(scalar, max_iter=0)


def test_iterates_shrink_monotonically():
    sys = LinearSystem(
        A=[[1.2, 0.5], [0.0, 1.1]], B=[[0.0], [1.0]], E=[[1.0], [0.0]], C=[[1.0, 0.0]],
        X=HPolytope.box([-5, -5], [5, 5]),
        U=interval(-1, 1),
        W=interval(-0.1, 0.1),
    )
    omega = sys.X
    for _ in range(6):
        following = pre_robust(sys, omega).intersect(sys.X).remove_redundancies()
        assert following.is_subset(omega)
        omega = following


def test_result_json_round_trip(scalar):
    result = max_invariant(scalar)
    loaded = InvariantResult.from_dict(result.to_dict())
    assert loaded.converged and loaded.iterations == result.iterations
    assert loaded.set.equals(result.set)


def test_certificate_on_scalar(scalar):
    c_inf = max_invariant(scalar).set
    points = np.linspace(-1, 1, 21).reshape(-1, 1)
    assert invariance_certificate(scalar, c_inf, points) == []
    assert not one_step_feasible(autonomous(2.0), interval(-1, 1), [0.9])


# ----------------------------------------------------------------------
# artificial pancreas

@pytest.mark.slow
def test_aps_invariant_set(aps, aps_invariant):
    assert aps_invariant.converged
    assert not aps_invariant.set.is_empty()
    assert aps_invariant.set.is_subset(aps.X)
    assert aps_invariant.set.is_bounded()


@pytest.mark.slow
def test_aps_invariant_is_a_fixpoint(aps, aps_c_inf):
    following = pre_robust(aps, aps_c_inf).intersect(aps.X)
    assert following.equals(aps_c_inf)


@pytest.mark.slow
def test_aps_invariance_certificate(aps, aps_c_inf):
    rng = np.random.default_rng(500)
    interior = hit_and_run(aps_c_inf, 400, rng)
    boundary = boundary_samples(aps_c_inf, 100, rng)
    assert invariance_certificate(aps, aps_c_inf, np.vstack([interior, boundary])) == []


@pytest.mark.slow
def test_aps_points_outside_are_not_invariant(aps, aps_c_inf):
    rng = np.random.default_rng(501)
    center, _ = chebyshev_center(aps_c_inf)
    outside = []
    for x in boundary_samples(aps_c_inf, 200, rng, margin=0.0):
        y = center + 1.05 * (x - center)
        if aps.X.contains(y) and not aps_c_inf.contains(y, tol=1e-4):
            outside.append(y)
    assert outside
    assert len(invariance_certificate(aps, aps_c_inf, np.array(outside))) == len(outside)


def test_disturbance_tightening_matches_row_supports(aps):
    H = np.vstack([aps.X.H, 3.0 * aps.X.H, np.zeros((1, 3))])
    expected = [aps.W.support(aps.E.T @ row) if np.any(row @ aps.E) else 0.0 for row in H]
    np.testing.assert_allclose(disturbance_tightening(aps, H), expected)


@pytest.mark.slow
def test_companion_aps_invariant_is_a_fixpoint(aps_companion, aps_companion_invariant):
    c_inf = aps_companion_invariant.set
    assert c_inf.is_subset(aps_companion.X)
    following = pre_robust(aps_companion, c_inf).intersect(aps_companion.X)
    assert following.equals(c_inf)


@pytest.mark.slow
def test_aps_invariant_under_highs_matches_simplex(aps, aps_c_inf):
    set_default_backend("highs")
    result = max_invariant(aps)
    assert result.converged
    assert result.set.equals(aps_c_inf)
