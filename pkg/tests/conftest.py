"""Shared fixtures: the scalar demo plant, the APS model and its invariant set"""

import sys
from pathlib import Path

import numpy as np
import pytest

# Add project root to path
sys.path.insert(0, str(Path(__file__).resolve().parent.parent))

from control.invariant import max_invariant  # noqa: E402
from control.system import LinearSystem, aps_model  # noqa: E402
from geometry.polytope import HPolytope  # noqa: E402

CONFIG_DIR = Path(__file__).resolve().parent.parent / "configs"


def scalar_system(a: float = 0.5, w_upper: float = 0.0) -> LinearSystem:
    """x+ = a x + u + w with X = U = [-1, 1] and W = [0, w_upper]"""
    return LinearSystem(
        A=[[a]],
        B=[[1.0]],
        E=[[1.0]],
        C=[[1.0]],
        X=HPolytope.box([-1.0], [1.0]),
        U=HPolytope.box([-1.0], [1.0]),
        W=HPolytope.box([0.0], [w_upper]),
    )


@pytest.fixture
def scalar():
    return scalar_system()


@pytest.fixture
def unit_interval():
    return HPolytope.box([-1.0], [1.0])


@pytest.fixture(scope="session")
def aps():
    return aps_model()


@pytest.fixture(scope="session")
def aps_invariant(aps):
    """Computed once per session; every APS test shares it"""
    result = max_invariant(aps)
    assert result.converged
    return result


@pytest.fixture(scope="session")
def aps_c_inf(aps_invariant):
    return aps_invariant.set


@pytest.fixture
def rng():
    return np.random.default_rng(2024)


@pytest.fixture(autouse=True)
def _simplex_backend():
    """Tests that switch the LP backend must not leak it"""
    from lp.simplex import get_default_backend, set_default_backend

    backend = get_default_backend()
    yield
    set_default_backend(backend)


@pytest.fixture(scope="session")
def aps_companion():
    """APS model with the companion-form A (bottom row 0, 1, 0)"""
    return aps_model(companion_form=True)


@pytest.fixture(scope="session")
def aps_companion_invariant(aps_companion):
    result = max_invariant(aps_companion)
    assert result.converged
    return result


@pytest.fixture(scope="session")
def aps_companion_c_inf(aps_companion_invariant):
    return aps_companion_invariant.set
