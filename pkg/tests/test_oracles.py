import numpy as np
import pytest

from exactpen.errors import Infeasible, InvalidParameter
from exactpen.oracles import (GridSpec, brute_force_regularized_min, brute_force_support_min,
                              brute_force_surrogate_min, conjugate_by_search, prox_by_grid,
                              scalar_min_by_grid)
from exactpen.scalar_phi import make_phi
from exactpen.vector_surrogates import GroupPartition
from exactpen.verify import standard_phis

TOL = 1e-10


def test_conjugate_by_search_examples(linear, scad):
    assert conjugate_by_search(linear, 2.0) == pytest.approx(1.0, abs=TOL)
    assert conjugate_by_search(scad, 0.4) == pytest.approx(0.0, abs=TOL)
    for phi in standard_phis():
        assert conjugate_by_search(phi, 0.0) == pytest.approx(0.0, abs=TOL)


def test_conjugate_by_search_vectorized(scad):
    s = np.array([-1.0, 0.4, 2.0, 5.0])
    scalar = [conjugate_by_search(scad, v) for v in s]
    assert conjugate_by_search(scad, s) == pytest.approx(scalar, abs=1e-14)


def test_scalar_min_by_grid_examples(linear):
    grid = GridSpec(0.0, 1.0, 10001)
    assert scalar_min_by_grid(linear, 0.5, grid) == pytest.approx(0.5, abs=1e-4)
    assert scalar_min_by_grid(linear, 2.0, grid) == pytest.approx(1.0, abs=1e-4)
    assert scalar_min_by_grid(linear, 0.0, grid) == pytest.approx(0.0, abs=1e-4)


def test_prox_by_grid_examples():
    g = GridSpec(-1.5, 1.5, 30001)
    assert prox_by_grid(1.0, 3.0, 1.5, g) == pytest.approx(1.5, abs=g.step)
    g = GridSpec(-10, 10, 200001)
    assert prox_by_grid(1.0, 0.5, 10.0, g) == pytest.approx(0.0, abs=g.step)
    assert prox_by_grid(0.0, 0.7, 10.0, g) == pytest.approx(0.7, abs=g.step)


def test_grid_spec_validation():
    with pytest.raises(InvalidParameter):
        GridSpec(1.0, 0.0, 10)
    with pytest.raises(InvalidParameter):
        GridSpec(0.0, 1.0, 1)


def test_support_min_examples():
    part = GroupPartition.singletons(2)
    support, count = brute_force_support_min(np.eye(2), np.array([1.0, 0.0]), 0.1, part)
    assert count == 1 and support == (0,)  # coordinate "1" in 1-based numbering
    assert brute_force_support_min(np.eye(2), np.zeros(2), 0.0, part) == ((), 0)
    assert brute_force_support_min(np.eye(2), np.ones(2), 0.0, part)[1] == 2


def test_support_min_infeasible():
    A = np.array([[1.0], [1.0]])
    with pytest.raises(Infeasible):
        brute_force_support_min(A, np.array([1.0, -1.0]), 0.1, GroupPartition.singletons(1))


def test_regularized_min_gap():
    part = GroupPartition.singletons(2)
    x, support, best, runner = brute_force_regularized_min(np.eye(2), np.array([10.0, 0.01]),
                                                           1.0, part)
    assert support == (0,)
    assert x == pytest.approx([10.0, 0.0])
    assert best == pytest.approx(1 + 0.5e-4)
    assert runner > best


def test_surrogate_min_quadratic():
    x, v = brute_force_surrogate_min(lambda P: np.sum(P * P, axis=1), GridSpec(-1, 1, 201), 2)
    assert np.allclose(x, 0.0) and v == 0.0


def test_surrogate_min_symmetric_minima():
    def f(P):
        return (P[:, 0] ** 2 - 0.25) ** 2
    x, v = brute_force_surrogate_min(f, GridSpec(-1, 1, 201), 1)
    assert abs(x[0]) == pytest.approx(0.5) and v == pytest.approx(0.0, abs=1e-15)


def test_surrogate_min_pointwise_matches_vectorized():
    def f(P):
        P = np.atleast_2d(P)
        return np.sum((P - [0.3, -0.2]) ** 2, axis=1)
    g = GridSpec(-1, 1, 41)
    xv, vv = brute_force_surrogate_min(f, g, 2)
    xp, vp = brute_force_surrogate_min(lambda p: f(p)[0], g, 2, vectorized=False)
    assert np.array_equal(xv, xp) and vv == vp


def test_surrogate_min_dimension_cap():
    with pytest.raises(InvalidParameter):
        brute_force_surrogate_min(lambda P: P.sum(1), GridSpec(0, 1, 3), 4)
