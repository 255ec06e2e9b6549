import json
import math
import warnings

import numpy as np
import pytest

from exactpen.errors import DomainError, MaxIterReached
from exactpen.matrix_surrogates import spectral_norm
from exactpen.solver import (DecompositionInstance, Schedule, SolverOptions, apg_subproblem,
                             default_schedule, gep_mscra, numerical_rank, subproblem_objective)


def _random_instance(rng, n1=15, n2=20, r=2):
    L = rng.normal(size=(n1, r)) @ rng.normal(size=(r, n2))
    S = np.where(rng.random((n1, n2)) < 0.05, rng.uniform(-5, 5, (n1, n2)), 0.0)
    return L + S + 0.01 * rng.normal(size=(n1, n2))


def test_apg_zero_data():
    Z = np.zeros((3, 4))
    res = apg_subproblem(Z, Z, Z, 1.0, 1.0, 10.0, 10.0)
    assert np.all(res.X == 0) and np.all(res.Y == 0) and res.converged


def test_apg_scalar_reduction():
    one = np.zeros((1, 1))
    res = apg_subproblem(np.array([[2.0]]), one, one, 1.0, 1.0, 100.0, 100.0)
    assert res.objective == pytest.approx(1.5, abs=1e-6)
    assert (res.X + res.Y)[0, 0] == pytest.approx(1.0, abs=1e-5)


def test_apg_large_weights_give_zero(rng):
    M = rng.normal(size=(5, 6))
    Z = np.zeros_like(M)
    lam = 1.01 * spectral_norm(M)
    mu = 1.01 * np.max(np.abs(M))
    res = apg_subproblem(M, Z, Z, lam, mu, 100.0, 100.0)
    assert np.abs(res.X).max() <= 1e-8 and np.abs(res.Y).max() <= 1e-8


def test_apg_certificate_and_objective_bound(rng):
    M = _random_instance(rng)
    Z = np.zeros_like(M)
    opts = SolverOptions(inner_tol=1e-7)
    res = apg_subproblem(M, Z, Z, 2.0, 0.3, 50.0, 20.0, opts)
    assert res.converged
    norm = math.sqrt(np.sum(res.X ** 2) + np.sum(res.Y ** 2))
    assert res.fixed_point_residual <= opts.inner_tol * (1 + norm) + 1e-15
    assert res.objective <= subproblem_objective(Z, Z, M, Z, Z, 2.0, 0.3)


def test_apg_respects_boxes(rng):
    M = 10 * rng.normal(size=(6, 6))
    Z = np.zeros_like(M)
    res = apg_subproblem(M, Z, Z, 0.1, 0.1, 1.0, 0.5)
    assert spectral_norm(res.X) <= 1.0 + 1e-8
    assert np.abs(res.Y).max() <= 0.5 + 1e-12


def test_apg_negative_weights_rejected():
    Z = np.zeros((2, 2))
    with pytest.raises(DomainError):
        apg_subproblem(Z, Z, 2 * np.ones((2, 2)), 1.0, 1.0, 1.0, 1.0)


def test_apg_max_iter_warns(rng):
    M = _random_instance(rng)
    Z = np.zeros_like(M)
    with pytest.warns(MaxIterReached):
        res = apg_subproblem(M, Z, Z, 1.0, 0.1, 50, 50, SolverOptions(inner_max_iter=2))
    assert not res.converged and res.iterations == 2


def test_gep_zero_matrix():
    rep = gep_mscra(DecompositionInstance(np.zeros((6, 6)), 1.0, 1.0))
    assert np.all(rep.X_hat == 0) and np.all(rep.Y_hat == 0)
    assert 1 <= rep.outer_iters <= 2
    assert rep.degenerate_rho and "degenerate_rho" in rep.flags


def test_gep_determinism(rng):
    M = _random_instance(rng)
    a = gep_mscra(DecompositionInstance(M, 100.0, 50.0))
    b = gep_mscra(DecompositionInstance(M, 100.0, 50.0))
    assert np.array_equal(a.X_hat, b.X_hat) and np.array_equal(a.Y_hat, b.Y_hat)
    ja, jb = a.to_json(), b.to_json()
    ja.pop("wall_time_seconds"), jb.pop("wall_time_seconds")
    assert ja == jb


def test_gep_invariants(rng):
    M = _random_instance(rng)
    rep = gep_mscra(DecompositionInstance(M, 100.0, 50.0))
    assert rep.certificates_ok
    assert rep.final_rank == 2
    assert len(rep.rank_history) == rep.outer_iters == len(rep.residual_history)
    assert all(b > a for a, b in zip(rep.rho_tilde_history, rep.rho_tilde_history[1:]))
    assert len(set(rep.rho_history)) == 1
    json.dumps(rep.to_json())


def test_gep_tall_input_matches_transpose(rng):
    M = _random_instance(rng, 20, 12)
    a = gep_mscra(DecompositionInstance(M, 100.0, 50.0))
    b = gep_mscra(DecompositionInstance(M.T, 100.0, 50.0))
    assert a.X_hat.shape == M.shape
    assert a.X_hat == pytest.approx(b.X_hat.T, abs=1e-10)


def test_gep_max_outer_flag(rng):
    M = _random_instance(rng)
    sched = Schedule(n=20, max_outer=2)
    with pytest.warns(MaxIterReached):
        rep = gep_mscra(DecompositionInstance(M, 100.0, 50.0), schedule=sched)
    assert rep.outer_iters == 2 and rep.max_iter_reached
    assert "max_outer_reached" in rep.flags


def test_default_schedule_multipliers():
    assert default_schedule(400).lambda_mult == pytest.approx(22.5)
    assert default_schedule(100).lambda_mult == pytest.approx(20.0)
    assert default_schedule(10000).lambda_mult == pytest.approx(100.0)


def test_schedule_values():
    s = default_schedule(100)
    assert s.lambda_k(1) == 1.0
    assert s.mu_k(1) == pytest.approx(0.5 / 10)
    assert s.lambda_k(3) == pytest.approx(20.0)
    assert s.mu_k(2) == pytest.approx(0.8 * 20 / 10)
    assert s.mu_k(5) == pytest.approx(0.35 * 20 / 10)


def test_schedule_json_round_trip():
    s = default_schedule(64)
    assert Schedule.from_json(s.to_json()) == s
    with pytest.raises(DomainError):
        Schedule.from_json({"n": 5, "bogus": 1})


def test_numerical_rank():
    assert numerical_rank(np.diag([1.0, 1e-7])) == 1
    assert numerical_rank(np.zeros((3, 3))) == 0
    assert numerical_rank(np.eye(5)) == 5


def test_instance_validation():
    with pytest.raises(DomainError):
        DecompositionInstance(np.zeros((2, 2)), 0.0, 1.0)
    with pytest.raises(DomainError):
        DecompositionInstance(np.array([[np.nan]]), 1.0, 1.0)
