import time

import numpy as np
import pytest

import exactpen.scalar_phi as sp
from exactpen.verify import check_equivalence, verify_suite


def test_fast_suite_green_and_quick():
    t0 = time.perf_counter()
    results = verify_suite("fast")
    assert time.perf_counter() - t0 <= 30.0
    assert all(r.passed for r in results), [r.line() for r in results if not r.passed]


def test_mutation_breaks_conjugacy(monkeypatch):
    real = sp.psi_star

    def corrupted(phi, s):
        # wrong slope on the upper branch
        out = np.asarray(real(phi, s), dtype=float)
        return np.where(np.asarray(s) > phi.d_minus_1, 0.9 * out, out)
    monkeypatch.setattr(sp, "psi_star", corrupted)
    res = {r.name: r for r in verify_suite("fast")}
    assert not res["conjugacy"].passed


def test_full_contains_equivalence():
    names = [name for name, _ in __import__("exactpen.verify", fromlist=["FULL_CHECKS"]).FULL_CHECKS]
    assert "global_minimizer_equivalence" in names


def test_bad_level():
    with pytest.raises(ValueError):
        verify_suite("medium")


def test_crashing_check_is_reported(monkeypatch):
    import exactpen.verify as v

    def boom():
        raise RuntimeError("x")
    monkeypatch.setattr(v, "FAST_CHECKS", [("boom", boom)])
    [r] = v.verify_suite("fast")
    assert not r.passed and "RuntimeError" in r.detail
