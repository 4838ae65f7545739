from math import comb, log

import numpy as np
import pytest
from helpers import fd_gradient, random_spd, rel_err, trace_one

from kronmle.closedform import (
    TwoByTwoCase,
    classify_2x2,
    complex_case_mle,
    critical_points_nonunique,
    g0_at_optimum,
    g_min_m2_plus_1,
    mle_m2_plus_1,
)
from kronmle.core import DimensionError, profile_objective
from kronmle.flipflop import FlipFlopConfig, fit
from kronmle.pencil import RegimeError, canonical_pair


def test_classify_examples():
    rot = np.array([[0.0, -1.0], [1.0, 0.0]])
    c = classify_2x2(np.eye(2), rot)
    assert c.case is TwoByTwoCase.COMPLEX and c.unique
    assert np.allclose(c.mle_psi2, np.eye(2) / 2)
    d = classify_2x2(np.eye(2), np.array([[1.0, 1.0], [0.0, 1.0]]))
    assert d.case is TwoByTwoCase.REAL_DEFECTIVE and not d.unique
    assert d.infimum_g == pytest.approx(2 * log(4))
    r = classify_2x2(np.eye(2), np.diag([1.0, 2.0]))
    assert r.case is TwoByTwoCase.REAL_DIAGONALIZABLE
    assert r.mle_psi2 is None and r.infimum_g is None
    s = classify_2x2(np.eye(2), 3 * np.eye(2))
    assert s.case is TwoByTwoCase.REAL_DIAGONALIZABLE


def test_classify_rejects_singular():
    with pytest.raises(DimensionError):
        classify_2x2(np.ones((2, 2)), np.eye(2))
    with pytest.raises(DimensionError):
        classify_2x2(np.eye(3), np.eye(3))


def test_complex_formula_matches_flipflop():
    rng = np.random.default_rng(0)
    hits = 0
    while hits < 40:
        y = rng.standard_normal((2, 2, 2))
        c = classify_2x2(*y)
        if c.case is not TwoByTwoCase.COMPLEX:
            continue
        hits += 1
        est = fit(y).estimate
        assert rel_err(trace_one(est.psi2), c.mle_psi2) <= 1e-6
        assert np.all(np.linalg.eigvalsh(c.mle_psi2) > 0)


def test_complex_formula_is_critical():
    w = np.array([[1.0, -2.0], [3.0, 0.5]])
    psi = complex_case_mle(w)
    y = np.stack([np.eye(2), w])
    assert np.max(np.abs(fd_gradient(y, psi))) <= 1e-6


@pytest.mark.parametrize("a", [0.3, 0.5, 2.0, -1.5])
def test_defective_infimum_approached(a):
    t = np.array([[1.0, 1.0], [0.0, 1.0]])
    for y1 in (np.eye(2), 2 * t):
        y = np.stack([y1, y1 @ np.array([[a, 1.0], [0.0, a]])])
        c = classify_2x2(*y)
        target = c.infimum_g_original
        r = fit(y, FlipFlopConfig(max_iterations=2000))
        assert min(r.g_trace) >= target - 1e-9
        assert min(r.g_trace) <= target + 1e-6
        # no point of the cone reaches it: sample some
        rng = np.random.default_rng(1)
        vals = [profile_objective(y, random_spd(rng, 2)) for _ in range(200)]
        assert min(vals) > target


def test_binomial_mle():
    assert np.allclose(mle_m2_plus_1(4), np.diag([1, 3, 3, 1]))
    assert np.allclose(np.diag(mle_m2_plus_1(6)), [comb(5, j) for j in range(6)])
    with pytest.raises(ValueError):
        mle_m2_plus_1(0)


@pytest.mark.parametrize("m", range(2, 9))
def test_binomial_mle_is_fit_limit(m):
    y = canonical_pair(m + 1, m)
    est = fit(y).estimate
    assert rel_err(trace_one(est.psi2), trace_one(mle_m2_plus_1(m))) <= 1e-6
    assert profile_objective(y, mle_m2_plus_1(m)) == pytest.approx(g_min_m2_plus_1(m), abs=1e-9)
    assert np.max(np.abs(fd_gradient(y, trace_one(mle_m2_plus_1(m))))) <= 1e-4


def test_g0_formula_values():
    assert g0_at_optimum(2) == pytest.approx(2 * log(2))
    assert g0_at_optimum(4) == pytest.approx(4 * log(32 / 27) + 5 * log(9))
    # the formula is g at the inverse binomial diagonal
    for m in range(2, 9):
        y = canonical_pair(m + 1, m)
        inv = np.linalg.inv(mle_m2_plus_1(m))
        assert profile_objective(y, inv) == pytest.approx(g0_at_optimum(m), abs=1e-9)
    assert g_min_m2_plus_1(2) == pytest.approx(2 * log(2))
    # rows (1,4,6,4,1) and (1,3,3,1)
    assert g_min_m2_plus_1(4) == pytest.approx(4 * log(96) - 5 * log(9), abs=1e-12)
    with pytest.raises(ValueError):
        g0_at_optimum(1)


DIVISIBLE = [(6, 4), (8, 4), (8, 6), (9, 6), (12, 6), (10, 8), (12, 8), (16, 8)]


@pytest.mark.parametrize("m1,m2", DIVISIBLE)
def test_nonunique_points_are_global_minima(m1, m2):
    y = canonical_pair(m1, m2)
    rng = np.random.default_rng(m1 * 31 + m2)
    n_a = m1 - m2
    values = []
    for _ in range(4):
        c = np.concatenate([[1.0], rng.uniform(0.2, 5.0, n_a - 1)])
        cp = critical_points_nonunique(m1, m2, c)
        psi = cp.canonical
        scale = np.trace(psi)
        assert np.max(np.abs(fd_gradient(y, psi / scale))) <= 1e-4
        values.append(profile_objective(y, psi))
    assert np.ptp(values) <= 1e-9
    best = min(values)
    for _ in range(50):
        assert profile_objective(y, random_spd(rng, m2)) >= best - 1e-9


def test_nonunique_examples():
    cp = critical_points_nonunique(8, 4, [1, 2, 5, 7])
    assert np.allclose(cp.canonical, np.diag([1, 2, 5, 7]))
    cp = critical_points_nonunique(6, 4, [1, 3])
    assert np.allclose(cp.block_diagonal, [1, 1, 3, 3])
    assert np.allclose(cp.canonical, np.diag([1, 3, 1, 3]))
    assert cp.l == 1 and cp.n_a == 2


def test_nonunique_errors():
    with pytest.raises(RegimeError):
        critical_points_nonunique(7, 4, [1, 1, 1])
    with pytest.raises(RegimeError):
        critical_points_nonunique(5, 4, [1])
    with pytest.raises(ValueError):
        critical_points_nonunique(6, 4, [1])
    with pytest.raises(ValueError):
        critical_points_nonunique(6, 4, [2, 1])
    with pytest.raises(ValueError):
        critical_points_nonunique(6, 4, [1, -1])
