from math import pi, sqrt

import numpy as np
import pytest

from kronmle.flipflop import FlipFlopConfig
from kronmle.montecarlo import (
    SimulationReport,
    default_seed,
    empirical_threshold,
    prob_real_eigs_2x2,
    real_eigs_discriminant,
    rng_stream,
    sample_matrix_normal,
    splitmix64,
)


def test_splitmix_reference():
    # first output of the reference generator seeded with 0
    assert splitmix64(0) == 0xE220A8397B1DCDAF
    assert splitmix64(1) != splitmix64(0)
    assert 0 <= splitmix64(2**64 - 1) < 2**64


def test_streams_deterministic_and_distinct():
    a = rng_stream(42, 3).standard_normal(5)
    b = rng_stream(42, 3).standard_normal(5)
    c = rng_stream(42, 4).standard_normal(5)
    assert np.array_equal(a, b)
    assert not np.allclose(a, c)


def test_default_seed(monkeypatch):
    monkeypatch.delenv("KRONMLE_SEED", raising=False)
    assert default_seed(7) == 7
    monkeypatch.setenv("KRONMLE_SEED", "123")
    assert default_seed(7) == 123


def test_sample_covariances():
    s1 = np.array([[2.0, 0.6, 0.0], [0.6, 1.0, 0.3], [0.0, 0.3, 0.5]])
    s2 = np.array([[1.0, -0.4], [-0.4, 3.0]])
    y = sample_matrix_normal(3, 2, s1, s2, rng=rng_stream(1), n=40000)
    assert y.shape == (40000, 3, 2)
    # E[Y Y^T] = tr(S2) S1 and E[Y^T Y] = tr(S1) S2
    row = np.einsum("nij,nkj->ik", y, y) / len(y)
    col = np.einsum("nji,njk->ik", y, y) / len(y)
    assert np.allclose(row, np.trace(s2) * s1, atol=0.08)
    assert np.allclose(col, np.trace(s1) * s2, atol=0.08)
    assert sample_matrix_normal(3, 2).shape == (3, 2)
    with pytest.raises(ValueError):
        sample_matrix_normal(3, 2, sigma1=np.eye(2))


def test_discriminant_matches_eigenvalues():
    rng = np.random.default_rng(0)
    y = rng.standard_normal((500, 2, 2, 2))
    disc = real_eigs_discriminant(y[:, 0], y[:, 1])
    for i in range(500):
        ev = np.linalg.eigvals(np.linalg.solve(y[i, 0], y[i, 1]))
        real = bool(np.all(np.abs(ev.imag) < 1e-12))
        if abs(disc[i]) > 1e-9:
            assert (disc[i] >= 0) == real


def test_report_bookkeeping():
    r = SimulationReport(4, 0, {"real": 3, "complex": 1}, "real")
    assert r.estimate == 0.75
    assert r.stderr == pytest.approx(sqrt(0.75 * 0.25 / 4))
    assert r.fraction("complex") == 0.25
    with pytest.raises(ValueError):
        SimulationReport(5, 0, {"real": 3}, "real")
    one = prob_real_eigs_2x2(1, 9)
    assert sum(one.counts.values()) == 1


def test_real_eigenvalue_probability():
    r = prob_real_eigs_2x2(20000, 42)
    assert abs(r.estimate - pi / 4) <= 3 * sqrt(pi / 4 * (1 - pi / 4) / 20000)
    assert r.to_dict()["counts"]["real"] + r.to_dict()["counts"]["complex"] == 20000
    with pytest.raises(ValueError):
        prob_real_eigs_2x2(0, 1)


def test_jobs_do_not_change_results():
    a = prob_real_eigs_2x2(3000, 5, jobs=1).to_dict()
    b = prob_real_eigs_2x2(3000, 5, jobs=4).to_dict()
    assert a == b
    c = empirical_threshold(5, 4, 2, 12, 3, jobs=1).to_dict()
    d = empirical_threshold(5, 4, 2, 12, 3, jobs=3).to_dict()
    assert c == d


def test_empirical_threshold_examples():
    assert empirical_threshold(5, 4, 2, 20, 0).counts == {"UniqueMax": 20}
    assert empirical_threshold(7, 4, 2, 20, 0).counts == {"Diverged": 20}
    # n m2 < m1: the update cannot be formed
    r = empirical_threshold(5, 2, 2, 5, 0)
    assert r.counts == {"StepIllDefined": 5} and r.estimate == 0.0
    cfg = FlipFlopConfig(max_iterations=1, accelerate=False)
    assert "MaxIterations" in empirical_threshold(5, 4, 2, 5, 0, config=cfg).counts
