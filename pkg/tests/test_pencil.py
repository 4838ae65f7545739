import numpy as np
import pytest

from kronmle.core import profile_objective
from kronmle.pencil import (
    NonGenericPencil,
    RegimeError,
    RepeatedEigenvalues,
    block_diagonal_pair,
    block_permutation,
    canonical_pair,
    canonicalize_pair,
    chain_lengths,
    has_real_eigenvalue,
    real_jordan_pair,
    structure_indices,
)


@pytest.mark.parametrize(
    "m1,m2,expect",
    [(5, 4, (3, 1, 0)), (7, 4, (1, 1, 2)), (6, 4, (1, 2, 0)), (9, 5, (1, 1, 3)), (11, 7, (1, 3, 1))],
)
def test_structure_indices(m1, m2, expect):
    l, n_a, n_b = structure_indices(m1, m2)
    assert (l, n_a, n_b) == expect
    # the chains account for every column and every row
    assert n_a * (l + 1) + n_b * l == m2
    assert n_a * (l + 2) + n_b * (l + 1) == m1


def test_structure_indices_regime():
    with pytest.raises(RegimeError):
        structure_indices(8, 4)
    assert structure_indices(8, 4, allow_boundary=True) == (0, 4, 0)
    with pytest.raises(RegimeError):
        structure_indices(4, 4)


def test_chain_lengths_match_indices():
    for m1, m2 in [(5, 4), (7, 4), (9, 5), (11, 7), (13, 8)]:
        l, n_a, n_b = structure_indices(m1, m2)
        lengths = chain_lengths(m1, m2)
        assert sorted(lengths, reverse=True) == [l + 1] * n_a + [l] * n_b


@pytest.mark.parametrize("m1,m2", [(5, 4), (7, 4), (8, 4), (9, 5), (11, 7)])
def test_block_permutation(m1, m2):
    rows, cols, blocks = block_permutation(m1, m2)
    y = canonical_pair(m1, m2)
    u, low = block_diagonal_pair(blocks)
    assert np.array_equal(y[0][rows][:, cols], u)
    assert np.array_equal(y[1][rows][:, cols], low)
    assert sorted(rows) == list(range(m1))
    assert sorted(cols) == list(range(m2))


@pytest.mark.parametrize("m1,m2", [(5, 4), (7, 4), (9, 5), (11, 7)])
def test_canonicalize_random_pencils(m1, m2):
    rng = np.random.default_rng(m1 * 100 + m2)
    target = canonical_pair(m1, m2)
    for _ in range(10):
        y1, y2 = rng.standard_normal((2, m1, m2))
        c = canonicalize_pair(y1, y2)
        z1, z2 = c.apply(y1, y2)
        assert np.linalg.norm(z1 - target[0]) <= 1e-8
        assert np.linalg.norm(z2 - target[1]) <= 1e-8
        assert c.residual <= 1e-8


def test_pullback_preserves_optimality():
    # g of the data at B psi B^T equals g of the canonical data at psi up to a constant
    rng = np.random.default_rng(7)
    y = rng.standard_normal((2, 7, 4))
    c = canonicalize_pair(*y)
    canon = canonical_pair(7, 4)
    a_inv = np.linalg.inv(c.a)
    b_inv = np.linalg.inv(c.b)
    shift = 2 * 4 * np.log(abs(np.linalg.det(a_inv))) + 2 * 7 * np.log(abs(np.linalg.det(b_inv)))
    for _ in range(3):
        e = rng.standard_normal((4, 4))
        psi = e @ e.T + np.eye(4)
        lhs = profile_objective(y, c.pullback_psi2(psi))
        rhs = profile_objective(canon, psi) + shift
        assert lhs == pytest.approx(rhs, rel=1e-8)


def test_non_generic_input():
    y1 = np.zeros((5, 4))
    y1[:4] = np.eye(4)
    # Y2 = Y1: every vector is a chain of any length
    with pytest.raises(NonGenericPencil):
        canonicalize_pair(y1, y1)
    with pytest.raises(RegimeError):
        canonicalize_pair(np.eye(3), np.eye(3))


def test_real_jordan_pair():
    rng = np.random.default_rng(3)
    for m in (2, 3, 5):
        y1, y2 = rng.standard_normal((2, m, m))
        a, b, info = real_jordan_pair(y1, y2)
        assert np.allclose(a @ y1 @ b, np.eye(m), atol=1e-9)
        j = a @ y2 @ b
        # block diagonal with the listed sizes
        pos = 0
        mask = np.zeros((m, m), bool)
        for s in info.block_sizes:
            mask[pos:pos + s, pos:pos + s] = True
            pos += s
        assert np.allclose(j[~mask], 0, atol=1e-9)
        assert info.n_real == sum(1 for ev in info.eigenvalues if abs(ev.imag) < 1e-12)
        assert has_real_eigenvalue(j) == (info.n_real > 0)


def test_real_jordan_repeated():
    with pytest.raises(RepeatedEigenvalues):
        real_jordan_pair(np.eye(2), np.array([[1.0, 1.0], [0.0, 1.0]]))
