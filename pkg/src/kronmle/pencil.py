"""Canonical forms for pairs of data matrices under ``Y_i -> A Y_i B``.

For a generic pair of tall ``m1 x m2`` matrices with ``2 m2 > m1 > m2`` we
compute invertible ``A``, ``B`` with

    A Y1 B = [I_m2; 0],    A Y2 B = [0; I_m2].

Write ``d = m1 - m2`` and let ``b_j`` be the columns of ``B``.  The two
identities hold exactly when ``Y1 b_(j+d) = Y2 b_j`` for ``j < m2 - d`` and
``A^{-1} = [Y1 B, (Y2 B)[:, m2-d:]]``.  The columns of ``B`` therefore split
into ``d`` chains ``b_i, b_(i+d), b_(i+2d), ...``; generically ``n_a`` chains
have length ``l + 1`` and ``n_b`` have length ``l``.  Chains of a given length
span the null space of a block bidiagonal system, which is computed with an
SVD.

Square pairs are reduced to ``(I, J)`` with ``J`` the real Jordan form of
``Y1^{-1} Y2``.
"""
from __future__ import annotations

from dataclasses import dataclass
from math import ceil

import numpy as np
from scipy import linalg

from .core import DataSample, KronMLEError


class NonGenericPencil(KronMLEError):
    pass


class RepeatedEigenvalues(KronMLEError):
    pass


class RegimeError(KronMLEError, ValueError):
    pass


def structure_indices(m1: int, m2: int, allow_boundary: bool = False) -> tuple[int, int, int]:
    """``(l, n_a, n_b)`` for the tall regime ``2 m2 > m1 > m2``.

    ``l = ceil(m2 / (m1 - m2)) - 1``, ``n_a = (l+1) m2 - l m1``,
    ``n_b = (l+1) m1 - (l+2) m2``.  With ``allow_boundary`` the case
    ``m1 = 2 m2`` is accepted as well and gives ``l = 0``.
    """
    upper_ok = m1 <= 2 * m2 if allow_boundary else m1 < 2 * m2
    if not (m1 > m2 >= 1 and upper_ok):
        raise RegimeError(f"(m1, m2) = ({m1}, {m2}) outside 2*m2 > m1 > m2")
    d = m1 - m2
    l = ceil(m2 / d) - 1
    n_a = (l + 1) * m2 - l * m1
    n_b = (l + 1) * m1 - (l + 2) * m2
    return l, n_a, n_b


def canonical_pair(m1: int, m2: int):
    """The stacked-identity pair ``([I; 0], [0; I])`` of shape ``(2, m1, m2)``."""
    if m1 < m2:
        raise RegimeError("canonical pair needs m1 >= m2")
    d = m1 - m2
    y = np.zeros((2, m1, m2))
    y[0, :m2] = np.eye(m2)
    y[1, d:] = np.eye(m2)
    return y


def canonical_sample(m1: int, m2: int) -> DataSample:
    return DataSample(canonical_pair(m1, m2))


def chain_lengths(m1: int, m2: int):
    """Length of the column chain starting at each ``i < m1 - m2``."""
    d = m1 - m2
    return [len(range(i, m2, d)) for i in range(d)]


def block_permutation(m1: int, m2: int):
    """Row and column orders turning the stacked form into block-diagonal form.

    Returns ``(rows, cols, blocks)`` such that ``canonical_pair(m1, m2)[k][rows][:, cols]``
    is ``diag(U_L1, U_L2, ...)`` for ``k = 0`` and ``diag(L_L1, ...)`` for
    ``k = 1``, where ``U_L = [I_L; 0]``, ``L_L = [0; I_L]`` and ``blocks``
    lists the chain lengths ``L``.  Longer chains come first.
    """
    d = m1 - m2
    if d < 1:
        raise RegimeError("block form needs m1 > m2")
    rows, cols, blocks = [], [], []
    starts = sorted(range(d), key=lambda i: -len(range(i, m2, d)))
    for i in starts:
        chain = list(range(i, m2, d))
        cols.extend(chain)
        rows.extend(range(i, m1, d))
        blocks.append(len(chain))
    return np.array(rows), np.array(cols), blocks


def block_diagonal_pair(blocks):
    """``(diag(U_L ...), diag(L_L ...))`` for the given chain lengths."""
    m2 = sum(blocks)
    m1 = m2 + len(blocks)
    u = np.zeros((m1, m2))
    low = np.zeros((m1, m2))
    r = c = 0
    for size in blocks:
        u[r:r + size, c:c + size] = np.eye(size)
        low[r + 1:r + size + 1, c:c + size] = np.eye(size)
        r += size + 1
        c += size
    return u, low


@dataclass(frozen=True)
class PencilCanonicalization:
    a: np.ndarray
    b: np.ndarray
    l: int
    n_a: int
    n_b: int
    residual: float

    def apply(self, y1, y2):
        return self.a @ y1 @ self.b, self.a @ y2 @ self.b

    def pullback_psi2(self, psi):
        """Map a column precision for the canonical data back to the original data.

        If ``psi`` minimizes the profile objective of ``(A Y_i B)``, then
        ``B psi B^T`` minimizes it for ``(Y_i)``.
        """
        return self.b @ psi @ self.b.T

    def to_dict(self):
        return {
            "a": self.a.tolist(),
            "b": self.b.tolist(),
            "l": self.l,
            "n_a": self.n_a,
            "n_b": self.n_b,
            "residual": self.residual,
        }


def _rank_tol(s, shape):
    return s[0] * max(shape) * 1e-12 if s.size else 0.0


def _chain_space(y1, y2, length):
    """Basis of chains ``(b_0, ..., b_{L-1})`` with ``Y1 b_(s+1) = Y2 b_s``.

    Returns an array of shape ``(dim, length, m2)``.
    """
    m1, m2 = y1.shape
    if length == 1:
        return np.eye(m2)[:, None, :]
    rows = (length - 1) * m1
    sys = np.zeros((rows, length * m2))
    for s in range(length - 1):
        sys[s * m1:(s + 1) * m1, s * m2:(s + 1) * m2] = -y2
        sys[s * m1:(s + 1) * m1, (s + 1) * m2:(s + 2) * m2] = y1
    _, sv, vt = linalg.svd(sys)
    rank = int(np.sum(sv > _rank_tol(sv, sys.shape)))
    null = vt[rank:]
    return null.reshape(null.shape[0], length, m2)


def _unit_chains(chains):
    out = []
    for c in chains:
        out.append(c / np.linalg.norm(c))
    return out


def canonicalize_pair(y1, y2, tol: float = 1e-8) -> PencilCanonicalization:
    """Reduce a generic tall pair to ``A Y1 B = [I; 0]``, ``A Y2 B = [0; I]``.

    Parameters
    ----------
    y1, y2 : array_like, shape (m1, m2)
        Requires ``2 m2 > m1 > m2``.
    tol : float
        Largest accepted residual (Frobenius norm of the deviation from the
        target pair).

    Raises
    ------
    NonGenericPencil
        When the chain spaces do not have the generic dimensions, the
        assembled transforms are singular, or the residual exceeds ``tol``.
    """
    y1 = np.asarray(y1, dtype=float)
    y2 = np.asarray(y2, dtype=float)
    if y1.shape != y2.shape or y1.ndim != 2:
        raise RegimeError("pencil matrices must share a 2-d shape")
    m1, m2 = y1.shape
    l, n_a, n_b = structure_indices(m1, m2)
    d = m1 - m2

    sv = linalg.svdvals(np.hstack([y1, y2]))
    if np.sum(sv > _rank_tol(sv, (m1, 2 * m2))) < m1:
        raise NonGenericPencil("stacked matrix (Y1, Y2) is rank deficient")

    long_space = _chain_space(y1, y2, l + 1)
    if long_space.shape[0] != n_a:
        raise NonGenericPencil(
            f"found {long_space.shape[0]} chains of length {l + 1}, expected n_a = {n_a}"
        )
    chains_long = _unit_chains(long_space)
    chains_short = []
    if n_b:
        short_space = _chain_space(y1, y2, l)
        if short_space.shape[0] != 2 * n_a + n_b:
            raise NonGenericPencil(
                f"found {short_space.shape[0]} chains of length {l}, expected {2 * n_a + n_b}"
            )
        flat = short_space.reshape(short_space.shape[0], -1)
        trunc = np.array(
            [c[:l].ravel() for c in long_space] + [c[1:].ravel() for c in long_space]
        ).reshape(2 * n_a, -1)
        # coordinates of the truncated long chains inside the short-chain basis
        coef, *_ = linalg.lstsq(flat.T, trunc.T)
        q, _ = linalg.qr(coef, mode="full")
        comp = q[:, 2 * n_a:].T @ flat
        chains_short = _unit_chains(comp.reshape(n_b, l, m2))

    lengths = chain_lengths(m1, m2)
    pool = {l + 1: list(chains_long), l: list(chains_short)}
    b = np.zeros((m2, m2))
    for i, length in enumerate(lengths):
        chain = pool[length].pop(0)
        for s in range(length):
            b[:, i + s * d] = chain[s]
    c = np.hstack([y1 @ b, (y2 @ b)[:, m2 - d:]])
    try:
        a = linalg.inv(c)
        if not np.all(np.isfinite(a)) or linalg.svdvals(b)[-1] == 0:
            raise linalg.LinAlgError
    except linalg.LinAlgError:
        raise NonGenericPencil("assembled transforms are singular") from None

    target = canonical_pair(m1, m2)
    residual = max(
        float(np.linalg.norm(a @ y1 @ b - target[0])),
        float(np.linalg.norm(a @ y2 @ b - target[1])),
    )
    if not residual <= tol:
        raise NonGenericPencil(f"canonicalization residual {residual:.3g} exceeds tol {tol:.3g}")
    return PencilCanonicalization(a, b, l, n_a, n_b, residual)


@dataclass(frozen=True)
class JordanInfo:
    eigenvalues: np.ndarray
    block_sizes: tuple

    @property
    def n_real(self) -> int:
        return sum(1 for s in self.block_sizes if s == 1)


def real_jordan_pair(y1, y2, separation: float = 1e-8):
    """``A, B`` with ``A Y1 B = I`` and ``A Y2 B`` in real Jordan form.

    ``W = Y1^{-1} Y2`` must have distinct eigenvalues.  Real eigenvalues give
    ``1 x 1`` blocks (sorted ascending, placed first); each complex pair
    ``a +- i b`` with ``b > 0`` gives a block ``[[a, b], [-b, a]]``.

    Returns
    -------
    a, b : ndarray
    info : JordanInfo
    """
    y1 = np.asarray(y1, dtype=float)
    y2 = np.asarray(y2, dtype=float)
    m = y1.shape[0]
    if y1.shape != (m, m) or y2.shape != (m, m):
        raise RegimeError("real Jordan reduction needs square matrices of equal size")
    try:
        w = linalg.solve(y1, y2)
    except linalg.LinAlgError:
        raise RegimeError("Y1 is singular") from None
    ev, vecs = linalg.eig(w)
    scale = max(1.0, float(np.max(np.abs(ev))))
    gaps = np.abs(ev[:, None] - ev[None, :])
    np.fill_diagonal(gaps, np.inf)
    if m > 1 and np.min(gaps) < separation * scale:
        raise RepeatedEigenvalues("W = Y1^-1 Y2 has (numerically) repeated eigenvalues")

    imag_tol = separation * scale
    real_idx = [i for i in range(m) if abs(ev[i].imag) <= imag_tol]
    cplx_idx = [i for i in range(m) if ev[i].imag > imag_tol]
    real_idx.sort(key=lambda i: ev[i].real)
    cplx_idx.sort(key=lambda i: (ev[i].real, ev[i].imag))

    cols, sizes, values = [], [], []
    for i in real_idx:
        v = vecs[:, i].real
        cols.append(v / np.linalg.norm(v))
        sizes.append(1)
        values.append(ev[i].real)
    for i in cplx_idx:
        v = vecs[:, i]
        nrm = np.linalg.norm(v)
        cols.extend([v.real / nrm, v.imag / nrm])
        sizes.append(2)
        values.extend([ev[i], np.conj(ev[i])])
    bmat = np.column_stack(cols)
    amat = linalg.solve(bmat, linalg.inv(y1))
    return amat, bmat, JordanInfo(np.array(values), tuple(sizes))


def eigen_case_2x2_discriminant(y1, y2):
    """``(tr W)^2 - 4 det W`` for ``W = Y1^{-1} Y2`` (2 x 2 only)."""
    w = linalg.solve(np.asarray(y1, float), np.asarray(y2, float))
    return float(np.trace(w) ** 2 - 4.0 * linalg.det(w))


def has_real_eigenvalue(w, tol=1e-10) -> bool:
    ev = linalg.eigvals(np.asarray(w, dtype=float))
    scale = max(1.0, float(np.max(np.abs(ev))))
    return bool(np.any(np.abs(ev.imag) <= tol * scale))
