"""Minimal ranks ``r_n(m1, m2, k)`` and the sign statistic ``S_n(m1, m2)``.

``r_n(m1, m2, k)`` is the smallest rank of ``(Y_1 X, ..., Y_n X)`` over
rank-``k`` matrices ``X`` (``m2 x k``), and

    S_n(m1, m2) = min_{1 <= k < m2} m2 * r_n(m1, m2, k) - m1 * k.

For generic data the MLE exists uniquely iff ``S_n > 0``, exists without
being unique iff ``S_n = 0`` and fails to exist iff ``S_n < 0``.  For
``n = 2`` the minimal rank is the value of a tiny integer program, which is
solved here by enumeration and certified with an explicit 0-1 witness.
"""
from __future__ import annotations

import enum
import io
from dataclasses import dataclass

import numpy as np
from scipy import linalg

from .core import DataSample, KronMLEError
from .pencil import RegimeError, canonicalize_pair, structure_indices

RANK_RTOL = 1e-10


class Verdict(str, enum.Enum):
    UNIQUE = "UniqueMLE"
    NON_UNIQUE = "NonUniqueMLE"
    NONE = "NoMLE"

    @classmethod
    def from_value(cls, value: int) -> Verdict:
        if value > 0:
            return cls.UNIQUE
        if value == 0:
            return cls.NON_UNIQUE
        return cls.NONE


class EigenCase(str, enum.Enum):
    HAS_REAL_EIGENVALUE = "HasRealEigenvalue"
    ALL_COMPLEX = "AllComplex"


def numerical_rank(m, rtol=RANK_RTOL) -> int:
    """Count singular values above ``sigma_1 * max(shape) * rtol``."""
    m = np.asarray(m, dtype=float)
    if m.size == 0:
        return 0
    s = linalg.svdvals(m)
    if s[0] == 0:
        return 0
    return int(np.sum(s > s[0] * max(m.shape) * rtol))


# ---------------------------------------------------------------------------
# n = 2, tall regime


@dataclass(frozen=True)
class MinRankCert:
    """Certificate for ``r_2(m1, m2, k) = r``.

    ``witness`` is the ``k x m2`` 0-1 matrix ``X`` in canonical coordinates;
    ``a`` and ``b`` are the non-increasing block ranks used to build it.
    """

    m1: int
    m2: int
    k: int
    r: int
    witness: np.ndarray
    a1: int
    b1: int
    a: tuple
    b: tuple
    l: int
    n_a: int
    n_b: int

    def stacked(self):
        """``[[X, 0], [0, X]]`` (``2k x m1``), i.e. ``(Y1 X^T, Y2 X^T)^T`` on canonical data."""
        d = self.m1 - self.m2
        z = np.zeros((self.k, d))
        return np.block([[self.witness, z], [z, self.witness]])

    def witness_rank(self, rtol=RANK_RTOL) -> int:
        return numerical_rank(self.stacked(), rtol)

    def to_dict(self):
        return {
            "m1": self.m1,
            "m2": self.m2,
            "k": self.k,
            "r": self.r,
            "a1": self.a1,
            "b1": self.b1,
            "a": list(self.a),
            "b": list(self.b),
            "l": self.l,
            "n_a": self.n_a,
            "n_b": self.n_b,
            "witness": self.witness.astype(int).tolist(),
        }


def _tall_indices(m1, m2):
    # m1 = 2 m2 is admitted here (l = 0); it is the boundary of the same formulas
    return structure_indices(m1, m2, allow_boundary=True)


def r2_program(m1: int, m2: int, k: int):
    """Solve ``min a1 + b1 + k`` s.t. ``k <= a1 (l+1) + b1 l``, ``0 <= a1 <= n_a``, ``0 <= b1 <= n_b``.

    Returns ``(r, a1, b1)``; ties go to the smallest ``a1`` and then ``b1``.
    """
    l, n_a, n_b = _tall_indices(m1, m2)
    if not 1 <= k <= m2:
        raise RegimeError(f"k = {k} outside 1..{m2}")
    best = None
    for a1 in range(n_a + 1):
        for b1 in range(n_b + 1):
            if k <= a1 * (l + 1) + b1 * l:
                cand = (a1 + b1 + k, a1, b1)
                if best is None or cand < best:
                    best = cand
    return best


def _fill(top, count, remaining):
    vals = []
    for _ in range(count):
        v = min(top, remaining)
        vals.append(v)
        remaining -= v
    return vals, remaining


def witness_matrix(m1, m2, a, b):
    """The structured 0-1 matrix ``X`` (``k x m2``) for block ranks ``a``, ``b``.

    Columns are ordered ``X_1 (n_a), X_2 (n_b), X_3 (n_a), ..., X_{2l+1} (n_a)``.
    ``X_{2i-1}`` carries ``(I_{a_i}, 0)`` in rows ``sum(a[:i-1]) ...`` and
    ``X_{2i}`` carries ``(I_{b_i}, 0)`` in rows ``k_a + sum(b[:i-1]) ...``.
    """
    l, n_a, n_b = _tall_indices(m1, m2)
    if len(a) != l + 1 or len(b) != l:
        raise ValueError("need l+1 entries in a and l entries in b")
    k_a, k_b = sum(a), sum(b)
    k = k_a + k_b
    x = np.zeros((k, m2))
    col = 0
    for i in range(l + 1):
        row = sum(a[:i])
        x[row:row + a[i], col:col + a[i]] = np.eye(a[i])
        col += n_a
        if i < l:
            row = k_a + sum(b[:i])
            x[row:row + b[i], col:col + b[i]] = np.eye(b[i])
            col += n_b
    return x


def r2(m1: int, m2: int, k: int) -> MinRankCert:
    """Exact ``r_2(m1, m2, k)`` for ``2 m2 >= m1 > m2`` with its witness.

    The witness is checked numerically: its stacked matrix must have rank
    exactly ``r``.
    """
    l, n_a, n_b = _tall_indices(m1, m2)
    r, a1, b1 = r2_program(m1, m2, k)
    rest = k - a1 - b1
    a_tail, rest = _fill(a1, l, rest)
    b_tail, rest = _fill(b1, max(l - 1, 0), rest)
    if rest != 0:
        raise KronMLEError("could not distribute block ranks for the witness")
    a = (a1, *a_tail)
    b = (b1, *b_tail) if l >= 1 else ()
    cert = MinRankCert(m1, m2, k, r, witness_matrix(m1, m2, a, b), a1, b1, a, b, l, n_a, n_b)
    got = cert.witness_rank()
    if got != r:
        raise KronMLEError(f"witness for r2({m1},{m2},{k}) has rank {got}, expected {r}")
    return cert


# ---------------------------------------------------------------------------
# S values


@dataclass(frozen=True)
class ConditionalValue:
    """Value that depends on whether ``Y1^{-1} Y2`` has a real eigenvalue."""

    real_case: int
    complex_case: int

    def __str__(self):
        return f"{self.real_case}|{self.complex_case}"

    def pick(self, eigen_case) -> int:
        return self.real_case if EigenCase(eigen_case) is EigenCase.HAS_REAL_EIGENVALUE else self.complex_case


@dataclass(frozen=True)
class SValueReport:
    m1: int
    m2: int
    n: int
    value: int | ConditionalValue
    minimizing_k: frozenset
    verdict: Verdict | None

    @property
    def conditional(self) -> bool:
        return isinstance(self.value, ConditionalValue)

    def resolve(self, eigen_case) -> SValueReport:
        """Fix the eigenvalue case of a conditional report."""
        if not self.conditional:
            return self
        v = self.value.pick(eigen_case)
        return SValueReport(self.m1, self.m2, self.n, v, self.minimizing_k, Verdict.from_value(v))

    def to_dict(self):
        if self.conditional:
            value = {"real_case": self.value.real_case, "complex_case": self.value.complex_case}
        else:
            value = self.value
        return {
            "m1": self.m1,
            "m2": self.m2,
            "n": self.n,
            "value": value,
            "minimizing_k": sorted(self.minimizing_k),
            "verdict": self.verdict.value if self.verdict else None,
        }


def s2_closed_form(m1: int, m2: int):
    """``(value, minimizing k set)`` from the case formulas for ``2 m2 >= m1 > m2``."""
    l, n_a, n_b = _tall_indices(m1, m2)
    if m1 == m2 + 1:
        return 1, frozenset({m2 - 1})
    if m2 % (m1 - m2) == 0:
        step = m2 // (m1 - m2)
        return 0, frozenset(range(step, m2, step))
    return -n_a * n_b, frozenset({(l + 1) * n_a})


def r2_square(m: int, k: int, eigen_case) -> int:
    """``r_2(m, m, k)``: ``k + 1`` if all eigenvalues are complex and ``k`` is odd, else ``k``."""
    if m < 2 or not 1 <= k <= m:
        raise RegimeError(f"need m >= 2 and 1 <= k <= m, got m={m}, k={k}")
    if EigenCase(eigen_case) is EigenCase.ALL_COMPLEX and k % 2 == 1:
        return k + 1
    return k


def s2(m1: int, m2: int) -> SValueReport:
    """``S_2(m1, m2)`` for ``2 m2 >= m1 >= m2 >= 2``.

    In the tall case the integer program is enumerated for every ``k`` and
    must agree with the closed form; a mismatch raises ``KronMLEError``.
    The square case returns a :class:`ConditionalValue` when ``m = 2``.
    """
    if not (m2 >= 2 and m2 <= m1 <= 2 * m2):
        raise RegimeError(f"S_2 needs 2*m2 >= m1 >= m2 >= 2, got ({m1}, {m2})")
    if m1 == m2:
        m = m1
        cases = [EigenCase.HAS_REAL_EIGENVALUE] if m % 2 else list(EigenCase)
        per_case = {}
        for case in EigenCase:
            vals = {k: m * r2_square(m, k, case) - m * k for k in range(1, m)}
            best = min(vals.values())
            per_case[case] = (best, {k for k, v in vals.items() if v == best})
        mins = frozenset.intersection(*(frozenset(per_case[c][1]) for c in cases))
        real_v = per_case[EigenCase.HAS_REAL_EIGENVALUE][0]
        cplx_v = per_case[EigenCase.ALL_COMPLEX][0]
        if m % 2 or real_v == cplx_v:
            return SValueReport(m1, m2, 2, real_v, mins, Verdict.from_value(real_v))
        return SValueReport(m1, m2, 2, ConditionalValue(real_v, cplx_v), mins, None)

    vals = {k: m2 * r2_program(m1, m2, k)[0] - m1 * k for k in range(1, m2)}
    value = min(vals.values())
    mins = frozenset(k for k, v in vals.items() if v == value)
    closed = s2_closed_form(m1, m2)
    if closed != (value, mins):
        raise KronMLEError(f"S_2({m1},{m2}): program gives {(value, sorted(mins))}, closed form {closed}")
    return SValueReport(m1, m2, 2, value, mins, Verdict.from_value(value))


def sn_m2_equals_2(m1: int, n: int, eigen_case=None) -> SValueReport:
    """``S_n(m1, 2)`` in the regime ``1 <= m1 / 2 < n``.

    ``2n - m1`` if ``n < m1``; ``m1`` if ``m1 < n``; for ``m1 = n = m`` the
    value is ``m`` without and ``m - 2`` with a real eigenvalue of ``W``.
    """
    if not (m1 >= 2 and m1 < 2 * n):
        raise RegimeError(f"need 1 <= m1/2 < n, got m1={m1}, n={n}")
    if n < m1:
        value = 2 * n - m1
    elif m1 < n:
        value = m1
    else:
        if eigen_case is None:
            raise ValueError("eigen_case is required when m1 == n")
        value = m1 - 2 if EigenCase(eigen_case) is EigenCase.HAS_REAL_EIGENVALUE else m1
    return SValueReport(m1, 2, n, value, frozenset({1}), Verdict.from_value(value))


# ---------------------------------------------------------------------------
# table output


TABLE2_MAX = 17


def s2_table_rows(max_m1: int = TABLE2_MAX):
    """``(m1, m2, cell, verdict)`` for ``2 <= m2 < max_m1``, ``m2 <= m1 <= max_m1``.

    Cells with ``m1 > 2 m2`` have no S-value (the stacked data matrix has
    deficient row rank) and are reported with an empty cell and ``NoMLE``.
    """
    rows = []
    for m1 in range(2, max_m1 + 1):
        for m2 in range(2, min(m1, max_m1 - 1) + 1):
            if m1 > 2 * m2:
                rows.append((m1, m2, "", Verdict.NONE.value))
                continue
            rep = s2(m1, m2)
            verdict = "Conditional" if rep.conditional else rep.verdict.value
            rows.append((m1, m2, str(rep.value), verdict))
    return rows


def s2_table_csv(max_m1: int = TABLE2_MAX) -> str:
    buf = io.StringIO()
    buf.write("m1,m2,s2,verdict\n")
    for m1, m2, cell, verdict in s2_table_rows(max_m1):
        buf.write(f"{m1},{m2},{cell},{verdict}\n")
    return buf.getvalue()


# ---------------------------------------------------------------------------
# numeric search


def _stack_times(y, x):
    return np.hstack([yi @ x for yi in y])


def _certified_rank(y, x):
    # tolerance scaled by the inputs, so a product that is numerically zero has rank 0
    m = _stack_times(y, x)
    s = linalg.svdvals(m)
    scale = max(linalg.norm(yi, 2) for yi in y) * linalg.norm(x, 2)
    return int(np.sum(s > scale * max(m.shape) * RANK_RTOL))


def _descend(y, x, target, iterations):
    """Alternating subspace descent on ``sum_{i > target} sigma_i(Y_1 X, ..., Y_n X)^2``."""
    m1 = y.shape[1]
    k = x.shape[1]
    for _ in range(iterations):
        u, s, _ = linalg.svd(_stack_times(y, x), full_matrices=False)
        if s[0] == 0:
            break
        if target < len(s) and s[target] <= s[0] * max(m1, y.shape[0] * k) * RANK_RTOL:
            break
        proj = np.eye(m1) - u[:, :target] @ u[:, :target].T
        q = sum(yi.T @ proj @ yi for yi in y)
        _, vecs = linalg.eigh(0.5 * (q + q.T))
        x = vecs[:, :k]
    return x


def numeric_min_rank_search(sample, k: int, restarts: int = 10, seed: int = 0, iterations: int = 200) -> int:
    """Upper bound on ``r_n(m1, m2, k)`` for this particular sample.

    Candidates: any rank-``k`` ``X`` (rank of a random one), the structured
    0-1 witnesses pulled back through the canonical form when ``n = 2`` and
    ``2 m2 > m1 > m2``, and ``restarts`` runs of alternating subspace
    descent for every target rank below the current best.  Only ranks
    certified by an SVD read of an explicit ``X`` are returned.
    """
    sample = sample if isinstance(sample, DataSample) else DataSample(sample)
    y = sample.matrices
    n, m1, m2 = y.shape
    if not 1 <= k <= m2:
        raise RegimeError(f"k = {k} outside 1..{m2}")
    if restarts < 1:
        raise ValueError("restarts must be >= 1")
    rng = np.random.default_rng(seed)
    best = _certified_rank(y, linalg.qr(rng.standard_normal((m2, k)), mode="economic")[0])

    if n == 2 and 2 * m2 > m1 > m2:
        try:
            canon = canonicalize_pair(y[0], y[1])
        except KronMLEError:
            canon = None
        if canon is not None:
            l, n_a, n_b = canon.l, canon.n_a, canon.n_b
            for a1 in range(n_a + 1):
                for b1 in range(n_b + 1):
                    rest = k - a1 - b1
                    if rest < 0 or k > a1 * (l + 1) + b1 * l:
                        continue
                    a_tail, rest = _fill(a1, l, rest)
                    b_tail, rest = _fill(b1, l - 1, rest)
                    if rest:
                        continue
                    w = witness_matrix(m1, m2, (a1, *a_tail), (b1, *b_tail))
                    best = min(best, _certified_rank(y, canon.b @ w.T))

    # rank(Y_i X) = k as soon as one Y_i has full column rank
    floor = k if any(numerical_rank(yi) == m2 for yi in y) else 0
    for target in range(floor, best):
        found = False
        for i in range(restarts):
            sub = np.random.default_rng([seed, i])
            x0 = linalg.qr(sub.standard_normal((m2, k)), mode="economic")[0]
            x = _descend(y, x0, target, iterations)
            if _certified_rank(y, x) <= target:
                found = True
                break
        if found:
            best = target
            break
    return best


def eigen_case_from_data(sample) -> EigenCase:
    """Eigenvalue case of the ``W`` matrix that decides the conditional S-values.

    Square ``n = 2`` data: ``W = Y_1^{-1} Y_2``.  Data of shape ``m x 2`` with
    ``n = m``: ``W = Y_(1)^{-1} Y_(2)`` where ``Y_(j)`` collects the ``j``-th
    columns of all observations.
    """
    sample = sample if isinstance(sample, DataSample) else DataSample(sample)
    y = sample.matrices
    n, m1, m2 = y.shape
    if n == 2 and m1 == m2:
        p, q = y[0], y[1]
    elif m2 == 2 and m1 == n:
        p, q = y[:, :, 0].T, y[:, :, 1].T
    else:
        raise RegimeError(f"no eigenvalue case for shape (n={n}, m1={m1}, m2={m2})")
    w = linalg.solve(p, q)
    if w.shape == (2, 2):
        disc = (w[0, 0] - w[1, 1]) ** 2 + 4 * w[0, 1] * w[1, 0]
        real = disc >= 0
    else:
        ev = linalg.eigvals(w)
        real = bool(np.any(np.abs(ev.imag) <= 1e-10 * max(1.0, np.max(np.abs(ev)))))
    return EigenCase.HAS_REAL_EIGENVALUE if real else EigenCase.ALL_COMPLEX
