"""Closed-form maximizers for two data matrices.

Three situations have explicit answers:

* ``2 x 2`` data, where the eigenvalues of ``W = Y1^{-1} Y2`` decide
  everything (:func:`classify_2x2`);
* canonical ``(m+1) x m`` data, with a binomial diagonal MLE
  (:func:`mle_m2_plus_1`);
* canonical data with ``(m1 - m2) | m2``, where every member of a family of
  binomial diagonals is a maximizer (:func:`critical_points_nonunique`).

Results for canonical data live in canonical coordinates; use
:meth:`kronmle.pencil.PencilCanonicalization.pullback_psi2` to move them
back to the original data.
"""
from __future__ import annotations

import enum
from dataclasses import dataclass
from math import comb, lgamma, log

import numpy as np
from scipy import linalg

from .core import DimensionError, KronMLEError
from .pencil import RegimeError, block_permutation


class TwoByTwoCase(str, enum.Enum):
    REAL_DIAGONALIZABLE = "RealDiagonalizable"
    REAL_DEFECTIVE = "RealDefective"
    COMPLEX = "Complex"


@dataclass(frozen=True)
class TwoByTwoClassification:
    """Outcome for ``n = 2`` invertible ``2 x 2`` data.

    ``mle_psi2`` (trace one) is set only in the complex case, where the MLE
    is unique.  ``infimum_g`` is set only in the defective case, where the
    likelihood is bounded but its supremum is not attained; it is given in
    the canonical coordinates ``Y1 = I``, ``Y2 = [[a, 1], [0, a]]``, and
    ``infimum_g_original`` is the same number for the data as given.
    """

    case: TwoByTwoCase
    w: np.ndarray
    discriminant: float
    mle_psi2: np.ndarray | None = None
    infimum_g: float | None = None
    infimum_g_original: float | None = None

    @property
    def unique(self) -> bool:
        return self.case is TwoByTwoCase.COMPLEX

    def to_dict(self):
        return {
            "case": self.case.value,
            "w": self.w.tolist(),
            "discriminant": self.discriminant,
            "mle_psi2": None if self.mle_psi2 is None else self.mle_psi2.tolist(),
            "infimum_g": self.infimum_g,
            "infimum_g_original": self.infimum_g_original,
        }


def _invertible(y, name):
    y = np.asarray(y, dtype=float)
    if y.shape != (2, 2):
        raise DimensionError(f"{name} must be 2x2, got {y.shape}")
    if not np.all(np.isfinite(y)):
        raise DimensionError(f"{name} has non-finite entries")
    s = linalg.svdvals(y)
    if s[0] == 0 or s[-1] <= 4 * np.finfo(float).eps * s[0]:
        raise DimensionError(f"{name} is singular")
    return y


def complex_case_mle(w):
    """Trace-one ``psi2`` proportional to ``[[w12, (w22-w11)/2], [(w22-w11)/2, -w21]]``."""
    w = np.asarray(w, dtype=float)
    off = 0.5 * (w[1, 1] - w[0, 0])
    p = np.array([[w[0, 1], off], [off, -w[1, 0]]])
    return p / np.trace(p)


def classify_2x2(y1, y2, tol: float = 1e-12) -> TwoByTwoClassification:
    """Sort an invertible ``2 x 2`` pair into the three cases.

    The discriminant ``(tr W)^2 - 4 det W`` is evaluated as
    ``(w11 - w22)^2 + 4 w12 w21``, which avoids cancellation.  Values within
    ``tol`` times the squared entry scale of ``W`` count as a repeated
    eigenvalue; that eigenvalue is defective unless ``W`` is a multiple of
    the identity.

    Raises
    ------
    DimensionError
        If either matrix is not an invertible ``2 x 2`` matrix.
    """
    y1 = _invertible(y1, "y1")
    y2 = _invertible(y2, "y2")
    w = linalg.solve(y1, y2)
    disc = float((w[0, 0] - w[1, 1]) ** 2 + 4.0 * w[0, 1] * w[1, 0])
    scale = float(np.sum(np.abs(w))) ** 2
    if disc < -tol * scale:
        return TwoByTwoClassification(TwoByTwoCase.COMPLEX, w, disc, mle_psi2=complex_case_mle(w))
    if disc > tol * scale:
        return TwoByTwoClassification(TwoByTwoCase.REAL_DIAGONALIZABLE, w, disc)
    a = 0.5 * float(np.trace(w))
    if np.linalg.norm(w - a * np.eye(2)) <= np.sqrt(tol) * np.sqrt(scale):
        # W = a I: Y2 is a multiple of Y1 and every diagonal psi is optimal
        return TwoByTwoClassification(TwoByTwoCase.REAL_DIAGONALIZABLE, w, disc)
    inf_canon = 2.0 * log((1.0 + a * a) ** 2)
    # g of the data differs from g of the canonical pair by 2 m log|det Y1|
    inf_orig = inf_canon + 4.0 * log(abs(linalg.det(y1)))
    return TwoByTwoClassification(
        TwoByTwoCase.REAL_DEFECTIVE, w, disc, infimum_g=inf_canon, infimum_g_original=inf_orig
    )


# ---------------------------------------------------------------------------
# canonical (m+1) x m data


def _log_comb(n, k):
    return lgamma(n + 1) - lgamma(k + 1) - lgamma(n - k + 1)


def _binomial_row(n):
    """``C(n, 0), ..., C(n, n)`` as floats; log-space above ``n = 30``."""
    if n <= 30:
        return np.array([comb(n, k) for k in range(n + 1)], dtype=float)
    return np.exp([_log_comb(n, k) for k in range(n + 1)])


def mle_m2_plus_1(m: int):
    """``diag(C(m-1, j-1), j = 1..m)``, normalized so that ``phi_11 = 1``.

    The unique minimizer of the profile objective for the canonical pair
    ``Y1 = [I_m; 0]``, ``Y2 = [0; I_m]``.
    """
    if int(m) != m or m < 1:
        raise ValueError("m must be a positive integer")
    return np.diag(_binomial_row(int(m) - 1))


def g0_at_optimum(m: int) -> float:
    """``m log d(m) - (m+1) log e(m)`` in log-space.

    ``d(m) = (m/(m-1))^(m-1) / prod_{j=1}^{m-1} C(m-2, j-1)`` and
    ``e(m) = 1 / prod_{j=1}^{m} C(m-1, j-1)``.  ``m = 2`` gives ``2 log 2``.

    Notes
    -----
    For ``m >= 3`` this expression is the profile objective at the inverse
    ``Phi0^{-1}`` of the binomial diagonal, not at ``Phi0`` itself; the two
    agree only for ``m = 2``.  The minimum value of ``g`` is
    :func:`g_min_m2_plus_1`.
    """
    if int(m) != m or m < 2:
        raise ValueError("m must be an integer >= 2")
    m = int(m)
    log_d = (m - 1) * (log(m) - log(m - 1)) - sum(_log_comb(m - 2, j) for j in range(m - 1))
    log_e = -sum(_log_comb(m - 1, j) for j in range(m))
    return m * log_d - (m + 1) * log_e


def g_min_m2_plus_1(m: int) -> float:
    """Minimum of the profile objective for canonical ``(m+1) x m`` data.

    At ``Phi0 = diag(C(m-1, j))`` the row scatter ``Y1 Phi0 Y1^T + Y2 Phi0
    Y2^T`` is ``diag(C(m, j))`` (Pascal's rule), so the minimum is
    ``m sum_j log C(m, j) - (m+1) sum_j log C(m-1, j)``.
    """
    if int(m) != m or m < 1:
        raise ValueError("m must be a positive integer")
    m = int(m)
    return m * sum(_log_comb(m, j) for j in range(m + 1)) - (m + 1) * sum(
        _log_comb(m - 1, j) for j in range(m)
    )


# ---------------------------------------------------------------------------
# divisible case


@dataclass(frozen=True)
class CriticalPoint:
    """A diagonal critical point of ``g`` for canonical data.

    ``block_diagonal`` holds the entries in block coordinates (one chain of
    length ``l+1`` after another); ``canonical`` is the ``m2 x m2`` matrix in
    the stacked-identity coordinates of :func:`kronmle.pencil.canonical_pair`,
    obtained by placing entry ``p`` at column ``cols[p]``.
    """

    m1: int
    m2: int
    l: int
    n_a: int
    block_diagonal: np.ndarray
    cols: np.ndarray
    canonical: np.ndarray

    @property
    def block(self):
        return np.diag(self.block_diagonal)


def critical_points_nonunique(m1: int, m2: int, c) -> CriticalPoint:
    """Diagonal critical point with entries ``c_j C(l, k-1)`` on chain ``j``.

    Requires ``m1 > m2 + 1`` and ``(m1 - m2) | m2``, so that the canonical
    pair splits into ``n_a = m1 - m2`` chains of length ``l + 1 = m2 / n_a``.
    ``c`` has ``n_a`` positive entries with ``c[0] = 1``.  Every such point
    is a global minimizer of ``g`` and all share the same value of ``g``.

    Raises
    ------
    RegimeError
        Outside the divisible regime.
    ValueError
        For a malformed ``c``.
    """
    if not (m1 > m2 + 1 and m2 >= 1 and m2 % (m1 - m2) == 0):
        raise RegimeError(f"need m1 > m2 + 1 and (m1 - m2) | m2, got ({m1}, {m2})")
    n_a = m1 - m2
    l = m2 // n_a - 1
    c = np.asarray(c, dtype=float).ravel()
    if c.shape != (n_a,):
        raise ValueError(f"c must have {n_a} entries")
    if not np.all(np.isfinite(c)) or np.any(c <= 0):
        raise ValueError("c must be positive")
    if c[0] != 1:
        raise ValueError("c[0] must be 1")
    row = _binomial_row(l)
    block_diag = np.concatenate([cj * row for cj in c])
    _, cols, blocks = block_permutation(m1, m2)
    if any(b != l + 1 for b in blocks):
        raise KronMLEError("unexpected chain lengths")
    canon = np.zeros(m2)
    canon[cols] = block_diag
    return CriticalPoint(m1, m2, l, n_a, block_diag, cols, np.diag(canon))
