"""Data containers, the matrix normal log-likelihood and its profile.

Observations are stored as a stacked array of shape ``(n, m1, m2)``.
Precision matrices are plain symmetric ``ndarray`` objects; positive
definiteness is checked by attempting a Cholesky factorization.
"""
from __future__ import annotations

import enum
from dataclasses import dataclass, field

import numpy as np
from scipy import linalg


class KronMLEError(Exception):
    """Base class for errors raised by this package."""


class DimensionError(KronMLEError, ValueError):
    pass


class NotPositiveDefinite(KronMLEError, ValueError):
    pass


class DegenerateSample(KronMLEError):
    """The matrix ``sum_i Y_i Psi Y_i^T`` (or its transpose analogue) is singular."""


class Normalization(str, enum.Enum):
    TRACE_ONE = "TraceOne"
    LEADING_ENTRY_ONE = "LeadingEntryOne"
    NONE = "None"


class FitStatus(str, enum.Enum):
    UNIQUE_MAX = "UniqueMax"
    NON_UNIQUE_MAX = "NonUniqueMax"
    DIVERGED = "Diverged"
    MAX_ITERATIONS = "MaxIterations"

    @property
    def converged(self) -> bool:
        return self in (FitStatus.UNIQUE_MAX, FitStatus.NON_UNIQUE_MAX)


# ---------------------------------------------------------------------------
# positive definite helpers


def symmetrize(a):
    a = np.asarray(a, dtype=float)
    return 0.5 * (a + a.T)


def as_spd(a, name="matrix"):
    """Return a symmetrized float copy of ``a``, raising if it is not PD.

    Parameters
    ----------
    a : array_like, shape (m, m)
    name : str
        Used in error messages.

    Raises
    ------
    NotPositiveDefinite
        If ``a`` is not square, not finite, not symmetric to ~1e-12 relative
        accuracy, or its Cholesky factorization fails.
    """
    a = np.asarray(a, dtype=float)
    if a.ndim != 2 or a.shape[0] != a.shape[1] or a.shape[0] == 0:
        raise NotPositiveDefinite(f"{name} must be a non-empty square matrix, got shape {a.shape}")
    if not np.all(np.isfinite(a)):
        raise NotPositiveDefinite(f"{name} has non-finite entries")
    scale = max(np.max(np.abs(a)), np.finfo(float).tiny)
    if np.max(np.abs(a - a.T)) > 1e-12 * scale:
        raise NotPositiveDefinite(f"{name} is not symmetric")
    a = symmetrize(a)
    try:
        linalg.cholesky(a, lower=True)
    except linalg.LinAlgError:
        raise NotPositiveDefinite(f"{name} is not positive definite") from None
    return a


def is_spd(a) -> bool:
    try:
        as_spd(a)
    except NotPositiveDefinite:
        return False
    return True


def logdet_spd(a):
    """log det of a symmetric positive definite matrix via Cholesky pivots."""
    try:
        c = linalg.cholesky(symmetrize(a), lower=True)
    except linalg.LinAlgError:
        raise NotPositiveDefinite("matrix is not positive definite") from None
    return 2.0 * float(np.sum(np.log(np.diag(c))))


def inv_spd(a):
    """Inverse of an SPD matrix through its Cholesky factor."""
    try:
        cf = linalg.cho_factor(symmetrize(a), lower=True)
    except linalg.LinAlgError:
        raise NotPositiveDefinite("matrix is not positive definite") from None
    return symmetrize(linalg.cho_solve(cf, np.eye(a.shape[0])))


def spd_power(a, t):
    """``a**t`` for SPD ``a`` through a symmetric eigendecomposition."""
    w, v = linalg.eigh(symmetrize(a))
    w = np.maximum(w, 1e-300)
    return symmetrize((v * w**t) @ v.T)


def random_spd(dim, rng, jitter=0.1):
    a = rng.standard_normal((dim, dim))
    return symmetrize(a @ a.T + jitter * dim * np.eye(dim))


# ---------------------------------------------------------------------------
# containers


@dataclass(frozen=True)
class DataSample:
    """``n`` real ``m1 x m2`` observation matrices.

    Parameters
    ----------
    matrices : array_like, shape (n, m1, m2)
        Any sequence of equally shaped 2-d arrays is accepted.
    """

    matrices: np.ndarray

    def __post_init__(self):
        y = np.array(self.matrices, dtype=float)
        if y.ndim == 2:
            y = y[None]
        if y.ndim != 3 or min(y.shape) < 1:
            raise DimensionError(f"expected an (n, m1, m2) stack of matrices, got shape {y.shape}")
        if not np.all(np.isfinite(y)):
            raise DimensionError("sample contains non-finite entries")
        y.setflags(write=False)
        object.__setattr__(self, "matrices", y)

    @property
    def n(self) -> int:
        return self.matrices.shape[0]

    @property
    def m1(self) -> int:
        return self.matrices.shape[1]

    @property
    def m2(self) -> int:
        return self.matrices.shape[2]

    @property
    def shape(self):
        return (self.m1, self.m2, self.n)

    def __len__(self):
        return self.n

    def __getitem__(self, i):
        return self.matrices[i]

    def stacked(self):
        """The ``m1 x n*m2`` matrix ``(Y_1, ..., Y_n)``."""
        return np.hstack(list(self.matrices))

    def transposed(self) -> DataSample:
        """The sample of transposes, which swaps the roles of rows and columns."""
        return DataSample(np.transpose(self.matrices, (0, 2, 1)))


@dataclass(frozen=True)
class PrecisionPair:
    """Row precision ``psi1`` (``m1 x m1``) and column precision ``psi2`` (``m2 x m2``).

    Only the Kronecker product ``psi2 (x) psi1`` is identified; ``normalization``
    records which representative of ``(c psi1, psi2 / c)`` is stored.
    """

    psi1: np.ndarray
    psi2: np.ndarray
    normalization: Normalization = Normalization.NONE

    def __post_init__(self):
        object.__setattr__(self, "psi1", as_spd(self.psi1, "psi1"))
        object.__setattr__(self, "psi2", as_spd(self.psi2, "psi2"))
        object.__setattr__(self, "normalization", Normalization(self.normalization))

    @property
    def m1(self) -> int:
        return self.psi1.shape[0]

    @property
    def m2(self) -> int:
        return self.psi2.shape[0]

    def kron(self):
        return np.kron(self.psi2, self.psi1)

    def normalized(self, kind=Normalization.TRACE_ONE) -> PrecisionPair:
        kind = Normalization(kind)
        if kind is Normalization.TRACE_ONE:
            c = np.trace(self.psi2)
        elif kind is Normalization.LEADING_ENTRY_ONE:
            c = self.psi2[0, 0]
        else:
            return PrecisionPair(self.psi1, self.psi2, kind)
        return PrecisionPair(self.psi1 * c, self.psi2 / c, kind)


@dataclass
class FitReport:
    """Outcome of a flip-flop run.

    ``g_trace[t]`` is the profile objective after ``t`` full iterations
    (``g_trace[0]`` at the starting value) and ``delta_trace[t] =
    g_trace[t+1] - g_trace[t]``.
    """

    status: FitStatus
    estimate: PrecisionPair | None
    g_trace: list = field(default_factory=list)
    delta_trace: list = field(default_factory=list)
    iterations: int = 0
    classified_by: str = ""

    def to_dict(self):
        est = None
        if self.estimate is not None:
            est = {
                "psi1": self.estimate.psi1.tolist(),
                "psi2": self.estimate.psi2.tolist(),
                "normalization": self.estimate.normalization.value,
            }
        return {
            "status": self.status.value,
            "iterations": self.iterations,
            "classified_by": self.classified_by,
            "g_final": self.g_trace[-1] if self.g_trace else None,
            "g_trace": list(self.g_trace),
            "delta_trace": list(self.delta_trace),
            "estimate": est,
        }

    def trace_rows(self):
        """``(iteration, g, delta)`` rows; delta is empty for iteration 0."""
        rows = [(0, self.g_trace[0], None)] if self.g_trace else []
        for t, (gv, dv) in enumerate(zip(self.g_trace[1:], self.delta_trace), start=1):
            rows.append((t, gv, dv))
        return rows


def _as_sample(sample):
    return sample if isinstance(sample, DataSample) else DataSample(sample)


# ---------------------------------------------------------------------------
# likelihood


def row_scatter(sample, psi2):
    """``sum_i Y_i psi2 Y_i^T`` (``m1 x m1``)."""
    y = _as_sample(sample).matrices
    return symmetrize(np.einsum("irc,cd,isd->rs", y, psi2, y))


def col_scatter(sample, psi1):
    """``sum_i Y_i^T psi1 Y_i`` (``m2 x m2``)."""
    y = _as_sample(sample).matrices
    return symmetrize(np.einsum("irc,rs,isd->cd", y, psi1, y))


def log_likelihood(sample, pair: PrecisionPair) -> float:
    """Twice the matrix normal log-likelihood, additive constant dropped.

    ``n m2 logdet(psi1) + n m1 logdet(psi2) - tr(psi1 sum_i Y_i psi2 Y_i^T)``
    """
    sample = _as_sample(sample)
    if (pair.m1, pair.m2) != (sample.m1, sample.m2):
        raise DimensionError(
            f"precision pair has dims ({pair.m1}, {pair.m2}), sample has ({sample.m1}, {sample.m2})"
        )
    n, m1, m2 = sample.n, sample.m1, sample.m2
    trace_term = float(np.sum(pair.psi1 * row_scatter(sample, pair.psi2)))
    return n * m2 * logdet_spd(pair.psi1) + n * m1 * logdet_spd(pair.psi2) - trace_term


def _check_psi(psi, dim, name):
    psi = as_spd(psi, name)
    if psi.shape[0] != dim:
        raise DimensionError(f"{name} must be {dim}x{dim}, got {psi.shape}")
    return psi


def _logdet_scatter(s):
    try:
        return logdet_spd(s)
    except NotPositiveDefinite:
        raise DegenerateSample("inner sum of the profile objective is singular") from None


def profile_objective(sample, psi) -> float:
    """``g(psi) = m2 logdet(sum_i Y_i psi Y_i^T) - m1 logdet(psi)``.

    Minimizing ``g`` over positive definite ``m2 x m2`` matrices is equivalent
    to maximizing the likelihood. ``g`` is invariant under ``psi -> c psi``.
    """
    sample = _as_sample(sample)
    psi = _check_psi(psi, sample.m2, "psi")
    try:
        chol = linalg.cholesky(symmetrize(psi), lower=True)
    except linalg.LinAlgError:
        raise NotPositiveDefinite("psi is not positive definite") from None
    # logdet of the scatter from a QR of its factor (Y_1 L, ..., Y_n L):
    # forming the scatter first would square its condition number
    n, m1, m2 = sample.n, sample.m1, sample.m2
    if n * m2 < m1:
        raise DegenerateSample("inner sum of the profile objective is singular")
    f = np.einsum("irc,cd->ird", sample.matrices, chol).transpose(1, 0, 2).reshape(m1, n * m2)
    r = np.abs(np.diag(linalg.qr(f.T, mode="r")[0]))
    if not np.all(r > 0) or not np.all(np.isfinite(r)):
        raise DegenerateSample("inner sum of the profile objective is singular")
    return 2.0 * (m2 * float(np.sum(np.log(r))) - m1 * float(np.sum(np.log(np.diag(chol)))))


def profile_psi1(sample, psi2):
    """Maximizer of ``psi1 -> l(psi1, psi2)``: ``((1/(n m2)) sum_i Y_i psi2 Y_i^T)^-1``."""
    sample = _as_sample(sample)
    psi2 = _check_psi(psi2, sample.m2, "psi2")
    s = row_scatter(sample, psi2) / (sample.n * sample.m2)
    try:
        return inv_spd(s)
    except NotPositiveDefinite:
        raise DegenerateSample("sum_i Y_i psi2 Y_i^T is singular") from None


def profile_psi2(sample, psi1):
    """Maximizer of ``psi2 -> l(psi1, psi2)``: ``((1/(n m1)) sum_i Y_i^T psi1 Y_i)^-1``."""
    sample = _as_sample(sample)
    psi1 = _check_psi(psi1, sample.m1, "psi1")
    s = col_scatter(sample, psi1) / (sample.n * sample.m1)
    try:
        return inv_spd(s)
    except NotPositiveDefinite:
        raise DegenerateSample("sum_i Y_i^T psi1 Y_i is singular") from None


# ---------------------------------------------------------------------------
# geometry


def geodesic(q0, q1, t):
    """Point at time ``t`` on the affine-invariant geodesic from ``q0`` to ``q1``.

    ``q0^(1/2) (q0^(-1/2) q1 q0^(-1/2))^t q0^(1/2)``; any real ``t`` is allowed.
    """
    q0 = as_spd(q0, "q0")
    q1 = as_spd(q1, "q1")
    if q0.shape != q1.shape:
        raise DimensionError("geodesic endpoints differ in dimension")
    w, v = linalg.eigh(q0)
    w = np.maximum(w, 1e-300)
    half = (v * np.sqrt(w)) @ v.T
    ihalf = (v / np.sqrt(w)) @ v.T
    inner = spd_power(ihalf @ q1 @ ihalf, t)
    return symmetrize(half @ inner @ half)


def group_transform(sample, a, b, cond_warn=1e12):
    """Apply ``Y_i -> a Y_i b`` to every observation.

    Raises ``DimensionError`` when ``a`` or ``b`` is singular or mis-shaped.
    A ``RuntimeWarning`` is issued when either condition number exceeds
    ``cond_warn``.
    """
    import warnings

    sample = _as_sample(sample)
    a = np.asarray(a, dtype=float)
    b = np.asarray(b, dtype=float)
    if a.shape != (sample.m1, sample.m1) or b.shape != (sample.m2, sample.m2):
        raise DimensionError("transform shapes do not match the sample")
    for name, mat in (("a", a), ("b", b)):
        s = linalg.svdvals(mat)
        if s[-1] <= np.finfo(float).eps * s[0] * mat.shape[0] or s[0] == 0:
            raise DimensionError(f"{name} is singular")
        if s[0] / s[-1] > cond_warn:
            warnings.warn(f"{name} has condition number {s[0] / s[-1]:.3g}", RuntimeWarning, stacklevel=2)
    return DataSample(np.einsum("rs,isc,cd->ird", a, sample.matrices, b))
