"""Flip-flop block-coordinate ascent for the Kronecker MLE.

Each iteration maximizes the likelihood exactly in ``psi1`` and then in
``psi2``, so the profile objective ``g`` never increases.  The run is
labelled by what ``g`` does: it settles (converged), keeps dropping by a
roughly constant amount (diverged), or neither within the budget.
"""
from __future__ import annotations

import enum
from dataclasses import dataclass, field

import numpy as np
from scipy import linalg

from .core import (
    DataSample,
    DegenerateSample,
    FitReport,
    FitStatus,
    KronMLEError,
    Normalization,
    NotPositiveDefinite,
    PrecisionPair,
    as_spd,
    profile_psi1,
    profile_psi2,
    random_spd,
)
from .minrank import Verdict, eigen_case_from_data, s2, sn_m2_equals_2
from .thresholds import thresholds


class StepIllDefined(KronMLEError):
    """An inner sum of the flip-flop update is singular."""


class InitKind(str, enum.Enum):
    IDENTITY = "Identity"
    RANDOM_SPD = "RandomSpd"
    GIVEN = "Given"


@dataclass(frozen=True)
class Init:
    """Starting value for ``psi2``; build with the class methods."""

    kind: InitKind = InitKind.IDENTITY
    seed: int | None = None
    matrix: np.ndarray | None = None

    @classmethod
    def identity(cls):
        return cls(InitKind.IDENTITY)

    @classmethod
    def random_spd(cls, seed: int):
        return cls(InitKind.RANDOM_SPD, seed=int(seed))

    @classmethod
    def given(cls, matrix):
        return cls(InitKind.GIVEN, matrix=as_spd(matrix, "initial psi2"))

    def build(self, dim: int):
        if self.kind is InitKind.IDENTITY:
            return np.eye(dim)
        if self.kind is InitKind.RANDOM_SPD:
            return random_spd(dim, np.random.default_rng(self.seed))
        if self.matrix.shape != (dim, dim):
            raise ValueError(f"initial psi2 must be {dim}x{dim}")
        return self.matrix.copy()


@dataclass(frozen=True)
class FlipFlopConfig:
    """Stopping and classification rules.

    A run has converged when ``|dg| <= rel_tol * (1 + |g|)`` and the
    trace-normalized ``psi2`` moved by at most ``step_tol`` in relative
    Frobenius norm.  It has diverged when the last ``divergence_window``
    steps all lowered ``g`` by at least ``divergence_slope`` and the drops
    stayed level, i.e. they differ by at most ``divergence_plateau`` times
    their size.  A slowly converging run has drops that keep shrinking.

    With ``accelerate`` two candidates compete with the flip-flop image ``q``
    of the current iterate ``p``: ``q`` pushed further along the geodesic
    from ``p`` (times 2, 4, ... up to ``2**max_extrapolation``) while ``g``
    keeps falling, and an Anderson mixing of the last ``anderson_memory``
    flip-flop steps in log coordinates.  The lowest ``g`` wins, so ``g``
    still decreases monotonically and the accepted point is never worse
    than plain flip-flop.  Divergence is judged on the drop of the plain
    flip-flop step.  Set ``accelerate=False`` for the textbook iteration.

    A run that reaches condition number ``boundary_cond`` with ``g`` still
    falling is also reported as diverged: the iterates are leaving every
    compact subset of the cone.

    A converged run is finished with up to ``refine_steps`` Newton steps on
    ``g`` (when ``m2 <= refine_max_dim``); they are appended to the traces.
    """

    max_iterations: int = 500
    rel_tol: float = 1e-10
    step_tol: float = 1e-9
    divergence_window: int = 20
    divergence_slope: float = 1e-6
    divergence_plateau: float = 0.05
    boundary_cond: float = 1e10
    accelerate: bool = True
    max_extrapolation: int = 10
    anderson_memory: int = 5
    refine_steps: int = 20
    refine_max_dim: int = 30
    init: Init = field(default_factory=Init)
    normalization: Normalization = Normalization.TRACE_ONE
    restarts: int = 5
    dispersion_tol: float = 1e-6
    use_theory: bool = True

    def __post_init__(self):
        if self.max_iterations < 1:
            raise ValueError("max_iterations must be >= 1")
        if not self.rel_tol > 0:
            raise ValueError("rel_tol must be positive")
        if self.step_tol < 0:
            raise ValueError("step_tol must be non-negative")
        if self.divergence_window < 2:
            raise ValueError("divergence_window must be >= 2")
        if self.max_extrapolation < 0 or self.anderson_memory < 0 or self.refine_steps < 0:
            raise ValueError("max_extrapolation, anderson_memory and refine_steps must be >= 0")
        if self.restarts < 1:
            raise ValueError("restarts must be >= 1")
        object.__setattr__(self, "normalization", Normalization(self.normalization))


def _check_necessary(sample):
    n, m1, m2 = sample.n, sample.m1, sample.m2
    if n * m2 < m1 or n * m1 < m2:
        raise StepIllDefined(
            f"n*m2 >= m1 and n*m1 >= m2 fail for n={n}, m1={m1}, m2={m2}; the likelihood is unbounded"
        )


def flipflop_step(sample, psi2):
    """One full update ``psi2 -> psi1 -> psi2_next``.

    Returns ``(psi1, psi2_next)``, both unnormalized.
    """
    sample = sample if isinstance(sample, DataSample) else DataSample(sample)
    _check_necessary(sample)
    try:
        psi1 = profile_psi1(sample, psi2)
        psi2_next = profile_psi2(sample, psi1)
    except (DegenerateSample, NotPositiveDefinite) as exc:
        raise StepIllDefined(str(exc)) from None
    return psi1, psi2_next


def _rel(a, b):
    return float(np.linalg.norm(a - b) / max(np.linalg.norm(b), 1e-300))


# Lean versions of the core routines for the inner loop: no validation,
# failures surface as LinAlgError.


def _g(y, psi):
    n, m1, m2 = y.shape
    if n * m2 < m1:
        raise np.linalg.LinAlgError("row scatter is singular")
    lp = np.linalg.cholesky(psi)
    # QR of the scatter's factor keeps the conditioning of the data, not its square
    f = (y @ lp).transpose(1, 0, 2).reshape(m1, n * m2)
    r = np.abs(np.diag(np.linalg.qr(f.T, mode="r")))
    g = 2 * m2 * np.log(r).sum() - 2 * m1 * np.log(np.diag(lp)).sum()
    if not np.isfinite(g):
        raise np.linalg.LinAlgError("objective is not finite")
    return g


def _noise(g):
    # below this, differences in g are rounding: a flat set of optima must not
    # let acceleration wander along it
    return 1e-13 * (1 + abs(g))


def _finite(a):
    if not np.all(np.isfinite(a)):
        raise np.linalg.LinAlgError("non-finite iterate")
    return a


def _step(y, psi2):
    n, m1, m2 = y.shape
    psi1 = np.linalg.inv(np.einsum("irc,cd,isd->rs", y, psi2, y) / (n * m2))
    psi1 = 0.5 * (psi1 + psi1.T)
    nxt = np.linalg.inv(np.einsum("irc,rs,isd->cd", y, psi1, y) / (n * m1))
    nxt = 0.5 * (nxt + nxt.T)
    return _finite(nxt / np.trace(nxt))


def _geodesic_point(p, q, t):
    w, v = np.linalg.eigh(p)
    if w[0] <= 0:
        raise np.linalg.LinAlgError("iterate left the cone")
    half = (v * np.sqrt(w)) @ v.T
    ihalf = (v / np.sqrt(w)) @ v.T
    u, z = np.linalg.eigh(ihalf @ q @ ihalf)
    if u[0] <= 0:
        raise np.linalg.LinAlgError("iterate left the cone")
    r = half @ ((z * u**t) @ z.T) @ half
    r = 0.5 * (r + r.T)
    return _finite(r / np.trace(r))


def _extrapolate(y, p, q, gq, max_power, cond):
    """Walk past ``q`` on the geodesic from ``p`` while ``g`` keeps falling."""
    best_g, best = gq, q
    t = 2.0
    for _ in range(max_power):
        try:
            r = _geodesic_point(p, q, t)
            gr = _g(y, r)
        except np.linalg.LinAlgError:
            break
        # never jump to where g itself can no longer be evaluated reliably
        if not gr < best_g - _noise(best_g) or _at_boundary(r, cond):
            break
        best_g, best = gr, r
        t *= 2
    return best, best_g


def _logm(p):
    w, v = np.linalg.eigh(p)
    if w[0] <= 0:
        raise np.linalg.LinAlgError("iterate left the cone")
    return (v * np.log(w)) @ v.T


def _expm(x):
    w, v = np.linalg.eigh(x)
    r = (v * np.exp(w - w.max())) @ v.T
    r = 0.5 * (r + r.T)
    return _finite(r / np.trace(r))


class _Anderson:
    """Type-II Anderson mixing for the fixed point ``log p = log F(p)``."""

    def __init__(self, dim, memory):
        self.idx = np.triu_indices(dim)
        self.dim = dim
        self.memory = memory
        self.xs, self.rs = [], []

    def propose(self, p, q):
        x = _logm(p)[self.idx]
        r = _logm(q)[self.idx] - x
        self.xs = (self.xs + [x])[-self.memory - 1:]
        self.rs = (self.rs + [r])[-self.memory - 1:]
        if len(self.xs) < 2:
            return None
        dx = np.diff(np.array(self.xs), axis=0).T
        dr = np.diff(np.array(self.rs), axis=0).T
        gamma = np.linalg.lstsq(dr, r, rcond=None)[0]
        xa = x + r - (dx + dr) @ gamma
        out = np.zeros((self.dim, self.dim))
        out[self.idx] = xa
        return _expm(out + np.triu(out, 1).T)


def _newton_direction(y, psi):
    """Newton step for ``g`` in whitened coordinates ``psi = r expm(X) r``.

    Returns ``(r, X, decrement)``.  ``X`` is trace-free because scaling
    leaves ``g`` unchanged; the Hessian can still be singular along the
    optimal set of a non-unique MLE, so the system is solved by least squares.
    """
    _, m1, m2 = y.shape
    w, v = np.linalg.eigh(psi)
    if w[0] <= 0:
        raise np.linalg.LinAlgError("iterate left the cone")
    r = (v * np.sqrt(w)) @ v.T
    z = y @ r
    chol = np.linalg.cholesky(np.einsum("nia,nja->ij", z, z))
    b = np.linalg.solve(chol, z)
    grad = m2 * np.einsum("nia,nib->ab", b, b) - m1 * np.eye(m2)
    # A(E_ab) = sum_i B_i E_ab B_i^T over the symmetric basis E_ab, a <= b
    k = np.einsum("nia,njb->abij", b, b)
    ia, ib = np.triu_indices(m2)
    cols = k[ia, ib] + np.where((ia != ib)[:, None, None], k[ib, ia], 0.0)
    amat = cols.reshape(len(ia), -1).T
    weight = np.where(ia == ib, 1.0, 2.0)
    hess = -m2 * amat.T @ amat + m1 * np.diag(weight)
    gvec = weight * grad[ia, ib]
    # solve on trace-free X: the scale direction is an exact null direction
    basis = linalg.null_space((ia == ib).astype(float)[None, :])
    x = -basis @ np.linalg.lstsq(basis.T @ hess @ basis, basis.T @ gvec, rcond=None)[0]
    step = np.zeros((m2, m2))
    step[ia, ib] = x
    step = step + np.triu(step, 1).T
    return r, step, float(-gvec @ x)


def _refine(y, psi, g, steps):
    """Newton polish of a converged iterate; returns the accepted ``(psi, g)`` pairs.

    Flip-flop contracts slowly when the optimum is badly conditioned, so a
    tiny step does not always mean a small error.  Curvature does.  A step
    is kept only if ``g`` does not rise.
    """
    out = []
    for _ in range(steps):
        try:
            r, step, dec = _newton_direction(y, psi)
        except np.linalg.LinAlgError:
            break
        if not dec > 1e-28:
            break
        for scale in (1.0, 0.5, 0.25):
            try:
                cand = r @ _expm(scale * step) @ r
                cand = 0.5 * (cand + cand.T)
                cand = cand / np.trace(cand)
                gc = _g(y, cand)
            except np.linalg.LinAlgError:
                continue
            if gc <= g + 1e-14 * (1 + abs(g)):
                break
        else:
            break
        psi, g = cand, gc
        out.append((psi, g))
        if dec < 1e-24:
            break
    return out


def _plateau(drops, window, slope, rtol):
    if len(drops) < window:
        return False
    tail = np.asarray(drops[-window:])
    if np.any(tail > -slope):
        return False
    return bool(np.ptp(tail) <= rtol * np.min(np.abs(tail)))


def _at_boundary(psi, cond):
    try:
        w = np.linalg.eigvalsh(psi)
    except np.linalg.LinAlgError:
        return True
    return not w[0] > w[-1] / cond


def _run(sample, config: FlipFlopConfig, init: Init):
    """The bare iteration. Returns ``(status, psi2, g_trace, delta_trace)``."""
    y = sample.matrices
    psi2 = init.build(sample.m2)
    psi2 = psi2 / np.trace(psi2)
    try:
        g_trace = [_g(y, psi2)]
    except np.linalg.LinAlgError:
        raise StepIllDefined("inner sum of the profile objective is singular") from None
    deltas, plain = [], []
    window, slope, cond = config.divergence_window, config.divergence_slope, config.boundary_cond
    mixer = _Anderson(sample.m2, config.anderson_memory) if config.anderson_memory > 0 else None
    for _ in range(config.max_iterations):
        try:
            q = _step(y, psi2)
            gq = _g(y, q)
        except np.linalg.LinAlgError:
            # the iterate ran into the edge of the cone: the numerical end
            # point of a divergent run
            if _at_boundary(psi2, cond):
                return FitStatus.DIVERGED, psi2, g_trace, deltas
            raise StepIllDefined("flip-flop update is singular at the current iterate") from None
        plain.append(gq - g_trace[-1])
        if config.accelerate:
            step_q = q
            q, gq = _extrapolate(y, psi2, step_q, gq, config.max_extrapolation, cond)
            if mixer is not None:
                try:
                    a = mixer.propose(psi2, step_q)
                    if a is not None:
                        ga = _g(y, a)
                        if ga < gq - _noise(gq) and not _at_boundary(a, cond):
                            q, gq = a, ga
                except np.linalg.LinAlgError:
                    pass
        deltas.append(gq - g_trace[-1])
        g_trace.append(gq)
        moved = _rel(q, psi2)
        psi2 = q
        if abs(deltas[-1]) <= config.rel_tol * (1 + abs(gq)) and moved <= config.step_tol:
            if config.refine_steps and sample.m2 <= config.refine_max_dim:
                for refined, gr in _refine(y, psi2, gq, config.refine_steps):
                    deltas.append(gr - g_trace[-1])
                    g_trace.append(gr)
                    psi2 = refined
            return "converged", psi2, g_trace, deltas
        if _plateau(plain, window, slope, config.divergence_plateau) or (
            plain[-1] < 0 and _at_boundary(psi2, cond)
        ):
            return FitStatus.DIVERGED, psi2, g_trace, deltas
    return FitStatus.MAX_ITERATIONS, psi2, g_trace, deltas


def theory_verdict(sample):
    """Existence verdict from exact theory, or ``(None, "")`` when none applies.

    Covers ``n = 2`` in the regime ``2 min(m) >= max(m)`` through ``S_2``,
    column size 2 through ``S_n(m1, 2)`` and otherwise the exactly known
    thresholds.  Conditional cases read the eigenvalue case off the data.
    """
    sample = sample if isinstance(sample, DataSample) else DataSample(sample)
    if sample.m1 < sample.m2:
        sample = sample.transposed()
    n, a, b = sample.n, sample.m1, sample.m2
    if n == 2 and b >= 2 and a <= 2 * b:
        rep = s2(a, b)
        if rep.conditional:
            rep = rep.resolve(eigen_case_from_data(sample))
        return rep.verdict, "S2"
    if b == 2 and 2 <= a < 2 * n:
        case = eigen_case_from_data(sample) if a == n else None
        return sn_m2_equals_2(a, n, case).verdict, "Sn(m1,2)"
    rep = thresholds(a, b)
    if rep.exact:
        if n >= rep.n_u:
            return Verdict.UNIQUE, "thresholds"
        if n >= rep.n_e:
            return Verdict.NON_UNIQUE, "thresholds"
        return Verdict.NONE, "thresholds"
    return None, ""


def _kron(sample, psi2):
    return np.kron(psi2, profile_psi1(sample, psi2))


def _dispersion(sample, config, kron_ref):
    for i in range(config.restarts):
        status, psi2, *_ = _run(sample, config, Init.random_spd(i))
        if status == "converged" and _rel(_kron(sample, psi2), kron_ref) > config.dispersion_tol:
            return FitStatus.NON_UNIQUE_MAX
    return FitStatus.UNIQUE_MAX


def fit(sample, config: FlipFlopConfig | None = None) -> FitReport:
    """Run flip-flop and classify the outcome.

    Converged runs are labelled ``UniqueMax`` or ``NonUniqueMax`` by exact
    theory when it covers the shape (see :func:`theory_verdict`) and by a
    multi-start dispersion test otherwise.  ``classified_by`` names the rule.

    Raises
    ------
    StepIllDefined
        If the update cannot be formed, e.g. ``n m2 < m1``.
    """
    config = config or FlipFlopConfig()
    sample = sample if isinstance(sample, DataSample) else DataSample(sample)
    _check_necessary(sample)
    status, psi2, g_trace, deltas = _run(sample, config, config.init)

    estimate = None
    if status != FitStatus.DIVERGED:
        psi2 = 0.5 * (psi2 + psi2.T)
        estimate = PrecisionPair(profile_psi1(sample, psi2), psi2, Normalization.TRACE_ONE)
        estimate = estimate.normalized(config.normalization)

    label = ""
    if status == "converged":
        verdict = None
        if config.use_theory:
            verdict, label = theory_verdict(sample)
        if verdict is Verdict.UNIQUE:
            status = FitStatus.UNIQUE_MAX
        elif verdict is Verdict.NON_UNIQUE:
            status = FitStatus.NON_UNIQUE_MAX
        else:
            # no theory, or theory says the data should not have an MLE
            status = _dispersion(sample, config, _kron(sample, psi2))
            label = "dispersion"
    return FitReport(status, estimate, g_trace, deltas, len(deltas), label)
