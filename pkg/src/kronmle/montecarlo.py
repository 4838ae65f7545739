"""Monte Carlo experiments: sampling, the real-eigenvalue probability and
empirical thresholds.

Random numbers come from numpy's counter-based Philox generator.  Trial
``i`` of a run with seed ``s`` uses its own stream keyed by
``splitmix64(s ^ i)``, so results do not depend on how trials are
scheduled across workers.
"""
from __future__ import annotations

import os
from collections import Counter
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from math import sqrt

import numpy as np

from .core import as_spd, spd_power
from .flipflop import FlipFlopConfig, StepIllDefined, fit

MASK64 = (1 << 64) - 1
DET_FLOOR = 1e-12
ENV_SEED = "KRONMLE_SEED"


def splitmix64(x: int) -> int:
    """One round of the splitmix64 output function."""
    x = (x + 0x9E3779B97F4A7C15) & MASK64
    x = ((x ^ (x >> 30)) * 0xBF58476D1CE4E5B9) & MASK64
    x = ((x ^ (x >> 27)) * 0x94D049BB133111EB) & MASK64
    return x ^ (x >> 31)


def rng_stream(seed: int, index: int = 0) -> np.random.Generator:
    """Philox generator for trial ``index`` of a run seeded with ``seed``."""
    key = splitmix64((int(seed) & MASK64) ^ (int(index) & MASK64))
    return np.random.Generator(np.random.Philox(key=key))


def default_seed(fallback: int = 0) -> int:
    """``$KRONMLE_SEED`` when set, else ``fallback``."""
    raw = os.environ.get(ENV_SEED)
    return int(raw) if raw not in (None, "") else fallback


@dataclass
class SimulationReport:
    """Counts of outcomes over ``trials`` runs.

    ``estimate`` is the fraction of trials with outcome ``target`` and
    ``stderr = sqrt(p (1 - p) / trials)``.
    """

    trials: int
    seed: int
    counts: dict
    target: str
    estimate: float = 0.0
    stderr: float = 0.0
    diagnostics: dict = field(default_factory=dict)

    def __post_init__(self):
        if sum(self.counts.values()) != self.trials:
            raise ValueError("counts do not add up to trials")
        p = self.counts.get(self.target, 0) / self.trials
        self.estimate = p
        self.stderr = sqrt(p * (1 - p) / self.trials)

    def fraction(self, label: str) -> float:
        return self.counts.get(label, 0) / self.trials

    def to_dict(self):
        return {
            "trials": self.trials,
            "seed": self.seed,
            "counts": dict(sorted(self.counts.items())),
            "target": self.target,
            "estimate": self.estimate,
            "stderr": self.stderr,
            "diagnostics": dict(sorted(self.diagnostics.items())),
        }


def _root(sigma, dim, name):
    sigma = as_spd(sigma, name)
    if sigma.shape != (dim, dim):
        raise ValueError(f"{name} must be {dim}x{dim}, got {sigma.shape}")
    return spd_power(sigma, 0.5)


def sample_matrix_normal(m1: int, m2: int, sigma1=None, sigma2=None, rng=None, n: int | None = None):
    """Draw ``A Z B`` with ``A = sigma1^(1/2)``, ``B = sigma2^(1/2)`` and ``Z`` standard normal.

    Row covariance ``sigma1`` and column covariance ``sigma2`` default to
    identities; ``rng`` defaults to the stream for seed 0.  With ``n`` the
    result has shape ``(n, m1, m2)``.
    """
    a = np.eye(m1) if sigma1 is None else _root(sigma1, m1, "sigma1")
    b = np.eye(m2) if sigma2 is None else _root(sigma2, m2, "sigma2")
    rng = rng_stream(0) if rng is None else rng
    shape = (m1, m2) if n is None else (n, m1, m2)
    z = rng.standard_normal(shape)
    return a @ z @ b


def _map(fn, items, jobs):
    if jobs is None or jobs <= 1:
        return [fn(i) for i in items]
    with ThreadPoolExecutor(max_workers=jobs) as pool:
        return list(pool.map(fn, items, chunksize=256))


def _eig_trial(seed):
    def run(i):
        rng = rng_stream(seed, i)
        redraws = 0
        while True:
            y = rng.standard_normal((2, 2, 2))
            if abs(y[0, 0, 0] * y[0, 1, 1] - y[0, 0, 1] * y[0, 1, 0]) >= DET_FLOOR:
                return y, redraws
            redraws += 1

    return run


def real_eigs_discriminant(y1, y2):
    """``(tr W)^2 - 4 det W`` for ``W = Y1^{-1} Y2``, batched over leading axes.

    Uses ``W = adj(Y1) Y2 / det(Y1)`` and multiplies through by ``det(Y1)^2``,
    which keeps the sign and avoids the division.
    """
    y1 = np.asarray(y1, dtype=float)
    y2 = np.asarray(y2, dtype=float)
    a, b, c, d = y1[..., 0, 0], y1[..., 0, 1], y1[..., 1, 0], y1[..., 1, 1]
    adj = np.stack([np.stack([d, -b], -1), np.stack([-c, a], -1)], -2)
    v = adj @ y2  # det(Y1) * W
    return (v[..., 0, 0] - v[..., 1, 1]) ** 2 + 4.0 * v[..., 0, 1] * v[..., 1, 0]


def prob_real_eigs_2x2(trials: int, seed: int, jobs: int = 1) -> SimulationReport:
    """Fraction of standard normal pairs whose ``W = Y1^{-1} Y2`` has real eigenvalues.

    Draws with ``|det Y1| < 1e-12`` are redrawn from the same trial stream
    and counted in ``diagnostics["redraws"]``.
    """
    if trials < 1:
        raise ValueError("trials must be >= 1")
    out = _map(_eig_trial(seed), range(trials), jobs)
    y = np.array([o[0] for o in out])
    redraws = sum(o[1] for o in out)
    real = int(np.count_nonzero(real_eigs_discriminant(y[:, 0], y[:, 1]) >= 0))
    return SimulationReport(
        trials, int(seed), {"real": real, "complex": trials - real}, "real", diagnostics={"redraws": redraws}
    )


def empirical_threshold(m1: int, m2: int, n: int, trials: int, seed: int,
                        config: FlipFlopConfig | None = None, jobs: int = 1) -> SimulationReport:
    """Fit statuses over ``trials`` standard matrix normal samples of size ``n``.

    ``estimate`` is the ``UniqueMax`` fraction.  Samples on which the update
    cannot be formed are counted as ``StepIllDefined``.
    """
    if trials < 1:
        raise ValueError("trials must be >= 1")
    config = config or FlipFlopConfig()

    def run(i):
        y = rng_stream(seed, i).standard_normal((n, m1, m2))
        try:
            return fit(y, config).status.value
        except StepIllDefined:
            return "StepIllDefined"

    counts = Counter(_map(run, range(trials), jobs))
    return SimulationReport(trials, int(seed), dict(counts), "UniqueMax",
                            diagnostics={"m1": m1, "m2": m2, "n": n})
