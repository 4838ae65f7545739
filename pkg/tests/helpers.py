"""Shared oracles for the test suite."""
import numpy as np

from kronmle.core import profile_objective


def rel_err(a, b):
    a = np.asarray(a, dtype=float)
    b = np.asarray(b, dtype=float)
    return float(np.linalg.norm(a - b) / np.linalg.norm(b))


def trace_one(p):
    p = np.asarray(p, dtype=float)
    return p / np.trace(p)


def fd_gradient(sample, psi, h=1e-6):
    """Central differences of g over symmetric perturbations with psi[0, 0] fixed.

    Entry (i, j), i <= j, (0, 0) excluded, is the derivative along
    E_ij + E_ji (E_ii on the diagonal).
    """
    psi = np.asarray(psi, dtype=float)
    m = psi.shape[0]
    grads = []
    for i in range(m):
        for j in range(i, m):
            if i == j == 0:
                continue
            e = np.zeros((m, m))
            e[i, j] = e[j, i] = 1.0
            gp = profile_objective(sample, psi + h * e)
            gm = profile_objective(sample, psi - h * e)
            grads.append((gp - gm) / (2 * h))
    return np.array(grads)


def random_spd(rng, m, jitter=0.05):
    a = rng.standard_normal((m, m))
    return a @ a.T + jitter * np.eye(m)
