"""Empirical fit outcomes around the thresholds.

Below N_b every sample gives an unbounded likelihood; from N_u on every
sample gives a unique maximizer.  Trials use independent per-index
streams, so results do not depend on ``jobs``.

Run with ``python demos/monte_carlo_thresholds.py``.
"""
# %%
from kronmle.montecarlo import empirical_threshold
from kronmle.thresholds import thresholds

# %%
for m1, m2 in [(7, 4), (5, 3), (10, 2)]:
    t = thresholds(m1, m2)
    print(f"({m1},{m2}): N_b = {t.n_b}, N_e = {t.n_e}, N_u = {t.n_u}")
    for n in sorted({t.n_b - 1, t.n_b, t.n_u}):
        if n * m2 < m1 or n < 1:
            continue
        rep = empirical_threshold(m1, m2, n, trials=40, seed=1)
        print(f"   n = {n}: {rep.counts}")
