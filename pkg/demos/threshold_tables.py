"""Sample-size thresholds and the two-sample S values.

``N_b``: the likelihood is bounded; ``N_e``: a maximizer exists;
``N_u``: it is unique.  All three are almost-sure statements about
generic data.  Cells outside the covered range come back as bounds.

Run with ``python demos/threshold_tables.py``.
"""
# %%
from kronmle.minrank import s2, s2_table_rows
from kronmle.thresholds import table1_csv, thresholds

# %%
print(table1_csv(6))

# %% [markdown]
# A few individual lookups, including one with an unknown mean (which
# costs one extra observation) and one outside the exact range.

# %%
for args in [(10, 2, False), (3, 3, True), (8, 3, False), (11, 4, False)]:
    rep = thresholds(*args)
    print(args, "->", rep.n_b, rep.n_e, rep.n_u, rep.source.value)

# %% [markdown]
# With two samples the verdict is read off the sign of S_2: positive is
# unique, zero is a non-unique maximum, negative is unbounded.

# %%
for m1, m2 in [(5, 4), (6, 4), (7, 4), (2, 2)]:
    rep = s2(m1, m2)
    verdict = rep.verdict.value if rep.verdict else "depends on the eigenvalues"
    print(f"S2({m1},{m2}) = {rep.value}  minimizing k = {sorted(rep.minimizing_k)}  -> {verdict}")

# %%
rows = list(s2_table_rows(9))
print(f"{len(rows)} cells up to m1 = 9; first few: {rows[:4]}")
