"""Sample-size thresholds ``N_b <= N_e <= N_u`` of the matrix normal MLE.

``N_b``: likelihood bounded a.s.; ``N_e``: a maximizer exists a.s.;
``N_u``: the maximizer is unique a.s.  Every value is returned together
with the rule that produced it.  Thresholds are symmetric in the two
dimensions, so ``thresholds(3, 7)`` is answered as ``thresholds(7, 3)``.
"""
from __future__ import annotations

import enum
import io
from dataclasses import dataclass
from fractions import Fraction
from math import ceil, floor


class Source(str, enum.Enum):
    VECTOR_CASE = "VectorCase"
    SQUARE_CASE = "SquareCase"
    DIVISIBLE = "Divisible"
    MAIN_THEOREM = "MainTheorem"
    LARGE_RATIO_COROLLARY = "LargeRatioCorollary"
    EMBEDDED_TABLE = "EmbeddedTable"
    BOUNDS_ONLY = "BoundsOnly"


@dataclass(frozen=True)
class Bounds:
    lo: int
    hi: int

    def __add__(self, k: int):
        return Bounds(self.lo + k, self.hi + k)

    def __str__(self):
        return f"{self.lo}-{self.hi}"


@dataclass(frozen=True)
class ThresholdReport:
    """``n_b``, ``n_e``, ``n_u`` are ``int`` when exact and :class:`Bounds` otherwise."""

    m1: int
    m2: int
    n_b: int | Bounds
    n_e: int | Bounds
    n_u: int | Bounds
    source: Source
    mean_adjusted: bool = False

    @property
    def exact(self) -> bool:
        return not any(isinstance(v, Bounds) for v in (self.n_b, self.n_e, self.n_u))

    def to_dict(self):
        def enc(v):
            return v if isinstance(v, int) else {"lo": v.lo, "hi": v.hi}

        return {
            "m1": self.m1,
            "m2": self.m2,
            "n_b": enc(self.n_b),
            "n_e": enc(self.n_e),
            "n_u": enc(self.n_u),
            "source": self.source.value,
            "mean_adjusted": self.mean_adjusted,
        }


# Both panels of the published table, indexed [m1][m2] for 1 <= m2 <= m1 <= 10.
TABLE1_NU = {
    1: (1,),
    2: (2, 3),
    3: (3, 2, 3),
    4: (4, 3, 2, 3),
    5: (5, 3, 3, 2, 3),
    6: (6, 4, 3, 3, 2, 3),
    7: (7, 4, 3, 3, 3, 2, 3),
    8: (8, 5, 3, 3, 3, 3, 2, 3),
    9: (9, 5, 4, 3, 3, 3, 3, 2, 3),
    10: (10, 6, 4, 3, 3, 3, 3, 3, 2, 3),
}
TABLE1_NE = {
    1: (1,),
    2: (2, 1),
    3: (3, 2, 1),
    4: (4, 2, 2, 1),
    5: (5, 3, 3, 2, 1),
    6: (6, 3, 2, 2, 2, 1),
    7: (7, 4, 3, 3, 3, 2, 1),
    8: (8, 4, 3, 2, 3, 2, 2, 1),
    9: (9, 5, 3, 3, 3, 2, 3, 2, 1),
    10: (10, 5, 4, 3, 2, 3, 3, 2, 2, 1),
}
TABLE1_MAX = 10


def table1_lookup(m1: int, m2: int):
    """``(n_u, n_e)`` from the embedded table, or ``None`` outside it."""
    m1, m2 = max(m1, m2), min(m1, m2)
    if m2 < 1 or m1 > TABLE1_MAX:
        return None
    return TABLE1_NU[m1][m2 - 1], TABLE1_NE[m1][m2 - 1]


def _check_dims(m1, m2):
    if int(m1) != m1 or int(m2) != m2 or m1 < 1 or m2 < 1:
        raise ValueError(f"dimensions must be positive integers, got ({m1}, {m2})")
    return int(m1), int(m2)


def bounds(m1: int, m2: int) -> tuple[int, int]:
    """``(ceil(max(m1/m2, m2/m1)), floor(m1/m2 + m2/m1) + 1)``, in exact arithmetic."""
    m1, m2 = _check_dims(m1, m2)
    r = Fraction(max(m1, m2), min(m1, m2))
    return ceil(r), floor(r + 1 / r) + 1


def _vector_case(m1, m2):
    if m2 == 1:
        return m1, m1, m1
    return None


def _square_case(m1, m2):
    if m1 == m2 >= 2:
        return 1, 1, 3
    return None


def _main_theorem(m1, m2):
    if not (2 * m2 >= m1 > m2 >= 2):
        return None
    n_u = 2 if m1 == m2 + 1 else 3
    n_e = 2 if m2 % (m1 - m2) == 0 else 3
    return n_e, n_e, n_u


def _divisible(m1, m2):
    if m2 < 2 or m1 % m2 != 0:
        return None
    q = m1 // m2
    return q, q, (3 if q == 1 else q + 1)


def _large_ratio(m1, m2):
    if m2 < 2 or m1 <= m2:
        return None
    h, r = divmod(m1, m2)
    # floor(m1/m2) > 1 + r^2 / (m2 (m2 - r)), cleared of denominators
    if r >= 1 and (h - 1) * m2 * (m2 - r) > r * r:
        return h + 1, h + 1, h + 1
    return None


_RULES = (
    (Source.VECTOR_CASE, _vector_case),
    (Source.SQUARE_CASE, _square_case),
    (Source.MAIN_THEOREM, _main_theorem),
    (Source.DIVISIBLE, _divisible),
    (Source.LARGE_RATIO_COROLLARY, _large_ratio),
)


def theorem_values(m1: int, m2: int) -> dict:
    """All theorem-based values ``(n_b, n_e, n_u)`` that apply to ``m1 >= m2``."""
    out = {}
    for source, rule in _RULES:
        v = rule(m1, m2)
        if v is not None:
            out[source] = v
    return out


class InconsistentThresholds(AssertionError):
    pass


def thresholds(m1: int, m2: int, mean_unknown: bool = False) -> ThresholdReport:
    """Resolve the three thresholds for an ``m1 x m2`` matrix normal model.

    Theorem rules are tried first (vector case, square case, the
    ``2 m2 >= m1`` regime, divisibility, large-ratio remainder rule).  All
    rules that apply must agree.  Otherwise the embedded table answers for
    dimensions up to 10, and beyond that only the general bounds are known.
    With ``mean_unknown`` every value is shifted by one.
    """
    m1, m2 = _check_dims(m1, m2)
    a, b = max(m1, m2), min(m1, m2)
    found = theorem_values(a, b)
    if found:
        values = set(found.values())
        if len(values) != 1:
            raise InconsistentThresholds(f"theorem rules disagree for ({a}, {b}): {found}")
        source = next(iter(found))
        n_b, n_e, n_u = next(iter(values))
    elif (hit := table1_lookup(a, b)) is not None:
        source = Source.EMBEDDED_TABLE
        n_u, n_e = hit
        n_b = n_e
    else:
        source = Source.BOUNDS_ONLY
        n_b = n_e = n_u = Bounds(*bounds(a, b))
    shift = 1 if mean_unknown else 0
    return ThresholdReport(m1, m2, n_b + shift, n_e + shift, n_u + shift, source, bool(mean_unknown))


def _cell(v):
    return str(v)


def table1_csv(max_dim: int = TABLE1_MAX, mean_unknown: bool = False) -> str:
    """Both threshold panels as one CSV document.

    Header ``panel,m1,1,...,max_dim``; one row per ``(panel, m1)`` with panel
    ``N_u`` first and then ``N_e=N_b``.  Cells with ``m2 > m1`` are empty and
    cells known only through bounds are written ``lo-hi``.
    """
    if max_dim < 1:
        raise ValueError("max_dim must be positive")
    buf = io.StringIO()
    buf.write("panel,m1," + ",".join(str(j) for j in range(1, max_dim + 1)) + "\n")
    reports = {
        (i, j): thresholds(i, j, mean_unknown)
        for i in range(1, max_dim + 1)
        for j in range(1, i + 1)
    }
    for panel, attr in (("N_u", "n_u"), ("N_e=N_b", "n_e")):
        for i in range(1, max_dim + 1):
            cells = [_cell(getattr(reports[i, j], attr)) for j in range(1, i + 1)]
            cells += [""] * (max_dim - i)
            buf.write(f"{panel},{i}," + ",".join(cells) + "\n")
    return buf.getvalue()
