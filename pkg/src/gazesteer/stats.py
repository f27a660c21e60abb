"""Rank-based tests: Kruskal-Wallis, Dunn with Bonferroni, Wilcoxon signed-rank.

Average ranks of tied values are always multiples of 1/2, so rank sums are
carried as doubled integers and the test statistics are formed with exact
rational arithmetic before the final conversion to float.
"""
from __future__ import annotations

import enum
import math
from collections import Counter
from dataclasses import dataclass
from fractions import Fraction
from typing import Sequence, Union

from .errors import AllZeroDifferences, DegenerateData
from .special import chi2_sf, normal_cdf, normal_two_sided

EXACT_MAX_N = 25


@dataclass(frozen=True)
class SampleGroup:
    label: str
    values: tuple

    def __init__(self, label: str, values: Sequence[float]) -> None:
        vals = tuple(float(v) for v in values)
        if not vals:
            raise ValueError(f"group {label!r} is empty")
        if not all(math.isfinite(v) for v in vals):
            raise ValueError(f"group {label!r} has non-finite values")
        object.__setattr__(self, "label", label)
        object.__setattr__(self, "values", vals)


GroupLike = Union[SampleGroup, Sequence[float]]


def _as_groups(groups: Sequence[GroupLike]) -> list[SampleGroup]:
    return [g if isinstance(g, SampleGroup) else SampleGroup(f"g{i + 1}", g) for i, g in enumerate(groups)]


def _doubled_ranks(values: Sequence[float]) -> list[int]:
    order = sorted(range(len(values)), key=values.__getitem__)
    ranks = [0] * len(values)
    i = 0
    n = len(values)
    while i < n:
        j = i
        while j + 1 < n and values[order[j + 1]] == values[order[i]]:
            j += 1
        doubled = i + j + 2  # 2 * mean of 1-based ranks i+1 .. j+1
        for k in range(i, j + 1):
            ranks[order[k]] = doubled
        i = j + 1
    return ranks


def rank_with_ties(values: Sequence[float]) -> list[float]:
    """1-based ranks, ties sharing their average rank."""
    if len(values) == 0:
        raise ValueError("cannot rank an empty sequence")
    return [r / 2 for r in _doubled_ranks(values)]


def tie_term(values: Sequence[float]) -> int:
    """Sum of t^3 - t over groups of tied values."""
    return sum(t ** 3 - t for t in Counter(values).values())


@dataclass(frozen=True)
class KwResult:
    h: float
    df: int
    p: float
    tie_corrected: bool


def kruskal_wallis(groups: Sequence[GroupLike]) -> KwResult:
    gs = _as_groups(groups)
    if len(gs) < 2:
        raise ValueError("need at least two groups")
    pooled = [v for g in gs for v in g.values]
    n = len(pooled)
    ties = tie_term(pooled)
    if ties == n ** 3 - n:
        raise DegenerateData("all observations are identical")
    ranks = _doubled_ranks(pooled)
    s = Fraction(0)
    pos = 0
    for g in gs:
        r2 = sum(ranks[pos:pos + len(g.values)])  # doubled rank sum
        pos += len(g.values)
        s += Fraction(r2 * r2, 4 * len(g.values))
    h = Fraction(12, n * (n + 1)) * s - 3 * (n + 1)
    if ties:
        h /= 1 - Fraction(ties, n ** 3 - n)
    h_f = max(0.0, float(h))
    df = len(gs) - 1
    return KwResult(h_f, df, chi2_sf(h_f, df), ties > 0)


@dataclass(frozen=True)
class DunnMatrix:
    labels: tuple
    p_adj: tuple
    z: tuple

    def __getitem__(self, key: tuple[str, str]) -> float:
        i, j = (self.labels.index(k) for k in key)
        return self.p_adj[i][j]


def dunn_bonferroni(groups: Sequence[GroupLike]) -> DunnMatrix:
    """Pairwise Dunn z-tests on pooled ranks, Bonferroni-adjusted, two-sided."""
    gs = _as_groups(groups)
    k = len(gs)
    if k < 2:
        raise ValueError("need at least two groups")
    pooled = [v for g in gs for v in g.values]
    n = len(pooled)
    ties = tie_term(pooled)
    if ties == n ** 3 - n:
        raise DegenerateData("all observations are identical")
    ranks = _doubled_ranks(pooled)
    means = []
    pos = 0
    for g in gs:
        m = len(g.values)
        means.append(Fraction(sum(ranks[pos:pos + m]), 2 * m))
        pos += m
    base = Fraction(n * (n + 1), 12) - Fraction(ties, 12 * (n - 1))
    m_cmp = k * (k - 1) // 2
    p = [[1.0] * k for _ in range(k)]
    z = [[0.0] * k for _ in range(k)]
    for i in range(k):
        for j in range(i + 1, k):
            var = base * (Fraction(1, len(gs[i].values)) + Fraction(1, len(gs[j].values)))
            zij = float(means[i] - means[j]) / math.sqrt(float(var))
            pij = min(1.0, normal_two_sided(zij) * m_cmp)
            p[i][j] = p[j][i] = pij
            z[i][j], z[j][i] = zij, -zij
    return DunnMatrix(tuple(g.label for g in gs), tuple(map(tuple, p)), tuple(map(tuple, z)))


class WilcoxonMethod(str, enum.Enum):
    EXACT = "exact"
    NORMAL_APPROX = "normal_approx"


@dataclass(frozen=True)
class WilcoxonResult:
    w: float
    n_effective: int
    p: float
    method: WilcoxonMethod
    t_plus: float
    t_minus: float


def signed_rank_null_counts(doubled_ranks: Sequence[int]) -> list[int]:
    """counts[s] = number of sign assignments whose positive doubled-rank sum is s."""
    total = sum(doubled_ranks)
    counts = [0] * (total + 1)
    counts[0] = 1
    reach = 0
    for r in doubled_ranks:
        for s in range(reach, -1, -1):
            c = counts[s]
            if c:
                counts[s + r] += c
        reach += r
    return counts


def wilcoxon_signed_rank(a: Sequence[float], b: Sequence[float], exact_max_n: int = EXACT_MAX_N) -> WilcoxonResult:
    """Paired two-sided signed-rank test; zero differences are dropped.

    Exact null distribution up to ``exact_max_n`` nonzero pairs, otherwise
    the normal approximation with tie-corrected variance and a 0.5
    continuity correction.
    """
    if len(a) != len(b):
        raise ValueError("samples must have equal length")
    if len(a) == 0:
        raise ValueError("samples are empty")
    diffs = [float(x) - float(y) for x, y in zip(a, b)]
    diffs = [d for d in diffs if d != 0.0]
    if not diffs:
        raise AllZeroDifferences("every pair is equal")
    n = len(diffs)
    mags = [abs(d) for d in diffs]
    ranks = _doubled_ranks(mags)
    t_plus2 = sum(r for r, d in zip(ranks, diffs) if d > 0)
    t_minus2 = n * (n + 1) - t_plus2
    w2 = min(t_plus2, t_minus2)
    if n <= exact_max_n:
        counts = signed_rank_null_counts(ranks)
        tail = sum(counts[: w2 + 1])
        p = min(1.0, 2.0 * tail / 2 ** n)
        method = WilcoxonMethod.EXACT
    else:
        mu = n * (n + 1) / 4.0
        var = n * (n + 1) * (2 * n + 1) / 24.0 - tie_term(mags) / 48.0
        z = (w2 / 2.0 - mu + 0.5) / math.sqrt(var)
        p = min(1.0, 2.0 * normal_cdf(z))
        method = WilcoxonMethod.NORMAL_APPROX
    return WilcoxonResult(w2 / 2, n, p, method, t_plus2 / 2, t_minus2 / 2)
