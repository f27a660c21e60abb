import itertools
import math
import random

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from scipy import stats as sps

from gazesteer.acceptance import brute_force_wilcoxon_p, kw_permutation_p
from gazesteer.errors import AllZeroDifferences, DegenerateData
from gazesteer.special import chi2_sf, gamma_q, normal_cdf
from gazesteer.stats import (
    SampleGroup,
    WilcoxonMethod,
    dunn_bonferroni,
    kruskal_wallis,
    rank_with_ties,
    signed_rank_null_counts,
    wilcoxon_signed_rank,
)

samples = st.lists(st.integers(-20, 20).map(float), min_size=1, max_size=8)


class TestRanks:
    def test_examples(self):
        assert rank_with_ties([10, 20, 30]) == [1, 2, 3]
        assert rank_with_ties([5, 5]) == [1.5, 1.5]
        assert rank_with_ties([3, 1, 3, 2]) == [3.5, 1, 3.5, 2]

    @given(st.lists(st.floats(-1e6, 1e6), min_size=1, max_size=50))
    def test_sum_and_scipy(self, xs):
        r = rank_with_ties(xs)
        n = len(xs)
        assert sum(r) == n * (n + 1) / 2
        assert r == list(sps.rankdata(xs))

    def test_empty(self):
        with pytest.raises(ValueError):
            rank_with_ties([])


class TestSpecial:
    def test_chi2_examples(self):
        assert chi2_sf(0.0, 3) == 1.0
        assert chi2_sf(7.2, 2) == pytest.approx(math.exp(-3.6), abs=1e-12)
        assert chi2_sf(2.4, 1) == pytest.approx(math.erfc(math.sqrt(1.2)), abs=1e-12)
        assert chi2_sf(2.4, 1) == pytest.approx(0.12134, abs=1e-5)

    def test_chi2_against_scipy(self):
        rng = random.Random(0)
        for _ in range(2000):
            df = rng.randint(1, 100)
            x = rng.choice([rng.uniform(0, 3 * df), rng.uniform(0, 0.5), rng.uniform(0, 400)])
            assert abs(chi2_sf(x, df) - sps.chi2.sf(x, df)) <= 1e-10, (x, df)

    def test_chi2_monte_carlo(self):
        # sampling check of the survival function itself
        rng = np.random.default_rng(5)
        draws = rng.chisquare(2, 200_000)
        frac = np.mean(draws >= 7.2)
        se = math.sqrt(chi2_sf(7.2, 2) * (1 - chi2_sf(7.2, 2)) / draws.size)
        assert abs(frac - chi2_sf(7.2, 2)) < 4 * se

    def test_gamma_q_domain(self):
        with pytest.raises(ValueError):
            gamma_q(0, 1)
        with pytest.raises(ValueError):
            chi2_sf(-1, 2)
        with pytest.raises(ValueError):
            chi2_sf(1, 0)

    def test_normal_cdf(self):
        assert normal_cdf(0.0) == 0.5
        assert normal_cdf(1.959964) == pytest.approx(0.975, abs=1e-7)
        for z in np.linspace(-8, 8, 161):
            assert abs(normal_cdf(z) - sps.norm.cdf(z)) <= 1e-10

    @given(st.floats(-30, 30))
    def test_normal_symmetry(self, z):
        assert normal_cdf(z) + normal_cdf(-z) == pytest.approx(1.0, abs=1e-15)


class TestKruskalWallis:
    def test_fixture(self):
        r = kruskal_wallis([[1, 2, 3], [4, 5, 6], [7, 8, 9]])
        assert r.h == 7.2 and r.df == 2 and not r.tie_corrected
        assert r.p == pytest.approx(0.0273, abs=1e-4)

    def test_two_groups(self):
        r = kruskal_wallis([[1, 2], [3, 4]])
        assert r.h == 2.4 and r.df == 1
        assert r.p == pytest.approx(0.1213, abs=1e-4)

    def test_degenerate(self):
        with pytest.raises(DegenerateData):
            kruskal_wallis([[5, 5, 5], [5, 5, 5]])

    def test_needs_two_groups(self):
        with pytest.raises(ValueError):
            kruskal_wallis([[1, 2, 3]])

    def test_sample_group_validation(self):
        with pytest.raises(ValueError):
            SampleGroup("a", [])
        with pytest.raises(ValueError):
            SampleGroup("a", [1.0, math.nan])

    @settings(max_examples=200, deadline=None)
    @given(st.lists(samples, min_size=2, max_size=5))
    def test_matches_scipy(self, groups):
        pooled = [v for g in groups for v in g]
        if len(set(pooled)) < 2:
            return
        r = kruskal_wallis(groups)
        ref = sps.kruskal(*groups)
        assert r.h == pytest.approx(ref.statistic, rel=1e-12, abs=1e-12)
        assert r.p == pytest.approx(ref.pvalue, abs=1e-10)
        assert 0 <= r.p <= 1 and r.h >= 0
        assert r.tie_corrected == (len(set(pooled)) < len(pooled))

    @settings(max_examples=100, deadline=None)
    @given(st.lists(samples, min_size=2, max_size=4))
    def test_monotone_transform_invariance(self, groups):
        pooled = [v for g in groups for v in g]
        if len(set(pooled)) < 2:
            return
        a = kruskal_wallis(groups)
        b = kruskal_wallis([[math.exp(v / 10) * 3 + 1 for v in g] for g in groups])
        assert (a.h, a.p) == (b.h, b.p)

    def test_k2_matches_mann_whitney(self):
        rng = random.Random(4)
        for _ in range(50):
            n1, n2 = rng.randint(3, 30), rng.randint(3, 30)
            vals = rng.sample(range(10_000), n1 + n2)
            x, y = vals[:n1], vals[n1:]
            mw = sps.mannwhitneyu(x, y, alternative="two-sided", method="asymptotic", use_continuity=False)
            assert abs(kruskal_wallis([x, y]).p - mw.pvalue) <= 1e-6

    def test_chi2_p_vs_permutation_oracle_small(self):
        # asymptotic p is only an approximation at n = 9; the exact permutation p is 6/1680
        assert kw_permutation_p([[1, 2, 3], [4, 5, 6], [7, 8, 9]], 20_000) == pytest.approx(6 / 1680, abs=2e-3)

    def test_exact_permutation_enumeration(self):
        # full enumeration of the 1680 labelled partitions of 9 ranks into 3+3+3
        values = list(range(1, 10))
        hits = total = 0
        for a in itertools.combinations(values, 3):
            rest = [v for v in values if v not in a]
            for b in itertools.combinations(rest, 3):
                c = [v for v in rest if v not in b]
                total += 1
                hits += kruskal_wallis([a, b, c]).h >= 7.2
        assert total == 1680 and hits == 6


class TestDunn:
    def test_fixture_pair(self):
        d = dunn_bonferroni([[1, 2, 3], [4, 5, 6], [7, 8, 9]])
        assert d.z[0][2] == pytest.approx(-6 / math.sqrt(5))
        raw = math.erfc(6 / math.sqrt(5) / math.sqrt(2))
        assert d.p_adj[0][2] == pytest.approx(min(1.0, 3 * raw), rel=1e-12)
        assert d.p_adj[0][2] == pytest.approx(0.0219, abs=1e-3)

    def test_spot_check_normal_oracle(self):
        d = dunn_bonferroni([[1, 2, 3], [4, 5, 6], [7, 8, 9]])
        assert d.p_adj[0][2] == pytest.approx(3 * 2 * sps.norm.sf(6 / math.sqrt(5)), rel=1e-9)

    def test_equal_mean_ranks(self):
        d = dunn_bonferroni([[1, 4], [2, 3], [10, 11]])
        assert d.p_adj[0][1] == 1.0 and d.z[0][1] == 0.0

    def test_labels_and_lookup(self):
        d = dunn_bonferroni([SampleGroup("a", [1, 2, 3]), SampleGroup("b", [4, 5, 6]), SampleGroup("c", [7, 8, 9])])
        assert d.labels == ("a", "b", "c")
        assert d["a", "c"] == d.p_adj[0][2]

    @settings(max_examples=150, deadline=None)
    @given(st.lists(samples, min_size=2, max_size=5))
    def test_matrix_properties(self, groups):
        pooled = [v for g in groups for v in g]
        if len(set(pooled)) < 2:
            return
        d = dunn_bonferroni(groups)
        k = len(groups)
        for i in range(k):
            assert d.p_adj[i][i] == 1.0
            for j in range(k):
                assert d.p_adj[i][j] == d.p_adj[j][i]
                assert 0.0 <= d.p_adj[i][j] <= 1.0
                if i != j:
                    raw = math.erfc(abs(d.z[i][j]) / math.sqrt(2))
                    assert d.p_adj[i][j] >= raw - 1e-15

    def test_degenerate(self):
        with pytest.raises(DegenerateData):
            dunn_bonferroni([[1, 1], [1, 1]])


class TestWilcoxon:
    def test_all_zero(self):
        with pytest.raises(AllZeroDifferences):
            wilcoxon_signed_rank([1, 2, 3], [1, 2, 3])

    def test_three_positive(self):
        r = wilcoxon_signed_rank([1, 2, 3], [0, 0, 0])
        assert r.w == 0 and r.p == 0.25 and r.method is WilcoxonMethod.EXACT

    def test_six_positive(self):
        r = wilcoxon_signed_rank([1, 2, 3, 4, 5, 6], [0] * 6)
        assert r.w == 0 and r.p == 0.03125

    def test_zero_differences_dropped(self):
        r = wilcoxon_signed_rank([1, 2, 3, 5], [0, 0, 0, 5])
        assert r.n_effective == 3 and r.p == 0.25

    def test_length_mismatch(self):
        with pytest.raises(ValueError):
            wilcoxon_signed_rank([1, 2], [1])

    def test_exhaustive_oracle(self):
        rng = random.Random(8)
        for n in range(1, 13):
            for _ in range(10):
                d = [rng.choice([-1, 1]) * rng.randint(1, 5) for _ in range(n)]
                assert wilcoxon_signed_rank(d, [0] * n).p == brute_force_wilcoxon_p(d)

    def test_exact_matches_scipy_tie_free(self):
        rng = random.Random(9)
        for n in range(5, 26):
            d = [rng.choice([-1, 1]) * v for v in rng.sample(range(1, 1000), n)]
            r = wilcoxon_signed_rank(d, [0] * n)
            ref = sps.wilcoxon(d, method="exact")
            assert r.w == ref.statistic
            assert r.p == pytest.approx(ref.pvalue, rel=1e-12)

    def test_normal_approx_matches_scipy(self):
        rng = random.Random(10)
        for n in (26, 40, 80):
            d = [rng.choice([-1, 1]) * rng.randint(1, 30) for _ in range(n)]
            r = wilcoxon_signed_rank(d, [0] * n)
            ref = sps.wilcoxon(d, method="approx", correction=True, zero_method="wilcox")
            assert r.method is WilcoxonMethod.NORMAL_APPROX
            assert r.p == pytest.approx(ref.pvalue, abs=1e-12)

    def test_null_counts(self):
        counts = signed_rank_null_counts([2, 4, 6])
        assert sum(counts) == 8
        assert counts[0] == 1 and counts[12] == 1

    @settings(max_examples=200, deadline=None)
    @given(st.lists(st.integers(-10, 10), min_size=1, max_size=30))
    def test_bounds(self, d):
        if all(x == 0 for x in d):
            return
        r = wilcoxon_signed_rank(d, [0] * len(d))
        n = r.n_effective
        assert 0 <= r.w <= n * (n + 1) / 4 + 1e-12
        assert r.t_plus + r.t_minus == n * (n + 1) / 2
        assert 0.0 <= r.p <= 1.0
