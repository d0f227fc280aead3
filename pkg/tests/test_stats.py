from __future__ import annotations

import math
import random

import pytest
from hypothesis import given, settings, strategies as st

from undr.errors import DegenerateSample
from undr.stats import (
    ONE_SIDED_GREATER,
    ONE_SIDED_LESS,
    TWO_SIDED,
    TestResult,
    average_ranks,
    binomial_test_ge,
    bonferroni,
    mann_whitney_u,
    wilcoxon_signed_rank,
)

from oracles import (
    binomial_upper_tail_fraction,
    counting_ranks,
    enumerate_mann_whitney,
    enumerate_wilcoxon,
)

small_values = st.integers(min_value=-5, max_value=5)


class TestAverageRanks:
    def test_no_ties(self):
        assert average_ranks([30, 10, 20]) == [3.0, 1.0, 2.0]

    def test_ties_share_average(self):
        assert average_ranks([1, 1, 2, 3]) == [1.5, 1.5, 3.0, 4.0]

    @given(values=st.lists(small_values, min_size=1, max_size=30))
    def test_matches_counting_formula(self, values):
        assert average_ranks(values) == counting_ranks(values)


class TestWilcoxon:
    def test_frozen_example_against_enumeration(self):
        # differences +1, +2, +3, -1: |d| ranks are 1.5, 3, 4, 1.5
        pairs = [(2, 1), (4, 2), (6, 3), (2, 3)]
        result = wilcoxon_signed_rank(pairs, TWO_SIDED)
        statistic, p = enumerate_wilcoxon(pairs, TWO_SIDED)
        assert result.statistic == statistic == 1.5
        assert result.p_value == p == 0.375  # 2 * 3/16, frozen from the 2^4 enumeration
        assert result.exact is True
        assert result.n_effective == 4

    def test_identical_lists_degenerate(self):
        with pytest.raises(DegenerateSample):
            wilcoxon_signed_rank([(1, 1), (2, 2)], TWO_SIDED)

    def test_zero_differences_dropped(self):
        kept = wilcoxon_signed_rank([(2, 1), (4, 2), (6, 3), (2, 3)], TWO_SIDED)
        padded = wilcoxon_signed_rank([(2, 1), (4, 2), (5, 5), (6, 3), (2, 3), (7, 7)], TWO_SIDED)
        assert padded.n_effective == kept.n_effective == 4
        assert padded.p_value == kept.p_value

    def test_critical_value_at_n10_matches_tables(self):
        # standard two-sided 5% tables for n=10 reject at W <= 8
        ranks_to_negate_8 = {1, 3, 4}  # W- = 8
        ranks_to_negate_9 = {2, 3, 4}  # W- = 9
        def pairs_for(negated):
            return [(0, i) if i in negated else (i, 0) for i in range(1, 11)]
        at_8 = wilcoxon_signed_rank(pairs_for(ranks_to_negate_8), TWO_SIDED)
        at_9 = wilcoxon_signed_rank(pairs_for(ranks_to_negate_9), TWO_SIDED)
        assert at_8.statistic == 8
        assert at_8.p_value == pytest.approx(0.048828125)  # 2 * P(W+ <= 8), enumeration-confirmed
        assert at_8.p_value <= 0.05 < at_9.p_value
        assert at_9.p_value == pytest.approx(0.064453125)

    @pytest.mark.parametrize("sidedness", [TWO_SIDED, ONE_SIDED_GREATER, ONE_SIDED_LESS])
    @settings(max_examples=80)
    @given(data=st.data())
    def test_exact_branch_matches_enumeration(self, data, sidedness):
        pairs = data.draw(
            st.lists(st.tuples(small_values, small_values), min_size=1, max_size=10).filter(
                lambda ps: any(a != b for a, b in ps)
            )
        )
        result = wilcoxon_signed_rank(pairs, sidedness)
        statistic, p = enumerate_wilcoxon(pairs, sidedness)
        assert result.exact is True
        assert result.statistic == statistic
        assert result.p_value == pytest.approx(p, abs=1e-12)

    def test_large_sample_uses_approximation(self):
        rng = random.Random(1)
        pairs = [(rng.random(), rng.random()) for _ in range(40)]
        result = wilcoxon_signed_rank(pairs, TWO_SIDED)
        assert result.exact is False
        assert 0 <= result.p_value <= 1

    def test_approximation_close_to_exact_at_boundary(self):
        rng = random.Random(2)
        pairs = [(rng.random() + 0.15, rng.random()) for _ in range(25)]
        exact = wilcoxon_signed_rank(pairs, TWO_SIDED, exact_limit=25)
        approx = wilcoxon_signed_rank(pairs, TWO_SIDED, exact_limit=10)
        assert approx.exact is False
        assert approx.p_value == pytest.approx(exact.p_value, rel=0.15, abs=0.01)

    @given(seed=st.integers(0, 10**6))
    def test_reordering_pairs_leaves_result_unchanged(self, seed):
        rng = random.Random(seed)
        pairs = [(rng.randint(-3, 3), rng.randint(-3, 3)) for _ in range(8)]
        if all(a == b for a, b in pairs):
            pairs[0] = (1, 0)
        shuffled = pairs[:]
        rng.shuffle(shuffled)
        assert wilcoxon_signed_rank(pairs, TWO_SIDED) == wilcoxon_signed_rank(shuffled, TWO_SIDED)

    def test_rejects_non_finite(self):
        with pytest.raises(ValueError):
            wilcoxon_signed_rank([(math.nan, 1)], TWO_SIDED)


class TestMannWhitney:
    def test_textbook_example(self):
        result = mann_whitney_u([1, 2], [3, 4], ONE_SIDED_LESS)
        statistic, p = enumerate_mann_whitney([1, 2], [3, 4], ONE_SIDED_LESS)
        assert result.statistic == statistic == 0
        assert result.p_value == p == pytest.approx(1 / 6)
        assert result.exact is True

    def test_identical_multisets_two_sided_p_is_one(self):
        result = mann_whitney_u([1, 2, 2, 5], [5, 2, 1, 2], TWO_SIDED)
        assert result.exact is True
        assert result.p_value == 1.0

    def test_large_sample_flags_approximation(self):
        x = list(range(15))
        y = list(range(5, 20))
        result = mann_whitney_u(x, y, TWO_SIDED)
        assert result.exact is False
        assert result.n_effective == 30

    @pytest.mark.parametrize("sidedness", [TWO_SIDED, ONE_SIDED_GREATER, ONE_SIDED_LESS])
    @settings(max_examples=60)
    @given(data=st.data())
    def test_exact_branch_matches_enumeration(self, data, sidedness):
        x = data.draw(st.lists(small_values, min_size=1, max_size=5))
        y = data.draw(st.lists(small_values, min_size=1, max_size=5))
        result = mann_whitney_u(x, y, sidedness)
        statistic, p = enumerate_mann_whitney(x, y, sidedness)
        assert result.exact is True
        assert result.statistic == statistic
        assert result.p_value == pytest.approx(p, abs=1e-12)

    @given(seed=st.integers(0, 10**6))
    def test_relabeling_invariance(self, seed):
        rng = random.Random(seed)
        x = [rng.randint(0, 5) for _ in range(6)]
        y = [rng.randint(0, 5) for _ in range(7)]
        sx, sy = x[:], y[:]
        rng.shuffle(sx)
        rng.shuffle(sy)
        assert mann_whitney_u(x, y, TWO_SIDED) == mann_whitney_u(sx, sy, TWO_SIDED)

    def test_empty_sample_rejected(self):
        with pytest.raises(ValueError):
            mann_whitney_u([], [1], TWO_SIDED)


class TestBinomial:
    def test_reference_shop_choice_example(self):
        # oracle first: exact rational tail for 39 of 59 at 1/2
        exact = binomial_upper_tail_fraction(39, 59, 1, 2)
        assert float(exact) == pytest.approx(0.0091685, abs=1e-6)
        result = binomial_test_ge(39, 59, 0.5)
        assert result.p_value == pytest.approx(float(exact), rel=1e-10)
        assert abs(result.p_value - 0.009) <= 0.002

    def test_zero_successes_full_tail(self):
        assert binomial_test_ge(0, 10, 0.5).p_value == 1.0

    def test_all_successes_closed_form(self):
        result = binomial_test_ge(12, 12, 0.5)
        assert result.p_value == pytest.approx(2.0**-12, rel=1e-12)

    @given(n=st.integers(1, 25), p0_tenths=st.integers(1, 9))
    def test_monotone_in_successes(self, n, p0_tenths):
        p0 = p0_tenths / 10
        tails = [binomial_test_ge(k, n, p0).p_value for k in range(n + 1)]
        assert all(a >= b for a, b in zip(tails, tails[1:]))

    @given(k=st.integers(0, 30), extra=st.integers(0, 20), p0_tenths=st.integers(1, 9))
    def test_matches_rational_oracle(self, k, extra, p0_tenths):
        n = k + extra
        result = binomial_test_ge(k, n, p0_tenths / 10)
        exact = binomial_upper_tail_fraction(k, n, p0_tenths, 10)
        assert result.p_value == pytest.approx(float(exact), rel=1e-9)

    def test_input_validation(self):
        with pytest.raises(ValueError):
            binomial_test_ge(5, 3, 0.5)
        with pytest.raises(ValueError):
            binomial_test_ge(1, 3, 0.0)
        with pytest.raises(ValueError):
            binomial_test_ge(1, 3, 1.0)


class TestBonferroni:
    def test_two_values(self):
        assert bonferroni([0.01, 0.20]) == [0.02, 0.40]

    def test_cap_at_one(self):
        assert bonferroni([0.6, 0.9]) == [1.0, 1.0]

    def test_singleton_identity(self):
        assert bonferroni([0.3]) == [0.3]

    def test_empty(self):
        assert bonferroni([]) == []

    def test_out_of_range_rejected(self):
        with pytest.raises(ValueError):
            bonferroni([1.2])

    @given(ps=st.lists(st.floats(0, 1, allow_nan=False), max_size=12))
    def test_closed_form(self, ps):
        assert bonferroni(ps) == [min(1.0, p * len(ps)) for p in ps]


class TestTestResult:
    def test_p_value_range_enforced(self):
        with pytest.raises(ValueError):
            TestResult(1.0, 1.5, "binomial", ONE_SIDED_GREATER, True, 3)

    def test_serializable(self):
        result = binomial_test_ge(3, 10, 0.5)
        d = result.to_dict()
        assert d["method"] == "binomial"
        assert d["exact"] is True
        assert d["n_effective"] == 10

    def test_unknown_sidedness_rejected(self):
        with pytest.raises(ValueError):
            wilcoxon_signed_rank([(1, 0)], "both_sides")
