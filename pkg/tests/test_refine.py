import math

import numpy as np
import pytest

from bitshift_channel import (
    EmptyPartition,
    JitterParams,
    NotALeaf,
    birch_bounds,
    birch_profile,
    build_joint_chain,
    make_source,
    output_marginal,
    refine_leaf,
    root_partition,
    run_bounds,
    select_next,
)
from bitshift_channel.refine import CylinderCalculator

from path_oracle import block_probabilities, conditional_entropy_pair


class TestRootPartition:
    def test_eps_zero_nine_leaves_zero_gaps(self, cd_source):
        joint = build_joint_chain(cd_source, JitterParams(0.0))
        part = root_partition(joint)
        assert part.cells == 9
        assert sorted(w[0] for w in part.leaves) == list(range(2, 11))
        for stat in part.leaves.values():
            assert abs(stat.gap) <= 1e-12

    def test_thirteen_leaves_weights_match_marginal(self, cd_source):
        joint = build_joint_chain(cd_source, JitterParams(0.1))
        part = root_partition(joint)
        assert part.cells == 13
        law = output_marginal(joint)
        total = 0.0
        for word, stat in part.leaves.items():
            assert stat.weight == pytest.approx(law[word[0]], abs=1e-12)
            total += stat.weight
        assert total == pytest.approx(1.0, abs=1e-9)

    def test_renewal_letter_leaf_has_zero_gap(self, cd_source):
        joint = build_joint_chain(cd_source, JitterParams(0.1))
        part = root_partition(joint)
        assert part.leaves[(0,)].gap <= 1e-12
        assert part.leaves[(12,)].gap <= 1e-12


class TestRefineLeaf:
    def test_children_weights_sum_to_parent(self, small_joint):
        part = root_partition(small_joint)
        for word in list(part.leaves):
            parent_weight = part.leaves[word].weight
            part.refine_leaf(word)
            children = [s.weight for w, s in part.leaves.items() if w[: len(word)] == word]
            assert sum(children) == pytest.approx(parent_weight, abs=1e-12)

    def test_upper_contribution_shrinks(self, small_joint):
        part = root_partition(small_joint)
        for word in list(part.leaves):
            h_parent = part.leaves[word].h
            part.refine_leaf(word)
            h_children = sum(s.h for w, s in part.leaves.items() if w[: len(word)] == word)
            assert h_children <= h_parent + 1e-12

    def test_lower_contribution_grows(self, small_joint):
        part = root_partition(small_joint)
        for word in list(part.leaves):
            h1_parent = part.leaves[word].h1
            part.refine_leaf(word)
            h1_children = sum(s.h1 for w, s in part.leaves.items() if w[: len(word)] == word)
            assert h1_children >= h1_parent - 1e-12

    def test_not_a_leaf(self, small_joint):
        part = root_partition(small_joint)
        with pytest.raises(NotALeaf):
            refine_leaf(part, (2, 2))

    def test_refined_word_is_no_longer_a_leaf(self, small_joint):
        part = root_partition(small_joint)
        part.refine_leaf((2,))
        with pytest.raises(NotALeaf):
            part.refine_leaf((2,))

    def test_leaves_stay_prefix_free_and_weights_sum_to_one(self, small_joint):
        part = root_partition(small_joint)
        for _ in range(30):
            part.refine_leaf(select_next(part, "greedy"))
        words = sorted(part.leaves)
        for a, b in zip(words, words[1:]):
            assert b[: len(a)] != a  # lexicographic neighbors would expose a prefix
        assert sum(s.weight for s in part.leaves.values()) == pytest.approx(1.0, abs=1e-9)

    def test_gap_never_negative(self, small_joint):
        part = root_partition(small_joint)
        for _ in range(60):
            part.refine_leaf(select_next(part, "greedy"))
        assert min(s.gap for s in part.leaves.values()) >= -1e-12


class TestSelectNext:
    def test_greedy_takes_max_gap(self, small_joint):
        part = root_partition(small_joint)
        best = max(part.leaves.values(), key=lambda s: (s.gap, tuple(-x for x in s.word)))
        word = select_next(part, "greedy")
        assert part.leaves[word].gap == pytest.approx(best.gap, abs=0)

    def test_greedy_tie_break_lexicographic(self, small_joint):
        part = root_partition(small_joint)
        top = part.leaves[select_next(part, "greedy")].gap
        tied = sorted(w for w, s in part.leaves.items() if s.gap == top)
        assert select_next(part, "greedy") == tied[0]

    def test_uniform_exhausts_level_one_first(self, small_joint):
        part = root_partition(small_joint)
        first_level = sorted(part.leaves)
        for expected in first_level:
            word = select_next(part, "uniform")
            assert word == expected
            assert len(word) == 1
            part.refine_leaf(word)
        assert all(len(w) == 2 for w in part.leaves)

    def test_empty_partition_error(self, small_joint):
        part = root_partition(small_joint)
        part.leaves.clear()
        with pytest.raises(EmptyPartition):
            select_next(part, "greedy")

    def test_unknown_strategy(self, small_joint):
        part = root_partition(small_joint)
        with pytest.raises(ValueError):
            select_next(part, "fastest")


class TestRunBounds:
    def test_eps_zero_collapses_at_root(self, cd_source):
        joint = build_joint_chain(cd_source, JitterParams(0.0))
        interval = run_bounds(joint, "greedy", tol_bits=1e-12)
        assert interval.cells == 9
        assert interval.converged
        assert interval.upper - interval.lower <= 1e-12
        assert interval.lower == pytest.approx(cd_source.entropy(), abs=1e-12)

    def test_interval_brackets_oracle_estimate(self, small_joint):
        interval = run_bounds(small_joint, "greedy", tol_bits=1e-6)
        lo_oracle, hi_oracle = conditional_entropy_pair(small_joint, 5)
        assert interval.lower <= hi_oracle + 1e-12
        assert interval.upper >= lo_oracle - 1e-12
        assert interval.upper - interval.lower <= 1e-6

    def test_budget_exhaustion_flagged_not_raised(self, small_joint):
        interval = run_bounds(small_joint, "greedy", tol_bits=1e-15, max_cells=50)
        assert not interval.converged
        assert interval.cells >= 50
        assert interval.lower <= interval.upper + 1e-12

    def test_trace_rows_are_monotone(self, small_joint):
        trace = []
        run_bounds(small_joint, "greedy", max_cells=400, trace=trace)
        for (c0, lo0, hi0), (c1, lo1, hi1) in zip(trace, trace[1:]):
            assert c1 >= c0
            assert lo1 >= lo0 - 1e-12
            assert hi1 <= hi0 + 1e-12
            assert lo1 <= hi1 + 1e-12

    def test_deterministic_repeat(self, small_joint):
        t1, t2 = [], []
        r1 = run_bounds(small_joint, "greedy", max_cells=300, trace=t1)
        r2 = run_bounds(small_joint, "greedy", max_cells=300, trace=t2)
        assert r1 == r2
        assert t1 == t2

    def test_requires_stopping_rule(self, small_joint):
        with pytest.raises(ValueError):
            run_bounds(small_joint, "greedy")

    def test_doubling_budget_never_widens(self, small_joint):
        a = run_bounds(small_joint, "greedy", max_cells=200)
        b = run_bounds(small_joint, "greedy", max_cells=400)
        assert b.lower >= a.lower - 1e-12
        assert b.upper <= a.upper + 1e-12

    def test_renewal_words_never_selected_while_positive_gaps_exist(self, small_joint):
        log = []
        run_bounds(small_joint, "greedy", max_cells=600, selection_log=log)
        for word, gap in log:
            if 0 in word or 5 in word:
                assert gap <= 1e-12


class TestBirchBounds:
    def test_depth_one_iid_collapse(self, cd_source):
        joint = build_joint_chain(cd_source, JitterParams(0.0))
        lo, hi = birch_bounds(joint, 1)
        assert lo == pytest.approx(cd_source.entropy(), abs=1e-12)
        assert hi == pytest.approx(cd_source.entropy(), abs=1e-12)

    @pytest.mark.parametrize("n", [1, 2, 3, 4])
    def test_matches_path_enumeration_oracle(self, small_joint, n):
        lo_oracle, hi_oracle = conditional_entropy_pair(small_joint, n)
        lo, hi = birch_bounds(small_joint, n)
        assert lo == pytest.approx(lo_oracle, abs=1e-10)
        assert hi == pytest.approx(hi_oracle, abs=1e-10)

    def test_monotone_in_depth(self, small_joint):
        profile = birch_profile(small_joint, 6)
        for (lo0, hi0), (lo1, hi1) in zip(profile, profile[1:]):
            assert lo1 >= lo0 - 1e-12
            assert hi1 <= hi0 + 1e-12
            assert lo1 <= hi1

    def test_equals_uniform_saturation(self, small_joint):
        n = 3
        part = root_partition(small_joint)
        while any(len(w) < n for w in part.leaves):
            word = select_next(part, "uniform")
            part.refine_leaf(word)
        assert all(len(w) == n for w in part.leaves)
        lo, hi = birch_bounds(small_joint, n)
        interval = part.interval("uniform", True)
        assert interval.lower == pytest.approx(lo, abs=1e-12)
        assert interval.upper == pytest.approx(hi, abs=1e-12)

    def test_rejects_nonpositive_depth(self, small_joint):
        with pytest.raises(ValueError):
            birch_bounds(small_joint, 0)


class TestCylinderProbabilities:
    @pytest.mark.parametrize("n", [1, 2, 3, 4])
    def test_match_path_enumeration(self, small_joint, n):
        calc = CylinderCalculator(small_joint)
        oracle = block_probabilities(small_joint, n)
        for word, p in oracle.items():
            assert calc.probability(word) == pytest.approx(p, abs=1e-10)

    def test_absent_letter_has_zero_probability(self, small_joint):
        calc = CylinderCalculator(small_joint)
        assert calc.probability((99,)) == 0.0

    def test_forbidden_word_has_zero_probability(self, small_joint):
        calc = CylinderCalculator(small_joint)
        assert calc.probability((0, 0)) == 0.0

    def test_table_is_normalized(self, small_joint):
        calc = CylinderCalculator(small_joint)
        table, states = calc.table((2, 3))
        assert table.sum() == pytest.approx(1.0, abs=1e-12)
        assert len(states) == table.shape[1]
        assert (table >= 0).all()
