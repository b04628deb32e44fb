"""Metric behavior and scanning-vs-pairwise oracle equivalence.

The verdict depends only on the sequence of partition classes read off the
ranking (a tested property), so exhaustive coverage enumerates every class
sequence up to n=8 on a canonical layout, plus full partition-and-
permutation products for small n and random cases up to n=15.
"""
import itertools
import random

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from selexplain.explainers import Ranking
from selexplain.harness import SelectionPartition, VerifiedInstance
from selexplain.metrics import (
    InstanceVerdict,
    MetricsReport,
    aggregate,
    judge_instance,
    oracle_judge,
    oracle_ranking,
    report_row,
    REPORT_FIELDS,
)
from selexplain.models import Instance


def make_verified(classes):
    """Build a VerifiedInstance from a class string like 'RSNN' where
    R = clearly relevant, S = selected-unknown, N = non-selected;
    position i gets classes[i]."""
    n = len(classes)
    sr = {i for i, c in enumerate(classes) if c == "R"}
    sdk = {i for i, c in enumerate(classes) if c == "S"}
    nn = {i for i, c in enumerate(classes) if c == "N"}
    return VerifiedInstance(
        instance=Instance(id="m", tokens=("t",) * n),
        partition=SelectionPartition(sr=sr, sdk=sdk, n=nn),
        prediction=0.8,
        bias_prediction=0.0,
    )


class TestJudgeInstance:
    def test_nonselected_first(self):
        v = make_verified("NNSSR")  # SR={4}, N={0,1}
        verdict = judge_instance(v, Ranking((0, 4, 1, 2, 3)))
        assert verdict == InstanceVerdict(first_in_n=True, misranked=True, misrank_count=1)

    def test_reference_order_is_clean(self):
        v = make_verified("RNSRN")
        verdict = judge_instance(v, oracle_ranking(v.partition))
        assert verdict == InstanceVerdict(False, False, 0)

    def test_sdk_ahead_of_sr_is_not_an_error(self):
        v = make_verified("NNRS")  # SR={2}, SDK={3}, N={0,1}
        verdict = judge_instance(v, Ranking((3, 2, 0, 1)))
        assert verdict == InstanceVerdict(False, False, 0)

    def test_all_nonselected_first_counts_them_all(self):
        v = make_verified("RRNNN")
        verdict = judge_instance(v, Ranking((2, 3, 4, 0, 1)))
        assert verdict == InstanceVerdict(True, True, 3)

    def test_length_mismatch_rejected(self):
        v = make_verified("RN")
        with pytest.raises(ValueError, match="covers"):
            judge_instance(v, Ranking((0, 1, 2)))

    def test_counts_only_above_deepest_relevant(self):
        v = make_verified("RNRN")  # SR={0,2}
        # order: N(1), R(0), N(3), R(2): both N positions precede the last R
        verdict = judge_instance(v, Ranking((1, 0, 3, 2)))
        assert verdict.misrank_count == 2


class TestAggregate:
    def test_hand_computed_means(self):
        verdicts = [
            InstanceVerdict(True, True, 1),
            InstanceVerdict(False, False, 0),
            InstanceVerdict(False, True, 2),
        ]
        report = aggregate(verdicts)
        assert report.pct_first == 33.33
        assert report.pct_misrnk == 66.67
        assert report.avg_misrnk_mean == 1.0
        assert report.n_instances == 3

    def test_all_clean(self):
        report = aggregate([InstanceVerdict(False, False, 0)] * 4)
        assert (report.pct_first, report.pct_misrnk) == (0.0, 0.0)
        assert (report.avg_misrnk_mean, report.avg_misrnk_std) == (0.0, 0.0)

    def test_single_verdict(self):
        report = aggregate([InstanceVerdict(True, True, 5)])
        assert (report.pct_first, report.pct_misrnk) == (100.0, 100.0)
        assert (report.avg_misrnk_mean, report.avg_misrnk_std) == (5.0, 0.0)

    def test_population_std(self):
        report = aggregate([InstanceVerdict(False, True, 1), InstanceVerdict(False, True, 3)])
        assert report.avg_misrnk_mean == 2.0
        assert report.avg_misrnk_std == 1.0  # population, not sample

    def test_empty_rejected(self):
        with pytest.raises(ValueError):
            aggregate([])


class TestOracleEquivalence:
    def _assert_same(self, v, ranking):
        assert judge_instance(v, ranking) == oracle_judge(v, ranking)

    def test_exhaustive_class_sequences_to_n8(self):
        # the verdict is a function of the class sequence along the ranks;
        # enumerate all of them (with at least one clearly relevant token)
        checked = 0
        for n in range(1, 9):
            for classes in itertools.product("RSN", repeat=n):
                if "R" not in classes:
                    continue
                v = make_verified("".join(classes))
                self._assert_same(v, Ranking(tuple(range(n))))
                checked += 1
        assert checked == sum(3**n - 2**n for n in range(1, 9))

    def test_exhaustive_partitions_and_permutations_small_n(self):
        for n in range(1, 5):
            for classes in itertools.product("RSN", repeat=n):
                if "R" not in classes:
                    continue
                v = make_verified("".join(classes))
                for perm in itertools.permutations(range(n)):
                    self._assert_same(v, Ranking(perm))

    def test_random_cases_to_n15(self):
        rng = random.Random(1234)
        for _ in range(10000):
            n = rng.randint(1, 15)
            classes = [rng.choice("RSN") for _ in range(n)]
            classes[rng.randrange(n)] = "R"
            v = make_verified("".join(classes))
            perm = list(range(n))
            rng.shuffle(perm)
            self._assert_same(v, Ranking(tuple(perm)))

    def test_reversed_reference_order(self):
        v = make_verified("RRSNNN")
        reference = oracle_ranking(v.partition).order
        verdict = oracle_judge(v, Ranking(tuple(reversed(reference))))
        assert verdict.misrank_count == 3  # every non-selected precedes the last R


class TestVerdictProperties:
    @given(st.integers(min_value=1, max_value=12), st.randoms(use_true_random=False))
    @settings(max_examples=200, deadline=None)
    def test_consistency_relations(self, n, rnd):
        classes = [rnd.choice("RSN") for _ in range(n)]
        classes[rnd.randrange(n)] = "R"
        v = make_verified("".join(classes))
        perm = list(range(n))
        rnd.shuffle(perm)
        verdict = judge_instance(v, Ranking(tuple(perm)))
        assert verdict.misranked == (verdict.misrank_count > 0)
        if verdict.first_in_n:
            assert verdict.misranked
        assert verdict.misrank_count <= len(v.partition.n)

    @given(st.integers(min_value=2, max_value=12), st.randoms(use_true_random=False))
    @settings(max_examples=200, deadline=None)
    def test_demoting_nonselected_never_hurts(self, n, rnd):
        classes = [rnd.choice("RSN") for _ in range(n)]
        classes[rnd.randrange(n)] = "R"
        classes[rnd.randrange(n)] = "N"
        if "R" not in classes:
            classes[0] = "R"
        v = make_verified("".join(classes))
        perm = list(range(n))
        rnd.shuffle(perm)
        n_ranks = [i for i, p in enumerate(perm) if classes[p] == "N"]
        if not n_ranks:
            return
        i = rnd.choice(n_ranks)
        j = rnd.randrange(i, n)
        before = judge_instance(v, Ranking(tuple(perm))).misrank_count
        moved = perm[:i] + perm[i + 1 : j + 1] + [perm[i]] + perm[j + 1 :]
        after = judge_instance(v, Ranking(tuple(moved))).misrank_count
        assert after <= before

    @given(st.integers(min_value=1, max_value=10), st.randoms(use_true_random=False))
    @settings(max_examples=100, deadline=None)
    def test_verdict_ignores_token_strings(self, n, rnd):
        classes = ["R"] + [rnd.choice("RSN") for _ in range(n - 1)]
        perm = list(range(n))
        rnd.shuffle(perm)
        a = make_verified("".join(classes))
        b = VerifiedInstance(
            instance=Instance(id="other", tokens=tuple(f"tok{i}" for i in range(n))),
            partition=a.partition,
            prediction=0.3,
            bias_prediction=0.1,
        )
        assert judge_instance(a, Ranking(tuple(perm))) == judge_instance(b, Ranking(tuple(perm)))


class TestOracleRanking:
    def test_classes_in_order(self):
        v = make_verified("NSRNR")
        assert oracle_ranking(v.partition).order == (2, 4, 1, 0, 3)

    def test_always_scores_zero(self):
        rng = random.Random(7)
        for _ in range(200):
            n = rng.randint(1, 12)
            classes = [rng.choice("RSN") for _ in range(n)]
            classes[rng.randrange(n)] = "R"
            v = make_verified("".join(classes))
            verdict = judge_instance(v, oracle_ranking(v.partition))
            assert verdict == InstanceVerdict(False, False, 0)


class TestReportRows:
    def test_row_fields(self):
        report = aggregate([InstanceVerdict(False, False, 0)])
        row = report_row("lime", "demo", report)
        assert set(row) == set(REPORT_FIELDS) | {"padded"}
        assert row["n_instances"] == 1

    def test_report_recomputable_from_verdicts(self):
        verdicts = [InstanceVerdict(bool(i % 2), bool(i % 3), i % 4) for i in range(10)]
        a = aggregate(verdicts)
        b = aggregate(list(verdicts))
        assert a == b
