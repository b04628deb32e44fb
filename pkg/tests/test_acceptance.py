"""Acceptance suite: one test per exit criterion, one printed line each.

Run with `pytest tests/test_acceptance.py -v -s` to see the PASS/FAIL line
and elapsed time per criterion.
"""
import itertools
import json
import math
import random
import time
from contextlib import contextmanager

import pytest

from selexplain.builtin import (
    VERY_GOOD_REVIEW,
    demo_instances,
    handshake_free_rule_model,
    handshake_rule_model,
    review_lexicon_model,
    sentiment_rule_model,
    synthetic_corpus_spec,
)
from selexplain.corpus import gen_corpus, write_corpus
from selexplain.explainers import (
    ExplainerConfig,
    Ranking,
    exact_shapley,
    greedy_sufficient_subset,
    lime_rank,
    sampled_shapley,
    to_ranking,
)
from selexplain.harness import (
    PruningStats,
    Rejection,
    RejectionReason,
    SelectionPartition,
    VerifiedInstance,
    verify_corpus,
    verify_instance,
)
from selexplain.metrics import (
    REPORT_FIELDS,
    InstanceVerdict,
    aggregate,
    judge_instance,
    oracle_judge,
    oracle_ranking,
    report_row,
)
from selexplain.models import Instance, LexiconModel, encode, model_to_dict, predict, predict_masked
from selexplain.pipeline import ExplainerSpec, RunConfig, run_pipeline


@contextmanager
def criterion(label):
    start = time.monotonic()
    try:
        yield
    except BaseException:
        print(f"[FAIL] {label}")
        raise
    print(f"[PASS] {label} ({time.monotonic() - start:.2f}s)")


@pytest.fixture(scope="module")
def synthetic_runs():
    """Two verified (model, dataset) pairs: 500 rule + 500 lexicon instances."""
    runs = []
    for kind, model in (("rule", sentiment_rule_model()), ("lexicon", review_lexicon_model())):
        corpus = gen_corpus(synthetic_corpus_spec(kind, n_instances=500, seed=20240801))
        verified, rejections, stats = verify_corpus(model, corpus)
        runs.append((kind, model, verified, rejections, stats))
    return runs


def test_exact_shapley_reference_values():
    with criterion("exact Shapley reproduces the reference attributions"):
        model = sentiment_rule_model()
        x1, x2 = demo_instances()

        w1 = exact_shapley(model, x1).weights
        nice1, good1 = x1.tokens.index("nice"), x1.tokens.index("good")
        assert w1[nice1] == pytest.approx(0.4, abs=1e-9)
        assert w1[good1] == pytest.approx(0.3, abs=1e-9)
        assert all(w1[i] == pytest.approx(0.0, abs=1e-9) for i in set(range(9)) - {nice1, good1})

        w2 = exact_shapley(model, x2).weights
        assert w2[11] == pytest.approx(5 / 12, abs=1e-9)   # good  ~ 0.41667
        assert w2[3] == pytest.approx(11 / 30, abs=1e-9)   # nice  ~ 0.36667
        assert w2[10] == pytest.approx(7 / 60, abs=1e-9)   # very  ~ 0.11667
        assert all(w2[i] == pytest.approx(0.0, abs=1e-9) for i in set(range(12)) - {3, 10, 11})


def test_handshake_pruning():
    with criterion("partial-selection instance pruned; full-selection variant verified"):
        sentence = Instance.from_text("probe", VERY_GOOD_REVIEW)

        rejected = verify_instance(handshake_rule_model(), sentence)
        assert isinstance(rejected, Rejection)
        assert rejected.reason is RejectionReason.HANDSHAKE

        accepted = verify_instance(handshake_free_rule_model(), sentence)
        assert isinstance(accepted, VerifiedInstance)
        very, good = sentence.tokens.index("very"), sentence.tokens.index("good")
        assert accepted.partition.sr == frozenset({very, good})


def test_zero_contribution_guarantee(synthetic_runs):
    with criterion("deleting non-selected subsets never moves the prediction (1000-instance run)"):
        start = time.monotonic()
        total_verified = 0
        rng = random.Random(99)
        for kind, model, verified, _, _ in synthetic_runs:
            for v in verified:
                total_verified += 1
                x = v.instance
                base = predict(model, x)
                assert base == v.prediction
                n_positions = sorted(v.partition.n)
                everything = set(range(len(x)))
                if len(n_positions) <= 12:
                    subsets = itertools.chain.from_iterable(
                        itertools.combinations(n_positions, r)
                        for r in range(len(n_positions) + 1)
                    )
                else:
                    subsets = [
                        tuple(p for p in n_positions if rng.random() < 0.5) for _ in range(200)
                    ]
                for dropped in subsets:
                    assert predict_masked(model, x, everything - set(dropped)) == base
        assert total_verified > 0
        assert time.monotonic() - start < 120.0


def test_metric_oracle_equivalence():
    with criterion("scanning judge matches the pairwise oracle with zero discrepancies"):
        start = time.monotonic()

        def verified_from_classes(classes):
            return VerifiedInstance(
                instance=Instance(id="m", tokens=("t",) * len(classes)),
                partition=SelectionPartition(
                    sr={i for i, c in enumerate(classes) if c == "R"},
                    sdk={i for i, c in enumerate(classes) if c == "S"},
                    n={i for i, c in enumerate(classes) if c == "N"},
                ),
                prediction=0.8,
                bias_prediction=0.0,
            )

        # the verdict is a function of the class sequence along the ranks
        # (checked per permutation for small n below), so enumerating all
        # class sequences once per n covers the full behavioral input space
        for n in range(1, 9):
            for classes in itertools.product("RSN", repeat=n):
                if "R" not in classes:
                    continue
                v = verified_from_classes(classes)
                r = Ranking(tuple(range(n)))
                assert judge_instance(v, r) == oracle_judge(v, r)
        for n in range(1, 5):
            for classes in itertools.product("RSN", repeat=n):
                if "R" not in classes:
                    continue
                v = verified_from_classes(classes)
                for perm in itertools.permutations(range(n)):
                    r = Ranking(perm)
                    assert judge_instance(v, r) == oracle_judge(v, r)

        rng = random.Random(31337)
        for _ in range(10000):
            n = rng.randint(1, 15)
            classes = [rng.choice("RSN") for _ in range(n)]
            classes[rng.randrange(n)] = "R"
            v = verified_from_classes(classes)
            perm = list(range(n))
            rng.shuffle(perm)
            r = Ranking(tuple(perm))
            assert judge_instance(v, r) == oracle_judge(v, r)
        assert time.monotonic() - start < 60.0


def test_reference_order_scores_zero(synthetic_runs):
    with criterion("the relevant-first reference ranking is error-free on every dataset"):
        datasets = [
            verify_corpus(sentiment_rule_model(), demo_instances())[0],
        ]
        datasets.extend(verified for _, _, verified, _, _ in synthetic_runs)
        for verified in datasets:
            assert verified
            verdicts = [judge_instance(v, oracle_ranking(v.partition)) for v in verified]
            report = aggregate(verdicts)
            assert report.pct_first == 0.0
            assert report.pct_misrnk == 0.0
            assert report.avg_misrnk_mean == 0.0
            assert report.avg_misrnk_std == 0.0


def test_perspective_divergence():
    with criterion("additive and sufficiency views disagree on the two-token instance"):
        model = sentiment_rule_model()
        _, x2 = demo_instances()
        v = verify_instance(model, x2)
        assert isinstance(v, VerifiedInstance)
        nice, very = 3, 10
        assert nice in v.partition.n and very in v.partition.sr

        attribution = exact_shapley(model, x2)
        assert attribution.weights[nice] == pytest.approx(11 / 30, abs=1e-9)
        assert attribution.weights[very] == pytest.approx(7 / 60, abs=1e-9)
        shapley_ranking = to_ranking(attribution)
        assert shapley_ranking.order.index(nice) < shapley_ranking.order.index(very)
        shapley_report = aggregate([judge_instance(v, shapley_ranking)])
        assert shapley_report.pct_misrnk == 100.0

        greedy_report = aggregate([judge_instance(v, greedy_sufficient_subset(model, x2))])
        assert greedy_report.pct_first == 0.0
        assert greedy_report.pct_misrnk == 0.0
        assert greedy_report.avg_misrnk_mean == 0.0


def test_sampled_shapley_convergence():
    with criterion("permutation sampling converges and conserves the prediction mass"):
        model = sentiment_rule_model()
        _, x2 = demo_instances()
        exact = exact_shapley(model, x2).weights
        target = predict(model, x2) - encode(model, ())

        est = sampled_shapley(model, x2, ExplainerConfig(seed=424242, n_samples=50000))
        assert max(abs(a - b) for a, b in zip(est.weights, exact)) < 0.02
        assert sum(est.weights) == target

        for n_samples in (1, 2, 7, 50, 313, 2000):
            for seed in (0, 1, 6, 99):
                w = sampled_shapley(model, x2, ExplainerConfig(seed=seed, n_samples=n_samples))
                assert sum(w.weights) == target


def test_surrogate_recovers_magnitude_order():
    with criterion("local surrogate recovers the additive model's magnitude order"):
        weights = {
            "w0": 0.9, "w1": -0.75, "w2": 0.6, "w3": -0.45,
            "w4": 0.35, "w5": 0.25, "w6": -0.18, "w7": 0.12,
        }
        model = LexiconModel(weights=weights, bias=0.3, theta=0.0, clamp=False)
        x = Instance(id="s", tokens=tuple(weights))
        coef = lime_rank(model, x, ExplainerConfig(seed=777, n_samples=4000))
        got = to_ranking(coef).order
        want = tuple(sorted(range(8), key=lambda i: -abs(model.weights[x.tokens[i]])))
        assert got == want


def test_pipeline_determinism(tmp_path):
    with criterion("identical config and seed give byte-identical reports"):
        corpus_path = tmp_path / "corpus.jsonl"
        write_corpus(gen_corpus(synthetic_corpus_spec("lexicon", 40, seed=5)), corpus_path)
        explainers = (
            ExplainerSpec(name="sampled_shapley", method="sampled_shapley", params={"n_samples": 200}),
            ExplainerSpec(name="lime", method="lime", params={"n_samples": 300}),
            ExplainerSpec(name="occlusion", method="occlusion"),
            ExplainerSpec(name="greedy", method="greedy"),
            ExplainerSpec(name="random", method="random"),
            ExplainerSpec(name="oracle", method="oracle"),
        )

        def run(out):
            return run_pipeline(
                RunConfig(
                    out_dir=out,
                    model_inline=model_to_dict(review_lexicon_model()),
                    corpus=corpus_path,
                    explainers=explainers,
                    seed=90125,
                    dataset="determinism-probe",
                    no_timestamp=True,
                )
            )

        run(tmp_path / "a")
        run(tmp_path / "b")
        for name in ("report.json", "report.tsv", "verdicts.jsonl", "explanations.jsonl",
                     "verified.jsonl", "pruning_stats.json"):
            assert (tmp_path / "a" / name).read_bytes() == (tmp_path / "b" / name).read_bytes(), name


def test_report_schemas(synthetic_runs, tmp_path):
    with criterion("report and statistics artifacts carry the reference column structure"):
        # The reference error rates and corpus statistics themselves are not
        # reproducible here (they require the originally trained model, its
        # corpus, and the original third-party explainers); this suite
        # validates the artifact schemas and relies on the other criteria
        # for substance.
        _, _, verified, _, stats = synthetic_runs[1]
        stats_doc = stats.to_dict()
        assert {
            "n_retained",
            "avg_len",
            "avg_s",
            "avg_sr",
            "avg_n",
            "pct_handshake_pruned",
            "pct_no_sr_pruned",
        } <= set(stats_doc)
        for key in ("avg_len", "avg_s", "avg_sr", "avg_n"):
            assert set(stats_doc[key]) == {"mean", "std"}
        assert 0.0 <= stats_doc["pct_handshake_pruned"] <= 100.0
        assert 0.0 <= stats_doc["pct_no_sr_pruned"] <= 100.0

        verdicts = [judge_instance(v, oracle_ranking(v.partition)) for v in verified]
        row = report_row("probe", "probe-dataset", aggregate(verdicts))
        assert set(REPORT_FIELDS) <= set(row)
        assert REPORT_FIELDS == (
            "explainer",
            "dataset",
            "pct_first",
            "pct_misrnk",
            "avg_misrnk_mean",
            "avg_misrnk_std",
            "n_instances",
        )
