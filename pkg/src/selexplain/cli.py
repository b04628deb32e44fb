"""Command-line driver.

Subcommands compose the pipeline stages; `evaluate` runs all of them from
one config, `demo` runs the built-in fixture models end to end. Failures
exit non-zero and leave a machine-readable `error.json` in the output
directory when one is known.
"""
from __future__ import annotations

import argparse
import dataclasses
import json
import sys
import traceback
from pathlib import Path

from .builtin import (
    VERY_GOOD_REVIEW,
    demo_instances,
    handshake_rule_model,
    review_lexicon_model,
    sentiment_rule_model,
    synthetic_corpus_spec,
)
from .corpus import corpus_gen_spec_from_dict, gen_corpus, write_corpus
from .models import Instance, model_to_dict
from .pipeline import ExplainerSpec, RunConfig, load_run_config, rebuild_report, run_pipeline


def _write_error(out_dir: Path | None, exc: Exception) -> None:
    if out_dir is None:
        return
    try:
        out_dir.mkdir(parents=True, exist_ok=True)
        (out_dir / "error.json").write_text(
            json.dumps({"error": type(exc).__name__, "message": str(exc)}, indent=2) + "\n"
        )
    except OSError:
        pass  # the original error is still reported on stderr


def _cmd_gen_corpus(args) -> int:
    doc = json.loads(Path(args.config).read_text())
    if args.seed is not None:
        doc["seed"] = args.seed
    instances = gen_corpus(corpus_gen_spec_from_dict(doc))
    write_corpus(instances, args.out)
    print(f"wrote {len(instances)} instances to {args.out}")
    return 0


def _run_overrides(args) -> dict:
    overrides = {}
    if args.out is not None:
        overrides["out_dir"] = Path(args.out)
    if args.seed is not None:
        overrides["seed"] = args.seed
    if getattr(args, "top_k", None) is not None:
        overrides["top_k"] = args.top_k
    if getattr(args, "no_timestamp", False):
        overrides["no_timestamp"] = True
    return overrides


def _cmd_verify(args) -> int:
    cfg = load_run_config(args.config, **_run_overrides(args))
    cfg = dataclasses.replace(cfg, explainers=())
    summary = run_pipeline(cfg)
    print(
        f"verified {summary['n_verified']} of {summary['n_corpus']} instances "
        f"({summary['n_rejected']} rejected); artifacts in {summary['out_dir']}"
    )
    return 0


def _cmd_evaluate(args) -> int:
    cfg = load_run_config(args.config, **_run_overrides(args))
    summary = run_pipeline(cfg)
    print(
        f"verified {summary['n_verified']} of {summary['n_corpus']} instances; "
        f"{len(summary['report_rows'])} report rows; artifacts in {summary['out_dir']}"
    )
    for row in summary["report_rows"]:
        print(
            f"  {row['explainer']:>16}: pct_first={row['pct_first']:.2f} "
            f"pct_misrnk={row['pct_misrnk']:.2f} avg_misrnk={row['avg_misrnk_mean']:.2f}"
        )
    return 0


def _cmd_report(args) -> int:
    cfg = load_run_config(args.config, **_run_overrides(args))
    rows = rebuild_report(cfg.out_dir, cfg.dataset, top_k=cfg.top_k)
    print(f"re-rendered report with {len(rows)} rows in {cfg.out_dir}")
    return 0


def _demo_explainers() -> list[dict]:
    return [
        {"name": "shapley", "method": "exact_shapley"},
        {"name": "sampled_shapley", "method": "sampled_shapley", "params": {"n_samples": 2000}},
        {"name": "lime", "method": "lime", "params": {"n_samples": 2000}},
        {"name": "occlusion", "method": "occlusion"},
        {"name": "greedy", "method": "greedy"},
        {"name": "random", "method": "random"},
        {"name": "oracle", "method": "oracle"},
    ]


def _cmd_demo(args) -> int:
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    seed = args.seed if args.seed is not None else 0

    # run 1: the sentiment if-chain on its two demo reviews
    sentiment_dir = out / "sentiment"
    corpus_path = out / "demo_reviews.jsonl"
    write_corpus(demo_instances(), corpus_path)
    cfg = RunConfig(
        out_dir=sentiment_dir,
        model_inline=model_to_dict(sentiment_rule_model()),
        corpus=corpus_path,
        explainers=tuple(
            ExplainerSpec(name=e["name"], method=e["method"], params=e.get("params", {}))
            for e in _demo_explainers()
        ),
        seed=seed,
        dataset="sentiment-demo",
        top_k=args.top_k,
        no_timestamp=args.no_timestamp,
    )
    summary = run_pipeline(cfg)
    print(f"sentiment demo: {summary['n_verified']} verified; report in {sentiment_dir}")

    # run 2: the leaky if-chain gets its instance pruned
    leaky_dir = out / "leaky"
    leaky_corpus = out / "leaky_reviews.jsonl"
    write_corpus([Instance.from_text("leak-1", VERY_GOOD_REVIEW)], leaky_corpus)
    leaky_cfg = RunConfig(
        out_dir=leaky_dir,
        model_inline=model_to_dict(handshake_rule_model()),
        corpus=leaky_corpus,
        explainers=(),
        seed=seed,
        dataset="leaky-demo",
        no_timestamp=args.no_timestamp,
    )
    leaky_summary = run_pipeline(leaky_cfg)
    print(
        f"leaky demo: {leaky_summary['n_rejected']} instance(s) rejected "
        f"(see {leaky_dir / 'rejections.jsonl'})"
    )

    # run 3: a synthetic lexicon corpus for fuller statistics
    synth_dir = out / "synthetic"
    spec = synthetic_corpus_spec("lexicon", n_instances=60, seed=seed)
    synth_cfg = RunConfig(
        out_dir=synth_dir,
        model_inline=model_to_dict(review_lexicon_model()),
        corpus_gen=spec,
        explainers=tuple(
            ExplainerSpec(name=e["name"], method=e["method"], params=e.get("params", {}))
            for e in _demo_explainers()
            if e["method"] != "exact_shapley"
        ),
        seed=seed,
        dataset="synthetic-lexicon",
        top_k=args.top_k,
        no_timestamp=args.no_timestamp,
    )
    synth_summary = run_pipeline(synth_cfg)
    print(f"synthetic demo: {synth_summary['n_verified']} verified; report in {synth_dir}")
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="selexplain",
        description="Ground-truth evaluation of feature-based explainers on "
        "select-then-predict models.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("gen-corpus", help="expand a corpus generator spec into a corpus file")
    p.add_argument("--config", required=True, help="corpus generator spec (JSON)")
    p.add_argument("--out", required=True, help="corpus file to write (.jsonl or .txt)")
    p.add_argument("--seed", type=int, default=None)
    p.set_defaults(func=_cmd_gen_corpus)

    for name, func, help_text in (
        ("verify", _cmd_verify, "verify a corpus against a model; no explainers"),
        ("explain", _cmd_evaluate, "verify and explain (full pipeline)"),
        ("evaluate", _cmd_evaluate, "run the full pipeline: verify, explain, judge, report"),
        ("report", _cmd_report, "re-render report table and heatmaps from existing artifacts"),
    ):
        p = sub.add_parser(name, help=help_text)
        p.add_argument("--config", required=True, help="run config (JSON)")
        p.add_argument("--out", default=None, help="output directory override")
        p.add_argument("--seed", type=int, default=None, help="run seed override")
        p.add_argument("--top-k", dest="top_k", type=int, default=None)
        p.add_argument("--no-timestamp", dest="no_timestamp", action="store_true")
        p.set_defaults(func=func)

    p = sub.add_parser("demo", help="run the built-in fixture models end to end")
    p.add_argument("--out", required=True, help="output directory")
    p.add_argument("--seed", type=int, default=None)
    p.add_argument("--top-k", dest="top_k", type=int, default=10)
    p.add_argument("--no-timestamp", dest="no_timestamp", action="store_true")
    p.set_defaults(func=_cmd_demo)
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    out_dir = Path(args.out) if getattr(args, "out", None) else None
    try:
        return args.func(args)
    except Exception as exc:  # noqa: BLE001 - CLI boundary
        _write_error(out_dir, exc)
        print(f"error: {exc}", file=sys.stderr)
        if "--debug" in (argv or sys.argv):
            traceback.print_exc()
        return 1


if __name__ == "__main__":
    sys.exit(main())
