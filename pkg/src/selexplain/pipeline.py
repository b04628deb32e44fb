"""End-to-end pipeline: ingest -> verify -> explain -> judge -> report.

A run is described by a JSON config naming a model spec, a corpus (file or
generator parameters), harness thresholds, and an explainer list. Every
artifact is a record-structured text file; with the timestamp disabled,
identical (config, seed) runs produce byte-identical artifacts. All
randomness flows from the single run seed, split per (explainer, instance)
so per-instance results do not depend on processing order.
"""
from __future__ import annotations

import dataclasses
import json
from dataclasses import dataclass, field
from datetime import datetime, timezone
from pathlib import Path
from typing import Mapping, Sequence

from . import metrics as metrics_mod
from .corpus import CorpusGenSpec, corpus_gen_spec_from_dict, gen_corpus, load_corpus, write_corpus
from .explainers import (
    AttributionVector,
    CoalitionValues,
    ExplainerConfig,
    Ranking,
    derive_seed,
    exact_shapley,
    greedy_sufficient_subset,
    lime_rank,
    occlusion_rank,
    random_rank,
    sampled_shapley,
    to_ranking,
)
from .harness import (
    HarnessConfig,
    VerifiedInstance,
    load_verified_dataset,
    verify_corpus,
    write_rejections,
    write_verified_dataset,
)
from .heatmap import render_heatmap
from .metrics import aggregate, judge_instance, oracle_ranking, report_row
from .models import TargetModel, load_model, model_from_dict

__all__ = [
    "EXPLAINER_METHODS",
    "ExplainerSpec",
    "RunConfig",
    "explain_verified",
    "load_explanations",
    "load_run_config",
    "run_pipeline",
]


@dataclass(frozen=True)
class ExplainerSpec:
    """One explainer slot in a run: unique name, method, config overrides."""

    name: str
    method: str
    params: Mapping = field(default_factory=dict)

    def config(self, seed: int) -> ExplainerConfig:
        allowed = {f.name for f in dataclasses.fields(ExplainerConfig)}
        unknown = set(self.params) - allowed
        if unknown:
            raise ValueError(f"explainer {self.name!r} has unknown params {sorted(unknown)}")
        kwargs = dict(self.params)
        kwargs["seed"] = seed
        return ExplainerConfig(**kwargs)


def explain_verified(
    model: TargetModel,
    v: VerifiedInstance,
    spec: ExplainerSpec,
    seed: int,
    values: CoalitionValues | None = None,
) -> tuple[Ranking, AttributionVector | None]:
    """Run one explainer on one verified instance."""
    cfg = spec.config(seed)
    x = v.instance
    method = spec.method
    if method == "exact_shapley":
        attribution = exact_shapley(model, x, cfg, values)
        return to_ranking(attribution, signed=cfg.rank_signed), attribution
    if method == "sampled_shapley":
        attribution = sampled_shapley(model, x, cfg, values)
        return to_ranking(attribution, signed=cfg.rank_signed), attribution
    if method == "lime":
        attribution = lime_rank(model, x, cfg, values)
        return to_ranking(attribution, signed=cfg.rank_signed), attribution
    if method == "occlusion":
        attribution = occlusion_rank(model, x, values)
        return to_ranking(attribution, signed=cfg.rank_signed), attribution
    if method == "greedy":
        return greedy_sufficient_subset(model, x, cfg, values), None
    if method == "random":
        return random_rank(x, cfg), None
    if method == "oracle":
        return oracle_ranking(v.partition), None
    raise ValueError(f"unknown explainer method {method!r}")


EXPLAINER_METHODS = (
    "exact_shapley",
    "sampled_shapley",
    "lime",
    "occlusion",
    "greedy",
    "random",
    "oracle",
)


@dataclass(frozen=True)
class RunConfig:
    out_dir: Path
    model_spec: Path | None = None
    model_inline: Mapping | None = None
    corpus: Path | None = None
    corpus_gen: CorpusGenSpec | None = None
    tau: float = 0.1
    min_sr: int = 1
    explainers: tuple[ExplainerSpec, ...] = ()
    seed: int = 0
    dataset: str = "dataset"
    top_k: int = 10
    no_timestamp: bool = False
    max_heatmaps: int = 8

    def __post_init__(self) -> None:
        names = [e.name for e in self.explainers]
        if len(names) != len(set(names)):
            raise ValueError("explainer names must be unique")
        if (self.model_spec is None) == (self.model_inline is None):
            raise ValueError("exactly one of model_spec / model_inline is required")
        if (self.corpus is None) == (self.corpus_gen is None):
            raise ValueError("exactly one of corpus / corpus_gen is required")
        if self.model_spec is not None and not Path(self.model_spec).exists():
            raise FileNotFoundError(f"model spec {self.model_spec} does not exist")
        if self.corpus is not None and not Path(self.corpus).exists():
            raise FileNotFoundError(f"corpus file {self.corpus} does not exist")


def load_run_config(path: str | Path, **overrides) -> RunConfig:
    """Parse a run config JSON; relative paths resolve against the file."""
    path = Path(path)
    doc = json.loads(path.read_text())
    base = path.parent

    def _resolve(p):
        return None if p is None else (base / p if not Path(p).is_absolute() else Path(p))

    explainers = tuple(
        ExplainerSpec(name=e["name"], method=e["method"], params=e.get("params", {}))
        for e in doc.get("explainers", [])
    )
    corpus_gen = None
    if "corpus_gen" in doc:
        corpus_gen = corpus_gen_spec_from_dict(doc["corpus_gen"])
    kwargs = dict(
        out_dir=_resolve(doc.get("out_dir", "out")),
        model_spec=_resolve(doc.get("model_spec")),
        model_inline=doc.get("model"),
        corpus=_resolve(doc.get("corpus")),
        corpus_gen=corpus_gen,
        tau=float(doc.get("tau", 0.1)),
        min_sr=int(doc.get("min_sr", 1)),
        explainers=explainers,
        seed=int(doc.get("seed", 0)),
        dataset=str(doc.get("dataset", "dataset")),
        top_k=int(doc.get("top_k", 10)),
        no_timestamp=bool(doc.get("no_timestamp", False)),
        max_heatmaps=int(doc.get("max_heatmaps", 8)),
    )
    kwargs.update(overrides)
    return RunConfig(**kwargs)


def _load_model_from_config(cfg: RunConfig) -> TargetModel:
    if cfg.model_spec is not None:
        return load_model(cfg.model_spec)
    return model_from_dict(cfg.model_inline)


def _load_corpus_from_config(cfg: RunConfig, out: Path):
    if cfg.corpus is not None:
        return load_corpus(cfg.corpus)
    instances = gen_corpus(cfg.corpus_gen)
    write_corpus(instances, out / "corpus.jsonl")
    return instances


def run_pipeline(cfg: RunConfig) -> dict:
    """Run every stage and write all artifacts under `cfg.out_dir`.

    Returns a summary dict (artifact paths, counts, report rows). File,
    parse, and explainer-cap errors propagate to the caller; the CLI turns
    them into a non-zero exit plus an error record.
    """
    out = Path(cfg.out_dir)
    out.mkdir(parents=True, exist_ok=True)
    model = _load_model_from_config(cfg)
    corpus = _load_corpus_from_config(cfg, out)

    verified, rejections, stats = verify_corpus(
        model, corpus, HarnessConfig(tau=cfg.tau, min_sr=cfg.min_sr)
    )
    write_verified_dataset(verified, out / "verified.jsonl")
    write_rejections(rejections, out / "rejections.jsonl")
    (out / "pruning_stats.json").write_text(
        json.dumps(stats.to_dict(), indent=2, sort_keys=True) + "\n"
    )

    explanation_lines: list[str] = []
    verdict_records: list[dict] = []
    rows: list[dict] = []
    rankings_by_instance: dict[str, dict[str, Ranking]] = {v.instance.id: {} for v in verified}
    verdicts_by_explainer: dict[str, list] = {e.name: [] for e in cfg.explainers}

    for v in verified:
        values = CoalitionValues(model, v.instance)
        for spec in cfg.explainers:
            seed = derive_seed(cfg.seed, spec.name, v.instance.id)
            ranking, attribution = explain_verified(model, v, spec, seed, values)
            rankings_by_instance[v.instance.id][spec.name] = ranking
            record = {
                "instance_id": v.instance.id,
                "explainer_name": spec.name,
                "order": list(ranking.order),
                "seed": seed,
                "params": {"method": spec.method, **dict(spec.params)},
            }
            if attribution is not None:
                record["weights"] = list(attribution.weights)
            explanation_lines.append(json.dumps(record, sort_keys=True))
            verdict = judge_instance(v, ranking)
            verdicts_by_explainer[spec.name].append(verdict)
            verdict_records.append(
                {
                    "instance_id": v.instance.id,
                    "explainer": spec.name,
                    "first_in_n": verdict.first_in_n,
                    "misranked": verdict.misranked,
                    "misrank_count": verdict.misrank_count,
                }
            )

    (out / "explanations.jsonl").write_text(
        "".join(line + "\n" for line in explanation_lines)
    )
    metrics_mod.write_verdicts(verdict_records, out / "verdicts.jsonl")

    if verified:
        for spec in cfg.explainers:
            rows.append(
                report_row(spec.name, cfg.dataset, aggregate(verdicts_by_explainer[spec.name]))
            )
    generated_at = None
    if not cfg.no_timestamp:
        generated_at = datetime.now(timezone.utc).isoformat()
    metrics_mod.write_report_json(rows, out / "report.json", generated_at=generated_at)
    metrics_mod.write_report_table(rows, out / "report.tsv")

    heatmap_dir = out / "heatmaps"
    if cfg.explainers and verified:
        heatmap_dir.mkdir(exist_ok=True)
        for v in verified[: cfg.max_heatmaps]:
            doc = render_heatmap(v, rankings_by_instance[v.instance.id], top_k=cfg.top_k)
            (heatmap_dir / f"{v.instance.id}.html").write_text(doc)

    return {
        "out_dir": str(out),
        "n_corpus": len(corpus),
        "n_verified": len(verified),
        "n_rejected": len(rejections),
        "report_rows": rows,
    }


def load_explanations(path: str | Path) -> dict[str, dict[str, Ranking]]:
    """Explanation records grouped as instance_id -> explainer -> Ranking."""
    grouped: dict[str, dict[str, Ranking]] = {}
    for line in Path(path).read_text().splitlines():
        if not line.strip():
            continue
        rec = json.loads(line)
        grouped.setdefault(rec["instance_id"], {})[rec["explainer_name"]] = Ranking(
            tuple(rec["order"])
        )
    return grouped


def rebuild_report(out_dir: str | Path, dataset: str, top_k: int = 10) -> list[dict]:
    """Re-render report table and heatmaps from artifacts already on disk."""
    out = Path(out_dir)
    verified = load_verified_dataset(out / "verified.jsonl")
    grouped = load_explanations(out / "explanations.jsonl")
    explainer_names: list[str] = []
    for per_instance in grouped.values():
        for name in per_instance:
            if name not in explainer_names:
                explainer_names.append(name)
    rows = []
    for name in explainer_names:
        verdicts = [
            judge_instance(v, grouped[v.instance.id][name])
            for v in verified
            if name in grouped.get(v.instance.id, {})
        ]
        if verdicts:
            rows.append(report_row(name, dataset, aggregate(verdicts)))
    metrics_mod.write_report_table(rows, out / "report.tsv")
    heatmap_dir = out / "heatmaps"
    heatmap_dir.mkdir(exist_ok=True)
    for v in verified:
        if grouped.get(v.instance.id):
            doc = render_heatmap(v, grouped[v.instance.id], top_k=top_k)
            (heatmap_dir / f"{v.instance.id}.html").write_text(doc)
    return rows
