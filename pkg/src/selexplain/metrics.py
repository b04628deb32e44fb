"""Ranking-error metrics over verified instances.

Three errors are counted against the guarantees of a verified instance:
the top-ranked token landing among the non-selected ones, any non-selected
token ranked above a clearly relevant one, and the number of non-selected
tokens ranked above the deepest clearly relevant token. An O(n^2)
pairwise re-derivation (`oracle_judge`) ships alongside the scanning
implementation so every verdict can be cross-checked independently.
"""
from __future__ import annotations

import json
import math
from dataclasses import dataclass
from pathlib import Path
from typing import Iterable, Mapping, Sequence

from .explainers import Ranking
from .harness import SelectionPartition, VerifiedInstance

__all__ = [
    "InstanceVerdict",
    "MetricsReport",
    "aggregate",
    "judge_instance",
    "oracle_judge",
    "oracle_ranking",
    "report_row",
    "write_report_json",
    "write_report_table",
    "write_verdicts",
    "load_verdicts",
]

REPORT_FIELDS = (
    "explainer",
    "dataset",
    "pct_first",
    "pct_misrnk",
    "avg_misrnk_mean",
    "avg_misrnk_std",
    "n_instances",
)


@dataclass(frozen=True)
class InstanceVerdict:
    first_in_n: bool
    misranked: bool
    misrank_count: int

    def __post_init__(self) -> None:
        if self.misrank_count < 0:
            raise ValueError("misrank_count must be non-negative")


@dataclass(frozen=True)
class MetricsReport:
    """Aggregated error rates; percentages carry two decimals."""

    pct_first: float
    pct_misrnk: float
    avg_misrnk_mean: float
    avg_misrnk_std: float
    n_instances: int


def _check_inputs(v: VerifiedInstance, r: Ranking) -> None:
    if len(r.order) != len(v.instance):
        raise ValueError(
            f"ranking covers {len(r.order)} positions but instance "
            f"{v.instance.id!r} has {len(v.instance)}"
        )
    if not v.partition.sr:
        raise ValueError(f"instance {v.instance.id!r} has an empty clearly-relevant set")


def judge_instance(v: VerifiedInstance, r: Ranking) -> InstanceVerdict:
    """Single-scan verdict for one (verified instance, ranking) pair."""
    _check_inputs(v, r)
    sr = v.partition.sr
    non_selected = v.partition.n
    last_si = max(i for i, pos in enumerate(r.order) if pos in sr)
    misrank_count = sum(1 for i in range(last_si) if r.order[i] in non_selected)
    return InstanceVerdict(
        first_in_n=r.order[0] in non_selected,
        misranked=misrank_count > 0,
        misrank_count=misrank_count,
    )


def oracle_judge(v: VerifiedInstance, r: Ranking) -> InstanceVerdict:
    """Brute-force pairwise re-derivation of the same verdict.

    A non-selected position counts as misranked iff *some* clearly relevant
    position sits strictly below it; no deepest-rank bookkeeping involved.
    """
    _check_inputs(v, r)
    sr = v.partition.sr
    non_selected = v.partition.n
    order = r.order
    n = len(order)
    misranked = any(
        order[i] in non_selected and order[j] in sr
        for i in range(n)
        for j in range(i + 1, n)
    )
    count = sum(
        1
        for i in range(n)
        if order[i] in non_selected and any(order[j] in sr for j in range(i + 1, n))
    )
    return InstanceVerdict(first_in_n=order[0] in non_selected, misranked=misranked, misrank_count=count)


def aggregate(verdicts: Sequence[InstanceVerdict]) -> MetricsReport:
    """Mean error rates; percentages rounded to two decimals, dispersion is
    the population standard deviation. Zero-error instances still count in
    the misrank average."""
    if not verdicts:
        raise ValueError("cannot aggregate an empty verdict list")
    n = len(verdicts)
    counts = [v.misrank_count for v in verdicts]
    mean = sum(counts) / n
    std = math.sqrt(sum((c - mean) ** 2 for c in counts) / n)
    return MetricsReport(
        pct_first=round(100.0 * sum(v.first_in_n for v in verdicts) / n, 2),
        pct_misrnk=round(100.0 * sum(v.misranked for v in verdicts) / n, 2),
        avg_misrnk_mean=mean,
        avg_misrnk_std=std,
        n_instances=n,
    )


def oracle_ranking(partition: SelectionPartition) -> Ranking:
    """The error-free reference order: clearly relevant positions first,
    then the other selected ones, then non-selected; ascending within each."""
    return Ranking(
        tuple(sorted(partition.sr)) + tuple(sorted(partition.sdk)) + tuple(sorted(partition.n))
    )


# --- report artifacts ---------------------------------------------------------


def report_row(explainer: str, dataset: str, report: MetricsReport, padded: bool = False) -> dict:
    return {
        "explainer": explainer,
        "dataset": dataset,
        "pct_first": report.pct_first,
        "pct_misrnk": report.pct_misrnk,
        "avg_misrnk_mean": report.avg_misrnk_mean,
        "avg_misrnk_std": report.avg_misrnk_std,
        "n_instances": report.n_instances,
        "padded": padded,
    }


def write_report_json(
    rows: Sequence[Mapping], path: str | Path, generated_at: str | None = None
) -> None:
    doc: dict = {"rows": list(rows)}
    if generated_at is not None:
        doc["generated_at"] = generated_at
    Path(path).write_text(json.dumps(doc, indent=2, sort_keys=True) + "\n")


def write_report_table(rows: Sequence[Mapping], path: str | Path) -> None:
    """Tab-separated table, one row per (explainer, dataset)."""
    lines = ["\t".join(REPORT_FIELDS)]
    for row in rows:
        lines.append(
            "\t".join(
                [
                    str(row["explainer"]),
                    str(row["dataset"]),
                    f"{row['pct_first']:.2f}",
                    f"{row['pct_misrnk']:.2f}",
                    f"{row['avg_misrnk_mean']:.2f}",
                    f"{row['avg_misrnk_std']:.2f}",
                    str(row["n_instances"]),
                ]
            )
        )
    Path(path).write_text("".join(line + "\n" for line in lines))


def write_verdicts(records: Iterable[Mapping], path: str | Path) -> None:
    """Verdict log: {"instance_id", "explainer", "first_in_n", "misranked",
    "misrank_count"} per line."""
    lines = [json.dumps(dict(rec), sort_keys=True) for rec in records]
    Path(path).write_text("".join(line + "\n" for line in lines))


def load_verdicts(path: str | Path) -> list[dict]:
    return [
        json.loads(line)
        for line in Path(path).read_text().splitlines()
        if line.strip()
    ]
