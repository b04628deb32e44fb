"""Verification harness: builds datasets with per-instance guarantees.

An instance survives verification when (a) re-running the generator on
its own selection reselects everything, which certifies that non-selected
tokens had zero contribution to the prediction, and (b) at least one
selected token individually moves the encoder output by at least tau,
giving a clearly-relevant anchor that explainers must rank above every
non-selected token.
"""
from __future__ import annotations

import json
import math
from dataclasses import dataclass
from enum import Enum
from pathlib import Path
from typing import Iterable, Sequence

from .models import Instance, TargetModel, encode, generate, predict, restrict

__all__ = [
    "HarnessConfig",
    "MeanStd",
    "PruningStats",
    "Rejection",
    "RejectionReason",
    "SelectionPartition",
    "VerifiedInstance",
    "check_no_handshake",
    "clearly_relevant_set",
    "load_rejections",
    "load_verified_dataset",
    "verify_corpus",
    "verify_instance",
    "write_rejections",
    "write_verified_dataset",
]


@dataclass(frozen=True)
class HarnessConfig:
    """tau: minimum single-occlusion effect for clear relevance;
    min_sr: minimum number of clearly relevant tokens to retain an instance."""

    tau: float = 0.1
    min_sr: int = 1

    def __post_init__(self) -> None:
        if not 0.0 < self.tau <= 1.0:
            raise ValueError(f"tau {self.tau} outside (0, 1]")
        if self.min_sr < 1:
            raise ValueError(f"min_sr {self.min_sr} must be >= 1")


@dataclass(frozen=True)
class SelectionPartition:
    """Disjoint split of an instance's positions: clearly relevant (sr),
    selected with unknown relevance (sdk), and non-selected (n)."""

    sr: frozenset[int]
    sdk: frozenset[int]
    n: frozenset[int]

    def __post_init__(self) -> None:
        object.__setattr__(self, "sr", frozenset(self.sr))
        object.__setattr__(self, "sdk", frozenset(self.sdk))
        object.__setattr__(self, "n", frozenset(self.n))
        if self.sr & self.sdk or self.sr & self.n or self.sdk & self.n:
            raise ValueError("partition classes must be pairwise disjoint")

    @property
    def selected(self) -> frozenset[int]:
        return self.sr | self.sdk

    def all_positions(self) -> frozenset[int]:
        return self.sr | self.sdk | self.n


class RejectionReason(str, Enum):
    HANDSHAKE = "HANDSHAKE"
    NO_SR = "NO_SR"


@dataclass(frozen=True)
class Rejection:
    instance_id: str
    reason: RejectionReason


@dataclass(frozen=True)
class VerifiedInstance:
    """An instance that passed verification, with its partition and scores."""

    instance: Instance
    partition: SelectionPartition
    prediction: float
    bias_prediction: float

    def __post_init__(self) -> None:
        if self.partition.all_positions() != frozenset(range(len(self.instance))):
            raise ValueError(f"partition does not cover instance {self.instance.id!r}")
        if not self.partition.sr:
            raise ValueError(f"verified instance {self.instance.id!r} has no clearly relevant token")


def check_no_handshake(model: TargetModel, x: Instance) -> bool:
    """True iff the generator, re-run on the selected subsequence, reselects
    every position. Vacuously true for an empty selection."""
    selected = model.select(x.tokens)
    if not selected:
        return True
    reselected = model.select(restrict(x.tokens, selected))
    return tuple(sorted(reselected)) == tuple(range(len(selected)))


def clearly_relevant_set(model: TargetModel, x: Instance, tau: float) -> frozenset[int]:
    """Selected positions whose single occlusion from the selection moves the
    encoder output by at least tau.

    Occlusion is evaluated on the selected subsequence via the encoder
    directly; the generator is not re-run. Callers are expected to have
    passed `check_no_handshake` first.
    """
    selected = sorted(model.select(x.tokens))
    if not selected:
        return frozenset()
    base = encode(model, restrict(x.tokens, selected))
    relevant = set()
    for pos in selected:
        rest = [p for p in selected if p != pos]
        if abs(encode(model, restrict(x.tokens, rest)) - base) >= tau:
            relevant.add(pos)
    return frozenset(relevant)


def verify_instance(
    model: TargetModel, x: Instance, cfg: HarnessConfig | None = None
) -> VerifiedInstance | Rejection:
    """Verify one instance; rejections are data, not faults."""
    cfg = cfg or HarnessConfig()
    if not check_no_handshake(model, x):
        return Rejection(x.id, RejectionReason.HANDSHAKE)
    selected = frozenset(model.select(x.tokens))
    sr = clearly_relevant_set(model, x, cfg.tau)
    if len(sr) < cfg.min_sr:
        return Rejection(x.id, RejectionReason.NO_SR)
    partition = SelectionPartition(
        sr=sr,
        sdk=selected - sr,
        n=frozenset(range(len(x))) - selected,
    )
    return VerifiedInstance(
        instance=x,
        partition=partition,
        prediction=predict(model, x),
        bias_prediction=encode(model, ()),
    )


@dataclass(frozen=True)
class MeanStd:
    """Mean with population standard deviation."""

    mean: float
    std: float

    @classmethod
    def from_values(cls, values: Sequence[float]) -> "MeanStd":
        if not values:
            return cls(0.0, 0.0)
        m = sum(values) / len(values)
        var = sum((v - m) ** 2 for v in values) / len(values)
        return cls(m, math.sqrt(var))

    def to_dict(self) -> dict:
        return {"mean": self.mean, "std": self.std}


@dataclass(frozen=True)
class PruningStats:
    """Dataset statistics in the shape of the reference report: retained
    count, averaged lengths of the instance / selected / clearly-relevant /
    non-selected parts, and the two pruning percentages."""

    n_total: int
    n_retained: int
    n_handshake: int
    n_no_sr: int
    avg_len: MeanStd
    avg_s: MeanStd
    avg_sr: MeanStd
    avg_n: MeanStd
    pct_handshake_pruned: float
    pct_no_sr_pruned: float

    def to_dict(self) -> dict:
        return {
            "n_total": self.n_total,
            "n_retained": self.n_retained,
            "n_handshake": self.n_handshake,
            "n_no_sr": self.n_no_sr,
            "avg_len": self.avg_len.to_dict(),
            "avg_s": self.avg_s.to_dict(),
            "avg_sr": self.avg_sr.to_dict(),
            "avg_n": self.avg_n.to_dict(),
            "pct_handshake_pruned": self.pct_handshake_pruned,
            "pct_no_sr_pruned": self.pct_no_sr_pruned,
        }


def verify_corpus(
    model: TargetModel, corpus: Sequence[Instance], cfg: HarnessConfig | None = None
) -> tuple[list[VerifiedInstance], list[Rejection], PruningStats]:
    """Verify every instance and aggregate pruning statistics.

    The handshake percentage is over all instances; the no-clearly-relevant
    percentage is over the non-handshake ones. Percentages are rounded to
    two decimals; averages are over retained instances only.
    """
    corpus = list(corpus)
    if not corpus:
        raise ValueError("corpus is empty")
    verified: list[VerifiedInstance] = []
    rejections: list[Rejection] = []
    for x in corpus:
        out = verify_instance(model, x, cfg)
        if isinstance(out, Rejection):
            rejections.append(out)
        else:
            verified.append(out)
    n_total = len(corpus)
    n_handshake = sum(1 for r in rejections if r.reason is RejectionReason.HANDSHAKE)
    n_no_sr = sum(1 for r in rejections if r.reason is RejectionReason.NO_SR)
    non_handshake = n_total - n_handshake
    stats = PruningStats(
        n_total=n_total,
        n_retained=len(verified),
        n_handshake=n_handshake,
        n_no_sr=n_no_sr,
        avg_len=MeanStd.from_values([float(len(v.instance)) for v in verified]),
        avg_s=MeanStd.from_values([float(len(v.partition.selected)) for v in verified]),
        avg_sr=MeanStd.from_values([float(len(v.partition.sr)) for v in verified]),
        avg_n=MeanStd.from_values([float(len(v.partition.n)) for v in verified]),
        pct_handshake_pruned=round(100.0 * n_handshake / n_total, 2),
        pct_no_sr_pruned=round(100.0 * n_no_sr / non_handshake, 2) if non_handshake else 0.0,
    )
    return verified, rejections, stats


# --- verified-dataset files --------------------------------------------------
# One JSON record per line: {"id", "tokens", "sr", "sdk", "n", "prediction",
# "bias"}; positions are sorted integer arrays. Rejection log records are
# {"id", "reason"}.


def _verified_to_record(v: VerifiedInstance) -> dict:
    rec = {
        "id": v.instance.id,
        "tokens": list(v.instance.tokens),
        "sr": sorted(v.partition.sr),
        "sdk": sorted(v.partition.sdk),
        "n": sorted(v.partition.n),
        "prediction": v.prediction,
        "bias": v.bias_prediction,
    }
    if v.instance.gold_rating is not None:
        rec["gold_rating"] = v.instance.gold_rating
    return rec


def _verified_from_record(rec: dict) -> VerifiedInstance:
    instance = Instance(
        id=rec["id"],
        tokens=tuple(rec["tokens"]),
        gold_rating=rec.get("gold_rating"),
    )
    partition = SelectionPartition(
        sr=frozenset(rec["sr"]), sdk=frozenset(rec["sdk"]), n=frozenset(rec["n"])
    )
    return VerifiedInstance(
        instance=instance,
        partition=partition,
        prediction=float(rec["prediction"]),
        bias_prediction=float(rec["bias"]),
    )


def write_verified_dataset(verified: Iterable[VerifiedInstance], path: str | Path) -> None:
    lines = [json.dumps(_verified_to_record(v), sort_keys=True) for v in verified]
    Path(path).write_text("".join(line + "\n" for line in lines))


def load_verified_dataset(path: str | Path) -> list[VerifiedInstance]:
    out = []
    for line in Path(path).read_text().splitlines():
        if line.strip():
            out.append(_verified_from_record(json.loads(line)))
    return out


def write_rejections(rejections: Iterable[Rejection], path: str | Path) -> None:
    lines = [
        json.dumps({"id": r.instance_id, "reason": r.reason.value}, sort_keys=True)
        for r in rejections
    ]
    Path(path).write_text("".join(line + "\n" for line in lines))


def load_rejections(path: str | Path) -> list[Rejection]:
    out = []
    for line in Path(path).read_text().splitlines():
        if line.strip():
            rec = json.loads(line)
            out.append(Rejection(rec["id"], RejectionReason(rec["reason"])))
    return out
