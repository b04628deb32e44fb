"""Synthetic corpus generation and corpus file ingestion.

Corpora come from templated sentences (slots like ``{ADJ}`` filled from
per-slot candidate lists, candidates may be multi-token phrases) or from
files: a line format (``id<TAB>text`` or bare text, lowercased and
whitespace-tokenized at ingestion) and a JSONL record format carrying
pre-tokenized arrays verbatim.
"""
from __future__ import annotations

import json
import re
from dataclasses import dataclass
from pathlib import Path
from typing import Mapping, Sequence

import numpy as np

from .models import Instance

__all__ = [
    "CorpusGenSpec",
    "corpus_gen_spec_from_dict",
    "gen_corpus",
    "load_corpus",
    "write_corpus",
]

_SLOT_RE = re.compile(r"^\{([A-Za-z0-9_]+)\}$")


@dataclass(frozen=True)
class CorpusGenSpec:
    n_instances: int
    templates: tuple[str, ...]
    slot_lexicons: Mapping[str, tuple[str, ...]]
    rating_noise: float | None = None
    seed: int = 0

    def __post_init__(self) -> None:
        object.__setattr__(self, "templates", tuple(self.templates))
        object.__setattr__(
            self, "slot_lexicons", {k: tuple(v) for k, v in self.slot_lexicons.items()}
        )
        if self.n_instances < 1:
            raise ValueError("n_instances must be >= 1")
        if not self.templates:
            raise ValueError("at least one template is required")
        for template in self.templates:
            for slot in _template_slots(template):
                candidates = self.slot_lexicons.get(slot)
                if not candidates:
                    raise ValueError(
                        f"template {template!r} references slot {slot!r} "
                        "with no candidates"
                    )


def _template_slots(template: str) -> list[str]:
    slots = []
    for piece in template.split():
        m = _SLOT_RE.match(piece)
        if m:
            slots.append(m.group(1))
    return slots


def gen_corpus(spec: CorpusGenSpec) -> list[Instance]:
    """Deterministically expand templates into instances with sequential ids."""
    rng = np.random.default_rng(spec.seed)
    instances = []
    for k in range(spec.n_instances):
        template = spec.templates[int(rng.integers(len(spec.templates)))]
        tokens: list[str] = []
        for piece in template.split():
            m = _SLOT_RE.match(piece)
            if m:
                candidates = spec.slot_lexicons[m.group(1)]
                choice = candidates[int(rng.integers(len(candidates)))]
                tokens.extend(choice.lower().split())
            else:
                tokens.append(piece.lower())
        rating = None
        if spec.rating_noise is not None:
            rating = float(
                np.clip(0.5 + rng.uniform(-spec.rating_noise, spec.rating_noise), 0.0, 1.0)
            )
        instances.append(Instance(id=f"gen-{k:05d}", tokens=tuple(tokens), gold_rating=rating))
    return instances


def corpus_gen_spec_from_dict(spec: Mapping) -> CorpusGenSpec:
    return CorpusGenSpec(
        n_instances=int(spec["n_instances"]),
        templates=tuple(spec["templates"]),
        slot_lexicons={str(k): tuple(v) for k, v in spec["slot_lexicons"].items()},
        rating_noise=spec.get("rating_noise"),
        seed=int(spec.get("seed", 0)),
    )


def _check_unique_ids(instances: Sequence[Instance]) -> None:
    seen = set()
    for inst in instances:
        if inst.id in seen:
            raise ValueError(f"duplicate instance id {inst.id!r}")
        seen.add(inst.id)


def load_corpus(path: str | Path) -> list[Instance]:
    """Load a corpus file; `.jsonl`/`.json` means record format, anything
    else is treated as the line format."""
    path = Path(path)
    instances: list[Instance] = []
    if path.suffix in (".jsonl", ".json"):
        for line in path.read_text().splitlines():
            if not line.strip():
                continue
            rec = json.loads(line)
            instances.append(
                Instance(
                    id=str(rec["id"]),
                    tokens=tuple(rec["tokens"]),
                    gold_rating=rec.get("gold_rating"),
                )
            )
    else:
        for i, line in enumerate(path.read_text().splitlines()):
            if not line.strip():
                continue
            if "\t" in line:
                ident, text = line.split("\t", 1)
            else:
                ident, text = f"line-{i:05d}", line
            instances.append(Instance.from_text(ident, text))
    if not instances:
        raise ValueError(f"corpus file {path} contains no instances")
    _check_unique_ids(instances)
    return instances


def write_corpus(instances: Sequence[Instance], path: str | Path) -> None:
    """Write a corpus; format chosen by extension, as in `load_corpus`."""
    path = Path(path)
    _check_unique_ids(instances)
    if path.suffix in (".jsonl", ".json"):
        lines = []
        for inst in instances:
            rec: dict = {"id": inst.id, "tokens": list(inst.tokens)}
            if inst.gold_rating is not None:
                rec["gold_rating"] = inst.gold_rating
            lines.append(json.dumps(rec, sort_keys=True))
    else:
        lines = [f"{inst.id}\t{' '.join(inst.tokens)}" for inst in instances]
    path.write_text("".join(line + "\n" for line in lines))
