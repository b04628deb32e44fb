"""Deterministic select-then-predict target models.

A target model is a generator/encoder pair: the generator hard-selects a
subset of token positions, the encoder scores the selected subsequence
alone, and the model's prediction is the composition of the two. Both
families here are plain immutable data, loadable from JSON specs, so the
verification harness can treat every prediction as re-derivable.

Masking semantics throughout are *deletion*: a masked prediction is the
prediction on the instance with the non-kept tokens removed and the
sequence closed up. Deleting a token between two others can therefore
create a new contiguous pattern match; this is intended behavior.
"""
from __future__ import annotations

import json
from abc import ABC, abstractmethod
from dataclasses import dataclass
from pathlib import Path
from typing import ClassVar, Iterable, Mapping, Sequence

__all__ = [
    "Instance",
    "LexiconModel",
    "Rule",
    "RuleModel",
    "Selection",
    "TargetModel",
    "encode",
    "generate",
    "load_model",
    "model_from_dict",
    "model_to_dict",
    "predict",
    "predict_masked",
    "restrict",
    "save_model",
    "validate_token",
]


def validate_token(text: str) -> str:
    """Enforce the token invariant: non-empty, lowercase, no whitespace."""
    if not text:
        raise ValueError("token must be non-empty")
    if any(ch.isspace() for ch in text):
        raise ValueError(f"token {text!r} contains whitespace")
    if text != text.lower():
        raise ValueError(f"token {text!r} is not lowercase")
    return text


@dataclass(frozen=True)
class Instance:
    """A tokenized text with a stable identity.

    Features are token *positions*, not strings: duplicate tokens are
    distinct features.
    """

    id: str
    tokens: tuple[str, ...]
    gold_rating: float | None = None

    def __post_init__(self) -> None:
        if not self.id:
            raise ValueError("instance id must be non-empty")
        object.__setattr__(self, "tokens", tuple(self.tokens))
        if not self.tokens:
            raise ValueError(f"instance {self.id!r} has no tokens")
        for tok in self.tokens:
            validate_token(tok)
        if self.gold_rating is not None and not 0.0 <= self.gold_rating <= 1.0:
            raise ValueError(f"gold_rating {self.gold_rating} outside [0, 1]")

    def __len__(self) -> int:
        return len(self.tokens)

    @classmethod
    def from_text(cls, id: str, text: str, gold_rating: float | None = None) -> "Instance":
        """Lowercase and whitespace-tokenize raw text (the ingestion rule)."""
        return cls(id=id, tokens=tuple(text.lower().split()), gold_rating=gold_rating)


@dataclass(frozen=True)
class Selection:
    """A sorted set of positions into an instance."""

    positions: tuple[int, ...]

    def __post_init__(self) -> None:
        pos = tuple(sorted(set(int(p) for p in self.positions)))
        if any(p < 0 for p in pos):
            raise ValueError("selection positions must be non-negative")
        object.__setattr__(self, "positions", pos)

    def __len__(self) -> int:
        return len(self.positions)

    def __iter__(self):
        return iter(self.positions)

    def __contains__(self, position: int) -> bool:
        return position in set(self.positions)

    def restrict(self, tokens: Sequence[str]) -> tuple[str, ...]:
        """The subsequence of `tokens` at the selected positions, order kept."""
        return restrict(tokens, self.positions)


def restrict(tokens: Sequence[str], positions: Iterable[int]) -> tuple[str, ...]:
    """Subsequence of `tokens` at `positions`, original order preserved."""
    n = len(tokens)
    pos = sorted(set(positions))
    if pos and (pos[0] < 0 or pos[-1] >= n):
        raise ValueError(f"positions {pos} out of range for length {n}")
    return tuple(tokens[p] for p in pos)


class TargetModel(ABC):
    """A deterministic generator/encoder pair over token sequences.

    Models are immutable after construction; `select` and `score` are pure
    functions, safe for concurrent use.
    """

    family: ClassVar[str]
    bias: float

    @abstractmethod
    def select(self, tokens: Sequence[str]) -> tuple[int, ...]:
        """Generator: positions of the tokens passed on to the encoder."""

    @abstractmethod
    def score(self, tokens: Sequence[str]) -> float:
        """Encoder: score a (possibly empty) token sequence in [0, 1]."""


def _find_pattern(tokens: Sequence[str], pattern: Sequence[str]) -> int | None:
    """Leftmost start of `pattern` as a contiguous subsequence, else None."""
    m = len(pattern)
    last = len(tokens) - m
    if last < 0:
        return None
    first = pattern[0]
    for start in range(last + 1):
        if tokens[start] != first:
            continue
        hit = True
        for k in range(1, m):
            if tokens[start + k] != pattern[k]:
                hit = False
                break
        if hit:
            return start
    return None


@dataclass(frozen=True)
class Rule:
    """One clause of an ordered if-chain.

    `pattern` is matched as a contiguous subsequence of the input;
    `select_offsets` are the pattern positions whose matched tokens the
    generator selects. A rule selecting all pattern positions cannot
    create a handshake by itself.
    """

    pattern: tuple[str, ...]
    select_offsets: tuple[int, ...]
    score: float

    def __post_init__(self) -> None:
        object.__setattr__(self, "pattern", tuple(self.pattern))
        if not self.pattern:
            raise ValueError("rule pattern must be non-empty")
        for tok in self.pattern:
            validate_token(tok)
        offsets = tuple(sorted(set(int(o) for o in self.select_offsets)))
        if not offsets:
            raise ValueError("rule must select at least one pattern position")
        if offsets[0] < 0 or offsets[-1] >= len(self.pattern):
            raise ValueError(f"select_offsets {offsets} outside pattern of length {len(self.pattern)}")
        object.__setattr__(self, "select_offsets", offsets)
        if not 0.0 <= self.score <= 1.0:
            raise ValueError(f"rule score {self.score} outside [0, 1]")


@dataclass(frozen=True)
class RuleModel(TargetModel):
    """Ordered if-chain model: the first rule whose pattern occurs wins.

    The generator selects the `select_offsets` of the *leftmost* occurrence
    of the first matching rule; it selects nothing when no rule fires. The
    encoder re-runs the chain on the sequence it is given and falls back to
    the bias score.
    """

    rules: tuple[Rule, ...]
    bias: float = 0.0

    family: ClassVar[str] = "rule"

    def __post_init__(self) -> None:
        object.__setattr__(self, "rules", tuple(self.rules))
        if not 0.0 <= self.bias <= 1.0:
            raise ValueError(f"bias {self.bias} outside [0, 1]")

    def select(self, tokens: Sequence[str]) -> tuple[int, ...]:
        for rule in self.rules:
            start = _find_pattern(tokens, rule.pattern)
            if start is not None:
                return tuple(start + off for off in rule.select_offsets)
        return ()

    def score(self, tokens: Sequence[str]) -> float:
        for rule in self.rules:
            if _find_pattern(tokens, rule.pattern) is not None:
                return rule.score
        return self.bias


@dataclass(frozen=True)
class LexiconModel(TargetModel):
    """Additive lexicon model, handshake-free by construction.

    The generator keeps exactly the positions whose token weight has
    magnitude >= theta, so re-selecting from an already-selected
    subsequence reselects everything. The encoder adds the weights of the
    tokens it is given to the bias, clamped to [0, 1] when `clamp` is set.
    """

    weights: Mapping[str, float]
    bias: float = 0.5
    theta: float = 0.2
    clamp: bool = True

    family: ClassVar[str] = "lexicon"

    def __post_init__(self) -> None:
        object.__setattr__(self, "weights", dict(self.weights))
        for tok, w in self.weights.items():
            validate_token(tok)
            if w != w or w in (float("inf"), float("-inf")):
                raise ValueError(f"weight for {tok!r} is not finite")
        if not 0.0 <= self.bias <= 1.0:
            raise ValueError(f"bias {self.bias} outside [0, 1]")
        if self.theta < 0.0:
            raise ValueError(f"theta {self.theta} must be non-negative")

    def select(self, tokens: Sequence[str]) -> tuple[int, ...]:
        w = self.weights
        theta = self.theta
        return tuple(i for i, tok in enumerate(tokens) if abs(w.get(tok, 0.0)) >= theta)

    def score(self, tokens: Sequence[str]) -> float:
        w = self.weights
        total = self.bias + sum(w.get(tok, 0.0) for tok in tokens)
        if self.clamp:
            total = min(1.0, max(0.0, total))
        return total


def _predict_tokens(model: TargetModel, tokens: Sequence[str]) -> float:
    selected = model.select(tokens)
    return model.score(tuple(tokens[p] for p in selected))


def generate(model: TargetModel, x: Instance) -> Selection:
    """Run the generator on an instance."""
    return Selection(model.select(x.tokens))


def encode(model: TargetModel, tokens: Sequence[str]) -> float:
    """Run the encoder on a restricted token sequence; encode(()) is the bias."""
    return model.score(tokens)


def predict(model: TargetModel, x: Instance) -> float:
    """encoder(generator(x)): the full select-then-predict composition."""
    return _predict_tokens(model, x.tokens)


def predict_masked(model: TargetModel, x: Instance, keep: Iterable[int]) -> float:
    """Prediction on the instance with every position not in `keep` deleted.

    Equivalent to `predict` on the kept subsequence; `keep` = all positions
    reproduces `predict(model, x)` exactly.
    """
    kept = restrict(x.tokens, keep)
    return _predict_tokens(model, kept)


# --- model-spec files ------------------------------------------------------
# Record layout (field names are normative):
#   {"family": "rule", "bias": b, "rules": [{"pattern": [...],
#       "select_offsets": [...], "score": s}, ...]}
#   {"family": "lexicon", "bias": b, "weights": {token: w}, "theta": t,
#       "clamp": true|false}


def model_to_dict(model: TargetModel) -> dict:
    if isinstance(model, RuleModel):
        return {
            "family": "rule",
            "bias": model.bias,
            "rules": [
                {
                    "pattern": list(rule.pattern),
                    "select_offsets": list(rule.select_offsets),
                    "score": rule.score,
                }
                for rule in model.rules
            ],
        }
    if isinstance(model, LexiconModel):
        return {
            "family": "lexicon",
            "bias": model.bias,
            "weights": dict(model.weights),
            "theta": model.theta,
            "clamp": model.clamp,
        }
    raise TypeError(f"cannot serialize model of type {type(model).__name__}")


def model_from_dict(spec: Mapping) -> TargetModel:
    try:
        family = spec["family"]
    except KeyError:
        raise ValueError("model spec is missing the 'family' field") from None
    if family == "rule":
        if "rules" not in spec:
            raise ValueError("rule model spec is missing the 'rules' field")
        rules = tuple(
            Rule(
                pattern=tuple(r["pattern"]),
                select_offsets=tuple(r["select_offsets"]),
                score=float(r["score"]),
            )
            for r in spec["rules"]
        )
        return RuleModel(rules=rules, bias=float(spec.get("bias", 0.0)))
    if family == "lexicon":
        if "weights" not in spec:
            raise ValueError("lexicon model spec is missing the 'weights' field")
        return LexiconModel(
            weights={str(k): float(v) for k, v in spec["weights"].items()},
            bias=float(spec.get("bias", 0.5)),
            theta=float(spec.get("theta", 0.2)),
            clamp=bool(spec.get("clamp", True)),
        )
    raise ValueError(f"unknown model family {family!r}")


def load_model(path: str | Path) -> TargetModel:
    return model_from_dict(json.loads(Path(path).read_text()))


def save_model(model: TargetModel, path: str | Path) -> None:
    Path(path).write_text(json.dumps(model_to_dict(model), indent=2, sort_keys=True) + "\n")
