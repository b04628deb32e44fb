"""Built-in demo models, sentences, and synthetic corpus recipes.

These fixtures drive the `demo` subcommand and double as golden-value
test subjects: small if-chain sentiment scorers (one of which leaks
information through a partial selection and is pruned by the harness)
and an additive review lexicon.
"""
from __future__ import annotations

from .corpus import CorpusGenSpec
from .models import Instance, LexiconModel, Rule, RuleModel

__all__ = [
    "GOOD_NICE_REVIEW",
    "NICE_VERY_GOOD_REVIEW",
    "VERY_GOOD_REVIEW",
    "demo_instances",
    "handshake_free_rule_model",
    "handshake_rule_model",
    "review_lexicon_model",
    "sentiment_rule_model",
    "synthetic_corpus_spec",
]

GOOD_NICE_REVIEW = "the movie was good , it was actually nice"
NICE_VERY_GOOD_REVIEW = "the movie was nice , in fact , it was very good"
VERY_GOOD_REVIEW = "the movie was very good"


def sentiment_rule_model() -> RuleModel:
    """Ordered sentiment if-chain; every rule selects its whole pattern."""
    return RuleModel(
        rules=(
            Rule(pattern=("very", "good"), select_offsets=(0, 1), score=0.9),
            Rule(pattern=("nice",), select_offsets=(0,), score=0.7),
            Rule(pattern=("good",), select_offsets=(0,), score=0.6),
        ),
        bias=0.0,
    )


def handshake_rule_model() -> RuleModel:
    """If-chain whose first two rules select only part of their pattern.

    Selecting "very" alone while scoring the presence of "very good" makes
    the selection carry covert information about non-selected tokens; the
    harness rejects instances hitting those rules.
    """
    return RuleModel(
        rules=(
            Rule(pattern=("very", "good"), select_offsets=(0,), score=1.0),
            Rule(pattern=("not", "good"), select_offsets=(0,), score=0.1),
            Rule(pattern=("good",), select_offsets=(0,), score=0.8),
        ),
        bias=0.5,
    )


def handshake_free_rule_model() -> RuleModel:
    """Same scores as `handshake_rule_model`, but every rule selects fully."""
    return RuleModel(
        rules=(
            Rule(pattern=("very", "good"), select_offsets=(0, 1), score=1.0),
            Rule(pattern=("not", "good"), select_offsets=(0, 1), score=0.1),
            Rule(pattern=("good",), select_offsets=(0,), score=0.8),
        ),
        bias=0.5,
    )


def review_lexicon_model() -> LexiconModel:
    """Additive beer-review lexicon with a selection threshold of 0.2.

    Tokens below the threshold (e.g. "bland", "meh") are never selected,
    so they are guaranteed zero-contribution fillers; clamping lets
    strongly positive stacks saturate, which exercises the
    selected-but-not-clearly-relevant bucket.
    """
    return LexiconModel(
        weights={
            "superb": 0.9,
            "great": 0.8,
            "tasty": 0.45,
            "crisp": 0.3,
            "smooth": 0.25,
            "bland": -0.15,
            "meh": -0.05,
            "watery": -0.25,
            "stale": -0.35,
            "sour": -0.5,
            "awful": -0.7,
        },
        bias=0.5,
        theta=0.2,
        clamp=True,
    )


def demo_instances() -> list[Instance]:
    """The two movie reviews scored by the sentiment if-chain."""
    return [
        Instance.from_text("demo-1", GOOD_NICE_REVIEW),
        Instance.from_text("demo-2", NICE_VERY_GOOD_REVIEW),
    ]


_FILLERS = (
    "the pour settles with a dense head",
    "served in a tulip glass at the bar",
    "picked this up on a rainy tuesday",
    "the label promises more than it delivers",
    "poured slowly from a chilled bottle",
)

# Rule-corpus templates keep the sentiment phrase contiguous in a single
# slot and draw every other token from a vocabulary disjoint from the rule
# patterns, so deleting non-selected tokens can never create a new match.
_RULE_TEMPLATES = (
    "the movie was {PHRASE} overall",
    "honestly the plot felt {PHRASE} to me",
    "we thought it was {PHRASE}",
    "{OPENER} and the ending was {PHRASE} in the end",
    "{OPENER} but somehow it stayed {PHRASE} for two hours despite the wooden acting",
    "the director made something {PHRASE} here",
)

_LEXICON_TEMPLATES = (
    "this beer is {TONE}",
    "a {TONE} lager with a {TONE2} finish",
    "{FILLER} and the taste was {TONE}",
    "{FILLER} while the aroma seemed {TONE} but the body felt {TONE2}",
    "frankly {TONE} stuff",
)


def synthetic_corpus_spec(kind: str, n_instances: int, seed: int) -> CorpusGenSpec:
    """Templated corpus recipes matched to the built-in model families."""
    if kind == "rule":
        return CorpusGenSpec(
            n_instances=n_instances,
            templates=_RULE_TEMPLATES,
            slot_lexicons={
                "PHRASE": (
                    "very good",
                    "nice",
                    "good",
                    "actually nice",
                    "rather dull",
                    "forgettable",
                ),
                "OPENER": ("the cast tried hard", "the script wandered"),
            },
            seed=seed,
        )
    if kind == "lexicon":
        return CorpusGenSpec(
            n_instances=n_instances,
            templates=_LEXICON_TEMPLATES,
            slot_lexicons={
                "TONE": ("superb", "great", "tasty", "crisp", "bland", "watery", "stale", "sour", "awful"),
                "TONE2": ("smooth", "crisp", "meh", "stale", "tasty"),
                "FILLER": _FILLERS,
            },
            rating_noise=0.2,
            seed=seed,
        )
    raise ValueError(f"unknown synthetic corpus kind {kind!r}")
