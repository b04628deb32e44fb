import pytest

from selexplain.builtin import (
    GOOD_NICE_REVIEW,
    NICE_VERY_GOOD_REVIEW,
    VERY_GOOD_REVIEW,
    handshake_free_rule_model,
    handshake_rule_model,
    review_lexicon_model,
    sentiment_rule_model,
)
from selexplain.models import Instance, RuleModel


@pytest.fixture
def sentiment_model():
    return sentiment_rule_model()


@pytest.fixture
def leaky_model():
    return handshake_rule_model()


@pytest.fixture
def leakfree_model():
    return handshake_free_rule_model()


@pytest.fixture
def lexicon_model():
    return review_lexicon_model()


@pytest.fixture
def review_good_nice():
    return Instance.from_text("x-good-nice", GOOD_NICE_REVIEW)


@pytest.fixture
def review_nice_very_good():
    return Instance.from_text("x-nice-very-good", NICE_VERY_GOOD_REVIEW)


@pytest.fixture
def review_very_good():
    return Instance.from_text("x-very-good", VERY_GOOD_REVIEW)


@pytest.fixture
def constant_model():
    # no rules ever fire, so every input scores the bias
    return RuleModel(rules=(), bias=0.4)
