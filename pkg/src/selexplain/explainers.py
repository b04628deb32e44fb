"""Reference explainers emitting strict total rankings over positions.

Two families are covered: additive attribution (exact Shapley values by
full coalition enumeration, a permutation-sampling estimator, a local
linear surrogate, and single-deletion occlusion) and sufficient-subset
selection (a greedy selector plus a seeded random baseline). Attribution
vectors convert to rankings by weight magnitude, ties broken by position.

All explainers see the target model only through masked predictions with
deletion semantics, and all are deterministic functions of
(model, instance, config including seed).
"""
from __future__ import annotations

import hashlib
import math
from dataclasses import dataclass, replace
from fractions import Fraction
from typing import Iterable, Mapping, Sequence

import numpy as np
from sklearn.linear_model import Ridge

from .models import Instance, TargetModel, _predict_tokens

__all__ = [
    "AttributionVector",
    "CoalitionValues",
    "ExplainerConfig",
    "InstanceTooLongError",
    "Ranking",
    "derive_seed",
    "exact_shapley",
    "greedy_sufficient_subset",
    "lime_rank",
    "occlusion_rank",
    "pad_ranking",
    "random_rank",
    "sampled_shapley",
    "to_ranking",
]


class InstanceTooLongError(ValueError):
    """Exact Shapley was asked for more positions than its enumeration cap."""


@dataclass(frozen=True)
class ExplainerConfig:
    seed: int = 0
    n_samples: int = 2000
    kernel_width: float | None = None  # None: 0.75 * sqrt(n) per instance
    ridge_lambda: float = 1e-3
    exact_shapley_max_n: int = 22
    greedy_epsilon: float = 0.01
    greedy_max_k: int | None = None  # None: instance length
    rank_signed: bool = False  # rank by signed weight instead of magnitude

    def __post_init__(self) -> None:
        if self.n_samples < 1:
            raise ValueError("n_samples must be >= 1")
        if self.exact_shapley_max_n < 1:
            raise ValueError("exact_shapley_max_n must be >= 1")
        if self.kernel_width is not None and self.kernel_width <= 0:
            raise ValueError("kernel_width must be positive")
        if self.ridge_lambda < 0:
            raise ValueError("ridge_lambda must be non-negative")
        if self.greedy_max_k is not None and self.greedy_max_k < 1:
            raise ValueError("greedy_max_k must be >= 1")


@dataclass(frozen=True)
class AttributionVector:
    """One signed, finite weight per position of the instance."""

    weights: tuple[float, ...]

    def __post_init__(self) -> None:
        weights = tuple(float(w) for w in self.weights)
        if not all(math.isfinite(w) for w in weights):
            raise ValueError("attribution weights must be finite")
        object.__setattr__(self, "weights", weights)

    def __len__(self) -> int:
        return len(self.weights)


@dataclass(frozen=True)
class Ranking:
    """Strict total order over an instance's positions, most important first."""

    order: tuple[int, ...]

    def __post_init__(self) -> None:
        order = tuple(int(p) for p in self.order)
        if sorted(order) != list(range(len(order))):
            raise ValueError("ranking must be a permutation of all positions")
        object.__setattr__(self, "order", order)

    def __len__(self) -> int:
        return len(self.order)


def derive_seed(root_seed: int, *labels: object) -> int:
    """Deterministic 64-bit stream seed for (component, instance) splits."""
    digest = hashlib.sha256(
        ":".join([str(root_seed), *(str(l) for l in labels)]).encode()
    ).digest()
    return int.from_bytes(digest[:8], "big")


class CoalitionValues:
    """Memoized coalition -> masked-prediction map for one (model, instance).

    Coalitions are bitmasks over positions (bit i set = position i kept).
    The fill is idempotent, so concurrent readers racing on an entry would
    still observe identical values.
    """

    def __init__(self, model: TargetModel, x: Instance):
        self.model = model
        self.tokens = x.tokens
        self.n = len(x.tokens)
        self.full_mask = (1 << self.n) - 1
        self._values: dict[int, float] = {}

    def value(self, mask: int) -> float:
        cached = self._values.get(mask)
        if cached is not None:
            return cached
        toks = self.tokens
        kept = tuple(toks[i] for i in range(self.n) if mask >> i & 1)
        v = _predict_tokens(self.model, kept)
        self._values[mask] = v
        return v

    def value_of(self, keep: Iterable[int]) -> float:
        mask = 0
        for p in keep:
            mask |= 1 << p
        return self.value(mask)

    def __len__(self) -> int:
        return len(self._values)


def _coalition_values(model, x, values: CoalitionValues | None) -> CoalitionValues:
    if values is None:
        return CoalitionValues(model, x)
    if values.tokens != x.tokens:
        raise ValueError("coalition cache was built for a different instance")
    return values


def exact_shapley(
    model: TargetModel,
    x: Instance,
    cfg: ExplainerConfig | None = None,
    values: CoalitionValues | None = None,
) -> AttributionVector:
    """Exact Shapley values of the masked-prediction coalition game.

    Enumerates all 2^n coalitions once into a dense table, then accumulates
    every feature's weighted marginal contributions with vectorized
    arithmetic. Null players come out as exactly 0.0 because each of their
    marginals is exactly zero. Refuses instances beyond the configured cap
    (2^22 evaluations is the intended ceiling); use `sampled_shapley` above
    that.
    """
    cfg = cfg or ExplainerConfig()
    n = len(x)
    if n > cfg.exact_shapley_max_n:
        raise InstanceTooLongError(
            f"instance {x.id!r} has {n} positions, above the exact cap "
            f"{cfg.exact_shapley_max_n}; use sampled_shapley for long instances"
        )
    cache = values if values is not None else None
    table = np.empty(1 << n, dtype=np.float64)
    if cache is not None and cache.tokens != x.tokens:
        raise ValueError("coalition cache was built for a different instance")
    toks = x.tokens
    for mask in range(1 << n):
        if cache is not None:
            table[mask] = cache.value(mask)
        else:
            kept = tuple(toks[i] for i in range(n) if mask >> i & 1)
            table[mask] = _predict_tokens(model, kept)

    masks = np.arange(1 << n, dtype=np.int64)
    popcount = np.zeros(1 << n, dtype=np.int64)
    for bit in range(n):
        popcount += (masks >> bit) & 1
    # coeff[s] = s! (n-s-1)! / n!, computed exactly then rounded once
    coeff = np.array(
        [
            float(Fraction(math.factorial(s) * math.factorial(n - s - 1), math.factorial(n)))
            for s in range(n)
        ],
        dtype=np.float64,
    )
    weights = []
    for i in range(n):
        bit = 1 << i
        without = masks[(masks & bit) == 0]
        marginals = table[without | bit] - table[without]
        weights.append(float(np.dot(coeff[popcount[without]], marginals)))
    return AttributionVector(tuple(weights))


def _solve_last_term(head_sum: float, target: float) -> float | None:
    """A float w with `head_sum + w == target` under float addition, or None.

    Walks single ulps from the rounded residual. No solution exists when
    `head_sum` carries an exact half-ulp tail relative to the target's
    binade: every candidate sum is then a round-to-even tie and only
    even-mantissa results are reachable.
    """
    cand = target - head_sum
    seen_low = seen_high = False
    for _ in range(64):
        got = head_sum + cand
        if got == target:
            return cand
        if got < target:
            if seen_high:
                return None
            seen_low = True
            cand = math.nextafter(cand, math.inf)
        else:
            if seen_low:
                return None
            seen_high = True
            cand = math.nextafter(cand, -math.inf)
    return None


def _pin_efficiency(weights: list[float], target: float) -> None:
    """Adjust `weights` in place so their position-ordered float sum equals
    `target` exactly.

    Emitting each weight rounds once, which can leave the plain sum an ulp
    off the telescoped total. The last nonzero weight absorbs the defect;
    when round-to-even ties make the target unreachable from the current
    head sum, an earlier nonzero weight is nudged one ulp to break the tie
    pattern. Zero weights (null players) are never touched.
    """
    nonzero = [i for i, w in enumerate(weights) if w != 0.0]
    if not nonzero:
        return
    pin = nonzero[-1]
    for attempt in range(8):
        head = 0.0
        for w in weights[:pin]:
            head += w
        cand = _solve_last_term(head, target)
        if cand is not None:
            weights[pin] = cand
            return
        if len(nonzero) < 2:
            break
        prev = nonzero[-2]
        weights[prev] = math.nextafter(weights[prev], math.inf)
    weights[pin] = target - head  # sub-ulp best effort


def sampled_shapley(
    model: TargetModel,
    x: Instance,
    cfg: ExplainerConfig | None = None,
    values: CoalitionValues | None = None,
) -> AttributionVector:
    """Monte-Carlo Shapley estimate from uniformly random permutations.

    Each permutation contributes one marginal per position at its arrival
    point; per-position totals are reduced with `math.fsum` so each weight
    is rounded only once. The marginals of every permutation telescope to
    f(all) - f(empty), and that identity is preserved through float
    emission: the last position with any nonzero marginal absorbs the
    (sub-ulp) emission rounding, so the weights sum to f(all) - f(empty)
    exactly at any sample count. Null players keep an exact zero.
    """
    cfg = cfg or ExplainerConfig()
    cv = _coalition_values(model, x, values)
    n = len(x)
    rng = np.random.default_rng(cfg.seed)
    marginals: list[list[float]] = [[] for _ in range(n)]
    for _ in range(cfg.n_samples):
        mask = 0
        prev = cv.value(0)
        for pos in rng.permutation(n):
            mask |= 1 << pos
            cur = cv.value(mask)
            marginals[pos].append(cur - prev)
            prev = cur
    totals = [math.fsum(m) for m in marginals]
    weights = [t / cfg.n_samples for t in totals]
    _pin_efficiency(weights, cv.value(cv.full_mask) - cv.value(0))
    return AttributionVector(tuple(weights))


def lime_rank(
    model: TargetModel,
    x: Instance,
    cfg: ExplainerConfig | None = None,
    values: CoalitionValues | None = None,
) -> AttributionVector:
    """Local linear surrogate fit on a deletion neighborhood.

    Per sample, the number of deletions is uniform in 0..n and the deleted
    positions are drawn uniformly without replacement. Scores regress on
    keep-indicators under weighted ridge, with sample weight
    exp(-d^2 / kernel_width^2) where d is the fraction of deleted
    positions. Coefficients are the attributions.
    """
    cfg = cfg or ExplainerConfig()
    cv = _coalition_values(model, x, values)
    n = len(x)
    if n < 1:
        raise ValueError("instance must have at least one position")
    kernel_width = cfg.kernel_width if cfg.kernel_width is not None else 0.75 * math.sqrt(n)
    rng = np.random.default_rng(cfg.seed)
    design = np.ones((cfg.n_samples, n), dtype=np.float64)
    response = np.empty(cfg.n_samples, dtype=np.float64)
    sample_weight = np.empty(cfg.n_samples, dtype=np.float64)
    full = cv.full_mask
    for s in range(cfg.n_samples):
        k = int(rng.integers(0, n + 1))
        mask = full
        if k:
            deleted = rng.choice(n, size=k, replace=False)
            design[s, deleted] = 0.0
            for d in deleted:
                mask &= ~(1 << int(d))
        response[s] = cv.value(mask)
        dist = k / n
        sample_weight[s] = math.exp(-(dist * dist) / (kernel_width * kernel_width))
    surrogate = Ridge(alpha=cfg.ridge_lambda, fit_intercept=True)
    surrogate.fit(design, response, sample_weight=sample_weight)
    return AttributionVector(tuple(float(c) for c in surrogate.coef_))


def occlusion_rank(
    model: TargetModel,
    x: Instance,
    values: CoalitionValues | None = None,
) -> AttributionVector:
    """Single-deletion baseline: |f(x without i) - f(x)| per position."""
    cv = _coalition_values(model, x, values)
    full = cv.full_mask
    base = cv.value(full)
    return AttributionVector(
        tuple(abs(cv.value(full & ~(1 << i)) - base) for i in range(cv.n))
    )


def greedy_sufficient_subset(
    model: TargetModel,
    x: Instance,
    cfg: ExplainerConfig | None = None,
    values: CoalitionValues | None = None,
) -> Ranking:
    """Greedy sufficient-subset explainer.

    Candidates are ordered by single-deletion impact on the full instance
    (ties: lower position first), then added to an initially empty keep-set
    until the kept subsequence reproduces the prediction within
    `greedy_epsilon`, or `greedy_max_k` positions have been taken. The
    ranking is the insertion order followed by the remaining positions in
    ascending order; with a zero gap up front (e.g. a constant model)
    nothing is picked at all.
    """
    cfg = cfg or ExplainerConfig()
    cv = _coalition_values(model, x, values)
    n = cv.n
    full = cv.full_mask
    target = cv.value(full)
    max_k = cfg.greedy_max_k if cfg.greedy_max_k is not None else n
    impact = [abs(cv.value(full & ~(1 << i)) - target) for i in range(n)]
    candidates = sorted(range(n), key=lambda i: (-impact[i], i))
    picked: list[int] = []
    mask = 0
    for i in candidates:
        if abs(cv.value(mask) - target) <= cfg.greedy_epsilon:
            break
        if len(picked) >= max_k:
            break
        picked.append(i)
        mask |= 1 << i
    rest = sorted(set(range(n)) - set(picked))
    return Ranking(tuple(picked + rest))


def random_rank(x: Instance, cfg: ExplainerConfig | None = None) -> Ranking:
    """Uniformly random permutation, deterministic given the seed."""
    cfg = cfg or ExplainerConfig()
    rng = np.random.default_rng(cfg.seed)
    return Ranking(tuple(int(p) for p in rng.permutation(len(x))))


def to_ranking(attribution: AttributionVector, signed: bool = False) -> Ranking:
    """Positions by weight magnitude descending, ties by ascending position.

    `signed=True` ranks by the signed weight instead; the magnitude rule is
    the default reading for importance.
    """
    w = attribution.weights
    if signed:
        key = lambda i: (-w[i], i)
    else:
        key = lambda i: (-abs(w[i]), i)
    return Ranking(tuple(sorted(range(len(w)), key=key)))


def pad_ranking(partial: Sequence[int], n: int) -> tuple[Ranking, bool]:
    """Extend a partial (top-K) order to a total ranking.

    Missing positions are appended in ascending order; the flag reports
    whether padding was needed, so it can be carried into reports.
    """
    seen = list(dict.fromkeys(int(p) for p in partial))
    if any(p < 0 or p >= n for p in seen):
        raise ValueError("partial ranking references positions outside the instance")
    missing = [p for p in range(n) if p not in set(seen)]
    return Ranking(tuple(seen + missing)), bool(missing)
