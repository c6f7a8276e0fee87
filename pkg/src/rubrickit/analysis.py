"""Corpus statistics and the multi-objective rollout reward.

Correlations are computed from their definitions (with average ranks
for ties) rather than pulled from a stats package: the toolkit then
has no heavyweight numeric dependency, and the test suite checks the
implementations against an independent library oracle.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

from .core import RubricSet, parse_rubric_json, strip_reasoning
from .errors import DegenerateInput, IdMismatch, RubricParseError
from .setmetrics import pairwise_matrix, rubric_prf
from .textsim import SimilarityFn, tokenize


def _mean(values) -> float:
    return math.fsum(values) / len(values)


def pearson(xs: list[float], ys: list[float]) -> float:
    """Product-moment correlation; constant or too-short input is
    degenerate rather than silently 0 or NaN."""
    if len(xs) != len(ys):
        raise ValueError(f"series lengths differ: {len(xs)} vs {len(ys)}")
    if len(xs) < 2:
        raise DegenerateInput("correlation needs at least 2 points")
    mean_x = _mean(xs)
    mean_y = _mean(ys)
    dx = [x - mean_x for x in xs]
    dy = [y - mean_y for y in ys]
    var_x = math.fsum(d * d for d in dx)
    var_y = math.fsum(d * d for d in dy)
    if var_x == 0.0 or var_y == 0.0:
        raise DegenerateInput("constant series has undefined correlation")
    r = math.fsum(a * b for a, b in zip(dx, dy)) / math.sqrt(var_x * var_y)
    return max(-1.0, min(1.0, r))


def average_ranks(values: list[float]) -> list[float]:
    """1-based ranks; tied values share the mean of their rank span."""
    order = sorted(range(len(values)), key=lambda i: values[i])
    ranks = [0.0] * len(values)
    i = 0
    while i < len(order):
        j = i
        while j + 1 < len(order) and values[order[j + 1]] == values[order[i]]:
            j += 1
        mean_rank = (i + j) / 2 + 1
        for position in range(i, j + 1):
            ranks[order[position]] = mean_rank
        i = j + 1
    return ranks


def spearman(xs: list[float], ys: list[float]) -> float:
    return pearson(average_ranks(xs), average_ranks(ys))


@dataclass(frozen=True)
class PreferenceOutcome:
    wins: int
    ties: int
    losses: int
    accuracy: float
    tie_policy: str


def preference_accuracy(
    good_scores: dict[str, float],
    bad_scores: dict[str, float],
    tie_policy: str = "half",
    tie_eps: float = 1e-12,
) -> PreferenceOutcome:
    """How often the good response outscores the bad one.

    Tie handling: half counts ties as 0.5 wins, drop removes them from
    the denominator (0.5 when nothing remains), loss counts them as 0.
    """
    if tie_policy not in ("half", "drop", "loss"):
        raise ValueError(f"unknown tie policy {tie_policy!r}")
    if set(good_scores) != set(bad_scores):
        only_good = sorted(set(good_scores) - set(bad_scores))[:3]
        only_bad = sorted(set(bad_scores) - set(good_scores))[:3]
        raise IdMismatch(
            f"score maps disagree on ids (good-only {only_good}, bad-only {only_bad})"
        )
    wins = ties = losses = 0
    for example_id, good in good_scores.items():
        bad = bad_scores[example_id]
        if abs(good - bad) <= tie_eps:
            ties += 1
        elif good > bad:
            wins += 1
        else:
            losses += 1
    total = wins + ties + losses
    if tie_policy == "half":
        accuracy = (wins + 0.5 * ties) / total if total else 0.5
    elif tie_policy == "drop":
        kept = wins + losses
        accuracy = wins / kept if kept else 0.5
    else:
        accuracy = wins / total if total else 0.5
    return PreferenceOutcome(wins, ties, losses, accuracy, tie_policy)


@dataclass(frozen=True)
class RewardWeights:
    w_format: float = 1.0
    w_similarity: float = 5.0
    w_diversity: float = 2.0
    w_length: float = 1.0

    def __post_init__(self):
        weights = (self.w_format, self.w_similarity, self.w_diversity, self.w_length)
        if any(w < 0 for w in weights):
            raise ValueError("reward weights must be non-negative")
        if all(w == 0 for w in weights):
            raise ValueError("at least one reward weight must be positive")


@dataclass(frozen=True)
class RewardBreakdown:
    r_format: float
    r_similarity: float
    r_diversity: float
    r_length: float
    total: float
    count_delta: float


_EPS = 1e-9


def _population_stats(values: list[float]) -> tuple[float, float]:
    if not values:
        return 0.0, 0.0
    mean = _mean(values)
    variance = math.fsum((v - mean) ** 2 for v in values) / len(values)
    return mean, variance


def _length_series(rubrics: RubricSet, length_stat: str) -> list[float]:
    if length_stat == "tokens":
        return [float(len(tokenize(c.text))) for c in rubrics]
    if length_stat == "points":
        return [float(c.points) for c in rubrics]
    raise ValueError(f"unknown length_stat {length_stat!r}")


def grpo_reward(
    raw_generation: str,
    gold: RubricSet,
    weights: RewardWeights | None = None,
    sim: SimilarityFn | None = None,
    length_stat: str = "tokens",
    diversity_tau: float | None = None,
) -> RewardBreakdown:
    """Score one rollout; total by construction, never raises on input.

    r_format gates everything: a rollout that fails the strict schema
    (after removing reasoning blocks) earns an all-zero breakdown.
    r_similarity is the Rubric-F1 against gold; r_diversity is one
    minus the mean pairwise similarity among generated criteria (or,
    with diversity_tau set, one minus the fraction of pairs above the
    threshold); r_length compares per-criterion length mean/variance
    against the gold rubrics.  The count deviation |n-m|/max(m,1) is
    reported alongside but kept out of the total.
    """
    weights = weights or RewardWeights()
    sim = sim or SimilarityFn("rouge1_f")
    try:
        gen = parse_rubric_json(strip_reasoning(raw_generation), mode="strict")
    except RubricParseError:
        return RewardBreakdown(0.0, 0.0, 0.0, 0.0, 0.0, count_delta=1.0)

    r_similarity = rubric_prf(pairwise_matrix(gold, gen, sim)).f1

    texts = gen.texts()
    n = len(texts)
    if n < 2:
        r_diversity = 1.0
    else:
        pair_scores = [
            sim.pair_score(texts[j], texts[k])
            for j in range(n)
            for k in range(j + 1, n)
        ]
        if diversity_tau is None:
            r_diversity = 1.0 - _mean(pair_scores)
        else:
            r_diversity = 1.0 - sum(
                1 for s in pair_scores if s > diversity_tau
            ) / len(pair_scores)

    mean_gen, var_gen = _population_stats(_length_series(gen, length_stat))
    mean_ref, var_ref = _population_stats(_length_series(gold, length_stat))
    deviation = (
        abs(mean_gen - mean_ref) / max(mean_ref, _EPS)
        + abs(var_gen - var_ref) / max(var_ref, _EPS)
    ) / 2.0
    r_length = 1.0 - min(1.0, max(0.0, deviation))

    total = math.fsum(
        (
            weights.w_format * 1.0,
            weights.w_similarity * r_similarity,
            weights.w_diversity * r_diversity,
            weights.w_length * r_length,
        )
    )
    count_delta = abs(n - len(gold)) / max(len(gold), 1)
    return RewardBreakdown(
        r_format=1.0,
        r_similarity=r_similarity,
        r_diversity=r_diversity,
        r_length=r_length,
        total=total,
        count_delta=count_delta,
    )
