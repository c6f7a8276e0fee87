"""Set-matching metrics between gold and generated rubric sets.

Every metric consumes a precomputed SimilarityMatrix so that expensive
similarity kinds (llm_judge) are evaluated once per pair.  Aggregation
uses math.fsum, which is exactly rounded and therefore bit-identical
under any permutation of the inputs.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

from .core import RubricSet
from .errors import UndefinedMetric
from .textsim import SimilarityFn


@dataclass(frozen=True)
class SimilarityMatrix:
    """Pairwise scores between m gold and n generated criteria.

    gold_first[i][j] = s(c_i, ĉ_j) feeds recall and Missed@τ;
    gen_first[i][j] = s(ĉ_j, c_i) feeds precision and Hallucinations@τ.
    For symmetric kinds (and llm_judge, which pins the gold criterion to
    the judge's reference slot in both directions) the two layers are
    the same object.
    """

    gold_count: int
    gen_count: int
    gold_first: tuple[tuple[float, ...], ...]
    gen_first: tuple[tuple[float, ...], ...]
    sim_kind: str

    def __post_init__(self):
        for layer in (self.gold_first, self.gen_first):
            if len(layer) != self.gold_count:
                raise ValueError("matrix row count does not match gold set size")
            for row in layer:
                if len(row) != self.gen_count:
                    raise ValueError("matrix column count does not match generated set size")
                for value in row:
                    if not 0.0 <= value <= 1.0:
                        raise ValueError(f"similarity {value} outside [0,1]")


def pairwise_matrix(gold: RubricSet, gen: RubricSet, sim: SimilarityFn) -> SimilarityMatrix:
    gold_texts = gold.texts()
    gen_texts = gen.texts()
    if sim.kind == "bleu":
        gold_first = tuple(
            tuple(sim.score(g, h) for h in gen_texts) for g in gold_texts
        )
        gen_first = tuple(
            tuple(sim.score(h, g) for h in gen_texts) for g in gold_texts
        )
    else:
        # llm_judge included: gold stays in the reference slot either way
        gold_first = tuple(
            tuple(sim.score(g, h) for h in gen_texts) for g in gold_texts
        )
        gen_first = gold_first
    return SimilarityMatrix(
        gold_count=len(gold_texts),
        gen_count=len(gen_texts),
        gold_first=gold_first,
        gen_first=gen_first,
        sim_kind=sim.kind,
    )


@dataclass(frozen=True)
class RubricPRF:
    precision: float
    recall: float
    f1: float


def _column_max(layer, j: int) -> float:
    return max((row[j] for row in layer), default=0.0)


def rubric_prf(matrix: SimilarityMatrix) -> RubricPRF:
    """Macro-averaged best-overlap precision/recall and their harmonic
    mean.  Empty sides fall back to 0 rather than erroring so corpus
    sweeps over parse failures stay total."""
    m, n = matrix.gold_count, matrix.gen_count
    if n == 0:
        precision = 0.0
    else:
        precision = math.fsum(
            _column_max(matrix.gen_first, j) for j in range(n)
        ) / n
    if m == 0:
        recall = 0.0
    else:
        recall = math.fsum(max(row, default=0.0) for row in matrix.gold_first) / m
    if precision + recall == 0:
        f1 = 0.0
    else:
        f1 = 2 * precision * recall / (precision + recall)
    return RubricPRF(precision, recall, f1)


def missed_at(matrix: SimilarityMatrix, tau: float) -> float:
    """Fraction of gold criteria whose best match stays below τ."""
    if matrix.gold_count == 0:
        raise UndefinedMetric("Missed@tau needs at least one gold criterion")
    missed = sum(1 for row in matrix.gold_first if max(row, default=0.0) < tau)
    return missed / matrix.gold_count


def hallucinations_at(matrix: SimilarityMatrix, tau: float) -> float:
    """Fraction of generated criteria whose best match stays below τ."""
    if matrix.gen_count == 0:
        raise UndefinedMetric("Hallucinations@tau needs at least one generated criterion")
    count = sum(
        1
        for j in range(matrix.gen_count)
        if _column_max(matrix.gen_first, j) < tau
    )
    return count / matrix.gen_count


@dataclass(frozen=True)
class RedundancyResult:
    value: float
    defined: bool


def redundancy_at(gen: RubricSet, sim: SimilarityFn, tau: float) -> RedundancyResult:
    """Fraction of unordered generated pairs scoring strictly above τ.

    Pair similarity is symmetrized (see SimilarityFn.pair_score); with
    fewer than two criteria the value is 0 with defined=False.
    """
    texts = gen.texts()
    n = len(texts)
    if n < 2:
        return RedundancyResult(0.0, False)
    above = 0
    total = 0
    for j in range(n):
        for k in range(j + 1, n):
            total += 1
            if sim.pair_score(texts[j], texts[k]) > tau:
                above += 1
    return RedundancyResult(above / total, True)


@dataclass(frozen=True)
class FailureRates:
    """Missed/hallucination/redundancy rates at one τ; None marks a rate
    whose defining set was empty."""

    tau: float
    missed: float | None
    hallucinations: float | None
    redundancy: float
    redundancy_defined: bool


def failure_rates(
    matrix: SimilarityMatrix, gen: RubricSet, sim: SimilarityFn, tau: float
) -> FailureRates:
    try:
        missed = missed_at(matrix, tau)
    except UndefinedMetric:
        missed = None
    try:
        hallucinations = hallucinations_at(matrix, tau)
    except UndefinedMetric:
        hallucinations = None
    redundancy = redundancy_at(gen, sim, tau)
    return FailureRates(
        tau=tau,
        missed=missed,
        hallucinations=hallucinations,
        redundancy=redundancy.value,
        redundancy_defined=redundancy.defined,
    )
