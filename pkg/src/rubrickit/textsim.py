"""Pairwise criterion similarity functions, all mapping into [0,1].

Lexical kinds (exact, bleu, rouge1_f, rouge2_f, rougeL_f) are pure and
deterministic.  The llm_judge kind delegates to a backend with a frozen
prompt and is therefore excluded from the identity guarantee.
"""

from __future__ import annotations

import math
import re
import string
from collections import Counter
from dataclasses import dataclass

from .errors import UnparseableJudgment
from .prompts import render_template

SIMILARITY_KINDS = ("exact", "bleu", "rouge1_f", "rouge2_f", "rougeL_f", "llm_judge")

_INT_RE = re.compile(r"-?\d+")


def tokenize(text: str) -> tuple[str, ...]:
    """Lowercase, split on whitespace, strip edge ASCII punctuation."""
    tokens = []
    for chunk in text.lower().split():
        word = chunk.strip(string.punctuation)
        if word:
            tokens.append(word)
    return tuple(tokens)


def _ngram_counts(tokens, n: int) -> Counter:
    return Counter(tuple(tokens[i : i + n]) for i in range(len(tokens) - n + 1))


def bleu(candidate, reference) -> float:
    """Sentence-level BLEU-4, directional (candidate scored against
    reference).  Orders 2..4 get add-one smoothing on numerator and
    denominator; order 1 is unsmoothed, so disjoint vocabulary gives 0.
    Brevity penalty exp(1 - r/c) applies when the candidate is shorter.
    """
    c = len(candidate)
    if c == 0:
        return 0.0
    log_precisions = 0.0
    for n in range(1, 5):
        cand = _ngram_counts(candidate, n)
        ref = _ngram_counts(reference, n)
        overlap = sum((cand & ref).values())
        total = sum(cand.values())
        if n == 1:
            if overlap == 0:
                return 0.0
            p = overlap / total
        else:
            p = (overlap + 1) / (total + 1)
        log_precisions += math.log(p)
    score = math.exp(log_precisions / 4.0)
    r = len(reference)
    if c < r:
        score *= math.exp(1.0 - r / c)
    return score


@dataclass(frozen=True)
class RougeScore:
    precision: float
    recall: float
    f1: float


def _prf(overlap: float, cand_total: float, ref_total: float) -> RougeScore:
    if cand_total == 0 or ref_total == 0:
        return RougeScore(0.0, 0.0, 0.0)
    precision = overlap / cand_total
    recall = overlap / ref_total
    f1 = 0.0 if precision + recall == 0 else 2 * precision * recall / (precision + recall)
    return RougeScore(precision, recall, f1)


def rouge_n(candidate, reference, n: int) -> RougeScore:
    """Clipped n-gram overlap; zero on either side lacking n-grams."""
    cand = _ngram_counts(candidate, n)
    ref = _ngram_counts(reference, n)
    overlap = sum((cand & ref).values())
    return _prf(overlap, sum(cand.values()), sum(ref.values()))


def _lcs_length(a, b) -> int:
    if not a or not b:
        return 0
    prev = [0] * (len(b) + 1)
    for token_a in a:
        row = [0]
        for j, token_b in enumerate(b, start=1):
            if token_a == token_b:
                row.append(prev[j - 1] + 1)
            else:
                row.append(max(prev[j], row[j - 1]))
        prev = row
    return prev[len(b)]


def rouge_l(candidate, reference) -> RougeScore:
    return _prf(_lcs_length(candidate, reference), len(candidate), len(reference))


def first_int_in_range(text: str, lo: int, hi: int) -> int | None:
    """First integer in the text if it falls in [lo, hi], else None."""
    match = _INT_RE.search(text)
    if match is None:
        return None
    value = int(match.group())
    return value if lo <= value <= hi else None


RETRY_NUDGE = "Output ONLY the number."


def llm_judge_similarity(ref_text: str, gen_text: str, client) -> float:
    """0-9 integer judgment normalized to [0,1].

    One retry with a terse reminder appended (the changed request body
    also defeats the response cache, which would otherwise replay the
    unparseable reply verbatim); a second failure raises.
    """
    prompt = render_template(
        "similarity_judge", {"ref_text": ref_text, "gen_text": gen_text}
    )
    messages = [{"role": "user", "content": prompt}]
    reply = client.chat(messages)
    value = first_int_in_range(reply, 0, 9)
    if value is None:
        retry = messages + [
            {"role": "assistant", "content": reply},
            {"role": "user", "content": RETRY_NUDGE},
        ]
        reply = client.chat(retry)
        value = first_int_in_range(reply, 0, 9)
        if value is None:
            raise UnparseableJudgment(
                f"no integer in [0,9] in judge reply after retry: {reply[:200]!r}"
            )
    return value / 9.0


class SimilarityFn:
    """One configured similarity kind with a uniform text-pair surface.

    score(a, b) is directional where the kind is (bleu: a is candidate;
    llm_judge: a fills the reference slot).  pair_score symmetrizes for
    within-set comparisons: bleu takes the max of both orientations,
    llm_judge canonicalizes slot order lexicographically, so both are
    safe for permutation-invariant metrics.
    """

    def __init__(self, kind: str, client=None):
        if kind not in SIMILARITY_KINDS:
            raise ValueError(f"unknown similarity kind {kind!r}")
        if kind == "llm_judge" and client is None:
            raise ValueError("llm_judge similarity requires a client")
        self.kind = kind
        self.client = client

    @property
    def symmetric(self) -> bool:
        return self.kind in ("exact", "rouge1_f", "rouge2_f", "rougeL_f")

    def score(self, a: str, b: str) -> float:
        kind = self.kind
        if kind == "exact":
            return 1.0 if a == b else 0.0
        if kind == "llm_judge":
            return llm_judge_similarity(a, b, self.client)
        ta, tb = tokenize(a), tokenize(b)
        if kind == "bleu":
            return bleu(ta, tb)
        if kind == "rouge1_f":
            return rouge_n(ta, tb, 1).f1
        if kind == "rouge2_f":
            return rouge_n(ta, tb, 2).f1
        return rouge_l(ta, tb).f1

    def pair_score(self, a: str, b: str) -> float:
        if self.kind == "bleu":
            return max(self.score(a, b), self.score(b, a))
        if self.kind == "llm_judge":
            lo, hi = sorted((a, b))
            return self.score(lo, hi)
        return self.score(a, b)
