"""Shared fixtures: synthetic keyword datasets and the keyword mock backend.

The synthetic corpus convention: each query plants distinct `kw...`
marker tokens, gold rubrics are exactly "response mentions <kw>" (1
point each, query order), the "good" completion contains every marker,
"bad" contains none, and "partial" contains a varying prefix of them.
Under KeywordMockClient this makes generated rubrics textually
identical to gold and grading outcomes fully predictable, so entire
pipelines run deterministically with zero network.
"""

from __future__ import annotations

import re

import pytest

from rubrickit.core import (
    ConversationQuery,
    Criterion,
    DatasetExample,
    Message,
    RubricSet,
)
from rubrickit.dataset import write_dataset
from rubrickit.mocks import KeywordMockClient

KEYWORD_NAMES = [
    "alpha", "bravo", "charlie", "delta", "echo", "foxtrot", "golf",
    "hotel", "india", "juliet", "kilo", "lima", "mike", "november",
    "oscar", "papa", "quebec", "romeo", "sierra", "tango", "uniform",
    "victor", "whiskey", "xray", "yankee", "zulu",
]


def keywords_for(index: int) -> list[str]:
    count = 2 + index % 4
    return [f"kw{KEYWORD_NAMES[(index * 3 + j) % len(KEYWORD_NAMES)]}" for j in range(count)]


def make_kw_example(index: int, split: str = "train") -> DatasetExample:
    kws = keywords_for(index)
    query = ConversationQuery(
        id=f"ex{index:03d}",
        messages=(
            Message("user", f"I keep hearing about {' and '.join(kws)} and wonder what to do next."),
        ),
    )
    gold = RubricSet(tuple(Criterion(f"response mentions {kw}", 1) for kw in kws))
    planted = index % (len(kws) + 1)
    completions = {
        "good": f"You should look into {', '.join(kws)} with your care team.",
        "bad": "Please discuss your situation with a local professional soon.",
        "partial": (
            f"Start with {', '.join(kws[:planted])} for now."
            if planted
            else "Start with rest and hydration for now."
        ),
    }
    return DatasetExample(query=query, gold_rubrics=gold, completions=completions, split=split)


def build_kw_examples(n: int = 20) -> list[DatasetExample]:
    return [make_kw_example(i) for i in range(n)]


def axis_rubrics(size: int = 5) -> RubricSet:
    return RubricSet(
        tuple(Criterion(f"response addresses quality axis {i}", 1) for i in range(size))
    )


def partial_truth(example: DatasetExample) -> float:
    """Expected keyword-mock score of the partial completion."""
    kws = re.findall(r"kw\w*", example.completions["partial"])
    return len(set(kws)) / len(example.gold_rubrics)


@pytest.fixture
def kw_client() -> KeywordMockClient:
    return KeywordMockClient()


@pytest.fixture
def kw_examples() -> list[DatasetExample]:
    return build_kw_examples(20)


@pytest.fixture
def kw_dataset_file(tmp_path, kw_examples):
    path = tmp_path / "dataset.jsonl"
    write_dataset(path, kw_examples)
    return path


# ----------------------------------------------------- acceptance summary

ACCEPTANCE_TITLES = {
    1: "metric identity: gen == gold gives F1 1.0 and zero failure rates",
    2: "permutation invariance: set metrics bit-identical under shuffles",
    3: "oracle equivalence: frozen golden corpus and exact-kind duality",
    4: "threshold monotonicity across the tau sweep",
    5: "hand-case ledger: PRF and grading aggregation constants",
    6: "reward contract: gating, 9.0 maximum, linearity, bounds",
    7: "retrieval correctness against brute-force cosine sort",
    8: "end-to-end mock pipeline: preference, correlation, warm cache",
    9: "granularity judge-call budget per example",
    10: "live-reproduction mode documented with attributable provenance",
}

_CRITERION_RE = re.compile(r"test_acceptance\.py::test_criterion_(\d+)")


def pytest_terminal_summary(terminalreporter, exitstatus, config):
    outcomes: dict[int, set[str]] = {}
    for status in ("passed", "failed", "error", "skipped"):
        for report in terminalreporter.stats.get(status, []):
            match = _CRITERION_RE.search(report.nodeid)
            if match and getattr(report, "when", "call") in ("call", "setup"):
                outcomes.setdefault(int(match.group(1)), set()).add(status)
    if not outcomes:
        return
    terminalreporter.write_sep("=", "acceptance criteria")
    for number in sorted(ACCEPTANCE_TITLES):
        states = outcomes.get(number)
        if states is None:
            verdict = "MISSING"
        elif states & {"failed", "error"}:
            verdict = "FAIL"
        elif "passed" in states:
            verdict = "PASS"
        else:
            verdict = "SKIP"
        terminalreporter.write_line(
            f"[{verdict}] criterion {number}: {ACCEPTANCE_TITLES[number]}"
        )
