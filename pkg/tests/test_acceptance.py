"""Acceptance gate: one test per shipping criterion.

Each test is numbered; the conftest terminal summary prints a one-line
verdict per criterion after every run.  Tolerances here are pinned, not
tuned: exact equality where the arithmetic is closed over floats (fsum
of identical multisets, integer ratios), 1e-9 against the frozen golden
corpus, 1e-12 for re-derived constants.
"""

import json
import math
import os
import random
import time

import pytest
import yaml

from conftest import axis_rubrics, build_kw_examples, partial_truth
from oracles import oracle_cosine, oracle_top_k
from rubrickit import assets, retrieval
from rubrickit.analysis import RewardWeights, grpo_reward
from rubrickit.cli import main
from rubrickit.core import (
    ConversationQuery,
    Criterion,
    Message,
    RubricSet,
    serialize_rubric_set,
)
from rubrickit.dataset import write_dataset
from rubrickit.judging import grade_response, run_granularity_suite
from rubrickit.mocks import KeywordMockClient
from rubrickit.retrieval import EmbeddingIndex, top_k
from rubrickit.setmetrics import failure_rates, pairwise_matrix, rubric_prf
from rubrickit.textsim import SimilarityFn, bleu, rouge_l, rouge_n, tokenize

WORDS = (
    "monitor blood pressure glucose daily review medication dosage with clinician "
    "advise rest hydration fluids urgent referral imaging order chest scan assess "
    "breathing rate check temperature document allergy history explain warning "
    "signs schedule follow visit screen mental health discuss diet exercise plan"
).split()


def random_set(rng: random.Random, size: int) -> RubricSet:
    texts = set()
    while len(texts) < size:
        texts.add(" ".join(rng.sample(WORDS, rng.randint(3, 6))))
    return RubricSet(tuple(Criterion(text, rng.randint(1, 5)) for text in sorted(texts)))


# ------------------------------------------------------------ criterion 1


def test_criterion_01_identity_suite():
    rng = random.Random(101)
    sim = SimilarityFn("rouge1_f")
    started = time.monotonic()
    for _ in range(100):
        rubrics = random_set(rng, rng.randint(1, 6))
        matrix = pairwise_matrix(rubrics, rubrics, sim)
        prf = rubric_prf(matrix)
        assert prf.precision == 1.0
        assert prf.recall == 1.0
        assert prf.f1 == 1.0
        rates = failure_rates(matrix, rubrics, sim, tau=0.9)
        assert rates.missed == 0.0
        assert rates.hallucinations == 0.0
    elapsed = time.monotonic() - started
    assert elapsed < 5.0, f"identity suite took {elapsed:.2f}s"


# ------------------------------------------------------------ criterion 2


def metric_tuple(gold: RubricSet, gen: RubricSet, sim: SimilarityFn, tau: float):
    matrix = pairwise_matrix(gold, gen, sim)
    prf = rubric_prf(matrix)
    rates = failure_rates(matrix, gen, sim, tau)
    return (
        prf.precision,
        prf.recall,
        prf.f1,
        rates.missed,
        rates.hallucinations,
        rates.redundancy,
        rates.redundancy_defined,
    )


def test_criterion_02_permutation_invariance():
    rng = random.Random(202)
    sim = SimilarityFn("rouge1_f")
    for _ in range(200):
        gold = random_set(rng, rng.randint(2, 6))
        gen = random_set(rng, rng.randint(2, 6))
        baseline = metric_tuple(gold, gen, sim, tau=0.3)
        gold_perm = RubricSet(tuple(rng.sample(gold.criteria, len(gold))))
        gen_perm = RubricSet(tuple(rng.sample(gen.criteria, len(gen))))
        assert metric_tuple(gold_perm, gen_perm, sim, tau=0.3) == baseline


# ------------------------------------------------------------ criterion 3


def test_criterion_03_oracle_equivalence():
    with open(os.path.join(os.path.dirname(__file__), "data", "sim_golden.json")) as handle:
        golden = json.load(handle)
    assert len(golden) == 50
    for row in golden:
        tokens_a = tokenize(row["text_a"])
        tokens_b = tokenize(row["text_b"])
        assert list(tokens_a) == row["tokens_a"]
        assert list(tokens_b) == row["tokens_b"]
        assert bleu(tokens_a, tokens_b) == pytest.approx(row["bleu_a_to_b"], abs=1e-9)
        assert bleu(tokens_b, tokens_a) == pytest.approx(row["bleu_b_to_a"], abs=1e-9)
        for name, fn in (
            ("rouge1", lambda a, b: rouge_n(a, b, 1)),
            ("rouge2", lambda a, b: rouge_n(a, b, 2)),
            ("rougeL", rouge_l),
        ):
            score = fn(tokens_a, tokens_b)
            assert score.precision == pytest.approx(row[name]["precision"], abs=1e-9)
            assert score.recall == pytest.approx(row[name]["recall"], abs=1e-9)
            assert score.f1 == pytest.approx(row[name]["f1"], abs=1e-9)

    rng = random.Random(303)
    exact = SimilarityFn("exact")
    for _ in range(100):
        gold = random_set(rng, rng.randint(1, 6))
        gen = random_set(rng, rng.randint(1, 6))
        gold_texts = {c.text for c in gold.criteria}
        gen_texts = {c.text for c in gen.criteria}
        overlap = len(gold_texts & gen_texts)
        prf = rubric_prf(pairwise_matrix(gold, gen, exact))
        precision = overlap / len(gen)
        recall = overlap / len(gold)
        assert prf.precision == precision
        assert prf.recall == recall
        expected_f1 = (
            0.0 if precision + recall == 0 else 2 * precision * recall / (precision + recall)
        )
        assert prf.f1 == expected_f1


# ------------------------------------------------------------ criterion 4


def test_criterion_04_threshold_monotonicity():
    rng = random.Random(404)
    sim = SimilarityFn("rouge1_f")
    taus = [round(i * 0.1, 1) for i in range(11)]
    for _ in range(50):
        gold = random_set(rng, rng.randint(2, 5))
        gen = random_set(rng, rng.randint(2, 5))
        matrix = pairwise_matrix(gold, gen, sim)
        sweep = [failure_rates(matrix, gen, sim, tau) for tau in taus]
        missed = [r.missed for r in sweep]
        halluc = [r.hallucinations for r in sweep]
        redundancy = [r.redundancy for r in sweep]
        assert all(a <= b for a, b in zip(missed, missed[1:]))
        assert all(a <= b for a, b in zip(halluc, halluc[1:]))
        assert all(a >= b for a, b in zip(redundancy, redundancy[1:]))
        assert all(r.redundancy_defined for r in sweep)


# ------------------------------------------------------------ criterion 5


def test_criterion_05_hand_case_ledger():
    exact = SimilarityFn("exact")
    gold = RubricSet(
        (
            Criterion("response recommends immediate rest", 1),
            Criterion("response suggests oral fluids", 1),
        )
    )
    gen = RubricSet((Criterion("response recommends immediate rest", 1),))
    prf = rubric_prf(pairwise_matrix(gold, gen, exact))
    assert prf.precision == 1.0
    assert prf.recall == 0.5
    assert prf.f1 == pytest.approx(2 / 3, abs=1e-12)

    query = ConversationQuery(
        id="hand", messages=(Message("user", "Care advice please."),)
    )
    rubrics = RubricSet(
        (
            Criterion("response mentions kwalpha", 5),
            Criterion("response mentions kwbravo", 3),
            Criterion("response mentions kwcharlie", -4),
        )
    )
    client = KeywordMockClient()

    all_yes = grade_response(query, "Covers kwalpha kwbravo kwcharlie.", rubrics, client)
    assert all_yes.raw_points == 4
    assert all_yes.positive_total == 8
    assert all_yes.normalized == 0.5

    positives = grade_response(query, "Covers kwalpha and kwbravo.", rubrics, client)
    assert positives.normalized == 1.0

    negative = grade_response(query, "Only kwcharlie here.", rubrics, client)
    assert negative.normalized == -0.5


# ------------------------------------------------------------ criterion 6


def test_criterion_06_reward_contract():
    gold = RubricSet(
        (
            Criterion("advises immediate rest", 1),
            Criterion("explains warning signs", 1),
        )
    )
    sim = SimilarityFn("rouge1_f")

    gated = grpo_reward("totally not json", gold, sim=sim)
    assert gated.total == 0.0
    assert (gated.r_format, gated.r_similarity, gated.r_diversity, gated.r_length) == (
        0.0,
        0.0,
        0.0,
        0.0,
    )
    assert gated.count_delta == 1.0

    perfect = grpo_reward(serialize_rubric_set(gold), gold, sim=sim)
    assert perfect.total == 9.0
    assert perfect.count_delta == 0.0

    rng = random.Random(606)
    for _ in range(100):
        gold_set = random_set(rng, rng.randint(1, 5))
        roll = rng.random()
        if roll < 0.5:
            text = serialize_rubric_set(random_set(rng, rng.randint(1, 5)))
        elif roll < 0.65:
            text = serialize_rubric_set(RubricSet(()))
        elif roll < 0.8:
            text = "```json\n" + serialize_rubric_set(gold_set) + "\n```"
        else:
            text = serialize_rubric_set(gold_set)[:-1]
        breakdown = grpo_reward(text, gold_set, sim=sim)
        for term in (
            breakdown.r_format,
            breakdown.r_similarity,
            breakdown.r_diversity,
            breakdown.r_length,
        ):
            assert 0.0 <= term <= 1.0
        assert 0.0 <= breakdown.total <= 9.0
        assert breakdown.count_delta >= 0.0

        doubled = grpo_reward(text, gold_set, weights=RewardWeights(2, 10, 4, 2), sim=sim)
        assert doubled.total == pytest.approx(2 * breakdown.total, abs=1e-12)


# ------------------------------------------------------------ criterion 7


def test_criterion_07_retrieval_against_brute_force():
    rng = random.Random(707)
    entries = []
    for i in range(10):
        vector = [rng.uniform(-1.0, 1.0) for _ in range(6)]
        entries.append(retrieval._make_entry(f"v{i:02d}", vector))
    index = EmbeddingIndex(entries=tuple(entries), dimension=6, embedder_id="scripted")
    reference = [(e.example_id, list(e.vector)) for e in entries]

    for trial in range(10):
        query = [rng.uniform(-1.0, 1.0) for _ in range(6)]
        hits = top_k(index, query, k=10)
        expected = oracle_top_k(query, reference, k=10)
        assert [h.example_id for h in hits] == [e[0] for e in expected]
        for hit, (_, score) in zip(hits, expected):
            assert hit.score == pytest.approx(score, abs=1e-9)

    excluded = top_k(index, [1.0] * 6, k=10, exclude_ids={"v03"})
    assert "v03" not in [h.example_id for h in excluded]
    assert len(excluded) == 9

    for entry in entries:
        self_hits = top_k(index, list(entry.vector), k=1)
        assert self_hits[0].example_id == entry.example_id
        assert abs(self_hits[0].score - 1.0) <= 1e-9


# ------------------------------------------------------------ criterion 8


def test_criterion_08_end_to_end_mock_pipeline(tmp_path):
    started = time.monotonic()
    examples = build_kw_examples(20)
    dataset = tmp_path / "dataset.jsonl"
    write_dataset(dataset, examples)
    config = tmp_path / "config.yaml"
    config.write_text(
        yaml.safe_dump(
            {
                "seed": 13,
                "clients": {
                    "generator": {
                        "kind": "keyword_mock",
                        "cache_dir": str(tmp_path / "cache-gen"),
                    },
                    "judge": {
                        "kind": "keyword_mock",
                        "cache_dir": str(tmp_path / "cache-judge"),
                    },
                    "embedder": {
                        "kind": "keyword_mock",
                        "cache_dir": str(tmp_path / "cache-emb"),
                    },
                },
            }
        ),
        encoding="utf-8",
    )

    gens = tmp_path / "gens.jsonl"
    assert main(
        ["generate", "--dataset", str(dataset), "--mode", "zero-shot",
         "--out", str(gens), "--config", str(config)]
    ) == 0

    prefer_dir = tmp_path / "prefer"
    assert main(
        ["prefer", "--dataset", str(dataset), "--granularity", "instance",
         "--report-dir", str(prefer_dir), "--config", str(config)]
    ) == 0
    prefer_report = json.loads((prefer_dir / "report.json").read_text(encoding="utf-8"))
    assert prefer_report["outcomes"]["instance"]["accuracy"] == 1.0

    judge_args = [
        "judge", "--dataset", str(dataset), "--granularity", "instance",
        "--label", "partial", "--generations", str(gens), "--config", str(config),
    ]
    cold_dir = tmp_path / "judge-cold"
    warm_dir = tmp_path / "judge-warm"
    assert main(judge_args + ["--report-dir", str(cold_dir)]) == 0
    assert main(judge_args + ["--report-dir", str(warm_dir)]) == 0

    cold_report = json.loads((cold_dir / "report.json").read_text(encoding="utf-8"))
    assert cold_report["pearson"] == pytest.approx(1.0, abs=1e-12)
    assert cold_report["spearman"] == pytest.approx(1.0, abs=1e-12)

    for name in ("report.json", "scores_gold.jsonl", "scores_generated.jsonl"):
        assert (cold_dir / name).read_bytes() == (warm_dir / name).read_bytes()
    warm_stats = json.loads((warm_dir / "stats.json").read_text(encoding="utf-8"))
    assert warm_stats["judge"]["backend_calls"] == 0
    assert warm_stats["judge"]["chat_backend_calls"] == 0
    assert warm_stats["judge"]["chat_cache_hits"] > 0
    cold_stats = json.loads((cold_dir / "stats.json").read_text(encoding="utf-8"))
    assert cold_stats["judge"]["backend_calls"] > 0

    elapsed = time.monotonic() - started
    assert elapsed < 30.0, f"end-to-end pipeline took {elapsed:.2f}s"


# ------------------------------------------------------------ criterion 9


def test_criterion_09_judge_call_budget():
    examples = build_kw_examples(20)
    assets.attach_collections(
        examples,
        {
            "axis": assets.RubricCollection("axis", axis_rubrics(5)),
            "cluster": assets.RubricCollection("cluster", axis_rubrics(37)),
        },
    )
    gold_total = sum(len(ex.gold_rubrics) for ex in examples)
    budgets = {"none": 20, "axis": 5 * 20, "cluster": 37 * 20, "instance": gold_total}
    for granularity, expected_calls in budgets.items():
        client = KeywordMockClient()
        table = run_granularity_suite(examples, granularity, "good", client)
        assert len(table.rows) == 20
        assert len(client.calls) == expected_calls, granularity


# ----------------------------------------------------------- criterion 10


def test_criterion_10_live_mode_documented_with_provenance(tmp_path):
    readme = os.path.join(os.path.dirname(__file__), os.pardir, "README.md")
    body = open(readme, encoding="utf-8").read()
    assert "RUBRICKIT_LIVE_BASE_URL" in body
    assert "base_url" in body

    examples = build_kw_examples(5)
    dataset = tmp_path / "dataset.jsonl"
    write_dataset(dataset, examples)
    config = tmp_path / "config.yaml"
    config.write_text(
        yaml.safe_dump({"clients": {"judge": {"kind": "keyword_mock"}}}),
        encoding="utf-8",
    )
    report_dir = tmp_path / "rpt"
    assert main(
        ["judge", "--dataset", str(dataset), "--granularity", "none",
         "--report-dir", str(report_dir), "--config", str(config)]
    ) == 0
    report = json.loads((report_dir / "report.json").read_text(encoding="utf-8"))
    backends = report["provenance"]["backends"]
    assert backends["judge"] == {"kind": "keyword_mock", "model_id": "keyword-mock"}
    assert report["provenance"]["template_versions"]
    assert report["provenance"]["config_sha256"]


@pytest.mark.skipif(
    not os.environ.get("RUBRICKIT_LIVE_BASE_URL"),
    reason="live reproduction runs only with RUBRICKIT_LIVE_BASE_URL set",
)
def test_criterion_10_live_smoke(tmp_path):
    examples = build_kw_examples(2)
    dataset = tmp_path / "dataset.jsonl"
    write_dataset(dataset, examples)
    config = tmp_path / "config.yaml"
    config.write_text(
        yaml.safe_dump(
            {
                "clients": {
                    "generator": {
                        "kind": "http",
                        "base_url": os.environ["RUBRICKIT_LIVE_BASE_URL"],
                        "model_id": os.environ.get("RUBRICKIT_LIVE_MODEL", ""),
                        "api_key_env": "RUBRICKIT_LIVE_API_KEY",
                    }
                }
            }
        ),
        encoding="utf-8",
    )
    out = tmp_path / "gens.jsonl"
    code = main(
        ["generate", "--dataset", str(dataset), "--mode", "zero-shot",
         "--out", str(out), "--config", str(config)]
    )
    assert code == 0
    rows = [json.loads(line) for line in open(out, encoding="utf-8") if line.strip()]
    assert len(rows) == 2
    assert any(row["parse_status"] in ("ok", "recovered") for row in rows)
