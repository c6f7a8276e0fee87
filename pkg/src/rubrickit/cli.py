"""Command-line interface.

Subcommands: ingest, index, generate, eval-sim, judge, prefer, reward,
report.  A YAML config file supplies defaults; explicit flags win.
Reports are emitted as JSON plus CSV, carry full provenance (config
hash, template versions, similarity kinds, tau values, backend
identifiers), and contain no timestamps, so a rerun against a warm
cache reproduces them byte for byte.  Backend call counts go to a
separate stats.json sidecar, which is diagnostic and exempt from that
guarantee.

Exit codes: 0 ok, 1 runtime failure (backend, judge), 2 validation
failure (bad input files, bad config).
"""

from __future__ import annotations

import argparse
import csv
import dataclasses
import hashlib
import json
import sys
from pathlib import Path

import yaml

from . import __version__
from .analysis import (
    RewardWeights,
    grpo_reward,
    pearson,
    preference_accuracy,
    spearman,
)
from .assets import load_collection, attach_collections
from .client import CachingClient, ClientConfig, HttpClient, canonical_json
from .core import RubricSet, rubric_set_to_obj
from .dataset import FieldMapping, example_to_record, ingest_dataset
from .errors import (
    BackendError,
    DegenerateInput,
    IdMismatch,
    RubricKitError,
    ValidationFailed,
)
from .genpipe import (
    GenerationMode,
    default_k,
    generate_rubrics,
    generation_result_to_record,
)
from .judging import run_granularity_suite, score_row_to_record
from .mocks import KeywordMockClient
from .prompts import template_versions
from .retrieval import build_index, load_index, save_index
from .setmetrics import failure_rates, pairwise_matrix, rubric_prf
from .textsim import SIMILARITY_KINDS, SimilarityFn

LEXICAL_KINDS = ("bleu", "rouge1_f", "rouge2_f", "rougeL_f")

MODE_ALIASES = {
    "zero-shot": "zero_shot",
    "zero_shot": "zero_shot",
    "few-shot": "few_shot_random",
    "few_shot": "few_shot_random",
    "few_shot_random": "few_shot_random",
    "rag": "rubric_rag",
    "rubric-rag": "rubric_rag",
    "rubric_rag": "rubric_rag",
}


class CliError(Exception):
    def __init__(self, message: str, exit_code: int = 2):
        super().__init__(message)
        self.exit_code = exit_code


# ---------------------------------------------------------------- config


def load_config(path: str | None) -> dict:
    if not path:
        return {}
    try:
        with open(path, "r", encoding="utf-8") as fh:
            data = yaml.safe_load(fh) or {}
    except FileNotFoundError:
        raise CliError(f"config file not found: {path}")
    except yaml.YAMLError as exc:
        raise CliError(f"config file is not valid YAML: {exc}")
    if not isinstance(data, dict):
        raise CliError("config file must contain a mapping at the top level")
    return data


def mapping_from_config(config: dict) -> FieldMapping:
    raw = (config.get("dataset") or {}).get("mapping") or {}
    valid = {f.name for f in dataclasses.fields(FieldMapping)}
    unknown = sorted(set(raw) - valid)
    if unknown:
        raise CliError(f"unknown field-mapping keys in config: {unknown}")
    return FieldMapping(**raw)


def client_section(config: dict, role: str) -> dict:
    return (config.get("clients") or {}).get(role) or {}


def make_client(section: dict, role: str):
    """Build a backend client from one config block.

    Returns (client, identity) where identity is the provenance record.
    """
    kind = section.get("kind", "http")
    if kind == "http":
        if not section.get("base_url"):
            raise CliError(f"clients.{role}: base_url is required for the http backend")
        cfg = ClientConfig(
            base_url=section["base_url"],
            model_id=section.get("model_id", ""),
            api_key_env=section.get("api_key_env", ""),
            max_output_tokens=section.get("max_output_tokens", 1024),
            temperature=section.get("temperature", 0.0),
            extra_body=section.get("extra_body", {}),
            max_in_flight=section.get("max_in_flight", 4),
            retry_count=section.get("retry_count", 2),
            retry_backoff=section.get("retry_backoff", 0.5),
            timeout=section.get("timeout", 120.0),
            thinking_key=section.get("thinking_key", "enable_thinking"),
        )
        inner = HttpClient(cfg)
        identity = {"kind": "http", "model_id": cfg.model_id, "base_url": cfg.base_url}
    elif kind == "keyword_mock":
        inner = KeywordMockClient(embed_dim=section.get("embed_dim", 8))
        identity = {"kind": "keyword_mock", "model_id": "keyword-mock"}
    else:
        raise CliError(f"clients.{role}: unknown backend kind {kind!r}")
    cache_dir = section.get("cache_dir")
    client = CachingClient(inner, cache_dir) if cache_dir else inner
    return client, identity


def client_stats(client) -> dict:
    if isinstance(client, CachingClient):
        return {**client.stats, "backend_calls": client.backend_calls()}
    if hasattr(client, "backend_calls"):
        return {"backend_calls": client.backend_calls()}
    if hasattr(client, "network_calls"):
        return {"backend_calls": client.network_calls}
    return {}


def config_hash(effective: dict) -> str:
    return hashlib.sha256(canonical_json(effective).encode("utf-8")).hexdigest()


def provenance(effective: dict, backends: dict) -> dict:
    return {
        "config_sha256": config_hash(effective),
        "template_versions": template_versions(),
        "backends": backends,
        "settings": effective,
    }


# ---------------------------------------------------------------- io


def read_dataset(path: str, mapping: FieldMapping | None = None):
    try:
        result = ingest_dataset(path, mapping=mapping)
    except FileNotFoundError:
        raise CliError(f"dataset file not found: {path}")
    if result.errors:
        for error in result.errors:
            print(f"warning: {path}:{error.line_number}: {error.message}", file=sys.stderr)
    return result.examples


def read_jsonl(path: str) -> list[dict]:
    records = []
    try:
        with open(path, "r", encoding="utf-8") as fh:
            for line_number, line in enumerate(fh, start=1):
                if not line.strip():
                    continue
                try:
                    records.append(json.loads(line))
                except json.JSONDecodeError as exc:
                    raise CliError(f"{path}:{line_number}: invalid JSON: {exc.msg}")
    except FileNotFoundError:
        raise CliError(f"file not found: {path}")
    return records


def write_jsonl(path: str | Path, records) -> None:
    Path(path).parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w", encoding="utf-8") as fh:
        for record in records:
            fh.write(json.dumps(record, ensure_ascii=False) + "\n")


def write_json(path: str | Path, payload: dict) -> None:
    Path(path).parent.mkdir(parents=True, exist_ok=True)
    Path(path).write_text(
        json.dumps(payload, indent=2, sort_keys=True, ensure_ascii=False) + "\n",
        encoding="utf-8",
    )


def write_csv(path: str | Path, header: list[str], rows: list[list]) -> None:
    Path(path).parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w", encoding="utf-8", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(header)
        writer.writerows(rows)


def write_stats(directory: str | Path, stats: dict) -> None:
    write_json(Path(directory) / "stats.json", stats)


def rubrics_from_generations(path: str) -> tuple[dict[str, RubricSet], dict[str, str]]:
    """Generated rubric sets and parse statuses keyed by example id."""
    from .core import Criterion

    rubric_sets: dict[str, RubricSet] = {}
    statuses: dict[str, str] = {}
    for record in read_jsonl(path):
        criteria = tuple(
            Criterion(text=item["criterion"], points=item["points"])
            for item in record.get("rubrics", [])
        )
        rubric_sets[record["id"]] = RubricSet(criteria)
        statuses[record["id"]] = record.get("parse_status", "ok")
    return rubric_sets, statuses


# ---------------------------------------------------------------- commands


def cmd_ingest(args) -> int:
    config = load_config(args.config)
    mapping = mapping_from_config(config)
    try:
        result = ingest_dataset(args.input, mapping=mapping, strict=args.strict)
    except FileNotFoundError:
        raise CliError(f"input file not found: {args.input}")
    except ValidationFailed as exc:
        for error in exc.errors:
            print(f"{args.input}:{error.line_number}: {error.message}", file=sys.stderr)
        raise CliError(f"{len(exc.errors)} invalid line(s) under --strict")
    if args.output:
        write_jsonl(args.output, (example_to_record(ex) for ex in result.examples))
    split_counts: dict[str, int] = {}
    for example in result.examples:
        split_counts[example.split or "(none)"] = split_counts.get(example.split or "(none)", 0) + 1
    for split in sorted(split_counts):
        print(f"{split}: {split_counts[split]}")
    print(f"total: {len(result.examples)} example(s), {len(result.errors)} error(s)")
    return 0


def cmd_index(args) -> int:
    config = load_config(args.config)
    examples = read_dataset(args.dataset, mapping_from_config(config))
    if not examples:
        raise CliError(f"no examples in {args.dataset}")
    section = client_section(config, "embedder")
    client, identity = make_client(section, "embedder")
    embedder_id = args.embedder_id or identity.get("model_id") or identity["kind"]
    index = build_index(examples, client, embedder_id=embedder_id)
    save_index(index, args.out_dir)
    write_stats(args.out_dir, {"embedder": client_stats(client)})
    print(f"indexed {len(index.entries)} queries at dimension {index.dimension}")
    return 0


def _generation_mode(args, config: dict, pool_size: int) -> GenerationMode:
    gen_cfg = config.get("generation") or {}
    mode_name = args.mode or gen_cfg.get("mode", "zero_shot")
    kind = MODE_ALIASES.get(mode_name)
    if kind is None:
        raise CliError(f"unknown generation mode {mode_name!r}")
    if kind == "zero_shot":
        k = 0
    elif args.k is not None:
        k = args.k
    elif "k" in gen_cfg:
        k = gen_cfg["k"]
    else:
        k = default_k(pool_size)
    seed = args.seed if args.seed is not None else gen_cfg.get("seed", config.get("seed", 0))
    if args.thinking is not None:
        thinking = args.thinking
    else:
        thinking = gen_cfg.get("thinking", True)
    return GenerationMode(kind=kind, k=k, seed=seed, thinking=thinking)


def cmd_generate(args) -> int:
    config = load_config(args.config)
    mapping = mapping_from_config(config)
    pool = read_dataset(args.dataset, mapping)
    eval_examples = read_dataset(args.eval, mapping) if args.eval else list(pool)
    if args.split:
        eval_examples = [ex for ex in eval_examples if ex.split == args.split]
    if not eval_examples:
        raise CliError("no evaluation examples selected")
    mode = _generation_mode(args, config, len(pool))
    client, identity = make_client(client_section(config, "generator"), "generator")
    index = None
    if mode.kind == "rubric_rag":
        index_dir = args.index or (config.get("generation") or {}).get("index_dir")
        if not index_dir:
            raise CliError("rubric_rag needs --index (or generation.index_dir in config)")
        try:
            index = load_index(index_dir)
        except FileNotFoundError:
            raise CliError(f"index not found in {index_dir}")
    results = []
    for example in eval_examples:
        try:
            results.append(generate_rubrics(example.query, mode, pool, client, index=index))
        except BackendError as exc:
            raise CliError(f"backend failed for {example.id!r}: {exc}", exit_code=1)
    write_jsonl(args.out, (generation_result_to_record(r) for r in results))
    stats_path = Path(str(args.out) + ".stats.json")
    write_json(stats_path, {"generator": client_stats(client)})
    failed = sum(1 for r in results if r.parse_status == "failed")
    print(
        f"generated rubrics for {len(results)} queries "
        f"(mode {mode.kind}, k={mode.k}); parse-failure rate "
        f"{failed}/{len(results)}"
    )
    return 0


def _sim_fn(kind: str, config: dict, judge_client=None):
    if kind not in SIMILARITY_KINDS:
        raise CliError(f"unknown similarity kind {kind!r}")
    if kind == "llm_judge":
        if judge_client is None:
            judge_client, _ = make_client(client_section(config, "judge"), "judge")
        return SimilarityFn(kind, client=judge_client)
    return SimilarityFn(kind)


def _mean_or_none(values: list[float]) -> float | None:
    import math

    return math.fsum(values) / len(values) if values else None


def cmd_eval_sim(args) -> int:
    config = load_config(args.config)
    sim_cfg = config.get("similarity") or {}
    kinds = args.sim or sim_cfg.get("kinds") or list(LEXICAL_KINDS)
    if isinstance(kinds, str):
        kinds = [kinds]
    kinds = [k for chunk in kinds for k in str(chunk).split(",") if k]
    taus = args.tau if args.tau else sim_cfg.get("taus", [0.1, 0.2])
    primary_kind = kinds[0]

    examples = {ex.id: ex for ex in read_dataset(args.dataset, mapping_from_config(config))}
    generated, statuses = rubrics_from_generations(args.generations)
    missing = sorted(set(generated) - set(examples))
    if missing:
        raise CliError(f"generation ids not in dataset: {missing[:5]}")

    judge_client = None
    judge_identity = None
    if "llm_judge" in kinds:
        judge_client, judge_identity = make_client(client_section(config, "judge"), "judge")
    sims = {kind: _sim_fn(kind, config, judge_client) for kind in kinds}

    ids = sorted(generated)
    if args.skip_failed:
        ids = [i for i in ids if statuses.get(i) != "failed"]
    per_query = []
    for example_id in ids:
        gold = examples[example_id].gold_rubrics
        gen = generated[example_id]
        row: dict = {
            "id": example_id,
            "parse_status": statuses.get(example_id, "ok"),
            "gold_count": len(gold),
            "gen_count": len(gen),
            "kinds": {},
        }
        for kind, sim in sims.items():
            prf = rubric_prf(pairwise_matrix(gold, gen, sim))
            row["kinds"][kind] = {
                "precision": prf.precision,
                "recall": prf.recall,
                "f1": prf.f1,
            }
        primary = sims[primary_kind]
        matrix = pairwise_matrix(gold, gen, primary)
        row["failure"] = {}
        for tau in taus:
            rates = failure_rates(matrix, gen, primary, tau)
            row["failure"][str(tau)] = {
                "missed": rates.missed,
                "hallucinations": rates.hallucinations,
                "redundancy": rates.redundancy,
                "redundancy_defined": rates.redundancy_defined,
            }
        per_query.append(row)

    macro: dict = {}
    for kind in kinds:
        for field_name in ("precision", "recall", "f1"):
            values = [row["kinds"][kind][field_name] for row in per_query]
            macro.setdefault(kind, {})[field_name] = _mean_or_none(values)
    failure_macro: dict = {}
    for tau in taus:
        key = str(tau)
        entry = {}
        for field_name in ("missed", "hallucinations"):
            defined = [
                row["failure"][key][field_name]
                for row in per_query
                if row["failure"][key][field_name] is not None
            ]
            entry[field_name] = _mean_or_none(defined)
            entry[f"{field_name}_undefined"] = sum(
                1 for row in per_query if row["failure"][key][field_name] is None
            )
        defined_red = [
            row["failure"][key]["redundancy"]
            for row in per_query
            if row["failure"][key]["redundancy_defined"]
        ]
        entry["redundancy"] = _mean_or_none(defined_red)
        entry["redundancy_undefined"] = sum(
            1 for row in per_query if not row["failure"][key]["redundancy_defined"]
        )
        failure_macro[key] = entry

    status_counts: dict[str, int] = {}
    for example_id in ids:
        status = statuses.get(example_id, "ok")
        status_counts[status] = status_counts.get(status, 0) + 1

    effective = {
        "command": "eval-sim",
        "dataset": str(args.dataset),
        "generations": str(args.generations),
        "similarity_kinds": kinds,
        "primary_kind": primary_kind,
        "taus": [float(t) for t in taus],
        "skip_failed": bool(args.skip_failed),
    }
    backends = {}
    if judge_identity is not None:
        backends["judge"] = judge_identity
    report = {
        "per_query": per_query,
        "macro": macro,
        "failure_macro": failure_macro,
        "parse_status_counts": status_counts,
        "query_count": len(per_query),
        "provenance": provenance(effective, backends),
    }
    report_dir = Path(args.report_dir)
    write_json(report_dir / "report.json", report)

    header = ["id", "parse_status", "gold_count", "gen_count"]
    for kind in kinds:
        header += [f"{kind}_precision", f"{kind}_recall", f"{kind}_f1"]
    for tau in taus:
        header += [f"missed@{tau}", f"hallucinations@{tau}", f"redundancy@{tau}"]
    rows = []
    for row in per_query:
        out = [row["id"], row["parse_status"], row["gold_count"], row["gen_count"]]
        for kind in kinds:
            entry = row["kinds"][kind]
            out += [entry["precision"], entry["recall"], entry["f1"]]
        for tau in taus:
            entry = row["failure"][str(tau)]
            out += [entry["missed"], entry["hallucinations"], entry["redundancy"]]
        rows.append(out)
    write_csv(report_dir / "per_query.csv", header, rows)

    summary_header = ["kind", "precision", "recall", "f1"]
    summary_rows = [
        [kind, macro[kind]["precision"], macro[kind]["recall"], macro[kind]["f1"]]
        for kind in kinds
    ]
    write_csv(report_dir / "summary.csv", summary_header, summary_rows)
    stats = {}
    if judge_client is not None:
        stats["judge"] = client_stats(judge_client)
    write_stats(report_dir, stats)
    f1_summary = ", ".join(
        f"{kind} F1={macro[kind]['f1']:.4f}"
        for kind in kinds
        if macro[kind]["f1"] is not None
    )
    print(f"evaluated {len(per_query)} queries: {f1_summary or 'no scored queries'}")
    return 0


def _load_collections(args, config: dict) -> dict:
    collections = {}
    sources = dict(config.get("collections") or {})
    if getattr(args, "axis_file", None):
        sources["axis"] = args.axis_file
    if getattr(args, "cluster_file", None):
        sources["cluster"] = args.cluster_file
    for name, path in sources.items():
        try:
            collections[name] = load_collection(path, name)
        except FileNotFoundError:
            raise CliError(f"collection file not found: {path}")
    return collections


def _grade_tables(args, config, examples, granularity, labels, client, overrides=None):
    tables = {}
    for label in labels:
        tables[label] = run_granularity_suite(
            examples,
            granularity,
            label,
            client,
            rubrics_override=overrides,
            clip=args.clip,
        )
    return tables


def cmd_judge(args) -> int:
    config = load_config(args.config)
    examples = read_dataset(args.dataset, mapping_from_config(config))
    if not examples:
        raise CliError(f"no examples in {args.dataset}")
    collections = _load_collections(args, config)
    if collections:
        attach_collections(examples, collections)
    client, identity = make_client(client_section(config, "judge"), "judge")
    report_dir = Path(args.report_dir)

    gold_table = run_granularity_suite(
        examples, args.granularity, args.label, client, clip=args.clip
    )
    write_jsonl(
        report_dir / "scores_gold.jsonl",
        (score_row_to_record(r) for r in gold_table.rows),
    )
    gold_scores = gold_table.scores_by_id()
    report: dict = {
        "granularity": args.granularity,
        "label": args.label,
        "scored": len(gold_table.rows),
        "skipped_no_positive": gold_table.skipped_no_positive,
        "average_score_gold": _mean_or_none(list(gold_scores.values())),
    }

    if args.generations:
        if args.granularity != "instance":
            raise CliError("--generations only applies to instance granularity")
        overrides, _ = rubrics_from_generations(args.generations)
        generated_table = run_granularity_suite(
            examples,
            args.granularity,
            args.label,
            client,
            rubrics_override=overrides,
            clip=args.clip,
        )
        write_jsonl(
            report_dir / "scores_generated.jsonl",
            (score_row_to_record(r) for r in generated_table.rows),
        )
        generated_scores = generated_table.scores_by_id()
        common = sorted(set(gold_scores) & set(generated_scores))
        xs = [gold_scores[i] for i in common]
        ys = [generated_scores[i] for i in common]
        try:
            report["pearson"] = pearson(xs, ys)
            report["spearman"] = spearman(xs, ys)
        except DegenerateInput as exc:
            report["pearson"] = None
            report["spearman"] = None
            report["correlation_note"] = str(exc)
        avg_generated = _mean_or_none(ys)
        avg_gold_common = _mean_or_none(xs)
        report["average_score_generated"] = avg_generated
        report["average_score_delta"] = (
            avg_generated - avg_gold_common
            if avg_generated is not None and avg_gold_common is not None
            else None
        )
        report["paired_queries"] = len(common)
        report["skipped_no_positive_generated"] = generated_table.skipped_no_positive

    effective = {
        "command": "judge",
        "dataset": str(args.dataset),
        "granularity": args.granularity,
        "label": args.label,
        "generations": str(args.generations) if args.generations else None,
        "clip": bool(args.clip),
    }
    report["provenance"] = provenance(effective, {"judge": identity})
    write_json(report_dir / "report.json", report)
    write_stats(report_dir, {"judge": client_stats(client)})
    summary = f"judged {report['scored']} queries at {args.granularity} granularity"
    if "pearson" in report and report["pearson"] is not None:
        summary += f"; pearson={report['pearson']:.4f} spearman={report['spearman']:.4f}"
    print(summary)
    return 0


def cmd_prefer(args) -> int:
    config = load_config(args.config)
    examples = read_dataset(args.dataset, mapping_from_config(config))
    if not examples:
        raise CliError(f"no examples in {args.dataset}")
    collections = _load_collections(args, config)
    if collections:
        attach_collections(examples, collections)
    granularities = [g for chunk in args.granularity for g in chunk.split(",") if g]
    client, identity = make_client(client_section(config, "judge"), "judge")
    overrides = None
    if args.generations:
        overrides, _ = rubrics_from_generations(args.generations)
    report_dir = Path(args.report_dir)

    outcomes = {}
    for granularity in granularities:
        tables = _grade_tables(
            args,
            config,
            examples,
            granularity,
            [args.good_label, args.bad_label],
            client,
            overrides=overrides if granularity == "instance" else None,
        )
        good = tables[args.good_label].scores_by_id()
        bad = tables[args.bad_label].scores_by_id()
        common = set(good) & set(bad)
        outcome = preference_accuracy(
            {i: good[i] for i in common},
            {i: bad[i] for i in common},
            tie_policy=args.tie_policy,
        )
        outcomes[granularity] = {
            "wins": outcome.wins,
            "ties": outcome.ties,
            "losses": outcome.losses,
            "accuracy": outcome.accuracy,
            "paired_queries": len(common),
        }
        for label in (args.good_label, args.bad_label):
            write_jsonl(
                report_dir / f"scores_{granularity}_{label}.jsonl",
                (score_row_to_record(r) for r in tables[label].rows),
            )

    effective = {
        "command": "prefer",
        "dataset": str(args.dataset),
        "granularities": granularities,
        "good_label": args.good_label,
        "bad_label": args.bad_label,
        "tie_policy": args.tie_policy,
        "generations": str(args.generations) if args.generations else None,
        "clip": bool(args.clip),
    }
    report = {
        "outcomes": outcomes,
        "provenance": provenance(effective, {"judge": identity}),
    }
    write_json(report_dir / "report.json", report)
    write_csv(
        report_dir / "preference.csv",
        ["granularity", "accuracy", "wins", "ties", "losses"],
        [
            [g, outcomes[g]["accuracy"], outcomes[g]["wins"], outcomes[g]["ties"], outcomes[g]["losses"]]
            for g in granularities
        ],
    )
    write_stats(report_dir, {"judge": client_stats(client)})
    for granularity in granularities:
        print(f"{granularity}: accuracy {outcomes[granularity]['accuracy']:.4f}")
    return 0


def cmd_reward(args) -> int:
    config = load_config(args.config)
    examples = {ex.id: ex for ex in read_dataset(args.dataset, mapping_from_config(config))}
    rollouts = read_jsonl(args.rollouts)
    reward_cfg = config.get("reward") or {}
    weight_values = args.weights or reward_cfg.get("weights")
    try:
        if weight_values is None:
            weights = RewardWeights()
        elif isinstance(weight_values, dict):
            weights = RewardWeights(
                w_format=weight_values.get("format", 1.0),
                w_similarity=weight_values.get("similarity", 5.0),
                w_diversity=weight_values.get("diversity", 2.0),
                w_length=weight_values.get("length", 1.0),
            )
        else:
            parts = [float(x) for x in str(weight_values).split(",")]
            if len(parts) != 4:
                raise CliError("--weights needs four comma-separated numbers")
            weights = RewardWeights(*parts)
    except ValueError as exc:
        raise CliError(f"invalid reward weights: {exc}")
    kind = args.sim or reward_cfg.get("sim", "rouge1_f")
    sim = _sim_fn(kind, config)
    length_stat = args.length_stat or reward_cfg.get("length_stat", "tokens")

    records = []
    totals = []
    for rollout in rollouts:
        example_id = rollout.get("id")
        if example_id not in examples:
            raise CliError(f"rollout id {example_id!r} not in dataset")
        breakdown = grpo_reward(
            rollout.get("text", ""),
            examples[example_id].gold_rubrics,
            weights=weights,
            sim=sim,
            length_stat=length_stat,
        )
        totals.append(breakdown.total)
        records.append(
            {
                "id": example_id,
                "r_f": breakdown.r_format,
                "r_s": breakdown.r_similarity,
                "r_d": breakdown.r_diversity,
                "r_l": breakdown.r_length,
                "total": breakdown.total,
                "count_delta": breakdown.count_delta,
            }
        )
    write_jsonl(args.out, records)
    mean_total = _mean_or_none(totals)
    print(
        f"scored {len(records)} rollouts; mean total "
        f"{mean_total:.4f}" if mean_total is not None else "scored 0 rollouts"
    )
    return 0


def cmd_report(args) -> int:
    rows = []
    for input_dir in args.inputs:
        report_path = Path(input_dir) / "report.json"
        if not report_path.exists():
            raise CliError(f"no report.json under {input_dir}")
        payload = json.loads(report_path.read_text(encoding="utf-8"))
        macro = payload.get("macro")
        if macro is None:
            continue
        settings = payload.get("provenance", {}).get("settings", {})
        for kind, entry in sorted(macro.items()):
            rows.append(
                [
                    str(input_dir),
                    settings.get("generations", ""),
                    kind,
                    entry.get("precision"),
                    entry.get("recall"),
                    entry.get("f1"),
                ]
            )
    if not rows:
        raise CliError("no eval-sim reports found under the given directories")
    write_csv(
        args.out,
        ["report_dir", "generations", "kind", "precision", "recall", "f1"],
        rows,
    )
    print(f"combined {len(rows)} rows into {args.out}")
    return 0


# ---------------------------------------------------------------- parser


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="rubrickit",
        description="Generate query-specific evaluation rubrics and measure their quality.",
    )
    parser.add_argument("--version", action="version", version=f"rubrickit {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("ingest", help="validate a dataset and write canonical JSONL")
    p.add_argument("--input", required=True)
    p.add_argument("--output")
    p.add_argument("--config")
    p.add_argument("--strict", action="store_true")
    p.set_defaults(func=cmd_ingest)

    p = sub.add_parser("index", help="build the dense retrieval index over a dataset")
    p.add_argument("--dataset", required=True)
    p.add_argument("--out-dir", required=True)
    p.add_argument("--embedder-id", default="")
    p.add_argument("--config")
    p.set_defaults(func=cmd_index)

    p = sub.add_parser("generate", help="generate rubrics for evaluation queries")
    p.add_argument("--dataset", required=True, help="training pool (canonical JSONL)")
    p.add_argument("--eval", help="evaluation set; defaults to --dataset")
    p.add_argument("--split", help="filter evaluation examples by split name")
    p.add_argument("--mode", help="zero-shot | few-shot | rag")
    p.add_argument("--k", type=int)
    p.add_argument("--seed", type=int)
    p.add_argument("--index", help="index directory (rag mode)")
    thinking = p.add_mutually_exclusive_group()
    thinking.add_argument("--thinking", dest="thinking", action="store_true", default=None)
    thinking.add_argument("--no-thinking", dest="thinking", action="store_false")
    p.add_argument("--out", required=True)
    p.add_argument("--config")
    p.set_defaults(func=cmd_generate)

    p = sub.add_parser("eval-sim", help="score generated rubrics against gold rubrics")
    p.add_argument("--dataset", required=True)
    p.add_argument("--generations", required=True)
    p.add_argument("--sim", action="append", help="similarity kind(s); repeat or comma-separate")
    p.add_argument("--tau", action="append", type=float)
    p.add_argument("--skip-failed", action="store_true", help="exclude parse failures from metrics")
    p.add_argument("--report-dir", required=True)
    p.add_argument("--config")
    p.set_defaults(func=cmd_eval_sim)

    p = sub.add_parser("judge", help="grade completions with rubrics at one granularity")
    p.add_argument("--dataset", required=True)
    p.add_argument("--granularity", required=True, choices=["none", "axis", "cluster", "instance"])
    p.add_argument("--label", default="good")
    p.add_argument("--generations", help="generated rubrics for instance granularity")
    p.add_argument("--axis-file")
    p.add_argument("--cluster-file")
    p.add_argument("--clip", action="store_true")
    p.add_argument("--report-dir", required=True)
    p.add_argument("--config")
    p.set_defaults(func=cmd_judge)

    p = sub.add_parser("prefer", help="good-versus-bad preference accuracy per granularity")
    p.add_argument("--dataset", required=True)
    p.add_argument("--granularity", action="append", required=True,
                   help="granularity name(s); repeat or comma-separate")
    p.add_argument("--good-label", default="good")
    p.add_argument("--bad-label", default="bad")
    p.add_argument("--tie-policy", default="half", choices=["half", "drop", "loss"])
    p.add_argument("--generations")
    p.add_argument("--axis-file")
    p.add_argument("--cluster-file")
    p.add_argument("--clip", action="store_true")
    p.add_argument("--report-dir", required=True)
    p.add_argument("--config")
    p.set_defaults(func=cmd_prefer)

    p = sub.add_parser("reward", help="score rubric rollouts with the multi-objective reward")
    p.add_argument("--rollouts", required=True, help="JSONL of {id, text}")
    p.add_argument("--dataset", required=True)
    p.add_argument("--sim")
    p.add_argument("--weights", help="four comma-separated weights (format,similarity,diversity,length)")
    p.add_argument("--length-stat", choices=["tokens", "points"])
    p.add_argument("--out", required=True)
    p.add_argument("--config")
    p.set_defaults(func=cmd_reward)

    p = sub.add_parser("report", help="combine eval-sim reports into one CSV")
    p.add_argument("--inputs", nargs="+", required=True)
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_report)

    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except CliError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return exc.exit_code
    except (IdMismatch, ValidationFailed) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except BackendError as exc:
        print(f"backend error: {exc}", file=sys.stderr)
        return 1
    except RubricKitError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
