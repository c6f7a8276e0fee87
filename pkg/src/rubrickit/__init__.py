"""rubrickit: generate query-specific evaluation rubrics with an LLM
backend and measure their quality with set-matching metrics, downstream
judge scoring, and rollout rewards."""

from .analysis import (
    PreferenceOutcome,
    RewardBreakdown,
    RewardWeights,
    grpo_reward,
    pearson,
    preference_accuracy,
    spearman,
)
from .assets import RubricCollection, attach_collections, load_collection
from .client import CachingClient, ClientConfig, HttpClient, LlmClient, ResponseCache
from .core import (
    ConversationQuery,
    Criterion,
    DatasetExample,
    Message,
    RubricSet,
    parse_rubric_json,
    render_conversation,
    rubric_set_to_obj,
    serialize_rubric_set,
    strip_reasoning,
)
from .dataset import FieldMapping, IngestResult, ingest_dataset, write_dataset
from .errors import RubricKitError
from .genpipe import (
    Exemplar,
    GenerationMode,
    GenerationResult,
    build_generation_prompt,
    default_k,
    generate_bad_response,
    generate_rubrics,
    select_exemplars,
)
from .judging import (
    GradeResult,
    ScoreTable,
    grade_criterion,
    grade_no_rubric,
    grade_response,
    run_granularity_suite,
)
from .mocks import KeywordMockClient, MockClient
from .retrieval import (
    EmbeddingIndex,
    RetrievalHit,
    build_index,
    embed_query,
    load_index,
    save_index,
    top_k,
)
from .setmetrics import (
    FailureRates,
    RubricPRF,
    SimilarityMatrix,
    failure_rates,
    hallucinations_at,
    missed_at,
    pairwise_matrix,
    redundancy_at,
    rubric_prf,
)
from .textsim import (
    RougeScore,
    SimilarityFn,
    bleu,
    llm_judge_similarity,
    rouge_l,
    rouge_n,
    tokenize,
)

__version__ = "0.1.0"

__all__ = [
    "CachingClient",
    "ClientConfig",
    "ConversationQuery",
    "Criterion",
    "DatasetExample",
    "EmbeddingIndex",
    "Exemplar",
    "FailureRates",
    "FieldMapping",
    "GenerationMode",
    "GenerationResult",
    "GradeResult",
    "HttpClient",
    "IngestResult",
    "KeywordMockClient",
    "LlmClient",
    "Message",
    "MockClient",
    "PreferenceOutcome",
    "ResponseCache",
    "RetrievalHit",
    "RewardBreakdown",
    "RewardWeights",
    "RougeScore",
    "RubricCollection",
    "RubricKitError",
    "RubricPRF",
    "RubricSet",
    "ScoreTable",
    "SimilarityFn",
    "SimilarityMatrix",
    "attach_collections",
    "bleu",
    "build_generation_prompt",
    "build_index",
    "default_k",
    "embed_query",
    "failure_rates",
    "generate_bad_response",
    "generate_rubrics",
    "grade_criterion",
    "grade_no_rubric",
    "grade_response",
    "grpo_reward",
    "hallucinations_at",
    "ingest_dataset",
    "llm_judge_similarity",
    "load_collection",
    "load_index",
    "missed_at",
    "pairwise_matrix",
    "parse_rubric_json",
    "pearson",
    "preference_accuracy",
    "redundancy_at",
    "render_conversation",
    "rouge_l",
    "rouge_n",
    "rubric_prf",
    "rubric_set_to_obj",
    "run_granularity_suite",
    "save_index",
    "select_exemplars",
    "serialize_rubric_set",
    "spearman",
    "strip_reasoning",
    "tokenize",
    "top_k",
    "write_dataset",
]
