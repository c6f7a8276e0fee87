"""Exception types shared across the toolkit."""

from __future__ import annotations


class RubricKitError(Exception):
    """Base class for all toolkit errors."""


# --- rubric JSON parsing ---

class RubricParseError(RubricKitError):
    """Base class for rubric JSON parse failures."""


class MalformedJson(RubricParseError):
    """Input is not well-formed JSON (or contains no balanced object)."""

    def __init__(self, message: str, offset: int = 0):
        super().__init__(f"{message} (offset {offset})")
        self.offset = offset


class SchemaViolation(RubricParseError):
    """Well-formed JSON that deviates from the rubric output schema."""

    def __init__(self, message: str, field: str = ""):
        super().__init__(f"{message} (field {field!r})" if field else message)
        self.field = field


class EmptyAfterStrip(RubricParseError):
    """Nothing left to parse after removing reasoning blocks and fences."""


# --- dataset ingestion ---

class ValidationFailed(RubricKitError):
    """Strict ingestion found invalid lines; carries all line errors."""

    def __init__(self, errors: list["LineError"]):
        super().__init__(f"{len(errors)} invalid line(s): " + "; ".join(str(e) for e in errors[:5]))
        self.errors = errors


class LineError:
    """One invalid JSONL line, with its 1-based line number."""

    def __init__(self, line_number: int, message: str):
        self.line_number = line_number
        self.message = message

    def __str__(self) -> str:
        return f"line {self.line_number}: {self.message}"

    def __repr__(self) -> str:
        return f"LineError({self.line_number}, {self.message!r})"


# --- backend client ---

class BackendError(RubricKitError):
    """Base class for LLM backend failures."""


class AuthError(BackendError):
    """Credential rejected (401/403) or missing."""


class RateLimited(BackendError):
    """429 persisted through all retries."""


class TransportError(BackendError):
    """Connection failure or 5xx persisted through all retries."""


class MalformedResponse(BackendError):
    """Backend reply did not have the expected shape."""


class UnscriptedRequest(BackendError):
    """Mock client received a request its script does not cover."""


# --- judging and similarity ---

class UnparseableJudgment(RubricKitError):
    """Judge reply could not be parsed, even after one retry."""


# --- metrics and analysis ---

class UndefinedMetric(RubricKitError):
    """Metric has no value for this input (e.g. empty reference set)."""


class DegenerateInput(RubricKitError):
    """Correlation input too short or constant; value undefined."""


class IdMismatch(RubricKitError):
    """Paired score maps do not cover the same ids."""


# --- retrieval ---

class DimensionMismatch(RubricKitError):
    """Vector dimension differs from the index dimension."""


class ZeroVector(RubricKitError):
    """Embedding with zero norm cannot be indexed."""


# --- generation pipeline ---

class PoolTooSmall(RubricKitError):
    """Exemplar pool has fewer candidates than the requested k."""


class TemplateError(RubricKitError):
    """Prompt template is missing a required slot."""


# --- response grading ---

class NoPositivePoints(RubricKitError):
    """Rubric set has no criterion with positive points; score undefined."""


class MissingCollection(RubricKitError):
    """Requested granularity needs a rubric collection that is absent."""


class MissingCompletion(RubricKitError):
    """Example lacks the completion label requested for grading."""


# --- granularity assets ---

class SizeMismatch(RubricKitError):
    """Collection size does not match the expected size for its name."""
