"""Exception types shared across the engine."""

from __future__ import annotations


class FinbriefError(Exception):
    """Base class for all engine errors."""


# --- ingest ---------------------------------------------------------------

class UnreadableDocument(FinbriefError):
    """Payload could not be parsed as the hinted format."""


class EmptyExtraction(FinbriefError):
    """Parsing succeeded but recovered zero characters."""


class MetadataIncomplete(FinbriefError):
    """A required provenance field is unavailable."""


# --- gateway --------------------------------------------------------------

class GatewayError(FinbriefError):
    """Base class for completion-gateway failures."""


class EndpointUnavailable(GatewayError):
    """Transport failure that persisted through all retries."""


class MalformedResponse(GatewayError):
    """Endpoint reply (or mock script) could not produce a usable text."""


class GatewayConfigError(GatewayError):
    """Gateway cannot be constructed from the given configuration."""


# --- summarize ------------------------------------------------------------

class MissingBinding(FinbriefError):
    """A prompt placeholder was left unfilled."""


class EmptyDocument(FinbriefError):
    """Document has no filtered text to summarize."""


class ExemplarMissing(FinbriefError):
    """Few-shot template carries no exemplars."""


# --- personalize ----------------------------------------------------------

class UnparseableDecision(FinbriefError):
    """Relevance reply contains neither a YES nor a NO token."""


class UnparseableSelection(FinbriefError):
    """Ranking reply contains no usable article indices."""


class NoRelevantArticles(FinbriefError):
    """No article was judged relevant to the keyword."""


class InsightParseFailure(FinbriefError):
    """Insight reply yielded no complete trend/implication/risk triple."""


class ActionCountViolation(FinbriefError):
    """Action list count differs from three even after the corrective retry."""


# --- metrics --------------------------------------------------------------

class EmptyReference(FinbriefError):
    """BLEU reference sequence is empty."""


class EmptyInput(FinbriefError):
    """ROUGE-L requires non-empty candidate and reference."""


class UndefinedRate(FinbriefError):
    """Classification rate has a zero denominator."""


class MissingAnnotation(FinbriefError):
    """A predicted (doc, keyword) pair has no human annotation."""


# --- service --------------------------------------------------------------

class NothingIngested(FinbriefError):
    """An operation that needs stored documents found none."""


class CorpusNotSummarized(FinbriefError):
    """Personalization requested before any document has an enhanced summary."""


# --- store ----------------------------------------------------------------

class StorageFailure(FinbriefError):
    """Write failed or a record violates referential integrity."""


class DuplicateId(FinbriefError):
    """A record with the same key already exists."""


class NotFound(FinbriefError):
    """No record stored under the requested id."""
