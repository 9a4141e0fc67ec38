"""Staged summarization: initial summary, metadata extraction, enhanced summary.

Each stage is one gateway call over a rendered template. The chain is
recorded as content digests of the exact strings exchanged, which makes
the build-upon-previous-outputs structure mechanically checkable: the
enhanced step's input digest must equal the initial step's output digest.
Metadata extraction is total; unrecoverable fields fall back to absent
and render downstream as "unknown".
"""

from __future__ import annotations

import json
import re
from dataclasses import dataclass
from datetime import datetime, timezone
from enum import Enum

from .errors import EmptyDocument, ExemplarMissing, GatewayError, MalformedResponse
from .gateway import (
    CompletionGateway,
    CompletionRequest,
    GenerationParams,
    StageTag,
    truncate_to_context,
)
from .hashing import sha256_hex
from .ingest import DocumentRecord
from .prompts import PromptTemplate, render_prompt
from .store import METADATA, SUMMARIES, TRACES, JsonlStore

# Word budget for the article excerpt quoted inside the enhanced prompt;
# keeps the prompt well under the context budget alongside exemplars.
EXCERPT_WORDS = 400

METADATA_FIELDS = ("date", "location", "entity")
UNKNOWN = "unknown"


class SummaryStage(str, Enum):
    INITIAL = "initial"
    ENHANCED = "enhanced"


def utc_now_iso() -> str:
    return datetime.now(timezone.utc).isoformat(timespec="seconds")


@dataclass(frozen=True)
class ArticleMetadata:
    date: str | None
    location: str | None
    entity: str | None
    fallback_used: bool

    def __post_init__(self) -> None:
        any_absent = any(
            getattr(self, name) is None for name in METADATA_FIELDS
        )
        if self.fallback_used != any_absent:
            raise ValueError("fallback_used must mirror the presence of absent fields")

    def rendered_block(self) -> str:
        """Key-value lines with "unknown" standing in for absent fields."""
        return "\n".join(
            f"{name}: {getattr(self, name) or UNKNOWN}" for name in METADATA_FIELDS
        )

    def to_record(self, doc_id: str) -> dict:
        return {
            "doc_id": doc_id,
            "date": self.date,
            "location": self.location,
            "entity": self.entity,
            "fallback_used": self.fallback_used,
        }


@dataclass(frozen=True)
class SummaryRecord:
    doc_id: str
    stage: SummaryStage
    text: str
    prompt_hash: str
    params: GenerationParams
    created_at: str

    def __post_init__(self) -> None:
        if not self.text:
            raise ValueError("summary text must be non-empty")

    def to_record(self) -> dict:
        return {
            "doc_id": self.doc_id,
            "stage": self.stage.value,
            "text": self.text,
            "prompt_hash": self.prompt_hash,
            "params": {
                "max_new_tokens": self.params.max_new_tokens,
                "temperature": self.params.temperature,
                "context_budget_tokens": self.params.context_budget_tokens,
            },
            "created_at": self.created_at,
        }


@dataclass(frozen=True)
class ChainStep:
    stage_tag: StageTag
    input_digest: str
    context_digest: str
    output_digest: str


CHAIN_ORDER = (
    StageTag.INITIAL_SUMMARY,
    StageTag.METADATA_EXTRACTION,
    StageTag.ENHANCED_SUMMARY,
)


@dataclass(frozen=True)
class ChainTrace:
    doc_id: str
    steps: tuple[ChainStep, ...]

    def verify(self) -> None:
        """Check stage order and the feed-forward digest link."""
        tags = tuple(step.stage_tag for step in self.steps)
        if tags != CHAIN_ORDER:
            raise ValueError(f"chain steps out of order: {[t.value for t in tags]}")
        initial, _, enhanced = self.steps
        if enhanced.input_digest != initial.output_digest:
            raise ValueError("enhanced step does not consume the initial summary")

    def to_record(self) -> dict:
        return {
            "doc_id": self.doc_id,
            "steps": [
                {
                    "stage_tag": step.stage_tag.value,
                    "input_digest": step.input_digest,
                    "context_digest": step.context_digest,
                    "output_digest": step.output_digest,
                }
                for step in self.steps
            ],
        }


@dataclass(frozen=True)
class ChainResult:
    initial: SummaryRecord
    metadata: ArticleMetadata
    enhanced: SummaryRecord
    trace: ChainTrace


def _require_text(doc: DocumentRecord) -> str:
    if not doc.filtered_text.strip():
        raise EmptyDocument(f"document {doc.doc_id} has no retained text")
    return doc.filtered_text


def _call(gw: CompletionGateway, prompt: str, stage: StageTag, params: GenerationParams) -> str:
    result = gw.complete(CompletionRequest(prompt=prompt, params=params, stage_tag=stage))
    return result.text


def initial_summary(
    doc: DocumentRecord,
    gw: CompletionGateway,
    template: PromptTemplate,
    params: GenerationParams | None = None,
) -> SummaryRecord:
    text = _require_text(doc)
    params = params or GenerationParams()
    prompt = render_prompt(template, {"article": text})
    reply = _call(gw, prompt, StageTag.INITIAL_SUMMARY, params)
    if not reply.strip():
        raise MalformedResponse(f"empty summary reply for document {doc.doc_id}")
    return SummaryRecord(
        doc_id=doc.doc_id,
        stage=SummaryStage.INITIAL,
        text=reply,
        prompt_hash=sha256_hex(prompt),
        params=params,
        created_at=utc_now_iso(),
    )


def _scan_field(reply: str, name: str) -> str | None:
    # Lenient fallback: find `name: value` or `"name" = "value"` anywhere.
    match = re.search(
        rf'"?{name}"?\s*[:=]\s*"?([^"\n,}}]+)', reply, flags=re.IGNORECASE
    )
    if not match:
        return None
    value = match.group(1).strip().strip("'\"").strip()
    return value or None


def parse_metadata_reply(reply: str) -> ArticleMetadata:
    """Strict JSON first, then a per-field lenient scan, then absent."""
    fields: dict[str, str | None] = {name: None for name in METADATA_FIELDS}
    block = re.search(r"\{.*\}", reply, flags=re.DOTALL)
    if block:
        try:
            payload = json.loads(block.group())
        except ValueError:
            payload = None
        if isinstance(payload, dict):
            for name in METADATA_FIELDS:
                value = payload.get(name)
                if isinstance(value, str) and value.strip():
                    fields[name] = value.strip()
    for name in METADATA_FIELDS:
        if fields[name] is None:
            fields[name] = _scan_field(reply, name)
    return ArticleMetadata(
        date=fields["date"],
        location=fields["location"],
        entity=fields["entity"],
        fallback_used=any(fields[name] is None for name in METADATA_FIELDS),
    )


def extract_metadata(
    doc: DocumentRecord,
    gw: CompletionGateway,
    template: PromptTemplate,
    params: GenerationParams | None = None,
) -> ArticleMetadata:
    """Total by design: gateway or parse trouble degrades to absent fields."""
    text = _require_text(doc)
    params = params or GenerationParams()
    prompt = render_prompt(template, {"article": text})
    try:
        reply = _call(gw, prompt, StageTag.METADATA_EXTRACTION, params)
    except GatewayError:
        return ArticleMetadata(date=None, location=None, entity=None, fallback_used=True)
    return parse_metadata_reply(reply)


def enhanced_summary(
    doc: DocumentRecord,
    initial: SummaryRecord,
    meta: ArticleMetadata,
    template: PromptTemplate,
    gw: CompletionGateway,
    params: GenerationParams | None = None,
) -> SummaryRecord:
    text = _require_text(doc)
    if not template.exemplars:
        raise ExemplarMissing(f"template {template.template_id!r} ships no exemplars")
    if initial.stage is not SummaryStage.INITIAL:
        raise ValueError("enhanced_summary requires an initial-stage record")
    params = params or GenerationParams()
    excerpt, _ = truncate_to_context(text, EXCERPT_WORDS)
    prompt = render_prompt(
        template,
        {
            "metadata": meta.rendered_block(),
            "initial_summary": initial.text,
            "article_excerpt": excerpt,
        },
    )
    reply = _call(gw, prompt, StageTag.ENHANCED_SUMMARY, params)
    if not reply.strip():
        raise MalformedResponse(f"empty enhanced reply for document {doc.doc_id}")
    return SummaryRecord(
        doc_id=doc.doc_id,
        stage=SummaryStage.ENHANCED,
        text=reply,
        prompt_hash=sha256_hex(prompt),
        params=params,
        created_at=utc_now_iso(),
    )


def run_chain(
    doc: DocumentRecord,
    templates: dict[str, PromptTemplate],
    gw: CompletionGateway,
    store: JsonlStore | None = None,
    params: GenerationParams | None = None,
) -> ChainResult:
    """Run the three stages strictly in order and persist them together.

    Any stage failure aborts before the single store transaction, so a
    broken chain leaves no records behind.
    """
    initial = initial_summary(doc, gw, templates["initial_summary"], params)
    meta = extract_metadata(doc, gw, templates["metadata_extraction"], params)
    enhanced = enhanced_summary(doc, initial, meta, templates["enhanced_summary"], gw, params)

    source_digest = sha256_hex(doc.filtered_text)
    # Rendering is pure, so re-rendering the metadata prompt here gives
    # exactly the string extract_metadata sent.
    metadata_prompt = render_prompt(
        templates["metadata_extraction"], {"article": doc.filtered_text}
    )
    trace = ChainTrace(
        doc_id=doc.doc_id,
        steps=(
            ChainStep(
                stage_tag=StageTag.INITIAL_SUMMARY,
                input_digest=source_digest,
                context_digest=initial.prompt_hash,
                output_digest=sha256_hex(initial.text),
            ),
            ChainStep(
                stage_tag=StageTag.METADATA_EXTRACTION,
                input_digest=source_digest,
                context_digest=sha256_hex(metadata_prompt),
                output_digest=sha256_hex(meta.rendered_block()),
            ),
            ChainStep(
                stage_tag=StageTag.ENHANCED_SUMMARY,
                input_digest=sha256_hex(initial.text),
                context_digest=enhanced.prompt_hash,
                output_digest=sha256_hex(enhanced.text),
            ),
        ),
    )
    trace.verify()

    if store is not None:
        store.put_all(
            [
                (SUMMARIES, f"{doc.doc_id}:initial", initial.to_record()),
                (METADATA, doc.doc_id, meta.to_record(doc.doc_id)),
                (SUMMARIES, f"{doc.doc_id}:enhanced", enhanced.to_record()),
                (TRACES, doc.doc_id, trace.to_record()),
            ]
        )
    return ChainResult(initial=initial, metadata=meta, enhanced=enhanced, trace=trace)
