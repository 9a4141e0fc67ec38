"""The engine core shared by the CLI and the HTTP API.

Both entry points construct one NewsEngine and call the same methods, so
identical inputs produce identical persisted records regardless of which
surface they arrive through. The engine owns the store, the gateway, the
template set, and the generation parameters; a digest over that
configuration stamps every run manifest.
"""

from __future__ import annotations

import json
import logging
from dataclasses import dataclass, field
from pathlib import Path

from .errors import (
    CorpusNotSummarized,
    DuplicateId,
    FinbriefError,
    NothingIngested,
)
from .gateway import CompletionGateway, GenerationParams
from .hashing import sha256_hex
from .ingest import (
    DocumentRecord,
    ExtractionBackend,
    FormatHint,
    RawDocument,
    Sentence,
    derive_doc_id,
    document_record_from_extraction,
    extract_text,
)
from .metrics import (
    RELEVANT,
    NOT_RELEVANT,
    EvaluationReport,
    Strategy,
    compare_selection_strategies,
    compare_summaries,
)
from .personalize import ArticleView, Keyword, PersonalizedReport, build_report
from .prompts import PromptTemplate, load_templates
from .store import (
    ANNOTATIONS,
    DOCUMENTS,
    MANIFESTS,
    REPORTS,
    SUMMARIES,
    TRACES,
    METADATA,
    JsonlStore,
    RunManifest,
    stored_id,
)
from .summarize import ArticleMetadata, run_chain, utc_now_iso

logger = logging.getLogger(__name__)

TITLE_EXCERPT_CHARS = 80


@dataclass
class IngestOutcome:
    written: list[str] = field(default_factory=list)
    skipped: list[dict] = field(default_factory=list)

    def to_payload(self) -> dict:
        return {"written": list(self.written), "skipped": list(self.skipped)}


@dataclass
class SummarizeOutcome:
    run_id: str
    chained: list[str]
    skipped: list[str]
    failed: list[dict]

    def to_payload(self) -> dict:
        return {
            "run_id": self.run_id,
            "chained": list(self.chained),
            "skipped": list(self.skipped),
            "failed": list(self.failed),
        }


def _document_to_record(doc: DocumentRecord) -> dict:
    return {
        "doc_id": doc.doc_id,
        "filtered_text": doc.filtered_text,
        "sentences": [
            {
                "index": s.index,
                "text": s.text,
                "english_ratio": s.english_ratio,
                "retained": s.retained,
            }
            for s in doc.sentences
        ],
        "ingest_metadata": doc.ingest_metadata,
    }


def _record_to_document(record: dict) -> DocumentRecord:
    return DocumentRecord(
        doc_id=record["doc_id"],
        filtered_text=record["filtered_text"],
        sentences=[Sentence(**s) for s in record.get("sentences", [])],
        ingest_metadata=record.get("ingest_metadata", {}),
    )


def _metadata_block(record: dict | None) -> str:
    if record is None:
        return ArticleMetadata(None, None, None, True).rendered_block()
    return ArticleMetadata(
        date=record.get("date"),
        location=record.get("location"),
        entity=record.get("entity"),
        fallback_used=record.get("fallback_used", True),
    ).rendered_block()


class NewsEngine:
    def __init__(
        self,
        data_dir: str | Path,
        gateway: CompletionGateway,
        templates: dict[str, PromptTemplate] | None = None,
        params: GenerationParams | None = None,
    ):
        self.store = JsonlStore(data_dir)
        self.gateway = gateway
        self.templates = templates or load_templates()
        self.params = params or GenerationParams()

    def config_digest(self) -> str:
        """Stable digest of everything that shapes generated content."""
        descriptor = {
            "gateway": self.gateway.config_descriptor(),
            "templates": {
                name: {
                    "template_id": t.template_id,
                    "body_digest": sha256_hex(t.body),
                    "exemplars": [
                        [e.input_excerpt, e.output_summary] for e in t.exemplars
                    ],
                }
                for name, t in sorted(self.templates.items())
            },
            "params": {
                "max_new_tokens": self.params.max_new_tokens,
                "temperature": self.params.temperature,
                "context_budget_tokens": self.params.context_budget_tokens,
            },
        }
        return sha256_hex(json.dumps(descriptor, sort_keys=True, ensure_ascii=False))

    # --- ingestion ---------------------------------------------------------

    def _ingest_raw(
        self, raw: RawDocument, backend: ExtractionBackend, file_size: int
    ) -> str:
        extracted = extract_text(raw, backend)
        extracted.doc_id = derive_doc_id(raw.source_path, extracted.text)
        record = document_record_from_extraction(
            extracted, source_file=raw.source_path, file_size_bytes=file_size
        )
        self.store.put(DOCUMENTS, record.doc_id, _document_to_record(record))
        return record.doc_id

    def ingest_dir(
        self, directory: str | Path, backend: ExtractionBackend = ExtractionBackend.LAYOUT_AWARE
    ) -> IngestOutcome:
        """One DocumentRecord per readable file; unreadable files are reported."""
        directory = Path(directory)
        if not directory.is_dir():
            raise NothingIngested(f"{directory} is not a directory")
        outcome = IngestOutcome()
        for path in sorted(p for p in directory.iterdir() if p.is_file()):
            try:
                payload = path.read_bytes()
                if path.suffix.lower() == ".pdf" or payload.startswith(b"%PDF"):
                    raw = RawDocument(
                        doc_id=path.name, source_path=path.name,
                        payload=payload, format_hint=FormatHint.PDF,
                    )
                    doc_backend = backend
                else:
                    raw = RawDocument(
                        doc_id=path.name, source_path=path.name,
                        payload=payload, format_hint=FormatHint.PLAIN_TEXT,
                    )
                    doc_backend = ExtractionBackend.PASSTHROUGH
                doc_id = self._ingest_raw(raw, doc_backend, len(payload))
            except DuplicateId:
                outcome.skipped.append({"file": path.name, "reason": "already ingested"})
            except (FinbriefError, OSError, ValueError) as exc:
                logger.warning("skipping %s: %s", path.name, exc)
                outcome.skipped.append({"file": path.name, "reason": str(exc)})
            else:
                outcome.written.append(doc_id)
        return outcome

    def ingest_texts(self, items: list[dict]) -> IngestOutcome:
        """Ingest in-memory plain-text articles: [{name, text}, ...]."""
        outcome = IngestOutcome()
        for item in items:
            name = item.get("name", "")
            try:
                if not name:
                    raise ValueError("item needs a non-empty name")
                raw = RawDocument(
                    doc_id=name, source_path=name,
                    payload=item.get("text", ""), format_hint=FormatHint.PLAIN_TEXT,
                )
                doc_id = self._ingest_raw(
                    raw, ExtractionBackend.PASSTHROUGH,
                    len(item.get("text", "").encode("utf-8")),
                )
            except DuplicateId:
                outcome.skipped.append({"file": name, "reason": "already ingested"})
            except (FinbriefError, ValueError) as exc:
                outcome.skipped.append({"file": name, "reason": str(exc)})
            else:
                outcome.written.append(doc_id)
        return outcome

    # --- summarization -----------------------------------------------------

    def summarize_all(self) -> SummarizeOutcome:
        """Chain every stored document that has no trace yet.

        Already-chained documents are skipped, which makes re-runs under
        the same configuration no-ops; per-document failures are reported
        without aborting the rest of the run.
        """
        documents = self.store.list(DOCUMENTS)
        if not documents:
            raise NothingIngested("no documents ingested; run ingest first")
        chained: list[str] = []
        skipped: list[str] = []
        failed: list[dict] = []
        for record in documents:
            doc_id = record["doc_id"]
            if self.store.has(TRACES, doc_id):
                skipped.append(doc_id)
                continue
            try:
                run_chain(
                    _record_to_document(record), self.templates, self.gateway,
                    store=self.store, params=self.params,
                )
            except FinbriefError as exc:
                logger.warning("chain failed for %s: %s", doc_id, exc)
                failed.append({"doc_id": doc_id, "error": str(exc)})
            else:
                chained.append(doc_id)

        digest = self.config_digest()
        run_id = f"run-{digest[:12]}-{self.store.count(MANIFESTS) + 1:03d}"
        manifest = RunManifest(
            run_id=run_id,
            created_at=utc_now_iso(),
            config_digest=digest,
            template_ids=tuple(t.template_id for _, t in sorted(self.templates.items())),
            gateway_backend=self.gateway.backend.value,
            doc_ids=tuple(chained),
        )
        self.store.put(MANIFESTS, run_id, manifest.to_record())
        return SummarizeOutcome(run_id=run_id, chained=chained, skipped=skipped, failed=failed)

    # --- personalization ---------------------------------------------------

    def summarized_views(self) -> list[ArticleView]:
        views = []
        for record in self.store.list(DOCUMENTS):
            doc_id = record["doc_id"]
            if not self.store.has(SUMMARIES, f"{doc_id}:enhanced"):
                continue
            summary = self.store.get(stored_id(SUMMARIES, f"{doc_id}:enhanced"))
            meta = (
                self.store.get(stored_id(METADATA, doc_id))
                if self.store.has(METADATA, doc_id)
                else None
            )
            views.append(
                ArticleView(
                    doc_id=doc_id,
                    summary_text=summary["text"],
                    metadata_block=_metadata_block(meta),
                )
            )
        return views

    def query(self, keyword_text: str, strategy: Strategy = Strategy.BINARY) -> PersonalizedReport:
        keyword = Keyword(keyword_text)
        views = self.summarized_views()
        if not views:
            raise CorpusNotSummarized("no enhanced summaries stored; run summarize first")
        return build_report(
            keyword, views, self.gateway, strategy,
            self.templates, store=self.store, params=self.params,
        )

    # --- evaluation ----------------------------------------------------------

    def _resolve_summary_pair(self, pair: dict) -> dict:
        if "candidate_enhanced" in pair or "enhanced" in pair:
            return pair
        doc_id = pair.get("doc_id")
        if not doc_id:
            raise ValueError("summary pair needs candidates, scores, or a doc_id")
        enhanced = self.store.get(stored_id(SUMMARIES, f"{doc_id}:enhanced"))
        baseline = self.store.get(stored_id(SUMMARIES, f"{doc_id}:initial"))
        return {
            "pair_id": doc_id,
            "candidate_enhanced": enhanced["text"],
            "candidate_baseline": baseline["text"],
            "reference": pair["reference"],
        }

    def _validate_annotations(self, annotations: list[dict]) -> None:
        for row in annotations:
            doc_id = row.get("doc_id")
            keyword = row.get("keyword")
            value = row.get("annotation")
            if not doc_id or not keyword or value not in (RELEVANT, NOT_RELEVANT):
                raise ValueError(f"malformed annotation row: {row!r}")
            if not self.store.has(DOCUMENTS, doc_id):
                raise ValueError(f"annotation cites unknown document {doc_id!r}")

    def _store_annotations(self, annotations: list[dict]) -> None:
        for row in annotations:
            key = f"{row['keyword']}:{row['doc_id']}"
            if not self.store.has(ANNOTATIONS, key):
                self.store.put(ANNOTATIONS, key, dict(row))

    def _predictions_from_reports(self, annotations: list[dict]) -> dict[str, list[dict]]:
        keywords = {a["keyword"] for a in annotations}
        predictions: dict[str, list[dict]] = {s.value: [] for s in Strategy}
        for report in self.store.list(REPORTS):
            if report["keyword"] not in keywords:
                continue
            for decision in report["decisions"]:
                predictions[report["strategy"]].append(
                    {
                        "doc_id": decision["doc_id"],
                        "keyword": decision["keyword"],
                        "predicted": RELEVANT if decision["decision"] == "YES" else NOT_RELEVANT,
                    }
                )
        return predictions

    def evaluate(
        self,
        summary_pairs: list[dict] | None = None,
        annotations: list[dict] | None = None,
        predictions: dict[str, list[dict]] | None = None,
    ) -> EvaluationReport:
        """Score summary quality and/or selection strategies.

        Summary pairs referencing stored documents raise NotFound for
        unknown ids; malformed annotations raise ValueError. When
        predictions are omitted they are collected from persisted reports.
        """
        summary_quality = None
        if summary_pairs:
            resolved = [self._resolve_summary_pair(p) for p in summary_pairs]
            summary_quality = compare_summaries(resolved)

        selection = None
        if annotations:
            self._validate_annotations(annotations)
            if predictions is None:
                predictions = self._predictions_from_reports(annotations)
            for strategy, rows in predictions.items():
                for row in rows:
                    if row.get("predicted") not in (RELEVANT, NOT_RELEVANT):
                        raise ValueError(f"malformed prediction row: {row!r}")
            selection = compare_selection_strategies(predictions, annotations)
            self._store_annotations(annotations)

        if summary_quality is None and selection is None:
            raise ValueError("evaluation needs summary pairs or annotations")
        return EvaluationReport(summary_quality=summary_quality, selection=selection)

    # --- retrieval -----------------------------------------------------------

    def articles(self) -> list[dict]:
        """Listing for the UI: per-document summaries and metadata."""
        rows = []
        for record in self.store.list(DOCUMENTS):
            doc_id = record["doc_id"]
            row = {
                "doc_id": doc_id,
                "source_file": record.get("ingest_metadata", {}).get("source_file"),
                "title_excerpt": record["filtered_text"][:TITLE_EXCERPT_CHARS],
            }
            for stage in ("initial", "enhanced"):
                key = f"{doc_id}:{stage}"
                row[f"{stage}_summary"] = (
                    self.store.get(stored_id(SUMMARIES, key))["text"]
                    if self.store.has(SUMMARIES, key)
                    else None
                )
            row["metadata"] = (
                self.store.get(stored_id(METADATA, doc_id))
                if self.store.has(METADATA, doc_id)
                else None
            )
            rows.append(row)
        return rows

    def report(self, report_id: str) -> dict:
        return self.store.get(stored_id(REPORTS, report_id))

    def reports(self) -> list[dict]:
        return self.store.list(REPORTS)
