"""Document ingestion: extraction, sentence segmentation, English filtering.

The filter keeps sentences whose English character ratio strictly exceeds
``ENGLISH_RATIO_THRESHOLD``. English characters are ASCII letters and
digits; the denominator counts non-whitespace Unicode scalars, so spacing
conventions never move a sentence across the threshold.
"""

from __future__ import annotations

import string
from dataclasses import dataclass, field
from enum import Enum
from pathlib import Path

from . import pdftext
from .errors import EmptyExtraction, MetadataIncomplete, UnreadableDocument
from .hashing import short_digest

ENGLISH_RATIO_THRESHOLD = 0.7

_ENGLISH_CHARS = frozenset(string.ascii_letters + string.digits)
_ASCII_TERMINATORS = frozenset(".!?")
_FULLWIDTH_TERMINATORS = frozenset("。！？")


class ExtractionBackend(str, Enum):
    LAYOUT_AWARE = "layout_aware"
    SIMPLE_STREAM = "simple_stream"
    PASSTHROUGH = "passthrough"


class FormatHint(str, Enum):
    PDF = "pdf"
    PLAIN_TEXT = "plain_text"


@dataclass
class RawDocument:
    doc_id: str
    source_path: str
    payload: bytes | str
    format_hint: FormatHint

    def __post_init__(self) -> None:
        if not self.doc_id:
            raise ValueError("doc_id must be non-empty")


@dataclass
class ExtractedDocument:
    doc_id: str
    text: str
    extraction_backend: ExtractionBackend
    char_count: int
    extraction_warnings: list[str] = field(default_factory=list)

    def __post_init__(self) -> None:
        if self.char_count != len(self.text):
            raise ValueError("char_count must equal the text's scalar count")


@dataclass
class Sentence:
    index: int
    text: str
    english_ratio: float | None = None
    retained: bool | None = None


@dataclass(frozen=True)
class FilterStats:
    total: int
    retained: int
    dropped: int
    mean_ratio: float


@dataclass
class DocumentRecord:
    doc_id: str
    filtered_text: str
    sentences: list[Sentence]
    ingest_metadata: dict


def extract_text(
    doc: RawDocument, backend: ExtractionBackend = ExtractionBackend.LAYOUT_AWARE
) -> ExtractedDocument:
    """Extract text from *doc* with the given backend, preserving character order."""
    if backend is ExtractionBackend.PASSTHROUGH and doc.format_hint is not FormatHint.PLAIN_TEXT:
        raise ValueError("passthrough backend requires a plain_text format hint")
    if not doc.payload:
        raise UnreadableDocument(f"{doc.doc_id}: empty payload")

    warnings: list[str] = []
    if backend is ExtractionBackend.PASSTHROUGH:
        if isinstance(doc.payload, bytes):
            try:
                text = doc.payload.decode("utf-8")
            except UnicodeDecodeError as exc:
                raise UnreadableDocument(f"{doc.doc_id}: not valid UTF-8 ({exc})") from exc
        else:
            text = doc.payload
    else:
        if not isinstance(doc.payload, bytes):
            raise UnreadableDocument(f"{doc.doc_id}: PDF payload must be bytes")
        try:
            text, warnings = pdftext.extract_pdf_text(
                doc.payload, layout=backend is ExtractionBackend.LAYOUT_AWARE
            )
        except ValueError as exc:
            raise UnreadableDocument(f"{doc.doc_id}: {exc}") from exc

    if not text:
        raise EmptyExtraction(f"{doc.doc_id}: parsing recovered zero characters")
    return ExtractedDocument(
        doc_id=doc.doc_id,
        text=text,
        extraction_backend=backend,
        char_count=len(text),
        extraction_warnings=warnings,
    )


def segment_sentences(text: str) -> list[Sentence]:
    """Split *text* into ordered sentences; ratios are left unset.

    A sentence ends at ``.``/``!``/``?`` followed by whitespace or end of
    text, at any fullwidth terminator ``。！？`` (CJK text carries no
    spaces), or at a newline.
    """
    sentences: list[Sentence] = []
    buffer: list[str] = []

    def flush() -> None:
        candidate = "".join(buffer).strip()
        buffer.clear()
        if candidate:
            sentences.append(Sentence(index=len(sentences), text=candidate))

    for i, ch in enumerate(text):
        if ch == "\n":
            flush()
            continue
        buffer.append(ch)
        if ch in _FULLWIDTH_TERMINATORS:
            flush()
        elif ch in _ASCII_TERMINATORS:
            nxt = text[i + 1] if i + 1 < len(text) else ""
            if not nxt or nxt.isspace():
                flush()
    flush()
    return sentences


def english_char_ratio(sentence: str) -> float:
    """Share of ASCII letters/digits among non-whitespace scalars; 0 if none."""
    total = 0
    english = 0
    for ch in sentence:
        if ch.isspace():
            continue
        total += 1
        if ch in _ENGLISH_CHARS:
            english += 1
    return english / total if total else 0.0


def score_sentences(sentences: list[Sentence]) -> list[Sentence]:
    """Fill in each sentence's English ratio (in place) and return the list."""
    for sentence in sentences:
        sentence.english_ratio = english_char_ratio(sentence.text)
    return sentences


def filter_english(sentences: list[Sentence]) -> tuple[list[Sentence], FilterStats]:
    """Retain sentences whose ratio strictly exceeds the 0.7 threshold."""
    for sentence in sentences:
        if sentence.english_ratio is None:
            raise ValueError(f"sentence {sentence.index} has no ratio; score it first")
        sentence.retained = sentence.english_ratio > ENGLISH_RATIO_THRESHOLD
    retained = [s for s in sentences if s.retained]
    mean_ratio = (
        sum(s.english_ratio for s in sentences) / len(sentences) if sentences else 0.0
    )
    stats = FilterStats(
        total=len(sentences),
        retained=len(retained),
        dropped=len(sentences) - len(retained),
        mean_ratio=mean_ratio,
    )
    return retained, stats


def build_document_record(
    ext: ExtractedDocument,
    sentences: list[Sentence],
    stats: FilterStats,
    *,
    source_file: str,
    file_size_bytes: int | None,
) -> DocumentRecord:
    """Assemble the persistent record for one ingested document.

    *sentences* are the scored sentences (retained flag set); the record
    keeps all of them, and ``filtered_text`` joins the retained ones with
    single spaces in index order.
    """
    if not source_file:
        raise MetadataIncomplete(f"{ext.doc_id}: source file name unavailable")
    if file_size_bytes is None:
        raise MetadataIncomplete(f"{ext.doc_id}: file size unavailable")
    retained = sorted((s for s in sentences if s.retained), key=lambda s: s.index)
    return DocumentRecord(
        doc_id=ext.doc_id,
        filtered_text=" ".join(s.text for s in retained),
        sentences=sentences,
        ingest_metadata={
            "source_file": source_file,
            "extraction_method": ext.extraction_backend.value,
            "file_size_bytes": file_size_bytes,
            "text_length_chars": ext.char_count,
            "language_filter_applied": True,
        },
    )


def derive_doc_id(source_file: str, extracted_text: str) -> str:
    """Stable id from the source filename plus an extracted-text prefix."""
    return short_digest(f"{Path(source_file).name}\n{extracted_text[:2048]}")


def document_record_from_extraction(
    ext: ExtractedDocument, *, source_file: str, file_size_bytes: int | None
) -> DocumentRecord:
    """Segment, score, filter, and package one extraction."""
    sentences = score_sentences(segment_sentences(ext.text))
    _, stats = filter_english(sentences)
    return build_document_record(
        ext, sentences, stats, source_file=source_file, file_size_bytes=file_size_bytes
    )
