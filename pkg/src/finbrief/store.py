"""Durable engine state: one JSONL file per record kind in a data directory.

Writes go through a temp-file-then-rename protocol so a crash at any
point leaves either the previous file or the new one, never a file with a
partial line. A single store-level mutex serializes writers; records
handed out by reads are copies, so already-flushed data can be read
concurrently without coordination.
"""

from __future__ import annotations

import copy
import json
import os
import tempfile
import threading
from dataclasses import dataclass
from pathlib import Path

from .errors import DuplicateId, NotFound, StorageFailure

FORMAT_VERSION = 1

DOCUMENTS = "documents"
SUMMARIES = "summaries"
METADATA = "metadata"
TRACES = "traces"
REPORTS = "reports"
ANNOTATIONS = "annotations"
MANIFESTS = "manifests"

KINDS = (DOCUMENTS, SUMMARIES, METADATA, TRACES, REPORTS, ANNOTATIONS, MANIFESTS)


@dataclass(frozen=True)
class RunManifest:
    run_id: str
    created_at: str
    config_digest: str
    template_ids: tuple[str, ...]
    gateway_backend: str
    doc_ids: tuple[str, ...]

    def to_record(self) -> dict:
        return {
            "run_id": self.run_id,
            "created_at": self.created_at,
            "config_digest": self.config_digest,
            "template_ids": list(self.template_ids),
            "gateway_backend": self.gateway_backend,
            "doc_ids": list(self.doc_ids),
        }


def stored_id(kind: str, key: str) -> str:
    return f"{kind}:{key}"


def split_stored_id(record_id: str) -> tuple[str, str]:
    kind, sep, key = record_id.partition(":")
    if not sep or kind not in KINDS or not key:
        raise NotFound(f"malformed record id {record_id!r}")
    return kind, key


class JsonlStore:
    def __init__(self, data_dir: str | Path):
        self._dir = Path(data_dir)
        try:
            self._dir.mkdir(parents=True, exist_ok=True)
        except OSError as exc:
            raise StorageFailure(f"cannot create data directory {data_dir}: {exc}") from exc
        self._lock = threading.RLock()
        # kind -> {key -> record}; dicts preserve insertion order, which
        # mirrors file line order.
        self._records: dict[str, dict[str, dict]] = {kind: {} for kind in KINDS}
        self._load()

    @property
    def data_dir(self) -> Path:
        return self._dir

    def _path(self, kind: str) -> Path:
        return self._dir / f"{kind}.jsonl"

    def _load(self) -> None:
        for kind in KINDS:
            path = self._path(kind)
            if not path.exists():
                continue
            try:
                lines = path.read_text(encoding="utf-8").splitlines()
            except OSError as exc:
                raise StorageFailure(f"cannot read {path}: {exc}") from exc
            for lineno, line in enumerate(lines, start=1):
                if not line.strip():
                    continue
                try:
                    envelope = json.loads(line)
                    key = envelope["key"]
                    record = envelope["record"]
                except (ValueError, KeyError, TypeError) as exc:
                    raise StorageFailure(f"{path}:{lineno}: corrupt line: {exc}") from exc
                self._records[kind][key] = record

    def _check_kind(self, kind: str) -> None:
        if kind not in KINDS:
            raise StorageFailure(f"unknown record kind {kind!r}")

    def _check_references(self, kind: str, record: dict) -> None:
        # Reports must only cite documents that are already stored.
        if kind != REPORTS:
            return
        cited = {d["doc_id"] for d in record.get("decisions", [])}
        cited.update(record.get("insights", {}).get("source_doc_ids", []))
        missing = sorted(c for c in cited if c not in self._records[DOCUMENTS])
        if missing:
            raise StorageFailure(f"report cites unknown documents: {', '.join(missing)}")

    def _flush(self, kind: str) -> None:
        """Rewrite one kind file atomically: temp file, fsync, rename."""
        path = self._path(kind)
        payload = "".join(
            json.dumps(
                {"version": FORMAT_VERSION, "kind": kind, "key": key, "record": record},
                ensure_ascii=False,
                sort_keys=True,
            )
            + "\n"
            for key, record in self._records[kind].items()
        )
        try:
            fd, tmp_name = tempfile.mkstemp(dir=self._dir, prefix=f".{kind}-", suffix=".tmp")
            try:
                with os.fdopen(fd, "w", encoding="utf-8") as handle:
                    handle.write(payload)
                    handle.flush()
                    os.fsync(handle.fileno())
                os.replace(tmp_name, path)
            except BaseException:
                if os.path.exists(tmp_name):
                    os.unlink(tmp_name)
                raise
        except OSError as exc:
            raise StorageFailure(f"cannot write {path}: {exc}") from exc

    def put(self, kind: str, key: str, record: dict) -> str:
        return self.put_all([(kind, key, record)])[0]

    def put_all(self, items: list[tuple[str, str, dict]]) -> list[str]:
        """Store several records in one writer turn.

        All items are validated (kind, duplicate key, references) before
        any file is touched, so a failed item persists nothing.
        """
        with self._lock:
            seen: set[tuple[str, str]] = set()
            for kind, key, record in items:
                self._check_kind(kind)
                if not key:
                    raise StorageFailure("record key must be non-empty")
                if key in self._records[kind] or (kind, key) in seen:
                    raise DuplicateId(stored_id(kind, key))
                seen.add((kind, key))
            for kind, key, record in items:
                self._check_references(kind, record)
            for kind, key, record in items:
                self._records[kind][key] = copy.deepcopy(record)
            for kind in {kind for kind, _, _ in items}:
                self._flush(kind)
            return [stored_id(kind, key) for kind, key, _ in items]

    def get(self, record_id: str) -> dict:
        kind, key = split_stored_id(record_id)
        with self._lock:
            try:
                return copy.deepcopy(self._records[kind][key])
            except KeyError:
                raise NotFound(record_id) from None

    def has(self, kind: str, key: str) -> bool:
        self._check_kind(kind)
        with self._lock:
            return key in self._records[kind]

    def list(self, kind: str, **filters: str) -> list[dict]:
        """Records of one kind in insertion order, filtered by field equality."""
        self._check_kind(kind)
        with self._lock:
            rows = [
                copy.deepcopy(record)
                for record in self._records[kind].values()
                if all(record.get(field) == value for field, value in filters.items())
            ]
        return rows

    def keys(self, kind: str) -> list[str]:
        self._check_kind(kind)
        with self._lock:
            return list(self._records[kind])

    def count(self, kind: str) -> int:
        return len(self.keys(kind))
