"""Command-line surface: ingest, summarize, query, eval, serve, export-report.

Exit codes: 0 success, 1 partial failure (some units failed or no result),
2 fatal (bad configuration, nothing processed, unexpected error).
"""

from __future__ import annotations

import argparse
import json
import os
import sys
from pathlib import Path

import uvicorn

from .api import create_app
from .errors import (
    FinbriefError,
    GatewayConfigError,
    NoRelevantArticles,
    NothingIngested,
)
from .gateway import (
    ENV_API_KEY,
    ENV_BASE_URL,
    ENV_MODEL,
    ScriptedMockGateway,
    gateway_from_env,
    load_mock_script,
)
from .ingest import ExtractionBackend
from .metrics import Strategy
from .personalize import render_report_text, report_from_record
from .service import NewsEngine

EXIT_OK = 0
EXIT_PARTIAL = 1
EXIT_FATAL = 2


def _fail(message: str) -> int:
    print(f"error: {message}", file=sys.stderr)
    return EXIT_FATAL


def _build_gateway(args, required: bool):
    """Mock script wins; otherwise the live endpoint from env plus flag overrides.

    Verbs that never call the model get an inert mock so they work without
    any gateway configuration at all.
    """
    if args.mock_script:
        return load_mock_script(args.mock_script)
    if not required:
        return ScriptedMockGateway(())
    env = dict(os.environ)
    for flag, name in (
        ("llm_base_url", ENV_BASE_URL),
        ("llm_model", ENV_MODEL),
        ("llm_api_key", ENV_API_KEY),
    ):
        value = getattr(args, flag, None)
        if value:
            env[name] = value
    return gateway_from_env(env)


def _engine(args, gateway_required: bool) -> NewsEngine:
    return NewsEngine(args.data_dir, _build_gateway(args, gateway_required))


def cmd_ingest(args) -> int:
    engine = _engine(args, gateway_required=False)
    outcome = engine.ingest_dir(args.directory, ExtractionBackend(args.backend))
    for skip in outcome.skipped:
        print(f"skipped {skip['file']}: {skip['reason']}", file=sys.stderr)
    print(f"ingested {len(outcome.written)} documents into {args.data_dir}")
    if outcome.written:
        return EXIT_OK
    if outcome.skipped and all(s["reason"] == "already ingested" for s in outcome.skipped):
        return EXIT_OK  # idempotent re-run
    return _fail("zero files ingested")


def cmd_summarize(args) -> int:
    engine = _engine(args, gateway_required=True)
    outcome = engine.summarize_all()
    for failure in outcome.failed:
        print(f"failed {failure['doc_id']}: {failure['error']}", file=sys.stderr)
    print(
        f"run {outcome.run_id}: chained {len(outcome.chained)}, "
        f"skipped {len(outcome.skipped)}, failed {len(outcome.failed)}"
    )
    if outcome.failed and not outcome.chained and not outcome.skipped:
        return EXIT_FATAL
    if outcome.failed:
        return EXIT_PARTIAL
    return EXIT_OK


def cmd_query(args) -> int:
    engine = _engine(args, gateway_required=True)
    try:
        report = engine.query(args.keyword, Strategy(args.strategy))
    except NoRelevantArticles as exc:
        print(f"no relevant articles: {exc}", file=sys.stderr)
        return EXIT_PARTIAL
    if args.json:
        print(json.dumps(report.to_record(), indent=2, ensure_ascii=False))
    else:
        print(render_report_text(report), end="")
    return EXIT_OK


def _read_jsonl(path: str) -> list[dict]:
    rows = []
    for line in Path(path).read_text(encoding="utf-8").splitlines():
        if line.strip():
            rows.append(json.loads(line))
    return rows


def cmd_eval(args) -> int:
    engine = _engine(args, gateway_required=False)
    summary_pairs = _read_jsonl(args.summary_pairs) if args.summary_pairs else None
    annotations = _read_jsonl(args.annotations) if args.annotations else None
    predictions = (
        json.loads(Path(args.predictions).read_text(encoding="utf-8"))
        if args.predictions
        else None
    )
    report = engine.evaluate(
        summary_pairs=summary_pairs, annotations=annotations, predictions=predictions
    )
    payload = report.to_payload()
    if args.json:
        print(json.dumps(payload, indent=2, ensure_ascii=False))
    else:
        for table in payload["rendered_tables"].values():
            print(table)
    return EXIT_OK


def cmd_export_report(args) -> int:
    engine = _engine(args, gateway_required=False)
    record = engine.report(args.report_id)
    print(render_report_text(report_from_record(record)), end="")
    return EXIT_OK


def cmd_serve(args) -> int:
    engine = _engine(args, gateway_required=True)
    uvicorn.run(create_app(engine), host=args.host, port=args.port)
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="finbrief",
        description="Personalized financial news briefings over a local JSONL store.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    def common(p: argparse.ArgumentParser) -> None:
        p.add_argument("--data-dir", required=True, help="directory holding the JSONL store")
        p.add_argument(
            "--mock-script",
            help="path to a scripted-gateway JSON file (replaces the live endpoint)",
        )
        p.add_argument("--llm-base-url", help=f"override {ENV_BASE_URL}")
        p.add_argument("--llm-model", help=f"override {ENV_MODEL}")
        p.add_argument("--llm-api-key", help=f"override {ENV_API_KEY}")

    p = sub.add_parser("ingest", help="extract, filter, and store articles from a directory")
    common(p)
    p.add_argument("directory", help="folder of .txt or .pdf articles")
    p.add_argument(
        "--backend",
        choices=[ExtractionBackend.LAYOUT_AWARE.value, ExtractionBackend.SIMPLE_STREAM.value],
        default=ExtractionBackend.LAYOUT_AWARE.value,
        help="PDF text extraction strategy",
    )
    p.set_defaults(func=cmd_ingest)

    p = sub.add_parser("summarize", help="run the summary chain over stored documents")
    common(p)
    p.set_defaults(func=cmd_summarize)

    p = sub.add_parser("query", help="build a personalized report for a keyword")
    common(p)
    p.add_argument("keyword")
    p.add_argument(
        "--strategy",
        choices=[s.value for s in Strategy],
        default=Strategy.BINARY.value,
        help="relevance screening strategy",
    )
    p.add_argument("--json", action="store_true", help="print the raw report record")
    p.set_defaults(func=cmd_query)

    p = sub.add_parser("eval", help="score summary pairs and/or selection predictions")
    common(p)
    p.add_argument("--summary-pairs", help="JSONL file of summary pairs")
    p.add_argument("--annotations", help="JSONL file of relevance annotations")
    p.add_argument(
        "--predictions",
        help="JSON file mapping strategy name to prediction rows "
        "(defaults to predictions from stored reports)",
    )
    p.add_argument("--json", action="store_true", help="print the full evaluation payload")
    p.set_defaults(func=cmd_eval)

    p = sub.add_parser("export-report", help="print a stored report as text")
    common(p)
    p.add_argument("report_id")
    p.set_defaults(func=cmd_export_report)

    p = sub.add_parser("serve", help="run the HTTP API")
    common(p)
    p.add_argument("--host", default="127.0.0.1")
    p.add_argument("--port", type=int, default=8765)
    p.set_defaults(func=cmd_serve)

    return parser


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except GatewayConfigError as exc:
        return _fail(f"gateway configuration: {exc}")
    except NothingIngested as exc:
        return _fail(str(exc))
    except (FinbriefError, ValueError, OSError) as exc:
        return _fail(str(exc))


if __name__ == "__main__":
    sys.exit(main())
