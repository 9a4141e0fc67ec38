"""Keyword personalization: relevance screening, insights, and three actions.

Two selection strategies exist side by side. Binary screening prompts the
gateway once per article, so each decision depends only on that article
and the keyword; ranking presents the whole collection in one prompt and
parses the replied index list. Insight and action synthesis run over the
selected articles, and the three-action constraint is enforced with one
corrective re-prompt before giving up.
"""

from __future__ import annotations

import json
import logging
import re
from dataclasses import dataclass, field

from .errors import (
    ActionCountViolation,
    InsightParseFailure,
    NoRelevantArticles,
    UnparseableDecision,
    UnparseableSelection,
)
from .gateway import (
    CompletionGateway,
    CompletionRequest,
    GenerationParams,
    StageTag,
)
from .metrics import Strategy
from .prompts import PromptTemplate, render_prompt
from .store import REPORTS, JsonlStore
from .summarize import utc_now_iso

logger = logging.getLogger(__name__)

ACTION_COUNT = 3

YES = "YES"
NO = "NO"

_DECISION_RE = re.compile(r"\b(yes|no)\b", re.IGNORECASE)
_INTEGER_RE = re.compile(r"\d+")
_ITEM_RE = re.compile(r"^\s*(?:\d+[.):]|[-*•])\s*(.*\S)\s*$")

INSIGHT_FIELDS = ("trend", "financial_implication", "risk_or_opportunity")
_LABEL_RES = {
    "trend": re.compile(r"^\W*trend\s*[:：]\s*(.+)$", re.IGNORECASE),
    "financial_implication": re.compile(
        r"^\W*financial[ _]implications?\s*[:：]\s*(.+)$", re.IGNORECASE
    ),
    "risk_or_opportunity": re.compile(r"^\W*risk[^:：]*[:：]\s*(.+)$", re.IGNORECASE),
}


@dataclass(frozen=True)
class Keyword:
    text: str
    normalized: str = field(init=False)

    def __post_init__(self) -> None:
        normalized = self.text.strip().lower()
        if not normalized:
            raise ValueError("keyword must be non-empty after trimming")
        object.__setattr__(self, "normalized", normalized)


@dataclass(frozen=True)
class ArticleView:
    """What the screening prompts see: the enhanced summary plus metadata."""

    doc_id: str
    summary_text: str
    metadata_block: str

    def __post_init__(self) -> None:
        if not self.doc_id or not self.summary_text:
            raise ValueError("article view needs a doc_id and a summary")


@dataclass(frozen=True)
class RelevanceDecision:
    doc_id: str
    keyword: str
    decision: str
    raw_reply: str
    strategy: Strategy

    def __post_init__(self) -> None:
        if self.decision not in (YES, NO):
            raise ValueError(f"decision must be YES or NO, got {self.decision!r}")

    def to_record(self) -> dict:
        return {
            "doc_id": self.doc_id,
            "keyword": self.keyword,
            "decision": self.decision,
            "raw_reply": self.raw_reply,
            "strategy": self.strategy.value,
        }


@dataclass(frozen=True)
class Insight:
    trend: str
    financial_implication: str
    risk_or_opportunity: str

    def __post_init__(self) -> None:
        for name in INSIGHT_FIELDS:
            if not getattr(self, name).strip():
                raise ValueError(f"insight field {name} must be non-empty")

    def to_record(self) -> dict:
        return {name: getattr(self, name) for name in INSIGHT_FIELDS}


@dataclass(frozen=True)
class InsightSet:
    keyword: str
    insights: tuple[Insight, ...]
    source_doc_ids: tuple[str, ...]

    def to_record(self) -> dict:
        return {
            "keyword": self.keyword,
            "insights": [i.to_record() for i in self.insights],
            "source_doc_ids": list(self.source_doc_ids),
        }


@dataclass(frozen=True)
class PersonalizedReport:
    report_id: str
    keyword: str
    strategy: Strategy
    decisions: tuple[RelevanceDecision, ...]
    insights: InsightSet
    actions: tuple[str, ...]
    action_retries: int
    created_at: str

    def __post_init__(self) -> None:
        if len(self.actions) != ACTION_COUNT:
            raise ValueError(f"a report carries exactly {ACTION_COUNT} actions")
        if any(not a.strip() for a in self.actions):
            raise ValueError("actions must be non-empty")
        yes_ids = {d.doc_id for d in self.decisions if d.decision == YES}
        stray = set(self.insights.source_doc_ids) - yes_ids
        if stray:
            raise ValueError(f"insights cite non-relevant documents: {sorted(stray)}")

    def to_record(self) -> dict:
        return {
            "report_id": self.report_id,
            "keyword": self.keyword,
            "strategy": self.strategy.value,
            "decisions": [d.to_record() for d in self.decisions],
            "insights": self.insights.to_record(),
            "actions": list(self.actions),
            "action_retries": self.action_retries,
            "created_at": self.created_at,
        }


def report_from_record(record: dict) -> PersonalizedReport:
    """Rebuild a report from its stored form; inverse of to_record."""
    decisions = tuple(
        RelevanceDecision(
            doc_id=row["doc_id"],
            keyword=row["keyword"],
            decision=row["decision"],
            raw_reply=row["raw_reply"],
            strategy=Strategy(row["strategy"]),
        )
        for row in record["decisions"]
    )
    stored = record["insights"]
    insights = InsightSet(
        keyword=stored["keyword"],
        insights=tuple(Insight(**row) for row in stored["insights"]),
        source_doc_ids=tuple(stored["source_doc_ids"]),
    )
    return PersonalizedReport(
        report_id=record["report_id"],
        keyword=record["keyword"],
        strategy=Strategy(record["strategy"]),
        decisions=decisions,
        insights=insights,
        actions=tuple(record["actions"]),
        action_retries=record["action_retries"],
        created_at=record["created_at"],
    )


def parse_decision(reply: str) -> str:
    """First standalone YES/NO token, case-insensitive; anything else errors."""
    match = _DECISION_RE.search(reply)
    if not match:
        raise UnparseableDecision(f"reply contains neither YES nor NO: {reply!r}")
    return match.group(1).upper()


def classify_relevance(
    article: ArticleView,
    keyword: Keyword,
    gw: CompletionGateway,
    template: PromptTemplate,
    params: GenerationParams | None = None,
) -> RelevanceDecision:
    params = params or GenerationParams()
    prompt = render_prompt(
        template,
        {
            "keyword": keyword.normalized,
            "metadata": article.metadata_block,
            "summary": article.summary_text,
        },
    )
    reply = gw.complete(
        CompletionRequest(prompt=prompt, params=params, stage_tag=StageTag.RELEVANCE)
    ).text
    return RelevanceDecision(
        doc_id=article.doc_id,
        keyword=keyword.normalized,
        decision=parse_decision(reply),
        raw_reply=reply,
        strategy=Strategy.BINARY,
    )


def _numbered_summaries(articles: list[ArticleView]) -> str:
    return "\n".join(
        f"{i}. {article.summary_text}" for i, article in enumerate(articles, start=1)
    )


def rank_select(
    articles: list[ArticleView],
    keyword: Keyword,
    gw: CompletionGateway,
    template: PromptTemplate,
    params: GenerationParams | None = None,
) -> tuple[list[str], str]:
    """One call over the whole collection; returns (selected doc_ids, raw reply)."""
    if not articles:
        raise ValueError("rank_select needs at least one article")
    ids = [a.doc_id for a in articles]
    if len(set(ids)) != len(ids):
        raise ValueError("article identifiers must be unique")
    params = params or GenerationParams()
    prompt = render_prompt(
        template,
        {"keyword": keyword.normalized, "numbered_summaries": _numbered_summaries(articles)},
    )
    reply = gw.complete(
        CompletionRequest(prompt=prompt, params=params, stage_tag=StageTag.RANKING)
    ).text
    indices = [int(n) for n in _INTEGER_RE.findall(reply)]
    if not indices:
        raise UnparseableSelection(f"no article numbers in reply: {reply!r}")
    selected: list[str] = []
    for index in indices:
        if not 1 <= index <= len(articles):
            logger.warning("ranking reply cites article %d, outside 1..%d", index, len(articles))
            continue
        doc_id = articles[index - 1].doc_id
        if doc_id not in selected:
            selected.append(doc_id)
    return selected, reply


def _triples_from_json(reply: str) -> list[Insight] | None:
    block = re.search(r"\[.*\]", reply, flags=re.DOTALL)
    if not block:
        return None
    try:
        payload = json.loads(block.group())
    except ValueError:
        return None
    if not isinstance(payload, list) or not payload:
        return None
    triples = []
    for entry in payload:
        if not isinstance(entry, dict):
            return None
        values = {name: entry.get(name) for name in INSIGHT_FIELDS}
        if not all(isinstance(v, str) and v.strip() for v in values.values()):
            return None
        triples.append(Insight(**{k: v.strip() for k, v in values.items()}))
    return triples


def _triples_from_labeled_lines(reply: str) -> list[Insight] | None:
    triples: list[Insight] = []
    current: dict[str, str] = {}
    for line in reply.splitlines():
        for name, pattern in _LABEL_RES.items():
            match = pattern.match(line)
            if match:
                if name == "trend" and current:
                    current = {}
                current[name] = match.group(1).strip()
                break
        if len(current) == len(INSIGHT_FIELDS):
            triples.append(Insight(**current))
            current = {}
    return triples or None


def parse_insight_triples(reply: str) -> list[Insight]:
    triples = _triples_from_json(reply) or _triples_from_labeled_lines(reply)
    if not triples:
        raise InsightParseFailure(f"no insight triples recognized in reply: {reply!r}")
    return triples


def generate_insights(
    keyword: Keyword,
    relevant: list[ArticleView],
    gw: CompletionGateway,
    template: PromptTemplate,
    params: GenerationParams | None = None,
) -> InsightSet:
    if not relevant:
        raise NoRelevantArticles(f"no relevant articles for keyword {keyword.normalized!r}")
    params = params or GenerationParams()
    summaries = "\n\n".join(a.summary_text for a in relevant)
    prompt = render_prompt(
        template, {"keyword": keyword.normalized, "summaries": summaries}
    )
    reply = gw.complete(
        CompletionRequest(prompt=prompt, params=params, stage_tag=StageTag.INSIGHTS)
    ).text
    return InsightSet(
        keyword=keyword.normalized,
        insights=tuple(parse_insight_triples(reply)),
        source_doc_ids=tuple(a.doc_id for a in relevant),
    )


def parse_enumerated_items(reply: str) -> list[str]:
    return [
        match.group(1)
        for line in reply.splitlines()
        if (match := _ITEM_RE.match(line))
    ]


def _insight_lines(insights: InsightSet) -> str:
    lines = []
    for insight in insights.insights:
        lines.append(
            f"- Trend: {insight.trend}\n"
            f"  Financial implication: {insight.financial_implication}\n"
            f"  Risk or opportunity: {insight.risk_or_opportunity}"
        )
    return "\n".join(lines)


def generate_actions(
    keyword: Keyword,
    insights: InsightSet,
    gw: CompletionGateway,
    templates: dict[str, PromptTemplate],
    params: GenerationParams | None = None,
) -> tuple[tuple[str, ...], int]:
    """Returns (exactly three actions, retry count 0 or 1)."""
    if not insights.insights:
        raise NoRelevantArticles("cannot derive actions without insights")
    params = params or GenerationParams()
    prompt = render_prompt(
        templates["actions"],
        {"keyword": keyword.normalized, "insights": _insight_lines(insights)},
    )
    reply = gw.complete(
        CompletionRequest(prompt=prompt, params=params, stage_tag=StageTag.ACTIONS)
    ).text
    items = parse_enumerated_items(reply)
    if len(items) == ACTION_COUNT:
        return tuple(items), 0

    retry_prompt = render_prompt(
        templates["actions_retry"],
        {"keyword": keyword.normalized, "previous_reply": reply},
    )
    retry_reply = gw.complete(
        CompletionRequest(prompt=retry_prompt, params=params, stage_tag=StageTag.ACTIONS)
    ).text
    items = parse_enumerated_items(retry_reply)
    if len(items) == ACTION_COUNT:
        return tuple(items), 1
    raise ActionCountViolation(
        f"expected {ACTION_COUNT} actions, got {len(items)} after one retry"
    )


def _next_report_id(store: JsonlStore | None, keyword: Keyword, strategy: Strategy) -> str:
    seq = 1
    if store is not None:
        seq += len(store.list(REPORTS, keyword=keyword.normalized, strategy=strategy.value))
    slug = re.sub(r"\s+", "-", keyword.normalized)
    return f"{slug}-{strategy.value}-{seq:03d}"


def build_report(
    keyword: Keyword,
    corpus: list[ArticleView],
    gw: CompletionGateway,
    strategy: Strategy = Strategy.BINARY,
    templates: dict[str, PromptTemplate] | None = None,
    store: JsonlStore | None = None,
    params: GenerationParams | None = None,
) -> PersonalizedReport:
    """Full stage-4 run: screen, synthesize insights, derive three actions.

    The finished report is persisted in one write; any stage failure
    surfaces before anything is stored.
    """
    if templates is None:
        from .prompts import load_templates

        templates = load_templates()
    if not corpus:
        raise NoRelevantArticles("corpus has no summarized articles")

    if strategy is Strategy.BINARY:
        decisions = tuple(
            classify_relevance(article, keyword, gw, templates["relevance"], params)
            for article in corpus
        )
    else:
        selected, raw_reply = rank_select(corpus, keyword, gw, templates["ranking"], params)
        chosen = set(selected)
        decisions = tuple(
            RelevanceDecision(
                doc_id=article.doc_id,
                keyword=keyword.normalized,
                decision=YES if article.doc_id in chosen else NO,
                raw_reply=raw_reply,
                strategy=Strategy.RANKING,
            )
            for article in corpus
        )

    relevant = [a for a in corpus if any(
        d.doc_id == a.doc_id and d.decision == YES for d in decisions
    )]
    if not relevant:
        raise NoRelevantArticles(
            f"no article judged relevant to {keyword.normalized!r}"
        )

    insights = generate_insights(keyword, relevant, gw, templates["insights"], params)
    actions, retries = generate_actions(keyword, insights, gw, templates, params)

    report = PersonalizedReport(
        report_id=_next_report_id(store, keyword, strategy),
        keyword=keyword.normalized,
        strategy=strategy,
        decisions=decisions,
        insights=insights,
        actions=actions,
        action_retries=retries,
        created_at=utc_now_iso(),
    )
    if store is not None:
        store.put(REPORTS, report.report_id, report.to_record())
    return report


def render_report_text(report: PersonalizedReport) -> str:
    """Plain-text rendering: header, relevant list, insights, three actions."""
    lines = [f"Keyword: {report.keyword}", f"Strategy: {report.strategy.value}", ""]
    lines.append("Relevant articles:")
    yes = [d for d in report.decisions if d.decision == YES]
    for decision in yes:
        lines.append(f"  [YES] {decision.doc_id}")
    for decision in report.decisions:
        if decision.decision == NO:
            lines.append(f"  [NO]  {decision.doc_id}")
    lines.append("")
    lines.append("Insights:")
    for i, insight in enumerate(report.insights.insights, start=1):
        lines.append(f"  {i}. Trend: {insight.trend}")
        lines.append(f"     Financial implication: {insight.financial_implication}")
        lines.append(f"     Risk or opportunity: {insight.risk_or_opportunity}")
    lines.append("")
    lines.append("Recommended actions:")
    for i, action in enumerate(report.actions, start=1):
        lines.append(f"  {i}. {action}")
    return "\n".join(lines) + "\n"
