"""Summary-quality and selection-strategy metrics.

BLEU and ROUGE-L are implemented from scratch so their exact variants are
pinned and checkable against brute-force oracles:

* BLEU-4, sentence level: clipped modified n-gram precisions p1..p4,
  orders with zero candidate n-grams skipped from the geometric mean,
  zero-match precisions floored at ``EPSILON``, brevity penalty
  ``min(1, e^(1 - r/c))``.
* ROUGE-L with beta = 1: LCS via dynamic programming, F = harmonic mean
  of precision and recall (0 when P + R = 0).
"""

from __future__ import annotations

import math
import re
from collections import Counter
from dataclasses import dataclass, field
from enum import Enum

from .errors import EmptyInput, EmptyReference, MissingAnnotation, UndefinedRate

EPSILON = 1e-9
MAX_ORDER = 4

_TOKEN_RE = re.compile(r"[^\W_]+", re.UNICODE)


class System(str, Enum):
    ENHANCED = "enhanced"
    BASELINE = "baseline"


class Strategy(str, Enum):
    BINARY = "binary"
    RANKING = "ranking"


def tokenize(text: str) -> list[str]:
    """Lowercase *text* and return its maximal alphanumeric runs, in order."""
    return _TOKEN_RE.findall(text.lower())


def _ngram_counts(tokens: list[str], n: int) -> Counter:
    return Counter(tuple(tokens[i : i + n]) for i in range(len(tokens) - n + 1))


def bleu(candidate: list[str], reference: list[str]) -> float:
    """Sentence-level BLEU-4 of *candidate* against a single *reference*."""
    if not reference:
        raise EmptyReference("BLEU reference must be non-empty")
    if not candidate:
        return 0.0
    log_precisions = []
    for n in range(1, MAX_ORDER + 1):
        cand_counts = _ngram_counts(candidate, n)
        total = sum(cand_counts.values())
        if total == 0:
            continue  # candidate too short for this order: skip it
        ref_counts = _ngram_counts(reference, n)
        matched = sum(min(count, ref_counts[gram]) for gram, count in cand_counts.items())
        p_n = matched / total if matched else EPSILON
        log_precisions.append(math.log(p_n))
    brevity = min(1.0, math.exp(1.0 - len(reference) / len(candidate)))
    return brevity * math.exp(sum(log_precisions) / len(log_precisions))


def lcs_length(a: list[str], b: list[str]) -> int:
    """Longest common subsequence length via the classic DP table."""
    if not a or not b:
        return 0
    # single-row DP keeps memory at O(min side)
    if len(b) > len(a):
        a, b = b, a
    prev = [0] * (len(b) + 1)
    for x in a:
        current = [0]
        for j, y in enumerate(b, start=1):
            if x == y:
                current.append(prev[j - 1] + 1)
            else:
                current.append(max(prev[j], current[j - 1]))
        prev = current
    return prev[-1]


def rouge_l(candidate: list[str], reference: list[str]) -> tuple[float, float, float]:
    """ROUGE-L precision, recall, and F (beta = 1) for a token pair."""
    if not candidate or not reference:
        raise EmptyInput("ROUGE-L requires non-empty candidate and reference")
    lcs = lcs_length(candidate, reference)
    precision = lcs / len(candidate)
    recall = lcs / len(reference)
    f_score = 0.0 if precision + recall == 0 else 2 * precision * recall / (precision + recall)
    return precision, recall, f_score


# --- classification -------------------------------------------------------


@dataclass(frozen=True)
class ConfusionCounts:
    tp: int
    fp: int
    fn: int
    tn: int

    def __post_init__(self) -> None:
        for name in ("tp", "fp", "fn", "tn"):
            if getattr(self, name) < 0:
                raise ValueError(f"{name} must be >= 0")
        if self.total < 1:
            raise ValueError("confusion counts must cover at least one example")

    @property
    def total(self) -> int:
        return self.tp + self.fp + self.fn + self.tn


def classification_rates(counts: ConfusionCounts) -> tuple[float, float, float]:
    """Return (accuracy, precision, recall); raises UndefinedRate on a zero denominator."""
    if counts.tp + counts.fp == 0:
        raise UndefinedRate("precision undefined: no positive predictions")
    if counts.tp + counts.fn == 0:
        raise UndefinedRate("recall undefined: no positive annotations")
    accuracy = (counts.tp + counts.tn) / counts.total
    precision = counts.tp / (counts.tp + counts.fp)
    recall = counts.tp / (counts.tp + counts.fn)
    return accuracy, precision, recall


def improvement_pct(value: float, baseline: float) -> int:
    """Relative improvement of *value* over *baseline*, rounded to a whole percent.

    Rounding is half-away-from-zero so reported percentages never depend on
    binary banker's rounding.
    """
    if baseline == 0:
        raise UndefinedRate("improvement undefined against a zero baseline")
    pct = (value - baseline) / baseline * 100.0
    return int(math.floor(pct + 0.5)) if pct >= 0 else -int(math.floor(-pct + 0.5))


# --- summary-quality comparison -------------------------------------------


@dataclass(frozen=True)
class MetricRow:
    pair_id: str
    system: System
    bleu: float
    rouge_l_p: float
    rouge_l_r: float
    rouge_l_f: float

    def __post_init__(self) -> None:
        for name in ("bleu", "rouge_l_p", "rouge_l_r", "rouge_l_f"):
            score = getattr(self, name)
            if not 0.0 <= score <= 1.0:
                raise ValueError(f"{name} out of [0, 1]: {score}")


@dataclass(frozen=True)
class SummaryComparison:
    rows: list[MetricRow]
    averages: dict[str, dict[str, float]]
    improvement_pct: dict[str, int]

    def to_payload(self) -> dict:
        return {
            "rows": [
                {
                    "pair_id": row.pair_id,
                    "system": row.system.value,
                    "bleu": row.bleu,
                    "rouge_l_p": row.rouge_l_p,
                    "rouge_l_r": row.rouge_l_r,
                    "rouge_l_f": row.rouge_l_f,
                }
                for row in self.rows
            ],
            "averages": self.averages,
            "improvement_pct": self.improvement_pct,
        }


def _score_row(pair_id: str, system: System, candidate: str, reference: str) -> MetricRow:
    cand_tokens = tokenize(candidate)
    ref_tokens = tokenize(reference)
    p, r, f = rouge_l(cand_tokens, ref_tokens)
    return MetricRow(
        pair_id=pair_id,
        system=system,
        bleu=bleu(cand_tokens, ref_tokens),
        rouge_l_p=p,
        rouge_l_r=r,
        rouge_l_f=f,
    )


def _precomputed_row(pair_id: str, system: System, scores: dict) -> MetricRow:
    rouge_value = float(scores["rouge_l"])
    return MetricRow(
        pair_id=pair_id,
        system=system,
        bleu=float(scores["bleu"]),
        rouge_l_p=float(scores.get("rouge_l_p", rouge_value)),
        rouge_l_r=float(scores.get("rouge_l_r", rouge_value)),
        rouge_l_f=rouge_value,
    )


def compare_summaries(pairs: list[dict]) -> SummaryComparison:
    """Score enhanced vs baseline candidates against shared references.

    Each pair is either a text pair
    ``{pair_id, candidate_enhanced, candidate_baseline, reference}`` or a
    precomputed-score pair ``{pair_id, enhanced: {bleu, rouge_l},
    baseline: {bleu, rouge_l}}`` (the latter lets externally reported
    averages flow through the same comparison arithmetic).
    """
    if not pairs:
        raise ValueError("compare_summaries needs at least one pair")
    rows: list[MetricRow] = []
    for i, pair in enumerate(pairs):
        pair_id = str(pair.get("pair_id", i))
        if "candidate_enhanced" in pair:
            reference = pair["reference"]
            rows.append(_score_row(pair_id, System.ENHANCED, pair["candidate_enhanced"], reference))
            rows.append(_score_row(pair_id, System.BASELINE, pair["candidate_baseline"], reference))
        elif "enhanced" in pair and "baseline" in pair:
            rows.append(_precomputed_row(pair_id, System.ENHANCED, pair["enhanced"]))
            rows.append(_precomputed_row(pair_id, System.BASELINE, pair["baseline"]))
        else:
            raise ValueError(f"pair {pair_id!r} is neither a text pair nor a score pair")

    averages: dict[str, dict[str, float]] = {}
    for system in System:
        own = [row for row in rows if row.system is system]
        averages[system.value] = {
            "bleu": sum(r.bleu for r in own) / len(own),
            "rouge_l": sum(r.rouge_l_f for r in own) / len(own),
        }
    improvements = {
        metric: improvement_pct(averages["enhanced"][metric], averages["baseline"][metric])
        for metric in ("bleu", "rouge_l")
    }
    return SummaryComparison(rows=rows, averages=averages, improvement_pct=improvements)


# --- selection-strategy comparison ----------------------------------------

RELEVANT = "relevant"
NOT_RELEVANT = "not_relevant"
_RATE_TOLERANCE = 1e-12


@dataclass(frozen=True)
class SelectionComparison:
    strategy: Strategy
    counts: ConfusionCounts
    accuracy: float
    precision: float
    recall: float
    improvement_pct: dict[str, int] = field(default_factory=dict)

    def __post_init__(self) -> None:
        accuracy, precision, recall = classification_rates(self.counts)
        for name, stored, derived in (
            ("accuracy", self.accuracy, accuracy),
            ("precision", self.precision, precision),
            ("recall", self.recall, recall),
        ):
            if abs(stored - derived) > _RATE_TOLERANCE:
                raise ValueError(f"{name} inconsistent with confusion counts")

    def to_payload(self) -> dict:
        return {
            "strategy": self.strategy.value,
            "counts": {
                "tp": self.counts.tp,
                "fp": self.counts.fp,
                "fn": self.counts.fn,
                "tn": self.counts.tn,
            },
            "accuracy": self.accuracy,
            "precision": self.precision,
            "recall": self.recall,
            "improvement_pct": self.improvement_pct,
        }


def confusion_from_predictions(
    predictions: list[dict], annotations: dict[tuple[str, str], str]
) -> ConfusionCounts:
    """Count a strategy's predictions against human annotations.

    Predictions are ``{doc_id, keyword, predicted}`` with predicted in
    {relevant, not_relevant}; every predicted pair must be annotated.
    """
    tp = fp = fn = tn = 0
    for pred in predictions:
        key = (pred["doc_id"], pred["keyword"])
        if key not in annotations:
            raise MissingAnnotation(f"no annotation for doc {key[0]!r} keyword {key[1]!r}")
        predicted = pred["predicted"] == RELEVANT
        actual = annotations[key] == RELEVANT
        if predicted and actual:
            tp += 1
        elif predicted:
            fp += 1
        elif actual:
            fn += 1
        else:
            tn += 1
    return ConfusionCounts(tp=tp, fp=fp, fn=fn, tn=tn)


def compare_confusions(
    binary: ConfusionCounts, ranking: ConfusionCounts
) -> list[SelectionComparison]:
    """Derive rates for both strategies plus signed whole-percent improvements."""
    rows = {}
    rates = {}
    for strategy, counts in ((Strategy.BINARY, binary), (Strategy.RANKING, ranking)):
        accuracy, precision, recall = classification_rates(counts)
        rates[strategy] = {"accuracy": accuracy, "precision": precision, "recall": recall}
        rows[strategy] = (counts, accuracy, precision, recall)
    comparisons = []
    for strategy, other in ((Strategy.BINARY, Strategy.RANKING), (Strategy.RANKING, Strategy.BINARY)):
        counts, accuracy, precision, recall = rows[strategy]
        improvements = {
            rate: improvement_pct(rates[strategy][rate], rates[other][rate])
            for rate in ("accuracy", "precision", "recall")
        }
        comparisons.append(
            SelectionComparison(
                strategy=strategy,
                counts=counts,
                accuracy=accuracy,
                precision=precision,
                recall=recall,
                improvement_pct=improvements,
            )
        )
    return comparisons


def compare_selection_strategies(
    predictions: dict[str, list[dict]], annotations: list[dict]
) -> list[SelectionComparison]:
    """Build per-strategy confusion counts and the binary-vs-ranking report.

    ``predictions`` maps strategy name -> prediction rows; ``annotations``
    rows are ``{doc_id, keyword, annotation}``.
    """
    annotation_map = {(a["doc_id"], a["keyword"]): a["annotation"] for a in annotations}
    counts = {
        strategy: confusion_from_predictions(predictions.get(strategy.value, []), annotation_map)
        for strategy in Strategy
    }
    return compare_confusions(counts[Strategy.BINARY], counts[Strategy.RANKING])


# --- evaluation report ----------------------------------------------------


@dataclass(frozen=True)
class EvaluationReport:
    summary_quality: SummaryComparison | None
    selection: list[SelectionComparison] | None

    def rendered_tables(self) -> dict[str, str]:
        tables = {}
        if self.summary_quality is not None:
            tables["summary_quality"] = render_summary_table(self.summary_quality)
        if self.selection is not None:
            tables["selection"] = render_selection_table(self.selection)
        return tables

    def to_payload(self) -> dict:
        return {
            "summary_quality": (
                self.summary_quality.to_payload() if self.summary_quality else None
            ),
            "selection": (
                [c.to_payload() for c in self.selection] if self.selection else None
            ),
            "rendered_tables": self.rendered_tables(),
        }


def render_summary_table(comparison: SummaryComparison) -> str:
    """Aligned plain-text rendering of the average-score comparison."""
    averages = comparison.averages
    lines = [
        f"{'Summary Type':<22}{'BLEU':>10}{'ROUGE-L':>10}",
        f"{'Enhanced':<22}{averages['enhanced']['bleu']:>10.4f}{averages['enhanced']['rouge_l']:>10.4f}",
        f"{'Baseline':<22}{averages['baseline']['bleu']:>10.4f}{averages['baseline']['rouge_l']:>10.4f}",
        f"{'Improvement':<22}{_signed(comparison.improvement_pct['bleu']):>10}"
        f"{_signed(comparison.improvement_pct['rouge_l']):>10}",
    ]
    return "\n".join(lines)


def render_selection_table(comparisons: list[SelectionComparison]) -> str:
    """Aligned plain-text rendering of the selection-strategy comparison."""
    by_strategy = {c.strategy: c for c in comparisons}
    binary = by_strategy[Strategy.BINARY]
    ranking = by_strategy[Strategy.RANKING]
    lines = [
        f"{'Selection Strategy':<28}{'Accuracy':>10}{'Precision':>11}{'Recall':>8}",
        f"{'Binary Relevance':<28}{binary.accuracy:>10.4f}{binary.precision:>11.4f}{binary.recall:>8.4f}",
        f"{'Ranking Selection':<28}{ranking.accuracy:>10.4f}{ranking.precision:>11.4f}{ranking.recall:>8.4f}",
        f"{'Improvement (binary)':<28}{_signed(binary.improvement_pct['accuracy']):>10}"
        f"{_signed(binary.improvement_pct['precision']):>11}{_signed(binary.improvement_pct['recall']):>8}",
    ]
    return "\n".join(lines)


def _signed(pct: int) -> str:
    return f"+{pct}%" if pct >= 0 else f"{pct}%"
