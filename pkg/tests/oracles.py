"""Independent reference implementations used to cross-check the main code.

Everything here is written as literally as possible (list slicing,
``list.count``, exhaustive enumeration) and must stay independent of the
``finbrief`` implementations it verifies.
"""

from __future__ import annotations

import math
import string


def ngrams_list(tokens: list[str], n: int) -> list[tuple[str, ...]]:
    return [tuple(tokens[i : i + n]) for i in range(len(tokens) - n + 1)]


def bleu_brute_force(candidate: list[str], reference: list[str], epsilon: float = 1e-9) -> float:
    """BLEU-4 by literal n-gram counting; clipping via min over distinct grams."""
    if not candidate:
        return 0.0
    logs = []
    for n in range(1, 5):
        cand = ngrams_list(candidate, n)
        if not cand:
            continue
        ref = ngrams_list(reference, n)
        matched = 0
        for gram in set(cand):
            matched += min(cand.count(gram), ref.count(gram))
        p = matched / len(cand) if matched else epsilon
        logs.append(math.log(p))
    brevity = min(1.0, math.exp(1.0 - len(reference) / len(candidate)))
    return brevity * math.exp(sum(logs) / len(logs))


def is_subsequence(sub: list[str], seq: list[str]) -> bool:
    idx = 0
    for token in seq:
        if idx < len(sub) and token == sub[idx]:
            idx += 1
    return idx == len(sub)


def lcs_exhaustive(a: list[str], b: list[str]) -> int:
    """LCS length by enumerating every subsequence of the shorter sequence."""
    short, long_ = (a, b) if len(a) <= len(b) else (b, a)
    if len(short) > 20:
        raise ValueError("exhaustive LCS is only for short sequences")
    best = 0
    for mask in range(1 << len(short)):
        sub = [short[i] for i in range(len(short)) if mask >> i & 1]
        if len(sub) > best and is_subsequence(sub, long_):
            best = len(sub)
    return best


def english_ratio_by_counting(sentence: str) -> float:
    """English-character ratio by explicit per-character tallying."""
    english = sum(1 for ch in sentence if ch in string.ascii_letters or ch in string.digits)
    total = sum(1 for ch in sentence if not ch.isspace())
    return english / total if total else 0.0


def recount_rates(labeled: list[tuple[bool, bool]]) -> tuple[float, float, float]:
    """(accuracy, precision, recall) recounted from (predicted, actual) pairs."""
    tp = sum(1 for p, a in labeled if p and a)
    fp = sum(1 for p, a in labeled if p and not a)
    fn = sum(1 for p, a in labeled if not p and a)
    tn = sum(1 for p, a in labeled if not p and not a)
    return (tp + tn) / len(labeled), tp / (tp + fp), tp / (tp + fn)
