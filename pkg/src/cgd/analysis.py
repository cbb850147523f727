"""Report builders behind the evaluate and analyze commands.

These work on plain record dicts (see ``records``) so they can be driven
from files or directly from tests.
"""

from __future__ import annotations

import math
import statistics
from typing import Dict, Iterable, List, Optional, Sequence, Tuple

from .metrics import UndefinedAurocError, auroc, chair, positional_curves
from .segment import segment_sentences
from .types import AnnotatedResponse
from .vocab import ObjectVocabulary, label_response

SCORE_TYPES = ("g_theta", "similarity")


def detail_record(decoded: Dict, gold_objects: Sequence[str], vocab: ObjectVocabulary) -> Dict:
    """Join one decode output with its gold objects into a detail record."""
    text = decoded["text"]
    sentences = segment_sentences(text)
    annotated = label_response(sentences, gold_objects, vocab)
    out: Dict = {
        "image_id": decoded["image_id"],
        "text": text,
        "sentences": list(sentences),
        "labels": list(annotated.labels),
        "mentioned": [sorted(m) for m in annotated.mentioned_objects],
        "gold": sorted(annotated.gold_objects),
        "g_theta": None,
        "similarity": None,
    }
    per_sentence = decoded.get("sentences")
    if per_sentence and len(per_sentence) == len(sentences):
        g = [s.get("g_theta") for s in per_sentence]
        sim = [s.get("similarity") for s in per_sentence]
        if all(x is not None for x in g):
            out["g_theta"] = g
        if all(x is not None for x in sim):
            out["similarity"] = sim
    return out


def annotated_from_detail(detail: Dict) -> AnnotatedResponse:
    return AnnotatedResponse(
        response_text=detail["text"],
        sentences=tuple(detail["sentences"]),
        labels=tuple(detail["labels"]),
        gold_objects=frozenset(detail["gold"]),
        mentioned_objects=tuple(frozenset(m) for m in detail["mentioned"]),
    )


def curves_section(corpus: Sequence[AnnotatedResponse]) -> Dict:
    curves = positional_curves(corpus)
    return {
        "r": {str(i): v for i, v in sorted(curves.r.items())},
        "r_first": {str(i): v for i, v in sorted(curves.r_first.items())},
        "support": {str(i): v for i, v in sorted(curves.support.items())},
    }


def evaluation_report(
    details: Sequence[Dict], with_curves: bool = False
) -> Dict:
    corpus = [annotated_from_detail(d) for d in details]
    metrics = chair(corpus)
    report: Dict = {
        "metrics": {
            "chair_s": metrics.chair_s,
            "chair_i": metrics.chair_i,
            "avg_len": metrics.avg_len,
            "avg_coverage": metrics.avg_coverage,
            "n_responses": metrics.n_responses,
            "no_mentions": metrics.no_mentions,
        }
    }
    if with_curves:
        report["curves"] = curves_section(corpus)
    return report


def _safe_auroc(scores: List[float], labels: List[int]) -> Optional[float]:
    try:
        return auroc(scores, labels)
    except UndefinedAurocError:
        return None


def _pooled_sentence_scores(details: Sequence[Dict], score_type: str) -> Tuple[List[float], List[int]]:
    scores: List[float] = []
    labels: List[int] = []
    for d in details:
        values = d.get(score_type)
        if not values:
            continue
        for value, label in zip(values, d["labels"]):
            scores.append(float(value))
            labels.append(int(label))
    return scores, labels


def _scores_at_index(details: Sequence[Dict], score_type: str, index: int) -> Tuple[List[float], List[int]]:
    scores: List[float] = []
    labels: List[int] = []
    for d in details:
        values = d.get(score_type)
        if not values or len(values) < index:
            continue
        scores.append(float(values[index - 1]))
        labels.append(int(d["labels"][index - 1]))
    return scores, labels


def detection_report(details: Sequence[Dict]) -> Dict:
    """AUROC per score type, overall and per sentence index, plus curves."""
    corpus = [annotated_from_detail(d) for d in details]
    max_len = max((len(d["labels"]) for d in details), default=0)
    out: Dict = {"n_responses": len(details), "auroc": {}, "curves": curves_section(corpus)}
    for score_type in SCORE_TYPES:
        pooled_scores, pooled_labels = _pooled_sentence_scores(details, score_type)
        if not pooled_scores:
            out["auroc"][score_type] = None
            continue
        by_index: Dict[str, Optional[float]] = {}
        for i in range(1, max_len + 1):
            scores_i, labels_i = _scores_at_index(details, score_type, i)
            if not scores_i:
                continue
            by_index[str(i)] = _safe_auroc(scores_i, labels_i)
        out["auroc"][score_type] = {
            "overall": _safe_auroc(pooled_scores, pooled_labels),
            "by_index": by_index,
        }
    return out


def _gap_entry(a: List[float], b: List[float]) -> Dict:
    entry: Dict = {
        "mean_a": statistics.fmean(a) if a else None,
        "mean_b": statistics.fmean(b) if b else None,
        "normalized_gap": None,
    }
    if len(a) >= 2 and len(b) >= 2:
        va = statistics.variance(a)
        vb = statistics.variance(b)
        pooled = ((len(a) - 1) * va + (len(b) - 1) * vb) / (len(a) + len(b) - 2)
        if pooled > 0:
            entry["normalized_gap"] = abs(entry["mean_a"] - entry["mean_b"]) / math.sqrt(pooled)
    return entry


def gap_report(details_a: Sequence[Dict], details_b: Sequence[Dict]) -> Dict:
    """Mean-score gap between two corpora, normalized by the pooled standard
    deviation of the sentence-level scores."""
    out: Dict = {}
    for score_type in SCORE_TYPES:
        a, _ = _pooled_sentence_scores(details_a, score_type)
        b, _ = _pooled_sentence_scores(details_b, score_type)
        out[score_type] = _gap_entry(a, b) if (a or b) else None
    return out
