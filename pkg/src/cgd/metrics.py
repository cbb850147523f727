"""Corpus-level hallucination metrics and detection statistics.

All counts accumulate as exact integers and divide once, so results do not
depend on iteration order.  Objects count once per response: a hallucinated
object mentioned twice in the same response contributes a single mention.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Dict, List, Optional, Sequence, Tuple

from .scoring import sentence_likelihood
from .types import AnnotatedResponse, Response


class UndefinedAurocError(ValueError):
    """AUROC is undefined when only one class is present."""


@dataclass(frozen=True)
class CorpusMetrics:
    """CHAIR rates plus length and coverage statistics for one corpus.

    ``avg_coverage`` is ``None`` when no response has gold objects;
    ``no_mentions`` flags a corpus where chair_i had a zero denominator.
    """

    chair_s: float
    chair_i: float
    avg_len: float
    avg_coverage: Optional[float]
    n_responses: int
    no_mentions: bool = False

    def __post_init__(self) -> None:
        if self.n_responses < 1:
            raise ValueError("metrics need at least one response")
        if not 0.0 <= self.chair_s <= 1.0 or not 0.0 <= self.chair_i <= 1.0:
            raise ValueError("chair rates must lie in [0, 1]")


@dataclass(frozen=True)
class PositionalCurves:
    """Hallucination ratio and first-time hallucination ratio by sentence
    index, with the supporting response count for each index."""

    r: Dict[int, float]
    r_first: Dict[int, float]
    support: Dict[int, int]

    def __post_init__(self) -> None:
        for i, n in self.support.items():
            if n > 0 and not 0.0 <= self.r_first.get(i, 0.0) <= self.r.get(i, 0.0) <= 1.0:
                raise ValueError(f"curve values at index {i} violate 0 <= r_first <= r <= 1")


def chair(corpus: Sequence[AnnotatedResponse]) -> CorpusMetrics:
    """CHAIR_s, CHAIR_i, average length and average coverage over a corpus."""
    if not corpus:
        raise ValueError("corpus must be non-empty")
    total_mentions = 0
    total_hallucinated = 0
    responses_hallucinated = 0
    total_words = 0
    coverage_num = 0.0
    coverage_den = 0
    for resp in corpus:
        mentioned = resp.mentioned_union
        hallucinated = mentioned - resp.gold_objects
        total_mentions += len(mentioned)
        total_hallucinated += len(hallucinated)
        if hallucinated:
            responses_hallucinated += 1
        total_words += len(resp.response_text.split())
        if resp.gold_objects:
            coverage_num += len(mentioned & resp.gold_objects) / len(resp.gold_objects)
            coverage_den += 1
    n = len(corpus)
    no_mentions = total_mentions == 0
    return CorpusMetrics(
        chair_s=responses_hallucinated / n,
        chair_i=0.0 if no_mentions else total_hallucinated / total_mentions,
        avg_len=total_words / n,
        avg_coverage=None if coverage_den == 0 else coverage_num / coverage_den,
        n_responses=n,
        no_mentions=no_mentions,
    )


def positional_curves(corpus: Sequence[AnnotatedResponse]) -> PositionalCurves:
    """Per-index hallucination ratios over responses with at least i sentences."""
    if not corpus:
        raise ValueError("corpus must be non-empty")
    max_len = max(len(resp.labels) for resp in corpus)
    r: Dict[int, float] = {}
    r_first: Dict[int, float] = {}
    support: Dict[int, int] = {}
    for i in range(1, max_len + 1):
        eligible = [resp for resp in corpus if len(resp.labels) >= i]
        if not eligible:
            continue
        hallucinated = sum(1 for resp in eligible if resp.labels[i - 1] == 1)
        first = sum(
            1
            for resp in eligible
            if resp.labels[i - 1] == 1 and all(l == 0 for l in resp.labels[: i - 1])
        )
        support[i] = len(eligible)
        r[i] = hallucinated / len(eligible)
        r_first[i] = first / len(eligible)
    return PositionalCurves(r=r, r_first=r_first, support=support)


def _average_ranks(scores: Sequence[float]) -> List[float]:
    """1-based ranks, ascending, with ties sharing their average rank."""
    order = sorted(range(len(scores)), key=lambda i: scores[i])
    ranks = [0.0] * len(scores)
    i = 0
    while i < len(order):
        j = i
        while j + 1 < len(order) and scores[order[j + 1]] == scores[order[i]]:
            j += 1
        avg = (i + j + 2) / 2.0  # average of 1-based positions i+1 .. j+1
        for k in range(i, j + 1):
            ranks[order[k]] = avg
        i = j + 1
    return ranks


def auroc(scores: Sequence[float], labels: Sequence[int]) -> float:
    """Probability that a random label-0 item outscores a random label-1
    item, counting ties as half (the rank-statistic formulation).

    The convention: higher scores should indicate label 0 (non-hallucinated).
    """
    if len(scores) != len(labels):
        raise ValueError("scores and labels must have equal length")
    if any(label not in (0, 1) for label in labels):
        raise ValueError("labels must be 0 or 1")
    n0 = sum(1 for label in labels if label == 0)
    n1 = len(labels) - n0
    if n0 == 0 or n1 == 0:
        raise UndefinedAurocError("AUROC needs both classes present")
    ranks = _average_ranks(scores)
    rank_sum = sum(rank for rank, label in zip(ranks, labels) if label == 0)
    u = rank_sum - n0 * (n0 + 1) / 2.0
    return u / (n0 * n1)


def per_sentence_scores(response: Response) -> List[Tuple[float, float]]:
    """(sentence likelihood, similarity) pairs aligned to sentence order."""
    sentences = response.candidate.sentences
    if not sentences:
        raise ValueError("response has no sentences")
    pairs: List[Tuple[float, float]] = []
    for s in sentences:
        if s.similarity is None:
            raise ValueError(f"sentence {s.index} has no similarity score")
        pairs.append((sentence_likelihood(s.token_logprobs), s.similarity))
    return pairs
