"""Likelihood and similarity scores, and the mixed reliability score.

All likelihoods are natural-log probabilities normalized per token
(nats/token).  The reliability score of a candidate with ``t`` sentences is

    F = (1 - alpha) * f_theta + alpha * mean(similarity_1 .. similarity_t)

where ``f_theta`` is the response log-likelihood divided by the total token
count.  The two terms are mixed raw, without rescaling either one.
"""

from __future__ import annotations

import math
from typing import Sequence

from .types import Candidate, ScoreBreakdown


def sentence_likelihood(token_logprobs: Sequence[float]) -> float:
    """Length-normalized log-likelihood of one sentence."""
    if len(token_logprobs) == 0:
        raise ValueError("cannot score an empty sentence")
    for lp in token_logprobs:
        if lp > 0.0:
            raise ValueError(f"token log-probability {lp} is positive")
    return math.fsum(token_logprobs) / len(token_logprobs)


def response_likelihood(candidate: Candidate) -> float:
    """Log-likelihood of the whole candidate divided by its token count."""
    if not candidate.sentences:
        raise ValueError("cannot score an empty candidate")
    total = math.fsum(lp for s in candidate.sentences for lp in s.token_logprobs)
    return total / candidate.token_count


def mean_similarity(candidate: Candidate) -> float:
    """Arithmetic mean of the per-sentence similarity scores."""
    if not candidate.sentences:
        raise ValueError("cannot score an empty candidate")
    scores = []
    for s in candidate.sentences:
        if s.similarity is None:
            raise ValueError(f"sentence {s.index} has no similarity score")
        scores.append(s.similarity)
    return math.fsum(scores) / len(scores)


def reliability_score(candidate: Candidate, alpha: float) -> ScoreBreakdown:
    """Full score breakdown for a candidate, including the mixed value."""
    if not 0.0 <= alpha <= 1.0:
        raise ValueError("alpha must lie in [0, 1]")
    f_theta = response_likelihood(candidate)
    g_theta = tuple(sentence_likelihood(s.token_logprobs) for s in candidate.sentences)
    mean_sim = mean_similarity(candidate)
    f_value = (1.0 - alpha) * f_theta + alpha * mean_sim
    return ScoreBreakdown(f_theta=f_theta, g_theta=g_theta, mean_sim=mean_sim, f_value=f_value)
