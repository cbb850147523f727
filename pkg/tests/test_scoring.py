from __future__ import annotations

import math

import pytest
from hypothesis import given, strategies as st

from cgd.scoring import (
    mean_similarity,
    reliability_score,
    response_likelihood,
    sentence_likelihood,
)
from cgd.types import Candidate, Sentence


def _sentence(logprobs, sim=None, index=1):
    tokens = tuple(f"t{i}" for i in range(len(logprobs)))
    return Sentence(text=" ".join(tokens) + ".", tokens=tokens,
                    token_logprobs=tuple(logprobs), similarity=sim, index=index)


def _candidate(*sentence_specs):
    sentences = tuple(
        _sentence(lps, sim, index=i + 1) for i, (lps, sim) in enumerate(sentence_specs)
    )
    lineage = tuple((0, i) for i in range(len(sentences)))
    return Candidate(sentences=sentences, lineage_key=lineage)


def test_sentence_likelihood_mean():
    assert sentence_likelihood([-1.0, -2.0, -3.0]) == -2.0
    assert sentence_likelihood([-0.5]) == -0.5
    assert sentence_likelihood([-0.1, -0.1, -0.1, -0.1]) == pytest.approx(-0.1, abs=1e-15)


def test_sentence_likelihood_rejects_bad_input():
    with pytest.raises(ValueError):
        sentence_likelihood([])
    with pytest.raises(ValueError):
        sentence_likelihood([-1.0, 0.5])


def test_response_likelihood_pools_tokens():
    cand = _candidate(([-1.0, -1.0], 0.0), ([-3.0, -3.0], 0.0))
    assert response_likelihood(cand) == -2.0


def test_response_likelihood_weights_by_length():
    # g = -1.0 over 3 tokens and g = -3.0 over 1 token pool to -6/4.
    cand = _candidate(([-1.0, -1.0, -1.0], 0.0), ([-3.0], 0.0))
    assert response_likelihood(cand) == -1.5


def test_response_likelihood_single_sentence_degenerates():
    cand = _candidate(([-0.25, -0.75], 0.1),)
    assert response_likelihood(cand) == sentence_likelihood([-0.25, -0.75])


def test_response_likelihood_rejects_empty():
    with pytest.raises(ValueError):
        response_likelihood(Candidate())


def test_mean_similarity():
    assert mean_similarity(_candidate(([-1.0], 0.2), ([-1.0], 0.4))) == pytest.approx(0.3)
    assert mean_similarity(_candidate(([-1.0], 0.7),)) == 0.7
    assert mean_similarity(_candidate(([-1.0], -0.1), ([-1.0], 0.1))) == 0.0


def test_mean_similarity_requires_scores():
    with pytest.raises(ValueError):
        mean_similarity(_candidate(([-1.0], None),))


def test_reliability_alpha_zero_is_likelihood_only():
    cand = _candidate(([-1.0, -3.0], 0.9),)
    breakdown = reliability_score(cand, 0.0)
    assert breakdown.f_value == breakdown.f_theta == -2.0


def test_reliability_alpha_one_is_similarity_only():
    cand = _candidate(([-1.0, -3.0], 0.9),)
    breakdown = reliability_score(cand, 1.0)
    assert breakdown.f_value == breakdown.mean_sim == 0.9


def test_reliability_worked_value():
    # f_theta = -2.0, mean_sim = 0.3, alpha = 0.99.
    cand = _candidate(([-2.0, -2.0], 0.3),)
    breakdown = reliability_score(cand, 0.99)
    assert breakdown.f_value == pytest.approx(0.277, abs=1e-12)


def test_reliability_rejects_bad_alpha():
    cand = _candidate(([-1.0], 0.0),)
    with pytest.raises(ValueError):
        reliability_score(cand, 1.5)


_logprobs = st.lists(
    st.floats(min_value=-8.0, max_value=0.0, allow_nan=False), min_size=1, max_size=6
)
_sim = st.floats(min_value=-1.0, max_value=1.0, allow_nan=False)
_spec = st.tuples(_logprobs, _sim)
_candidate_strategy = st.lists(_spec, min_size=1, max_size=5).map(lambda specs: _candidate(*specs))
_alpha = st.floats(min_value=0.0, max_value=1.0, allow_nan=False)


@given(_candidate_strategy, _alpha)
def test_mix_stays_between_its_parts(cand, alpha):
    b = reliability_score(cand, alpha)
    lo, hi = min(b.f_theta, b.mean_sim), max(b.f_theta, b.mean_sim)
    assert lo - 1e-12 <= b.f_value <= hi + 1e-12


@given(_candidate_strategy, _alpha, _alpha)
def test_mix_monotone_in_alpha_when_similarity_dominates(cand, a1, a2):
    b = reliability_score(cand, 0.5)
    if b.mean_sim <= b.f_theta:
        return
    lo, hi = sorted((a1, a2))
    if lo == hi:
        return
    assert reliability_score(cand, lo).f_value < reliability_score(cand, hi).f_value + 1e-15


@given(_candidate_strategy)
def test_f_theta_is_token_weighted_mean_of_g(cand):
    b = reliability_score(cand, 0.5)
    lengths = [len(s.tokens) for s in cand.sentences]
    rebuilt = sum(g * l for g, l in zip(b.g_theta, lengths)) / sum(lengths)
    assert b.f_theta == pytest.approx(rebuilt, rel=1e-12, abs=1e-15)


@given(st.lists(_candidate_strategy, min_size=2, max_size=6))
def test_alpha_one_ranks_by_similarity(cands):
    by_f = sorted(range(len(cands)), key=lambda i: reliability_score(cands[i], 1.0).f_value)
    by_sim = sorted(range(len(cands)), key=lambda i: mean_similarity(cands[i]))
    f_values = [reliability_score(c, 1.0).f_value for c in cands]
    assert [f_values[i] for i in by_f] == [f_values[i] for i in by_sim]


def test_breakdown_is_consistent():
    cand = _candidate(([-1.0, -2.0], 0.5), ([-4.0], -0.5))
    b = reliability_score(cand, 0.25)
    assert b.g_theta == (-1.5, -4.0)
    assert b.f_theta == pytest.approx(-7.0 / 3.0)
    assert b.mean_sim == 0.0
    assert b.f_value == pytest.approx(0.75 * (-7.0 / 3.0))
