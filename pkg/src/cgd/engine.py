"""Sentence-level guided decoding.

Each step expands every unfinished candidate with ``m_samples`` independently
sampled next sentences, scores every member of the expanded set with the
reliability score, and keeps the top ``n_candidates``.  Ties break toward the
lexicographically smaller lineage key, so a decode is fully deterministic
given its config and backend.

Backend fan-out is concurrent, but replies are aggregated in canonical
(parent_slot, sample_slot) order, so the result never depends on completion
order.
"""

from __future__ import annotations

import math
from concurrent.futures import ThreadPoolExecutor, as_completed
from dataclasses import dataclass, field
from typing import Dict, List, Optional, Sequence, Tuple

from .backends.base import (
    BackendError,
    Derivation,
    GenerationReply,
    GenerationRequest,
    SamplingParams,
    SentenceGenerator,
    SimilarityScorer,
)
from .scoring import mean_similarity, reliability_score, response_likelihood
from .segment import join_sentences
from .types import Candidate, DecodeConfig, LineageKey, PromptInput, Response, Sentence


class EmptyResponseError(RuntimeError):
    """The backend never produced a usable sentence."""


@dataclass(frozen=True)
class FrontierState:
    """The candidate set after ``step`` completed expansion rounds."""

    step: int
    candidates: Tuple[Candidate, ...]
    tokens_spent: Tuple[int, ...]

    def __post_init__(self) -> None:
        object.__setattr__(self, "candidates", tuple(self.candidates))
        object.__setattr__(self, "tokens_spent", tuple(self.tokens_spent))
        if self.step > 0 and not self.candidates:
            raise ValueError("frontier must be non-empty after step 0")
        if len(self.candidates) != len(self.tokens_spent):
            raise ValueError("tokens_spent must align with candidates")

    @staticmethod
    def initial() -> "FrontierState":
        return FrontierState(step=0, candidates=(Candidate(),), tokens_spent=(0,))


@dataclass(frozen=True)
class Expansion:
    """Result of one expansion round: the unpruned frontier plus the
    derivation fields of every request issued (retries included)."""

    state: FrontierState
    derivations: Tuple[Derivation, ...]

    @property
    def candidates(self) -> Tuple[Candidate, ...]:
        return self.state.candidates


@dataclass(frozen=True)
class ScoredMember:
    lineage_key: LineageKey
    text: str
    finished: bool
    f_value: float
    f_theta: Optional[float]
    mean_sim: Optional[float]


@dataclass(frozen=True)
class StepTrace:
    step: int
    derivations: Tuple[Derivation, ...]
    expanded: Tuple[ScoredMember, ...]
    kept: Tuple[LineageKey, ...]


@dataclass
class DecodeTrace:
    steps: List[StepTrace] = field(default_factory=list)

    def to_dict(self) -> dict:
        return {
            "steps": [
                {
                    "step": st.step,
                    "derivations": [
                        {
                            "seed": d.seed,
                            "step": d.step,
                            "parent_slot": d.parent_slot,
                            "sample_slot": d.sample_slot,
                        }
                        for d in st.derivations
                    ],
                    "expanded": [
                        {
                            "lineage": [list(p) for p in m.lineage_key],
                            "text": m.text,
                            "finished": m.finished,
                            "f_value": None if math.isinf(m.f_value) else m.f_value,
                            "f_theta": m.f_theta,
                            "mean_sim": m.mean_sim,
                        }
                        for m in st.expanded
                    ],
                    "kept": [[list(p) for p in key] for key in st.kept],
                }
                for st in self.steps
            ]
        }

    def summary(self) -> dict:
        return {
            "steps": len(self.steps),
            "backend_requests": sum(len(st.derivations) for st in self.steps),
            "candidates_scored": sum(len(st.expanded) for st in self.steps),
        }


def _sampling_params(config: DecodeConfig) -> SamplingParams:
    return SamplingParams(
        temperature=config.temperature,
        top_k=config.top_k,
        top_p=config.top_p,
        greedy=config.mode == "greedy",
    )


def _call_generator(generator: SentenceGenerator, request: GenerationRequest) -> GenerationReply:
    try:
        return generator.generate_next_sentence(request)
    except BackendError as exc:
        if exc.derivation is None:
            exc.derivation = request.derivation
        raise


def _run_jobs(
    jobs: Sequence[Tuple[Tuple[int, int], GenerationRequest]],
    generator: SentenceGenerator,
    max_inflight: int,
) -> Dict[Tuple[int, int], GenerationReply]:
    replies: Dict[Tuple[int, int], GenerationReply] = {}
    if not jobs:
        return replies
    if len(jobs) == 1 or max_inflight == 1:
        for key, request in jobs:
            replies[key] = _call_generator(generator, request)
        return replies
    with ThreadPoolExecutor(max_workers=min(max_inflight, len(jobs))) as pool:
        futures = {pool.submit(_call_generator, generator, req): key for key, req in jobs}
        for future in as_completed(futures):
            replies[futures[future]] = future.result()
    return replies


def _normalized(reply: GenerationReply) -> str:
    return " ".join(reply.sentence_text.split())


def expand(
    prompt: PromptInput,
    state: FrontierState,
    config: DecodeConfig,
    generator: SentenceGenerator,
    guide: SimilarityScorer,
    *,
    sim_cache: Optional[Dict[Tuple[str, str], float]] = None,
    max_inflight: Optional[int] = None,
) -> Expansion:
    """Expand every unfinished candidate by one sentence, ``m_samples`` ways.

    Finished candidates pass through unchanged.  A whitespace-only reply is
    resampled once with its sample slot offset by ``m_samples``; a second
    failure (or an end-of-response with no text) carries the parent forward
    marked finished.
    """
    if all(c.finished for c in state.candidates):
        raise ValueError("nothing to expand: every candidate is finished")
    sampling = _sampling_params(config)
    inflight = max_inflight or config.n_candidates * config.m_samples

    jobs: List[Tuple[Tuple[int, int], GenerationRequest]] = []
    for i, (cand, spent) in enumerate(zip(state.candidates, state.tokens_spent)):
        if cand.finished:
            continue
        remaining = config.max_new_tokens - spent
        if remaining < 1:
            raise ValueError("unfinished candidate with exhausted budget; finish it first")
        for slot in range(config.m_samples):
            jobs.append(
                (
                    (i, slot),
                    GenerationRequest(
                        prompt=prompt,
                        prefix_sentences=cand.texts,
                        sampling=sampling,
                        derivation=Derivation(config.seed, state.step, i, slot),
                        remaining_token_budget=remaining,
                    ),
                )
            )
    replies = _run_jobs(jobs, generator, inflight)

    retries: List[Tuple[Tuple[int, int], GenerationRequest]] = []
    for key, request in jobs:
        reply = replies[key]
        if not _normalized(reply) and not reply.end_of_response:
            retries.append(
                (
                    key,
                    GenerationRequest(
                        prompt=prompt,
                        prefix_sentences=request.prefix_sentences,
                        sampling=sampling,
                        derivation=Derivation(
                            config.seed, state.step, key[0], key[1] + config.m_samples
                        ),
                        remaining_token_budget=request.remaining_token_budget,
                    ),
                )
            )
    replies.update(_run_jobs(retries, generator, inflight))
    derivations = tuple(req.derivation for _, req in jobs) + tuple(
        req.derivation for _, req in retries
    )

    # Assemble members in canonical order and collect texts needing a score.
    plan: List[Tuple[str, int, int]] = []  # (kind, parent index, slot)
    child_data: Dict[Tuple[int, int], Tuple[str, GenerationReply, bool, int]] = {}
    for i, cand in enumerate(state.candidates):
        if cand.finished:
            plan.append(("pass", i, -1))
            continue
        parent_closed = False
        for slot in range(config.m_samples):
            reply = replies[(i, slot)]
            text = _normalized(reply)
            if text:
                spent = state.tokens_spent[i] + reply.tokens_consumed
                finished = reply.end_of_response or spent >= config.max_new_tokens
                child_data[(i, slot)] = (text, reply, finished, spent)
                plan.append(("child", i, slot))
            elif not parent_closed:
                plan.append(("close", i, -1))
                parent_closed = True

    cache = sim_cache if sim_cache is not None else {}
    need = sorted(
        {text for text, _, _, _ in child_data.values() if (prompt.image.id, text) not in cache}
    )
    if need:
        scores = guide.batch_similarity(prompt.image, need)
        for text, score in zip(need, scores):
            cache[(prompt.image.id, text)] = score

    new_candidates: List[Candidate] = []
    new_spent: List[int] = []
    for kind, i, slot in plan:
        parent = state.candidates[i]
        if kind == "pass":
            new_candidates.append(parent)
            new_spent.append(state.tokens_spent[i])
        elif kind == "close":
            new_candidates.append(parent.finish())
            new_spent.append(state.tokens_spent[i])
        else:
            text, reply, finished, spent = child_data[(i, slot)]
            sentence = Sentence(
                text=text,
                tokens=reply.tokens,
                token_logprobs=reply.token_logprobs,
                similarity=cache[(prompt.image.id, text)],
                index=len(parent.sentences) + 1,
            )
            new_candidates.append(parent.extended(sentence, i, slot, finished=finished))
            new_spent.append(spent)

    return Expansion(
        state=FrontierState(state.step + 1, tuple(new_candidates), tuple(new_spent)),
        derivations=derivations,
    )


def _score_value(candidate: Candidate, alpha: float) -> Tuple[float, Optional[float], Optional[float]]:
    """(f_value, f_theta, mean_sim); empty candidates rank below everything."""
    if not candidate.sentences:
        return float("-inf"), None, None
    f_theta = response_likelihood(candidate)
    mean_sim = mean_similarity(candidate)
    return (1.0 - alpha) * f_theta + alpha * mean_sim, f_theta, mean_sim


def prune(candidates: Sequence[Candidate], n: int, alpha: float) -> List[Candidate]:
    """Keep the ``n`` highest-scoring candidates, descending score, ties
    toward the lexicographically smaller lineage key."""
    if n < 1:
        raise ValueError("n must be >= 1")
    scored = [(_score_value(c, alpha)[0], c.lineage_key, c) for c in candidates]
    scored.sort(key=lambda item: (-item[0], item[1]))
    return [c for _, _, c in scored[:n]]


def decode(
    prompt: PromptInput,
    config: DecodeConfig,
    generator: SentenceGenerator,
    guide: SimilarityScorer,
    *,
    max_inflight: Optional[int] = None,
) -> Tuple[Response, DecodeTrace]:
    """Run guided decoding end to end and return the best response plus a
    per-step trace.  On backend failure the partial trace is attached to the
    raised error as ``partial_trace``."""
    trace = DecodeTrace()
    frontier = FrontierState.initial()
    sim_cache: Dict[Tuple[str, str], float] = {}
    try:
        while True:
            refreshed = tuple(
                c.finish() if (not c.finished and spent >= config.max_new_tokens) else c
                for c, spent in zip(frontier.candidates, frontier.tokens_spent)
            )
            frontier = FrontierState(frontier.step, refreshed, frontier.tokens_spent)
            if all(c.finished for c in frontier.candidates):
                break
            if frontier.step >= config.max_sentences:
                break
            expansion = expand(
                prompt,
                frontier,
                config,
                generator,
                guide,
                sim_cache=sim_cache,
                max_inflight=max_inflight,
            )
            expanded = expansion.state
            scored = [_score_value(c, config.alpha) for c in expanded.candidates]
            order = sorted(
                range(len(expanded.candidates)),
                key=lambda idx: (-scored[idx][0], expanded.candidates[idx].lineage_key),
            )
            keep = order[: config.n_candidates]
            trace.steps.append(
                StepTrace(
                    step=frontier.step,
                    derivations=expansion.derivations,
                    expanded=tuple(
                        ScoredMember(
                            lineage_key=c.lineage_key,
                            text=" ".join(c.texts) if c.sentences else "",
                            finished=c.finished,
                            f_value=scored[idx][0],
                            f_theta=scored[idx][1],
                            mean_sim=scored[idx][2],
                        )
                        for idx, c in enumerate(expanded.candidates)
                    ),
                    kept=tuple(expanded.candidates[idx].lineage_key for idx in keep),
                )
            )
            frontier = FrontierState(
                expanded.step,
                tuple(expanded.candidates[idx] for idx in keep),
                tuple(expanded.tokens_spent[idx] for idx in keep),
            )
    except BackendError as exc:
        exc.partial_trace = trace
        raise

    best = prune(frontier.candidates, 1, config.alpha)[0]
    if not best.sentences:
        raise EmptyResponseError("decode produced no sentences")
    breakdown = reliability_score(best, config.alpha)
    response = Response(
        candidate=best,
        full_text=join_sentences(list(best.texts)),
        scores=breakdown,
    )
    return response, trace


def decode_baseline(
    prompt: PromptInput,
    config: DecodeConfig,
    generator: SentenceGenerator,
) -> Response:
    """Single-path decoding (greedy or plain sampling): no guide, no pruning."""
    if config.mode not in ("greedy", "sample"):
        raise ValueError("baseline decoding requires mode 'greedy' or 'sample'")
    sampling = _sampling_params(config)
    candidate = Candidate()
    spent = 0
    step = 0
    while not candidate.finished and step < config.max_sentences and spent < config.max_new_tokens:
        request = GenerationRequest(
            prompt=prompt,
            prefix_sentences=candidate.texts,
            sampling=sampling,
            derivation=Derivation(config.seed, step, 0, 0),
            remaining_token_budget=config.max_new_tokens - spent,
        )
        reply = _call_generator(generator, request)
        text = _normalized(reply)
        if not text:
            if reply.end_of_response:
                candidate = candidate.finish()
                break
            retry = GenerationRequest(
                prompt=prompt,
                prefix_sentences=candidate.texts,
                sampling=sampling,
                derivation=Derivation(config.seed, step, 0, config.m_samples),
                remaining_token_budget=config.max_new_tokens - spent,
            )
            reply = _call_generator(generator, retry)
            text = _normalized(reply)
            if not text:
                candidate = candidate.finish()
                break
        spent += reply.tokens_consumed
        finished = reply.end_of_response or spent >= config.max_new_tokens
        sentence = Sentence(
            text=text,
            tokens=reply.tokens,
            token_logprobs=reply.token_logprobs,
            similarity=None,
            index=len(candidate.sentences) + 1,
        )
        candidate = candidate.extended(sentence, 0, 0, finished=finished)
        step += 1
    if not candidate.sentences:
        raise EmptyResponseError("baseline decode produced no sentences")
    return Response(
        candidate=candidate,
        full_text=join_sentences(list(candidate.texts)),
        scores=None,
    )
