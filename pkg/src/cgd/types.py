"""Value types shared across the decoding engine and the measurement toolkit.

Everything here is immutable after construction and safe to share between
threads; all invariant checks happen in ``__post_init__``.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Optional, Sequence, Tuple

DEFAULT_PROMPT = "Describe this image in detail"

_HEX = set("0123456789abcdef")

DECODE_MODES = ("cgd", "greedy", "sample")

LineageKey = Tuple[Tuple[int, int], ...]


def _as_tuple(value):
    return value if isinstance(value, tuple) else tuple(value)


@dataclass(frozen=True)
class ImageRef:
    """Opaque handle for an input image."""

    id: str
    uri: Optional[str] = None
    bytes_digest: Optional[str] = None

    def __post_init__(self) -> None:
        if not self.id:
            raise ValueError("image id must be non-empty")
        if self.bytes_digest is not None:
            d = self.bytes_digest
            if len(d) != 64 or not set(d) <= _HEX:
                raise ValueError("bytes_digest must be 64 lowercase hex characters")


@dataclass(frozen=True)
class PromptInput:
    """An image together with the instruction used to describe it."""

    image: ImageRef
    text: str = DEFAULT_PROMPT

    def __post_init__(self) -> None:
        if not self.text:
            raise ValueError("prompt text must be non-empty")


@dataclass(frozen=True)
class Sentence:
    """One generated sentence with its tokens, log-probabilities and optional
    image-text similarity score.

    ``index`` is the 1-based position of the sentence within its response.
    """

    text: str
    tokens: Tuple[str, ...]
    token_logprobs: Tuple[float, ...]
    similarity: Optional[float] = None
    index: int = 1

    def __post_init__(self) -> None:
        object.__setattr__(self, "tokens", _as_tuple(self.tokens))
        object.__setattr__(self, "token_logprobs", _as_tuple(self.token_logprobs))
        if len(self.tokens) != len(self.token_logprobs):
            raise ValueError("tokens and token_logprobs must have equal length")
        if not self.tokens:
            raise ValueError("a sentence must contain at least one token")
        for lp in self.token_logprobs:
            if lp > 0.0:
                raise ValueError(f"token log-probability {lp} is positive")
        if self.similarity is not None and not -1.0 <= self.similarity <= 1.0:
            raise ValueError("similarity must lie in [-1, 1]")
        if self.index < 1:
            raise ValueError("sentence index is 1-based")

    def with_similarity(self, score: float) -> "Sentence":
        return Sentence(self.text, self.tokens, self.token_logprobs, score, self.index)


@dataclass(frozen=True)
class Candidate:
    """A partial response: an ordered sequence of sentences plus the sampling
    path that produced it.

    ``lineage_key`` holds one ``(parent_slot, sample_slot)`` pair per sentence
    and is unique among all candidates of a single decode call.
    """

    sentences: Tuple[Sentence, ...] = ()
    finished: bool = False
    lineage_key: LineageKey = ()

    def __post_init__(self) -> None:
        object.__setattr__(self, "sentences", _as_tuple(self.sentences))
        object.__setattr__(self, "lineage_key", _as_tuple(self.lineage_key))
        for pos, sentence in enumerate(self.sentences, start=1):
            if sentence.index != pos:
                raise ValueError("sentence indices must run 1..t without gaps")
        if len(self.lineage_key) != len(self.sentences):
            raise ValueError("lineage_key must have one entry per sentence")

    def extended(self, sentence: Sentence, parent_slot: int, sample_slot: int,
                 finished: bool = False) -> "Candidate":
        """Return a new candidate with one more sentence appended."""
        if self.finished:
            raise ValueError("cannot extend a finished candidate")
        if sentence.index != len(self.sentences) + 1:
            raise ValueError("appended sentence has the wrong index")
        return Candidate(
            sentences=self.sentences + (sentence,),
            finished=finished,
            lineage_key=self.lineage_key + ((parent_slot, sample_slot),),
        )

    def finish(self) -> "Candidate":
        return Candidate(self.sentences, True, self.lineage_key)

    @property
    def texts(self) -> Tuple[str, ...]:
        return tuple(s.text for s in self.sentences)

    @property
    def token_count(self) -> int:
        return sum(len(s.tokens) for s in self.sentences)


@dataclass(frozen=True)
class ScoreBreakdown:
    """All scalar scores attached to a finished response.

    ``f_theta`` is the length-normalized response log-likelihood (nats/token),
    ``g_theta`` the per-sentence normalized log-likelihoods, ``mean_sim`` the
    mean per-sentence similarity and ``f_value`` the mixed reliability score.
    """

    f_theta: float
    g_theta: Tuple[float, ...]
    mean_sim: float
    f_value: float

    def __post_init__(self) -> None:
        object.__setattr__(self, "g_theta", _as_tuple(self.g_theta))


@dataclass(frozen=True)
class Response:
    """A completed decode: winning candidate, flat text and final scores.

    ``scores`` is ``None`` for baseline decodes that never call the guide.
    """

    candidate: Candidate
    full_text: str
    scores: Optional[ScoreBreakdown] = None

    def __post_init__(self) -> None:
        expected = " ".join(s.text for s in self.candidate.sentences)
        if self.full_text != expected:
            raise ValueError("full_text must be the single-space join of sentence texts")


@dataclass(frozen=True)
class DecodeConfig:
    """Knobs of one decode call.

    Defaults follow the reference setting: three candidates, three samples per
    candidate, a 0.99 guidance weight, temperature 0.2 with top-k 5 sampling
    and a 500 new-token budget.
    """

    n_candidates: int = 3
    m_samples: int = 3
    alpha: float = 0.99
    temperature: float = 0.2
    top_k: int = 5
    top_p: float = 1.0
    max_new_tokens: int = 500
    max_sentences: int = 16
    seed: int = 0
    mode: str = "cgd"

    def __post_init__(self) -> None:
        if self.n_candidates < 1:
            raise ValueError("n_candidates must be >= 1")
        if self.m_samples < 1:
            raise ValueError("m_samples must be >= 1")
        if not 0.0 <= self.alpha <= 1.0:
            raise ValueError("alpha must lie in [0, 1]")
        if self.temperature <= 0.0:
            raise ValueError("temperature must be positive")
        if self.top_k < 0:
            raise ValueError("top_k must be >= 0 (0 disables it)")
        if not 0.0 < self.top_p <= 1.0:
            raise ValueError("top_p must lie in (0, 1]")
        if self.max_new_tokens < 1:
            raise ValueError("max_new_tokens must be >= 1")
        if self.max_sentences < 1:
            raise ValueError("max_sentences must be >= 1")
        if not 0 <= self.seed < 2**64:
            raise ValueError("seed must fit in an unsigned 64-bit integer")
        if self.mode not in DECODE_MODES:
            raise ValueError(f"mode must be one of {DECODE_MODES}")
        if self.mode == "greedy" and (self.n_candidates != 1 or self.m_samples != 1):
            raise ValueError("greedy mode requires n_candidates == m_samples == 1")


@dataclass(frozen=True)
class AnnotatedResponse:
    """A response with per-sentence hallucination labels against a gold
    object set.  A sentence is labeled 1 iff it mentions an object outside
    the gold set."""

    response_text: str
    sentences: Tuple[str, ...]
    labels: Tuple[int, ...]
    gold_objects: frozenset
    mentioned_objects: Tuple[frozenset, ...] = field(default=())

    def __post_init__(self) -> None:
        object.__setattr__(self, "sentences", _as_tuple(self.sentences))
        object.__setattr__(self, "labels", _as_tuple(self.labels))
        object.__setattr__(self, "gold_objects", frozenset(self.gold_objects))
        object.__setattr__(
            self, "mentioned_objects", tuple(frozenset(m) for m in self.mentioned_objects)
        )
        if len(self.labels) != len(self.sentences):
            raise ValueError("labels must align with sentences")
        if any(label not in (0, 1) for label in self.labels):
            raise ValueError("labels must be 0 or 1")
        if self.mentioned_objects:
            if len(self.mentioned_objects) != len(self.sentences):
                raise ValueError("mentioned_objects must align with sentences")
            for label, mentioned in zip(self.labels, self.mentioned_objects):
                hallucinated = not mentioned <= self.gold_objects
                if bool(label) != hallucinated:
                    raise ValueError(
                        "label must be 1 exactly when the sentence mentions an object "
                        "outside the gold set"
                    )

    @property
    def mentioned_union(self) -> frozenset:
        out: frozenset = frozenset()
        for m in self.mentioned_objects:
            out = out | m
        return out

    @property
    def has_hallucination(self) -> bool:
        return any(self.labels)
