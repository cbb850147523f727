"""Capability interfaces the engine depends on, and their wire records.

Two capabilities exist: next-sentence generation and image-text similarity.
Every generation request carries *derivation fields* — (seed, step,
parent_slot, sample_slot) — from which a conforming backend derives all of
its sampling randomness, so identical requests always produce identical
replies regardless of call order or retries.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Protocol, Sequence, Tuple, runtime_checkable

from ..types import ImageRef, PromptInput, _as_tuple


class BackendError(Exception):
    """Base class for every backend failure.

    ``derivation`` is attached by the engine when the failing request is a
    generation request; ``attempts`` records how many tries were made.
    """

    def __init__(self, message: str, *, attempts: int = 1):
        super().__init__(message)
        self.attempts = attempts
        self.derivation: Derivation | None = None


class ScriptMissError(BackendError):
    """The mock world has no entry for the requested prefix and slot."""


class TransportError(BackendError):
    """The backend could not be reached, even after retries."""


class MalformedReplyError(BackendError):
    """The backend answered with a body the client cannot parse."""


class ServerError(BackendError):
    """The backend answered with a non-2xx status and an error code."""

    def __init__(self, message: str, *, status: int, error_code: str = "", attempts: int = 1):
        super().__init__(message, attempts=attempts)
        self.status = status
        self.error_code = error_code


class ProtocolViolationError(BackendError):
    """The backend answered 2xx but broke a protocol contract,
    e.g. a similarity score outside [-1, 1] or wrong echoed derivation."""


@dataclass(frozen=True)
class SamplingParams:
    temperature: float
    top_k: int
    top_p: float
    greedy: bool = False


@dataclass(frozen=True)
class Derivation:
    """The reproducibility tuple carried by every generation request."""

    seed: int
    step: int
    parent_slot: int
    sample_slot: int

    def __post_init__(self) -> None:
        if self.seed < 0 or self.step < 0 or self.parent_slot < 0 or self.sample_slot < 0:
            raise ValueError("derivation fields must be non-negative")


@dataclass(frozen=True)
class GenerationRequest:
    prompt: PromptInput
    prefix_sentences: Tuple[str, ...]
    sampling: SamplingParams
    derivation: Derivation
    remaining_token_budget: int
    stop_at_sentence_end: bool = True

    def __post_init__(self) -> None:
        object.__setattr__(self, "prefix_sentences", _as_tuple(self.prefix_sentences))
        if self.remaining_token_budget < 1:
            raise ValueError("remaining_token_budget must be >= 1")


@dataclass(frozen=True)
class GenerationReply:
    sentence_text: str
    tokens: Tuple[str, ...]
    token_logprobs: Tuple[float, ...]
    end_of_response: bool
    tokens_consumed: int

    def __post_init__(self) -> None:
        object.__setattr__(self, "tokens", _as_tuple(self.tokens))
        object.__setattr__(self, "token_logprobs", _as_tuple(self.token_logprobs))
        if len(self.tokens) != len(self.token_logprobs):
            raise ValueError("tokens and token_logprobs must have equal length")
        if self.tokens_consumed < len(self.tokens):
            raise ValueError("tokens_consumed must cover the returned tokens")


@dataclass(frozen=True)
class SimilarityRequest:
    image: ImageRef
    text: str

    def __post_init__(self) -> None:
        if not self.text:
            raise ValueError("similarity text must be non-empty")


@dataclass(frozen=True)
class SimilarityReply:
    score: float

    def __post_init__(self) -> None:
        if not -1.0 <= self.score <= 1.0:
            raise ValueError("similarity score must lie in [-1, 1]")


@runtime_checkable
class SentenceGenerator(Protocol):
    def generate_next_sentence(self, request: GenerationRequest) -> GenerationReply: ...


@runtime_checkable
class SimilarityScorer(Protocol):
    def similarity(self, image: ImageRef, text: str) -> float: ...

    def batch_similarity(self, image: ImageRef, texts: Sequence[str]) -> list[float]: ...
