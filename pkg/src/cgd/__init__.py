"""Guided decoding with image-text similarity reranking, and the metrics to
measure object hallucination in the output."""

from .backends import (
    BackendError,
    Derivation,
    GenerationReply,
    GenerationRequest,
    MockBackend,
    MockWorld,
    RemoteBackend,
    SamplingParams,
    ScriptEntry,
    dump_world,
    load_world,
)
from .engine import (
    DecodeTrace,
    EmptyResponseError,
    Expansion,
    FrontierState,
    decode,
    decode_baseline,
    expand,
    prune,
)
from .metrics import (
    CorpusMetrics,
    PositionalCurves,
    UndefinedAurocError,
    auroc,
    chair,
    per_sentence_scores,
    positional_curves,
)
from .scoring import mean_similarity, reliability_score, response_likelihood, sentence_likelihood
from .segment import join_sentences, segment_sentences
from .types import (
    AnnotatedResponse,
    Candidate,
    DecodeConfig,
    ImageRef,
    PromptInput,
    Response,
    ScoreBreakdown,
    Sentence,
)
from .vocab import (
    ObjectVocabulary,
    default_vocabulary_path,
    extract_objects,
    label_response,
    load_vocabulary,
)

__version__ = "0.1.0"

__all__ = [
    "AnnotatedResponse",
    "BackendError",
    "Candidate",
    "CorpusMetrics",
    "DecodeConfig",
    "DecodeTrace",
    "Derivation",
    "EmptyResponseError",
    "Expansion",
    "FrontierState",
    "GenerationReply",
    "GenerationRequest",
    "ImageRef",
    "MockBackend",
    "MockWorld",
    "ObjectVocabulary",
    "PositionalCurves",
    "PromptInput",
    "RemoteBackend",
    "Response",
    "SamplingParams",
    "ScoreBreakdown",
    "ScriptEntry",
    "Sentence",
    "UndefinedAurocError",
    "auroc",
    "chair",
    "decode",
    "decode_baseline",
    "default_vocabulary_path",
    "dump_world",
    "expand",
    "extract_objects",
    "join_sentences",
    "label_response",
    "load_vocabulary",
    "load_world",
    "mean_similarity",
    "per_sentence_scores",
    "positional_curves",
    "prune",
    "reliability_score",
    "response_likelihood",
    "segment_sentences",
    "sentence_likelihood",
]
