"""Backend capability interfaces, the scripted mock, and the remote client."""

from .base import (
    BackendError,
    Derivation,
    GenerationReply,
    GenerationRequest,
    MalformedReplyError,
    ProtocolViolationError,
    SamplingParams,
    ScriptMissError,
    SentenceGenerator,
    ServerError,
    SimilarityReply,
    SimilarityRequest,
    SimilarityScorer,
    TransportError,
)
from .mock import MockBackend, MockWorld, ScriptEntry, dump_world, load_world
from .remote import ENV_BACKEND_URL, RemoteBackend

__all__ = [
    "BackendError",
    "Derivation",
    "ENV_BACKEND_URL",
    "GenerationReply",
    "GenerationRequest",
    "MalformedReplyError",
    "MockBackend",
    "MockWorld",
    "ProtocolViolationError",
    "RemoteBackend",
    "SamplingParams",
    "ScriptEntry",
    "ScriptMissError",
    "SentenceGenerator",
    "ServerError",
    "SimilarityReply",
    "SimilarityRequest",
    "SimilarityScorer",
    "TransportError",
    "dump_world",
    "load_world",
]
