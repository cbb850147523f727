"""HTTP client for a remote generation/similarity backend.

Requests and replies travel as JSON bodies (one request per message) against
``/v1/generate`` and ``/v1/similarity``.  The server must echo the derivation
fields of every generation request.  Because all sampling randomness derives
from those fields, retries are idempotent: transport failures and 5xx replies
are retried up to ``max_attempts`` times with exponential backoff, while 4xx
replies fail immediately.
"""

from __future__ import annotations

import json
import os
import time
from typing import Any, Dict, Sequence

import requests

from ..types import ImageRef
from .base import (
    GenerationReply,
    GenerationRequest,
    MalformedReplyError,
    ProtocolViolationError,
    ServerError,
    TransportError,
)

ENV_BACKEND_URL = "CGD_BACKEND_URL"
ENV_BACKEND_TOKEN = "CGD_BACKEND_TOKEN"


def _image_payload(image: ImageRef) -> Dict[str, Any]:
    return {"id": image.id, "uri": image.uri, "bytes_digest": image.bytes_digest}


def generation_request_payload(request: GenerationRequest) -> Dict[str, Any]:
    return {
        "prompt": {"image": _image_payload(request.prompt.image), "text": request.prompt.text},
        "prefix_sentences": list(request.prefix_sentences),
        "sampling": {
            "temperature": request.sampling.temperature,
            "top_k": request.sampling.top_k,
            "top_p": request.sampling.top_p,
            "greedy": request.sampling.greedy,
        },
        "stop_at_sentence_end": request.stop_at_sentence_end,
        "remaining_token_budget": request.remaining_token_budget,
        # The seed travels as a decimal string: JSON numbers cannot carry
        # 64-bit integers exactly through every peer.
        "derivation": {
            "seed": str(request.derivation.seed),
            "step": request.derivation.step,
            "parent_slot": request.derivation.parent_slot,
            "sample_slot": request.derivation.sample_slot,
        },
    }


class RemoteBackend:
    """Speaks the wire protocol against ``base_url`` (or $CGD_BACKEND_URL)."""

    def __init__(
        self,
        base_url: str | None = None,
        *,
        token: str | None = None,
        timeout: float = 60.0,
        max_attempts: int = 3,
        backoff: float = 0.2,
        session: requests.Session | None = None,
    ):
        url = base_url or os.environ.get(ENV_BACKEND_URL)
        if not url:
            raise ValueError(f"no backend url: pass base_url or set {ENV_BACKEND_URL}")
        self.base_url = url.rstrip("/")
        self.token = token if token is not None else os.environ.get(ENV_BACKEND_TOKEN)
        self.timeout = timeout
        self.max_attempts = max_attempts
        self.backoff = backoff
        self._session = session or requests.Session()

    def _headers(self) -> Dict[str, str]:
        headers = {"Content-Type": "application/json"}
        if self.token:
            headers["Authorization"] = f"Bearer {self.token}"
        return headers

    def _post(self, path: str, payload: Dict[str, Any]) -> Dict[str, Any]:
        url = f"{self.base_url}{path}"
        last_exc: Exception | None = None
        for attempt in range(1, self.max_attempts + 1):
            try:
                resp = self._session.post(
                    url, json=payload, headers=self._headers(), timeout=self.timeout
                )
            except requests.RequestException as exc:
                last_exc = TransportError(f"POST {url} failed: {exc}", attempts=attempt)
            else:
                if 200 <= resp.status_code < 300:
                    try:
                        body = resp.json()
                    except (ValueError, json.JSONDecodeError) as exc:
                        raise MalformedReplyError(
                            f"POST {url}: unparseable reply body", attempts=attempt
                        ) from exc
                    if not isinstance(body, dict):
                        raise MalformedReplyError(
                            f"POST {url}: reply is not an object", attempts=attempt
                        )
                    return body
                code, message = self._error_fields(resp)
                err = ServerError(
                    f"POST {url}: status {resp.status_code} ({code}): {message}",
                    status=resp.status_code,
                    error_code=code,
                    attempts=attempt,
                )
                if resp.status_code < 500:
                    raise err
                last_exc = err
            if attempt < self.max_attempts:
                time.sleep(self.backoff * (2 ** (attempt - 1)))
        assert last_exc is not None
        raise last_exc

    @staticmethod
    def _error_fields(resp: requests.Response) -> tuple[str, str]:
        try:
            body = resp.json()
            return str(body.get("error_code", "")), str(body.get("message", ""))
        except ValueError:
            return "", resp.text[:200]

    def generate_next_sentence(self, request: GenerationRequest) -> GenerationReply:
        body = self._post("/v1/generate", generation_request_payload(request))
        try:
            reply = GenerationReply(
                sentence_text=str(body["sentence_text"]),
                tokens=tuple(str(t) for t in body["tokens"]),
                token_logprobs=tuple(float(x) for x in body["token_logprobs"]),
                end_of_response=bool(body["end_of_response"]),
                tokens_consumed=int(body["tokens_consumed"]),
            )
        except (KeyError, TypeError, ValueError) as exc:
            raise MalformedReplyError(f"generate reply missing or invalid field: {exc}") from exc
        echo = body.get("derivation")
        want = request.derivation
        if echo is not None:
            try:
                got = (
                    int(echo.get("seed")),
                    int(echo.get("step")),
                    int(echo.get("parent_slot")),
                    int(echo.get("sample_slot")),
                )
            except (TypeError, ValueError) as exc:
                raise ProtocolViolationError(f"unreadable derivation echo: {echo!r}") from exc
            if got != (want.seed, want.step, want.parent_slot, want.sample_slot):
                raise ProtocolViolationError(
                    f"server echoed derivation {got}, expected "
                    f"{(want.seed, want.step, want.parent_slot, want.sample_slot)}"
                )
        return reply

    def similarity(self, image: ImageRef, text: str) -> float:
        if not text:
            raise ValueError("similarity text must be non-empty")
        body = self._post("/v1/similarity", {"image": _image_payload(image), "text": text})
        try:
            score = float(body["score"])
        except (KeyError, TypeError, ValueError) as exc:
            raise MalformedReplyError(f"similarity reply missing score: {exc}") from exc
        if not -1.0 <= score <= 1.0:
            raise ProtocolViolationError(f"similarity score {score} outside [-1, 1]")
        return score

    def batch_similarity(self, image: ImageRef, texts: Sequence[str]) -> list[float]:
        if not texts:
            raise ValueError("batch_similarity requires at least one text")
        return [self.similarity(image, t) for t in texts]
