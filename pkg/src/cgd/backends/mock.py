"""Deterministic in-process backend driven by a scripted world.

A world maps (prefix sentences, sample slot) to the next sentence, so every
reply is a pure lookup: two calls with the same prefix and derivation fields
are byte-identical, and issuing requests in any order yields the same reply
multiset.  Tokens are the whitespace split of the scripted text.

Greedy requests ignore the sample slot and return the prefix's entry with the
highest total log-probability (ties go to the lowest slot), which makes "the
greedy path" of a world well-defined.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass
from pathlib import Path
from typing import Dict, Mapping, Sequence, Tuple

from ..types import ImageRef
from .base import GenerationReply, GenerationRequest, ScriptMissError

Prefix = Tuple[str, ...]


@dataclass(frozen=True)
class ScriptEntry:
    """One scripted continuation: the sentence text, one log-probability per
    whitespace token, and whether the response ends after it."""

    text: str
    logprobs: Tuple[float, ...]
    end: bool = False

    def __post_init__(self) -> None:
        object.__setattr__(self, "logprobs", tuple(self.logprobs))
        if len(self.text.split()) != len(self.logprobs):
            raise ValueError(
                f"entry {self.text!r} needs one logprob per whitespace token"
            )
        for lp in self.logprobs:
            if lp > 0.0:
                raise ValueError(f"scripted log-probability {lp} is positive")

    @property
    def tokens(self) -> Tuple[str, ...]:
        return tuple(self.text.split())


class MockWorld:
    """Immutable script plus a similarity table."""

    def __init__(
        self,
        script: Mapping[Tuple[Prefix, int], ScriptEntry],
        sim_table: Mapping[str, float] | None = None,
        default_sim: float = 0.0,
    ):
        self._script: Dict[Tuple[Prefix, int], ScriptEntry] = {}
        self._by_prefix: Dict[Prefix, Dict[int, ScriptEntry]] = {}
        for (prefix, slot), entry in script.items():
            key = (tuple(prefix), int(slot))
            self._script[key] = entry
            self._by_prefix.setdefault(key[0], {})[key[1]] = entry
        self._sim_table = dict(sim_table or {})
        for text, score in self._sim_table.items():
            if not -1.0 <= score <= 1.0:
                raise ValueError(f"similarity for {text!r} outside [-1, 1]")
        if not -1.0 <= default_sim <= 1.0:
            raise ValueError("default_sim outside [-1, 1]")
        self.default_sim = default_sim

    def entry(self, prefix: Prefix, slot: int) -> ScriptEntry | None:
        return self._script.get((tuple(prefix), slot))

    def entries_for(self, prefix: Prefix) -> Dict[int, ScriptEntry]:
        return dict(self._by_prefix.get(tuple(prefix), {}))

    def sim(self, text: str) -> float:
        return self._sim_table.get(text, self.default_sim)

    @property
    def script_items(self):
        return list(self._script.items())

    @property
    def sim_items(self):
        return list(self._sim_table.items())


class MockBackend:
    """Implements both capability interfaces on top of a ``MockWorld``."""

    def __init__(self, world: MockWorld):
        self.world = world

    def generate_next_sentence(self, request: GenerationRequest) -> GenerationReply:
        prefix = request.prefix_sentences
        if request.sampling.greedy:
            entries = self.world.entries_for(prefix)
            if not entries:
                raise ScriptMissError(f"no scripted entries for prefix {prefix!r}")
            slot = max(entries, key=lambda s: (math.fsum(entries[s].logprobs), -s))
            entry = entries[slot]
        else:
            entry = self.world.entry(prefix, request.derivation.sample_slot)
            if entry is None:
                raise ScriptMissError(
                    f"no scripted entry for prefix {prefix!r}, "
                    f"slot {request.derivation.sample_slot}"
                )
        tokens = entry.tokens
        budget = request.remaining_token_budget
        if len(tokens) > budget:
            return GenerationReply(
                sentence_text=" ".join(tokens[:budget]),
                tokens=tokens[:budget],
                token_logprobs=entry.logprobs[:budget],
                end_of_response=True,
                tokens_consumed=budget,
            )
        return GenerationReply(
            sentence_text=entry.text,
            tokens=tokens,
            token_logprobs=entry.logprobs,
            end_of_response=entry.end,
            tokens_consumed=len(tokens),
        )

    def similarity(self, image: ImageRef, text: str) -> float:
        if not text:
            raise ValueError("similarity text must be non-empty")
        return self.world.sim(text)

    def batch_similarity(self, image: ImageRef, texts: Sequence[str]) -> list[float]:
        if not texts:
            raise ValueError("batch_similarity requires at least one text")
        return [self.similarity(image, t) for t in texts]


def load_world(path: str | Path) -> MockWorld:
    """Load a world from a JSONL fixture file.

    Record kinds: ``script`` (prefix, slot, text, logprobs, end),
    ``sim`` (text, score) and ``default_sim`` (score).
    """
    script: Dict[Tuple[Prefix, int], ScriptEntry] = {}
    sim_table: Dict[str, float] = {}
    default_sim = 0.0
    with open(path, encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, start=1):
            line = line.strip()
            if not line:
                continue
            try:
                rec = json.loads(line)
            except json.JSONDecodeError as exc:
                raise ValueError(f"{path}:{lineno}: invalid record: {exc}") from exc
            kind = rec.get("kind")
            if kind == "script":
                entry = ScriptEntry(
                    text=rec["text"],
                    logprobs=tuple(rec["logprobs"]),
                    end=bool(rec.get("end", False)),
                )
                script[(tuple(rec["prefix"]), int(rec["slot"]))] = entry
            elif kind == "sim":
                sim_table[rec["text"]] = float(rec["score"])
            elif kind == "default_sim":
                default_sim = float(rec["score"])
            else:
                raise ValueError(f"{path}:{lineno}: unknown record kind {kind!r}")
    return MockWorld(script, sim_table, default_sim)


def dump_world(world: MockWorld, path: str | Path) -> None:
    """Write a world as a JSONL fixture, one record per line."""
    with open(path, "w", encoding="utf-8") as fh:
        for (prefix, slot), entry in sorted(world.script_items):
            fh.write(
                json.dumps(
                    {
                        "kind": "script",
                        "prefix": list(prefix),
                        "slot": slot,
                        "text": entry.text,
                        "logprobs": list(entry.logprobs),
                        "end": entry.end,
                    },
                    sort_keys=True,
                )
                + "\n"
            )
        for text, score in sorted(world.sim_items):
            fh.write(json.dumps({"kind": "sim", "text": text, "score": score}, sort_keys=True) + "\n")
        fh.write(json.dumps({"kind": "default_sim", "score": world.default_sim}, sort_keys=True) + "\n")
