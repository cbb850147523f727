"""Object vocabulary, surface matching and hallucination labeling.

Mentions are found by case-insensitive whole-word matching of canonical
names and synonyms, with plural forms normalized on the last word of each
surface.  Multi-word surfaces match longest-first and consume their word
positions, so "hot dog" does not additionally count as "dog".
"""

from __future__ import annotations

import re
from dataclasses import dataclass, field
from pathlib import Path
from typing import Dict, Iterable, Mapping, Sequence, Tuple

from .segment import join_sentences
from .types import AnnotatedResponse

_WORD_RE = re.compile(r"[a-z0-9']+")

IRREGULAR_PLURALS: Dict[str, str] = {
    "people": "person",
    "men": "man",
    "women": "woman",
    "children": "child",
    "feet": "foot",
    "teeth": "tooth",
    "geese": "goose",
    "mice": "mouse",
    "oxen": "ox",
    "wolves": "wolf",
    "knives": "knife",
    "leaves": "leaf",
    "shelves": "shelf",
    "scarves": "scarf",
}


def singular_forms(word: str) -> Tuple[str, ...]:
    """Candidate singulars for a lowercase word, most specific first."""
    forms = [word]
    if word in IRREGULAR_PLURALS:
        forms.append(IRREGULAR_PLURALS[word])
    if len(word) > 3 and word.endswith("es"):
        forms.append(word[:-2])
    if len(word) > 3 and word.endswith("s") and not word.endswith("ss"):
        forms.append(word[:-1])
    return tuple(dict.fromkeys(forms))


def _words(text: str) -> Tuple[str, ...]:
    return tuple(_WORD_RE.findall(text.lower()))


@dataclass(frozen=True)
class ObjectVocabulary:
    """Canonical object names plus surface-form and category mappings."""

    canonical_names: frozenset
    synonym_map: Mapping[str, str] = field(default_factory=dict)
    category_map: Mapping[str, str] = field(default_factory=dict)

    def __post_init__(self) -> None:
        object.__setattr__(self, "canonical_names", frozenset(n.lower() for n in self.canonical_names))
        object.__setattr__(
            self, "synonym_map", {k.lower(): v.lower() for k, v in self.synonym_map.items()}
        )
        object.__setattr__(
            self, "category_map", {k.lower(): v.lower() for k, v in self.category_map.items()}
        )
        if not self.canonical_names:
            raise ValueError("vocabulary must contain at least one canonical name")
        for surface, target in self.synonym_map.items():
            if target not in self.canonical_names:
                raise ValueError(f"synonym {surface!r} maps to unknown canonical {target!r}")
        for fine, target in self.category_map.items():
            if target not in self.canonical_names:
                raise ValueError(f"category for {fine!r} maps to unknown canonical {target!r}")

    @property
    def surface_grams(self) -> Dict[Tuple[str, ...], str]:
        """Word-tuple of every matchable surface -> canonical name."""
        grams: Dict[Tuple[str, ...], str] = {}
        for name in self.canonical_names:
            grams[_words(name)] = name
        for surface, target in self.synonym_map.items():
            grams[_words(surface)] = target
        return grams

    def canonicalize(self, name: str) -> str:
        """Map a gold-annotation name to its canonical coarse form.

        Unknown names pass through lowercased; they can never collide with a
        mention, which is always a canonical name."""
        word = name.lower().strip()
        word = self.synonym_map.get(word, word)
        word = self.category_map.get(word, word)
        return word

    def canonical_gold(self, gold_objects: Iterable[str]) -> frozenset:
        return frozenset(self.canonicalize(g) for g in gold_objects)


def extract_objects(sentence: str, vocab: ObjectVocabulary) -> set:
    """Canonical object names mentioned in one sentence."""
    words = _words(sentence)
    grams = vocab.surface_grams
    max_n = max((len(g) for g in grams), default=1)
    used = [False] * len(words)
    found: set = set()
    for n in range(max_n, 0, -1):
        for start in range(0, len(words) - n + 1):
            if any(used[start : start + n]):
                continue
            head = words[start : start + n - 1]
            for last in singular_forms(words[start + n - 1]):
                gram = head + (last,)
                if gram in grams:
                    found.add(grams[gram])
                    for k in range(start, start + n):
                        used[k] = True
                    break
    return found


def label_response(
    sentences: Sequence[str],
    gold_objects: Iterable[str],
    vocab: ObjectVocabulary,
) -> AnnotatedResponse:
    """Label each sentence 1 iff it mentions an object outside the gold set."""
    gold = vocab.canonical_gold(gold_objects)
    mentioned = tuple(frozenset(extract_objects(s, vocab)) for s in sentences)
    labels = tuple(0 if m <= gold else 1 for m in mentioned)
    text = join_sentences(list(sentences)) if sentences else ""
    return AnnotatedResponse(
        response_text=text,
        sentences=tuple(sentences),
        labels=labels,
        gold_objects=gold,
        mentioned_objects=mentioned,
    )


def _read_pairs(path: str | Path) -> Iterable[Tuple[str, str]]:
    with open(path, encoding="utf-8") as fh:
        for lineno, raw in enumerate(fh, start=1):
            line = raw.strip()
            if not line or line.startswith("#"):
                continue
            parts = [p.strip() for p in line.split("\t")]
            if len(parts) == 1:
                parts = [p.strip() for p in re.split(r",", line, maxsplit=1)]
            if len(parts) != 2 or not parts[0] or not parts[1]:
                raise ValueError(f"{path}:{lineno}: expected 'surface<TAB>canonical'")
            yield parts[0], parts[1]


def default_vocabulary_path() -> Path:
    """The editable 80-class default vocabulary shipped with the package."""
    return Path(__file__).parent / "data" / "default_objects.tsv"


def load_vocabulary(
    names_path: str | Path,
    categories_path: str | Path | None = None,
) -> ObjectVocabulary:
    """Load a vocabulary from two-column files.

    In the names file, a line whose surface equals its canonical declares a
    canonical object; any other line declares a synonym.  The optional
    categories file maps fine-grained names to canonical coarse categories.
    """
    canonical: set = set()
    synonyms: Dict[str, str] = {}
    pairs = list(_read_pairs(names_path))
    for surface, target in pairs:
        if surface.lower() == target.lower():
            canonical.add(target.lower())
    for surface, target in pairs:
        if surface.lower() != target.lower():
            synonyms[surface.lower()] = target.lower()
    categories: Dict[str, str] = {}
    if categories_path is not None:
        for fine, target in _read_pairs(categories_path):
            categories[fine.lower()] = target.lower()
    return ObjectVocabulary(
        canonical_names=frozenset(canonical),
        synonym_map=synonyms,
        category_map=categories,
    )
