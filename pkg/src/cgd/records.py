"""JSONL record files: corpora in, decode outputs and reports out.

Every emitted JSON object is serialized with sorted keys so that reports are
byte-stable across runs.
"""

from __future__ import annotations

import json
from pathlib import Path
from typing import Any, Dict, Iterable, Iterator, List, Tuple


def dumps_canonical(obj: Any) -> str:
    return json.dumps(obj, sort_keys=True, ensure_ascii=False)


def iter_jsonl(path: str | Path) -> Iterator[Tuple[int, Dict | None, str | None]]:
    """Yield (lineno, record, error) per non-blank line; record is None when
    the line cannot be parsed into an object."""
    with open(path, encoding="utf-8") as fh:
        for lineno, raw in enumerate(fh, start=1):
            line = raw.strip()
            if not line:
                continue
            try:
                rec = json.loads(line)
            except json.JSONDecodeError as exc:
                yield lineno, None, str(exc)
                continue
            if not isinstance(rec, dict):
                yield lineno, None, "record is not a JSON object"
                continue
            yield lineno, rec, None


def load_jsonl(path: str | Path) -> List[Dict]:
    """Load a JSONL file strictly, raising on the first malformed line."""
    records = []
    for lineno, rec, err in iter_jsonl(path):
        if err is not None:
            raise ValueError(f"{path}:{lineno}: {err}")
        records.append(rec)
    return records


def write_jsonl(path: str | Path, records: Iterable[Dict]) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        for rec in records:
            fh.write(dumps_canonical(rec) + "\n")


def write_json(path: str | Path, obj: Dict) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        fh.write(json.dumps(obj, sort_keys=True, ensure_ascii=False, indent=2) + "\n")
