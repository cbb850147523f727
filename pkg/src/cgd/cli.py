"""Batch command-line front door: decode a corpus, evaluate it, analyze it.

Exit codes: 0 full success, 2 partial failure (per-record error entries are
written to the output), 3 backend unreachable after retries, 4 input wiring
problems (missing vocabulary, unmatched image ids).
"""

from __future__ import annotations

import argparse
import hashlib
import sys
import time
from concurrent.futures import ThreadPoolExecutor
from pathlib import Path
from typing import Dict, List, Optional, Tuple

from . import analysis
from .backends import MockBackend, RemoteBackend, TransportError, load_world
from .backends.remote import ENV_BACKEND_URL
from .engine import decode, decode_baseline
from .records import dumps_canonical, iter_jsonl, load_jsonl, write_json, write_jsonl
from .scoring import response_likelihood, sentence_likelihood
from .types import DEFAULT_PROMPT, DecodeConfig, ImageRef, PromptInput
from .vocab import load_vocabulary

CONFIG_KEYS = {
    "n": int,
    "m": int,
    "alpha": float,
    "temperature": float,
    "top_k": int,
    "top_p": float,
    "max_new_tokens": int,
    "max_sentences": int,
    "seed": int,
    "mode": str,
}


def _load_config_file(path: str) -> Dict:
    values: Dict = {}
    for lineno, raw in enumerate(Path(path).read_text(encoding="utf-8").splitlines(), start=1):
        line = raw.strip()
        if not line or line.startswith("#"):
            continue
        if "=" not in line:
            raise ValueError(f"{path}:{lineno}: expected key=value")
        key, _, value = line.partition("=")
        key = key.strip()
        if key not in CONFIG_KEYS:
            raise ValueError(f"{path}:{lineno}: unknown config key {key!r}")
        values[key] = CONFIG_KEYS[key](value.strip())
    return values


def _build_decode_config(args) -> DecodeConfig:
    merged = {
        "n": 3,
        "m": 3,
        "alpha": 0.99,
        "temperature": 0.2,
        "top_k": 5,
        "top_p": 1.0,
        "max_new_tokens": 500,
        "max_sentences": 16,
        "seed": 0,
        "mode": "cgd",
    }
    if args.config:
        merged.update(_load_config_file(args.config))
    for key in CONFIG_KEYS:
        flag = getattr(args, key, None)
        if flag is not None:
            merged[key] = flag
    if merged["mode"] != "cgd":
        merged["n"] = 1
        merged["m"] = 1
    return DecodeConfig(
        n_candidates=merged["n"],
        m_samples=merged["m"],
        alpha=merged["alpha"],
        temperature=merged["temperature"],
        top_k=merged["top_k"],
        top_p=merged["top_p"],
        max_new_tokens=merged["max_new_tokens"],
        max_sentences=merged["max_sentences"],
        seed=merged["seed"],
        mode=merged["mode"],
    )


def record_seed(base_seed: int, image_id: str) -> int:
    """Per-record seed: base seed XOR a stable 64-bit hash of the image id."""
    digest = hashlib.sha256(image_id.encode("utf-8")).digest()
    return base_seed ^ int.from_bytes(digest[:8], "big")


def _decode_one(backend, config: DecodeConfig, image_id: str, uri: Optional[str],
                prompt_text: str) -> Dict:
    prompt = PromptInput(image=ImageRef(id=image_id, uri=uri), text=prompt_text)
    seeded = DecodeConfig(
        n_candidates=config.n_candidates,
        m_samples=config.m_samples,
        alpha=config.alpha,
        temperature=config.temperature,
        top_k=config.top_k,
        top_p=config.top_p,
        max_new_tokens=config.max_new_tokens,
        max_sentences=config.max_sentences,
        seed=record_seed(config.seed, image_id),
        mode=config.mode,
    )
    started = time.perf_counter()
    if seeded.mode == "cgd":
        response, trace = decode(prompt, seeded, backend, backend)
        scores = {
            "f_value": response.scores.f_value,
            "f_theta": response.scores.f_theta,
            "mean_sim": response.scores.mean_sim,
        }
        trace_summary = trace.summary()
    else:
        response = decode_baseline(prompt, seeded, backend)
        scores = {"f_theta": response_likelihood(response.candidate)}
        trace_summary = None
    elapsed = time.perf_counter() - started
    sentences = [
        {
            "text": s.text,
            "g_theta": sentence_likelihood(s.token_logprobs),
            "similarity": s.similarity,
        }
        for s in response.candidate.sentences
    ]
    return {
        "image_id": image_id,
        "text": response.full_text,
        "sentences": sentences,
        "scores": scores,
        "trace": trace_summary,
        "seed": seeded.seed,
        "elapsed_s": round(elapsed, 6),
    }


def cmd_decode(args) -> int:
    config = _build_decode_config(args)
    if args.mock_world:
        backend = MockBackend(load_world(args.mock_world))
        backend_address = f"mock:{args.mock_world}"
    else:
        try:
            backend = RemoteBackend(args.backend_url)
        except ValueError as exc:
            print(f"error: {exc}", file=sys.stderr)
            return 3
        backend_address = backend.base_url

    inputs: List[Tuple[int, Optional[Dict], Optional[str]]] = list(iter_jsonl(args.input))
    if not inputs:
        print("warning: input file is empty", file=sys.stderr)
        write_jsonl(args.output, [])
        _write_manifest(args, config, backend_address, [])
        return 0

    def run(item):
        lineno, rec, err = item
        if err is not None:
            return {"line": lineno, "error": err, "error_kind": "malformed_input"}
        image_id = rec.get("image_id")
        if not image_id or not isinstance(image_id, str):
            return {"line": lineno, "error": "missing image_id", "error_kind": "malformed_input"}
        try:
            return _decode_one(
                backend,
                config,
                image_id,
                rec.get("image_uri"),
                rec.get("prompt") or args.prompt,
            )
        except TransportError as exc:
            return {
                "image_id": image_id,
                "line": lineno,
                "error": str(exc),
                "error_kind": "transport",
            }
        except Exception as exc:  # per-record isolation: one bad record must not kill the run
            return {
                "image_id": image_id,
                "line": lineno,
                "error": str(exc),
                "error_kind": type(exc).__name__,
            }

    if args.jobs > 1:
        with ThreadPoolExecutor(max_workers=args.jobs) as pool:
            results = list(pool.map(run, inputs))
    else:
        results = [run(item) for item in inputs]

    write_jsonl(args.output, results)
    timings = [r["elapsed_s"] for r in results if "elapsed_s" in r]
    _write_manifest(args, config, backend_address, timings)

    failures = [r for r in results if "error" in r]
    if not failures:
        return 0
    for rec in failures:
        print(f"error: line {rec.get('line')}: {rec['error']}", file=sys.stderr)
    if all(r.get("error_kind") == "transport" for r in failures) and len(failures) == len(results):
        return 3
    return 2


def _write_manifest(args, config: DecodeConfig, backend_address: str, timings: List[float]) -> None:
    payload = {
        "config": {
            "n_candidates": config.n_candidates,
            "m_samples": config.m_samples,
            "alpha": config.alpha,
            "temperature": config.temperature,
            "top_k": config.top_k,
            "top_p": config.top_p,
            "max_new_tokens": config.max_new_tokens,
            "max_sentences": config.max_sentences,
            "seed": config.seed,
            "mode": config.mode,
        },
        "backend": backend_address,
        "input": str(args.input),
        "output": str(args.output),
        "vocabulary": None,
    }
    run_id = hashlib.sha1(
        (dumps_canonical(payload) + str(time.time_ns())).encode("utf-8")
    ).hexdigest()
    payload["run_id"] = run_id
    payload["timing"] = {
        "per_sample_s": timings,
        "mean_s": (sum(timings) / len(timings)) if timings else None,
    }
    write_json(str(args.output) + ".manifest.json", payload)


def cmd_evaluate(args) -> int:
    if not Path(args.vocab).is_file():
        print(f"error: vocabulary file not found: {args.vocab}", file=sys.stderr)
        return 4
    if args.categories and not Path(args.categories).is_file():
        print(f"error: categories file not found: {args.categories}", file=sys.stderr)
        return 4
    vocab = load_vocabulary(args.vocab, args.categories)

    decoded = [rec for rec in load_jsonl(args.input) if "error" not in rec]
    annotations: Dict[str, List[str]] = {}
    if args.annotations:
        for rec in load_jsonl(args.annotations):
            annotations[rec["image_id"]] = list(rec.get("gold_objects", []))

    details: List[Dict] = []
    unmatched: List[str] = []
    for rec in decoded:
        image_id = rec["image_id"]
        if image_id in annotations:
            gold = annotations[image_id]
        elif "gold_objects" in rec:
            gold = list(rec["gold_objects"])
        else:
            unmatched.append(image_id)
            continue
        details.append(analysis.detail_record(rec, gold, vocab))
    if unmatched:
        print(
            "error: no gold annotations for image ids: " + ", ".join(sorted(unmatched)),
            file=sys.stderr,
        )
        return 4
    if not details:
        print("error: nothing to evaluate", file=sys.stderr)
        return 4

    report = analysis.evaluation_report(details, with_curves=args.curves)
    if args.detail:
        write_jsonl(args.detail, details)
    write_json(args.output, report)
    metrics = report["metrics"]
    coverage = metrics["avg_coverage"]
    print(
        f"responses={metrics['n_responses']} chair_s={metrics['chair_s']:.4f} "
        f"chair_i={metrics['chair_i']:.4f} avg_len={metrics['avg_len']:.2f} "
        + (f"avg_coverage={coverage:.4f}" if coverage is not None else "avg_coverage=n/a")
    )
    return 0


def cmd_analyze(args) -> int:
    details = load_jsonl(args.input)
    if not details:
        print("error: empty detail file", file=sys.stderr)
        return 4
    report = analysis.detection_report(details)
    if args.compare:
        report["gap"] = analysis.gap_report(details, load_jsonl(args.compare))
    write_json(args.output, report)
    for score_type, entry in sorted(report["auroc"].items()):
        if entry is None:
            print(f"auroc[{score_type}]=n/a")
        else:
            overall = entry["overall"]
            print(
                f"auroc[{score_type}]="
                + (f"{overall:.4f}" if overall is not None else "n/a")
            )
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="cgd", description=__doc__)
    sub = parser.add_subparsers(dest="command", required=True)

    p_decode = sub.add_parser("decode", help="decode a corpus against a backend")
    p_decode.add_argument("--input", required=True, help="JSONL corpus: image_id, image_uri?, prompt?")
    p_decode.add_argument("--output", required=True, help="JSONL output path")
    p_decode.add_argument("--backend-url", default=None,
                          help=f"backend base URL (default ${ENV_BACKEND_URL})")
    p_decode.add_argument("--mock-world", default=None, help="world fixture file for the mock backend")
    p_decode.add_argument("--config", default=None, help="flat key=value config file")
    p_decode.add_argument("--n", type=int, default=None, help="max candidate set size (default 3)")
    p_decode.add_argument("--m", type=int, default=None, help="samples per candidate (default 3)")
    p_decode.add_argument("--alpha", type=float, default=None, help="guidance weight (default 0.99)")
    p_decode.add_argument("--mode", choices=["cgd", "greedy", "sample"], default=None)
    p_decode.add_argument("--seed", type=int, default=None)
    p_decode.add_argument("--temperature", type=float, default=None)
    p_decode.add_argument("--top-k", dest="top_k", type=int, default=None)
    p_decode.add_argument("--top-p", dest="top_p", type=float, default=None)
    p_decode.add_argument("--max-new-tokens", dest="max_new_tokens", type=int, default=None)
    p_decode.add_argument("--max-sentences", dest="max_sentences", type=int, default=None)
    p_decode.add_argument("--jobs", type=int, default=1, help="concurrent records")
    p_decode.add_argument("--prompt", default=DEFAULT_PROMPT)
    p_decode.set_defaults(func=cmd_decode)

    p_eval = sub.add_parser("evaluate", help="score a decoded corpus against gold objects")
    p_eval.add_argument("--input", required=True, help="decoded JSONL corpus")
    p_eval.add_argument("--annotations", default=None, help="JSONL: image_id, gold_objects")
    p_eval.add_argument("--vocab", required=True, help="object vocabulary (surface<TAB>canonical)")
    p_eval.add_argument("--categories", default=None, help="fine-to-coarse category file")
    p_eval.add_argument("--output", required=True, help="report JSON path")
    p_eval.add_argument("--detail", default=None, help="per-response detail JSONL path")
    p_eval.add_argument("--curves", action="store_true", help="include positional curves")
    p_eval.set_defaults(func=cmd_evaluate)

    p_an = sub.add_parser("analyze", help="detection statistics from a detail file")
    p_an.add_argument("--input", required=True, help="detail JSONL from evaluate --detail")
    p_an.add_argument("--compare", default=None, help="second detail file for gap tables")
    p_an.add_argument("--output", required=True, help="report JSON path")
    p_an.set_defaults(func=cmd_analyze)
    return parser


def main(argv: Optional[List[str]] = None) -> int:
    args = build_parser().parse_args(argv)
    return args.func(args)


if __name__ == "__main__":
    sys.exit(main())
