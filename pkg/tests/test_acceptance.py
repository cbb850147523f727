"""End-to-end acceptance suite.

Each test prints one PASS/FAIL line (visible with ``pytest -s``) and enforces
its own wall-clock budget.
"""

from __future__ import annotations

import json
import random
import time
from contextlib import contextmanager

import pytest

from _worlds import JitterBackend, bruteforce_frontiers, random_world
from cgd.backends import MockBackend, MockWorld, ScriptEntry
from cgd.cli import main
from cgd.engine import decode, decode_baseline
from cgd.metrics import auroc, chair, positional_curves
from cgd.records import load_jsonl
from cgd.scoring import reliability_score
from cgd.types import Candidate, DecodeConfig, ImageRef, PromptInput, Sentence
from cgd.vocab import ObjectVocabulary, label_response

PROMPT = PromptInput(ImageRef("acceptance-img"))


@contextmanager
def criterion(name: str, budget_s: float):
    start = time.perf_counter()
    try:
        yield
    except BaseException:
        print(f"[FAIL] {name}", flush=True)
        raise
    elapsed = time.perf_counter() - start
    assert elapsed < budget_s, f"{name}: {elapsed:.2f}s exceeded the {budget_s}s budget"
    print(f"[PASS] {name} ({elapsed:.2f}s)", flush=True)


def _candidate(logprob_groups, sims):
    sentences = []
    for i, (lps, sim) in enumerate(zip(logprob_groups, sims), start=1):
        tokens = tuple(f"w{j}" for j in range(len(lps)))
        sentences.append(Sentence(" ".join(tokens) + ".", tokens, tuple(lps), sim, i))
    lineage = tuple((0, i) for i in range(len(sentences)))
    return Candidate(tuple(sentences), finished=True, lineage_key=lineage)


def test_reliability_score_arithmetic():
    with criterion("reliability-score arithmetic", 1.0):
        # Worked value: 0.01 * (-2.0) + 0.99 * 0.3 = 0.277.
        cand = _candidate([(-2.0, -2.0)], [0.3])
        assert abs(reliability_score(cand, 0.99).f_value - 0.277) < 1e-12

        # Degeneracies at the endpoints are exact.
        rng = random.Random(7)
        for _ in range(200):
            groups = [
                tuple(-rng.uniform(0.01, 6.0) for _ in range(rng.randint(1, 5)))
                for _ in range(rng.randint(1, 4))
            ]
            sims = [rng.uniform(-1, 1) for _ in groups]
            cand = _candidate(groups, sims)
            b0 = reliability_score(cand, 0.0)
            b1 = reliability_score(cand, 1.0)
            assert b0.f_value == b0.f_theta
            assert b1.f_value == b1.mean_sim
            # Convexity: the mix never leaves [min, max] of its two parts.
            for _ in range(5):
                alpha = rng.random()
                b = reliability_score(cand, alpha)
                assert min(b.f_theta, b.mean_sim) - 1e-12 <= b.f_value
                assert b.f_value <= max(b.f_theta, b.mean_sim) + 1e-12


def test_single_sample_decode_reverts_to_plain_sampling():
    with criterion("single-sample decode reverts to plain sampling", 5.0):
        for seed in range(100):
            rng = random.Random(10_000 + seed)
            backend = MockBackend(random_world(rng, depth=4, branching=2))
            cfg = DecodeConfig(
                n_candidates=1, m_samples=1, mode="sample", seed=seed, max_sentences=6
            )
            guided, _ = decode(PROMPT, cfg, backend, backend)
            plain = decode_baseline(PROMPT, cfg, backend)
            assert guided.full_text == plain.full_text
            assert guided.full_text.encode() == plain.full_text.encode()


def test_pruned_frontier_matches_bruteforce_enumeration():
    with criterion("pruned frontier matches brute-force enumeration", 30.0):
        checked = 0
        for i in range(220):
            rng = random.Random(50_000 + i)
            branching = rng.choice([1, 2, 3])
            m = rng.randint(1, min(2, branching))
            n = rng.randint(1, 2)
            depth = rng.randint(1, 3)
            alpha = rng.choice([0.0, 0.5, 0.99, 1.0])
            budget = rng.choice([1000, 1000, 1000, 7])
            max_sentences = rng.choice([2, 3, 4])
            world = random_world(rng, depth=depth, branching=branching)
            backend = MockBackend(world)
            cfg = DecodeConfig(
                n_candidates=n,
                m_samples=m,
                alpha=alpha,
                seed=i,
                max_new_tokens=budget,
                max_sentences=max_sentences,
            )
            _, trace = decode(PROMPT, cfg, backend, backend)
            expected = bruteforce_frontiers(world, n, m, alpha, max_sentences, budget)
            assert len(trace.steps) == len(expected), f"world {i}: step count differs"
            for step_trace, oracle_step in zip(trace.steps, expected):
                oracle_keys = [lineage for lineage, _ in oracle_step]
                assert set(step_trace.kept) == set(oracle_keys), f"world {i} step {step_trace.step}"
                assert list(step_trace.kept) == oracle_keys, f"world {i} step {step_trace.step}"
            checked += 1
        assert checked >= 200


GOLD_POOL = ["dog", "cat", "tree", "bench", "kite", "car"]
PLANTED_POOL = ["unicorn", "dragon", "ghost", "robot", "mermaid", "griffin"]


def _efficacy_world(rng: random.Random, gold: list, planted: list) -> MockWorld:
    """Depth-3 tree: every prefix offers at least one grounded sentence
    (similarity 0.8); with probability 0.8 the most likely sentence at a
    step mentions a planted off-image object (similarity 0.05)."""
    script = {}
    sim_table = {}

    def sentence(obj: str, strong: bool):
        text = f"A {obj} is here."
        lp = -0.1 if strong else -0.5
        return text, (lp, lp, lp, lp)

    def build(prefix, level):
        hallucination_step = rng.random() < 0.8
        faithful_slot = rng.randrange(3)
        for slot in range(3):
            faithful = slot == faithful_slot or not hallucination_step
            obj = rng.choice(gold if faithful else planted)
            strong = (not faithful) if hallucination_step else faithful
            if faithful and hallucination_step:
                strong = False
            text, lps = sentence(obj, strong)
            sim_table[text] = 0.8 if faithful else 0.05
            end = level + 1 >= 3
            script[(prefix, slot)] = ScriptEntry(text, lps, end=end)
            if not end:
                build(prefix + (text,), level + 1)

    build((), 0)
    return MockWorld(script, sim_table, default_sim=0.0)


def test_guided_decoding_cuts_hallucination_vs_greedy():
    with criterion("guided decoding cuts hallucination rate vs greedy", 60.0):
        vocab = ObjectVocabulary(frozenset(GOLD_POOL + PLANTED_POOL))
        rng = random.Random(424242)
        guided_corpus = []
        greedy_corpus = []
        from cgd.segment import segment_sentences

        for image in range(50):
            gold = rng.sample(GOLD_POOL, 3)
            world = _efficacy_world(rng, gold, PLANTED_POOL)
            backend = MockBackend(world)
            prompt = PromptInput(ImageRef(f"img-{image}"))

            cfg = DecodeConfig(
                n_candidates=3, m_samples=3, alpha=0.99, seed=image, max_sentences=3
            )
            guided, _ = decode(prompt, cfg, backend, backend)
            guided_corpus.append(
                label_response(segment_sentences(guided.full_text), gold, vocab)
            )

            greedy_cfg = DecodeConfig(
                n_candidates=1, m_samples=1, mode="greedy", seed=image, max_sentences=3
            )
            greedy = decode_baseline(prompt, greedy_cfg, backend)
            greedy_corpus.append(
                label_response(segment_sentences(greedy.full_text), gold, vocab)
            )

        guided_metrics = chair(guided_corpus)
        greedy_metrics = chair(greedy_corpus)
        assert guided_metrics.chair_s <= 0.1, f"guided chair_s {guided_metrics.chair_s}"
        assert greedy_metrics.chair_s >= 0.5, f"greedy chair_s {greedy_metrics.chair_s}"


def test_metric_implementations_match_oracles():
    with criterion("metric implementations match independent oracles", 30.0):
        # Hand-built 4-response corpus, computed on paper.
        vocab = ObjectVocabulary(
            frozenset({"dog", "frisbee", "car", "cat", "sofa", "person", "kite", "bench", "tree"})
        )
        corpus = [
            label_response(
                ["A dog chases a frisbee.", "A car passes."], {"dog", "frisbee"}, vocab
            ),
            label_response(["A cat sleeps."], {"cat", "sofa"}, vocab),
            label_response(
                ["A person flies a kite.", "A bench sits there.", "Nice day."],
                {"person", "kite"},
                vocab,
            ),
            label_response(["The sky is clear."], {"tree"}, vocab),
        ]
        metrics = chair(corpus)
        assert metrics.chair_s == 0.5
        assert metrics.chair_i == 2 / 7
        assert metrics.avg_len == 6.5
        assert metrics.avg_coverage == 0.625

        # Rank-based AUROC equals the brute-force pairwise statistic.
        def pairwise(scores, labels):
            zeros = [s for s, l in zip(scores, labels) if l == 0]
            ones = [s for s, l in zip(scores, labels) if l == 1]
            wins = sum(1.0 if a > b else 0.5 if a == b else 0.0 for a in zeros for b in ones)
            return wins / (len(zeros) * len(ones))

        rng = random.Random(31337)
        for _ in range(100):
            n = rng.randint(2, 50)
            scores = [rng.randint(0, 16) / 8.0 for _ in range(n)]
            labels = [rng.randint(0, 1) for _ in range(n)]
            labels[0], labels[-1] = 0, 1
            assert abs(auroc(scores, labels) - pairwise(scores, labels)) < 1e-9

        # First-time ratio never exceeds the plain ratio.
        from cgd.types import AnnotatedResponse

        for trial in range(1000):
            rng2 = random.Random(900_000 + trial)
            corpus = []
            for _ in range(rng2.randint(1, 8)):
                n = rng2.randint(1, 6)
                labels = [rng2.randint(0, 1) for _ in range(n)]
                corpus.append(
                    AnnotatedResponse(
                        response_text=" ".join(f"S{i}." for i in range(n)),
                        sentences=tuple(f"S{i}." for i in range(n)),
                        labels=tuple(labels),
                        gold_objects=frozenset(),
                        mentioned_objects=tuple(
                            frozenset({"ghost"}) if l else frozenset() for l in labels
                        ),
                    )
                )
            curves = positional_curves(corpus)
            for i in curves.support:
                assert curves.r_first[i] <= curves.r[i] + 1e-15


def test_decode_output_independent_of_completion_order():
    with criterion("decode output independent of backend completion order", 30.0):
        base_world = random_world(random.Random(2718), depth=3, branching=3)
        for seed in (11, 29):
            cfg = DecodeConfig(n_candidates=3, m_samples=3, seed=seed, max_sentences=4)
            outputs = set()
            for trial in range(50):
                backend = JitterBackend(
                    MockBackend(base_world), random.Random(seed * 1000 + trial)
                )
                response, trace = decode(PROMPT, cfg, backend, backend)
                payload = response.full_text + "\n" + json.dumps(
                    trace.to_dict(), sort_keys=True
                )
                outputs.add(payload.encode())
            assert len(outputs) == 1, f"seed {seed} produced {len(outputs)} distinct outputs"


def test_positional_curve_rises_with_sentence_index(tmp_path):
    with criterion("positional hallucination curve rises with sentence index", 10.0):
        from scipy.stats import spearmanr

        rng = random.Random(140)
        details = []
        for k in range(400):
            n = rng.randint(6, 12)
            labels = [1 if rng.random() < min(0.9, 0.03 + 0.09 * i) else 0 for i in range(1, n + 1)]
            details.append(
                {
                    "image_id": f"img-{k}",
                    "text": " ".join(f"S{i}." for i in range(n)),
                    "sentences": [f"S{i}." for i in range(n)],
                    "labels": labels,
                    "mentioned": [["ghost"] if l else [] for l in labels],
                    "gold": [],
                    "g_theta": None,
                    "similarity": None,
                }
            )
        detail_path = tmp_path / "detail.jsonl"
        detail_path.write_text("".join(json.dumps(d) + "\n" for d in details))
        report_path = tmp_path / "report.json"
        assert main(["analyze", "--input", str(detail_path), "--output", str(report_path)]) == 0
        report = json.loads(report_path.read_text())
        indexes = sorted(int(i) for i in report["curves"]["r"])
        ratios = [report["curves"]["r"][str(i)] for i in indexes]
        rho = spearmanr(indexes, ratios).statistic
        assert rho > 0.9, f"spearman {rho}"
