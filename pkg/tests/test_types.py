from __future__ import annotations

import pytest

from cgd.types import (
    AnnotatedResponse,
    Candidate,
    DecodeConfig,
    ImageRef,
    PromptInput,
    Response,
    Sentence,
)


def test_image_ref_validation():
    assert ImageRef("a").id == "a"
    ref = ImageRef("a", bytes_digest="0" * 64)
    assert ref.bytes_digest == "0" * 64
    with pytest.raises(ValueError):
        ImageRef("")
    with pytest.raises(ValueError):
        ImageRef("a", bytes_digest="xyz")
    with pytest.raises(ValueError):
        ImageRef("a", bytes_digest="A" * 64)


def test_prompt_requires_text():
    with pytest.raises(ValueError):
        PromptInput(ImageRef("a"), "")
    assert PromptInput(ImageRef("a")).text == "Describe this image in detail"


def _sentence(index=1, sim=None):
    return Sentence("A dog.", ("A", "dog."), (-0.1, -0.2), similarity=sim, index=index)


def test_sentence_validation():
    with pytest.raises(ValueError):
        Sentence("A.", ("A.",), (-0.1, -0.2))
    with pytest.raises(ValueError):
        Sentence("A.", (), ())
    with pytest.raises(ValueError):
        Sentence("A.", ("A.",), (0.2,))
    with pytest.raises(ValueError):
        Sentence("A.", ("A.",), (-0.1,), index=0)
    with pytest.raises(ValueError):
        Sentence("A.", ("A.",), (-0.1,), similarity=2.0)
    assert _sentence().token_logprobs == (-0.1, -0.2)


def test_candidate_index_and_lineage_rules():
    cand = Candidate((_sentence(1),), lineage_key=((0, 0),))
    assert cand.token_count == 2
    with pytest.raises(ValueError):
        Candidate((_sentence(2),), lineage_key=((0, 0),))
    with pytest.raises(ValueError):
        Candidate((_sentence(1),), lineage_key=())


def test_candidate_extension():
    cand = Candidate()
    cand = cand.extended(_sentence(1), 0, 2)
    assert cand.lineage_key == ((0, 2),)
    done = cand.finish()
    assert done.finished
    with pytest.raises(ValueError):
        done.extended(_sentence(2), 0, 0)
    with pytest.raises(ValueError):
        cand.extended(_sentence(5), 0, 0)


def test_response_text_must_match_sentences():
    cand = Candidate((_sentence(1),), lineage_key=((0, 0),))
    assert Response(cand, "A dog.").full_text == "A dog."
    with pytest.raises(ValueError):
        Response(cand, "Something else.")


def test_decode_config_bounds():
    cfg = DecodeConfig()
    assert (cfg.n_candidates, cfg.m_samples, cfg.alpha) == (3, 3, 0.99)
    assert (cfg.temperature, cfg.top_k, cfg.max_new_tokens) == (0.2, 5, 500)
    for kwargs in (
        {"n_candidates": 0},
        {"m_samples": 0},
        {"alpha": 1.5},
        {"temperature": 0.0},
        {"top_k": -1},
        {"top_p": 0.0},
        {"top_p": 1.2},
        {"max_new_tokens": 0},
        {"max_sentences": 0},
        {"seed": -1},
        {"seed": 2**64},
        {"mode": "nonsense"},
    ):
        with pytest.raises(ValueError):
            DecodeConfig(**kwargs)


def test_greedy_mode_forces_single_path():
    DecodeConfig(mode="greedy", n_candidates=1, m_samples=1)
    with pytest.raises(ValueError):
        DecodeConfig(mode="greedy")


def test_annotated_response_consistency():
    AnnotatedResponse(
        response_text="A dog. A car.",
        sentences=("A dog.", "A car."),
        labels=(0, 1),
        gold_objects=frozenset({"dog"}),
        mentioned_objects=(frozenset({"dog"}), frozenset({"car"})),
    )
    with pytest.raises(ValueError):
        AnnotatedResponse(
            response_text="A dog.",
            sentences=("A dog.",),
            labels=(1,),
            gold_objects=frozenset({"dog"}),
            mentioned_objects=(frozenset({"dog"}),),
        )
    with pytest.raises(ValueError):
        AnnotatedResponse(
            response_text="A dog.",
            sentences=("A dog.",),
            labels=(0, 1),
            gold_objects=frozenset(),
            mentioned_objects=(frozenset(),),
        )
