"""NER-to-QA conversion, SQuAD emission, and the inverse span mapping."""

from __future__ import annotations

import json
from pathlib import Path

import pytest

from conftest import make_synthetic_corpus
from qaner.convert import (
    ConversionMode,
    QaInstance,
    convert_dataset,
    convert_sentence,
    emit_squad2,
    parse_squad2,
    snap_to_tokens,
    spans_to_ner_prediction,
    split_qa_id,
)
from qaner.corpus import make_dataset, make_sentence
from qaner.decode import DecodedSpan
from qaner.errors import ConversionError
from qaner.prompts import PromptSet

GOLDEN_PATH = Path(__file__).parent / "data" / "tiny_golden_squad.json"


def _decoded(etype: str, cs: int, ce: int, score: float = 5.0) -> DecodedSpan:
    return DecodedSpan(
        entity_type=etype, char_start=cs, char_end=ce, surface="",
        score=score, p_start=0.9, p_end=0.9,
    )


# --- convert_sentence -----------------------------------------------------------

def test_convert_single_mention_and_negative(tiny_prompts):
    sentence = make_sentence("s0", ["john", "runs"], ["B-PER", "O"])
    instances = convert_sentence(sentence, tiny_prompts, ConversionMode.TRAIN)
    assert len(instances) == 2
    positive, negative = instances
    assert positive.qa_id == "s0::PER::0"
    assert not positive.is_impossible
    assert positive.answers == (("john", 0),)
    assert negative.qa_id == "s0::LOC::0"
    assert negative.is_impossible and negative.answers == ()


def test_convert_entity_free_sentence_all_negative(tiny_prompts):
    sentence = make_sentence("s9", ["nothing", "here"], ["O", "O"])
    instances = convert_sentence(sentence, tiny_prompts, ConversionMode.TRAIN)
    assert len(instances) == 2
    assert all(inst.is_impossible for inst in instances)


def test_convert_repeating_mentions_train_mode(tiny_dataset, tiny_prompts):
    sentence = tiny_dataset.sentences[1]  # arrive in paris from paris
    instances = convert_sentence(sentence, tiny_prompts, ConversionMode.TRAIN)
    loc = [inst for inst in instances if inst.entity_type == "LOC"]
    assert [inst.qa_id for inst in loc] == ["s1::LOC::0", "s1::LOC::1"]
    starts = [inst.answers[0][1] for inst in loc]
    assert starts == [10, 21]
    assert loc[0].question == loc[1].question and loc[0].context == loc[1].context


def test_convert_repeating_mentions_eval_mode(tiny_dataset, tiny_prompts):
    sentence = tiny_dataset.sentences[1]
    instances = convert_sentence(sentence, tiny_prompts, ConversionMode.EVAL)
    loc = [inst for inst in instances if inst.entity_type == "LOC"]
    assert len(loc) == 1
    assert loc[0].qa_id == "s1::LOC::0"
    assert loc[0].answers == (("paris", 10), ("paris", 21))


def test_convert_missing_prompt_type_is_error():
    sentence = make_sentence("s0", ["john"], ["B-PER"])
    prompts = PromptSet(prompts=(("LOC", "Where is the location?"),))
    with pytest.raises(ConversionError, match="PER"):
        convert_sentence(sentence, prompts)


def test_qa_id_round_trip():
    assert split_qa_id("s0::LOC::1") == ("s0", "LOC", 1)
    with pytest.raises(ConversionError):
        split_qa_id("nonsense")


# --- convert_dataset ------------------------------------------------------------

def test_convert_dataset_counts(tiny_dataset, tiny_prompts):
    instances, report = convert_dataset(tiny_dataset, tiny_prompts, ConversionMode.TRAIN)
    assert report.n_sentences == 3
    assert report.n_positive == 4
    assert report.n_negative == 3
    assert report.n_repeats == 1
    assert report.per_type_counts == {"PER": 1, "LOC": 3}
    pairs = {(inst.sentence_id, inst.entity_type) for inst in instances}
    assert len(pairs) == report.n_sentences * 2


def test_convert_dataset_one_negative_for_entity_free_corpus():
    dataset = make_dataset(
        "empty", [make_sentence("s0", ["x"], ["O"])], entity_types=["PER"]
    )
    prompts = PromptSet(prompts=(("PER", "Who is the person?"),))
    instances, report = convert_dataset(dataset, prompts)
    assert len(instances) == 1
    assert report.n_negative == 1 and report.n_positive == 0


def test_convert_dataset_distinct_pairs_law_four_types():
    corpus = make_synthetic_corpus(25, seed=3)
    m = len(corpus.entity_types)
    assert m == 4
    prompts = PromptSet(
        prompts=tuple((t, f"What is the {t.lower()}?") for t in corpus.entity_types)
    )
    for mode in (ConversionMode.TRAIN, ConversionMode.EVAL):
        instances, _ = convert_dataset(corpus, prompts, mode)
        for sentence in corpus.sentences:
            pairs = {
                (inst.context, inst.question)
                for inst in instances
                if inst.sentence_id == sentence.id
            }
            assert len(pairs) == m


def test_convert_dataset_rejects_type_mismatch(tiny_dataset):
    prompts = PromptSet(prompts=(("PER", "Who is the person?"),))
    with pytest.raises(ConversionError, match="do not match"):
        convert_dataset(tiny_dataset, prompts)


# --- SQuAD emission ---------------------------------------------------------------

def test_emit_empty_instance_list():
    got = emit_squad2([], "anything")
    assert json.loads(got) == {
        "version": "v2.0",
        "data": [{"title": "anything", "paragraphs": []}],
    }


def test_emit_negative_instance_shape():
    inst = QaInstance(
        qa_id="s0::PER::0", sentence_id="s0", entity_type="PER",
        question="Who is the person?", context="nothing here",
        is_impossible=True, answers=(),
    )
    doc = json.loads(emit_squad2([inst], "t"))
    qa = doc["data"][0]["paragraphs"][0]["qas"][0]
    assert qa["is_impossible"] is True
    assert qa["answers"] == []


def test_emit_matches_frozen_golden(tiny_dataset, tiny_prompts):
    instances, _ = convert_dataset(tiny_dataset, tiny_prompts, ConversionMode.TRAIN)
    assert emit_squad2(instances, "tiny") == GOLDEN_PATH.read_bytes()


def test_golden_answers_verified_by_independent_search(tiny_dataset):
    """Re-extract every golden answer by string search and recount gold
    mentions straight from the labels."""
    doc = json.loads(GOLDEN_PATH.read_text(encoding="utf-8"))
    sentences = {s.id: s for s in tiny_dataset.sentences}
    for paragraph in doc["data"][0]["paragraphs"]:
        for qa in paragraph["qas"]:
            sid, etype, _ = qa["id"].split("::")
            for answer in qa["answers"]:
                start = answer["answer_start"]
                assert paragraph["context"][start : start + len(answer["text"])] == answer["text"]
            mention_count = sum(
                1 for label in sentences[sid].labels if label == f"B-{etype}"
            )
            qas_for_pair = [
                q for q in paragraph["qas"] if q["id"].split("::")[:2] == [sid, etype]
            ]
            if mention_count == 0:
                assert len(qas_for_pair) == 1 and qas_for_pair[0]["is_impossible"]
            else:
                assert len(qas_for_pair) == mention_count


def test_emit_is_byte_deterministic(tiny_dataset, tiny_prompts):
    instances, _ = convert_dataset(tiny_dataset, tiny_prompts, ConversionMode.TRAIN)
    assert emit_squad2(instances, "tiny") == emit_squad2(list(instances), "tiny")
    assert emit_squad2(instances, "tiny").endswith(b"}\n")


def test_emit_parse_round_trip(tiny_dataset, tiny_prompts):
    for mode in (ConversionMode.TRAIN, ConversionMode.EVAL):
        instances, _ = convert_dataset(tiny_dataset, tiny_prompts, mode)
        parsed, title = parse_squad2(emit_squad2(instances, "tiny"))
        assert title == "tiny"
        assert parsed == instances


def test_parse_rechecks_answer_offsets():
    inst = QaInstance(
        qa_id="s0::PER::0", sentence_id="s0", entity_type="PER",
        question="Who?", context="john runs", is_impossible=False,
        answers=(("john", 0),),
    )
    payload = emit_squad2([inst], "t").decode("utf-8").replace('"answer_start": 0', '"answer_start": 3')
    with pytest.raises(ConversionError, match="not found at offset"):
        parse_squad2(payload)


def test_qa_instance_rejects_inconsistent_impossible_flag():
    inst = QaInstance(
        qa_id="a::b::0", sentence_id="a", entity_type="b", question="q",
        context="c", is_impossible=True, answers=(("c", 0),),
    )
    with pytest.raises(ConversionError, match="inconsistent"):
        inst.validate()


def test_qa_id_separator_collision_rejected(tiny_prompts):
    sentence = make_sentence("s::0", ["john"], ["B-PER"])
    with pytest.raises(ConversionError, match="must not contain"):
        convert_sentence(sentence, tiny_prompts)


# --- inverse mapping -----------------------------------------------------------

def test_spans_to_prediction_word_aligned():
    sentence = make_sentence("x", ["go", "to", "new", "york"], ["O"] * 4)
    labels, dropped = spans_to_ner_prediction(sentence, [_decoded("LOC", 6, 14)])
    assert labels == ["O", "O", "B-LOC", "I-LOC"]
    assert dropped == 0


def test_spans_to_prediction_snaps_mid_token_outward():
    sentence = make_sentence("x", ["ab", "cd", "ef"], ["O"] * 3)
    labels, _ = spans_to_ner_prediction(sentence, [_decoded("T", 4, 7)])
    assert labels == ["O", "B-T", "I-T"]


def test_snap_brute_force_over_all_substrings():
    sentence = make_sentence("x", ["ab", "cd", "ef"], ["O"] * 3)
    offsets = sentence.token_char_offsets
    for cs in range(len(sentence.text)):
        for ce in range(cs + 1, len(sentence.text) + 1):
            expected = [
                i for i, (ts, te) in enumerate(offsets) if ts < ce and cs < te
            ]
            got = snap_to_tokens(sentence, cs, ce)
            if not expected:
                assert got is None, (cs, ce)
            else:
                assert got == (expected[0], expected[-1]), (cs, ce)


def test_spans_to_prediction_overlap_resolved_by_score():
    sentence = make_sentence("x", ["a", "b", "c", "d"], ["O"] * 4)
    spans = [_decoded("PER", 0, 3, score=5.0), _decoded("LOC", 2, 7, score=3.0)]
    labels, _ = spans_to_ner_prediction(sentence, spans)
    assert labels == ["B-PER", "I-PER", "O", "O"]


def test_spans_to_prediction_drops_unsnappable_with_counter():
    sentence = make_sentence("x", ["ab", "cd"], ["O", "O"])
    labels, dropped = spans_to_ner_prediction(sentence, [_decoded("T", 2, 3)])
    assert labels == ["O", "O"]
    assert dropped == 1


def test_spans_to_prediction_tie_break_is_deterministic():
    sentence = make_sentence("x", ["a", "b"], ["O", "O"])
    spans = [_decoded("ZZZ", 0, 3, score=5.0), _decoded("AAA", 0, 3, score=5.0)]
    labels, _ = spans_to_ner_prediction(sentence, spans)
    assert labels == ["B-AAA", "I-AAA"]
