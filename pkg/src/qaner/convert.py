"""NER-to-QA conversion and its inverse.

Forward: each (sentence, entity type) pair becomes exactly one question
over the sentence text. Types with k >= 1 gold mentions yield positive
instances (k separate single-answer records in train mode — repeating
examples — or one k-answer record in eval mode); absent types yield one
unanswerable negative. Output is SQuAD 2.0-shaped JSON.

Inverse: decoded character spans are snapped to word boundaries,
de-overlapped across entity types by score, and rendered back to BIO.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from enum import Enum

from .corpus import NerDataset, NerSentence, bio_from_spans, EntitySpan, spans_from_bio
from .decode import DecodedSpan
from .errors import ConversionError
from .prompts import PromptSet

QA_ID_SEP = "::"


class ConversionMode(str, Enum):
    TRAIN = "train"
    EVAL = "eval"


@dataclass(frozen=True)
class QaInstance:
    """One (context, question, answers) record in SQuAD 2.0 shape.

    ``qa_id`` is "{sentence_id}::{entity_type}::{answer_index}"; negatives
    are is_impossible with no answers.
    """

    qa_id: str
    sentence_id: str
    entity_type: str
    question: str
    context: str
    is_impossible: bool
    answers: tuple[tuple[str, int], ...]

    def validate(self) -> None:
        if self.is_impossible != (len(self.answers) == 0):
            raise ConversionError(f"{self.qa_id}: is_impossible inconsistent with answers")
        for text, start in self.answers:
            if self.context[start : start + len(text)] != text:
                raise ConversionError(
                    f"{self.qa_id}: answer {text!r} not found at offset {start} in context"
                )


@dataclass(frozen=True)
class ConversionReport:
    """Instance counts from one conversion run.

    n_positive/n_negative count emitted instances by answerability;
    n_repeats counts gold mentions beyond the first per (sentence, type);
    per_type_counts counts gold mentions per entity type.
    """

    n_sentences: int
    n_positive: int
    n_negative: int
    n_repeats: int
    per_type_counts: dict[str, int]


def _make_qa_id(sentence_id: str, entity_type: str, answer_index: int) -> str:
    for part, label in ((sentence_id, "sentence id"), (entity_type, "entity type")):
        if QA_ID_SEP in part:
            raise ConversionError(f"{label} {part!r} must not contain {QA_ID_SEP!r}")
    return f"{sentence_id}{QA_ID_SEP}{entity_type}{QA_ID_SEP}{answer_index}"


def split_qa_id(qa_id: str) -> tuple[str, str, int]:
    parts = qa_id.split(QA_ID_SEP)
    if len(parts) != 3:
        raise ConversionError(f"malformed qa_id {qa_id!r}")
    try:
        return parts[0], parts[1], int(parts[2])
    except ValueError as exc:
        raise ConversionError(f"malformed qa_id {qa_id!r}") from exc


def convert_sentence(
    sentence: NerSentence,
    prompts: PromptSet,
    mode: ConversionMode | str = ConversionMode.EVAL,
) -> list[QaInstance]:
    """Convert one sentence into QA instances, one question per prompt type."""
    mode = ConversionMode(mode)
    prompt_types = set(prompts.entity_types())
    present = set(sentence.entity_types())
    missing = sorted(present - prompt_types)
    if missing:
        raise ConversionError(
            f"sentence {sentence.id!r} mentions entity types with no prompt: {missing}"
        )
    by_type: dict[str, list[EntitySpan]] = {}
    for span in spans_from_bio(sentence):
        by_type.setdefault(span.entity_type, []).append(span)

    instances: list[QaInstance] = []
    for entity_type, question in prompts.prompts:
        mentions = by_type.get(entity_type, [])
        if not mentions:
            instances.append(
                QaInstance(
                    qa_id=_make_qa_id(sentence.id, entity_type, 0),
                    sentence_id=sentence.id,
                    entity_type=entity_type,
                    question=question,
                    context=sentence.text,
                    is_impossible=True,
                    answers=(),
                )
            )
        elif mode is ConversionMode.TRAIN:
            for i, mention in enumerate(mentions):
                instances.append(
                    QaInstance(
                        qa_id=_make_qa_id(sentence.id, entity_type, i),
                        sentence_id=sentence.id,
                        entity_type=entity_type,
                        question=question,
                        context=sentence.text,
                        is_impossible=False,
                        answers=((mention.surface, mention.start_char),),
                    )
                )
        else:
            instances.append(
                QaInstance(
                    qa_id=_make_qa_id(sentence.id, entity_type, 0),
                    sentence_id=sentence.id,
                    entity_type=entity_type,
                    question=question,
                    context=sentence.text,
                    is_impossible=False,
                    answers=tuple((m.surface, m.start_char) for m in mentions),
                )
            )
    return instances


def convert_dataset(
    dataset: NerDataset,
    prompts: PromptSet,
    mode: ConversionMode | str = ConversionMode.EVAL,
) -> tuple[list[QaInstance], ConversionReport]:
    """Convert every sentence, in dataset order."""
    if not dataset.sentences:
        raise ConversionError("cannot convert an empty dataset")
    prompt_types = prompts.entity_types()
    if set(prompt_types) != set(dataset.entity_types):
        raise ConversionError(
            f"prompt set types {sorted(prompt_types)} do not match "
            f"dataset types {sorted(dataset.entity_types)}"
        )
    instances: list[QaInstance] = []
    n_positive = 0
    n_negative = 0
    n_repeats = 0
    per_type: dict[str, int] = {etype: 0 for etype in prompt_types}
    for sentence in dataset.sentences:
        converted = convert_sentence(sentence, prompts, mode)
        instances.extend(converted)
        mention_counts: dict[str, int] = {}
        for span in spans_from_bio(sentence):
            mention_counts[span.entity_type] = mention_counts.get(span.entity_type, 0) + 1
        for etype, k in mention_counts.items():
            per_type[etype] += k
            n_repeats += k - 1
        n_positive += sum(1 for inst in converted if not inst.is_impossible)
        n_negative += sum(1 for inst in converted if inst.is_impossible)
    report = ConversionReport(
        n_sentences=len(dataset.sentences),
        n_positive=n_positive,
        n_negative=n_negative,
        n_repeats=n_repeats,
        per_type_counts=per_type,
    )
    return instances, report


def emit_squad2(instances: list[QaInstance], title: str) -> bytes:
    """Serialize instances as canonical SQuAD 2.0 JSON bytes.

    One paragraph per sentence (instances grouped in input order), fixed
    key order, UTF-8, LF-terminated; byte-deterministic for equal inputs.
    """
    paragraphs: list[dict] = []
    index_by_sentence: dict[str, int] = {}
    for inst in instances:
        inst.validate()
        if inst.sentence_id not in index_by_sentence:
            index_by_sentence[inst.sentence_id] = len(paragraphs)
            paragraphs.append({"context": inst.context, "qas": []})
        paragraph = paragraphs[index_by_sentence[inst.sentence_id]]
        if paragraph["context"] != inst.context:
            raise ConversionError(
                f"sentence {inst.sentence_id!r} appears with two different contexts"
            )
        paragraph["qas"].append(
            {
                "id": inst.qa_id,
                "question": inst.question,
                "is_impossible": inst.is_impossible,
                "answers": [
                    {"text": text, "answer_start": start} for text, start in inst.answers
                ],
            }
        )
    doc = {"version": "v2.0", "data": [{"title": title, "paragraphs": paragraphs}]}
    return (json.dumps(doc, ensure_ascii=False, indent=2) + "\n").encode("utf-8")


def parse_squad2(data: bytes | str) -> tuple[list[QaInstance], str]:
    """Inverse of emit_squad2; re-checks the answer-at-offset invariant."""
    if isinstance(data, bytes):
        data = data.decode("utf-8")
    try:
        doc = json.loads(data)
        articles = doc["data"]
    except (json.JSONDecodeError, KeyError, TypeError) as exc:
        raise ConversionError(f"malformed SQuAD file: {exc}") from exc
    instances: list[QaInstance] = []
    title = ""
    for article in articles:
        title = article.get("title", title)
        for paragraph in article["paragraphs"]:
            context = paragraph["context"]
            for qa in paragraph["qas"]:
                sentence_id, entity_type, _ = split_qa_id(qa["id"])
                instance = QaInstance(
                    qa_id=qa["id"],
                    sentence_id=sentence_id,
                    entity_type=entity_type,
                    question=qa["question"],
                    context=context,
                    is_impossible=bool(qa.get("is_impossible", not qa["answers"])),
                    answers=tuple((a["text"], int(a["answer_start"])) for a in qa["answers"]),
                )
                instance.validate()
                instances.append(instance)
    return instances, title


def snap_to_tokens(sentence: NerSentence, char_start: int, char_end: int) -> tuple[int, int] | None:
    """Map a char range to the token range it overlaps, or None if it
    touches no token (whitespace-only / out-of-range predictions)."""
    first = None
    last = None
    for i, (tok_start, tok_end) in enumerate(sentence.token_char_offsets):
        if tok_start < char_end and char_start < tok_end:
            if first is None:
                first = i
            last = i
    if first is None or last is None:
        return None
    return first, last


def spans_to_ner_prediction(
    sentence: NerSentence,
    decoded: list[DecodedSpan],
) -> tuple[list[str], int]:
    """Render decoded char spans for one sentence back into BIO tags.

    Char ranges are snapped outward to word boundaries, then overlapping
    token ranges are resolved globally by descending score (ties: earlier
    start, then lexicographic type). Returns the tags and the number of
    unsnappable spans dropped.
    """
    snapped: list[tuple[DecodedSpan, int, int]] = []
    dropped = 0
    for span in decoded:
        token_range = snap_to_tokens(sentence, span.char_start, span.char_end)
        if token_range is None:
            dropped += 1
            continue
        snapped.append((span, token_range[0], token_range[1]))

    snapped.sort(key=lambda item: (-item[0].score, item[1], item[0].entity_type))
    kept: list[EntitySpan] = []
    for span, first, last in snapped:
        if any(first <= k.end_token and k.start_token <= last for k in kept):
            continue
        start_char = sentence.token_char_offsets[first][0]
        end_char = sentence.token_char_offsets[last][1]
        kept.append(
            EntitySpan(
                entity_type=span.entity_type,
                start_token=first,
                end_token=last,
                start_char=start_char,
                end_char=end_char,
                surface=sentence.text[start_char:end_char],
            )
        )
    return bio_from_spans(len(sentence.tokens), kept), dropped
