"""BIO-format NER corpora: parsing, serialization, and span conversion.

Input files are line-oriented: one token per line, blank lines separate
sentences, columns split on any run of spaces/tabs. CoNLL-style files put
the token first and the tag last; MIT-style files put the tag first and
the token last (``column_order``). ``-DOCSTART-`` marker lines are skipped.

Sentence text is canonically defined as the tokens joined by single
spaces, which makes every character offset deterministic.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass
from enum import Enum

from .errors import CorpusError

logger = logging.getLogger(__name__)

OUTSIDE = "O"


class ColumnOrder(str, Enum):
    TOKEN_FIRST = "token_first"
    TAG_FIRST = "tag_first"


@dataclass(frozen=True)
class NerSentence:
    """A tokenized sentence with gold BIO labels and derived char offsets.

    ``text`` is the single-space join of ``tokens``; ``token_char_offsets``
    are half-open ``(start, end)`` ranges into ``text``, one per token.
    """

    id: str
    tokens: tuple[str, ...]
    labels: tuple[str, ...]
    text: str
    token_char_offsets: tuple[tuple[int, int], ...]

    def entity_types(self) -> list[str]:
        """Entity types mentioned in this sentence, first-occurrence order."""
        seen: list[str] = []
        for label in self.labels:
            if label != OUTSIDE:
                etype = label[2:]
                if etype not in seen:
                    seen.append(etype)
        return seen


@dataclass(frozen=True)
class EntitySpan:
    """A typed entity span; token indices inclusive, char range half-open."""

    entity_type: str
    start_token: int
    end_token: int
    start_char: int
    end_char: int
    surface: str


@dataclass(frozen=True)
class NerDataset:
    name: str
    entity_types: tuple[str, ...]
    sentences: tuple[NerSentence, ...]

    def sentence_by_id(self) -> dict[str, NerSentence]:
        return {s.id: s for s in self.sentences}


def make_sentence(sentence_id: str, tokens: list[str], labels: list[str]) -> NerSentence:
    """Build a validated NerSentence, deriving text and char offsets."""
    if len(tokens) != len(labels):
        raise CorpusError(
            f"sentence {sentence_id!r}: {len(tokens)} tokens but {len(labels)} labels"
        )
    if not tokens:
        raise CorpusError(f"sentence {sentence_id!r}: empty sentence")
    for tok in tokens:
        if not tok or any(ch.isspace() for ch in tok):
            raise CorpusError(
                f"sentence {sentence_id!r}: token {tok!r} is empty or contains whitespace"
            )
    for label in labels:
        if not _is_valid_label(label):
            raise CorpusError(f"sentence {sentence_id!r}: malformed BIO label {label!r}")
    offsets = []
    cursor = 0
    for tok in tokens:
        offsets.append((cursor, cursor + len(tok)))
        cursor += len(tok) + 1
    return NerSentence(
        id=sentence_id,
        tokens=tuple(tokens),
        labels=tuple(labels),
        text=" ".join(tokens),
        token_char_offsets=tuple(offsets),
    )


def _is_valid_label(label: str) -> bool:
    if label == OUTSIDE:
        return True
    return len(label) > 2 and label[:2] in ("B-", "I-")


def make_dataset(
    name: str,
    sentences: list[NerSentence],
    entity_types: list[str] | None = None,
) -> NerDataset:
    """Build a dataset; derive entity types in first-occurrence order unless overridden.

    An explicit ``entity_types`` must cover every type occurring in the
    labels (it fixes prompt order across runs, and lets subsamples keep the
    parent corpus type set).
    """
    occurring: list[str] = []
    for sentence in sentences:
        for etype in sentence.entity_types():
            if etype not in occurring:
                occurring.append(etype)
    if entity_types is None:
        entity_types = occurring
    else:
        missing = [t for t in occurring if t not in entity_types]
        if missing:
            raise CorpusError(
                f"entity_types override is missing types present in corpus: {missing}"
            )
        if len(set(entity_types)) != len(entity_types):
            raise CorpusError("entity_types override contains duplicates")
    ids = [s.id for s in sentences]
    if len(set(ids)) != len(ids):
        raise CorpusError("duplicate sentence ids in dataset")
    return NerDataset(name=name, entity_types=tuple(entity_types), sentences=tuple(sentences))


def parse_bio(
    input_text: str,
    column_order: ColumnOrder | str = ColumnOrder.TOKEN_FIRST,
    *,
    name: str = "corpus",
    strict: bool = False,
    entity_types: list[str] | None = None,
) -> NerDataset:
    """Parse a BIO-format corpus into a dataset.

    Non-strict mode repairs stray ``I-X`` tags (no open ``X`` span) to
    ``B-X`` and logs a repair count; strict mode raises instead. A line
    whose column count differs from the first content line is an error.
    """
    column_order = ColumnOrder(column_order)
    sentences: list[NerSentence] = []
    tokens: list[str] = []
    labels: list[str] = []
    expected_columns: int | None = None
    repairs = 0

    def flush() -> None:
        nonlocal tokens, labels, repairs
        if not tokens:
            return
        repaired, n = repair_bio(labels, strict=strict, where=f"sentence s{len(sentences)}")
        repairs += n
        sentences.append(make_sentence(f"s{len(sentences)}", tokens, repaired))
        tokens = []
        labels = []

    for lineno, raw_line in enumerate(input_text.splitlines(), start=1):
        line = raw_line.strip()
        if not line:
            flush()
            continue
        columns = line.split()
        if len(columns) < 2:
            raise CorpusError(f"line {lineno}: expected at least 2 columns, got {len(columns)}")
        if expected_columns is None:
            expected_columns = len(columns)
        elif len(columns) != expected_columns:
            raise CorpusError(
                f"line {lineno}: inconsistent column count "
                f"({len(columns)} columns, expected {expected_columns})"
            )
        if column_order is ColumnOrder.TOKEN_FIRST:
            token, label = columns[0], columns[-1]
        else:
            token, label = columns[-1], columns[0]
        if token == "-DOCSTART-":
            continue
        if not _is_valid_label(label):
            raise CorpusError(f"line {lineno}: malformed BIO label {label!r}")
        tokens.append(token)
        labels.append(label)
    flush()

    if not sentences:
        raise CorpusError("empty corpus")
    if repairs:
        logger.warning("repaired %d stray I- tag(s) while parsing %s", repairs, name)
    return make_dataset(name, sentences, entity_types=entity_types)


def repair_bio(labels: list[str], *, strict: bool = False, where: str = "") -> tuple[list[str], int]:
    """Normalize a label sequence to strict IOB2: stray I-X becomes B-X.

    Returns the repaired sequence and the number of repairs. A stray I-X is
    one not preceded by B-X or I-X of the same type; repair keeps the token
    inside a span rather than dropping it.
    """
    repaired: list[str] = []
    open_type: str | None = None
    count = 0
    for i, label in enumerate(labels):
        if label == OUTSIDE:
            open_type = None
            repaired.append(label)
            continue
        prefix, etype = label[:2], label[2:]
        if prefix == "B-":
            open_type = etype
            repaired.append(label)
        else:
            if open_type == etype:
                repaired.append(label)
            else:
                if strict:
                    raise CorpusError(
                        f"{where or 'sequence'}: stray {label!r} at token {i} "
                        "without a preceding B-/I- of the same type"
                    )
                repaired.append(f"B-{etype}")
                open_type = etype
                count += 1
    return repaired, count


def serialize_bio(dataset: NerDataset, column_order: ColumnOrder | str = ColumnOrder.TOKEN_FIRST) -> str:
    """Inverse of parse_bio: two-column BIO text with blank-line sentence breaks."""
    column_order = ColumnOrder(column_order)
    blocks = []
    for sentence in dataset.sentences:
        lines = []
        for token, label in zip(sentence.tokens, sentence.labels):
            if column_order is ColumnOrder.TOKEN_FIRST:
                lines.append(f"{token} {label}")
            else:
                lines.append(f"{label} {token}")
        blocks.append("\n".join(lines))
    return "\n\n".join(blocks) + "\n"


def spans_from_bio(sentence: NerSentence) -> list[EntitySpan]:
    """Segment BIO labels into typed spans, sorted by start token.

    A span ends when the label becomes O, any B-, or an I- of a different
    type. A stray I-X is treated as opening a span (same repair rule as
    parsing), so this is total on any label sequence.
    """
    spans: list[EntitySpan] = []
    start: int | None = None
    current: str | None = None

    def close(end_token: int) -> None:
        nonlocal start, current
        if current is None or start is None:
            return
        start_char = sentence.token_char_offsets[start][0]
        end_char = sentence.token_char_offsets[end_token][1]
        spans.append(
            EntitySpan(
                entity_type=current,
                start_token=start,
                end_token=end_token,
                start_char=start_char,
                end_char=end_char,
                surface=sentence.text[start_char:end_char],
            )
        )
        start = None
        current = None

    for i, label in enumerate(sentence.labels):
        if label == OUTSIDE:
            close(i - 1)
            continue
        prefix, etype = label[:2], label[2:]
        if prefix == "B-" or current != etype:
            close(i - 1)
            start = i
            current = etype
    close(len(sentence.labels) - 1)
    return spans


def bio_from_spans(n_tokens: int, spans: list[EntitySpan]) -> list[str]:
    """Render non-overlapping token spans back into a BIO label sequence."""
    labels = [OUTSIDE] * n_tokens
    occupied: list[EntitySpan] = []
    for span in sorted(spans, key=lambda s: s.start_token):
        if not (0 <= span.start_token <= span.end_token < n_tokens):
            raise CorpusError(
                f"span {span.entity_type}@{span.start_token}-{span.end_token} "
                f"out of range for {n_tokens} tokens"
            )
        for prev in occupied:
            if span.start_token <= prev.end_token and prev.start_token <= span.end_token:
                raise CorpusError(
                    f"overlapping spans: {prev.entity_type}@{prev.start_token}-{prev.end_token} "
                    f"and {span.entity_type}@{span.start_token}-{span.end_token}"
                )
        occupied.append(span)
        labels[span.start_token] = f"B-{span.entity_type}"
        for i in range(span.start_token + 1, span.end_token + 1):
            labels[i] = f"I-{span.entity_type}"
    return labels


def normalize_entity_type(raw: str) -> str:
    """Normalize a raw entity type for use inside a question.

    Underscores become spaces, the result is lowercased, and runs of
    whitespace collapse to single spaces ("Opinion__Rating" -> "opinion rating").
    """
    if not raw:
        raise CorpusError("empty entity type")
    return " ".join(raw.replace("_", " ").lower().split())
