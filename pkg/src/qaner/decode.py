"""n-best span decoding over per-position start/end logits.

A logit record holds one scored (question, context) pair: a position axis
with character offsets plus parallel start/end logit vectors. Exactly one
position is the designated null slot (the no-answer classification
position); it takes part in the softmax but never forms a span.

Candidate spans are position pairs (i, j), i <= j, scored by
start_logit[i] + end_logit[j]. A candidate is accepted when its start and
end softmax probabilities sum above the configured threshold, then
overlapping survivors are resolved greedily in favor of the higher score.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

from .errors import DecodeError


@dataclass(frozen=True)
class Position:
    """One scored sequence position. Null slot: is_null=True, offsets None.

    Positions with is_null=False and null offsets are legal but never form
    spans (a model bridge may emit question/special positions that way).
    """

    index: int
    char_start: int | None
    char_end: int | None
    is_null: bool


@dataclass(frozen=True)
class LogitRecord:
    qa_id: str
    sentence_id: str
    entity_type: str
    question: str
    context: str
    positions: tuple[Position, ...]
    start_logits: tuple[float, ...]
    end_logits: tuple[float, ...]

    def validate(self) -> None:
        n = len(self.positions)
        if len(self.start_logits) != n or len(self.end_logits) != n:
            raise DecodeError(
                f"record {self.qa_id!r}: positions/start_logits/end_logits lengths differ "
                f"({n}/{len(self.start_logits)}/{len(self.end_logits)})"
            )
        nulls = [p for p in self.positions if p.is_null]
        if len(nulls) != 1:
            raise DecodeError(f"record {self.qa_id!r}: expected exactly one null slot, got {len(nulls)}")
        if nulls[0].char_start is not None or nulls[0].char_end is not None:
            raise DecodeError(f"record {self.qa_id!r}: null slot must carry null char offsets")
        for i, pos in enumerate(self.positions):
            if pos.index != i:
                raise DecodeError(f"record {self.qa_id!r}: position index {pos.index} at slot {i}")
        last_start = -1
        for pos in self.candidate_positions():
            assert pos.char_start is not None and pos.char_end is not None
            if not (0 <= pos.char_start < pos.char_end <= len(self.context)):
                raise DecodeError(
                    f"record {self.qa_id!r}: position {pos.index} offsets "
                    f"({pos.char_start}, {pos.char_end}) invalid for context of length {len(self.context)}"
                )
            if pos.char_start < last_start:
                raise DecodeError(f"record {self.qa_id!r}: char_start not non-decreasing")
            last_start = pos.char_start

    def candidate_positions(self) -> list[Position]:
        """Positions that may anchor a span: non-null with real offsets."""
        return [
            p
            for p in self.positions
            if not p.is_null and p.char_start is not None and p.char_end is not None
        ]


@dataclass(frozen=True)
class DecodedSpan:
    """A scored candidate answer span with char offsets into the context."""

    entity_type: str
    char_start: int
    char_end: int
    surface: str
    score: float
    p_start: float
    p_end: float


@dataclass(frozen=True)
class DecodeConfig:
    n_best: int = 20
    max_answer_positions: int = 30
    prob_threshold: float = 1.0

    def __post_init__(self) -> None:
        if self.n_best < 1:
            raise DecodeError(f"n_best must be >= 1, got {self.n_best}")
        if self.max_answer_positions < 1:
            raise DecodeError(f"max_answer_positions must be >= 1, got {self.max_answer_positions}")
        if not 0.0 <= self.prob_threshold <= 2.0:
            raise DecodeError(f"prob_threshold must be in [0, 2], got {self.prob_threshold}")


def softmax(logits: list[float]) -> list[float]:
    """Numerically stable exp-normalize (max-subtraction)."""
    if not logits:
        raise DecodeError("softmax of empty vector")
    for x in logits:
        if math.isnan(x) or math.isinf(x):
            raise DecodeError(f"softmax input contains non-finite value {x!r}")
    peak = max(logits)
    exps = [math.exp(x - peak) for x in logits]
    total = sum(exps)
    return [e / total for e in exps]


def _candidate_sort_key(span: DecodedSpan):
    # Deterministic ranking: score desc, then earlier start, then shorter.
    return (-span.score, span.char_start, span.char_end)


def nbest_spans(record: LogitRecord, cfg: DecodeConfig) -> list[DecodedSpan]:
    """Enumerate legal (i, j) span candidates and keep the top n_best by score.

    Legal candidates pair offset-bearing positions with i <= j and
    j - i + 1 <= max_answer_positions. Probabilities come from softmax over
    the full position axis, null slot included.
    """
    record.validate()
    candidates_pos = record.candidate_positions()
    if not candidates_pos:
        return []
    p_start = softmax(list(record.start_logits))
    p_end = softmax(list(record.end_logits))
    spans: list[DecodedSpan] = []
    for a, pos_i in enumerate(candidates_pos):
        for pos_j in candidates_pos[a:]:
            if pos_j.index - pos_i.index + 1 > cfg.max_answer_positions:
                break
            assert pos_i.char_start is not None and pos_j.char_end is not None
            spans.append(
                DecodedSpan(
                    entity_type=record.entity_type,
                    char_start=pos_i.char_start,
                    char_end=pos_j.char_end,
                    surface=record.context[pos_i.char_start : pos_j.char_end],
                    score=record.start_logits[pos_i.index] + record.end_logits[pos_j.index],
                    p_start=p_start[pos_i.index],
                    p_end=p_end[pos_j.index],
                )
            )
    spans.sort(key=_candidate_sort_key)
    return spans[: cfg.n_best]


def accept_answers(candidates: list[DecodedSpan], cfg: DecodeConfig) -> list[DecodedSpan]:
    """Threshold then de-overlap candidates; result sorted by char_start.

    A candidate survives when p_start + p_end strictly exceeds
    prob_threshold; survivors are kept greedily in score order (ties:
    earlier start, then shorter span) unless they overlap an already-kept
    span's char range.
    """
    kept: list[DecodedSpan] = []
    for span in sorted(candidates, key=_candidate_sort_key):
        if not span.p_start + span.p_end > cfg.prob_threshold:
            continue
        overlaps = any(
            span.char_start < other.char_end and other.char_start < span.char_end
            for other in kept
        )
        if not overlaps:
            kept.append(span)
    kept.sort(key=lambda s: s.char_start)
    return kept


def decode_record(record: LogitRecord, cfg: DecodeConfig | None = None) -> list[DecodedSpan]:
    """Full decode: n-best enumeration, thresholding, overlap resolution.

    May return several spans (repeated mentions) or none (the null /
    no-answer outcome).
    """
    if cfg is None:
        cfg = DecodeConfig()
    return accept_answers(nbest_spans(record, cfg), cfg)
