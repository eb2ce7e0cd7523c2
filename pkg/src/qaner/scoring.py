"""How logits enter the system: files, HTTP scoring, and a test oracle.

The logits file is JSON Lines, one record per line. The HTTP client
POSTs request batches to ``{endpoint}/score`` and joins responses back by
qa_id. The oracle scorer builds records whose decode reproduces a given
gold answer set exactly, which closes the pipeline loop without a model.
"""

from __future__ import annotations

import json
import logging
import math
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from typing import IO, Iterable, Iterator

import httpx

from .decode import DecodeConfig, LogitRecord, Position
from .errors import ScoringError

logger = logging.getLogger(__name__)


@dataclass(frozen=True)
class ScoringRequest:
    qa_id: str
    sentence_id: str
    entity_type: str
    question: str
    context: str


@dataclass(frozen=True)
class OracleSpec:
    """Gold answers plus the logit levels the oracle scorer emits.

    ``gold`` maps qa_id to word-aligned (char_start, char_end) ranges into
    the request context; empty list means unanswerable.
    """

    gold: dict[str, list[tuple[int, int]]]
    peak_logit: float = 10.0
    base_logit: float = 0.0
    null_logit_when_empty: float = 10.0

    def __post_init__(self) -> None:
        if self.peak_logit <= self.base_logit:
            raise ScoringError("peak_logit must exceed base_logit")


def context_word_positions(context: str) -> list[Position]:
    """The null slot followed by one position per whitespace word."""
    positions = [Position(index=0, char_start=None, char_end=None, is_null=True)]
    i = 0
    n = len(context)
    while i < n:
        while i < n and context[i].isspace():
            i += 1
        if i >= n:
            break
        start = i
        while i < n and not context[i].isspace():
            i += 1
        positions.append(Position(index=len(positions), char_start=start, char_end=i, is_null=False))
    return positions


def _required_gap(n_positions: int, n_mentions: int, threshold: float) -> float:
    """Smallest peak-minus-base gap letting every gold candidate clear the
    probability threshold (and keeping unanchored candidates below it).

    Only meaningful for 0 < threshold < 2/G: each gold candidate's
    p_start + p_end equals 2 / (G + (n - G) * exp(-gap)), bounded above
    by 2/G, so no gap can clear a bigger threshold.
    """
    g = n_mentions
    clear_peaks = math.log((n_positions - g) / (2.0 / threshold - g)) if n_positions > g else 0.0
    # Unanchored (base, base) candidates sum to < 2*exp(-gap)/G; keep them under t.
    suppress_junk = math.log(2.0 / (g * threshold))
    return max(clear_peaks, suppress_junk, 0.0)


def oracle_score(
    request: ScoringRequest,
    spec: OracleSpec,
    cfg: DecodeConfig | None = None,
) -> LogitRecord:
    """Build a record that decodes to exactly the gold ranges for this request.

    Positions are whitespace words plus the null slot at index 0. Gold
    ranges put a peak on the start logit of their first word and the end
    logit of their last word; empty gold puts the peak on the null slot.

    When ``cfg`` is given, the peak/base gap is widened as needed so every
    gold candidate clears cfg.prob_threshold. That is mathematically
    possible only below 2/k for k gold mentions (the k start
    probabilities alone already sum to at most 1); past the cap the
    record is emitted best-effort and decodes empty, with a warning.
    """
    if request.qa_id not in spec.gold:
        raise ScoringError(f"oracle spec has no gold entry for qa_id {request.qa_id!r}")
    gold = spec.gold[request.qa_id]
    positions = context_word_positions(request.context)
    word_index_by_start = {p.char_start: p.index for p in positions if not p.is_null}
    word_index_by_end = {p.char_end: p.index for p in positions if not p.is_null}

    gap = spec.peak_logit - spec.base_logit
    if gold and cfg is not None and cfg.prob_threshold > 0:
        if cfg.prob_threshold < 2.0 / len(gold):
            gap = max(gap, _required_gap(len(positions), len(gold), cfg.prob_threshold) + 1.0)
        else:
            logger.warning(
                "oracle record %s: %d gold mention(s) cannot clear prob_threshold %s "
                "(probability cap 2/%d); the record will decode empty",
                request.qa_id, len(gold), cfg.prob_threshold, len(gold),
            )
    peak = spec.base_logit + gap

    start_logits = [spec.base_logit] * len(positions)
    end_logits = [spec.base_logit] * len(positions)
    if gold:
        for char_start, char_end in gold:
            if char_start not in word_index_by_start or char_end not in word_index_by_end:
                raise ScoringError(
                    f"{request.qa_id}: gold range ({char_start}, {char_end}) is not word-aligned "
                    f"in context {request.context!r}"
                )
            start_logits[word_index_by_start[char_start]] = peak
            end_logits[word_index_by_end[char_end]] = peak
    else:
        start_logits[0] = spec.null_logit_when_empty
        end_logits[0] = spec.null_logit_when_empty

    record = LogitRecord(
        qa_id=request.qa_id,
        sentence_id=request.sentence_id,
        entity_type=request.entity_type,
        question=request.question,
        context=request.context,
        positions=tuple(positions),
        start_logits=tuple(start_logits),
        end_logits=tuple(end_logits),
    )
    record.validate()
    return record


def oracle_score_batch(
    requests: list[ScoringRequest],
    spec: OracleSpec,
    cfg: DecodeConfig | None = None,
) -> list[LogitRecord]:
    return [oracle_score(request, spec, cfg) for request in requests]


# --- JSON Lines record files -------------------------------------------------

def record_to_dict(record: LogitRecord) -> dict:
    return {
        "qa_id": record.qa_id,
        "sentence_id": record.sentence_id,
        "entity_type": record.entity_type,
        "question": record.question,
        "context": record.context,
        "positions": [
            {"index": p.index, "char_start": p.char_start, "char_end": p.char_end, "is_null": p.is_null}
            for p in record.positions
        ],
        "start_logits": list(record.start_logits),
        "end_logits": list(record.end_logits),
    }


def record_from_dict(payload: dict, *, where: str = "record") -> LogitRecord:
    try:
        record = LogitRecord(
            qa_id=payload["qa_id"],
            sentence_id=payload["sentence_id"],
            entity_type=payload["entity_type"],
            question=payload["question"],
            context=payload["context"],
            positions=tuple(
                Position(
                    index=int(p["index"]),
                    char_start=None if p["char_start"] is None else int(p["char_start"]),
                    char_end=None if p["char_end"] is None else int(p["char_end"]),
                    is_null=bool(p["is_null"]),
                )
                for p in payload["positions"]
            ),
            start_logits=tuple(float(x) for x in payload["start_logits"]),
            end_logits=tuple(float(x) for x in payload["end_logits"]),
        )
    except (KeyError, TypeError, ValueError) as exc:
        raise ScoringError(f"{where}: malformed logit record: {exc}") from exc
    record.validate()
    return record


def write_logit_records(records: Iterable[LogitRecord], fp: IO[str]) -> int:
    """Write records as JSON Lines; returns the count written."""
    count = 0
    for record in records:
        fp.write(json.dumps(record_to_dict(record), ensure_ascii=False) + "\n")
        count += 1
    return count


def read_logit_records(fp: IO[str]) -> Iterator[LogitRecord]:
    """Stream records from a JSON Lines file, validating each line."""
    for lineno, line in enumerate(fp, start=1):
        line = line.strip()
        if not line:
            continue
        try:
            payload = json.loads(line)
        except json.JSONDecodeError as exc:
            raise ScoringError(f"line {lineno}: malformed JSON: {exc}") from exc
        try:
            yield record_from_dict(payload, where=f"line {lineno}")
        except ScoringError:
            raise
        except Exception as exc:  # decode-level validation errors
            raise ScoringError(f"line {lineno}: {exc}") from exc


def load_logit_records(path: str) -> list[LogitRecord]:
    with open(path, "r", encoding="utf-8") as fp:
        return list(read_logit_records(fp))


def save_logit_records(records: Iterable[LogitRecord], path: str) -> int:
    with open(path, "w", encoding="utf-8") as fp:
        return write_logit_records(records, fp)


# --- HTTP scoring ------------------------------------------------------------

class HttpScoringClient:
    """Batch scoring over HTTP with retries and order-preserving joins.

    Requests are sent in chunks of ``batch_size`` to ``{endpoint}/score``;
    chunks may run concurrently but the output always matches the input
    order. Transport failures and 5xx responses are retried up to
    ``retries`` times; anything unmatched or left over is a protocol error.
    """

    def __init__(
        self,
        endpoint: str,
        *,
        timeout: float = 30.0,
        retries: int = 2,
        batch_size: int = 32,
        concurrency: int = 1,
        backoff: float = 0.2,
        transport: httpx.BaseTransport | None = None,
    ):
        self.endpoint = endpoint.rstrip("/")
        self.timeout = timeout
        self.retries = retries
        self.batch_size = max(1, batch_size)
        self.concurrency = max(1, concurrency)
        self.backoff = backoff
        self._client = httpx.Client(timeout=timeout, transport=transport)

    def close(self) -> None:
        self._client.close()

    def score(self, batch: list[ScoringRequest]) -> list[LogitRecord]:
        if not batch:
            return []
        chunks = [batch[i : i + self.batch_size] for i in range(0, len(batch), self.batch_size)]
        if self.concurrency == 1 or len(chunks) == 1:
            results = [self._score_chunk(chunk) for chunk in chunks]
        else:
            with ThreadPoolExecutor(max_workers=self.concurrency) as pool:
                results = list(pool.map(self._score_chunk, chunks))
        return [record for chunk_records in results for record in chunk_records]

    def _score_chunk(self, chunk: list[ScoringRequest]) -> list[LogitRecord]:
        payload = {
            "requests": [
                {
                    "qa_id": r.qa_id,
                    "sentence_id": r.sentence_id,
                    "entity_type": r.entity_type,
                    "question": r.question,
                    "context": r.context,
                }
                for r in chunk
            ]
        }
        response = self._post_with_retries(payload)
        try:
            records = [record_from_dict(item) for item in response["records"]]
        except (KeyError, TypeError) as exc:
            raise ScoringError(f"scoring endpoint returned malformed body: {exc}") from exc
        by_id: dict[str, LogitRecord] = {}
        for record in records:
            if record.qa_id in by_id:
                raise ScoringError(f"scoring endpoint returned duplicate qa_id {record.qa_id!r}")
            by_id[record.qa_id] = record
        ordered = []
        missing = []
        for request in chunk:
            record = by_id.pop(request.qa_id, None)
            if record is None:
                missing.append(request.qa_id)
            else:
                ordered.append(record)
        if missing:
            raise ScoringError(f"scoring endpoint dropped {len(missing)} request(s): {missing[:5]}")
        if by_id:
            raise ScoringError(f"scoring endpoint returned unknown qa_ids: {sorted(by_id)[:5]}")
        return ordered

    def _post_with_retries(self, payload: dict) -> dict:
        url = f"{self.endpoint}/score"
        attempts = self.retries + 1
        last_error: Exception | None = None
        for attempt in range(attempts):
            try:
                response = self._client.post(url, json=payload)
            except httpx.HTTPError as exc:
                last_error = exc
            else:
                if response.status_code == 200:
                    try:
                        return response.json()
                    except json.JSONDecodeError as exc:
                        raise ScoringError(f"scoring endpoint returned non-JSON body: {exc}") from exc
                if response.status_code < 500:
                    raise ScoringError(
                        f"scoring endpoint error {response.status_code}: {response.text[:200]}"
                    )
                last_error = ScoringError(
                    f"scoring endpoint error {response.status_code}: {response.text[:200]}"
                )
            if attempt < attempts - 1 and self.backoff > 0:
                time.sleep(self.backoff * (2**attempt))
        raise ScoringError(f"scoring failed after {attempts} attempt(s): {last_error}")


def http_score(
    batch: list[ScoringRequest],
    endpoint: str,
    timeout: float = 30.0,
    retries: int = 2,
    **kwargs,
) -> list[LogitRecord]:
    """One-shot convenience wrapper around HttpScoringClient."""
    if not batch:
        return []
    client = HttpScoringClient(endpoint, timeout=timeout, retries=retries, **kwargs)
    try:
        return client.score(batch)
    finally:
        client.close()


def scoring_requests(instances) -> list[ScoringRequest]:
    """One scoring request per QA instance (use eval-mode conversion so
    there is exactly one per (sentence, entity type))."""
    return [
        ScoringRequest(
            qa_id=inst.qa_id,
            sentence_id=inst.sentence_id,
            entity_type=inst.entity_type,
            question=inst.question,
            context=inst.context,
        )
        for inst in instances
    ]


def oracle_spec_from_instances(instances, **kwargs) -> OracleSpec:
    """Oracle gold built from eval-mode instances' own answers."""
    gold = {
        inst.qa_id: [(start, start + len(text)) for text, start in inst.answers]
        for inst in instances
    }
    return OracleSpec(gold=gold, **kwargs)
