"""End-to-end orchestration: sample, convert, score, decode, evaluate.

The scoring step is pluggable: the oracle scorer (closed-loop testing),
a pre-computed logits file, or an HTTP scoring endpoint. Everything else
is deterministic given the config seeds.
"""

from __future__ import annotations

from dataclasses import dataclass

import httpx

from .convert import ConversionMode, QaInstance, convert_dataset, spans_to_ner_prediction
from .corpus import NerDataset
from .decode import DecodeConfig, DecodedSpan, LogitRecord, decode_record
from .errors import ConfigError, ScoringError
from .evaluation import (
    AggregateReport,
    EvalReport,
    aggregate_reports,
    evaluate,
    make_splits,
)
from .prompts import HttpMaskFiller, MaskFiller, PromptSet, render_prompts
from .config import SamplingConfig, ScoringConfig, TemplateConfig
from .scoring import (
    HttpScoringClient,
    load_logit_records,
    oracle_score_batch,
    oracle_spec_from_instances,
    scoring_requests,
)


def build_prompt_set(
    template_cfg: TemplateConfig,
    entity_types: list[str],
    *,
    filler: MaskFiller | None = None,
    transport: httpx.BaseTransport | None = None,
) -> PromptSet:
    """Render the per-type questions a config describes."""
    template = template_cfg.build()
    if filler is None and template_cfg.fill_endpoint:
        filler = HttpMaskFiller(template_cfg.fill_endpoint, transport=transport)
    return render_prompts(template, entity_types, filler, whitelist=template_cfg.whitelist())


def obtain_records(
    instances: list[QaInstance],
    scoring_cfg: ScoringConfig,
    decode_cfg: DecodeConfig,
    *,
    jobs: int = 1,
    transport: httpx.BaseTransport | None = None,
    preloaded: dict[str, LogitRecord] | None = None,
) -> list[LogitRecord]:
    """Fetch one logit record per instance, in instance order."""
    requests = scoring_requests(instances)
    if scoring_cfg.mode == "oracle":
        spec = oracle_spec_from_instances(instances)
        return oracle_score_batch(requests, spec, decode_cfg)
    if scoring_cfg.mode == "file":
        by_id = preloaded
        if by_id is None:
            assert scoring_cfg.logits_path is not None
            by_id = {r.qa_id: r for r in load_logit_records(scoring_cfg.logits_path)}
        missing = [r.qa_id for r in requests if r.qa_id not in by_id]
        if missing:
            raise ScoringError(
                f"logits file lacks {len(missing)} record(s), first missing: {missing[:5]}"
            )
        return [by_id[r.qa_id] for r in requests]
    if scoring_cfg.mode == "http":
        if not scoring_cfg.endpoint:
            raise ConfigError("http scoring requires an endpoint")
        client = HttpScoringClient(
            scoring_cfg.endpoint,
            timeout=scoring_cfg.timeout,
            retries=scoring_cfg.retries,
            batch_size=scoring_cfg.batch_size,
            concurrency=jobs,
            transport=transport,
        )
        try:
            return client.score(requests)
        finally:
            client.close()
    raise ConfigError(f"unknown scoring mode {scoring_cfg.mode!r}")


def decode_to_predictions(
    dataset: NerDataset,
    records: list[LogitRecord],
    decode_cfg: DecodeConfig,
) -> tuple[dict[str, list[str]], int]:
    """Decode records and render per-sentence BIO predictions.

    Every dataset sentence gets a prediction (all-O when no record
    produced a span). Returns the predictions and the count of decoded
    spans dropped because they could not be snapped to tokens.
    """
    by_sentence = dataset.sentence_by_id()
    spans: dict[str, list[DecodedSpan]] = {sid: [] for sid in by_sentence}
    for record in records:
        if record.sentence_id not in by_sentence:
            raise ScoringError(f"record {record.qa_id!r} references unknown sentence {record.sentence_id!r}")
        spans[record.sentence_id].extend(decode_record(record, decode_cfg))
    predictions: dict[str, list[str]] = {}
    dropped = 0
    for sid, sentence in by_sentence.items():
        labels, n_dropped = spans_to_ner_prediction(sentence, spans[sid])
        predictions[sid] = labels
        dropped += n_dropped
    return predictions, dropped


@dataclass(frozen=True)
class SplitResult:
    split_index: int
    sentence_ids: list[str]
    report: EvalReport
    n_dropped_spans: int


@dataclass(frozen=True)
class PipelineResult:
    splits: list[SplitResult]
    aggregate: AggregateReport


def run_split(
    sample: NerDataset,
    prompts: PromptSet,
    decode_cfg: DecodeConfig,
    scoring_cfg: ScoringConfig,
    *,
    split_index: int = 0,
    jobs: int = 1,
    transport: httpx.BaseTransport | None = None,
    preloaded: dict[str, LogitRecord] | None = None,
) -> SplitResult:
    """Convert, score, decode, and evaluate one sampled corpus."""
    instances, _ = convert_dataset(sample, prompts, ConversionMode.EVAL)
    records = obtain_records(
        instances, scoring_cfg, decode_cfg, jobs=jobs, transport=transport, preloaded=preloaded
    )
    predictions, dropped = decode_to_predictions(sample, records, decode_cfg)
    report = evaluate(sample, predictions)
    return SplitResult(
        split_index=split_index,
        sentence_ids=[s.id for s in sample.sentences],
        report=report,
        n_dropped_spans=dropped,
    )


def run_pipeline(
    dataset: NerDataset,
    prompts: PromptSet,
    sampling: SamplingConfig,
    decode_cfg: DecodeConfig,
    scoring_cfg: ScoringConfig,
    *,
    jobs: int = 1,
    transport: httpx.BaseTransport | None = None,
    preloaded: dict[str, LogitRecord] | None = None,
) -> PipelineResult:
    """The full few-shot protocol: N-per-type samples over several splits,
    each scored, decoded, and evaluated; reports averaged at the end."""
    samples = make_splits(dataset, sampling.n_per_type, sampling.seed, sampling.n_splits)
    if preloaded is None and scoring_cfg.mode == "file":
        assert scoring_cfg.logits_path is not None
        preloaded = {r.qa_id: r for r in load_logit_records(scoring_cfg.logits_path)}
    splits = [
        run_split(
            sample,
            prompts,
            decode_cfg,
            scoring_cfg,
            split_index=i,
            jobs=jobs,
            transport=transport,
            preloaded=preloaded,
        )
        for i, sample in enumerate(samples)
    ]
    return PipelineResult(splits=splits, aggregate=aggregate_reports([s.report for s in splits]))
