"""Pydantic request/response models for the HTTP service.

These mirror the core dataclasses at the wire boundary; conversion
helpers keep the core library free of pydantic.
"""

from __future__ import annotations

from pydantic import BaseModel, Field

from .. import convert, corpus, decode, evaluation, scoring
from ..config import SamplingConfig, ScoringConfig, TemplateConfig
from ..prompts import PromptSet, TemplateKind


class SentenceModel(BaseModel):
    id: str
    tokens: list[str]
    labels: list[str]

    @classmethod
    def from_core(cls, sentence: corpus.NerSentence) -> "SentenceModel":
        return cls(id=sentence.id, tokens=list(sentence.tokens), labels=list(sentence.labels))

    def to_core(self) -> corpus.NerSentence:
        return corpus.make_sentence(self.id, self.tokens, self.labels)


class DatasetModel(BaseModel):
    name: str = "corpus"
    entity_types: list[str] | None = None
    sentences: list[SentenceModel]

    @classmethod
    def from_core(cls, dataset: corpus.NerDataset) -> "DatasetModel":
        return cls(
            name=dataset.name,
            entity_types=list(dataset.entity_types),
            sentences=[SentenceModel.from_core(s) for s in dataset.sentences],
        )

    def to_core(self) -> corpus.NerDataset:
        return corpus.make_dataset(
            self.name,
            [s.to_core() for s in self.sentences],
            entity_types=self.entity_types,
        )


class ParseRequest(BaseModel):
    text: str
    column_order: str = "token_first"
    name: str = "corpus"
    strict: bool = False
    entity_types: list[str] | None = None


class TemplateModel(BaseModel):
    kind: str = "fixed"
    pattern: str = "What is the [E]?"
    handcrafted_map: dict[str, str] | None = None
    use_five_ws: bool = False
    fill_endpoint: str | None = None
    # Fixed candidate ranking used instead of a fill endpoint (offline runs).
    static_candidates: list[tuple[str, float]] | None = None

    def to_config(self) -> TemplateConfig:
        kind = self.kind
        if kind in ("handcraft", "handcrafted", "handcrafted_map"):
            kind = TemplateKind.HANDCRAFTED_MAP.value
        return TemplateConfig(
            kind=TemplateKind(kind),
            pattern=self.pattern,
            handcrafted_map=self.handcrafted_map,
            use_five_ws=self.use_five_ws,
            fill_endpoint=self.fill_endpoint,
        )


class PromptPair(BaseModel):
    entity_type: str
    question: str


class PromptSetModel(BaseModel):
    template: str
    kind: str
    prompts: list[PromptPair]

    def to_core(self) -> PromptSet:
        return PromptSet(prompts=tuple((p.entity_type, p.question) for p in self.prompts))


class RenderPromptsRequest(BaseModel):
    template: TemplateModel
    entity_types: list[str]


class ConvertRequest(BaseModel):
    dataset: DatasetModel
    prompts: PromptSetModel
    mode: str = "train"
    title: str | None = None


class ConversionReportModel(BaseModel):
    n_sentences: int
    n_positive: int
    n_negative: int
    n_repeats: int
    per_type_counts: dict[str, int]

    @classmethod
    def from_core(cls, report: convert.ConversionReport) -> "ConversionReportModel":
        return cls(
            n_sentences=report.n_sentences,
            n_positive=report.n_positive,
            n_negative=report.n_negative,
            n_repeats=report.n_repeats,
            per_type_counts=dict(report.per_type_counts),
        )


class ConvertResponse(BaseModel):
    squad_json: str
    report: ConversionReportModel


class PositionModel(BaseModel):
    index: int
    char_start: int | None = None
    char_end: int | None = None
    is_null: bool = False


class LogitRecordModel(BaseModel):
    qa_id: str
    sentence_id: str
    entity_type: str
    question: str
    context: str
    positions: list[PositionModel]
    start_logits: list[float]
    end_logits: list[float]

    @classmethod
    def from_core(cls, record: decode.LogitRecord) -> "LogitRecordModel":
        return cls.model_validate(scoring.record_to_dict(record))

    def to_core(self) -> decode.LogitRecord:
        return scoring.record_from_dict(self.model_dump())


class DecodeConfigModel(BaseModel):
    n_best: int = 20
    max_answer_positions: int = 30
    prob_threshold: float = 1.0

    def to_core(self) -> decode.DecodeConfig:
        return decode.DecodeConfig(
            n_best=self.n_best,
            max_answer_positions=self.max_answer_positions,
            prob_threshold=self.prob_threshold,
        )


class ScoringModel(BaseModel):
    mode: str = "oracle"  # oracle | http | inline
    records: list[LogitRecordModel] | None = None
    endpoint: str | None = None
    timeout: float = 30.0
    retries: int = 2
    batch_size: int = 32

    def to_config(self) -> ScoringConfig:
        mode = "file" if self.mode == "inline" else self.mode
        return ScoringConfig(
            mode=mode,
            logits_path=None,
            endpoint=self.endpoint,
            timeout=self.timeout,
            retries=self.retries,
            batch_size=self.batch_size,
        )


class DecodeRequest(BaseModel):
    dataset: DatasetModel
    prompts: PromptSetModel
    decode: DecodeConfigModel = Field(default_factory=DecodeConfigModel)
    scoring: ScoringModel = Field(default_factory=ScoringModel)
    jobs: int = 1


class DecodeResponse(BaseModel):
    predictions: dict[str, list[str]]
    n_dropped_spans: int


class TypeScoreModel(BaseModel):
    tp: int
    fp: int
    fn: int
    precision: float
    recall: float
    f1: float


class EvalReportModel(BaseModel):
    micro_precision: float
    micro_recall: float
    micro_f1: float
    n_sentences: int
    per_type: dict[str, TypeScoreModel]

    @classmethod
    def from_core(cls, report: evaluation.EvalReport) -> "EvalReportModel":
        return cls.model_validate(evaluation.report_to_dict(report))


class EvaluateRequest(BaseModel):
    gold: DatasetModel
    predictions: dict[str, list[str]]


class SampleRequest(BaseModel):
    dataset: DatasetModel
    n_per_type: int = 10
    seed: int = 13
    n_splits: int = 5


class SplitManifest(BaseModel):
    split_index: int
    n_per_type: int
    seed: int
    sentence_ids: list[str]


class SampleResponse(BaseModel):
    splits: list[SplitManifest]


class SamplingModel(BaseModel):
    n_per_type: int = 10
    seed: int = 13
    n_splits: int = 5

    def to_config(self) -> SamplingConfig:
        return SamplingConfig(n_per_type=self.n_per_type, seed=self.seed, n_splits=self.n_splits)


class PipelineRequest(BaseModel):
    dataset: DatasetModel
    prompts: PromptSetModel
    sampling: SamplingModel = Field(default_factory=SamplingModel)
    decode: DecodeConfigModel = Field(default_factory=DecodeConfigModel)
    scoring: ScoringModel = Field(default_factory=ScoringModel)
    jobs: int = 1


class SplitResultModel(BaseModel):
    split_index: int
    sentence_ids: list[str]
    n_dropped_spans: int
    report: EvalReportModel


class AggregateModel(BaseModel):
    n_reports: int
    micro_precision_mean: float
    micro_precision_std: float
    micro_recall_mean: float
    micro_recall_std: float
    micro_f1_mean: float
    micro_f1_std: float


class PipelineResponse(BaseModel):
    splits: list[SplitResultModel]
    aggregate: AggregateModel


class ErrorBody(BaseModel):
    category: str
    detail: str
