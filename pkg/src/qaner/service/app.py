"""HTTP service exposing the conversion/decoding/evaluation pipeline.

All endpoints are stateless: datasets, prompts, and logit records travel
in the request body, file handling stays with the caller (the bundled
CLI is one such client).
"""

from __future__ import annotations

from fastapi import FastAPI, Request
from fastapi.responses import JSONResponse

from .. import pipeline
from ..convert import ConversionMode, convert_dataset, emit_squad2
from ..corpus import parse_bio
from ..errors import ConfigError, QanerError
from ..evaluation import evaluate, make_splits
from ..prompts import StaticMaskFiller
from . import schemas

app = FastAPI(
    title="qaner",
    description="NER-as-extractive-QA conversion, decoding, and evaluation service.",
    version="0.1.0",
)


@app.exception_handler(QanerError)
async def qaner_error_handler(request: Request, exc: QanerError) -> JSONResponse:
    return JSONResponse(
        status_code=400,
        content=schemas.ErrorBody(category=exc.category, detail=str(exc)).model_dump(),
    )


@app.get("/health")
def health() -> dict:
    return {"status": "ok"}


@app.post("/corpus/parse", response_model=schemas.DatasetModel)
def corpus_parse(req: schemas.ParseRequest) -> schemas.DatasetModel:
    dataset = parse_bio(
        req.text,
        req.column_order,
        name=req.name,
        strict=req.strict,
        entity_types=req.entity_types,
    )
    return schemas.DatasetModel.from_core(dataset)


@app.post("/prompts/render", response_model=schemas.PromptSetModel)
def prompts_render(req: schemas.RenderPromptsRequest) -> schemas.PromptSetModel:
    template_cfg = req.template.to_config()
    filler = None
    if req.template.static_candidates is not None:
        filler = StaticMaskFiller([(t, float(s)) for t, s in req.template.static_candidates])
    prompt_set = pipeline.build_prompt_set(template_cfg, req.entity_types, filler=filler)
    return schemas.PromptSetModel(
        template="handcraft" if template_cfg.handcrafted_map else template_cfg.pattern,
        kind=template_cfg.kind.value,
        prompts=[
            schemas.PromptPair(entity_type=etype, question=question)
            for etype, question in prompt_set.prompts
        ],
    )


@app.post("/convert", response_model=schemas.ConvertResponse)
def convert(req: schemas.ConvertRequest) -> schemas.ConvertResponse:
    dataset = req.dataset.to_core()
    prompts = req.prompts.to_core()
    instances, report = convert_dataset(dataset, prompts, ConversionMode(req.mode))
    squad = emit_squad2(instances, req.title or dataset.name)
    return schemas.ConvertResponse(
        squad_json=squad.decode("utf-8"),
        report=schemas.ConversionReportModel.from_core(report),
    )


def _records_from_scoring(req_scoring: schemas.ScoringModel):
    if req_scoring.mode == "inline":
        if req_scoring.records is None:
            raise ConfigError("inline scoring requires records")
        return {r.qa_id: r.to_core() for r in req_scoring.records}
    return None


@app.post("/decode", response_model=schemas.DecodeResponse)
def decode(req: schemas.DecodeRequest) -> schemas.DecodeResponse:
    dataset = req.dataset.to_core()
    prompts = req.prompts.to_core()
    decode_cfg = req.decode.to_core()
    instances, _ = convert_dataset(dataset, prompts, ConversionMode.EVAL)
    records = pipeline.obtain_records(
        instances,
        req.scoring.to_config(),
        decode_cfg,
        jobs=req.jobs,
        preloaded=_records_from_scoring(req.scoring),
    )
    predictions, dropped = pipeline.decode_to_predictions(dataset, records, decode_cfg)
    return schemas.DecodeResponse(predictions=predictions, n_dropped_spans=dropped)


@app.post("/evaluate", response_model=schemas.EvalReportModel)
def evaluate_endpoint(req: schemas.EvaluateRequest) -> schemas.EvalReportModel:
    report = evaluate(req.gold.to_core(), req.predictions)
    return schemas.EvalReportModel.from_core(report)


@app.post("/sample", response_model=schemas.SampleResponse)
def sample(req: schemas.SampleRequest) -> schemas.SampleResponse:
    dataset = req.dataset.to_core()
    samples = make_splits(dataset, req.n_per_type, req.seed, req.n_splits)
    return schemas.SampleResponse(
        splits=[
            schemas.SplitManifest(
                split_index=i,
                n_per_type=req.n_per_type,
                seed=req.seed,
                sentence_ids=[s.id for s in sample.sentences],
            )
            for i, sample in enumerate(samples)
        ]
    )


@app.post("/pipeline", response_model=schemas.PipelineResponse)
def pipeline_endpoint(req: schemas.PipelineRequest) -> schemas.PipelineResponse:
    dataset = req.dataset.to_core()
    prompts = req.prompts.to_core()
    result = pipeline.run_pipeline(
        dataset,
        prompts,
        req.sampling.to_config(),
        req.decode.to_core(),
        req.scoring.to_config(),
        jobs=req.jobs,
        preloaded=_records_from_scoring(req.scoring),
    )
    return schemas.PipelineResponse(
        splits=[
            schemas.SplitResultModel(
                split_index=s.split_index,
                sentence_ids=s.sentence_ids,
                n_dropped_spans=s.n_dropped_spans,
                report=schemas.EvalReportModel.from_core(s.report),
            )
            for s in result.splits
        ],
        aggregate=schemas.AggregateModel(
            n_reports=result.aggregate.n_reports,
            micro_precision_mean=result.aggregate.micro_precision_mean,
            micro_precision_std=result.aggregate.micro_precision_std,
            micro_recall_mean=result.aggregate.micro_recall_mean,
            micro_recall_std=result.aggregate.micro_recall_std,
            micro_f1_mean=result.aggregate.micro_f1_mean,
            micro_f1_std=result.aggregate.micro_f1_std,
        ),
    )
