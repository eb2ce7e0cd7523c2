"""Batch command-line client for the pipeline service.

Every subcommand reads local files, calls the HTTP service, and writes
local outputs atomically. By default the service runs in-process (the
FastAPI app is driven directly through its ASGI interface); point
--service-url or QANER_SERVICE_URL at a running instance to go remote.
"""

from __future__ import annotations

import json
import logging
import os
import sys
import tempfile
from pathlib import Path

import click

from .config import Config, load_config
from .errors import ConfigError, QanerError
from .scoring import load_logit_records, record_to_dict

SERVICE_URL_ENV = "QANER_SERVICE_URL"

logger = logging.getLogger(__name__)


class ServiceClient:
    """Thin JSON-over-HTTP client; in-process ASGI when no URL is given."""

    def __init__(self, base_url: str | None = None):
        if base_url:
            import httpx

            self._client = httpx.Client(base_url=base_url, timeout=600.0)
        else:
            from fastapi.testclient import TestClient

            from .service.app import app

            self._client = TestClient(app, base_url="http://qaner.local")

    def post(self, path: str, payload: dict) -> dict:
        response = self._client.post(path, json=payload)
        if response.status_code != 200:
            try:
                body = response.json()
            except ValueError:
                body = {}
            category = body.get("category", "service-error")
            detail = body.get("detail") or response.text[:500]
            raise ServiceError(category, detail)
        return response.json()

    def close(self) -> None:
        self._client.close()


class ServiceError(QanerError):
    def __init__(self, category: str, detail: str):
        super().__init__(detail)
        self.category = category


def write_atomic(path: Path, data: bytes) -> None:
    path.parent.mkdir(parents=True, exist_ok=True)
    fd, tmp = tempfile.mkstemp(dir=path.parent, prefix=f".{path.name}.")
    try:
        with os.fdopen(fd, "wb") as fp:
            fp.write(data)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def write_json(path: Path, obj) -> None:
    write_atomic(path, (json.dumps(obj, ensure_ascii=False, indent=2) + "\n").encode("utf-8"))


def _fail(exc: Exception) -> None:
    category = exc.category if isinstance(exc, QanerError) else "internal-error"
    click.echo(f"error: {category}: {exc}", err=True)
    sys.exit(1)


def _load(config_path: str, seed: int | None) -> Config:
    config = load_config(config_path)
    if seed is not None:
        sampling = config.sampling
        config = Config(
            dataset=config.dataset,
            template=config.template,
            decode=config.decode,
            sampling=type(sampling)(
                n_per_type=sampling.n_per_type, seed=seed, n_splits=sampling.n_splits
            ),
            dev_regime=config.dev_regime,
            scoring=config.scoring,
            training=config.training,
        )
    return config


def _parse_dataset(client: ServiceClient, config: Config) -> dict:
    text = Path(config.dataset.path).read_text(encoding="utf-8")
    return client.post(
        "/corpus/parse",
        {
            "text": text,
            "column_order": config.dataset.column_order.value,
            "name": config.dataset.name,
            "strict": config.dataset.strict,
            "entity_types": list(config.dataset.entity_types) if config.dataset.entity_types else None,
        },
    )


def _template_payload(config: Config) -> dict:
    template = config.template
    return {
        "kind": template.kind.value,
        "pattern": template.pattern,
        "handcrafted_map": template.handcrafted_map,
        "use_five_ws": template.use_five_ws,
        "fill_endpoint": template.fill_endpoint,
    }


def _render_prompts(client: ServiceClient, config: Config, dataset: dict) -> dict:
    return client.post(
        "/prompts/render",
        {"template": _template_payload(config), "entity_types": dataset["entity_types"]},
    )


def _scoring_payload(config: Config, logits: str | None, endpoint: str | None) -> dict:
    scoring = config.scoring
    mode = scoring.mode
    if logits:
        mode = "file"
    if endpoint:
        mode = "http"
    if mode == "file":
        path = logits or scoring.logits_path
        if not path:
            raise ConfigError("file scoring requires a logits path")
        records = [record_to_dict(r) for r in load_logit_records(path)]
        return {"mode": "inline", "records": records}
    if mode == "http":
        url = endpoint or scoring.endpoint
        if not url:
            raise ConfigError("http scoring requires an endpoint")
        return {
            "mode": "http",
            "endpoint": url,
            "timeout": scoring.timeout,
            "retries": scoring.retries,
            "batch_size": scoring.batch_size,
        }
    return {"mode": "oracle"}


def common_options(fn):
    fn = click.option("--config", "config_path", required=True, type=click.Path(), help="Run config (JSON).")(fn)
    fn = click.option("--out", "out_dir", default=".", type=click.Path(file_okay=False), help="Output directory.")(fn)
    fn = click.option("--jobs", default=1, show_default=True, help="Parallel scoring requests.")(fn)
    fn = click.option("--seed", default=None, type=int, help="Override the sampling seed.")(fn)
    return fn


@click.group()
@click.option("--service-url", envvar=SERVICE_URL_ENV, default=None, help="Remote service URL (default: in-process).")
@click.pass_context
def main(ctx: click.Context, service_url: str | None) -> None:
    """NER-to-QA conversion, span decoding, and few-shot evaluation."""
    logging.basicConfig(level=logging.INFO, format="%(levelname)s %(name)s: %(message)s")
    ctx.obj = {"service_url": service_url}


def _client(ctx: click.Context) -> ServiceClient:
    return ServiceClient(ctx.obj.get("service_url"))


@main.command()
@common_options
@click.pass_context
def prompts(ctx, config_path, out_dir, jobs, seed):
    """Render one question per entity type and write the prompt set file."""
    try:
        config = _load(config_path, seed)
        client = _client(ctx)
        dataset = _parse_dataset(client, config)
        prompt_set = _render_prompts(client, config, dataset)
        out = Path(out_dir) / "prompts.json"
        write_json(out, prompt_set)
        click.echo(f"wrote {out} ({len(prompt_set['prompts'])} prompts)")
    except Exception as exc:
        _fail(exc)


@main.command()
@common_options
@click.option("--mode", default="train", type=click.Choice(["train", "eval"]), show_default=True)
@click.pass_context
def convert(ctx, config_path, out_dir, jobs, seed, mode):
    """Convert the corpus to SQuAD 2.0 JSON plus a conversion report."""
    try:
        config = _load(config_path, seed)
        client = _client(ctx)
        dataset = _parse_dataset(client, config)
        prompt_set = _render_prompts(client, config, dataset)
        response = client.post(
            "/convert",
            {"dataset": dataset, "prompts": prompt_set, "mode": mode, "title": config.dataset.name},
        )
        squad_path = Path(out_dir) / "squad.json"
        write_atomic(squad_path, response["squad_json"].encode("utf-8"))
        report_path = Path(out_dir) / "conversion_report.json"
        write_json(report_path, response["report"])
        report = response["report"]
        click.echo(
            f"wrote {squad_path} ({report['n_positive']} positive, "
            f"{report['n_negative']} negative, {report['n_repeats']} repeats)"
        )
    except Exception as exc:
        _fail(exc)


@main.command()
@common_options
@click.option("--logits", default=None, type=click.Path(), help="Logits file (JSON Lines).")
@click.option("--endpoint", default=None, help="Scoring endpoint URL.")
@click.pass_context
def decode(ctx, config_path, out_dir, jobs, seed, logits, endpoint):
    """Decode logits into per-sentence BIO predictions."""
    try:
        config = _load(config_path, seed)
        client = _client(ctx)
        dataset = _parse_dataset(client, config)
        prompt_set = _render_prompts(client, config, dataset)
        response = client.post(
            "/decode",
            {
                "dataset": dataset,
                "prompts": prompt_set,
                "decode": _decode_payload(config),
                "scoring": _scoring_payload(config, logits, endpoint),
                "jobs": jobs,
            },
        )
        out = Path(out_dir) / "predictions.json"
        write_json(out, response["predictions"])
        if response["n_dropped_spans"]:
            logger.warning("dropped %d unsnappable span(s)", response["n_dropped_spans"])
        click.echo(f"wrote {out} ({len(response['predictions'])} sentences)")
    except Exception as exc:
        _fail(exc)


def _decode_payload(config: Config) -> dict:
    return {
        "n_best": config.decode.n_best,
        "max_answer_positions": config.decode.max_answer_positions,
        "prob_threshold": config.decode.prob_threshold,
    }


@main.command("eval")
@common_options
@click.option("--predictions", "predictions_path", required=True, type=click.Path(), help="Predictions JSON.")
@click.option("--gold", "gold_path", default=None, type=click.Path(), help="Gold BIO file (default: config dataset).")
@click.pass_context
def eval_command(ctx, config_path, out_dir, jobs, seed, predictions_path, gold_path):
    """Score predictions against gold and write an evaluation report."""
    try:
        config = _load(config_path, seed)
        client = _client(ctx)
        if gold_path:
            text = Path(gold_path).read_text(encoding="utf-8")
            dataset = client.post(
                "/corpus/parse",
                {
                    "text": text,
                    "column_order": config.dataset.column_order.value,
                    "name": config.dataset.name,
                    "strict": config.dataset.strict,
                    "entity_types": list(config.dataset.entity_types)
                    if config.dataset.entity_types
                    else None,
                },
            )
        else:
            dataset = _parse_dataset(client, config)
        try:
            predictions = json.loads(Path(predictions_path).read_text(encoding="utf-8"))
        except (OSError, json.JSONDecodeError) as exc:
            raise ConfigError(f"cannot read predictions file: {exc}") from exc
        report = client.post("/evaluate", {"gold": dataset, "predictions": predictions})
        out = Path(out_dir) / "eval_report.json"
        write_json(out, report)
        click.echo(_report_table(report))
        click.echo(f"wrote {out}")
    except Exception as exc:
        _fail(exc)


def _report_table(report: dict) -> str:
    from .evaluation import EvalReport, TypeScore, report_to_text

    core = EvalReport(
        micro_precision=report["micro_precision"],
        micro_recall=report["micro_recall"],
        micro_f1=report["micro_f1"],
        per_type={etype: TypeScore(**score) for etype, score in report["per_type"].items()},
        n_sentences=report["n_sentences"],
    )
    return report_to_text(core)


@main.command()
@common_options
@click.pass_context
def sample(ctx, config_path, out_dir, jobs, seed):
    """Write the per-split few-shot sample manifests (sentence id lists)."""
    try:
        config = _load(config_path, seed)
        client = _client(ctx)
        dataset = _parse_dataset(client, config)
        response = client.post(
            "/sample",
            {
                "dataset": dataset,
                "n_per_type": config.sampling.n_per_type,
                "seed": config.sampling.seed,
                "n_splits": config.sampling.n_splits,
            },
        )
        for split in response["splits"]:
            out = Path(out_dir) / f"sample_split{split['split_index']}.json"
            write_json(out, split["sentence_ids"])
        click.echo(f"wrote {len(response['splits'])} manifests to {out_dir}")
    except Exception as exc:
        _fail(exc)


@main.command()
@common_options
@click.option("--logits", default=None, type=click.Path(), help="Logits file (JSON Lines).")
@click.option("--endpoint", default=None, help="Scoring endpoint URL.")
@click.pass_context
def pipeline(ctx, config_path, out_dir, jobs, seed, logits, endpoint):
    """Sample, convert, score, decode, and evaluate; write per-split and
    aggregate reports."""
    try:
        config = _load(config_path, seed)
        client = _client(ctx)
        dataset = _parse_dataset(client, config)
        prompt_set = _render_prompts(client, config, dataset)
        response = client.post(
            "/pipeline",
            {
                "dataset": dataset,
                "prompts": prompt_set,
                "sampling": {
                    "n_per_type": config.sampling.n_per_type,
                    "seed": config.sampling.seed,
                    "n_splits": config.sampling.n_splits,
                },
                "decode": _decode_payload(config),
                "scoring": _scoring_payload(config, logits, endpoint),
                "jobs": jobs,
            },
        )
        out_base = Path(out_dir)
        for split in response["splits"]:
            idx = split["split_index"]
            write_json(out_base / f"split{idx}_manifest.json", split["sentence_ids"])
            write_json(out_base / f"split{idx}_report.json", split["report"])
            click.echo(
                f"split {idx}: {len(split['sentence_ids'])} sentences, "
                f"micro F1 {split['report']['micro_f1']:.4f}"
            )
        write_json(out_base / "aggregate.json", response["aggregate"])
        agg = response["aggregate"]
        click.echo(
            f"aggregate over {agg['n_reports']} splits: "
            f"micro F1 {agg['micro_f1_mean']:.4f} ± {agg['micro_f1_std']:.4f}"
        )
    except Exception as exc:
        _fail(exc)


@main.command()
@click.option("--host", default="127.0.0.1", show_default=True)
@click.option("--port", default=8400, show_default=True)
def serve(host: str, port: int) -> None:
    """Run the HTTP service."""
    try:
        import uvicorn
    except ImportError as exc:
        _fail(ConfigError(f"serving requires uvicorn (pip install qaner[serve]): {exc}"))
        return
    from .service.app import app

    uvicorn.run(app, host=host, port=port)


if __name__ == "__main__":
    main()
