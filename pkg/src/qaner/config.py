"""Run configuration: a single JSON file, flag/env overrides applied on top.

The scoring endpoint can always be overridden with the
QANER_SCORING_ENDPOINT environment variable.
"""

from __future__ import annotations

import json
import os
from dataclasses import dataclass, field
from pathlib import Path

from .corpus import ColumnOrder
from .decode import DecodeConfig
from .errors import ConfigError
from .prompts import FIVE_WS, PromptTemplate, TemplateKind

SCORING_ENDPOINT_ENV = "QANER_SCORING_ENDPOINT"


@dataclass(frozen=True)
class DatasetConfig:
    path: str
    column_order: ColumnOrder = ColumnOrder.TOKEN_FIRST
    name: str = "corpus"
    strict: bool = False
    entity_types: tuple[str, ...] | None = None


@dataclass(frozen=True)
class TemplateConfig:
    kind: TemplateKind = TemplateKind.FIXED
    pattern: str = "What is the [E]?"
    handcrafted_map: dict[str, str] | None = None
    use_five_ws: bool = False
    fill_endpoint: str | None = None

    def build(self) -> PromptTemplate:
        return PromptTemplate(pattern=self.pattern, kind=self.kind, mapping=self.handcrafted_map)

    def whitelist(self) -> list[str] | None:
        return list(FIVE_WS) if self.use_five_ws else None


@dataclass(frozen=True)
class SamplingConfig:
    n_per_type: int = 10
    seed: int = 13
    n_splits: int = 5


@dataclass(frozen=True)
class ScoringConfig:
    mode: str = "oracle"  # oracle | file | http
    logits_path: str | None = None
    endpoint: str | None = None
    timeout: float = 30.0
    retries: int = 2
    batch_size: int = 32

    def __post_init__(self) -> None:
        if self.mode not in ("oracle", "file", "http"):
            raise ConfigError(f"unknown scoring mode {self.mode!r}")


@dataclass(frozen=True)
class TrainingConfig:
    """Fixed no-dev-regime hyperparameters, passed through to a model
    bridge; the conversion/decoding pipeline itself never consumes them."""

    learning_rate: float = 2e-5
    batch_size: int = 16
    epochs: int = 4


@dataclass(frozen=True)
class Config:
    dataset: DatasetConfig
    template: TemplateConfig = field(default_factory=TemplateConfig)
    decode: DecodeConfig = field(default_factory=DecodeConfig)
    sampling: SamplingConfig = field(default_factory=SamplingConfig)
    dev_regime: str = "no_dev"
    scoring: ScoringConfig = field(default_factory=ScoringConfig)
    training: TrainingConfig = field(default_factory=TrainingConfig)


def _require_file(path: str, what: str) -> None:
    if not Path(path).is_file():
        raise ConfigError(f"{what} file not found: {path}")


def load_config(path: str | Path, *, env: dict[str, str] | None = None) -> Config:
    """Load and validate a config file; referenced files must exist."""
    env = os.environ if env is None else env
    path = Path(path)
    if not path.is_file():
        raise ConfigError(f"config file not found: {path}")
    try:
        raw = json.loads(path.read_text(encoding="utf-8"))
    except json.JSONDecodeError as exc:
        raise ConfigError(f"config is not valid JSON: {exc}") from exc
    base_dir = path.parent
    return config_from_dict(raw, base_dir=base_dir, env=env)


def _resolve(base_dir: Path, value: str) -> str:
    p = Path(value)
    return str(p if p.is_absolute() else base_dir / p)


def config_from_dict(raw: dict, *, base_dir: Path | None = None, env: dict[str, str] | None = None) -> Config:
    env = {} if env is None else env
    base_dir = Path(".") if base_dir is None else base_dir
    try:
        dataset_raw = dict(raw["dataset"])
    except (KeyError, TypeError) as exc:
        raise ConfigError(f"config must contain a 'dataset' section: {exc}") from exc

    dataset_raw["path"] = _resolve(base_dir, dataset_raw["path"])
    types = dataset_raw.get("entity_types")
    dataset = DatasetConfig(
        path=dataset_raw["path"],
        column_order=ColumnOrder(dataset_raw.get("column_order", "token_first")),
        name=dataset_raw.get("name", "corpus"),
        strict=bool(dataset_raw.get("strict", False)),
        entity_types=tuple(types) if types else None,
    )
    _require_file(dataset.path, "dataset")

    template_raw = dict(raw.get("template", {}))
    kind_raw = template_raw.get("kind", "fixed")
    if kind_raw in ("handcraft", "handcrafted", "handcrafted_map"):
        kind = TemplateKind.HANDCRAFTED_MAP
    else:
        try:
            kind = TemplateKind(kind_raw)
        except ValueError as exc:
            raise ConfigError(f"unknown template kind {kind_raw!r}") from exc
    mapping = template_raw.get("handcrafted_map")
    if isinstance(mapping, str):
        mapping_path = _resolve(base_dir, mapping)
        _require_file(mapping_path, "handcrafted map")
        try:
            mapping = json.loads(Path(mapping_path).read_text(encoding="utf-8"))
        except json.JSONDecodeError as exc:
            raise ConfigError(f"handcrafted map is not valid JSON: {exc}") from exc
    if mapping is not None and not isinstance(mapping, dict):
        raise ConfigError("handcrafted_map must be an object or a path to one")
    template = TemplateConfig(
        kind=kind,
        pattern=template_raw.get("pattern", "What is the [E]?"),
        handcrafted_map=mapping,
        use_five_ws=bool(template_raw.get("use_five_ws", False)),
        fill_endpoint=template_raw.get("fill_endpoint"),
    )
    if kind is TemplateKind.HANDCRAFTED_MAP and template.handcrafted_map is None:
        raise ConfigError("handcraft template requires handcrafted_map")

    decode_raw = raw.get("decode", {})
    try:
        decode = DecodeConfig(
            n_best=int(decode_raw.get("n_best", 20)),
            max_answer_positions=int(decode_raw.get("max_answer_positions", 30)),
            prob_threshold=float(decode_raw.get("prob_threshold", 1.0)),
        )
    except Exception as exc:
        raise ConfigError(f"invalid decode config: {exc}") from exc

    sampling_raw = raw.get("sampling", {})
    sampling = SamplingConfig(
        n_per_type=int(sampling_raw.get("n_per_type", 10)),
        seed=int(sampling_raw.get("seed", 13)),
        n_splits=int(sampling_raw.get("n_splits", 5)),
    )
    if sampling.n_per_type < 1 or sampling.n_splits < 1:
        raise ConfigError("sampling.n_per_type and sampling.n_splits must be >= 1")

    scoring_raw = dict(raw.get("scoring", {}))
    endpoint = env.get(SCORING_ENDPOINT_ENV) or scoring_raw.get("endpoint")
    scoring = ScoringConfig(
        mode=scoring_raw.get("mode", "oracle"),
        logits_path=(
            _resolve(base_dir, scoring_raw["logits_path"])
            if scoring_raw.get("logits_path")
            else None
        ),
        endpoint=endpoint,
        timeout=float(scoring_raw.get("timeout", 30.0)),
        retries=int(scoring_raw.get("retries", 2)),
        batch_size=int(scoring_raw.get("batch_size", 32)),
    )
    if scoring.mode == "file":
        if not scoring.logits_path:
            raise ConfigError("scoring mode 'file' requires scoring.logits_path")
        _require_file(scoring.logits_path, "logits")
    if scoring.mode == "http" and not scoring.endpoint:
        raise ConfigError(
            "scoring mode 'http' requires scoring.endpoint "
            f"(or the {SCORING_ENDPOINT_ENV} environment variable)"
        )

    training_raw = raw.get("training", {})
    training = TrainingConfig(
        learning_rate=float(training_raw.get("learning_rate", 2e-5)),
        batch_size=int(training_raw.get("batch_size", 16)),
        epochs=int(training_raw.get("epochs", 4)),
    )

    dev_regime = raw.get("dev_regime", "no_dev")
    if dev_regime not in ("no_dev", "small_dev", "ten_per_type", "all_dev"):
        raise ConfigError(f"unknown dev_regime {dev_regime!r}")

    return Config(
        dataset=dataset,
        template=template,
        decode=decode,
        sampling=sampling,
        dev_regime=dev_regime,
        scoring=scoring,
        training=training,
    )
