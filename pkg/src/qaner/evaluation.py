"""Entity-level evaluation and few-shot sampling.

Scoring is exact-match: a predicted span counts as a true positive only
when its (type, start_token, end_token) triple equals a gold span.
Micro scores pool tp/fp/fn across types; precision is 0 by convention
when there are no predictions.

Sampling follows the N-per-entity-type regime: sentences are visited in
a seeded shuffled order and accepted only while no entity type would
exceed N gold mentions; some types may end under N.
"""

from __future__ import annotations

import random
import statistics
from dataclasses import dataclass, replace
from enum import Enum

from .corpus import NerDataset, _is_valid_label, make_dataset, spans_from_bio
from .errors import EvaluationError


@dataclass(frozen=True)
class TypeScore:
    tp: int
    fp: int
    fn: int
    precision: float
    recall: float
    f1: float


@dataclass(frozen=True)
class EvalReport:
    micro_precision: float
    micro_recall: float
    micro_f1: float
    per_type: dict[str, TypeScore]
    n_sentences: int


@dataclass(frozen=True)
class SampleSpec:
    n_per_type: int
    seed: int
    split_index: int = 0

    def __post_init__(self) -> None:
        if self.n_per_type < 1:
            raise EvaluationError(f"n_per_type must be >= 1, got {self.n_per_type}")
        if not 0 <= self.split_index:
            raise EvaluationError(f"split_index must be >= 0, got {self.split_index}")


class DevRegime(str, Enum):
    NO_DEV = "no_dev"
    SMALL_DEV = "small_dev"
    TEN_PER_TYPE = "ten_per_type"
    ALL_DEV = "all_dev"


def _prf(tp: int, fp: int, fn: int) -> tuple[float, float, float]:
    precision = tp / (tp + fp) if tp + fp else 0.0
    recall = tp / (tp + fn) if tp + fn else 0.0
    f1 = 2 * precision * recall / (precision + recall) if precision + recall else 0.0
    return precision, recall, f1


def evaluate(gold: NerDataset, predicted_labels: dict[str, list[str]]) -> EvalReport:
    """Exact-match span F1 of predictions against a gold dataset.

    ``predicted_labels`` maps sentence id to a BIO tag list; missing
    sentences count as all-O, unknown ids are an error.
    """
    known = {s.id for s in gold.sentences}
    unknown = sorted(set(predicted_labels) - known)
    if unknown:
        raise EvaluationError(f"predictions for unknown sentence ids: {unknown[:5]}")

    counts: dict[str, list[int]] = {}  # type -> [tp, fp, fn]
    for sentence in gold.sentences:
        labels = predicted_labels.get(sentence.id)
        if labels is None:
            labels = ["O"] * len(sentence.tokens)
        elif len(labels) != len(sentence.tokens):
            raise EvaluationError(
                f"sentence {sentence.id!r}: {len(labels)} predicted labels "
                f"for {len(sentence.tokens)} tokens"
            )
        bad = [label for label in labels if not _is_valid_label(label)]
        if bad:
            raise EvaluationError(f"sentence {sentence.id!r}: malformed predicted labels {bad[:3]}")
        gold_spans = {
            (s.entity_type, s.start_token, s.end_token) for s in spans_from_bio(sentence)
        }
        pred_spans = {
            (s.entity_type, s.start_token, s.end_token)
            for s in spans_from_bio(replace(sentence, labels=tuple(labels)))
        }
        for key in gold_spans | pred_spans:
            etype = key[0]
            bucket = counts.setdefault(etype, [0, 0, 0])
            if key in gold_spans and key in pred_spans:
                bucket[0] += 1
            elif key in pred_spans:
                bucket[1] += 1
            else:
                bucket[2] += 1

    per_type = {}
    for etype in sorted(counts):
        tp, fp, fn = counts[etype]
        precision, recall, f1 = _prf(tp, fp, fn)
        per_type[etype] = TypeScore(tp=tp, fp=fp, fn=fn, precision=precision, recall=recall, f1=f1)
    tp = sum(score.tp for score in per_type.values())
    fp = sum(score.fp for score in per_type.values())
    fn = sum(score.fn for score in per_type.values())
    precision, recall, f1 = _prf(tp, fp, fn)
    return EvalReport(
        micro_precision=precision,
        micro_recall=recall,
        micro_f1=f1,
        per_type=per_type,
        n_sentences=len(gold.sentences),
    )


def mention_counts(dataset: NerDataset) -> dict[str, int]:
    counts = {etype: 0 for etype in dataset.entity_types}
    for sentence in dataset.sentences:
        for span in spans_from_bio(sentence):
            counts[span.entity_type] += 1
    return counts


def sample_few_shot(dataset: NerDataset, spec: SampleSpec) -> NerDataset:
    """Sample sentences under a hard cap of N gold mentions per entity type.

    Deterministic for (seed, split_index): the visit order is a shuffle
    seeded with seed XOR split_index. A sentence is accepted only if every
    type it mentions stays within N; accepted sentences keep their
    original corpus order. The sample inherits the parent's entity types.
    """
    if not dataset.sentences:
        raise EvaluationError("cannot sample from an empty dataset")
    rng = random.Random(spec.seed ^ spec.split_index)
    order = list(range(len(dataset.sentences)))
    rng.shuffle(order)

    counts = {etype: 0 for etype in dataset.entity_types}
    wanted = set(dataset.entity_types)
    chosen: set[int] = set()
    for index in order:
        sentence = dataset.sentences[index]
        per_sentence: dict[str, int] = {}
        for span in spans_from_bio(sentence):
            per_sentence[span.entity_type] = per_sentence.get(span.entity_type, 0) + 1
        if any(counts[etype] + k > spec.n_per_type for etype, k in per_sentence.items()):
            continue
        chosen.add(index)
        for etype, k in per_sentence.items():
            counts[etype] += k
        if all(counts[etype] >= spec.n_per_type for etype in wanted):
            break
    sentences = [dataset.sentences[i] for i in sorted(chosen)]
    return make_dataset(dataset.name, sentences, entity_types=list(dataset.entity_types))


def make_splits(dataset: NerDataset, n_per_type: int, base_seed: int, n_splits: int = 5) -> list[NerDataset]:
    """The five-way (by default) resampling used to average few-shot runs."""
    return [
        sample_few_shot(dataset, SampleSpec(n_per_type=n_per_type, seed=base_seed, split_index=i))
        for i in range(n_splits)
    ]


@dataclass(frozen=True)
class AggregateReport:
    n_reports: int
    micro_precision_mean: float
    micro_precision_std: float
    micro_recall_mean: float
    micro_recall_std: float
    micro_f1_mean: float
    micro_f1_std: float


def aggregate_reports(reports: list[EvalReport]) -> AggregateReport:
    """Mean and population standard deviation of the micro scores."""
    if not reports:
        raise EvaluationError("no reports to aggregate")

    def stats(values: list[float]) -> tuple[float, float]:
        return statistics.fmean(values), statistics.pstdev(values)

    p_mean, p_std = stats([r.micro_precision for r in reports])
    r_mean, r_std = stats([r.micro_recall for r in reports])
    f_mean, f_std = stats([r.micro_f1 for r in reports])
    return AggregateReport(
        n_reports=len(reports),
        micro_precision_mean=p_mean,
        micro_precision_std=p_std,
        micro_recall_mean=r_mean,
        micro_recall_std=r_std,
        micro_f1_mean=f_mean,
        micro_f1_std=f_std,
    )


def carve_dev(
    dataset: NerDataset,
    regime: DevRegime | str,
    seed: int,
    *,
    pool_fraction: float = 0.1,
) -> tuple[NerDataset, NerDataset | None]:
    """Split a corpus into (train, dev) for a development-set regime.

    All regimes except no_dev first isolate a seeded held-out pool
    (``pool_fraction`` of the sentences); dev is drawn from that pool so
    train and dev are always id-disjoint:
      - no_dev:       dev is None, train is the input unchanged
      - all_dev:      dev is the whole pool
      - ten_per_type: dev is a 10-per-type sample of the pool
      - small_dev:    dev matches the sentence count of a 10-per-type
                      training sample (kept small on purpose)
    """
    regime = DevRegime(regime)
    if regime is DevRegime.NO_DEV:
        return dataset, None

    rng = random.Random(seed)
    order = list(range(len(dataset.sentences)))
    rng.shuffle(order)
    pool_size = int(len(order) * pool_fraction)
    if pool_size < 1:
        raise EvaluationError(
            f"regime {regime.value}: corpus of {len(order)} sentences is too small "
            f"to hold out a {pool_fraction:.0%} dev pool"
        )
    pool_indices = set(order[:pool_size])
    train_sentences = [s for i, s in enumerate(dataset.sentences) if i not in pool_indices]
    pool_sentences = [s for i, s in enumerate(dataset.sentences) if i in pool_indices]
    if not train_sentences:
        raise EvaluationError(f"regime {regime.value}: no sentences left for training")
    train = make_dataset(dataset.name, train_sentences, entity_types=list(dataset.entity_types))
    pool = make_dataset(dataset.name, pool_sentences, entity_types=list(dataset.entity_types))

    if regime is DevRegime.ALL_DEV:
        return train, pool
    if regime is DevRegime.TEN_PER_TYPE:
        return train, sample_few_shot(pool, SampleSpec(n_per_type=10, seed=seed))
    # small_dev: same sentence count as the smallest (10-per-type) train sample
    target = len(sample_few_shot(train, SampleSpec(n_per_type=10, seed=seed)).sentences)
    if target > len(pool.sentences):
        raise EvaluationError(
            f"regime small_dev: pool of {len(pool.sentences)} sentences cannot match "
            f"a 10-per-type sample of {target} sentences"
        )
    dev_order = list(range(len(pool.sentences)))
    random.Random(seed + 1).shuffle(dev_order)
    keep = sorted(dev_order[:target])
    dev = make_dataset(
        dataset.name,
        [pool.sentences[i] for i in keep],
        entity_types=list(dataset.entity_types),
    )
    return train, dev


def report_to_dict(report: EvalReport) -> dict:
    return {
        "micro_precision": report.micro_precision,
        "micro_recall": report.micro_recall,
        "micro_f1": report.micro_f1,
        "n_sentences": report.n_sentences,
        "per_type": {
            etype: {
                "tp": score.tp,
                "fp": score.fp,
                "fn": score.fn,
                "precision": score.precision,
                "recall": score.recall,
                "f1": score.f1,
            }
            for etype, score in report.per_type.items()
        },
    }


def report_to_text(report: EvalReport) -> str:
    """Aligned plain-text table, one row per type plus the micro row."""
    rows = [("type", "tp", "fp", "fn", "precision", "recall", "f1")]
    for etype, s in report.per_type.items():
        rows.append((etype, str(s.tp), str(s.fp), str(s.fn),
                     f"{s.precision:.4f}", f"{s.recall:.4f}", f"{s.f1:.4f}"))
    rows.append(
        (
            "ALL",
            str(sum(s.tp for s in report.per_type.values())),
            str(sum(s.fp for s in report.per_type.values())),
            str(sum(s.fn for s in report.per_type.values())),
            f"{report.micro_precision:.4f}",
            f"{report.micro_recall:.4f}",
            f"{report.micro_f1:.4f}",
        )
    )
    widths = [max(len(row[i]) for row in rows) for i in range(len(rows[0]))]
    lines = ["  ".join(cell.ljust(widths[i]) for i, cell in enumerate(row)).rstrip() for row in rows]
    return "\n".join(lines)
