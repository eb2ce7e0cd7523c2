"""Entity-level F1, few-shot sampling, splits, and dev-set carving."""

from __future__ import annotations

import itertools
import random

import pytest

from conftest import make_synthetic_corpus
from qaner.corpus import make_dataset, make_sentence
from qaner.errors import EvaluationError
from qaner.evaluation import (
    DevRegime,
    SampleSpec,
    aggregate_reports,
    carve_dev,
    evaluate,
    make_splits,
    mention_counts,
    sample_few_shot,
)
from test_corpus import reference_segment


def reference_micro_counts(gold_labels: dict[str, list[str]], pred_labels: dict[str, list[str]]):
    """Independent micro tp/fp/fn via span-set intersection per sentence."""
    tp = fp = fn = 0
    for sid, gold in gold_labels.items():
        pred = pred_labels.get(sid, ["O"] * len(gold))
        gold_set = set(reference_segment(gold))
        pred_set = set(reference_segment(pred))
        tp += len(gold_set & pred_set)
        fp += len(pred_set - gold_set)
        fn += len(gold_set - pred_set)
    return tp, fp, fn


def gold_predictions(dataset) -> dict[str, list[str]]:
    return {s.id: list(s.labels) for s in dataset.sentences}


# --- evaluate -------------------------------------------------------------------

def test_identity_predictions_are_perfect(synthetic_corpus):
    report = evaluate(synthetic_corpus, gold_predictions(synthetic_corpus))
    assert report.micro_precision == 1.0
    assert report.micro_recall == 1.0
    assert report.micro_f1 == 1.0
    for score in report.per_type.values():
        assert score.fp == 0 and score.fn == 0


def test_all_outside_predictions_score_zero(tiny_dataset):
    predictions = {s.id: ["O"] * len(s.tokens) for s in tiny_dataset.sentences}
    report = evaluate(tiny_dataset, predictions)
    assert report.micro_precision == 0.0
    assert report.micro_recall == 0.0
    assert report.micro_f1 == 0.0


def test_partial_span_overlap_counts_as_miss():
    gold = make_dataset("g", [make_sentence("s0", ["a", "b"], ["B-PER", "I-PER"])])
    report = evaluate(gold, {"s0": ["B-PER", "O"]})
    score = report.per_type["PER"]
    assert (score.tp, score.fp, score.fn) == (0, 1, 1)
    assert report.micro_f1 == 0.0
    assert reference_micro_counts(
        {"s0": ["B-PER", "I-PER"]}, {"s0": ["B-PER", "O"]}
    ) == (0, 1, 1)


def test_missing_sentences_count_as_all_outside(tiny_dataset):
    report = evaluate(tiny_dataset, {})
    assert report.micro_recall == 0.0
    assert report.n_sentences == 3


def test_unknown_sentence_id_rejected(tiny_dataset):
    with pytest.raises(EvaluationError, match="unknown sentence ids"):
        evaluate(tiny_dataset, {"ghost": ["O"]})


def test_length_mismatch_names_sentence(tiny_dataset):
    with pytest.raises(EvaluationError, match="s0"):
        evaluate(tiny_dataset, {"s0": ["O"]})


def test_malformed_predicted_label_rejected(tiny_dataset):
    with pytest.raises(EvaluationError, match="malformed"):
        evaluate(tiny_dataset, {"s2": ["O", "X", "O"]})


def test_micro_counts_match_per_type_sums(synthetic_corpus):
    rng = random.Random(2)
    predictions = {}
    for sentence in synthetic_corpus.sentences:
        labels = list(sentence.labels)
        if rng.random() < 0.5 and labels:  # corrupt some sentences
            labels[rng.randrange(len(labels))] = "O"
        predictions[sentence.id] = labels
    report = evaluate(synthetic_corpus, predictions)
    tp = sum(s.tp for s in report.per_type.values())
    fp = sum(s.fp for s in report.per_type.values())
    fn = sum(s.fn for s in report.per_type.values())
    assert report.micro_precision == (tp / (tp + fp) if tp + fp else 0.0)
    assert report.micro_recall == (tp / (tp + fn) if tp + fn else 0.0)
    ref = reference_micro_counts(gold_predictions(synthetic_corpus), predictions)
    assert (tp, fp, fn) == ref


def test_micro_counts_permutation_invariant(synthetic_corpus):
    predictions = gold_predictions(synthetic_corpus)
    for sid in list(predictions)[::3]:
        predictions[sid] = ["O"] * len(predictions[sid])
    report_a = evaluate(synthetic_corpus, predictions)
    shuffled = make_dataset(
        synthetic_corpus.name,
        list(synthetic_corpus.sentences)[::-1],
        entity_types=list(synthetic_corpus.entity_types),
    )
    report_b = evaluate(shuffled, predictions)
    assert report_a.micro_f1 == report_b.micro_f1
    assert report_a.per_type == report_b.per_type


# --- few-shot sampling -------------------------------------------------------------

def test_sampler_rejects_sentences_that_would_overflow():
    sentences = [
        make_sentence(f"s{i}", ["a", "b"], ["B-PER", "B-PER"]) for i in range(5)
    ]
    dataset = make_dataset("double", sentences)
    sample = sample_few_shot(dataset, SampleSpec(n_per_type=1, seed=0))
    assert sample.sentences == ()
    # brute force: no non-empty subset stays within the cap
    for r in range(1, 6):
        for combo in itertools.combinations(range(5), r):
            total = 2 * len(combo)
            assert total > 1


def test_sampler_saturation_returns_whole_corpus(synthetic_corpus):
    totals = mention_counts(synthetic_corpus)
    n = max(totals.values())
    sample = sample_few_shot(synthetic_corpus, SampleSpec(n_per_type=n, seed=1))
    assert sample.sentences == synthetic_corpus.sentences


def test_sampler_is_deterministic(synthetic_corpus):
    spec = SampleSpec(n_per_type=5, seed=42, split_index=3)
    first = sample_few_shot(synthetic_corpus, spec)
    second = sample_few_shot(synthetic_corpus, spec)
    assert first == second


def test_sampler_hard_cap_holds(synthetic_corpus):
    for n in (1, 3, 5, 10):
        for split in range(3):
            sample = sample_few_shot(
                synthetic_corpus, SampleSpec(n_per_type=n, seed=7, split_index=split)
            )
            for etype, count in mention_counts(sample).items():
                assert count <= n, (n, split, etype)


def test_sampler_keeps_original_order(synthetic_corpus):
    sample = sample_few_shot(synthetic_corpus, SampleSpec(n_per_type=4, seed=13))
    ids = [s.id for s in sample.sentences]
    original = [s.id for s in synthetic_corpus.sentences if s.id in set(ids)]
    assert ids == original


def test_sampler_inherits_parent_entity_types(synthetic_corpus):
    sample = sample_few_shot(synthetic_corpus, SampleSpec(n_per_type=1, seed=5))
    assert sample.entity_types == synthetic_corpus.entity_types


def test_make_splits_are_seeded_distinct(synthetic_corpus):
    splits = make_splits(synthetic_corpus, n_per_type=5, base_seed=3)
    assert len(splits) == 5
    manifests = [tuple(s.id for s in split.sentences) for split in splits]
    assert len(set(manifests)) > 1
    again = make_splits(synthetic_corpus, n_per_type=5, base_seed=3)
    assert [tuple(s.id for s in split.sentences) for split in again] == manifests


# --- aggregation --------------------------------------------------------------------

def test_aggregate_identical_reports_zero_std(tiny_dataset):
    report = evaluate(tiny_dataset, gold_predictions(tiny_dataset))
    aggregate = aggregate_reports([report, report, report])
    assert aggregate.micro_f1_mean == 1.0
    assert aggregate.micro_f1_std == 0.0


def test_aggregate_mean_of_two(tiny_dataset):
    full = evaluate(tiny_dataset, gold_predictions(tiny_dataset))
    empty = evaluate(
        tiny_dataset, {s.id: ["O"] * len(s.tokens) for s in tiny_dataset.sentences}
    )
    aggregate = aggregate_reports([full, empty])
    assert aggregate.micro_f1_mean == pytest.approx(0.5)
    rigged = aggregate_reports(
        [
            type(full)(0.2, 0.2, 0.2, {}, 1),
            type(full)(0.4, 0.4, 0.4, {}, 1),
        ]
    )
    assert rigged.micro_f1_mean == pytest.approx(0.3)


def test_aggregate_requires_reports():
    with pytest.raises(EvaluationError):
        aggregate_reports([])


# --- dev carving ---------------------------------------------------------------------

def test_carve_no_dev_returns_input(synthetic_corpus):
    train, dev = carve_dev(synthetic_corpus, DevRegime.NO_DEV, seed=1)
    assert train == synthetic_corpus
    assert dev is None


def test_carve_ten_per_type_caps_dev_mentions():
    corpus = make_synthetic_corpus(200, seed=21)
    train, dev = carve_dev(corpus, DevRegime.TEN_PER_TYPE, seed=3)
    assert dev is not None
    for count in mention_counts(dev).values():
        assert count <= 10
    train_ids = {s.id for s in train.sentences}
    assert all(s.id not in train_ids for s in dev.sentences)


def test_carve_all_dev_is_whole_pool():
    corpus = make_synthetic_corpus(100, seed=22)
    train, dev = carve_dev(corpus, DevRegime.ALL_DEV, seed=3)
    assert dev is not None
    assert len(dev.sentences) == 10  # 10% pool
    assert len(train.sentences) == 90


def test_carve_small_dev_matches_ten_per_type_sample_size():
    corpus = make_synthetic_corpus(300, seed=23)
    train, dev = carve_dev(corpus, DevRegime.SMALL_DEV, seed=5)
    assert dev is not None
    target = len(sample_few_shot(train, SampleSpec(n_per_type=10, seed=5)).sentences)
    assert len(dev.sentences) == target
    again = carve_dev(corpus, DevRegime.SMALL_DEV, seed=5)
    assert again[1] == dev


def test_carve_infeasible_regime_errors():
    corpus = make_synthetic_corpus(4, seed=24)
    with pytest.raises(EvaluationError, match="too small"):
        carve_dev(corpus, DevRegime.ALL_DEV, seed=1)


def test_sample_spec_validation():
    with pytest.raises(EvaluationError):
        SampleSpec(n_per_type=0, seed=1)
