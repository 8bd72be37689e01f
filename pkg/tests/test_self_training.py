import math
import random
import re

import pytest

from albench import svm
from albench.features import FeatureVector, build_vocabulary, vectorize
from albench.self_training import (
    NEGATIVE_LABEL,
    POSITIVE_LABEL,
    PseudoExample,
    SelfTrainConfig,
    run_self_training,
    select_confident,
)
from albench.svm import LinearModel, TrainConfig
from albench.synthetic import synthetic_documents


def fv(components):
    return FeatureVector(components=components, norm=1.0 if components else 0.0)


UNIT_MODEL = LinearModel(weights={0: 1.0}, bias=0.0, weight_norm=1.0, n_features=1)


def pool_with_distances(distances):
    return [(f"p{i:04d}", fv({0: d})) for i, d in enumerate(distances)]


# -- config validation --------------------------------------------------------


def test_config_rejects_both_zero():
    with pytest.raises(ValueError):
        SelfTrainConfig(f_pos=0.0, f_neg=0.0)


@pytest.mark.parametrize("bad", [dict(f_pos=-0.1, f_neg=0.5), dict(f_pos=0.5, f_neg=1.5)])
def test_config_rejects_out_of_range_fractions(bad):
    with pytest.raises(ValueError):
        SelfTrainConfig(**bad)


# -- select_confident ----------------------------------------------------------


def test_adopts_five_percent_of_positive_side():
    pool = pool_with_distances([i / 100 for i in range(1, 101)])  # 100 positives
    pseudo, (pos_cut, neg_cut) = select_confident(
        UNIT_MODEL, pool, SelfTrainConfig(f_pos=0.05, f_neg=0.0)
    )
    assert len(pseudo) == 5
    assert all(p.pseudo_label == POSITIVE_LABEL for p in pseudo)
    assert sorted(p.distance_at_selection for p in pseudo) == [0.96, 0.97, 0.98, 0.99, 1.0]
    assert pos_cut == pytest.approx(0.96)
    assert neg_cut is None


def test_one_sided_negative_adoption():
    pool = pool_with_distances([0.5] * 4 + [-i / 10 for i in range(1, 11)])
    pseudo, (pos_cut, neg_cut) = select_confident(
        UNIT_MODEL, pool, SelfTrainConfig(f_pos=0.0, f_neg=0.5)
    )
    assert len(pseudo) == 5
    assert all(p.pseudo_label == NEGATIVE_LABEL for p in pseudo)
    assert sorted(p.distance_at_selection for p in pseudo) == [-1.0, -0.9, -0.8, -0.7, -0.6]
    assert pos_cut is None
    assert neg_cut == pytest.approx(0.6)


def test_selection_equals_brute_force_oracle():
    rng = random.Random(99)
    for trial in range(25):
        distances = [round(rng.uniform(-3, 3), 6) for _ in range(rng.randrange(5, 80))]
        pool = pool_with_distances(distances)
        config = SelfTrainConfig(
            f_pos=rng.choice([0.1, 0.25, 0.5, 1.0]), f_neg=rng.choice([0.1, 0.5, 1.0])
        )
        pseudo, _ = select_confident(UNIT_MODEL, pool, config)

        scored = [(pid, d) for (pid, _), d in zip(pool, distances)]
        pos = sorted((x for x in scored if x[1] > 0), key=lambda x: (-x[1], x[0]))
        neg = sorted((x for x in scored if x[1] <= 0), key=lambda x: (x[1], x[0]))
        expect_pos = [pid for pid, _ in pos[: math.floor(config.f_pos * len(pos))]]
        expect_neg = [pid for pid, _ in neg[: math.floor(config.f_neg * len(neg))]]
        assert [p.post_id for p in pseudo if p.pseudo_label == POSITIVE_LABEL] == expect_pos
        assert [p.post_id for p in pseudo if p.pseudo_label == NEGATIVE_LABEL] == expect_neg


def test_adopted_counts_are_exact_floors():
    pool = pool_with_distances([0.1 * i for i in range(1, 8)] + [-0.1 * i for i in range(1, 14)])
    pseudo, _ = select_confident(UNIT_MODEL, pool, SelfTrainConfig(f_pos=0.5, f_neg=0.33))
    assert sum(1 for p in pseudo if p.pseudo_label == POSITIVE_LABEL) == math.floor(0.5 * 7)
    assert sum(1 for p in pseudo if p.pseudo_label == NEGATIVE_LABEL) == math.floor(0.33 * 13)


def test_threshold_weakly_decreases_as_fraction_grows():
    rng = random.Random(4)
    pool = pool_with_distances([rng.uniform(0.01, 5) for _ in range(60)])
    cuts = []
    for f_pos in (0.1, 0.3, 0.5, 0.9):
        _, (pos_cut, _) = select_confident(UNIT_MODEL, pool, SelfTrainConfig(f_pos=f_pos, f_neg=0.0))
        cuts.append(pos_cut)
    assert cuts == sorted(cuts, reverse=True)


def test_sign_invariant_on_pseudo_examples():
    pool = pool_with_distances([1.0, 2.0, -1.0, -2.0])
    pseudo, _ = select_confident(UNIT_MODEL, pool, SelfTrainConfig(f_pos=1.0, f_neg=1.0))
    for p in pseudo:
        if p.pseudo_label == POSITIVE_LABEL:
            assert p.distance_at_selection > 0
        else:
            assert p.distance_at_selection <= 0
        assert p.provenance == "self-training"


def test_empty_pool_rejected():
    with pytest.raises(ValueError):
        select_confident(UNIT_MODEL, [], SelfTrainConfig(f_pos=0.5, f_neg=0.5))


# -- run_self_training ----------------------------------------------------------


@pytest.fixture(scope="module")
def small_world():
    labeled_docs = synthetic_documents(20, positive_fraction=0.5, seed=21)
    pool_docs = synthetic_documents(120, positive_fraction=0.4, seed=22)
    vocab = build_vocabulary((t for t, _ in labeled_docs + pool_docs), min_df=2)
    labeled = [
        (f"l{i}", vectorize(text, vocab), label) for i, (text, label) in enumerate(labeled_docs)
    ]
    unlabeled = [(f"u{i}", vectorize(text, vocab)) for i, (text, _) in enumerate(pool_docs)]
    truth = {f"u{i}": label for i, (_, label) in enumerate(pool_docs)}
    return {"labeled": labeled, "unlabeled": unlabeled, "vocab": vocab, "truth": truth}


def test_pseudo_examples_never_in_eval_folds(small_world):
    report = run_self_training(
        small_world["labeled"],
        small_world["unlabeled"],
        [SelfTrainConfig(f_pos=0.2, f_neg=0.5)],
        train_config=TrainConfig(epochs=10, seed=0),
        folds=5,
        runs=2,
        base_seed=5,
        n_features=len(small_world["vocab"]),
    )
    row = report.rows[0]
    n_pseudo = row.n_pseudo_pos + row.n_pseudo_neg
    human_ids = {pid for pid, _, _ in small_world["labeled"]}
    for run in row.metrics.per_run:
        for fold in run.folds:
            assert set(fold.eval_ids) <= human_ids
            assert fold.augmented_size == fold.train_size + n_pseudo


def test_baseline_and_augmented_share_folds(small_world):
    report = run_self_training(
        small_world["labeled"],
        small_world["unlabeled"],
        [SelfTrainConfig(f_pos=0.2, f_neg=0.5)],
        train_config=TrainConfig(epochs=10, seed=0),
        folds=5,
        runs=2,
        base_seed=5,
        n_features=len(small_world["vocab"]),
    )
    base_folds = [f.eval_ids for r in report.baseline.per_run for f in r.folds]
    aug_folds = [f.eval_ids for r in report.rows[0].metrics.per_run for f in r.folds]
    assert base_folds == aug_folds


def test_confident_pseudo_labels_match_generating_truth(small_world):
    model = svm.train(
        [(vec, y) for _, vec, y in small_world["labeled"]],
        TrainConfig(epochs=20, seed=1),
        n_features=len(small_world["vocab"]),
    )
    pseudo, _ = select_confident(
        model, small_world["unlabeled"], SelfTrainConfig(f_pos=0.1, f_neg=0.1)
    )
    assert pseudo
    for p in pseudo:
        expected = 1 if small_world["truth"][p.post_id] == 1 else -1
        got = 1 if p.pseudo_label == POSITIVE_LABEL else -1
        assert got == expected


def test_report_table_mirrors_baseline_plus_delta_layout(small_world):
    report = run_self_training(
        small_world["labeled"],
        small_world["unlabeled"],
        [
            SelfTrainConfig(f_pos=0.05, f_neg=0.0),
            SelfTrainConfig(f_pos=0.0, f_neg=0.5),
            SelfTrainConfig(f_pos=0.05, f_neg=0.5),
        ],
        train_config=TrainConfig(epochs=10, seed=0),
        folds=5,
        runs=1,
        base_seed=5,
        n_features=len(small_world["vocab"]),
    )
    table = report.to_text_table()
    lines = table.splitlines()
    assert lines[0].split() == ["Approach", "Accuracy", "Precision", "Recall", "F1-score"]
    baseline_line = next(line for line in lines if line.startswith("Baseline"))
    assert re.findall(r"\d\.\d{3}", baseline_line).__len__() == 4
    delta_lines = [line for line in lines if line.startswith("+")]
    assert len(delta_lines) == 3
    for line in delta_lines:
        assert len(re.findall(r"[+-]\d\.\d{3}", line)) == 4
    assert "self-training" in table  # the caveat is part of the report

    payload = report.to_dict()
    assert [row["approach"] for row in payload["rows"]] == ["+5% pos.", "+50% neg.", "+5% pos. +50% neg."]
    assert payload["fraction_semantics"]


def test_report_format_fixture_renders_reference_shaped_values():
    # format fixture only: these reference-shaped values exercise the
    # 3-decimal baseline row and signed delta rows, not any computation
    from albench.evaluation import MetricsReport
    from albench.self_training import SelfTrainReport, SelfTrainRow

    def metrics(accuracy, precision, recall, f1):
        return MetricsReport(
            accuracy=accuracy, precision=precision, recall=recall, f1=f1,
            runs=5, folds=5, seeds=list(range(5)), per_run=[],
        )

    baseline = metrics(0.700, 0.574, 0.344, 0.428)
    augmented = metrics(0.743, 0.677, 0.411, 0.507)
    row = SelfTrainRow(
        config=SelfTrainConfig(f_pos=0.05, f_neg=0.5),
        n_pseudo_pos=5, n_pseudo_neg=100,
        pos_cut=1.76, neg_cut=0.88,
        metrics=augmented,
        deltas={"accuracy": 0.043, "precision": 0.103, "recall": 0.067, "f1": 0.079},
    )
    table = SelfTrainReport(baseline=baseline, rows=[row]).to_text_table()
    baseline_line = next(l for l in table.splitlines() if l.startswith("Baseline"))
    assert ["0.700", "0.574", "0.344", "0.428"] == baseline_line.split()[1:]
    delta_line = next(l for l in table.splitlines() if l.startswith("+5% pos. +50% neg."))
    assert ["+0.043", "+0.103", "+0.067", "+0.079"] == delta_line.split()[4:]
