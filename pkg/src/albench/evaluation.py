"""Cross-validated metrics, learning curves, and hyperplane-distance exports.

Metrics per run are computed from confusion counts summed over the run's
folds (micro-averaging), which is stable when the positive class is small;
the headline numbers are means over runs.
"""

from __future__ import annotations

import io
import csv
import math
import random
import warnings
from dataclasses import dataclass, field
from typing import Iterable, Sequence

from . import svm
from .features import FeatureVector
from .svm import LinearModel, TrainConfig

LEARNING_CURVE_HEADER = ["iteration", "view", "accuracy", "precision", "recall", "f1"]
DISTANCE_EXPORT_HEADER = ["post_id", "set", "distance", "quadrant"]

QUADRANTS = ("TP", "FP", "TN", "FN")


@dataclass(frozen=True)
class ConfusionCounts:
    tp: int = 0
    fp: int = 0
    tn: int = 0
    fn: int = 0

    @property
    def total(self) -> int:
        return self.tp + self.fp + self.tn + self.fn

    def __add__(self, other: "ConfusionCounts") -> "ConfusionCounts":
        return ConfusionCounts(
            tp=self.tp + other.tp,
            fp=self.fp + other.fp,
            tn=self.tn + other.tn,
            fn=self.fn + other.fn,
        )


@dataclass(frozen=True)
class Metrics:
    accuracy: float
    precision: float
    recall: float
    f1: float
    flags: tuple[str, ...] = ()


def confusion_metrics(counts: ConfusionCounts) -> Metrics:
    """Accuracy/precision/recall/F1; degenerate denominators yield 0, flagged."""
    total = counts.total
    if total < 1:
        raise ValueError("confusion counts are empty")
    flags: list[str] = []
    accuracy = (counts.tp + counts.tn) / total
    if counts.tp + counts.fp == 0:
        precision = 0.0
        flags.append("no_predicted_positives")
    else:
        precision = counts.tp / (counts.tp + counts.fp)
    if counts.tp + counts.fn == 0:
        recall = 0.0
        flags.append("no_actual_positives")
    else:
        recall = counts.tp / (counts.tp + counts.fn)
    f1 = 0.0 if precision + recall == 0 else 2 * precision * recall / (precision + recall)
    return Metrics(accuracy=accuracy, precision=precision, recall=recall, f1=f1, flags=tuple(flags))


@dataclass
class FoldRecord:
    train_ids: list
    eval_ids: list
    train_size: int  # human examples in the training split
    augmented_size: int  # training split incl. appended pseudo-examples
    counts: ConfusionCounts


@dataclass
class RunRecord:
    seed: int
    counts: ConfusionCounts
    metrics: Metrics
    folds: list[FoldRecord] = field(default_factory=list)
    # concatenated out-of-fold (truth, prediction) pairs, id-keyed
    predictions: list[tuple[object, int, int]] = field(default_factory=list)


@dataclass
class MetricsReport:
    accuracy: float
    precision: float
    recall: float
    f1: float
    runs: int
    folds: int
    seeds: list[int]
    per_run: list[RunRecord]
    aggregation: str = "pooled-counts"

    def to_dict(self) -> dict:
        return {
            "accuracy": self.accuracy,
            "precision": self.precision,
            "recall": self.recall,
            "f1": self.f1,
            "runs": self.runs,
            "folds": self.folds,
            "seeds": self.seeds,
            "aggregation": self.aggregation,
            "per_run": [
                {
                    "seed": r.seed,
                    "accuracy": r.metrics.accuracy,
                    "precision": r.metrics.precision,
                    "recall": r.metrics.recall,
                    "f1": r.metrics.f1,
                }
                for r in self.per_run
            ],
        }


def stratified_folds(
    labels: Sequence[int], folds: int, seed: int
) -> list[list[int]]:
    """Seeded stratified split; per-fold class counts are within 1 of ideal."""
    rng = random.Random(seed)
    by_class: dict[int, list[int]] = {}
    for i, y in enumerate(labels):
        by_class.setdefault(y, []).append(i)
    for y, members in sorted(by_class.items()):
        if len(members) < folds:
            raise ValueError(
                f"class {y} has only {len(members)} examples for {folds} folds; use fewer folds"
            )
    fold_members: list[list[int]] = [[] for _ in range(folds)]
    for y, members in sorted(by_class.items()):
        shuffled = members[:]
        rng.shuffle(shuffled)
        for pos, idx in enumerate(shuffled):
            fold_members[pos % folds].append(idx)
    return fold_members


def cross_validate(
    vectors: Sequence[FeatureVector],
    labels: Sequence[int],
    *,
    folds: int = 5,
    runs: int = 5,
    base_seed: int = 0,
    train_config: TrainConfig = TrainConfig(),
    n_features: int | None = None,
    augment: Sequence[tuple[FeatureVector, int]] = (),
    ids: Sequence | None = None,
) -> MetricsReport:
    """Mean metrics over ``runs`` runs of stratified ``folds``-fold CV.

    Run r uses seed ``base_seed + r``. ``augment`` examples (e.g. from
    self-training) are appended to every training split and never enter an
    evaluation fold. ``ids`` label the examples in the fold records.
    """
    if len(vectors) != len(labels):
        raise ValueError("vectors and labels must align")
    if ids is None:
        ids = list(range(len(vectors)))
    if n_features is None:
        n_features = svm._infer_dim(list(vectors) + [v for v, _ in augment])

    per_run: list[RunRecord] = []
    seeds = [base_seed + r for r in range(runs)]
    for seed in seeds:
        fold_members = stratified_folds(labels, folds, seed)
        run_counts = ConfusionCounts()
        record = RunRecord(seed=seed, counts=run_counts, metrics=None)  # type: ignore[arg-type]
        for eval_fold in fold_members:
            eval_set = set(eval_fold)
            train_examples = [
                (vectors[i], labels[i]) for i in range(len(vectors)) if i not in eval_set
            ]
            human_size = len(train_examples)
            train_examples.extend(augment)
            model = svm.train(train_examples, train_config, n_features=n_features)
            counts = ConfusionCounts()
            for i in eval_fold:
                predicted = svm.score(model, vectors[i]).label
                record.predictions.append((ids[i], labels[i], predicted))
                if labels[i] == svm.POSITIVE:
                    counts = counts + (
                        ConfusionCounts(tp=1) if predicted == svm.POSITIVE else ConfusionCounts(fn=1)
                    )
                else:
                    counts = counts + (
                        ConfusionCounts(fp=1) if predicted == svm.POSITIVE else ConfusionCounts(tn=1)
                    )
            run_counts = run_counts + counts
            record.folds.append(
                FoldRecord(
                    train_ids=[ids[i] for i in range(len(vectors)) if i not in eval_set],
                    eval_ids=[ids[i] for i in eval_fold],
                    train_size=human_size,
                    augmented_size=human_size + len(augment),
                    counts=counts,
                )
            )
        record.counts = run_counts
        record.metrics = confusion_metrics(run_counts)
        per_run.append(record)

    return MetricsReport(
        accuracy=sum(r.metrics.accuracy for r in per_run) / runs,
        precision=sum(r.metrics.precision for r in per_run) / runs,
        recall=sum(r.metrics.recall for r in per_run) / runs,
        f1=sum(r.metrics.f1 for r in per_run) / runs,
        runs=runs,
        folds=folds,
        seeds=seeds,
        per_run=per_run,
    )


@dataclass(frozen=True)
class LearningCurveRow:
    iteration: int
    view: str
    accuracy: float
    precision: float
    recall: float
    f1: float


def learning_curve(project, iterations: Iterable[int] | None = None) -> list[LearningCurveRow]:
    """Recompute CV metrics per (iteration, view) over the labels known then.

    ``project`` supplies the label snapshots; iterations whose labels are
    missing or untrainable are skipped with a warning.
    """
    known = set(project.iterations_with_labels())
    if iterations is None:
        iterations = sorted(known)
    rows: list[LearningCurveRow] = []
    for iteration in iterations:
        if iteration not in known:
            warnings.warn(f"iteration {iteration} has no labels recorded, skipped")
            continue
        for view in project.views():
            pairs = project.labels_for_view(view, up_to_iteration=iteration)
            if not pairs:
                warnings.warn(f"iteration {iteration} view {view}: no labels, skipped")
                continue
            vectors = [project.vector(pid) for pid, _ in pairs]
            labels = [y for _, y in pairs]
            try:
                report = cross_validate(
                    vectors,
                    labels,
                    folds=project.config.cv_folds,
                    runs=project.config.cv_runs,
                    base_seed=project.config.cv_seed,
                    train_config=project.config.train,
                    n_features=project.n_features(),
                )
            except (ValueError, svm.TrainingError) as exc:
                warnings.warn(f"iteration {iteration} view {view}: {exc}; skipped")
                continue
            rows.append(
                LearningCurveRow(
                    iteration=iteration,
                    view=view,
                    accuracy=report.accuracy,
                    precision=report.precision,
                    recall=report.recall,
                    f1=report.f1,
                )
            )
    return rows


def learning_curve_csv(rows: Iterable[LearningCurveRow]) -> str:
    out = io.StringIO()
    writer = csv.writer(out, lineterminator="\n")
    writer.writerow(LEARNING_CURVE_HEADER)
    for row in rows:
        writer.writerow(
            [row.iteration, row.view, f"{row.accuracy:.6f}", f"{row.precision:.6f}", f"{row.recall:.6f}", f"{row.f1:.6f}"]
        )
    return out.getvalue()


@dataclass(frozen=True)
class DistanceRow:
    post_id: object
    set: str  # "labeled" | "unlabeled"
    distance: float
    quadrant: str  # TP/FP/TN/FN for labeled posts, "none" otherwise


@dataclass
class DistanceDistribution:
    rows: list[DistanceRow]
    bin_width: float
    quadrant_mode: str
    quadrant_counts: dict[str, int]
    unlabeled_pos: int  # |p+|: unlabeled posts on the positive side
    unlabeled_neg: int
    bins: dict[str, list[tuple[float, float, int]]]  # per set: (lo, hi, count)

    def to_csv(self) -> str:
        out = io.StringIO()
        writer = csv.writer(out, lineterminator="\n")
        writer.writerow(DISTANCE_EXPORT_HEADER)
        for row in self.rows:
            writer.writerow([row.post_id, row.set, f"{row.distance:.9g}", row.quadrant])
        return out.getvalue()

    def summary_dict(self) -> dict:
        return {
            "pos_count": self.unlabeled_pos,
            "neg_count": self.unlabeled_neg,
            "quadrants": self.quadrant_counts,
            "quadrant_mode": self.quadrant_mode,
            "bin_width": self.bin_width,
            "bins": {
                name: [[lo, hi, count] for lo, hi, count in triples]
                for name, triples in self.bins.items()
            },
        }


def _quadrant(human_label: int, distance: float) -> str:
    predicted_positive = distance > 0.0
    if human_label == svm.POSITIVE:
        return "TP" if predicted_positive else "FN"
    return "FP" if predicted_positive else "TN"


def _histogram(distances: Sequence[float], width: float) -> list[tuple[float, float, int]]:
    counts: dict[int, int] = {}
    for d in distances:
        counts[math.floor(d / width)] = counts.get(math.floor(d / width), 0) + 1
    return [(k * width, (k + 1) * width, counts[k]) for k in sorted(counts)]


def distance_distribution(
    model: LinearModel,
    labeled: Sequence[tuple[object, FeatureVector, int]],
    unlabeled: Sequence[tuple[object, FeatureVector]],
    bin_width: float = 0.25,
    quadrant_mode: str = "resubstitution",
    *,
    cv_folds: int = 5,
    cv_seed: int = 0,
    train_config: TrainConfig | None = None,
) -> DistanceDistribution:
    """Signed distances for labeled and unlabeled posts, with TP/FP/TN/FN.

    ``resubstitution`` scores labeled posts against the full model (the
    hyperplane the figures are drawn for); ``out_of_fold`` replaces each
    labeled post's distance with one from a model that never saw it.
    """
    if bin_width <= 0:
        raise ValueError("bin_width must be positive")
    if quadrant_mode not in ("resubstitution", "out_of_fold"):
        raise ValueError(f"unknown quadrant_mode {quadrant_mode!r}")

    labeled_distances: dict[object, float] = {}
    if quadrant_mode == "resubstitution" or not labeled:
        for pid, vec, _ in labeled:
            labeled_distances[pid] = svm.score(model, vec).distance
    else:
        cfg = train_config or model.config or TrainConfig()
        fold_members = stratified_folds([y for _, _, y in labeled], cv_folds, cv_seed)
        for eval_fold in fold_members:
            eval_set = set(eval_fold)
            fold_model = svm.train(
                [(labeled[i][1], labeled[i][2]) for i in range(len(labeled)) if i not in eval_set],
                cfg,
                n_features=model.n_features or None,
            )
            for i in eval_fold:
                labeled_distances[labeled[i][0]] = svm.score(fold_model, labeled[i][1]).distance

    rows: list[DistanceRow] = []
    quadrant_counts = {q: 0 for q in QUADRANTS}
    for pid, _vec, human in labeled:
        d = labeled_distances[pid]
        quadrant = _quadrant(human, d)
        quadrant_counts[quadrant] += 1
        rows.append(DistanceRow(post_id=pid, set="labeled", distance=d, quadrant=quadrant))

    unlabeled_pos = 0
    for pid, vec in unlabeled:
        d = svm.score(model, vec).distance
        if d > 0.0:
            unlabeled_pos += 1
        rows.append(DistanceRow(post_id=pid, set="unlabeled", distance=d, quadrant="none"))

    return DistanceDistribution(
        rows=rows,
        bin_width=bin_width,
        quadrant_mode=quadrant_mode,
        quadrant_counts=quadrant_counts,
        unlabeled_pos=unlabeled_pos,
        unlabeled_neg=len(unlabeled) - unlabeled_pos,
        bins={
            "labeled": _histogram([r.distance for r in rows if r.set == "labeled"], bin_width),
            "unlabeled": _histogram([r.distance for r in rows if r.set == "unlabeled"], bin_width),
        },
    )
