"""Self-training: adopt the most confidently classified unlabeled posts.

Fractions apply to the predicted sides of the pool: f_pos of the posts the
model places on the positive side (taken farthest-first) and f_neg of the
negative side. Pseudo-examples are appended to cross-validation training
splits only; evaluation folds stay purely human-labeled, and the baseline
and augmented runs share folds and seeds so the deltas isolate the effect.
"""

from __future__ import annotations

import io
from dataclasses import dataclass
from typing import Sequence

from . import evaluation, svm
from .evaluation import MetricsReport
from .features import FeatureVector
from .svm import LinearModel, TrainConfig

POSITIVE_LABEL = "positive"
NEGATIVE_LABEL = "negative"

CAVEAT = (
    "Most self-training settings yield results similar to or worse than the "
    "baseline; treat a favorable delta as setting-specific until it holds "
    "across seeds."
)

FRACTION_SEMANTICS = (
    "f_pos/f_neg are fractions of the predicted-positive and "
    "predicted-negative sides of the unlabeled pool, not of the whole pool."
)


@dataclass(frozen=True)
class SelfTrainConfig:
    f_pos: float
    f_neg: float
    seed: int = 0

    def __post_init__(self):
        if not 0.0 <= self.f_pos <= 1.0 or not 0.0 <= self.f_neg <= 1.0:
            raise ValueError("fractions must lie in [0, 1]")
        if self.f_pos == 0.0 and self.f_neg == 0.0:
            raise ValueError("at least one of f_pos/f_neg must be positive")
        if self.seed < 0:
            raise ValueError("seed must be a nonnegative integer")

    def describe(self) -> str:
        parts = []
        if self.f_pos > 0:
            parts.append(f"+{self.f_pos:.0%} pos.")
        if self.f_neg > 0:
            parts.append(f"+{self.f_neg:.0%} neg.")
        return " ".join(parts)


@dataclass(frozen=True)
class PseudoExample:
    post_id: object
    pseudo_label: str  # POSITIVE_LABEL or NEGATIVE_LABEL
    distance_at_selection: float
    provenance: str = "self-training"


def select_confident(
    model: LinearModel,
    pool: Sequence[tuple[object, FeatureVector]],
    config: SelfTrainConfig,
) -> tuple[list[PseudoExample], tuple[float | None, float | None]]:
    """Adopt floor(f_pos*|P|) positives and floor(f_neg*|N|) negatives.

    P is the predicted-positive side sorted by distance descending, N the
    rest sorted ascending (most negative first). Returns the adopted
    pseudo-examples and the per-side cutoffs: the smallest |distance| among
    the adopted, or None when a side adopted nothing.
    """
    if not pool:
        raise ValueError("unlabeled pool is empty")
    scored = [(pid, svm.score(model, vec).distance) for pid, vec in pool]
    positive_side = sorted(
        (item for item in scored if item[1] > 0.0), key=lambda it: (-it[1], repr(it[0]))
    )
    negative_side = sorted(
        (item for item in scored if item[1] <= 0.0), key=lambda it: (it[1], repr(it[0]))
    )

    n_pos = int(config.f_pos * len(positive_side))
    n_neg = int(config.f_neg * len(negative_side))
    adopted: list[PseudoExample] = []
    for pid, distance in positive_side[:n_pos]:
        adopted.append(PseudoExample(post_id=pid, pseudo_label=POSITIVE_LABEL, distance_at_selection=distance))
    for pid, distance in negative_side[:n_neg]:
        adopted.append(PseudoExample(post_id=pid, pseudo_label=NEGATIVE_LABEL, distance_at_selection=distance))

    pos_cut = abs(positive_side[n_pos - 1][1]) if n_pos > 0 else None
    neg_cut = abs(negative_side[n_neg - 1][1]) if n_neg > 0 else None
    return adopted, (pos_cut, neg_cut)


@dataclass
class SelfTrainRow:
    config: SelfTrainConfig
    n_pseudo_pos: int
    n_pseudo_neg: int
    pos_cut: float | None
    neg_cut: float | None
    metrics: MetricsReport
    deltas: dict[str, float]  # metric -> augmented minus baseline, 3 decimals


@dataclass
class SelfTrainReport:
    baseline: MetricsReport
    rows: list[SelfTrainRow]
    caveat: str = CAVEAT
    fraction_semantics: str = FRACTION_SEMANTICS

    def to_dict(self) -> dict:
        return {
            "caveat": self.caveat,
            "fraction_semantics": self.fraction_semantics,
            "baseline": self.baseline.to_dict(),
            "rows": [
                {
                    "approach": row.config.describe(),
                    "f_pos": row.config.f_pos,
                    "f_neg": row.config.f_neg,
                    "n_pseudo_pos": row.n_pseudo_pos,
                    "n_pseudo_neg": row.n_pseudo_neg,
                    "pos_cut": row.pos_cut,
                    "neg_cut": row.neg_cut,
                    "metrics": row.metrics.to_dict(),
                    "deltas": row.deltas,
                }
                for row in self.rows
            ],
        }

    def to_text_table(self) -> str:
        """Baseline row in absolute values, one signed-delta row per setting."""
        out = io.StringIO()
        header = f"{'Approach':<24}{'Accuracy':>10}{'Precision':>11}{'Recall':>9}{'F1-score':>10}"
        out.write(header + "\n")
        out.write("-" * len(header) + "\n")
        b = self.baseline
        out.write(
            f"{'Baseline':<24}{b.accuracy:>10.3f}{b.precision:>11.3f}{b.recall:>9.3f}{b.f1:>10.3f}\n"
        )
        for row in self.rows:
            d = row.deltas
            out.write(
                f"{row.config.describe():<24}"
                f"{d['accuracy']:>+10.3f}{d['precision']:>+11.3f}{d['recall']:>+9.3f}{d['f1']:>+10.3f}\n"
            )
        out.write("\n" + self.caveat + "\n")
        return out.getvalue()


def _pseudo_to_training(
    pseudo: Sequence[PseudoExample], vectors_by_id: dict
) -> list[tuple[FeatureVector, int]]:
    return [
        (vectors_by_id[p.post_id], svm.POSITIVE if p.pseudo_label == POSITIVE_LABEL else svm.NEGATIVE)
        for p in pseudo
    ]


def run_self_training(
    labeled: Sequence[tuple[object, FeatureVector, int]],
    unlabeled: Sequence[tuple[object, FeatureVector]],
    configs: Sequence[SelfTrainConfig],
    *,
    train_config: TrainConfig = TrainConfig(),
    folds: int = 5,
    runs: int = 5,
    base_seed: int = 0,
    n_features: int | None = None,
) -> SelfTrainReport:
    """Baseline CV vs pseudo-augmented CV, identical folds and seeds.

    The selection model is trained on the full labeled set; each config's
    adopted pseudo-examples extend every training split of the rerun.
    """
    if not labeled:
        raise ValueError("no labeled examples")
    if not unlabeled:
        raise ValueError("unlabeled pool is empty")
    ids = [pid for pid, _, _ in labeled]
    vectors = [vec for _, vec, _ in labeled]
    labels = [y for _, _, y in labeled]
    if n_features is None:
        n_features = svm._infer_dim(vectors + [vec for _, vec in unlabeled])

    baseline = evaluation.cross_validate(
        vectors,
        labels,
        folds=folds,
        runs=runs,
        base_seed=base_seed,
        train_config=train_config,
        n_features=n_features,
        ids=ids,
    )
    selection_model = svm.train(list(zip(vectors, labels)), train_config, n_features=n_features)
    vectors_by_id = {pid: vec for pid, vec in unlabeled}

    rows: list[SelfTrainRow] = []
    for config in configs:
        pseudo, (pos_cut, neg_cut) = select_confident(selection_model, unlabeled, config)
        augmented = evaluation.cross_validate(
            vectors,
            labels,
            folds=folds,
            runs=runs,
            base_seed=base_seed,
            train_config=train_config,
            n_features=n_features,
            augment=_pseudo_to_training(pseudo, vectors_by_id),
            ids=ids,
        )
        deltas = {
            name: round(getattr(augmented, name) - getattr(baseline, name), 3)
            for name in ("accuracy", "precision", "recall", "f1")
        }
        rows.append(
            SelfTrainRow(
                config=config,
                n_pseudo_pos=sum(1 for p in pseudo if p.pseudo_label == POSITIVE_LABEL),
                n_pseudo_neg=sum(1 for p in pseudo if p.pseudo_label == NEGATIVE_LABEL),
                pos_cut=pos_cut,
                neg_cut=neg_cut,
                metrics=augmented,
                deltas=deltas,
            )
        )
    return SelfTrainReport(baseline=baseline, rows=rows)


def run_for_project(project, configs: Sequence[SelfTrainConfig], view: str = "pooled") -> SelfTrainReport:
    """Self-training over a project's label store, read-only.

    ``view`` picks whose labels form the training set (an annotator id or
    the pooled view); the unlabeled pool is every post without a label.
    """
    pairs = project.labels_for_view(view)
    labeled = [(pid, project.vector(pid), y) for pid, y in pairs]
    unlabeled = [(pid, project.vector(pid)) for pid in project.unlabeled_ids()]
    return run_self_training(
        labeled,
        unlabeled,
        configs,
        train_config=project.config.train,
        folds=project.config.cv_folds,
        runs=project.config.cv_runs,
        base_seed=project.config.cv_seed,
        n_features=project.n_features(),
    )
