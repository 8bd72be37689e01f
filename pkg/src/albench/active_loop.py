"""The annotation loop: uncertainty-sampled batches, assignment, advancing.

An iteration is one batch of the unlabeled posts closest to the current
hyperplane. Closing it retrains per-annotator and pooled models, records
evaluation artifacts, and opens the next batch selected by the configured
model view.
"""

from __future__ import annotations

import heapq
import json
import warnings
from dataclasses import dataclass
from typing import Iterable, Mapping, Sequence

from . import evaluation, svm
from .evaluation import LearningCurveRow
from .features import FeatureVector
from .project import (
    LABEL_TO_INT,
    LABELS,
    LabeledExample,
    Iteration,
    Project,
    ProjectError,
)
from .svm import LinearModel


class LoopError(Exception):
    """Base for loop-state violations."""


class UnknownAnnotatorError(LoopError):
    pass


class NotAssignedError(LoopError):
    pass


class IterationClosedError(LoopError):
    pass


class StaleCriteriaError(LoopError):
    def __init__(self, submitted: int, current: int):
        self.submitted = submitted
        self.current = current
        super().__init__(f"criteria version {submitted} is stale; current version is {current}")


class IncompleteIterationError(LoopError):
    def __init__(self, missing: list[tuple[int, str]]):
        self.missing = missing
        shown = ", ".join(f"(post {pid}, {annotator})" for pid, annotator in missing[:10])
        more = "" if len(missing) <= 10 else f" and {len(missing) - 10} more"
        super().__init__(f"iteration incomplete; missing labels: {shown}{more}")


def select_batch(
    model: LinearModel, pool: Sequence[tuple[int, FeatureVector]], k: int
) -> list[int]:
    """The min(k, |pool|) posts nearest the hyperplane, hardest first.

    Ordered by (|distance|, post_id); equal to sorting the whole pool and
    taking the prefix.
    """
    if not pool:
        raise LoopError("unlabeled pool is empty")
    if k < 1:
        raise LoopError(f"batch size must be >= 1, got {k}")
    keyed = ((abs(svm.score(model, vec).distance), post_id) for post_id, vec in pool)
    return [post_id for _, post_id in heapq.nsmallest(k, keyed)]


def make_assignment(
    batch: Sequence[int], annotators: Sequence[str], overlap_fraction: float
) -> dict[str, list[int]]:
    """Split a batch between two annotators with a shared prefix.

    The first floor(overlap_fraction * |batch|) posts (the most uncertain
    ones) go to both; the rest alternate, starting with the first
    annotator. Assignment lists preserve batch order.
    """
    if len(annotators) != 2:
        raise LoopError("assignment requires exactly two annotators")
    if not 0.0 <= overlap_fraction <= 1.0:
        raise LoopError(f"overlap_fraction {overlap_fraction} outside [0, 1]")
    first, second = annotators
    shared = int(overlap_fraction * len(batch))
    assignments: dict[str, list[int]] = {first: list(batch[:shared]), second: list(batch[:shared])}
    for offset, post_id in enumerate(batch[shared:]):
        assignments[first if offset % 2 == 0 else second].append(post_id)
    return assignments


def _require_annotator(project: Project, annotator_id: str) -> None:
    if annotator_id not in project.config.annotators:
        raise UnknownAnnotatorError(f"annotator {annotator_id!r} is not in the roster")


def record_label(
    project: Project,
    *,
    post_id: int,
    label: str,
    annotator_id: str,
    criteria_version: int,
    certainty: int | None = None,
    rationale: str | None = None,
    idempotency_key: str | None = None,
) -> LabeledExample:
    """Journal one label for an assigned (post, annotator) pair.

    Resubmission by the same annotator overwrites the current view; the
    journal keeps both entries.
    """
    with project.lock:
        _require_annotator(project, annotator_id)
        if label not in LABELS:
            raise ProjectError(f"label must be one of {LABELS}, got {label!r}")
        current = project.current_criteria.version
        if criteria_version != current:
            raise StaleCriteriaError(criteria_version, current)
        open_iteration = project.current_iteration
        if post_id not in open_iteration.assignments.get(annotator_id, []):
            for iteration in project.iterations.values():
                if iteration.closed and post_id in iteration.assignments.get(annotator_id, []):
                    raise IterationClosedError(
                        f"post {post_id} belongs to closed iteration {iteration.index}"
                    )
            raise NotAssignedError(
                f"post {post_id} is not assigned to {annotator_id} in iteration "
                f"{open_iteration.index}"
            )
        example = LabeledExample(
            post_id=post_id,
            label=label,
            annotator_id=annotator_id,
            iteration=open_iteration.index,
            criteria_version=criteria_version,
            certainty=certainty,
            rationale=rationale,
        )
        project.append_label(example, idempotency_key=idempotency_key)
        return example


def import_labels(
    project: Project,
    rows: Iterable[Mapping],
    *,
    enforce_assignment: bool = False,
) -> int:
    """Bulk label import (seed sets, scripted oracles).

    Rows carry post_id, label, annotator_id and optionally certainty and
    rationale. Without ``enforce_assignment`` the labels are journaled at
    the current iteration regardless of batch membership, which is how the
    pre-loop seed set enters the project.
    """
    count = 0
    with project.lock:
        for row in rows:
            if enforce_assignment:
                record_label(
                    project,
                    post_id=row["post_id"],
                    label=row["label"],
                    annotator_id=row["annotator_id"],
                    criteria_version=project.current_criteria.version,
                    certainty=row.get("certainty"),
                    rationale=row.get("rationale"),
                )
            else:
                _require_annotator(project, row["annotator_id"])
                project.append_label(
                    LabeledExample(
                        post_id=row["post_id"],
                        label=row["label"],
                        annotator_id=row["annotator_id"],
                        iteration=project.current_index,
                        criteria_version=project.current_criteria.version,
                        certainty=row.get("certainty"),
                        rationale=row.get("rationale"),
                    )
                )
            count += 1
    return count


def train_view_models(
    project: Project, up_to_iteration: int
) -> tuple[dict[str, LinearModel], dict[str, str]]:
    """Train the per-annotator and pooled models on labels up to an iteration.

    Views without trainable data (no labels yet, or a single class) are
    skipped with the reason recorded, not fatal: early iterations often
    cannot train every view.
    """
    models: dict[str, LinearModel] = {}
    skipped: dict[str, str] = {}
    n_features = project.n_features()
    for view in project.views():
        pairs = project.labels_for_view(view, up_to_iteration=up_to_iteration)
        examples = [(project.vector(pid), y) for pid, y in pairs]
        try:
            models[view] = svm.train(examples, project.config.train, n_features=n_features)
        except svm.TrainingError as exc:
            skipped[view] = str(exc)
    return models, skipped


def _close_artifacts(
    project: Project, index: int, models: dict[str, LinearModel]
) -> tuple[dict[str, str], dict[str, str]]:
    """Persist models, CV rows, and distance exports for a closing iteration."""
    model_refs: dict[str, str] = {}
    report_refs: dict[str, str] = {}
    unlabeled = [(pid, project.vector(pid)) for pid in project.unlabeled_ids()]
    for view, model in models.items():
        model_path = project.models_dir / f"iter{index:03d}_{view}.json"
        svm.save_model(model, model_path, vocabulary_path=project.vocabulary_path)
        model_refs[view] = str(model_path.relative_to(project.root))

        pairs = project.labels_for_view(view, up_to_iteration=index)
        vectors = [project.vector(pid) for pid, _ in pairs]
        labels = [y for _, y in pairs]
        try:
            report = evaluation.cross_validate(
                vectors,
                labels,
                folds=project.config.cv_folds,
                runs=project.config.cv_runs,
                base_seed=project.config.cv_seed,
                train_config=project.config.train,
                n_features=project.n_features(),
                ids=[pid for pid, _ in pairs],
            )
        except ValueError as exc:
            warnings.warn(f"iteration {index} view {view}: {exc}; no CV row stored")
        else:
            row = LearningCurveRow(
                iteration=index,
                view=view,
                accuracy=report.accuracy,
                precision=report.precision,
                recall=report.recall,
                f1=report.f1,
            )
            with open(project.reports_dir / "learning_curve_rows.jsonl", "a", encoding="utf-8") as fh:
                fh.write(json.dumps(row.__dict__) + "\n")

        distribution = evaluation.distance_distribution(
            model,
            [(pid, project.vector(pid), y) for pid, y in pairs],
            unlabeled,
            bin_width=project.config.distance_bin_width,
            quadrant_mode=project.config.quadrant_mode,
            cv_folds=project.config.cv_folds,
            cv_seed=project.config.cv_seed,
            train_config=project.config.train,
        )
        csv_path = project.reports_dir / f"distances_iter{index:03d}_{view}.csv"
        csv_path.write_text(distribution.to_csv(), encoding="utf-8")
        json_path = project.reports_dir / f"distances_iter{index:03d}_{view}.json"
        json_path.write_text(json.dumps(distribution.summary_dict()), encoding="utf-8")
        report_refs[view] = str(csv_path.relative_to(project.root))
    return model_refs, report_refs


def advance_iteration(project: Project) -> Iteration:
    """Close the current iteration, retrain, and open the next batch.

    Requires every assigned (post, annotator) pair of the current
    iteration to be labeled. Conflicting overlap labels stay out of the
    pooled training set; they are surfaced by the disagreement queue.
    """
    with project.lock:
        current = project.current_iteration
        missing = project.missing_pairs(current)
        if missing:
            raise IncompleteIterationError(missing)
        project.ensure_vocabulary()

        models, skipped = train_view_models(project, up_to_iteration=current.index)
        batch_view = project.config.batch_model_view
        batch_model = models.get(batch_view)
        if batch_model is None:
            reason = skipped.get(batch_view, "view not trained")
            raise LoopError(f"cannot select the next batch: view {batch_view!r}: {reason}")

        model_refs, report_refs = _close_artifacts(project, current.index, models)
        if skipped:
            report_refs["skipped_views"] = json.dumps(skipped)
        project._record_closed(current.index, model_refs, report_refs)

        pool = [(pid, project.vector(pid)) for pid in project.unlabeled_ids()]
        batch = select_batch(batch_model, pool, project.config.batch_size)
        next_index = current.index + 1
        assignments = make_assignment(
            batch, project.config.annotators, project.config.overlap_for(next_index)
        )
        return project._record_opened(
            next_index, batch, assignments, project.config.overlap_for(next_index)
        )


def stored_learning_curve(project: Project) -> list[LearningCurveRow]:
    """Learning-curve rows recorded by past advances, in (iteration, view) order."""
    path = project.reports_dir / "learning_curve_rows.jsonl"
    if not path.exists():
        return []
    rows = []
    with open(path, "r", encoding="utf-8") as fh:
        for line in fh:
            if line.strip():
                rows.append(LearningCurveRow(**json.loads(line)))
    view_order = {view: i for i, view in enumerate(project.views())}
    rows.sort(key=lambda r: (r.iteration, view_order.get(r.view, 99)))
    return rows


@dataclass(frozen=True)
class Disagreement:
    post_id: int
    labels: dict[str, str]
    certainties: dict[str, int | None]
    rationales: dict[str, str | None]

    @property
    def combined_certainty(self) -> int:
        return sum(c for c in self.certainties.values() if c is not None)


def disagreement_queue(project: Project) -> list[Disagreement]:
    """Overlap posts whose two labels conflict, most-confident conflicts first."""
    conflicts = []
    for post_id in project.conflicting_posts():
        examples = [
            ex for (pid, _), ex in project.label_view.items() if pid == post_id
        ]
        conflicts.append(
            Disagreement(
                post_id=post_id,
                labels={ex.annotator_id: ex.label for ex in examples},
                certainties={ex.annotator_id: ex.certainty for ex in examples},
                rationales={ex.annotator_id: ex.rationale for ex in examples},
            )
        )
    conflicts.sort(key=lambda d: (-d.combined_certainty, d.post_id))
    return conflicts
