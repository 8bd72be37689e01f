"""Project state: corpus, label journal, criteria versions, iterations.

All mutation is journaled append-only (labels.jsonl, criteria.jsonl,
iterations.jsonl); the in-memory current state is a pure replay of those
files, so a reload reconstructs exactly what the journals describe.
"""

from __future__ import annotations

import hashlib
import json
import threading
import uuid
from dataclasses import asdict, dataclass, field
from datetime import datetime, timezone
from pathlib import Path

from . import svm
from .corpus import Corpus, load_corpus, persist_corpus
from .features import FeatureConfig, FeatureVector, Vocabulary, build_vocabulary, vectorize
from .svm import TrainConfig

PROJECT_SCHEMA_VERSION = 1

POSITIVE_LABEL = "positive"
NEGATIVE_LABEL = "negative"
LABELS = (POSITIVE_LABEL, NEGATIVE_LABEL)
LABEL_TO_INT = {POSITIVE_LABEL: svm.POSITIVE, NEGATIVE_LABEL: svm.NEGATIVE}

POOLED_VIEW = "pooled"

DEFAULT_CRITERIA_TEXT = """\
Label a post POSITIVE when it discusses how a specific, nameable software
component performs: a database, web server, framework, library, platform,
or similar building block, and its speed, latency, throughput, memory use,
or scalability in operation. Questions and answers both qualify.

Label a post NEGATIVE when the performance talk is about a programming
language as such, an operating system or runtime environment, developer
tooling (compilers, IDEs, build systems), the author's own implementation
choices (query phrasing, data-structure picks, micro-optimizations), knob
tweaking within a component, or tools whose job is measuring performance.
If such a discussion clearly traces back to one component performing
poorly, prefer POSITIVE.
"""


class ProjectError(Exception):
    """Invalid project state or inputs."""


def utcnow() -> str:
    return datetime.now(timezone.utc).isoformat()


@dataclass(frozen=True)
class LabeledExample:
    post_id: int
    label: str  # POSITIVE_LABEL or NEGATIVE_LABEL
    annotator_id: str
    iteration: int
    criteria_version: int
    certainty: int | None = None
    rationale: str | None = None

    def __post_init__(self):
        if self.label not in LABELS:
            raise ProjectError(f"label must be one of {LABELS}, got {self.label!r}")
        if self.certainty is not None and not 1 <= self.certainty <= 5:
            raise ProjectError(f"certainty must be in [1, 5], got {self.certainty}")
        if self.iteration < 0:
            raise ProjectError("iteration must be >= 0")


@dataclass(frozen=True)
class AnnotationCriteria:
    version: int
    text: str
    changelog: str = ""
    created_at: str = ""

    def __post_init__(self):
        if self.version < 1:
            raise ProjectError("criteria versions start at 1")
        if not self.text.strip():
            raise ProjectError("criteria text must be nonempty")


@dataclass
class Iteration:
    index: int
    batch: list[int]
    assignments: dict[str, list[int]]
    overlap_fraction: float
    status: str = "open"  # "open" until every assigned pair is labeled, then "complete"
    closed: bool = False  # advanced past (no further submissions accepted)
    model_refs: dict[str, str] = field(default_factory=dict)
    report_refs: dict[str, str] = field(default_factory=dict)


@dataclass(frozen=True)
class ProjectConfig:
    annotators: tuple[str, str] = ("a", "b")
    batch_size: int = 100
    overlap_schedule: tuple[float, ...] = (0.0,)
    batch_model_view: str = POOLED_VIEW  # which model picks the next batch
    feature: FeatureConfig = FeatureConfig()
    train: TrainConfig = TrainConfig()
    cv_folds: int = 5
    cv_runs: int = 5
    cv_seed: int = 101
    distance_bin_width: float = 0.25
    quadrant_mode: str = "resubstitution"

    def __post_init__(self):
        if len(self.annotators) != 2 or len(set(self.annotators)) != 2:
            raise ProjectError("exactly two distinct annotators are supported")
        if self.batch_size < 1:
            raise ProjectError("batch_size must be >= 1")
        if not self.overlap_schedule:
            raise ProjectError("overlap_schedule must not be empty")
        for f in self.overlap_schedule:
            if not 0.0 <= f <= 1.0:
                raise ProjectError(f"overlap fraction {f} outside [0, 1]")
        if self.batch_model_view not in (*self.annotators, POOLED_VIEW):
            raise ProjectError(f"batch_model_view {self.batch_model_view!r} not a known view")

    def overlap_for(self, iteration_index: int) -> float:
        """Overlap fraction for a newly opened iteration (index >= 1)."""
        position = min(max(iteration_index - 1, 0), len(self.overlap_schedule) - 1)
        return self.overlap_schedule[position]

    def to_dict(self) -> dict:
        return {
            "annotators": list(self.annotators),
            "batch_size": self.batch_size,
            "overlap_schedule": list(self.overlap_schedule),
            "batch_model_view": self.batch_model_view,
            "feature": asdict(self.feature),
            "train": asdict(self.train),
            "cv_folds": self.cv_folds,
            "cv_runs": self.cv_runs,
            "cv_seed": self.cv_seed,
            "distance_bin_width": self.distance_bin_width,
            "quadrant_mode": self.quadrant_mode,
        }

    @classmethod
    def from_dict(cls, d: dict) -> "ProjectConfig":
        return cls(
            annotators=tuple(d.get("annotators", ("a", "b"))),
            batch_size=d.get("batch_size", 100),
            overlap_schedule=tuple(d.get("overlap_schedule", (0.0,))),
            batch_model_view=d.get("batch_model_view", POOLED_VIEW),
            feature=FeatureConfig(**d.get("feature", {})),
            train=TrainConfig(**d.get("train", {})),
            cv_folds=d.get("cv_folds", 5),
            cv_runs=d.get("cv_runs", 5),
            cv_seed=d.get("cv_seed", 101),
            distance_bin_width=d.get("distance_bin_width", 0.25),
            quadrant_mode=d.get("quadrant_mode", "resubstitution"),
        )


def _append_jsonl(path: Path, record: dict) -> None:
    with open(path, "a", encoding="utf-8") as fh:
        fh.write(json.dumps(record, ensure_ascii=False) + "\n")
        fh.flush()


def _read_jsonl(path: Path) -> list[dict]:
    if not path.exists():
        return []
    with open(path, "r", encoding="utf-8") as fh:
        return [json.loads(line) for line in fh if line.strip()]


def replay_label_journal(path: Path) -> dict[tuple[int, str], LabeledExample]:
    """Rebuild the current label view from the append-only journal."""
    view: dict[tuple[int, str], LabeledExample] = {}
    for record in _read_jsonl(path):
        if record.get("event") != "label":
            continue
        example = LabeledExample(
            post_id=record["post_id"],
            label=record["label"],
            annotator_id=record["annotator_id"],
            iteration=record["iteration"],
            criteria_version=record["criteria_version"],
            certainty=record.get("certainty"),
            rationale=record.get("rationale"),
        )
        view[(example.post_id, example.annotator_id)] = example
    return view


def label_state_hash(view: dict[tuple[int, str], LabeledExample]) -> str:
    canonical = [
        [ex.post_id, ex.annotator_id, ex.label, ex.iteration, ex.criteria_version, ex.certainty, ex.rationale]
        for _key, ex in sorted(view.items())
    ]
    return hashlib.sha256(json.dumps(canonical, ensure_ascii=False).encode("utf-8")).hexdigest()


class Project:
    """One annotation project rooted at a directory.

    Label recording is atomic per (post, annotator); everything heavier
    (training, advancing) must hold :attr:`lock` for its whole run.
    """

    def __init__(self, root: Path, project_id: str, name: str, config: ProjectConfig):
        self.root = Path(root)
        self.id = project_id
        self.name = name
        self.config = config
        self.lock = threading.RLock()
        self.corpus: Corpus | None = None
        self.vocabulary: Vocabulary | None = None
        self._vectors: dict[int, FeatureVector] = {}
        self._post_index: dict[int, object] = {}
        self.label_view: dict[tuple[int, str], LabeledExample] = {}
        self.criteria: list[AnnotationCriteria] = []
        self.iterations: dict[int, Iteration] = {}
        self.idempotency: dict[str, dict] = {}

    # -- paths ---------------------------------------------------------

    @property
    def labels_path(self) -> Path:
        return self.root / "labels.jsonl"

    @property
    def corpus_path(self) -> Path:
        return self.root / "corpus.jsonl"

    @property
    def vocabulary_path(self) -> Path:
        return self.root / "vocabulary.jsonl"

    @property
    def criteria_path(self) -> Path:
        return self.root / "criteria.jsonl"

    @property
    def iterations_path(self) -> Path:
        return self.root / "iterations.jsonl"

    @property
    def idempotency_path(self) -> Path:
        return self.root / "idempotency.jsonl"

    @property
    def models_dir(self) -> Path:
        return self.root / "models"

    @property
    def reports_dir(self) -> Path:
        return self.root / "reports"

    # -- lifecycle -----------------------------------------------------

    @classmethod
    def create(
        cls,
        root: str | Path,
        config: ProjectConfig | None = None,
        *,
        name: str = "",
        project_id: str | None = None,
        criteria_text: str = DEFAULT_CRITERIA_TEXT,
    ) -> "Project":
        root = Path(root)
        root.mkdir(parents=True, exist_ok=True)
        if (root / "project.json").exists():
            raise ProjectError(f"{root} already holds a project")
        config = config or ProjectConfig()
        project = cls(root, project_id or uuid.uuid4().hex[:12], name or root.name, config)
        project.models_dir.mkdir(exist_ok=True)
        project.reports_dir.mkdir(exist_ok=True)
        with open(root / "project.json", "w", encoding="utf-8") as fh:
            json.dump(
                {
                    "schema_version": PROJECT_SCHEMA_VERSION,
                    "id": project.id,
                    "name": project.name,
                    "config": config.to_dict(),
                    "created_at": utcnow(),
                },
                fh,
                indent=2,
            )
        project.add_criteria(criteria_text, changelog="initial criteria")
        # iteration 0 is the seed iteration: no batch, labels arrive by import
        project._record_opened(0, [], {a: [] for a in config.annotators}, 0.0)
        return project

    @classmethod
    def load(cls, root: str | Path) -> "Project":
        root = Path(root)
        meta_path = root / "project.json"
        if not meta_path.exists():
            raise ProjectError(f"{root} does not contain a project")
        with open(meta_path, "r", encoding="utf-8") as fh:
            meta = json.load(fh)
        if meta.get("schema_version") != PROJECT_SCHEMA_VERSION:
            raise ProjectError(
                f"project schema_version {meta.get('schema_version')!r} unsupported"
            )
        project = cls(root, meta["id"], meta.get("name", ""), ProjectConfig.from_dict(meta["config"]))
        if project.corpus_path.exists():
            project.corpus = load_corpus(project.corpus_path)
        if project.vocabulary_path.exists():
            project.vocabulary = Vocabulary.load(project.vocabulary_path)
        project.label_view = replay_label_journal(project.labels_path)
        for record in _read_jsonl(project.criteria_path):
            project.criteria.append(
                AnnotationCriteria(
                    version=record["version"],
                    text=record["text"],
                    changelog=record.get("changelog", ""),
                    created_at=record.get("created_at", ""),
                )
            )
        for record in _read_jsonl(project.iterations_path):
            if record["event"] == "opened":
                project.iterations[record["index"]] = Iteration(
                    index=record["index"],
                    batch=list(record["batch"]),
                    assignments={a: list(ids) for a, ids in record["assignments"].items()},
                    overlap_fraction=record["overlap_fraction"],
                )
            elif record["event"] == "closed":
                iteration = project.iterations[record["index"]]
                iteration.closed = True
                iteration.model_refs = record.get("models", {})
                iteration.report_refs = record.get("reports", {})
        for record in _read_jsonl(project.idempotency_path):
            project.idempotency[record["key"]] = record["response"]
        return project

    def set_corpus(self, corpus: Corpus) -> None:
        with self.lock:
            if self.vocabulary is not None:
                raise ProjectError("corpus is frozen once the vocabulary has been built")
            self.corpus = corpus
            persist_corpus(corpus, self.corpus_path)
            self._vectors.clear()
            self._post_index = {p.id: p for p in corpus.posts}

    # -- criteria ------------------------------------------------------

    @property
    def current_criteria(self) -> AnnotationCriteria:
        if not self.criteria:
            raise ProjectError("project has no annotation criteria")
        return self.criteria[-1]

    def add_criteria(self, text: str, changelog: str = "") -> AnnotationCriteria:
        with self.lock:
            version = self.criteria[-1].version + 1 if self.criteria else 1
            criteria = AnnotationCriteria(
                version=version, text=text, changelog=changelog, created_at=utcnow()
            )
            _append_jsonl(
                self.criteria_path,
                {
                    "version": criteria.version,
                    "text": criteria.text,
                    "changelog": criteria.changelog,
                    "created_at": criteria.created_at,
                },
            )
            self.criteria.append(criteria)
            return criteria

    # -- features ------------------------------------------------------

    def ensure_vocabulary(self) -> Vocabulary:
        """Build (once) the vocabulary over every corpus post, labeled or not."""
        with self.lock:
            if self.vocabulary is None:
                if self.corpus is None or not self.corpus.posts:
                    raise ProjectError("cannot build a vocabulary without a corpus")
                cfg = self.config.feature
                self.vocabulary = build_vocabulary(
                    (p.body_text for p in self.corpus.posts),
                    n_min=cfg.n_min,
                    n_max=cfg.n_max,
                    min_df=cfg.min_df,
                )
                self.vocabulary.save(self.vocabulary_path)
            return self.vocabulary

    def n_features(self) -> int:
        return len(self.ensure_vocabulary())

    def vector(self, post_id: int) -> FeatureVector:
        vec = self._vectors.get(post_id)
        if vec is None:
            vocab = self.ensure_vocabulary()
            post = self.post(post_id)
            vec = vectorize(post.body_text, vocab, use_idf=self.config.feature.use_idf)
            self._vectors[post_id] = vec
        return vec

    def post(self, post_id: int):
        if self.corpus is None:
            raise ProjectError("project has no corpus")
        if not self._post_index:
            self._post_index = {p.id: p for p in self.corpus.posts}
        try:
            return self._post_index[post_id]
        except KeyError:
            raise ProjectError(f"post {post_id} not in corpus") from None

    # -- labels --------------------------------------------------------

    def append_label(self, example: LabeledExample, idempotency_key: str | None = None) -> None:
        with self.lock:
            _append_jsonl(
                self.labels_path,
                {
                    "event": "label",
                    "ts": utcnow(),
                    "post_id": example.post_id,
                    "label": example.label,
                    "annotator_id": example.annotator_id,
                    "iteration": example.iteration,
                    "criteria_version": example.criteria_version,
                    "certainty": example.certainty,
                    "rationale": example.rationale,
                    "idempotency_key": idempotency_key,
                },
            )
            self.label_view[(example.post_id, example.annotator_id)] = example

    def journal_length(self) -> int:
        return len(_read_jsonl(self.labels_path))

    def state_hash(self) -> str:
        return label_state_hash(self.label_view)

    def views(self) -> list[str]:
        return [*self.config.annotators, POOLED_VIEW]

    def labels_for_view(
        self, view: str, up_to_iteration: int | None = None
    ) -> list[tuple[int, int]]:
        """(post_id, +/-1) pairs for one training view.

        The pooled view keeps one example per post; posts whose two labels
        conflict are excluded (they go to the disagreement queue instead).
        """
        examples = [
            ex
            for ex in self.label_view.values()
            if up_to_iteration is None or ex.iteration <= up_to_iteration
        ]
        if view == POOLED_VIEW:
            by_post: dict[int, set[str]] = {}
            for ex in examples:
                by_post.setdefault(ex.post_id, set()).add(ex.label)
            return [
                (pid, LABEL_TO_INT[labels.pop()])
                for pid, labels in sorted(by_post.items())
                if len(labels) == 1
            ]
        if view not in self.config.annotators:
            raise ProjectError(f"unknown view {view!r}")
        return [
            (ex.post_id, LABEL_TO_INT[ex.label])
            for ex in sorted(examples, key=lambda e: e.post_id)
            if ex.annotator_id == view
        ]

    def conflicting_posts(self, up_to_iteration: int | None = None) -> list[int]:
        by_post: dict[int, set[str]] = {}
        for ex in self.label_view.values():
            if up_to_iteration is None or ex.iteration <= up_to_iteration:
                by_post.setdefault(ex.post_id, set()).add(ex.label)
        return sorted(pid for pid, labels in by_post.items() if len(labels) > 1)

    def labeled_post_ids(self) -> set[int]:
        return {post_id for post_id, _ in self.label_view}

    def unlabeled_ids(self) -> list[int]:
        if self.corpus is None:
            raise ProjectError("project has no corpus")
        labeled = self.labeled_post_ids()
        return [p.id for p in self.corpus.posts if p.id not in labeled]

    def iterations_with_labels(self) -> list[int]:
        present = {ex.iteration for ex in self.label_view.values()}
        return sorted(present)

    # -- iterations ----------------------------------------------------

    @property
    def current_index(self) -> int:
        if not self.iterations:
            raise ProjectError("project has no iterations")
        return max(self.iterations)

    @property
    def current_iteration(self) -> Iteration:
        return self.iterations[self.current_index]

    def iteration_status(self, index: int) -> str:
        return "complete" if not self.missing_pairs(self.iterations[index]) else "open"

    def missing_pairs(self, iteration: Iteration) -> list[tuple[int, str]]:
        missing = []
        for annotator, post_ids in sorted(iteration.assignments.items()):
            for post_id in post_ids:
                if (post_id, annotator) not in self.label_view:
                    missing.append((post_id, annotator))
        return missing

    def progress(self, annotator: str) -> dict:
        iteration = self.current_iteration
        assigned = iteration.assignments.get(annotator, [])
        labeled = sum(1 for pid in assigned if (pid, annotator) in self.label_view)
        return {"labeled": labeled, "remaining": len(assigned) - labeled, "total": len(assigned)}

    def _record_opened(
        self,
        index: int,
        batch: list[int],
        assignments: dict[str, list[int]],
        overlap_fraction: float,
    ) -> Iteration:
        _append_jsonl(
            self.iterations_path,
            {
                "event": "opened",
                "index": index,
                "batch": batch,
                "assignments": assignments,
                "overlap_fraction": overlap_fraction,
                "ts": utcnow(),
            },
        )
        iteration = Iteration(
            index=index, batch=batch, assignments=assignments, overlap_fraction=overlap_fraction
        )
        self.iterations[index] = iteration
        return iteration

    def _record_closed(
        self, index: int, model_refs: dict[str, str], report_refs: dict[str, str]
    ) -> None:
        _append_jsonl(
            self.iterations_path,
            {
                "event": "closed",
                "index": index,
                "models": model_refs,
                "reports": report_refs,
                "ts": utcnow(),
            },
        )
        iteration = self.iterations[index]
        iteration.closed = True
        iteration.model_refs = model_refs
        iteration.report_refs = report_refs

    # -- idempotency ---------------------------------------------------

    def remember_response(self, key: str, response: dict) -> None:
        with self.lock:
            _append_jsonl(self.idempotency_path, {"key": key, "response": response})
            self.idempotency[key] = response
