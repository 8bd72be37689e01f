"""HTTP service over projects: label submission, jobs, exports.

Label submissions are validated and journaled synchronously (they are
cheap and latency-sensitive); training, advancing, and self-training run
as per-project serial jobs so submissions never wait on a solver.
"""

from __future__ import annotations

import hashlib
import io
import csv
import json
import queue
import threading
import uuid
from dataclasses import dataclass, field
from pathlib import Path

from fastapi import FastAPI, Header, HTTPException, Query
from fastapi.middleware.cors import CORSMiddleware
from fastapi.responses import PlainTextResponse
from pydantic import BaseModel, Field

from . import active_loop, agreement, evaluation, self_training
from .corpus import Corpus, CorpusError, TagFilter, filter_by_tags, parse_dump
from .project import Project, ProjectConfig, ProjectError, utcnow
from .self_training import SelfTrainConfig

MUTATING_JOB_KINDS = {"train", "advance", "self_train"}
JOB_KINDS = MUTATING_JOB_KINDS | {"evaluate"}


class JobConflictError(Exception):
    pass


@dataclass
class JobStatus:
    id: str
    kind: str
    project_id: str
    state: str = "queued"  # queued | running | done | failed
    result: dict | None = None
    result_ref: str | None = None
    error: str | None = None
    created_at: str = field(default_factory=utcnow)
    finished_at: str | None = None

    def to_dict(self) -> dict:
        return {
            "id": self.id,
            "kind": self.kind,
            "project_id": self.project_id,
            "state": self.state,
            "result": self.result,
            "result_ref": self.result_ref,
            "error": self.error,
            "created_at": self.created_at,
            "finished_at": self.finished_at,
        }


class JobRunner:
    """Serial job execution for one project; mutating kinds are exclusive."""

    def __init__(self, project: Project):
        self.project = project
        self.jobs: dict[str, JobStatus] = {}
        self._queue: "queue.Queue[tuple[JobStatus, object]]" = queue.Queue()
        self._lock = threading.Lock()
        self._worker = threading.Thread(target=self._run, daemon=True)
        self._worker.start()

    def submit(self, kind: str, fn) -> JobStatus:
        if kind not in JOB_KINDS:
            raise ValueError(f"unknown job kind {kind!r}")
        with self._lock:
            if kind in MUTATING_JOB_KINDS:
                for job in self.jobs.values():
                    if job.kind in MUTATING_JOB_KINDS and job.state in ("queued", "running"):
                        raise JobConflictError(
                            f"job {job.id} ({job.kind}) is {job.state}; "
                            "train/advance/self_train jobs are mutually exclusive"
                        )
            job = JobStatus(id=uuid.uuid4().hex, kind=kind, project_id=self.project.id)
            self.jobs[job.id] = job
            self._queue.put((job, fn))
            return job

    def _run(self) -> None:
        while True:
            job, fn = self._queue.get()
            job.state = "running"
            try:
                result = fn()
                job.result = result
                job.result_ref = self._store_result(result)
                job.state = "done"
            except Exception as exc:  # job errors surface via status, not a crash
                job.error = str(exc)
                job.state = "failed"
            job.finished_at = utcnow()
            self._queue.task_done()

    def _store_result(self, result: dict) -> str:
        payload = json.dumps(result, sort_keys=True).encode("utf-8")
        digest = hashlib.sha256(payload).hexdigest()
        jobs_dir = self.project.reports_dir / "jobs"
        jobs_dir.mkdir(exist_ok=True)
        path = jobs_dir / f"{digest}.json"
        if not path.exists():
            path.write_bytes(payload)
        return str(path.relative_to(self.project.root))

    def wait_idle(self) -> None:
        self._queue.join()


@dataclass
class ProjectHandle:
    project: Project
    runner: JobRunner


class ProjectCreate(BaseModel):
    name: str = ""
    config: dict = Field(default_factory=dict)


class CorpusIngest(BaseModel):
    path: str | None = None
    content: str | None = None  # inline upload
    format: str = "dump-xml"
    keep_code: bool = True
    filter: dict | None = None  # {"required_tag": ..., "any_of_tags": [...]}
    source: str = ""


class LabelSubmission(BaseModel):
    post_id: int
    label: str
    criteria_version: int
    certainty: int | None = None
    rationale: str | None = None
    idempotency_key: str | None = None


class SelfTrainRequest(BaseModel):
    f_pos: float
    f_neg: float
    view: str = "pooled"
    seed: int = 0


class CriteriaCreate(BaseModel):
    text: str
    changelog: str = ""


class DesignRequest(BaseModel):
    raters: int
    units_per_pair: int = 1


def create_app(data_root: str | Path) -> FastAPI:
    data_root = Path(data_root)
    data_root.mkdir(parents=True, exist_ok=True)
    app = FastAPI(title="albench")
    app.add_middleware(
        CORSMiddleware, allow_origins=["*"], allow_methods=["*"], allow_headers=["*"]
    )

    handles: dict[str, ProjectHandle] = {}
    jobs_index: dict[str, JobStatus] = {}
    registry_lock = threading.Lock()

    for candidate in sorted(data_root.glob("*/project.json")):
        project = Project.load(candidate.parent)
        handles[project.id] = ProjectHandle(project=project, runner=JobRunner(project))

    app.state.handles = handles

    def get_handle(project_id: str) -> ProjectHandle:
        handle = handles.get(project_id)
        if handle is None:
            raise HTTPException(status_code=404, detail=f"unknown project {project_id}")
        return handle

    def project_info(project: Project) -> dict:
        iteration = project.current_iteration
        return {
            "id": project.id,
            "name": project.name,
            "config": project.config.to_dict(),
            "current_iteration": iteration.index,
            "iteration_status": project.iteration_status(iteration.index),
            "criteria_version": project.current_criteria.version,
            "corpus": None
            if project.corpus is None
            else {
                "total": project.corpus.total,
                "questions": project.corpus.questions,
                "answers": project.corpus.answers,
            },
            "labeled_posts": len(project.labeled_post_ids()),
        }

    def submit_job(handle: ProjectHandle, kind: str, fn) -> dict:
        try:
            job = handle.runner.submit(kind, fn)
        except JobConflictError as exc:
            raise HTTPException(status_code=409, detail=str(exc))
        with registry_lock:
            jobs_index[job.id] = job
        return job.to_dict()

    # -- projects ----------------------------------------------------

    @app.post("/projects", status_code=201)
    def create_project(body: ProjectCreate):
        try:
            config = ProjectConfig.from_dict(body.config)
        except (ProjectError, ValueError, TypeError) as exc:
            raise HTTPException(status_code=422, detail=f"bad config: {exc}")
        project_id = uuid.uuid4().hex[:12]
        project = Project.create(
            data_root / project_id, config, name=body.name, project_id=project_id
        )
        handles[project.id] = ProjectHandle(project=project, runner=JobRunner(project))
        return project_info(project)

    @app.get("/projects/{project_id}")
    def get_project(project_id: str):
        return project_info(get_handle(project_id).project)

    @app.post("/projects/{project_id}/corpus")
    def ingest_corpus(project_id: str, body: CorpusIngest):
        project = get_handle(project_id).project
        if (body.path is None) == (body.content is None):
            raise HTTPException(status_code=422, detail="provide exactly one of path/content")
        try:
            if body.path is not None:
                result = parse_dump(body.path, body.format, keep_code=body.keep_code)
            else:
                result = parse_dump(io.BytesIO(body.content.encode("utf-8")), body.format, keep_code=body.keep_code)
            tag_filter = TagFilter.from_dict(body.filter) if body.filter else None
            posts = filter_by_tags(result.posts, tag_filter) if tag_filter else result.posts
            project.set_corpus(Corpus(posts=posts, filter=tag_filter, source=body.source or (body.path or "inline")))
        except FileNotFoundError as exc:
            raise HTTPException(status_code=422, detail=str(exc))
        except (CorpusError, ProjectError) as exc:
            raise HTTPException(status_code=422, detail=str(exc))
        return {
            "total": project.corpus.total,
            "questions": project.corpus.questions,
            "answers": project.corpus.answers,
            "skipped_rows": result.skipped_rows,
            "error_rows": result.error_rows,
            "orphan_answers": result.orphan_answers,
        }

    @app.get("/projects/{project_id}/corpus/stats")
    def corpus_stats(project_id: str):
        project = get_handle(project_id).project
        if project.corpus is None:
            raise HTTPException(status_code=404, detail="project has no corpus")
        return {
            "total": project.corpus.total,
            "questions": project.corpus.questions,
            "answers": project.corpus.answers,
            "labeled": len(project.labeled_post_ids()),
            "unlabeled": len(project.unlabeled_ids()),
            "filter": project.corpus.filter.to_dict() if project.corpus.filter else None,
            "source": project.corpus.source,
        }

    # -- iterations --------------------------------------------------

    def iteration_view(project: Project, index: int) -> dict:
        iteration = project.iterations[index]
        return {
            "index": iteration.index,
            "status": project.iteration_status(index),
            "closed": iteration.closed,
            "batch": iteration.batch,
            "assignments": iteration.assignments,
            "overlap_fraction": iteration.overlap_fraction,
            "progress": {a: project.progress(a) for a in project.config.annotators}
            if index == project.current_index
            else None,
            "model_refs": iteration.model_refs,
        }

    @app.get("/projects/{project_id}/iterations/current")
    def current_iteration(project_id: str):
        project = get_handle(project_id).project
        return iteration_view(project, project.current_index)

    @app.get("/projects/{project_id}/iterations/{index}/batch")
    def iteration_batch(project_id: str, index: int, annotator: str = Query(...)):
        project = get_handle(project_id).project
        if index not in project.iterations:
            raise HTTPException(status_code=404, detail=f"iteration {index} does not exist")
        if annotator not in project.config.annotators:
            raise HTTPException(status_code=403, detail=f"unknown annotator {annotator!r}")
        iteration = project.iterations[index]
        posts = []
        for position, post_id in enumerate(iteration.assignments.get(annotator, [])):
            post = project.post(post_id)
            example = project.label_view.get((post_id, annotator))
            posts.append(
                {
                    "position": position,
                    "post_id": post_id,
                    "kind": post.kind,
                    "tags": sorted(post.tags),
                    "body_html": post.body_html,
                    "body_text": post.body_text,
                    "label": example.label if example else None,
                    "certainty": example.certainty if example else None,
                    "rationale": example.rationale if example else None,
                }
            )
        return {"iteration": index, "annotator": annotator, "posts": posts}

    # -- labels ------------------------------------------------------

    @app.post("/projects/{project_id}/labels")
    def submit_label(
        project_id: str,
        body: LabelSubmission,
        x_annotator: str = Header(default=""),
        idempotency_key: str | None = Header(default=None),
    ):
        project = get_handle(project_id).project
        key = body.idempotency_key or idempotency_key
        with project.lock:
            if key and key in project.idempotency:
                return project.idempotency[key]
            try:
                example = active_loop.record_label(
                    project,
                    post_id=body.post_id,
                    label=body.label,
                    annotator_id=x_annotator,
                    criteria_version=body.criteria_version,
                    certainty=body.certainty,
                    rationale=body.rationale,
                    idempotency_key=key,
                )
            except active_loop.UnknownAnnotatorError as exc:
                raise HTTPException(status_code=403, detail=str(exc))
            except active_loop.StaleCriteriaError as exc:
                raise HTTPException(
                    status_code=409,
                    detail={"error": str(exc), "current_version": exc.current},
                )
            except active_loop.IterationClosedError as exc:
                raise HTTPException(status_code=409, detail=str(exc))
            except (active_loop.NotAssignedError, ProjectError) as exc:
                raise HTTPException(status_code=422, detail=str(exc))
            response = {
                "accepted": True,
                "post_id": example.post_id,
                "iteration": example.iteration,
                "progress": project.progress(x_annotator),
            }
            if key:
                project.remember_response(key, response)
            return response

    # -- jobs --------------------------------------------------------

    @app.post("/projects/{project_id}/iterations/advance", status_code=202)
    def advance(project_id: str):
        handle = get_handle(project_id)

        def run():
            iteration = active_loop.advance_iteration(handle.project)
            return {
                "opened_iteration": iteration.index,
                "batch_size": len(iteration.batch),
                "overlap_fraction": iteration.overlap_fraction,
            }

        return submit_job(handle, "advance", run)

    @app.post("/projects/{project_id}/self-train", status_code=202)
    def self_train(project_id: str, body: SelfTrainRequest):
        handle = get_handle(project_id)
        try:
            config = SelfTrainConfig(f_pos=body.f_pos, f_neg=body.f_neg, seed=body.seed)
        except ValueError as exc:
            raise HTTPException(status_code=422, detail=str(exc))

        def run():
            report = self_training.run_for_project(handle.project, [config], view=body.view)
            stamp = utcnow().replace(":", "-")
            json_path = handle.project.reports_dir / f"selftrain_{stamp}.json"
            json_path.write_text(json.dumps(report.to_dict(), indent=2), encoding="utf-8")
            text_path = handle.project.reports_dir / f"selftrain_{stamp}.txt"
            text_path.write_text(report.to_text_table(), encoding="utf-8")
            payload = report.to_dict()
            payload["text_report"] = str(text_path.relative_to(handle.project.root))
            return payload

        return submit_job(handle, "self_train", run)

    @app.post("/projects/{project_id}/train", status_code=202)
    def train(project_id: str):
        handle = get_handle(project_id)

        def run():
            models, skipped = active_loop.train_view_models(
                handle.project, up_to_iteration=handle.project.current_index
            )
            return {"trained_views": sorted(models), "skipped_views": skipped}

        return submit_job(handle, "train", run)

    @app.post("/projects/{project_id}/evaluate", status_code=202)
    def evaluate(project_id: str):
        handle = get_handle(project_id)

        def run():
            rows = evaluation.learning_curve(handle.project)
            csv_text = evaluation.learning_curve_csv(rows)
            path = handle.project.reports_dir / "learning_curve_live.csv"
            path.write_text(csv_text, encoding="utf-8")
            return {"rows": [row.__dict__ for row in rows], "csv": str(path.relative_to(handle.project.root))}

        return submit_job(handle, "evaluate", run)

    @app.get("/jobs/{job_id}")
    def job_status(job_id: str):
        job = jobs_index.get(job_id)
        if job is None:
            raise HTTPException(status_code=404, detail=f"unknown job {job_id}")
        return job.to_dict()

    # -- metrics and exports -----------------------------------------

    @app.get("/projects/{project_id}/metrics/learning-curve", response_class=PlainTextResponse)
    def learning_curve_export(project_id: str):
        project = get_handle(project_id).project
        rows = active_loop.stored_learning_curve(project)
        return PlainTextResponse(evaluation.learning_curve_csv(rows), media_type="text/csv")

    @app.get("/projects/{project_id}/distances")
    def distances_export(
        project_id: str,
        set: str | None = Query(default=None),
        view: str = Query(default="pooled"),
        iteration: int | None = Query(default=None),
        format: str = Query(default="csv"),
    ):
        project = get_handle(project_id).project
        if set not in (None, "labeled", "unlabeled"):
            raise HTTPException(status_code=422, detail="set must be labeled or unlabeled")
        closed = sorted(i for i, it in project.iterations.items() if it.closed)
        if not closed:
            raise HTTPException(status_code=404, detail="no closed iterations yet")
        index = iteration if iteration is not None else closed[-1]
        csv_path = project.reports_dir / f"distances_iter{index:03d}_{view}.csv"
        json_path = project.reports_dir / f"distances_iter{index:03d}_{view}.json"
        if not csv_path.exists():
            raise HTTPException(
                status_code=404, detail=f"no distance export for iteration {index} view {view}"
            )
        reader = csv.reader(io.StringIO(csv_path.read_text(encoding="utf-8")))
        header = next(reader)
        rows = [row for row in reader if set is None or row[1] == set]
        if format == "json":
            summary = json.loads(json_path.read_text(encoding="utf-8"))
            return {
                "iteration": index,
                "view": view,
                "summary": summary,
                "rows": [dict(zip(header, row)) for row in rows],
            }
        out = io.StringIO()
        writer = csv.writer(out, lineterminator="\n")
        writer.writerow(header)
        writer.writerows(rows)
        return PlainTextResponse(out.getvalue(), media_type="text/csv")

    # -- agreement ---------------------------------------------------

    @app.get("/projects/{project_id}/agreement")
    def agreement_report(project_id: str, scope: str = Query(default="overlap")):
        project = get_handle(project_id).project
        if scope == "overlap":
            matrix = agreement.RatingMatrix.from_rows(
                (pid, annotator, ex.label)
                for (pid, annotator), ex in project.label_view.items()
            )
        elif scope == "design":
            ratings_path = project.root / "design_ratings.csv"
            if not ratings_path.exists():
                raise HTTPException(
                    status_code=404,
                    detail="no design ratings imported (expected design_ratings.csv)",
                )
            matrix = agreement.RatingMatrix.from_csv(ratings_path)
        else:
            raise HTTPException(status_code=422, detail="scope must be overlap or design")
        try:
            report = agreement.krippendorff_alpha(matrix)
        except agreement.AgreementError as exc:
            raise HTTPException(status_code=404, detail=str(exc))
        return {"scope": scope, **report.to_dict()}

    @app.post("/projects/{project_id}/agreement/design")
    def agreement_design(project_id: str, body: DesignRequest):
        project = get_handle(project_id).project
        rater_ids = [f"r{i + 1:02d}" for i in range(body.raters)]
        try:
            design = agreement.pairwise_design(rater_ids, units_per_pair=body.units_per_pair)
        except agreement.AgreementError as exc:
            raise HTTPException(status_code=422, detail=str(exc))
        payload = {
            "raters": rater_ids,
            "units_per_pair": body.units_per_pair,
            "assignment": [
                {"unit": unit, "raters": [a, b]} for unit, a, b in design
            ],
        }
        (project.root / "agreement_design.json").write_text(
            json.dumps(payload, indent=2), encoding="utf-8"
        )
        return payload

    # -- criteria ----------------------------------------------------

    @app.get("/projects/{project_id}/criteria")
    def list_criteria(project_id: str):
        project = get_handle(project_id).project
        return {
            "current_version": project.current_criteria.version,
            "versions": [
                {
                    "version": c.version,
                    "text": c.text,
                    "changelog": c.changelog,
                    "created_at": c.created_at,
                }
                for c in project.criteria
            ],
        }

    @app.post("/projects/{project_id}/criteria", status_code=201)
    def add_criteria(project_id: str, body: CriteriaCreate):
        project = get_handle(project_id).project
        try:
            criteria = project.add_criteria(body.text, body.changelog)
        except ProjectError as exc:
            raise HTTPException(status_code=422, detail=str(exc))
        return {"version": criteria.version, "created_at": criteria.created_at}

    return app
