"""Command-line entry points mirroring the HTTP surface.

Exit codes: 0 ok, 1 user error (bad input, violated preconditions),
2 internal error.
"""

from __future__ import annotations

import argparse
import csv
import json
import sys
from pathlib import Path

from . import active_loop, agreement, evaluation, self_training
from .corpus import Corpus, CorpusError, TagFilter, filter_by_tags, load_corpus, parse_dump, persist_corpus
from .project import Project, ProjectConfig, ProjectError
from .self_training import SelfTrainConfig
from .svm import TrainConfig, TrainingError


class CliError(Exception):
    """User-facing error: prints the message and exits 1."""


class _Parser(argparse.ArgumentParser):
    def error(self, message):  # usage problems are user errors, not internal ones
        raise CliError(message)


def _load_project(path: str) -> Project:
    try:
        return Project.load(Path(path))
    except ProjectError as exc:
        raise CliError(str(exc))


def _config_from_args(args) -> ProjectConfig:
    return ProjectConfig(
        annotators=tuple(args.annotators.split(",")),
        batch_size=args.batch_size,
        overlap_schedule=tuple(float(f) for f in args.overlap.split(",")),
        train=TrainConfig(
            regularization_c=args.c, epochs=args.epochs, seed=args.train_seed
        ),
        cv_runs=args.cv_runs,
        cv_folds=args.cv_folds,
    )


def cmd_ingest(args) -> int:
    root = Path(args.project)
    if (root / "project.json").exists():
        project = _load_project(args.project)
    else:
        try:
            project = Project.create(root, _config_from_args(args))
        except ProjectError as exc:
            raise CliError(str(exc))
    try:
        result = parse_dump(args.input, args.format, keep_code=not args.drop_code)
    except (CorpusError, FileNotFoundError) as exc:
        raise CliError(str(exc))
    posts = result.posts
    tag_filter = None
    if args.require_tag:
        if not args.any_of:
            raise CliError("--require-tag needs --any-of")
        tag_filter = TagFilter(args.require_tag, frozenset(args.any_of.split(",")))
        posts = filter_by_tags(posts, tag_filter)
    try:
        project.set_corpus(Corpus(posts=posts, filter=tag_filter, source=str(args.input)))
    except (CorpusError, ProjectError) as exc:
        raise CliError(str(exc))
    print(
        json.dumps(
            {
                "project": project.id,
                "total": project.corpus.total,
                "questions": project.corpus.questions,
                "answers": project.corpus.answers,
                "skipped_rows": result.skipped_rows,
                "error_rows": result.error_rows,
                "orphan_answers": result.orphan_answers,
            },
            indent=2,
        )
    )
    return 0


def cmd_filter(args) -> int:
    try:
        corpus = load_corpus(args.input)
        tag_filter = TagFilter(args.require_tag, frozenset(args.any_of.split(",")))
        filtered = Corpus(
            posts=filter_by_tags(corpus.posts, tag_filter),
            filter=tag_filter,
            source=corpus.source,
        )
        persist_corpus(filtered, args.output)
    except (CorpusError, FileNotFoundError) as exc:
        raise CliError(str(exc))
    print(f"kept {filtered.total} of {corpus.total} posts -> {args.output}")
    return 0


def cmd_iterate(args) -> int:
    project = _load_project(args.project)
    iteration = project.current_iteration
    view = {
        "index": iteration.index,
        "status": project.iteration_status(iteration.index),
        "overlap_fraction": iteration.overlap_fraction,
        "batch_size": len(iteration.batch),
        "assignments": {a: ids for a, ids in iteration.assignments.items()},
        "progress": {a: project.progress(a) for a in project.config.annotators},
    }
    print(json.dumps(view, indent=2))
    return 0


def _read_label_rows(path: Path) -> list[dict]:
    rows: list[dict] = []
    if path.suffix == ".csv":
        with open(path, "r", encoding="utf-8", newline="") as fh:
            for record in csv.DictReader(fh):
                rows.append(
                    {
                        "post_id": int(record["post_id"]),
                        "label": record["label"],
                        "annotator_id": record["annotator_id"],
                        "certainty": int(record["certainty"]) if record.get("certainty") else None,
                        "rationale": record.get("rationale") or None,
                    }
                )
    else:
        with open(path, "r", encoding="utf-8") as fh:
            for line in fh:
                if line.strip():
                    rows.append(json.loads(line))
    return rows


def cmd_label_import(args) -> int:
    project = _load_project(args.project)
    try:
        rows = _read_label_rows(Path(args.input))
    except (OSError, KeyError, ValueError) as exc:
        raise CliError(f"cannot read labels from {args.input}: {exc}")
    try:
        count = active_loop.import_labels(
            project, rows, enforce_assignment=not args.seed_iteration
        )
    except (active_loop.LoopError, ProjectError) as exc:
        raise CliError(str(exc))
    print(f"imported {count} labels into iteration {project.current_index}")
    return 0


def cmd_advance(args) -> int:
    project = _load_project(args.project)
    try:
        iteration = active_loop.advance_iteration(project)
    except (active_loop.LoopError, ProjectError, TrainingError) as exc:
        raise CliError(str(exc))
    print(
        json.dumps(
            {
                "opened_iteration": iteration.index,
                "batch_size": len(iteration.batch),
                "overlap_fraction": iteration.overlap_fraction,
            },
            indent=2,
        )
    )
    return 0


def cmd_evaluate(args) -> int:
    project = _load_project(args.project)
    rows = evaluation.learning_curve(project)
    csv_text = evaluation.learning_curve_csv(rows)
    if args.out:
        Path(args.out).write_text(csv_text, encoding="utf-8")
        print(f"wrote {len(rows)} rows to {args.out}")
    else:
        print(csv_text, end="")
    return 0


def cmd_selftrain(args) -> int:
    project = _load_project(args.project)
    try:
        config = SelfTrainConfig(f_pos=args.f_pos, f_neg=args.f_neg, seed=args.seed)
        report = self_training.run_for_project(project, [config], view=args.view)
    except (ValueError, TrainingError, ProjectError) as exc:
        raise CliError(str(exc))
    if args.json:
        print(json.dumps(report.to_dict(), indent=2))
    else:
        print(report.to_text_table())
    return 0


def cmd_agreement(args) -> int:
    if args.design_raters:
        rater_ids = [f"r{i + 1:02d}" for i in range(args.design_raters)]
        design = agreement.pairwise_design(rater_ids, units_per_pair=args.units_per_pair)
        print(json.dumps([{"unit": u, "raters": [a, b]} for u, a, b in design], indent=2))
        return 0
    if args.ratings:
        try:
            matrix = agreement.RatingMatrix.from_csv(args.ratings)
        except (OSError, agreement.AgreementError) as exc:
            raise CliError(str(exc))
    else:
        project = _load_project(args.project)
        matrix = agreement.RatingMatrix.from_rows(
            (pid, annotator, ex.label)
            for (pid, annotator), ex in project.label_view.items()
        )
    try:
        report = agreement.krippendorff_alpha(matrix)
    except agreement.AgreementError as exc:
        raise CliError(str(exc))
    print(json.dumps(report.to_dict(), indent=2))
    return 0


def cmd_export(args) -> int:
    project = _load_project(args.project)
    if args.what == "learning-curve":
        rows = active_loop.stored_learning_curve(project)
        text = evaluation.learning_curve_csv(rows)
    elif args.what == "distances":
        closed = sorted(i for i, it in project.iterations.items() if it.closed)
        if not closed:
            raise CliError("no closed iterations: nothing to export")
        index = args.iteration if args.iteration is not None else closed[-1]
        path = project.reports_dir / f"distances_iter{index:03d}_{args.view}.{args.fmt}"
        if not path.exists():
            raise CliError(f"no export found at {path}")
        text = path.read_text(encoding="utf-8")
        if args.set and args.fmt == "csv":
            lines = text.splitlines()
            kept = [lines[0]] + [ln for ln in lines[1:] if ln.split(",")[1] == args.set]
            text = "\n".join(kept) + "\n"
    else:
        raise CliError(f"unknown export {args.what!r}")
    if args.out:
        Path(args.out).write_text(text, encoding="utf-8")
        print(f"wrote {args.out}")
    else:
        print(text, end="")
    return 0


def cmd_serve(args) -> int:
    import uvicorn

    from .service import create_app

    uvicorn.run(create_app(args.root), host=args.host, port=args.port)
    return 0


def build_parser() -> _Parser:
    parser = _Parser(prog="albench", description=__doc__)
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("ingest", help="create a project (if needed) and ingest a posts dump")
    p.add_argument("--project", required=True, help="project directory")
    p.add_argument("--input", required=True, help="dump file")
    p.add_argument("--format", choices=["dump-xml", "jsonl"], default="dump-xml")
    p.add_argument("--drop-code", action="store_true", help="drop text inside code/pre blocks")
    p.add_argument("--require-tag", default=None, help="tag every kept post must carry")
    p.add_argument("--any-of", default=None, help="comma-separated component tags")
    p.add_argument("--annotators", default="a,b")
    p.add_argument("--batch-size", type=int, default=100)
    p.add_argument("--overlap", default="0.0", help="comma-separated overlap schedule")
    p.add_argument("--epochs", type=int, default=50)
    p.add_argument("--c", type=float, default=1.0, help="SVM regularization C")
    p.add_argument("--train-seed", type=int, default=0)
    p.add_argument("--cv-runs", type=int, default=5)
    p.add_argument("--cv-folds", type=int, default=5)
    p.set_defaults(fn=cmd_ingest)

    p = sub.add_parser("filter", help="apply a tag filter to a persisted corpus")
    p.add_argument("--input", required=True)
    p.add_argument("--output", required=True)
    p.add_argument("--require-tag", required=True)
    p.add_argument("--any-of", required=True)
    p.set_defaults(fn=cmd_filter)

    p = sub.add_parser("iterate", help="show the current iteration and its assignments")
    p.add_argument("--project", required=True)
    p.set_defaults(fn=cmd_iterate)

    p = sub.add_parser("label-import", help="bulk-import labels (CSV or JSONL)")
    p.add_argument("--project", required=True)
    p.add_argument("--input", required=True)
    p.add_argument(
        "--seed-iteration",
        action="store_true",
        help="skip assignment checks (pre-loop seed labels)",
    )
    p.set_defaults(fn=cmd_label_import)

    p = sub.add_parser("advance", help="close the current iteration, retrain, open the next")
    p.add_argument("--project", required=True)
    p.set_defaults(fn=cmd_advance)

    p = sub.add_parser("evaluate", help="recompute the learning curve (CSV)")
    p.add_argument("--project", required=True)
    p.add_argument("--out", default=None)
    p.set_defaults(fn=cmd_evaluate)

    p = sub.add_parser("selftrain", help="run one self-training experiment")
    p.add_argument("--project", required=True)
    p.add_argument("--f-pos", type=float, required=True)
    p.add_argument("--f-neg", type=float, required=True)
    p.add_argument("--view", default="pooled")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--json", action="store_true", help="emit JSON instead of the text table")
    p.set_defaults(fn=cmd_selftrain)

    p = sub.add_parser("agreement", help="Krippendorff's alpha over labels or a ratings CSV")
    p.add_argument("--project", default=None)
    p.add_argument("--ratings", default=None, help="unit_id,rater_id,label CSV")
    p.add_argument("--design-raters", type=int, default=None, help="emit a pairwise design")
    p.add_argument("--units-per-pair", type=int, default=1)
    p.set_defaults(fn=cmd_agreement)

    p = sub.add_parser("export", help="emit stored learning-curve or distance exports")
    p.add_argument("--project", required=True)
    p.add_argument("--what", choices=["learning-curve", "distances"], required=True)
    p.add_argument("--set", choices=["labeled", "unlabeled"], default=None)
    p.add_argument("--view", default="pooled")
    p.add_argument("--iteration", type=int, default=None)
    p.add_argument("--fmt", choices=["csv", "json"], default="csv")
    p.add_argument("--out", default=None)
    p.set_defaults(fn=cmd_export)

    p = sub.add_parser("serve", help="run the HTTP service")
    p.add_argument("--root", required=True, help="directory holding project subdirectories")
    p.add_argument("--host", default="127.0.0.1")
    p.add_argument("--port", type=int, default=8000)
    p.set_defaults(fn=cmd_serve)

    return parser


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
        code = args.fn(args)
    except CliError as exc:
        print(f"error: {exc}", file=sys.stderr)
        code = 1
    except Exception as exc:  # noqa: BLE001 - anything else is an internal error
        print(f"internal error: {exc}", file=sys.stderr)
        code = 2
    return code


if __name__ == "__main__":
    sys.exit(main())
