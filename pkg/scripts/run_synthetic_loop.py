#!/usr/bin/env python3
"""Headless demo of the full annotation loop on a synthetic corpus.

Builds a project, seeds labels from the generating truth, runs a few
uncertainty-sampled iterations with two scripted annotators, then prints
the learning curve and a self-training report.

Run: python3 scripts/run_synthetic_loop.py [--cycles 3] [--out DIR]
"""

import argparse
import tempfile
import time
from pathlib import Path

from albench import active_loop, evaluation, self_training
from albench.project import NEGATIVE_LABEL, POSITIVE_LABEL, Project, ProjectConfig
from albench.self_training import SelfTrainConfig
from albench.svm import TrainConfig
from albench.synthetic import synthetic_corpus


def main() -> int:
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("--posts", type=int, default=600)
    parser.add_argument("--positive-fraction", type=float, default=0.4)
    parser.add_argument("--seed-labels", type=int, default=100)
    parser.add_argument("--cycles", type=int, default=3)
    parser.add_argument("--batch-size", type=int, default=100)
    parser.add_argument("--overlap", type=float, default=0.25)
    parser.add_argument("--seed", type=int, default=7)
    parser.add_argument("--out", default=None, help="project directory (default: temp)")
    args = parser.parse_args()

    root = Path(args.out) if args.out else Path(tempfile.mkdtemp(prefix="albench-"))
    corpus, truth = synthetic_corpus(args.posts, args.positive_fraction, seed=args.seed)

    config = ProjectConfig(
        batch_size=args.batch_size,
        overlap_schedule=(args.overlap,),
        train=TrainConfig(epochs=25, seed=args.seed),
    )
    project = Project.create(root / "project", config, name="synthetic-demo")
    project.set_corpus(corpus)

    def oracle(post_id: int) -> str:
        return POSITIVE_LABEL if truth[post_id] == 1 else NEGATIVE_LABEL

    seed_rows = [
        {"post_id": p.id, "label": oracle(p.id), "annotator_id": ("a", "b")[i % 2]}
        for i, p in enumerate(corpus.posts[: args.seed_labels])
    ]
    active_loop.import_labels(project, seed_rows)
    print(f"project at {project.root}")
    print(f"seeded {len(seed_rows)} labels over {corpus.total} posts")

    for cycle in range(1, args.cycles + 1):
        started = time.perf_counter()
        iteration = active_loop.advance_iteration(project)
        rows = [
            {"post_id": pid, "label": oracle(pid), "annotator_id": annotator}
            for annotator, ids in iteration.assignments.items()
            for pid in ids
        ]
        active_loop.import_labels(project, rows, enforce_assignment=True)
        shared = len(set(iteration.assignments["a"]) & set(iteration.assignments["b"]))
        print(
            f"cycle {cycle}: iteration {iteration.index} labeled "
            f"({len(iteration.batch)} posts, {shared} shared) in {time.perf_counter() - started:.1f}s"
        )

    print("\nlearning curve (live recomputation):")
    print(evaluation.learning_curve_csv(evaluation.learning_curve(project)))

    print("self-training on the pooled view:")
    report = self_training.run_for_project(
        project,
        [
            SelfTrainConfig(f_pos=0.05, f_neg=0.0),
            SelfTrainConfig(f_pos=0.0, f_neg=0.5),
            SelfTrainConfig(f_pos=0.05, f_neg=0.5),
        ],
    )
    print(report.to_text_table())
    return 0


if __name__ == "__main__":
    raise SystemExit(main())
