#!/usr/bin/env python3
"""Emit a synthetic Posts-style XML dump plus its ground-truth labels.

Useful for exercising the CLI end to end:

    python3 scripts/make_synthetic_dump.py --posts 200 --out /tmp/demo
    albench ingest --project /tmp/demo/project --input /tmp/demo/posts.xml
"""

import argparse
import csv
from pathlib import Path

from albench.synthetic import dump_xml, synthetic_corpus


def main() -> int:
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("--posts", type=int, default=200)
    parser.add_argument("--positive-fraction", type=float, default=0.4)
    parser.add_argument("--seed", type=int, default=0)
    parser.add_argument("--out", required=True, help="output directory")
    args = parser.parse_args()

    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    corpus, truth = synthetic_corpus(args.posts, args.positive_fraction, seed=args.seed)

    xml_path = out / "posts.xml"
    xml_path.write_text(dump_xml(corpus.posts), encoding="utf-8")

    truth_path = out / "truth.csv"
    with open(truth_path, "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh)
        writer.writerow(["post_id", "label"])
        for post_id in sorted(truth):
            writer.writerow([post_id, "positive" if truth[post_id] == 1 else "negative"])

    print(f"wrote {corpus.total} posts to {xml_path}")
    print(f"wrote ground truth to {truth_path}")
    return 0


if __name__ == "__main__":
    raise SystemExit(main())
