import csv
import json

import pytest

from albench.cli import main
from albench.project import NEGATIVE_LABEL, POSITIVE_LABEL
from albench.synthetic import dump_xml, synthetic_corpus


@pytest.fixture()
def world(tmp_path):
    corpus, truth = synthetic_corpus(120, positive_fraction=0.45, seed=41)
    dump_path = tmp_path / "dump.xml"
    dump_path.write_text(dump_xml(corpus.posts), encoding="utf-8")
    return {"tmp": tmp_path, "corpus": corpus, "truth": truth, "dump": dump_path}


def run(*argv):
    return main(list(argv))


def ingest(world, **extra_flags):
    project_dir = world["tmp"] / "proj"
    argv = [
        "ingest",
        "--project", str(project_dir),
        "--input", str(world["dump"]),
        "--format", "dump-xml",
        "--batch-size", "12",
        "--epochs", "10",
        "--cv-runs", "2",
    ]
    for flag, value in extra_flags.items():
        argv += [flag, value]
    assert run(*argv) == 0
    return project_dir


def seed_csv(world, path, count=40):
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["post_id", "label", "annotator_id", "certainty", "rationale"])
        for i, post in enumerate(world["corpus"].posts[:count]):
            label = POSITIVE_LABEL if world["truth"][post.id] == 1 else NEGATIVE_LABEL
            writer.writerow([post.id, label, ("a", "b")[i % 2], "", ""])


def test_ingest_filter_and_iterate(world, capsys):
    project_dir = ingest(world)
    out = json.loads(capsys.readouterr().out)
    assert out["total"] == 120

    assert run("iterate", "--project", str(project_dir)) == 0
    view = json.loads(capsys.readouterr().out)
    assert view["index"] == 0 and view["status"] == "complete"


def test_filter_subcommand_writes_filtered_store(world, capsys, tmp_path):
    project_dir = ingest(world)
    corpus_path = project_dir / "corpus.jsonl"
    out_path = tmp_path / "filtered.jsonl"
    assert (
        run(
            "filter",
            "--input", str(corpus_path),
            "--output", str(out_path),
            "--require-tag", "performance",
            "--any-of", "apache,nginx,rails",
        )
        == 0
    )
    from albench.corpus import load_corpus

    filtered = load_corpus(out_path)
    assert 0 < filtered.total < 120
    assert all(
        "performance" in p.tags and (p.tags & {"apache", "nginx", "rails"})
        for p in filtered.posts
    )


def test_label_import_advance_evaluate_export_selftrain_agreement(world, capsys, tmp_path):
    project_dir = ingest(world, **{"--overlap": "0.25"})
    capsys.readouterr()

    seeds = tmp_path / "seed.csv"
    seed_csv(world, seeds)
    assert run("label-import", "--project", str(project_dir), "--input", str(seeds), "--seed-iteration") == 0
    capsys.readouterr()

    assert run("advance", "--project", str(project_dir)) == 0
    advance_out = json.loads(capsys.readouterr().out)
    assert advance_out["opened_iteration"] == 1
    assert advance_out["batch_size"] == 12

    # label the open batch through strict import
    assert run("iterate", "--project", str(project_dir)) == 0
    state = json.loads(capsys.readouterr().out)
    batch_rows = tmp_path / "batch.jsonl"
    with open(batch_rows, "w") as fh:
        for annotator, ids in state["assignments"].items():
            for pid in ids:
                label = POSITIVE_LABEL if world["truth"][pid] == 1 else NEGATIVE_LABEL
                fh.write(json.dumps({"post_id": pid, "label": label, "annotator_id": annotator}) + "\n")
    assert run("label-import", "--project", str(project_dir), "--input", str(batch_rows)) == 0
    capsys.readouterr()

    curve_path = tmp_path / "curve.csv"
    assert run("evaluate", "--project", str(project_dir), "--out", str(curve_path)) == 0
    capsys.readouterr()
    lines = curve_path.read_text().strip().splitlines()
    assert lines[0] == "iteration,view,accuracy,precision,recall,f1"
    assert len(lines) == 7  # iterations 0-1, three views each

    assert run("export", "--project", str(project_dir), "--what", "learning-curve") == 0
    stored = capsys.readouterr().out.strip().splitlines()
    assert len(stored) == 4  # header + iteration 0 rows from the advance

    assert (
        run(
            "export",
            "--project", str(project_dir),
            "--what", "distances",
            "--set", "unlabeled",
        )
        == 0
    )
    distance_lines = capsys.readouterr().out.strip().splitlines()
    assert distance_lines[0] == "post_id,set,distance,quadrant"
    assert all(",unlabeled," in line for line in distance_lines[1:])

    assert (
        run(
            "selftrain",
            "--project", str(project_dir),
            "--f-pos", "0.05",
            "--f-neg", "0.5",
        )
        == 0
    )
    table = capsys.readouterr().out
    assert "Baseline" in table and "Approach" in table

    assert run("agreement", "--project", str(project_dir)) == 0
    report = json.loads(capsys.readouterr().out)
    assert "alpha" in report
    assert report["pairable_units"] == 3  # floor(0.25 * 12) shared posts


def test_agreement_design_and_ratings_csv(tmp_path, capsys):
    assert run("agreement", "--design-raters", "4") == 0
    design = json.loads(capsys.readouterr().out)
    assert len(design) == 6

    ratings = tmp_path / "ratings.csv"
    ratings.write_text("unit_id,rater_id,label\nu1,r1,x\nu1,r2,x\nu2,r1,x\nu2,r2,y\n")
    assert run("agreement", "--ratings", str(ratings)) == 0
    report = json.loads(capsys.readouterr().out)
    assert report["pairable_units"] == 2


def test_cli_error_paths(world, capsys, tmp_path):
    # user error: missing file
    assert run("ingest", "--project", str(tmp_path / "p"), "--input", "missing.xml") == 1
    # user error: advancing an unlabeled project
    project_dir = ingest(world)
    capsys.readouterr()
    assert run("advance", "--project", str(project_dir)) == 1
    err = capsys.readouterr().err
    assert "error:" in err
    # usage error
    assert run("unknown-command") == 1
