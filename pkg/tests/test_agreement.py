import itertools
import math
import random
from collections import Counter

import pytest
from hypothesis import given, settings, strategies as st

from albench.agreement import (
    AgreementError,
    RatingMatrix,
    krippendorff_alpha,
    pairwise_design,
    percent_agreement,
)


def matrix_from_pairs(pairs):
    """Two-rater matrix: one (label_a, label_b) tuple per unit."""
    matrix = RatingMatrix()
    for unit, (a, b) in enumerate(pairs):
        matrix.add(unit, "ra", a)
        matrix.add(unit, "rb", b)
    return matrix


def alpha_first_principles(matrix: RatingMatrix):
    """Independent oracle: disagreement shares computed pairwise per unit."""
    pairable = matrix.pairable_units()
    n = sum(len(r) for r in pairable.values())
    observed = 0.0
    label_counts: Counter = Counter()
    for ratings in pairable.values():
        m = len(ratings)
        disagreeing = sum(
            1 for x, y in itertools.combinations(ratings, 2) if x != y
        )
        observed += 2 * disagreeing / (m - 1)
        label_counts.update(ratings)
    observed /= n
    expected = sum(
        label_counts[c] * label_counts[k]
        for c in label_counts
        for k in label_counts
        if c != k
    ) / (n * (n - 1))
    if expected == 0:
        return None
    return 1.0 - observed / expected


# -- hand-computed fixtures -------------------------------------------------

# (pairs, expected alpha, expected percent agreement)
FIXTURES = [
    # worked example: o11=2, o00=4, o01=o10=1; Do=0.25, De=30/56
    ([("1", "1"), ("1", "0"), ("0", "0"), ("0", "0")], 8 / 15, 3 / 4),
    # perfect agreement with two labels present: Do=0, De=2/3
    ([("x", "x"), ("y", "y")], 1.0, 1.0),
    # systematic flip: Do=1, De=2/3
    ([("x", "y"), ("y", "x")], -0.5, 0.0),
    # three agreeing + one mixed unit: Do=2/6, De=18/30
    ([("x", "x"), ("x", "y"), ("y", "y")], 4 / 9, 2 / 3),
    # skewed marginals: units (a,a),(a,a),(a,b): o_aa=4, o_ab=o_ba=1
    # n=6, n_a=5, n_b=1; Do=2/6, De=10/30
    ([("a", "a"), ("a", "a"), ("a", "b")], 0.0, 2 / 3),
]


@pytest.mark.parametrize("pairs, expected_alpha, expected_pct", FIXTURES)
def test_alpha_matches_hand_computed_fixtures(pairs, expected_alpha, expected_pct):
    report = krippendorff_alpha(matrix_from_pairs(pairs))
    assert report.alpha == pytest.approx(expected_alpha, abs=1e-9)
    assert not report.alpha_undefined
    assert report.percent_agreement == pytest.approx(expected_pct, abs=1e-9)


def test_alpha_three_rater_unit():
    # single unit rated (x, x, y): Do = De = 2/3
    matrix = RatingMatrix.from_rows([(1, "r1", "x"), (1, "r2", "x"), (1, "r3", "y")])
    report = krippendorff_alpha(matrix)
    assert report.alpha == pytest.approx(0.0, abs=1e-12)


def test_alpha_undefined_when_single_label():
    matrix = matrix_from_pairs([("x", "x"), ("x", "x")])
    report = krippendorff_alpha(matrix)
    assert report.alpha is None
    assert report.alpha_undefined


def test_alpha_ignores_single_rated_units():
    matrix = matrix_from_pairs([("x", "x"), ("x", "y"), ("y", "y")])
    matrix.add("lonely", "ra", "x")  # no second rating: excluded from alpha
    report = krippendorff_alpha(matrix)
    assert report.alpha == pytest.approx(4 / 9, abs=1e-9)
    assert report.pairable_units == 3
    assert report.total_units == 4


def test_alpha_errors_without_pairable_units():
    matrix = RatingMatrix.from_rows([(1, "ra", "x"), (2, "rb", "y")])
    with pytest.raises(AgreementError):
        krippendorff_alpha(matrix)
    with pytest.raises(AgreementError):
        percent_agreement(matrix)


def test_label_marginals_are_rating_counts():
    report = krippendorff_alpha(matrix_from_pairs([("x", "x"), ("x", "y")]))
    assert report.label_marginals == {"x": pytest.approx(3.0), "y": pytest.approx(1.0)}


# -- properties ---------------------------------------------------------------


@st.composite
def _matrices(draw):
    n_units = draw(st.integers(min_value=1, max_value=8))
    rows = []
    for unit in range(n_units):
        raters = draw(st.integers(min_value=2, max_value=4))
        for r in range(raters):
            rows.append((unit, f"r{r}", draw(st.sampled_from(["x", "y", "z"]))))
    return RatingMatrix.from_rows(rows)


@given(_matrices())
def test_alpha_agrees_with_first_principles_oracle(matrix):
    expected = alpha_first_principles(matrix)
    report = krippendorff_alpha(matrix)
    if expected is None:
        assert report.alpha_undefined
    else:
        assert report.alpha == pytest.approx(expected, abs=1e-12)


@given(_matrices())
def test_alpha_invariant_under_relabeling(matrix):
    swapped = RatingMatrix.from_rows(
        (unit, rater, {"x": "y", "y": "x", "z": "z"}[label])
        for (unit, rater), label in matrix.values.items()
    )
    first = krippendorff_alpha(matrix)
    second = krippendorff_alpha(swapped)
    if first.alpha is None:
        assert second.alpha is None
    else:
        assert second.alpha == pytest.approx(first.alpha, abs=1e-12)


@given(_matrices(), st.randoms(use_true_random=False))
def test_alpha_invariant_under_unit_reordering(matrix, rng):
    rows = [(unit, rater, label) for (unit, rater), label in matrix.values.items()]
    rng.shuffle(rows)
    renumber = {unit: i for i, unit in enumerate(dict.fromkeys(u for u, _, _ in rows))}
    shuffled = RatingMatrix.from_rows((renumber[u], r, l) for u, r, l in rows)
    first = krippendorff_alpha(matrix)
    second = krippendorff_alpha(shuffled)
    if first.alpha is None:
        assert second.alpha is None
    else:
        assert second.alpha == pytest.approx(first.alpha, abs=1e-12)


def test_alpha_is_one_iff_no_observed_disagreement():
    agreeing = matrix_from_pairs([("x", "x"), ("y", "y"), ("x", "x")])
    assert krippendorff_alpha(agreeing).alpha == 1.0
    disagreeing = matrix_from_pairs([("x", "x"), ("x", "y"), ("y", "y")])
    assert krippendorff_alpha(disagreeing).alpha < 1.0


def test_random_independent_ratings_give_near_zero_alpha():
    rng = random.Random(20170817)
    pairs = [
        (
            "p" if rng.random() < 0.3 else "n",
            "p" if rng.random() < 0.3 else "n",
        )
        for _ in range(10_000)
    ]
    report = krippendorff_alpha(matrix_from_pairs(pairs))
    assert abs(report.alpha) < 0.05


# -- percent agreement --------------------------------------------------------


def test_percent_agreement_paper_shaped_fixtures():
    pairs = [("p", "p")] * 37 + [("p", "n")] * 29
    assert percent_agreement(matrix_from_pairs(pairs)) == pytest.approx(37 / 66)
    assert round(percent_agreement(matrix_from_pairs(pairs)), 3) == 0.561

    pairs = [("p", "p")] * 18 + [("p", "n")] * 2
    assert percent_agreement(matrix_from_pairs(pairs)) == pytest.approx(0.9)


def test_percent_agreement_unanimous():
    assert percent_agreement(matrix_from_pairs([("x", "x")] * 5)) == 1.0


# -- pairwise design ----------------------------------------------------------


@pytest.mark.parametrize("n", range(2, 14))
@pytest.mark.parametrize("units_per_pair", [1, 2])
def test_pairwise_design_exhaustive(n, units_per_pair):
    raters = [f"r{i:02d}" for i in range(n)]
    design = pairwise_design(raters, units_per_pair=units_per_pair)
    assert len(design) == math.comb(n, 2) * units_per_pair

    unit_ids = [unit for unit, _, _ in design]
    assert len(set(unit_ids)) == len(unit_ids)  # each unit exactly once

    pair_counts = Counter(frozenset((a, b)) for _, a, b in design)
    assert set(pair_counts) == {frozenset(p) for p in itertools.combinations(raters, 2)}
    assert all(count == units_per_pair for count in pair_counts.values())

    load = Counter(r for _, a, b in design for r in (a, b))
    assert all(load[r] == (n - 1) * units_per_pair for r in raters)


def test_pairwise_design_twelve_raters_matches_group_exercise():
    design = pairwise_design([f"r{i:02d}" for i in range(12)])
    assert len(design) == 66
    load = Counter(r for _, a, b in design for r in (a, b))
    assert all(count == 11 for count in load.values())


def test_pairwise_design_two_raters():
    assert pairwise_design(["a", "b"]) == [(0, "a", "b")]


def test_pairwise_design_errors():
    with pytest.raises(AgreementError):
        pairwise_design(["solo"])
    with pytest.raises(AgreementError):
        pairwise_design(["a", "a"])
    with pytest.raises(AgreementError):
        pairwise_design(["a", "b"], units_per_pair=0)


# -- CSV interchange ----------------------------------------------------------


def test_rating_matrix_csv_roundtrip(tmp_path):
    path = tmp_path / "ratings.csv"
    path.write_text("unit_id,rater_id,label\nu1,ra,pos\nu1,rb,neg\nu2,ra,pos\n")
    matrix = RatingMatrix.from_csv(path)
    assert matrix.values == {("u1", "ra"): "pos", ("u1", "rb"): "neg", ("u2", "ra"): "pos"}
    assert matrix.raters == ["ra", "rb"]


def test_rating_matrix_csv_rejects_wrong_header(tmp_path):
    path = tmp_path / "ratings.csv"
    path.write_text("a,b,c\n1,2,3\n")
    with pytest.raises(AgreementError):
        RatingMatrix.from_csv(path)
