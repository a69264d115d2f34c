"""Annotator agreement statistics and the power-law fit."""

import math

import pytest

from conftest import make_piece
from pianofinger.agreement import (
    MultiplicityUnit,
    analyze_sets,
    fit_power,
    multi_match_rate,
    multiplicity_distribution,
    random_model_match,
)
from pianofinger.errors import DegenerateFit, InsufficientAnnotators, OutOfDomain
from pianofinger.pig_io import GroundTruthSet, Hand


def gt_set(finger_rows, hand=Hand.RH, piece_id="p"):
    """Ground-truth set over a shared synthetic piece."""
    n = len(finger_rows[0])
    pieces = [
        make_piece(
            list(range(60, 60 + n)),
            hand=hand,
            digits=row,
            piece_id=piece_id,
            annotator_id=str(i),
        )
        for i, row in enumerate(finger_rows)
    ]
    return GroundTruthSet.from_pieces(pieces)


def test_multi_match_rate_examples():
    gts = [[1, 2], [1, 3], [1, 2]]
    assert multi_match_rate(gts, 2) == pytest.approx(2.0 / 3.0)
    assert multi_match_rate(gts, 3) == 0.5
    identical = [[1, 2, 3]] * 4
    for j in (2, 3, 4):
        assert multi_match_rate(identical, j) == 1.0


def test_multi_match_rate_non_increasing(rng):
    for _ in range(50):
        n = int(rng.integers(1, 15))
        n_g = int(rng.integers(2, 6))
        gts = [[int(d) for d in rng.integers(1, 4, size=n)] for _ in range(n_g)]
        values = [multi_match_rate(gts, j) for j in range(2, n_g + 1)]
        assert all(a >= b - 1e-12 for a, b in zip(values, values[1:]))


def test_multi_match_rate_domain():
    with pytest.raises(InsufficientAnnotators):
        multi_match_rate([[1, 2]], 2)
    with pytest.raises(InsufficientAnnotators):
        multi_match_rate([[1], [2]], 3)


def test_random_model_reference_point():
    value = random_model_match(0.68, 3)
    omega = (1.0 + math.sqrt(2.0 * 0.68 - 1.0)) / 2.0
    assert omega == 0.8
    assert value == pytest.approx(0.52, abs=1e-15)


def test_random_model_limits():
    assert random_model_match(1.0, 7) == 1.0
    for j in (2, 3, 6):
        assert random_model_match(0.5, j) == pytest.approx(2.0 ** (1 - j), abs=1e-15)


def test_random_model_round_trip(rng):
    for _ in range(100):
        m2 = float(rng.uniform(0.5, 1.0))
        assert abs(random_model_match(m2, 2) - m2) < 1e-12


def test_random_model_domain():
    with pytest.raises(OutOfDomain):
        random_model_match(0.49, 3)
    with pytest.raises(OutOfDomain):
        random_model_match(1.01, 3)


def test_multiplicity_note_unit():
    s = gt_set([[1, 2], [2, 2]])
    hist = multiplicity_distribution(s, MultiplicityUnit.NOTE)
    assert hist == {1: 0.5, 2: 0.5}
    identical = gt_set([[1, 2, 3], [1, 2, 3]])
    assert multiplicity_distribution(identical, MultiplicityUnit.NOTE) == {1: 1.0}


def test_multiplicity_pair_unit():
    s = gt_set([[1, 2, 3], [1, 3, 3], [1, 2, 3]])
    hist = multiplicity_distribution(s, MultiplicityUnit.NOTE_PAIR)
    # pairs (1,2)/(1,3)/(1,2) -> 2 choices; (2,3)/(3,3)/(2,3) -> 2 choices
    assert hist == {2: 1.0}


def test_multiplicity_histogram_sums_to_one(rng):
    for _ in range(20):
        n = int(rng.integers(2, 10))
        rows = [
            [int(d) for d in rng.integers(1, 6, size=n)]
            for _ in range(int(rng.integers(2, 5)))
        ]
        s = gt_set(rows)
        for unit in MultiplicityUnit:
            hist = multiplicity_distribution(s, unit)
            assert sum(hist.values()) == pytest.approx(1.0, abs=1e-12)
            assert all(v >= 0 for v in hist.values())


def test_multiplicity_needs_annotators():
    with pytest.raises(InsufficientAnnotators):
        multiplicity_distribution(gt_set([[1, 2]]), MultiplicityUnit.NOTE)


def test_fit_power_recovers_exact_law():
    points = [(j, 0.8 * j**-0.3) for j in (2, 3, 4, 5, 6)]
    c, gamma = fit_power(points)
    assert abs(c - 0.8) < 1e-9 and abs(gamma - 0.3) < 1e-9


def test_fit_power_constant_points():
    _, gamma = fit_power([(2, 0.7), (3, 0.7), (4, 0.7)])
    assert abs(gamma) < 1e-9


def test_fit_power_two_points_interpolates():
    c, gamma = fit_power([(2, 0.9), (4, 0.6)])
    assert 0.9 == pytest.approx(c * 2**-gamma, rel=1e-9)
    assert 0.6 == pytest.approx(c * 4**-gamma, rel=1e-9)


def test_fit_power_degenerate():
    with pytest.raises(DegenerateFit):
        fit_power([(2, 0.5)])
    with pytest.raises(DegenerateFit):
        fit_power([(2, 0.5), (2, 0.6)])
    with pytest.raises(DegenerateFit):
        fit_power([(2, 0.5), (3, -0.1)])


def test_analyze_sets_end_to_end(rng):
    sets = []
    for p in range(4):
        n = int(rng.integers(4, 9))
        base = [int(d) for d in rng.integers(1, 6, size=n)]
        rows = []
        for _ in range(int(rng.integers(2, 5))):
            row = list(base)
            flip = int(rng.integers(0, n))
            row[flip] = int(rng.integers(1, 6))  # mostly-agreeing annotators
            rows.append(row)
        sets.append(gt_set(rows, piece_id=f"p{p}"))
    report = analyze_sets(sets)
    js = sorted(report.match_rates)
    assert js[0] == 2
    assert set(report.random_reference) == set(report.match_rates)
    assert abs(report.random_reference[2] - report.match_rates[2]) < 1e-12
    assert sum(report.note_multiplicity.values()) == pytest.approx(1.0, abs=1e-9)
    values = [report.match_rates[j] for j in js]
    assert all(a >= b - 1e-12 for a, b in zip(values, values[1:]))


def test_analyze_sets_low_agreement_has_no_random_reference():
    disjoint = gt_set([[1, 2, 3, 4], [2, 3, 4, 5], [3, 4, 5, 1]])
    report = analyze_sets([disjoint])
    assert all(math.isnan(v) for v in report.random_reference.values())
