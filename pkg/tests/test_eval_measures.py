"""Multi-ground-truth match rates and the recombination edit DP."""

import math
from itertools import product

import pytest

from pianofinger.errors import LengthMismatch
from pianofinger.eval_measures import (
    DEFAULT_COSTS,
    RecombinationConfig,
    format_report_table,
    format_report_text,
    general_match_rate,
    highest_match_rate,
    match_rate_report,
    recombination_match_rate,
    soft_match_rate,
    summarize,
)

INF = math.inf


def brute_force_recombination(est, gts, config):
    n, n_g = len(est), len(gts)
    best_cost, best_path = None, None
    for path in product(range(n_g), repeat=n):
        cost = 0.0 if gts[path[0]][0] == est[0] else config.c_sub
        for pos in range(1, n):
            g_prev, g = path[pos - 1], path[pos]
            if g_prev == g:
                step = 0.0
            elif gts[g][pos] == gts[g_prev][pos]:
                step = config.c_rec
            else:
                step = config.c_rec_prime
            cost = cost + step
            cost = cost + (0.0 if gts[g][pos] == est[pos] else config.c_sub)
        if best_cost is None or cost < best_cost:
            best_cost, best_path = cost, path
    return best_cost, best_path


def test_simple_rates():
    gts = [[1, 2], [2, 1]]
    assert general_match_rate([1, 1], gts) == 0.5
    assert highest_match_rate([1, 1], gts) == 0.5
    assert soft_match_rate([1, 1], gts) == 1.0
    assert soft_match_rate([3, 3], gts) == 0.0


def test_identity_rates():
    gt = [1, 2, 3, 4]
    for fn in (general_match_rate, highest_match_rate, soft_match_rate):
        assert fn(gt, [gt]) == 1.0
    m_rec, e_rec, path = recombination_match_rate(gt, [gt])
    assert (m_rec, e_rec, path) == (1.0, 0.0, (0, 0, 0, 0))


def test_recombination_worked_example():
    gts = [[1, 2, 3], [2, 1, 3]]
    m_rec, e_rec, path = recombination_match_rate([1, 1, 3], gts)
    assert e_rec == 1.0
    assert m_rec == pytest.approx(2.0 / 3.0)
    assert path in ((0, 0, 0), (1, 1, 1))
    # lexicographically smallest optimal path
    cost, oracle_path = brute_force_recombination([1, 1, 3], gts, DEFAULT_COSTS)
    assert path == oracle_path


def test_single_ground_truth_reduces_to_match_rate():
    gt = [1, 2, 3, 4, 5]
    est = [1, 2, 5, 4, 1]
    m_rec, e_rec, path = recombination_match_rate(est, [gt])
    assert m_rec == general_match_rate(est, [gt])
    assert path == (0,) * 5


def test_matches_brute_force(rng):
    cost_choices = [0.0, 0.5, 1.0, 2.0, INF]
    for _ in range(60):
        n = int(rng.integers(1, 8))
        n_g = int(rng.integers(1, 4))
        gts = [[int(d) for d in rng.integers(1, 4, size=n)] for _ in range(n_g)]
        est = [int(d) for d in rng.integers(1, 4, size=n)]
        config = RecombinationConfig(
            c_rec=float(rng.choice(cost_choices)),
            c_rec_prime=float(rng.choice(cost_choices)),
            c_sub=float(rng.choice([0.5, 1.0, 2.0])),
        )
        m_rec, e_rec, path = recombination_match_rate(est, gts, config)
        cost, oracle_path = brute_force_recombination(est, gts, config)
        assert e_rec == cost
        assert path == oracle_path
        assert m_rec == (n - e_rec) / n


def test_measure_ordering(rng):
    for _ in range(300):
        n = int(rng.integers(1, 12))
        n_g = int(rng.integers(1, 5))
        gts = [[int(d) for d in rng.integers(1, 6, size=n)] for _ in range(n_g)]
        est = [int(d) for d in rng.integers(1, 6, size=n)]
        report = match_rate_report(est, gts)
        assert report.m_gen <= report.m_high + 1e-12
        assert report.m_high <= report.m_rec + 1e-12
        assert report.m_rec <= report.m_soft + 1e-12
        assert 0.0 <= report.m_gen and report.m_soft <= 1.0


def test_infinite_switch_cost_recovers_highest(rng):
    config = RecombinationConfig(c_rec=INF, c_rec_prime=INF)
    for _ in range(100):
        n = int(rng.integers(1, 10))
        n_g = int(rng.integers(1, 4))
        gts = [[int(d) for d in rng.integers(1, 5, size=n)] for _ in range(n_g)]
        est = [int(d) for d in rng.integers(1, 5, size=n)]
        m_rec, _, _ = recombination_match_rate(est, gts, config)
        assert m_rec == highest_match_rate(est, gts)


def test_free_switching_bounded_by_soft(rng):
    config = RecombinationConfig(c_rec=0.0, c_rec_prime=INF)
    for _ in range(100):
        n = int(rng.integers(1, 10))
        gts = [[int(d) for d in rng.integers(1, 5, size=n)] for _ in range(3)]
        est = [int(d) for d in rng.integers(1, 5, size=n)]
        default_m, _, _ = recombination_match_rate(est, gts)
        free_m, _, _ = recombination_match_rate(est, gts, config)
        assert default_m - 1e-12 <= free_m <= soft_match_rate(est, gts) + 1e-12


def test_permutation_invariance(rng):
    for _ in range(50):
        n = int(rng.integers(1, 8))
        gts = [[int(d) for d in rng.integers(1, 5, size=n)] for _ in range(3)]
        est = [int(d) for d in rng.integers(1, 5, size=n)]
        base = match_rate_report(est, gts)
        perm = [int(i) for i in rng.permutation(3)]
        shuffled = match_rate_report(est, [gts[i] for i in perm])
        for measure in ("m_gen", "m_high", "m_soft", "m_rec"):
            assert getattr(base, measure) == getattr(shuffled, measure)


def test_length_mismatch():
    with pytest.raises(LengthMismatch):
        general_match_rate([1, 2], [[1]])
    with pytest.raises(LengthMismatch):
        recombination_match_rate([1], [])
    with pytest.raises(LengthMismatch):
        soft_match_rate([], [[]])


def test_infinity_is_a_sentinel():
    # an unreachable configuration yields an exactly infinite cost
    config = RecombinationConfig(c_rec=INF, c_rec_prime=INF, c_sub=INF)
    m_rec, e_rec, _ = recombination_match_rate([9, 9], [[1, 2], [2, 1]], config)
    assert e_rec == INF and m_rec == -INF


def test_report_formatting():
    reports = {
        "010": match_rate_report([1, 2, 3], [[1, 2, 3], [1, 2, 4]]),
        "002": match_rate_report([1, 1], [[1, 2]]),
    }
    summary = summarize(reports)
    assert summary["n_pieces"] == 2 and summary["n_notes"] == 5
    text = format_report_text(reports, summary)
    table = format_report_table(reports, summary)
    assert text.splitlines()[1].lstrip().startswith("002")  # sorted by piece id
    assert "macro" in text and "micro" in text
    rows = [line.split("\t") for line in table.strip().splitlines()]
    assert rows[0][0] == "piece" and rows[-2][0] == "macro"
    assert len(rows) == 1 + 2 + 2