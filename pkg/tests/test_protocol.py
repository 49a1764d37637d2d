import warnings

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from sfcsim.channel import EnergyGrid
from sfcsim.codebook import Codebook, FrameParams, generate_codebook
from sfcsim.protocol import Score, score, sfc_decode, sfc_transmit
from sfcsim.traffic import EventLog, TrafficParams, generate_events


def _book(N=8, k=3, R=5, seed=1):
    return generate_codebook(FrameParams(N, k, R), seed)


def test_empty_log_gives_idle_grid_and_no_flags():
    book = _book()
    g = sfc_transmit(EventLog([], [], N=8, horizon=20), book)
    assert not g.occupancy.any()
    assert len(sfc_decode(g, book)) == 0


def test_single_flag_places_map():
    book = _book()
    g = sfc_transmit(EventLog([5], [3], N=8, horizon=20), book)
    expected = np.zeros((20, 5), int)
    expected[5 + np.arange(3), book.table[3]] = 1
    assert np.array_equal(g.occupancy, expected)
    est = sfc_decode(g, book)
    assert (5, 3) in set(zip(est.n.tolist(), est.sensor.tolist()))


def test_two_flags_sum():
    book = _book()
    g = sfc_transmit(EventLog([4, 4], [1, 6], N=8, horizon=20), book)
    ref = EnergyGrid(20, 5)
    ref.inject(book[1], 4)
    ref.inject(book[6], 4)
    assert np.array_equal(g.occupancy, ref.occupancy)


def test_constructive_collision_one_subsymbol():
    book = Codebook(FrameParams(2, 1, 2), [[0], [1]])
    truth = EventLog([3, 3], [0, 1], N=2, horizon=8)
    est = sfc_decode(sfc_transmit(truth, book), book)
    assert est == truth
    assert score(truth, est, 1).symbol_errors == 0


def test_unknown_sensor_rejected():
    with pytest.raises(ValueError):
        sfc_transmit(EventLog([1], [0], N=9, horizon=10), _book())


def test_score_identity_and_single_false_positive():
    ev = generate_events(TrafficParams(0.5, 400, 8, 3), 2)
    s = score(ev, ev, 3)
    assert s.overall_error == 0 and s.efficiency == 1.0
    empty = EventLog([], [], N=8, horizon=400)
    fp = EventLog([100], [2], N=8, horizon=400)
    s = score(empty, fp, 3)
    valid = 400 - 3 - 2 + 1
    assert s.symbols == valid
    assert s.p_quiet == pytest.approx(1 - 1 / (valid * 8), abs=1e-15)
    assert s.p_detect == 1.0 and s.overall_error == 1 / valid


def test_score_excludes_warmup_and_tail():
    truth = EventLog([0, 1, 50], [0, 0, 0], N=2, horizon=60)
    est = EventLog([0, 1], [1, 1], N=2, horizon=60)
    s = score(truth, est, 3)  # scores n in [2, 57]
    assert s.events == 1 and s.false_positives == 0 and s.detections == 0


def test_score_shape_mismatch():
    with pytest.raises(ValueError):
        score(EventLog([], [], N=2, horizon=10), EventLog([], [], N=3, horizon=10), 1)


def test_score_merge():
    a = Score(10, 4, 3, 2, 1, 2)
    b = Score(5, 4, 1, 1, 0, 0)
    assert a + b == Score(15, 4, 4, 3, 1, 2)
    lo, hi = (a + b).efficiency_ci()
    assert 0 <= lo <= (a + b).efficiency <= hi <= 1


@given(st.integers(2, 20), st.integers(1, 4), st.integers(2, 6), st.floats(0.05, 2.0), st.integers(0, 10**6))
@settings(max_examples=40, deadline=None)
def test_no_missed_detection_and_monotone(N, k, R, lam, seed):
    if N > R**k:
        return
    book = generate_codebook(FrameParams(N, k, R), seed)
    with warnings.catch_warnings():
        warnings.simplefilter("ignore")
        ev = generate_events(TrafficParams(lam, 300, N, k), seed)
    g = sfc_transmit(ev, book)
    est = sfc_decode(g, book)
    t = set(zip(ev.n.tolist(), ev.sensor.tolist()))
    e = set(zip(est.n.tolist(), est.sensor.tolist()))
    assert t <= e
    g.inject(book[0], 0)
    more = sfc_decode(g, book)
    assert e <= set(zip(more.n.tolist(), more.sensor.tolist()))


@pytest.mark.parametrize("seed", range(5))
def test_single_user_exact_when_flags_spaced(seed):
    # with one sensor, a phantom needs overlapping copies of its own map
    k = 4
    rng = np.random.default_rng(seed)
    starts = np.cumsum(rng.integers(k, 3 * k, size=40))
    book = generate_codebook(FrameParams(1, k, 3), seed)
    truth = EventLog(starts, np.zeros(starts.size, int), N=1, horizon=int(starts[-1]) + k)
    assert sfc_decode(sfc_transmit(truth, book), book) == truth


def test_perfect_efficiency_at_n_equals_r():
    ev = generate_events(TrafficParams(0.055, 10**5 + 10, 11, 6), 1)
    book = generate_codebook(FrameParams(11, 6, 11), 1)
    s = score(ev, sfc_decode(sfc_transmit(ev, book), book), 6)
    assert s.false_positives == 0 and s.efficiency == 1.0


def test_probe_false_positive_matches_single_event_rate():
    # pooled false-alarm rate vs the per-window E[(Q - T)/(R^k - T)] from the observed grid
    N, k, R, lam = 32, 3, 6, 0.8
    M = R**k
    num = den = 0.0
    for r in range(4):
        ev = generate_events(TrafficParams(lam, 50000, N, k, "poisson"), 100 + r)
        book = generate_codebook(FrameParams(N, k, R), 200 + r)
        g = sfc_transmit(ev, book)
        s = score(ev, sfc_decode(g, book), k)
        U = g.binary().sum(1)
        S = g.horizon - k + 1
        Q = np.prod([U[i : i + S] for i in range(k)], axis=0)[k - 1 : g.horizon - k + 1]
        T = ev.counts()[k - 1 : g.horizon - k + 1]
        num += s.false_positives
        den += float(((Q - T) / (M - T) * (N - T)).sum())
    assert num == pytest.approx(den, rel=0.1)
