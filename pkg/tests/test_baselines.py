import math

import numpy as np
import pytest

from sfcsim import analytics as an
from sfcsim.baselines import (AlohaConfig, TdmaConfig, aloha_slot_stats, round_robin_partition, simulate_saloha,
                              simulate_tdma)
from sfcsim.codebook import FrameParams
from sfcsim.protocol import score
from sfcsim.traffic import EventLog, TrafficParams, generate_events

FP = FrameParams(64, 6, 11)


def _tdma(n, s, N=64, horizon=200):
    ev = EventLog(n, s, N=N, horizon=horizon)
    return ev, simulate_tdma(ev, TdmaConfig(FrameParams(N, 6, 11)))


def test_partition_balanced():
    part = round_robin_partition(64, 11)
    sizes = np.bincount(part, minlength=11)
    assert sizes.sum() == 64 and sizes.max() - sizes.min() <= 1
    with pytest.raises(ValueError):
        TdmaConfig(FP, partition=np.zeros(64, int))


def test_tdma_single_delivered():
    ev, est = _tdma([10], [3])
    assert est == ev


def test_tdma_same_slot_same_time_collide():
    _, est = _tdma([10, 10], [0, 11])  # both in slot 0
    assert len(est) == 0


def test_tdma_window_boundary():
    _, est = _tdma([10, 15], [0, 11])  # k - 1 apart
    assert len(est) == 0
    ev, est = _tdma([10, 21], [0, 11])  # 2k - 1 apart
    assert est == ev
    ev, est = _tdma([10, 10], [0, 1])  # different slots
    assert est == ev


def test_saloha_lone_and_collision():
    p = FrameParams(4, 6, 11)
    ev = EventLog([1, 20], [0, 1], N=4, horizon=40, time=[1.1, 20.5])
    assert simulate_saloha(ev, AlohaConfig(p)) == ev
    ev = EventLog([1, 1], [0, 1], N=4, horizon=40, time=[1.1, 1.2])  # same slot of width 6/11
    assert len(simulate_saloha(ev, AlohaConfig(p))) == 0


def test_baselines_never_false_alarm_and_collision_free_regime():
    ev = generate_events(TrafficParams(0.3, 20000, 64, 6), 3)
    for est in (simulate_tdma(ev, TdmaConfig(FP)), simulate_saloha(ev, AlohaConfig(FP))):
        t = set(zip(ev.n.tolist(), ev.sensor.tolist()))
        assert set(zip(est.n.tolist(), est.sensor.tolist())) <= t
    # N <= R with flags spaced beyond the window: nothing collides
    starts = np.arange(0, 1000, 20)
    ev = EventLog(starts, starts % 5, N=5, horizon=1100)
    assert simulate_tdma(ev, TdmaConfig(FrameParams(5, 6, 11))) == ev


def test_tdma_success_matches_closed_form():
    lam = 0.32
    ev = generate_events(TrafficParams(lam, 10**6, 64, 6), 11)
    s = score(ev, simulate_tdma(ev, TdmaConfig(FP)), 6)
    target = an.tdma_efficiency(an.AnalyticParams(64, 6, 11, lam))
    assert abs(s.p_detect - target) < 3 * math.sqrt(target * (1 - target) / s.events)


def test_saloha_drop_matches_closed_form():
    lam = 0.32
    ev = generate_events(TrafficParams(lam, 10**6, 64, 6), 12)
    s = score(ev, simulate_saloha(ev, AlohaConfig(FP)), 6)
    target = an.saloha_efficiency(an.AnalyticParams(64, 6, 11, lam))
    assert abs(s.p_detect - target) < 3 * math.sqrt(target * (1 - target) / s.events)


def test_saloha_slot_collision_rate():
    lam = 0.2
    ev = generate_events(TrafficParams(lam, 10**6, 64, 6), 13)
    bad, total = aloha_slot_stats(ev, FP, 5, 10**6 - 6)
    p = an.saloha_error_prob(an.AnalyticParams(64, 6, 11, lam))
    assert abs(bad / total - p) < 3 * math.sqrt(p * (1 - p) / total)


def test_config_mismatch():
    with pytest.raises(ValueError):
        simulate_tdma(EventLog([], [], N=3, horizon=10), TdmaConfig(FP))
    with pytest.raises(ValueError):
        simulate_saloha(EventLog([], [], N=3, horizon=10), AlohaConfig(FP))
