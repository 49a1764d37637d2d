import math

import numpy as np
import pytest
from scipy.stats import chisquare, poisson

from sfcsim.traffic import EventLog, SampledSignal, TrafficParams, events_from_signal, generate_events


def test_vanishing_rate_is_empty():
    assert len(generate_events(TrafficParams(1e-12, 100, 4, 1), 1)) == 0


def test_zero_rate():
    for mode in ("renewal", "poisson"):
        assert len(generate_events(TrafficParams(0.0, 50, 4, 2, mode), 1)) == 0


def test_mean_count_reference_load():
    ev = generate_events(TrafficParams(0.2, 10**6, 64, 1), 2)
    assert abs(ev.counts().mean() / 0.2 - 1) < 0.01


def test_single_sensor_flag_collapse():
    # one sensor at rate 0.5: the flag probability is 1 - exp(-0.5), the mean count 0.5
    with pytest.warns(UserWarning):
        p = TrafficParams(0.5, 10**6, 1, 1)
    ev = generate_events(p, 3)
    frac = len(ev) / 10**6
    assert frac < 0.5
    assert abs(frac - (1 - math.exp(-0.5))) < 4 * math.sqrt(0.4 / 1e6)


def test_low_ratio_warns():
    with pytest.warns(UserWarning):
        TrafficParams(0.5, 100, 1, 1)


@pytest.mark.parametrize("kw", [dict(lam=-1.0), dict(lam=math.inf), dict(horizon=2, k=3), dict(N=0),
                                dict(mode="burst")])
def test_validation(kw):
    base = dict(lam=0.2, horizon=100, N=64, k=1)
    base.update(kw)
    with pytest.raises(ValueError):
        TrafficParams(**base)


def test_seed_determinism_and_bounds():
    p = TrafficParams(0.3, 5000, 32, 6)
    a, b = generate_events(p, 9), generate_events(p, 9)
    assert a == b and np.array_equal(a.time, b.time)
    assert a.n.max() <= p.horizon - p.k
    assert a != generate_events(p, 10)


def test_counts_fit_poisson():
    lam = 0.3
    ev = generate_events(TrafficParams(lam, 2 * 10**5, 64, 1), 4)  # N/lam ~ 213
    c = ev.counts()[: 2 * 10**5]
    obs = np.bincount(c, minlength=4)[:4].astype(float)
    obs[3] = (c >= 3).sum()
    exp = poisson.pmf(np.arange(3), lam)
    exp = np.append(exp, 1 - exp.sum()) * c.size
    assert chisquare(obs, exp).pvalue > 0.01


def test_poisson_mode_distinct_sensors():
    with pytest.warns(UserWarning):
        p = TrafficParams(2.0, 2000, 5, 1, "poisson")
    ev = generate_events(p, 5)
    assert ev.counts().max() <= 5
    assert abs(ev.counts().mean() - 2.0) < 0.15


def test_log_validation():
    with pytest.raises(ValueError):
        EventLog([1, 1], [0, 0], N=2, horizon=5)
    with pytest.raises(ValueError):
        EventLog([5], [0], N=2, horizon=5)
    with pytest.raises(ValueError):
        EventLog([0], [2], N=2, horizon=5)


def test_log_csv_and_dense_roundtrip():
    ev = generate_events(TrafficParams(0.4, 300, 8, 2), 6)
    assert EventLog.from_csv(ev.to_csv(), 8, 300) == ev
    assert EventLog.from_dense(ev.dense()) == ev
    assert ev.to_csv().startswith("n,sensor_id\n")
    n0 = int(ev.n[0])
    assert ev.flagged(n0) == set(ev.sensor[ev.n == n0].tolist())


def _signal(points, thr=1.0):
    return events_from_signal(SampledSignal(points, thr))


def test_signal_constant_below():
    theta = _signal([(t / 10, 0.2) for t in range(50)])
    assert not theta.any()


def test_signal_single_ramp_crossing():
    # crossing between t=2.3 and t=2.6 lies in T_3 = [2, 3)
    pts = [(t / 10, t / 10 / 2.5) for t in range(0, 50)]
    pts = [(t, 0.0 if t < 2.3 else 2.0) for t, _ in pts]
    theta = _signal(pts)
    assert theta[3] == 1 and theta.sum() == 1


def test_signal_double_crossing_one_flag():
    pts = [(0.1, 0), (0.2, 2), (0.3, 0), (0.4, 2), (1.5, 2)]
    theta = _signal(pts)
    assert theta[1] == 1 and theta.sum() == 1


def test_signal_down_crossing_ignored_and_ties():
    theta = _signal([(0.1, 2), (0.2, 0), (1.2, 0), (1.3, 1.0)])
    assert theta[1] == 0 and theta[2] == 1  # equality counts as crossed


def test_signal_validation():
    with pytest.raises(ValueError):
        SampledSignal([(0.2, 0), (0.1, 1)], 1.0)
    with pytest.raises(ValueError):
        SampledSignal([(0.0, 0), (0.1, 1)], 1.0, tau=0)
