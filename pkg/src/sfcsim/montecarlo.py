"""Replicated end-to-end experiments for SFC, TDMA and slotted ALOHA.

Replication r of an experiment with base seed s draws its traffic and its
codebook from ``SeedSequence([s, r]).spawn(2)``.  The scheme does not enter
the seed, so every scheme at a given point sees the same alarm traffic.
"""

from __future__ import annotations

import csv
import io
import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from typing import Iterable, Sequence

import numpy as np

from . import analytics as an
from .baselines import AlohaConfig, TdmaConfig, simulate_saloha, simulate_tdma
from .codebook import FrameParams, generate_codebook
from .protocol import Score, score, sfc_decode, sfc_transmit
from .stats import wilson_interval
from .traffic import TrafficParams, generate_events

SCHEMES = ("SFC", "TDMA", "SALOHA")
METRICS = ("efficiency", "error")

CSV_COLUMNS = (
    "scheme", "axis_name", "axis_value", "lambda", "k", "R", "N", "replications", "symbols",
    "overall_error", "overall_error_ci_lo", "overall_error_ci_hi", "p_detect", "p_quiet",
    "efficiency", "efficiency_ci_lo", "efficiency_ci_hi", "analytic_value", "analytic_lower",
    "analytic_upper", "seed",
)


@dataclass(frozen=True)
class ExperimentConfig:
    frame: FrameParams
    traffic: TrafficParams
    scheme: str
    replications: int = 1
    base_seed: int = 1
    warmup: int | None = None  # defaults to k - 1
    epsilon: float = 1e-9  # truncation mass for the analytic SFC error

    def __post_init__(self):
        if self.scheme not in SCHEMES:
            raise ValueError(f"unknown scheme {self.scheme!r}; choose from {SCHEMES}")
        if isinstance(self.replications, bool) or self.replications < 1:
            raise ValueError(f"replications must be >= 1, got {self.replications}")
        if self.base_seed < 0:
            raise ValueError(f"base seed must be non-negative, got {self.base_seed}")
        if self.traffic.N != self.frame.N or self.traffic.k != self.frame.k:
            raise ValueError("traffic and frame disagree on N or k")
        if self.symbols < 1:
            raise ValueError("horizon leaves no radio symbols to score after warm-up")

    @classmethod
    def build(cls, scheme: str, N: int, k: int, R: int, lam: float, symbols: int,
              replications: int = 1, seed: int = 1, mode: str = "renewal",
              epsilon: float = 1e-9) -> "ExperimentConfig":
        """Config whose replications each score exactly ``symbols`` radio symbols."""
        if symbols < 1:
            raise ValueError(f"symbols must be positive, got {symbols}")
        frame = FrameParams(N, k, R)
        traffic = TrafficParams(lam, symbols + 2 * k - 2, N, k, mode)
        return cls(frame, traffic, scheme, replications, seed, epsilon=epsilon)

    @property
    def warmup_(self) -> int:
        return self.frame.k - 1 if self.warmup is None else self.warmup

    @property
    def symbols(self) -> int:
        """Scored radio symbols per replication."""
        return self.traffic.horizon - self.frame.k - self.warmup_ + 1

    def analytic_params(self) -> an.AnalyticParams:
        f = self.frame
        return an.AnalyticParams(f.N, f.k, f.R, self.traffic.lam, truncation_mass=self.epsilon)


@dataclass(frozen=True)
class Estimate:
    value: float
    ci_lo: float
    ci_hi: float


@dataclass(frozen=True)
class MetricsReport:
    scheme: str
    config: ExperimentConfig
    score: Score
    false_alarm_rates: tuple[float, ...]  # one per replication
    analytic_metric: str
    analytic: an.BoundsPair
    analytic_value: float
    extras: dict = field(default_factory=dict, compare=False)

    @property
    def overall_error(self) -> Estimate:
        return Estimate(self.score.overall_error, *self.score.overall_error_ci())

    @property
    def p_detect(self) -> Estimate:
        return Estimate(self.score.p_detect, *self.score.p_detect_ci())

    @property
    def p_quiet(self) -> Estimate:
        return Estimate(self.score.p_quiet, *self.score.p_quiet_ci())

    @property
    def efficiency(self) -> Estimate:
        return Estimate(self.score.efficiency, *self.score.efficiency_ci())

    @property
    def false_alarm_rate(self) -> float:
        return self.score.false_alarm_rate

    def false_alarm_se(self) -> float:
        """Standard error of the false-alarm rate from the spread across replications.

        Phantom maps cluster in time and each replication draws a fresh
        codebook, so the binomial formula understates the spread badly.
        """
        x = np.asarray(self.false_alarm_rates)
        if x.size < 2:
            return math.inf
        return float(x.std(ddof=1) / math.sqrt(x.size))


def derive_seeds(base_seed: int, replication: int) -> tuple[int, int]:
    """(traffic seed, codebook seed) for one replication."""
    t, b = np.random.SeedSequence([base_seed, replication]).spawn(2)
    return int(t.generate_state(1, np.uint64)[0]), int(b.generate_state(1, np.uint64)[0])


def _replicate(frame: FrameParams, traffic: TrafficParams, schemes: Sequence[str], base_seed: int,
               r: int, warmup: int) -> dict[str, Score]:
    t_seed, b_seed = derive_seeds(base_seed, r)
    events = generate_events(traffic, t_seed)
    out = {}
    for s in schemes:
        if s == "SFC":
            book = generate_codebook(frame, b_seed)
            est = sfc_decode(sfc_transmit(events, book), book)
        elif s == "TDMA":
            est = simulate_tdma(events, TdmaConfig(frame))
        else:
            est = simulate_saloha(events, AlohaConfig(frame))
        out[s] = score(events, est, frame.k, warmup)
    return out


def _replicate_args(args):
    return _replicate(*args)


def analytic_reference(cfg: ExperimentConfig, metric: str = "efficiency") -> tuple[float, an.BoundsPair]:
    """Closed-form value and bracket for ``metric`` under cfg.

    Raises :class:`analytics.TruncationError` if the SFC error series cannot be
    certified.
    """
    if metric not in METRICS:
        raise ValueError(f"unknown metric {metric!r}; choose from {METRICS}")
    p = cfg.analytic_params()
    if metric == "efficiency":
        if cfg.scheme == "TDMA":
            v = an.tdma_efficiency(p)
        elif cfg.scheme == "SALOHA":
            v = an.saloha_efficiency(p)
        else:
            b = an.efficiency_closed_forms(p).F_sfc
            return 0.5 * (b.lower + b.upper), b
        return v, an.BoundsPair(v, v)
    if cfg.scheme == "TDMA":
        v = an.tdma_error_prob(p)
    elif cfg.scheme == "SALOHA":
        v = an.saloha_error_prob(p)
    else:
        res = an.sfc_error_prob(p)
        return res.value, an.BoundsPair(res.value, min(1.0, res.value + res.certificate))
    return v, an.BoundsPair(v, v)


def _run_group(cfgs: Sequence[ExperimentConfig], metric: str, workers: int) -> list[MetricsReport]:
    """Run configs that differ only in scheme on shared traffic."""
    c0 = cfgs[0]
    schemes = [c.scheme for c in cfgs]
    jobs = [(c0.frame, c0.traffic, schemes, c0.base_seed, r, c0.warmup_) for r in range(c0.replications)]
    if workers > 1 and len(jobs) > 1:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            per_rep = list(pool.map(_replicate_args, jobs))
    else:
        per_rep = [_replicate_args(j) for j in jobs]
    reports = []
    for cfg in cfgs:
        scores = [rep[cfg.scheme] for rep in per_rep]
        total = scores[0]
        for s in scores[1:]:
            total = total + s
        value, bounds = analytic_reference(cfg, metric)
        reports.append(MetricsReport(cfg.scheme, cfg, total, tuple(s.false_alarm_rate for s in scores),
                                     metric, bounds, value))
    return reports


def run_experiment(cfg: ExperimentConfig, *, metric: str = "efficiency", workers: int = 1) -> MetricsReport:
    """Simulate ``cfg.replications`` independent replications and merge their counts.

    Counts are summed in replication order, so the report does not depend on
    ``workers``.
    """
    return _run_group([cfg], metric, workers)[0]


def _group_key(c: ExperimentConfig):
    return (c.frame, c.traffic, c.replications, c.base_seed, c.warmup_, c.epsilon)


def run_sweep(points: Iterable[tuple[float, ExperimentConfig]], axis_name: str, *,
              metric: str = "efficiency", workers: int = 1) -> list[tuple[float, MetricsReport]]:
    """Run (axis value, config) points; configs sharing everything but the scheme
    share traffic.  Axis values must be finite and non-decreasing per scheme."""
    points = list(points)
    if not points:
        raise ValueError("empty sweep")
    last: dict[str, float] = {}
    for x, c in points:
        if not math.isfinite(x):
            raise ValueError(f"{axis_name} value {x} is not finite")
        if x < last.get(c.scheme, -math.inf):
            raise ValueError(f"{axis_name} values must be sorted for each scheme")
        last[c.scheme] = x
    groups: dict = {}
    for i, (x, c) in enumerate(points):
        groups.setdefault(_group_key(c), []).append(i)
    out: list = [None] * len(points)
    for idx in groups.values():
        reports = _run_group([points[i][1] for i in idx], metric, workers)
        for i, rep in zip(idx, reports):
            out[i] = (points[i][0], rep)
    return out


def report_row(axis_name: str, axis_value: float, rep: MetricsReport) -> dict:
    c = rep.config
    oe, ef = rep.overall_error, rep.efficiency
    return {
        "scheme": rep.scheme, "axis_name": axis_name, "axis_value": axis_value,
        "lambda": c.traffic.lam, "k": c.frame.k, "R": c.frame.R, "N": c.frame.N,
        "replications": c.replications, "symbols": rep.score.symbols,
        "overall_error": oe.value, "overall_error_ci_lo": oe.ci_lo, "overall_error_ci_hi": oe.ci_hi,
        "p_detect": rep.p_detect.value, "p_quiet": rep.p_quiet.value,
        "efficiency": ef.value, "efficiency_ci_lo": ef.ci_lo, "efficiency_ci_hi": ef.ci_hi,
        "analytic_value": rep.analytic_value, "analytic_lower": rep.analytic.lower,
        "analytic_upper": rep.analytic.upper, "seed": c.base_seed,
    }


def _fmt(v) -> str:
    if isinstance(v, (float, np.floating)):
        return repr(float(v))
    return str(v)


def results_csv(axis_name: str, results: Sequence[tuple[float, MetricsReport]]) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(CSV_COLUMNS)
    for x, rep in results:
        row = report_row(axis_name, x, rep)
        w.writerow([_fmt(row[c]) for c in CSV_COLUMNS])
    return buf.getvalue()


# ---------------------------------------------------------------------------
# Figure presets


@dataclass(frozen=True)
class FigurePreset:
    name: str
    title: str
    axis_name: str
    axis_label: str
    metric: str
    points: tuple[tuple[float, int, int, int, float], ...]  # (axis value, N, k, R, lam)


def _fig_presets() -> dict[str, FigurePreset]:
    Rs = range(7, 18)
    lams = (0.05, 0.1, 0.15, 0.2, 0.25, 0.32, 0.4, 0.5)
    fig4 = tuple((R, 64, 6, R, lam) for lam in (0.1, 0.32) for R in Rs)
    fig5 = tuple((lam, 64, 6, 11, lam) for lam in lams)
    fig6 = tuple((R, 6 * R, math.ceil(math.log2(6 * R)), R, 6 * R / 200) for R in Rs)
    fig7 = tuple((m, 11 * m, max(6, math.ceil(math.log2(11 * m))), 11, 11 * m / 200) for m in range(1, 7))
    fig8 = tuple((R, 64, 6, R, 0.2) for R in Rs)
    return {
        "fig4": FigurePreset("fig4", "Efficiency against R", "R", "number of energy slots R", "efficiency", fig4),
        "fig5": FigurePreset("fig5", "Efficiency against lambda", "lambda", "alarm rate lambda per subsymbol",
                             "efficiency", fig5),
        "fig6": FigurePreset("fig6", "Efficiency against R with N = 6R", "R", "number of energy slots R",
                             "efficiency", fig6),
        "fig7": FigurePreset("fig7", "Efficiency against N/R", "N/R", "sensors per energy slot N/R",
                             "efficiency", fig7),
        "fig8": FigurePreset("fig8", "Average error probability against R", "R", "number of energy slots R",
                             "error", fig8),
    }


FIGURES = _fig_presets()


def figure_configs(preset: FigurePreset, symbols: int, replications: int, seed: int,
                   mode: str = "renewal") -> list[tuple[float, ExperimentConfig]]:
    pts = []
    for x, N, k, R, lam in preset.points:
        for s in SCHEMES:
            pts.append((float(x), ExperimentConfig.build(s, N, k, R, lam, symbols, replications, seed, mode)))
    return pts


def run_figure(preset: FigurePreset, symbols: int = 10**5, replications: int = 10, seed: int = 1,
               workers: int = 1) -> str:
    curves: dict[float, list] = {}
    for x, c in figure_configs(preset, symbols, replications, seed):
        curves.setdefault(c.traffic.lam if preset.name == "fig4" else 0.0, []).append((x, c))
    results = []
    for pts in curves.values():
        results += run_sweep(pts, preset.axis_name, metric=preset.metric, workers=workers)
    return results_csv(preset.axis_name, results)


def plot_description() -> dict:
    """Axis labels and series roles: simulation as markers, analysis as lines."""
    out = {}
    for name, p in FIGURES.items():
        y = "efficiency" if p.metric == "efficiency" else "overall_error"
        y_label = "efficiency F" if p.metric == "efficiency" else "average error probability"
        series = []
        for s in SCHEMES:
            series.append({"name": f"{s} simulation", "scheme": s, "x": "axis_value", "y": y,
                           "role": "marker", "error_bars": [f"{y}_ci_lo", f"{y}_ci_hi"]})
            series.append({"name": f"{s} analysis", "scheme": s, "x": "axis_value", "y": "analytic_value",
                           "role": "line", "band": ["analytic_lower", "analytic_upper"]})
        out[name] = {"csv": f"{name}.csv", "title": p.title, "x_label": p.axis_label, "y_label": y_label,
                     "y_scale": "log" if p.metric == "error" else "linear",
                     "group_by": ["scheme", "lambda"] if name == "fig4" else ["scheme"],
                     "series": series}
    return out
