"""Command-line front end: maps, analyze, simulate, sweep, figures.

Exit status is 0 on success, 1 when parameters fail validation and 2 when a
truncated analytic series cannot be certified.
"""

from __future__ import annotations

import argparse
import csv
import io
import json
import math
import os
import sys
import tempfile
from pathlib import Path

from . import analytics as an
from . import montecarlo as mc
from .codebook import FrameParams, dumps, generate_codebook

DEFAULTS = {
    "n": 64, "k": 6, "r": 11, "lambda": 0.2, "scheme": "all", "symbols": 10**5,
    "replications": 10, "seed": 1, "epsilon": 1e-9, "out": None, "traffic": "renewal",
    "workers": 1, "axis": "R", "values": None, "metric": "efficiency",
}
TYPES = {"n": int, "k": int, "r": int, "lambda": float, "scheme": str, "symbols": int,
         "replications": int, "seed": int, "epsilon": float, "out": str, "traffic": str,
         "workers": int, "axis": str, "values": str, "metric": str}
ANALYZE_COLUMNS = ("scheme", "metric", "lambda", "k", "R", "N", "value", "lower", "upper", "certificate")
SWEEP_AXES = ("R", "lambda", "N", "k")


class UsageError(ValueError):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise UsageError(message)


def _add_common(p: argparse.ArgumentParser, names):
    help_ = {
        "n": "number of sensors N", "k": "subsymbols per radio symbol", "r": "energy slots per subsymbol",
        "lambda": "mean alarms per subsymbol over all sensors", "scheme": "SFC, TDMA, SALOHA or all",
        "symbols": "scored radio symbols per replication", "replications": "independent replications",
        "seed": "base seed", "epsilon": "truncation mass for the analytic SFC error",
        "out": "output file (directory for figures)", "traffic": "renewal or poisson",
        "workers": "worker processes for replications", "axis": f"sweep axis, one of {SWEEP_AXES}",
        "values": "comma-separated sweep values",
        "metric": "analytic reference column: efficiency or error",
    }
    for name in names:
        p.add_argument(f"--{name}", dest=name, type=TYPES[name], default=None, help=help_[name])
    p.add_argument("--config", default=None, help="key = value file; flags override it")


def build_parser() -> argparse.ArgumentParser:
    p = _Parser(prog="sfcsim", description="Simulate and analyse SFC, TDMA and slotted ALOHA.")
    sub = p.add_subparsers(dest="command", required=True, parser_class=_Parser)
    _add_common(sub.add_parser("maps", help="generate and print a codebook"), ["n", "k", "r", "seed", "out"])
    _add_common(sub.add_parser("analyze", help="evaluate the closed forms"),
                ["n", "k", "r", "lambda", "scheme", "epsilon", "out"])
    run = ["n", "k", "r", "lambda", "scheme", "symbols", "replications", "seed", "epsilon", "out",
           "traffic", "workers", "metric"]
    _add_common(sub.add_parser("simulate", help="run one experiment"), run)
    _add_common(sub.add_parser("sweep", help="sweep one parameter"), run + ["axis", "values"])
    _add_common(sub.add_parser("figures", help="run the five figure presets"),
                ["symbols", "replications", "seed", "out", "workers"])
    return p


def read_config(path: str) -> dict:
    """Flat ``key = value`` lines; ``#`` starts a comment; keys are flag names."""
    out = {}
    for no, line in enumerate(Path(path).read_text().splitlines(), 1):
        line = line.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise UsageError(f"{path}:{no}: expected key = value")
        key, val = (s.strip() for s in line.split("=", 1))
        key = key.lstrip("-")
        if key not in TYPES:
            raise UsageError(f"{path}:{no}: unknown key {key!r}")
        try:
            out[key] = TYPES[key](val)
        except ValueError:
            raise UsageError(f"{path}:{no}: bad value {val!r} for {key}") from None
    return out


def resolve(args: argparse.Namespace) -> dict:
    """Defaults, then the config file, then explicit flags."""
    opts = dict(DEFAULTS)
    if args.config:
        opts.update(read_config(args.config))
    opts.update({k: v for k, v in vars(args).items() if k in TYPES and v is not None})
    if opts["epsilon"] is not None and not 0 < opts["epsilon"] <= 1e-3:
        raise UsageError("epsilon must lie in (0, 1e-3]")
    if opts["workers"] < 1:
        raise UsageError("workers must be at least 1")
    return opts


def _schemes(opt: str) -> list[str]:
    s = opt.upper()
    if s == "ALL":
        return list(mc.SCHEMES)
    if s not in mc.SCHEMES:
        raise UsageError(f"unknown scheme {opt!r}; choose from {mc.SCHEMES} or all")
    return [s]


def _emit(text: str, out: str | None) -> None:
    if out is None:
        sys.stdout.write(text)
    else:
        _atomic_write(Path(out), text)


def _atomic_write(path: Path, text: str) -> None:
    path.parent.mkdir(parents=True, exist_ok=True)
    fd, tmp = tempfile.mkstemp(dir=path.parent, prefix=f".{path.name}.")
    try:
        with os.fdopen(fd, "w", newline="") as f:
            f.write(text)
        os.replace(tmp, path)
    except BaseException:
        os.unlink(tmp)
        raise


def cmd_maps(o: dict) -> str:
    return dumps(generate_codebook(FrameParams(o["n"], o["k"], o["r"]), o["seed"]))


def cmd_analyze(o: dict) -> str:
    p = an.AnalyticParams(o["n"], o["k"], o["r"], o["lambda"], truncation_mass=o["epsilon"])
    rows = []
    for s in _schemes(o["scheme"]):
        if s == "TDMA":
            f, e = an.tdma_efficiency(p), an.tdma_error_prob(p)
            rows += [(s, "efficiency", f, f, f, 0.0), (s, "error", e, e, e, 0.0)]
        elif s == "SALOHA":
            f, e = an.saloha_efficiency(p), an.saloha_error_prob(p)
            rows += [(s, "efficiency", f, f, f, 0.0), (s, "error", e, e, e, 0.0)]
        else:
            eff = an.efficiency_closed_forms(p)
            fa = eff.sfc_false_alarm
            err = an.sfc_error_prob(p)
            rows += [
                (s, "efficiency", 0.5 * (eff.F_sfc.lower + eff.F_sfc.upper), eff.F_sfc.lower, eff.F_sfc.upper, 0.0),
                (s, "false_alarm", 0.5 * (fa.lower + fa.upper), fa.lower, fa.upper, 0.0),
                (s, "error", err.value, err.value, min(1.0, err.value + err.certificate), err.certificate),
            ]
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(ANALYZE_COLUMNS)
    for s, metric, v, lo, hi, cert in rows:
        w.writerow([s, metric, repr(float(p.lam)), p.k, p.R, p.N, *(repr(float(x)) for x in (v, lo, hi, cert))])
    return buf.getvalue()


def _config(o: dict, scheme: str, **over) -> mc.ExperimentConfig:
    v = {**o, **over}
    return mc.ExperimentConfig.build(scheme, v["n"], v["k"], v["r"], v["lambda"], v["symbols"],
                                     v["replications"], v["seed"], v["traffic"], v["epsilon"])


def cmd_simulate(o: dict) -> str:
    pts = [(o["lambda"], _config(o, s)) for s in _schemes(o["scheme"])]
    return mc.results_csv("lambda", mc.run_sweep(pts, "lambda", metric=o["metric"], workers=o["workers"]))


def cmd_sweep(o: dict) -> str:
    axis = o["axis"]
    if axis not in SWEEP_AXES:
        raise UsageError(f"axis must be one of {SWEEP_AXES}, got {axis!r}")
    if not o["values"]:
        raise UsageError("sweep needs --values")
    conv = float if axis == "lambda" else int
    try:
        values = [conv(x) for x in o["values"].split(",") if x.strip()]
    except ValueError:
        raise UsageError(f"bad --values {o['values']!r}") from None
    if any(not math.isfinite(x) for x in values) or values != sorted(values):
        raise UsageError("sweep values must be finite and sorted")
    key = {"R": "r", "lambda": "lambda", "N": "n", "k": "k"}[axis]
    pts = [(float(x), _config(o, s, **{key: x})) for x in values for s in _schemes(o["scheme"])]
    return mc.results_csv(axis, mc.run_sweep(pts, axis, metric=o["metric"], workers=o["workers"]))


def cmd_figures(o: dict) -> int:
    if o["out"] is None:
        raise UsageError("figures needs --out DIR")
    out = Path(o["out"])
    if out.exists() and not out.is_dir():
        raise UsageError(f"{out} exists and is not a directory")
    for name, preset in mc.FIGURES.items():  # validate every config before running anything
        mc.figure_configs(preset, o["symbols"], o["replications"], o["seed"])
    texts = {f"{name}.csv": mc.run_figure(preset, o["symbols"], o["replications"], o["seed"], o["workers"])
             for name, preset in mc.FIGURES.items()}
    texts["plots.json"] = json.dumps(mc.plot_description(), indent=2, sort_keys=True) + "\n"
    for fname, text in texts.items():
        _atomic_write(out / fname, text)
    return 0


COMMANDS = {"maps": cmd_maps, "analyze": cmd_analyze, "simulate": cmd_simulate, "sweep": cmd_sweep}


def main(argv=None) -> int:
    try:
        args = build_parser().parse_args(argv)
        o = resolve(args)
        if args.command == "figures":
            return cmd_figures(o)
        text = COMMANDS[args.command](o)
        _emit(text, o["out"])
        return 0
    except an.TruncationError as e:
        print(f"sfcsim: numeric certificate failed: {e}", file=sys.stderr)
        return 2
    except (ValueError, OSError) as e:
        print(f"sfcsim: {e}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
