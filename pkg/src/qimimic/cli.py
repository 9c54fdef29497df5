"""Command-line front end: ``qimimic simulate | analytic | figure | stats``.

Exit codes: 0 on success, 1 for usage errors (bad flags, bad config,
invalid parameters), 2 for runtime or numerical failures (including
unwritable output paths).
"""
from __future__ import annotations

import argparse
import sys
import time
from dataclasses import dataclass
from typing import Dict, Optional, Sequence, TextIO

import numpy as np

from . import __version__
from .analytic import NoCrossingError, crossover_curve, p_dm_average, p_rc_average
from .detection import effective_background
from .figures import (
    DEFAULT_RUNS,
    DEFAULT_SEED,
    FIGURE_NAMES,
    csv_text,
    curves_table,
    params_meta,
    run_figure,
)
from .mc import THREADS_ENV, default_threads, ensemble_average, make_grid, shots_to_confidence
from .model import ParameterError, Scenario, SystemParams, parse_protocol
from .photonstats import (
    ClickPattern,
    conditional_signal_pmf,
    g2_zero,
    poisson_pmf,
    thermal_pmf,
)

EXIT_OK, EXIT_USAGE, EXIT_RUNTIME = 0, 1, 2
PROGRESS_INTERVAL = 5.0  # seconds between progress lines


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message: str):  # argparse would exit with 2
        self.print_usage(sys.stderr)
        raise UsageError(message)


def read_config(path: str) -> Dict[str, str]:
    """Parse a ``key = value`` file; ``#`` starts a comment."""
    try:
        with open(path, encoding="utf-8") as fh:
            lines = fh.read().splitlines()
    except OSError as exc:
        raise UsageError(f"cannot read config {path}: {exc.strerror}") from None
    values: Dict[str, str] = {}
    for lineno, raw in enumerate(lines, start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        key, sep, value = line.partition("=")
        if not sep or not key.strip():
            raise UsageError(f"{path}:{lineno}: expected key = value")
        values[key.strip().replace("-", "_")] = value.strip()
    return values


class _Progress:
    """Writes a status line to stderr at most every PROGRESS_INTERVAL seconds."""

    def __init__(self, stream: TextIO, quiet: bool):
        self.stream = stream
        self.quiet = quiet
        self.last = time.monotonic()

    def __call__(self, label: str, done: int, total: int) -> None:
        now = time.monotonic()
        if self.quiet or (now - self.last < PROGRESS_INTERVAL and done < total):
            return
        self.last = now
        self.stream.write(f"[{label}] {done}/{total} runs\n")
        self.stream.flush()


# --- simulate ---------------------------------------------------------------

_SIM_DEFAULTS = {
    "protocol": "mimic,fixed,tmsv:1",
    "eta": "0.9",
    "kappa": "0.1",
    "nbar": "1.0",
    "nbarb": "3.0",
    "dark_prob": "0.0",
    "prior": "0.5",
    "runs": str(DEFAULT_RUNS),
    "pulses": "30000",
    "stride": "",
    "points": "100",
    "seed": str(DEFAULT_SEED),
    "appear_at": "",
    "absent": "false",
    "out": "",
}


@dataclass(frozen=True)
class RunConfig:
    protocols: tuple
    params: SystemParams
    stray_background: float
    dark_prob: float
    scenario: Scenario
    scenario_text: str
    runs: int
    pulses: int
    stride: Optional[int]
    points: int
    master_seed: int
    out: Optional[str]


def _parse_bool(key: str, text: str) -> bool:
    t = text.strip().lower()
    if t in ("1", "true", "yes", "on"):
        return True
    if t in ("0", "false", "no", "off", ""):
        return False
    raise UsageError(f"{key}: expected a boolean (got {text!r})")


def _num(key: str, text: str, kind=float):
    try:
        return kind(text)
    except ValueError:
        raise UsageError(f"{key}: expected {kind.__name__} (got {text!r})") from None


def build_run_config(values: Dict[str, str]) -> RunConfig:
    unknown = set(values) - set(_SIM_DEFAULTS)
    if unknown:
        raise UsageError(f"unknown config keys: {', '.join(sorted(unknown))}")
    v = dict(_SIM_DEFAULTS, **values)
    try:
        protocols = tuple(parse_protocol(p) for p in v["protocol"].split(",") if p.strip())
        if not protocols:
            raise UsageError("no protocol given")
        eta = _num("eta", v["eta"])
        stray = _num("nbarb", v["nbarb"])
        dark = _num("dark-prob", v["dark_prob"])
        try:
            n_bar_B = effective_background(stray, dark, eta)
        except ValueError as exc:
            raise ParameterError(str(exc)) from None
        params = SystemParams(
            eta=eta, kappa=_num("kappa", v["kappa"]), n_bar=_num("nbar", v["nbar"]),
            n_bar_B=n_bar_B, prior_present=_num("prior", v["prior"]),
        )
        absent = _parse_bool("absent", v["absent"])
        appear = _num("appear-at", v["appear_at"], int) if v["appear_at"] else None
        if absent and appear is not None:
            raise UsageError("--absent and --appear-at are mutually exclusive")
        if absent:
            scenario, text = Scenario.absent(), "absent"
        elif appear is not None:
            if appear < 1:
                raise UsageError("--appear-at must be >= 1")
            scenario, text = Scenario.appear_at(appear, params.kappa), f"appear_at {appear}"
        else:
            scenario, text = Scenario.present(params.kappa), "present"
        runs = _num("runs", v["runs"], int)
        pulses = _num("pulses", v["pulses"], int)
        stride = _num("stride", v["stride"], int) if v["stride"] else None
        points = _num("points", v["points"], int)
        if runs < 1 or pulses < 1 or points < 1 or (stride is not None and stride < 1):
            raise UsageError("runs, pulses, points and stride must be >= 1")
    except ParameterError as exc:
        raise UsageError(str(exc)) from None
    return RunConfig(
        protocols, params, stray, dark, scenario, text, runs, pulses, stride, points,
        _num("seed", v["seed"], int), v["out"] or None,
    )


def cmd_simulate(args, out: TextIO, err: TextIO) -> int:
    values = read_config(args.config) if args.config else {}
    for key in _SIM_DEFAULTS:
        flag = getattr(args, key, None)
        if flag is not None and flag is not False:
            values[key] = "true" if flag is True else str(flag)
    cfg = build_run_config(values)
    threads = args.threads if args.threads is not None else default_threads()
    if threads < 1:
        raise UsageError("--threads must be >= 1")
    grid = make_grid(cfg.pulses, cfg.stride, cfg.points)
    progress = _Progress(err, args.quiet)
    curves = []
    for i, protocol in enumerate(cfg.protocols):
        curves.append(
            ensemble_average(
                protocol, cfg.params, cfg.scenario, cfg.runs, cfg.pulses, cfg.master_seed + i,
                grid=grid, threads=threads,
                progress=lambda d, t, _n=protocol.name: progress(_n, d, t),
            )
        )
    meta: Dict[str, object] = {"command": "simulate"}
    meta.update(params_meta(cfg.params))
    meta.update(
        {
            "stray_background": cfg.stray_background,
            "dark_prob": cfg.dark_prob,
            "scenario": cfg.scenario_text,
            "runs": cfg.runs,
            "pulses": cfg.pulses,
            "stride": cfg.stride if cfg.stride else f"{cfg.points} points",
            "seed": cfg.master_seed,
            "seed_per_protocol": "seed + position in protocol list",
        }
    )
    columns, rows = curves_table(curves)
    text = csv_text(meta, columns, rows)
    summary = out
    if cfg.out:
        try:
            with open(cfg.out, "w", encoding="utf-8", newline="") as fh:
                fh.write(text)
        except OSError as exc:
            err.write(f"error: cannot write {cfg.out}: {exc.strerror}\n")
            return EXIT_RUNTIME
    else:
        out.write(text)
        summary = err
    for c in curves:
        se = c.stderr[-1]
        reach = shots_to_confidence(c, 0.8)
        summary.write(
            f"{c.label}: final mean posterior {c.mean[-1]:.4f}"
            + ("" if np.isnan(se) else f" +- {se:.4f}")
            + f"; first >= 0.8 at {reach if reach is not None else 'not reached'}\n"
        )
    return EXIT_OK


# --- analytic ----------------------------------------------------------------


def _params_from(args, n_bar: float) -> SystemParams:
    try:
        n_bar_B = effective_background(args.nbarb, args.dark_prob, args.eta)
        return SystemParams(eta=args.eta, kappa=args.kappa, n_bar=n_bar, n_bar_B=n_bar_B)
    except ValueError as exc:
        raise UsageError(str(exc)) from None


def cmd_analytic(args, out: TextIO, err: TextIO) -> int:
    meta = {"command": f"analytic {args.mode}", "eta": args.eta, "kappa": args.kappa,
            "dark_prob": args.dark_prob}
    if args.mode == "point":
        nbars = args.nbar or [1.0]
        rows = []
        for n in nbars:
            p = _params_from(args, n)
            if p.kappa <= 0:
                raise UsageError("kappa must be > 0 for the analytic averages")
            rows.append([p.n_bar_B, n, p_rc_average(p), p_dm_average(p)])
        out.write(csv_text(meta, ["n_bar_B", "n_bar", "P_RC", "P_DM"], rows))
        return EXIT_OK
    grid = args.nbarb_grid or [args.nbarb]
    bgs = [_params_from(argparse.Namespace(**dict(vars(args), nbarb=g)), 1.0).n_bar_B for g in grid]
    if args.kappa <= 0:
        raise UsageError("kappa must be > 0 for the crossover")
    try:
        table = crossover_curve(args.eta, args.kappa, bgs, (args.nbar_lo, args.nbar_hi))
    except NoCrossingError as exc:  # pragma: no cover - crossover_curve marks these
        err.write(f"error: {exc}\n")
        return EXIT_RUNTIME
    rows = [[pt.n_bar_B, pt.n_min, pt.status] for pt in table]
    out.write(csv_text(meta, ["n_bar_B", "n_min", "status"], rows))
    return EXIT_OK


# --- figure / stats -----------------------------------------------------------


def cmd_figure(args, out: TextIO, err: TextIO) -> int:
    if args.name not in FIGURE_NAMES:
        raise UsageError(f"unknown figure {args.name!r} (choose from {', '.join(FIGURE_NAMES)})")
    if args.runs < 1:
        raise UsageError("--runs must be >= 1")
    threads = args.threads if args.threads is not None else default_threads()
    try:
        paths = run_figure(
            args.name, args.outdir, runs=args.runs, seed=args.seed, threads=threads,
            progress=_Progress(err, args.quiet),
        )
    except OSError as exc:
        err.write(f"error: cannot write to {args.outdir}: {exc.strerror}\n")
        return EXIT_RUNTIME
    for p in paths:
        out.write(p + "\n")
    return EXIT_OK


def cmd_stats(args, out: TextIO, err: TextIO) -> int:
    if args.nbar <= 0:
        raise UsageError("--nbar must be > 0")
    if not 0 < args.eta <= 1:
        raise UsageError("--eta must be in (0, 1]")
    dists = {"thermal": thermal_pmf(args.nbar)}
    for a in args.coherent or []:
        if a < 0:
            raise UsageError("--coherent intensities must be >= 0")
        dists[f"coherent_{a!r}"] = poisson_pmf(a)
    N = args.idler_detectors
    if not 1 <= N <= 16:
        raise UsageError("--idler-detectors must be in 1..16")
    for k in range(N + 1):
        pattern = ClickPattern((1 << k) - 1, N)
        dists[f"idler_{k}_of_{N}"] = conditional_signal_pmf(args.nbar, args.eta, N, pattern)
    n_max = args.nmax
    rows = [[n] + [float(d.probs[n]) if n < len(d.probs) else 0.0 for d in dists.values()]
            for n in range(n_max + 1)]
    meta = {"command": "stats", "n_bar": args.nbar, "eta": args.eta}
    for name, d in dists.items():
        meta[f"g2[{name}]"] = g2_zero(d) if d.mean() > 0 else None
    out.write(csv_text(meta, ["n"] + list(dists), rows))
    return EXIT_OK


# --- parser -------------------------------------------------------------------


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="qimimic", description="Mimic-protocol object detection simulator.")
    parser.add_argument("--version", action="version", version=f"qimimic {__version__}")
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    sim = sub.add_parser("simulate", help="ensemble-averaged posterior curves as CSV")
    sim.add_argument("--config", help="key = value file; flags override its values")
    sim.add_argument("--protocol", help="comma list of mimic, fixed, tmsv:N")
    for flag in ("eta", "kappa", "nbar", "nbarb", "dark-prob", "prior"):
        sim.add_argument(f"--{flag}", type=float)
    for flag in ("runs", "pulses", "stride", "points", "seed", "appear-at"):
        sim.add_argument(f"--{flag}", type=int)
    sim.add_argument("--absent", action="store_true", help="object never present")
    sim.add_argument("--out", help="CSV path (default: standard output)")
    sim.set_defaults(func=cmd_simulate)

    ana = sub.add_parser("analytic", help="single-pulse averages and crossover tables")
    ana.add_argument("mode", choices=("point", "crossover"))
    ana.add_argument("--eta", type=float, required=True)
    ana.add_argument("--kappa", type=float, required=True)
    ana.add_argument("--nbarb", type=float, default=3.0)
    ana.add_argument("--nbarb-grid", type=float, nargs="+", help="background values (crossover)")
    ana.add_argument("--dark-prob", type=float, default=0.0)
    ana.add_argument("--nbar", type=float, nargs="+", help="mean photon numbers (point)")
    ana.add_argument("--nbar-lo", type=float, default=1e-2)
    ana.add_argument("--nbar-hi", type=float, default=1e2)
    ana.set_defaults(func=cmd_analytic)

    fig = sub.add_parser("figure", help="reproduce a figure's data at desk scale")
    fig.add_argument("name", help=", ".join(FIGURE_NAMES))
    fig.add_argument("--runs", type=int, default=DEFAULT_RUNS)
    fig.add_argument("--seed", type=int, default=DEFAULT_SEED)
    fig.add_argument("--outdir", default=".")
    fig.set_defaults(func=cmd_figure)

    st = sub.add_parser("stats", help="photon-number distributions and g2(0)")
    st.add_argument("--nbar", type=float, default=0.5)
    st.add_argument("--eta", type=float, default=0.9)
    st.add_argument("--idler-detectors", type=int, default=1)
    st.add_argument("--coherent", type=float, nargs="*", help="Poisson intensities to tabulate")
    st.add_argument("--nmax", type=int, default=20)
    st.set_defaults(func=cmd_stats)

    for p in (sim, fig):
        p.add_argument("--threads", type=int, help=f"worker threads (default ${THREADS_ENV} or CPU count)")
        p.add_argument("--quiet", action="store_true", help="no progress lines on stderr")
    return parser


def main(argv: Optional[Sequence[str]] = None, out: TextIO = None, err: TextIO = None) -> int:
    out = sys.stdout if out is None else out
    err = sys.stderr if err is None else err
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
        return args.func(args, out, err)
    except UsageError as exc:
        err.write(f"error: {exc}\n")
        return EXIT_USAGE
    except ParameterError as exc:
        err.write(f"error: {exc}\n")
        return EXIT_USAGE
    except (ArithmeticError, RuntimeError, ValueError) as exc:
        err.write(f"error: {exc}\n")
        return EXIT_RUNTIME


if __name__ == "__main__":
    sys.exit(main())
