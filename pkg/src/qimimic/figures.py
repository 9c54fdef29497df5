"""Figure presets and CSV output.

Each preset reproduces the parameter set of one published plot at desk
scale: the run count is a parameter (500 by default instead of the
thousands used for the published curves). Every CSV starts with ``#``
comment lines giving the parameters, the seed and the package version, and
is accompanied by a JSON sidecar with the same information.
"""
from __future__ import annotations

import io
import json
import os
from dataclasses import dataclass
from typing import Callable, Dict, List, Optional, Sequence, Tuple

import numpy as np

from . import __version__
from .analytic import crossover_curve
from .mc import EnsembleCurve, ensemble_average, make_grid
from .model import Scenario, SystemParams, parse_protocol
from .photonstats import (
    ClickPattern,
    conditional_signal_pmf,
    poisson_pmf,
    thermal_pmf,
)

DEFAULT_RUNS = 500
DEFAULT_SEED = 20240101


def format_value(value) -> str:
    """Shortest round-trip text for floats; plain text otherwise."""
    if value is None:
        return ""
    if isinstance(value, (float, np.floating)):
        return repr(float(value))
    return str(value)


def csv_text(meta: Dict[str, object], columns: Sequence[str], rows: Sequence[Sequence]) -> str:
    buf = io.StringIO()
    buf.write(f"# qimimic {__version__}\n")
    for key, value in meta.items():
        buf.write(f"# {key} = {format_value(value)}\n")
    buf.write(",".join(columns) + "\n")
    for row in rows:
        buf.write(",".join(format_value(v) for v in row) + "\n")
    return buf.getvalue()


def write_csv(path: str, meta: Dict[str, object], columns: Sequence[str], rows) -> None:
    with open(path, "w", encoding="utf-8", newline="") as fh:
        fh.write(csv_text(meta, columns, rows))


def write_sidecar(path: str, meta: Dict[str, object]) -> None:
    payload = {"version": __version__}
    payload.update({k: (float(v) if isinstance(v, np.floating) else v) for k, v in meta.items()})
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(payload, fh, indent=2, sort_keys=True)
        fh.write("\n")


def curves_table(curves: Sequence[EnsembleCurve]) -> Tuple[List[str], List[list]]:
    grid = curves[0].pulse_index
    for c in curves[1:]:
        if not np.array_equal(c.pulse_index, grid):
            raise ValueError("curves are recorded on different grids")
    columns = ["pulse_index"] + [c.label for c in curves]
    rows = [[int(grid[i])] + [float(c.mean[i]) for c in curves] for i in range(grid.size)]
    return columns, rows


def params_meta(params: SystemParams) -> Dict[str, object]:
    return {
        "eta": params.eta,
        "kappa": params.kappa,
        "n_bar": params.n_bar,
        "n_bar_B": params.n_bar_B,
        "prior_present": params.prior_present,
    }


@dataclass(frozen=True)
class CurvePreset:
    """Posterior-versus-pulse figure."""

    name: str
    params: SystemParams
    protocols: Tuple[str, ...]
    pulses: int
    stride: int
    appear_at: Optional[int] = None
    description: str = ""

    def scenario(self) -> Scenario:
        if self.appear_at is None:
            return Scenario.present(self.params.kappa)
        return Scenario.appear_at(self.appear_at, self.params.kappa)


_FIG1 = dict(eta=0.9, kappa=0.1, n_bar_B=3.0)

CURVE_PRESETS: Dict[str, CurvePreset] = {
    "1a": CurvePreset(
        "1a", SystemParams(n_bar=0.5, **_FIG1), ("mimic", "fixed", "tmsv:1", "tmsv:2", "tmsv:4"),
        30_000, 100, description="object present, n_bar = 0.5",
    ),
    "1b": CurvePreset(
        "1b", SystemParams(n_bar=1.0, **_FIG1), ("mimic", "fixed", "tmsv:1", "tmsv:2", "tmsv:4"),
        30_000, 100, description="object present, n_bar = 1.0",
    ),
    "2a": CurvePreset(
        "2a", SystemParams(eta=0.9, kappa=1e-5, n_bar=1.0, n_bar_B=5.56e-6),
        ("mimic", "fixed", "tmsv:1"), 300_000, 1_000, description="low reflectance",
    ),
    "2b": CurvePreset(
        "2b", SystemParams(eta=0.9, kappa=1e-7, n_bar=1.0, n_bar_B=5.56e-8),
        ("mimic", "fixed", "tmsv:1"), 30_000_000, 100_000, description="very low reflectance",
    ),
    "3": CurvePreset(
        "3", SystemParams(n_bar=1.0, **_FIG1), ("mimic", "fixed", "tmsv:1"),
        30_000, 100, appear_at=10_000, description="object appears at pulse 10000",
    ),
    "4": CurvePreset(
        "4", SystemParams(eta=0.2, kappa=0.02, n_bar=20.0, n_bar_B=20.0),
        ("mimic", "fixed", "tmsv:1"), 100_000, 100, description="bright pulses, high background",
    ),
}

CROSSOVER_PRESETS: Dict[str, Tuple[float, float]] = {"5a": (0.9, 0.1), "5b": (0.5, 0.1)}
CROSSOVER_GRID = tuple(float(x) for x in np.geomspace(0.01, 30.0, 36))

FIGURE_NAMES = tuple(CURVE_PRESETS) + tuple(CROSSOVER_PRESETS) + ("d1", "d2")

ProgressFn = Callable[[str, int, int], None]


def run_curves(
    preset: CurvePreset,
    runs: int,
    seed: int,
    threads: Optional[int] = None,
    progress: Optional[ProgressFn] = None,
) -> List[EnsembleCurve]:
    grid = make_grid(preset.pulses, stride=preset.stride)
    curves = []
    for i, text in enumerate(preset.protocols):
        protocol = parse_protocol(text)
        cb = (lambda d, t, _n=protocol.name: progress(_n, d, t)) if progress else None
        # each protocol gets its own master seed so curves are independent
        curves.append(
            ensemble_average(
                protocol, preset.params, preset.scenario(), runs, preset.pulses,
                seed + i, grid=grid, threads=threads, progress=cb,
            )
        )
    return curves


def _pmf_rows(dists: Dict[str, np.ndarray], n_max: int) -> Tuple[List[str], List[list]]:
    columns = ["n"] + list(dists)
    rows = []
    for n in range(n_max + 1):
        rows.append([n] + [float(d[n]) if n < len(d) else 0.0 for d in dists.values()])
    return columns, rows


def photon_tables(name: str) -> List[Tuple[str, Dict[str, object], List[str], List[list]]]:
    """Photon-number tables: (suffix, meta, columns, rows) per panel."""
    out = []
    if name == "d1":
        eta = 0.9
        for panel, n_bar, n_max in (("a", 0.5, 10), ("b", 20.0, 80)):
            dists = {
                "average": thermal_pmf(n_bar).probs,
                "idler_no_click": conditional_signal_pmf(n_bar, eta, 1, ClickPattern(0, 1)).probs,
                "idler_click": conditional_signal_pmf(n_bar, eta, 1, ClickPattern(1, 1)).probs,
            }
            cols, rows = _pmf_rows(dists, n_max)
            out.append((panel, {"eta": eta, "n_bar": n_bar}, cols, rows))
    elif name == "d2":
        for panel, n_bar, amps, n_max in (("a", 0.5, (0.2, 0.7), 10), ("b", 20.0, (12.0, 28.0), 80)):
            dists = {"average": thermal_pmf(n_bar).probs}
            for a in amps:
                dists[f"coherent_{format_value(a)}"] = poisson_pmf(a).probs
            cols, rows = _pmf_rows(dists, n_max)
            out.append((panel, {"n_bar": n_bar, "intensities": " ".join(map(format_value, amps))}, cols, rows))
    else:
        raise KeyError(name)
    return out


def run_figure(
    name: str,
    outdir: str,
    runs: int = DEFAULT_RUNS,
    seed: int = DEFAULT_SEED,
    threads: Optional[int] = None,
    progress: Optional[ProgressFn] = None,
) -> List[str]:
    """Compute one figure and write its CSV files and sidecars; returns the CSV paths."""
    if name not in FIGURE_NAMES:
        raise KeyError(f"unknown figure {name!r} (choose from {', '.join(FIGURE_NAMES)})")
    os.makedirs(outdir, exist_ok=True)
    written = []

    def emit(stem: str, meta: Dict[str, object], columns, rows) -> None:
        path = os.path.join(outdir, f"{stem}.csv")
        write_csv(path, meta, columns, rows)
        write_sidecar(os.path.join(outdir, f"{stem}.json"), dict(meta, columns=list(columns)))
        written.append(path)

    if name in CURVE_PRESETS:
        preset = CURVE_PRESETS[name]
        curves = run_curves(preset, runs, seed, threads, progress)
        meta: Dict[str, object] = {"figure": name, "description": preset.description}
        meta.update(params_meta(preset.params))
        meta.update(
            {
                "scenario": "present" if preset.appear_at is None else f"appear_at {preset.appear_at}",
                "runs": runs,
                "pulses": preset.pulses,
                "stride": preset.stride,
                "seed": seed,
                "seed_per_protocol": "seed + position in protocol list",
                "protocols": " ".join(preset.protocols),
            }
        )
        columns, rows = curves_table(curves)
        emit(f"figure_{name}", meta, columns, rows)
    elif name in CROSSOVER_PRESETS:
        eta, kappa = CROSSOVER_PRESETS[name]
        table = crossover_curve(eta, kappa, CROSSOVER_GRID)
        rows = [[p.n_bar_B, p.n_min, p.status] for p in table]
        emit(f"figure_{name}", {"figure": name, "eta": eta, "kappa": kappa},
             ["n_bar_B", "n_min", "status"], rows)
    else:
        for panel, meta, columns, rows in photon_tables(name):
            emit(f"figure_{name}{panel}", dict({"figure": name + panel}, **meta), columns, rows)
    return written
