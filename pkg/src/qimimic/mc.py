"""Monte Carlo posterior traces and ensemble averages.

Each run owns a random stream derived from ``(master_seed, run_index)`` by
``numpy.random.SeedSequence`` spawn keys feeding a Philox generator, so a
run's trace depends only on those two numbers. Ensembles are accumulated in
fixed blocks of runs whose partial statistics are merged in block order,
which makes the result independent of how many threads did the work.

Pulses are processed in chunks: the random draws and log-likelihood ratio
increments of a chunk are vectorized, then a small compiled loop applies
the clamped cumulative sum and picks out the recorded pulse indices.
"""
from __future__ import annotations

import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from typing import Callable, List, Optional, Tuple, Union

import numpy as np
from numba import njit

from .bayes import (
    LOG_ODDS_CLAMP,
    PosteriorState,
    coherent_llr,
    log_odds_to_probability,
    tmsv_llr_table,
)
from .detection import ChannelConstants, tmsv_signal_probabilities
from .model import (
    FixedCoherent,
    Protocol,
    RandomCoherent,
    Scenario,
    SystemParams,
    TmsvDirect,
    validate_params,
)
from .photonstats import click_count_distribution, sample_mimic_intensity

THREADS_ENV = "QIMIMIC_THREADS"
CHUNK = 1 << 16
RUN_BLOCK = 32
DEFAULT_POINTS = 100


def default_threads() -> int:
    """Worker count from ``QIMIMIC_THREADS``, else the CPU count."""
    raw = os.environ.get(THREADS_ENV, "").strip()
    if raw:
        try:
            n = int(raw)
        except ValueError:
            raise ValueError(f"{THREADS_ENV} must be a positive integer (got {raw!r})") from None
        if n < 1:
            raise ValueError(f"{THREADS_ENV} must be a positive integer (got {raw!r})")
        return n
    return os.cpu_count() or 1


@dataclass(frozen=True)
class RunSeed:
    """Identifier of one run's random stream."""

    master_seed: int
    run_index: int = 0

    def generator(self) -> np.random.Generator:
        ss = np.random.SeedSequence(self.master_seed, spawn_key=(self.run_index,))
        return np.random.Generator(np.random.Philox(ss))


def make_grid(
    pulses: int, stride: Optional[int] = None, points: int = DEFAULT_POINTS, log_spaced: bool = False
) -> np.ndarray:
    """Pulse indices (1-based) at which the posterior is recorded.

    ``stride`` records every ``stride``-th pulse; otherwise about ``points``
    indices, evenly or log spaced. The final pulse is always included.
    """
    if pulses < 1:
        raise ValueError(f"pulses must be >= 1 (got {pulses})")
    if stride is not None:
        if stride < 1:
            raise ValueError(f"stride must be >= 1 (got {stride})")
        grid = np.arange(stride, pulses + 1, stride, dtype=np.int64)
    else:
        if points < 1:
            raise ValueError(f"points must be >= 1 (got {points})")
        if log_spaced:
            grid = np.unique(np.rint(np.geomspace(1, pulses, points)).astype(np.int64))
        else:
            grid = np.unique(np.rint(np.linspace(pulses / points, pulses, points)).astype(np.int64))
            grid = grid[grid >= 1]
    if grid.size == 0 or grid[-1] != pulses:
        grid = np.append(grid, np.int64(pulses))
    return grid


@njit(cache=True, nogil=True)
def _clamped_scan(log_odds, inc, record_at, out, out_pos, clamp):
    """Cumulative sum with clamping; stores values at the local offsets ``record_at``."""
    j = 0
    n_rec = record_at.shape[0]
    for i in range(inc.shape[0]):
        v = inc[i]
        if v == v:  # skip NaN (impossible outcome under both hypotheses)
            log_odds += v
            if log_odds > clamp:
                log_odds = clamp
            elif log_odds < -clamp:
                log_odds = -clamp
        while j < n_rec and record_at[j] == i:
            out[out_pos + j] = log_odds
            j += 1
    return log_odds


@dataclass(frozen=True)
class TrajectoryRecord:
    pulse_index: np.ndarray
    posteriors: np.ndarray
    seed: RunSeed
    final_log_odds: float


class _Sampler:
    """Draws one protocol's pulses and turns them into log-odds increments."""

    def __init__(self, protocol: Protocol, params: SystemParams):
        self.protocol = protocol
        self.params = params
        self.zm1 = params.eta * params.n_bar_B
        self.Z = 1.0 + self.zm1
        if isinstance(protocol, TmsvDirect):
            N = protocol.num_idler_detectors
            cdf = np.cumsum(click_count_distribution(params.n_bar, params.eta, N))
            cdf[-1] = 1.0
            self.cdf = cdf
            self.llr_no, self.llr_click = tmsv_llr_table(params, N)
            self._truth_cache: dict = {}
        elif isinstance(protocol, FixedCoherent):
            self.llr_fixed = (
                float(coherent_llr(params, params.n_bar, False)),
                float(coherent_llr(params, params.n_bar, True)),
            )
        elif not isinstance(protocol, RandomCoherent):
            raise TypeError(f"unknown protocol {protocol!r}")

    def _truth_click_coherent(self, kappa: float, lam):
        g = ChannelConstants.from_values(self.params.eta, kappa, self.params.n_bar_B).gamma
        return (self.zm1 - np.expm1(-g * lam)) / self.Z

    def _truth_click_tmsv(self, kappa: float) -> np.ndarray:
        table = self._truth_cache.get(kappa)
        if table is None:
            N = self.protocol.num_idler_detectors
            table = np.array(
                [tmsv_signal_probabilities(self.params, N, k, kappa=kappa).click for k in range(N + 1)]
            )
            self._truth_cache[kappa] = table
        return table

    def increments(self, rng: np.random.Generator, m: int, kappa: float) -> np.ndarray:
        if isinstance(self.protocol, RandomCoherent):
            lam = sample_mimic_intensity(self.params.n_bar, rng, m)
            click = rng.random(m) < self._truth_click_coherent(kappa, lam)
            return coherent_llr(self.params, lam, click)
        if isinstance(self.protocol, FixedCoherent):
            p = float(self._truth_click_coherent(kappa, self.params.n_bar))
            click = rng.random(m) < p
            return np.where(click, self.llr_fixed[1], self.llr_fixed[0])
        # which detectors fired does not matter by symmetry; only the count is drawn
        k = np.searchsorted(self.cdf, rng.random(m), side="right")
        click = rng.random(m) < self._truth_click_tmsv(kappa)[k]
        return np.where(click, self.llr_click[k], self.llr_no[k])


def _as_run_seed(run_seed) -> RunSeed:
    if isinstance(run_seed, RunSeed):
        return run_seed
    if isinstance(run_seed, (int, np.integer)) and not isinstance(run_seed, bool):
        return RunSeed(int(run_seed), 0)
    if isinstance(run_seed, tuple) and len(run_seed) == 2:
        return RunSeed(int(run_seed[0]), int(run_seed[1]))
    raise TypeError("run_seed must be a RunSeed, an int or a (master_seed, run_index) pair")


def _trace_log_odds(
    sampler: _Sampler, scenario: Scenario, seed: RunSeed, pulses: int, grid: np.ndarray
) -> Tuple[np.ndarray, float]:
    rng = seed.generator()
    out = np.empty(grid.size)
    L = PosteriorState.from_prior(sampler.params.prior_present).log_odds
    pos = 0
    for first in range(1, pulses + 1, CHUNK):
        stop = min(first + CHUNK, pulses + 1)
        for lo, hi, kappa in scenario.pieces(first, stop):
            inc = sampler.increments(rng, hi - lo, kappa)
            a, b = np.searchsorted(grid, [lo, hi])
            record_at = (grid[a:b] - lo).astype(np.int64)
            L = _clamped_scan(L, inc.astype(np.float64), record_at, out, pos, LOG_ODDS_CLAMP)
            pos += b - a
    return out, L


def simulate_trajectory(
    protocol: Protocol,
    params: SystemParams,
    scenario: Scenario,
    run_seed: Union[RunSeed, int, Tuple[int, int]],
    pulses: int,
    stride: Optional[int] = None,
    points: int = DEFAULT_POINTS,
    log_spaced: bool = False,
    grid: Optional[np.ndarray] = None,
) -> TrajectoryRecord:
    """One run of the experiment: the posterior after each recorded pulse.

    The truth model uses the scenario's reflectance at each pulse; the
    receiver's likelihoods always use ``params.kappa``.
    """
    validate_params(params)
    seed = _as_run_seed(run_seed)
    if grid is None:
        grid = make_grid(pulses, stride, points, log_spaced)
    grid = _check_grid(grid, pulses)
    log_odds, final = _trace_log_odds(_Sampler(protocol, params), scenario, seed, pulses, grid)
    return TrajectoryRecord(grid, log_odds_to_probability(log_odds), seed, final)


def _check_grid(grid, pulses: int) -> np.ndarray:
    grid = np.asarray(grid, dtype=np.int64)
    if grid.ndim != 1 or grid.size == 0:
        raise ValueError("grid must be a non-empty 1-D sequence of pulse indices")
    if np.any(np.diff(grid) <= 0) or grid[0] < 1 or grid[-1] > pulses:
        raise ValueError("grid must be strictly increasing within 1..pulses")
    return grid


@dataclass(frozen=True)
class EnsembleCurve:
    pulse_index: np.ndarray
    mean: np.ndarray
    runs: int
    variance: Optional[np.ndarray] = None  # sample variance across runs (ddof=1)
    label: str = ""

    @property
    def stderr(self) -> np.ndarray:
        if self.variance is None or self.runs < 2:
            return np.full(self.mean.shape, np.nan)
        return np.sqrt(self.variance / self.runs)

    def at(self, pulse: int) -> float:
        i = int(np.searchsorted(self.pulse_index, pulse))
        if i >= self.pulse_index.size or self.pulse_index[i] != pulse:
            raise KeyError(f"pulse {pulse} is not on the recorded grid")
        return float(self.mean[i])


@dataclass
class _Moments:
    count: int
    mean: np.ndarray
    m2: np.ndarray

    def merge(self, other: "_Moments") -> "_Moments":
        n = self.count + other.count
        delta = other.mean - self.mean
        mean = self.mean + delta * (other.count / n)
        m2 = self.m2 + other.m2 + delta * delta * (self.count * other.count / n)
        return _Moments(n, mean, m2)


def _run_block(protocol, params, scenario, master_seed, start, stop, pulses, grid) -> _Moments:
    sampler = _Sampler(protocol, params)
    rows = np.empty((stop - start, grid.size))
    for i, run in enumerate(range(start, stop)):
        log_odds, _ = _trace_log_odds(sampler, scenario, RunSeed(master_seed, run), pulses, grid)
        rows[i] = log_odds_to_probability(log_odds)
    mean = rows.mean(axis=0)
    return _Moments(rows.shape[0], mean, ((rows - mean) ** 2).sum(axis=0))


def ensemble_average(
    protocol: Protocol,
    params: SystemParams,
    scenario: Scenario,
    runs: int,
    pulses: int,
    master_seed: int,
    stride: Optional[int] = None,
    points: int = DEFAULT_POINTS,
    log_spaced: bool = False,
    grid: Optional[np.ndarray] = None,
    threads: Optional[int] = None,
    progress: Optional[Callable[[int, int], None]] = None,
) -> EnsembleCurve:
    """Mean posterior over ``runs`` runs with streams ``RunSeed(master_seed, i)``.

    ``progress(done, total)`` is called from the calling thread as blocks of
    runs finish.
    """
    validate_params(params)
    if runs < 1:
        raise ValueError(f"runs must be >= 1 (got {runs})")
    if grid is None:
        grid = make_grid(pulses, stride, points, log_spaced)
    grid = _check_grid(grid, pulses)
    threads = default_threads() if threads is None else int(threads)
    if threads < 1:
        raise ValueError(f"threads must be >= 1 (got {threads})")
    _Sampler(protocol, params)  # fail early on a bad protocol

    blocks = [(s, min(s + RUN_BLOCK, runs)) for s in range(0, runs, RUN_BLOCK)]
    args = (protocol, params, scenario, master_seed)
    results: List[_Moments] = []
    done = 0
    if threads == 1 or len(blocks) == 1:
        for s, e in blocks:
            results.append(_run_block(*args, s, e, pulses, grid))
            done += e - s
            if progress:
                progress(done, runs)
    else:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            futures = [pool.submit(_run_block, *args, s, e, pulses, grid) for s, e in blocks]
            for (s, e), fut in zip(blocks, futures):
                results.append(fut.result())
                done += e - s
                if progress:
                    progress(done, runs)
    total = results[0]
    for part in results[1:]:
        total = total.merge(part)
    variance = total.m2 / (runs - 1) if runs > 1 else None
    return EnsembleCurve(grid, total.mean, runs, variance, protocol.name)


def shots_to_confidence(curve: EnsembleCurve, threshold: float) -> Optional[int]:
    """First recorded pulse index with mean posterior >= threshold, or None."""
    if not 0.0 < threshold < 1.0:
        raise ValueError(f"threshold must be in (0, 1) (got {threshold})")
    hits = np.nonzero(curve.mean >= threshold)[0]
    if hits.size == 0:
        return None
    return int(curve.pulse_index[hits[0]])


def single_shot_posteriors(
    protocol: Protocol, params: SystemParams, rng: np.random.Generator, size: int
) -> np.ndarray:
    """Posterior after one pulse with the object present, for ``size`` independent pulses."""
    validate_params(params)
    sampler = _Sampler(protocol, params)
    L0 = PosteriorState.from_prior(params.prior_present).log_odds
    inc = sampler.increments(rng, size, params.kappa)
    return log_odds_to_probability(np.clip(L0 + inc, -LOG_ODDS_CLAMP, LOG_ODDS_CLAMP))
