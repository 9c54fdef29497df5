"""Configuration types shared by the simulator and the analytic comparison."""
from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Iterator, Tuple, Union


class ParameterError(ValueError):
    """Raised when a physical parameter is outside its allowed range."""


@dataclass(frozen=True)
class SystemParams:
    """Physical configuration of one detection experiment.

    Attributes
    ----------
    eta : float
        Efficiency of every threshold detector (idler and signal), 0 < eta <= 1.
    kappa : float
        Object reflectance, the probability a signal photon scatters into the
        signal-detector mode when the object is present.
    n_bar : float
        Mean signal photons per pulse (ensemble mean for the random-intensity
        and TMSV protocols, exact for fixed coherent pulses).
    n_bar_B : float
        Effective mean background photons per time bin at the signal detector.
        Dark counts can be folded in with
        :func:`qimimic.detection.effective_background`.
    prior_present : float
        Prior probability that the object is present.
    """

    eta: float
    kappa: float
    n_bar: float
    n_bar_B: float
    prior_present: float = 0.5

    def __post_init__(self) -> None:
        _check(self)

    def replace(self, **changes: float) -> "SystemParams":
        values = {
            "eta": self.eta,
            "kappa": self.kappa,
            "n_bar": self.n_bar,
            "n_bar_B": self.n_bar_B,
            "prior_present": self.prior_present,
        }
        values.update(changes)
        return SystemParams(**values)


def _finite(name: str, value: float) -> None:
    if not isinstance(value, (int, float)) or not math.isfinite(value):
        raise ParameterError(f"{name} must be a finite number (got {value!r})")


def _check(p: SystemParams) -> None:
    for name in ("eta", "kappa", "n_bar", "n_bar_B", "prior_present"):
        _finite(name, getattr(p, name))
    if not 0.0 < p.eta <= 1.0:
        raise ParameterError(f"eta out of range (got {p.eta}; need 0 < eta <= 1)")
    if not 0.0 <= p.kappa < 1.0:
        raise ParameterError(f"kappa out of range (got {p.kappa}; need 0 <= kappa < 1)")
    if not p.n_bar > 0.0:
        raise ParameterError(f"n_bar out of range (got {p.n_bar}; need n_bar > 0)")
    if not p.n_bar_B >= 0.0:
        raise ParameterError(f"n_bar_B out of range (got {p.n_bar_B}; need n_bar_B >= 0)")
    if not 0.0 <= p.prior_present <= 1.0:
        raise ParameterError(
            f"prior_present out of range (got {p.prior_present}; need 0 <= prior <= 1)"
        )


def validate_params(params: SystemParams) -> SystemParams:
    """Re-check every invariant and return ``params`` unchanged."""
    _check(params)
    return params


# --- protocols -------------------------------------------------------------


@dataclass(frozen=True)
class FixedCoherent:
    """Coherent pulses of constant intensity ``n_bar``."""

    @property
    def name(self) -> str:
        return "fixed"


@dataclass(frozen=True)
class RandomCoherent:
    """Coherent (or phase-randomized) pulses with exponentially distributed intensity."""

    @property
    def name(self) -> str:
        return "mimic"


@dataclass(frozen=True)
class TmsvDirect:
    """Two-mode squeezed vacuum with the idler split onto N threshold detectors."""

    num_idler_detectors: int = 1

    def __post_init__(self) -> None:
        n = self.num_idler_detectors
        if isinstance(n, bool) or not isinstance(n, int) or n < 1:
            raise ParameterError(f"num_idler_detectors must be a positive integer (got {n!r})")
        if n > 16:
            raise ParameterError(f"num_idler_detectors limited to 16 (got {n})")

    @property
    def name(self) -> str:
        return f"tmsv:{self.num_idler_detectors}"


Protocol = Union[FixedCoherent, RandomCoherent, TmsvDirect]


def parse_protocol(text: str) -> Protocol:
    """Parse ``mimic``, ``fixed`` or ``tmsv:N`` (``tmsv`` alone means N=1)."""
    key = text.strip().lower()
    if key in ("mimic", "random", "rc"):
        return RandomCoherent()
    if key in ("fixed", "coherent"):
        return FixedCoherent()
    if key.startswith("tmsv"):
        _, _, rest = key.partition(":")
        try:
            n = int(rest) if rest else 1
        except ValueError:
            raise ParameterError(f"bad idler detector count in {text!r}") from None
        return TmsvDirect(n)
    raise ParameterError(f"unknown protocol {text!r} (expected mimic, fixed or tmsv:N)")


# --- presence schedule -----------------------------------------------------


@dataclass(frozen=True)
class Scenario:
    """Piecewise-constant true reflectance ``kappa(r)`` over pulse index r >= 1.

    ``segments`` holds ``(first_pulse, kappa)`` pairs sorted by first pulse; the
    first segment starts at pulse 1. A reflectance of zero means no object.
    """

    segments: Tuple[Tuple[int, float], ...]

    def __post_init__(self) -> None:
        if not self.segments or self.segments[0][0] != 1:
            raise ParameterError("scenario must start at pulse 1")
        last = 0
        for start, kappa in self.segments:
            if start <= last:
                raise ParameterError("scenario segments must have increasing start pulses")
            _finite("kappa", kappa)
            if not 0.0 <= kappa < 1.0:
                raise ParameterError(f"kappa out of range in scenario (got {kappa})")
            last = start

    @classmethod
    def present(cls, kappa: float) -> "Scenario":
        return cls(((1, float(kappa)),))

    @classmethod
    def absent(cls) -> "Scenario":
        return cls(((1, 0.0),))

    @classmethod
    def appear_at(cls, pulse: int, kappa: float) -> "Scenario":
        """Object absent for pulses ``1..pulse-1`` and present from ``pulse`` on."""
        if pulse <= 1:
            return cls.present(kappa)
        return cls(((1, 0.0), (int(pulse), float(kappa))))

    def kappa_at(self, r: int) -> float:
        kappa = self.segments[0][1]
        for start, k in self.segments:
            if start > r:
                break
            kappa = k
        return kappa

    def pieces(self, first: int, stop: int) -> Iterator[Tuple[int, int, float]]:
        """Yield ``(lo, hi, kappa)`` covering pulses ``first <= r < stop``."""
        bounds = [s for s, _ in self.segments[1:]] + [math.inf]
        for (start, kappa), end in zip(self.segments, bounds):
            lo, hi = max(start, first), min(end, stop)
            if lo < hi:
                yield int(lo), int(hi), kappa
