"""Single-photon avalanche diode: deadtime response, correction and characterisation.

Steady-state response of a non-paralyzable detector with efficiency ``eta``,
deadtime ``tau`` and dark rate ``R0``::

    R_det = eta*R / (1 + tau*eta*R) + R0

For the rate-dependent model ``tau(x) = tau0 - slope*x`` is evaluated at the
photon-triggered detected rate ``x = R_det - R0``.
"""
from __future__ import annotations

import enum
import math
from dataclasses import dataclass

import numba
import numpy as np
from scipy.optimize import brentq, minimize_scalar

from ._rng import make_rng
from .errors import DomainError, IllConditionedError, NonInvertibleError, ValidityError

# Beyond this busy fraction x*tau(x) the linear tau(R) law is not trusted.
MAX_BUSY_FRACTION = 0.8


class DeadtimeKind(str, enum.Enum):
    CONSTANT = "constant"
    LINEAR_IN_RATE = "linear_in_rate"


@dataclass(frozen=True)
class DeadtimeModel:
    kind: DeadtimeKind = DeadtimeKind.CONSTANT
    tau0: float = 45e-9
    slope: float = 0.0
    dark_rate: float = 0.0
    efficiency: float = 1.0

    def __post_init__(self):
        object.__setattr__(self, "kind", DeadtimeKind(self.kind))
        if not self.tau0 >= 0 or not math.isfinite(self.tau0):
            raise DomainError(f"tau0 must be finite and >= 0, got {self.tau0}")
        if self.dark_rate < 0:
            raise DomainError("dark_rate must be >= 0")
        if not 0.0 < self.efficiency <= 1.0:
            raise DomainError(f"efficiency must lie in (0, 1], got {self.efficiency}")
        if self.kind is DeadtimeKind.CONSTANT and self.slope != 0.0:
            raise DomainError("a constant deadtime model has no slope")
        if self.kind is DeadtimeKind.LINEAR_IN_RATE and not self.tau0 > 0:
            raise DomainError("a rate-dependent model needs tau0 > 0")

    @classmethod
    def constant(cls, tau: float, dark_rate: float = 0.0, efficiency: float = 1.0) -> "DeadtimeModel":
        return cls(DeadtimeKind.CONSTANT, tau, 0.0, dark_rate, efficiency)

    @classmethod
    def linear_in_rate(cls, tau0: float, slope: float, dark_rate: float = 0.0,
                       efficiency: float = 1.0) -> "DeadtimeModel":
        return cls(DeadtimeKind.LINEAR_IN_RATE, tau0, slope, dark_rate, efficiency)

    @property
    def max_rate(self) -> float:
        """Largest photon-triggered detected rate inside the validity range."""
        if self.kind is DeadtimeKind.CONSTANT or self.slope <= 0:
            return math.inf
        # x*tau(x) <= MAX_BUSY_FRACTION and tau(x) > 0
        t0, s, b = self.tau0, self.slope, MAX_BUSY_FRACTION
        disc = t0 * t0 - 4 * s * b
        zero_tau = t0 / s
        if disc < 0:
            return zero_tau
        return min(zero_tau, (t0 - math.sqrt(disc)) / (2 * s))


def tau_at_rate(model: DeadtimeModel, rate: float) -> float:
    """Deadtime at a photon-triggered detected rate."""
    if model.kind is DeadtimeKind.CONSTANT:
        return model.tau0
    if rate < 0:
        raise ValidityError(f"negative rate {rate}")
    if rate >= model.max_rate:
        raise ValidityError(f"rate {rate:.6g}/s outside the validity range (< {model.max_rate:.6g}/s)")
    return model.tau0 - model.slope * rate


def _photon_rate(actual, model: DeadtimeModel):
    """Photon-triggered detected rate (no dark counts), elementwise."""
    y = model.efficiency * np.asarray(actual, dtype=float)
    b = 1.0 + model.tau0 * y
    if model.kind is DeadtimeKind.CONSTANT or model.slope == 0:
        return y / b
    # x = y / (1 + (tau0 - s*x) y)  <=>  s y x^2 - (1 + tau0 y) x + y = 0, smaller root
    disc = b * b - 4.0 * model.slope * y * y
    if np.any(disc < 0):
        raise ValidityError("incident rate beyond the range the rate-dependent model can describe")
    x = 2.0 * y / (b + np.sqrt(disc))
    if np.any(x >= model.max_rate):
        raise ValidityError(f"detected rate exceeds the validity range (< {model.max_rate:.6g}/s)")
    return x


def detected_rate(actual_rate, model: DeadtimeModel):
    """Steady-state detected rate for an incident photon rate (scalar or array)."""
    a = np.asarray(actual_rate, dtype=float)
    if np.any(a < 0) or not np.all(np.isfinite(a)):
        raise DomainError("incident rate must be finite and non-negative")
    out = _photon_rate(a, model) + model.dark_rate
    return float(out) if out.ndim == 0 else out


def correct_rate(detected, assumed: DeadtimeModel):
    """Invert the steady-state response under an assumed detector model."""
    d = np.asarray(detected, dtype=float) - assumed.dark_rate
    if np.any(d < -1e-9 * max(assumed.dark_rate, 1.0)):
        raise DomainError("detected rate below the dark rate")
    d = np.maximum(d, 0.0)
    if assumed.kind is DeadtimeKind.CONSTANT or assumed.slope == 0:
        tau = assumed.tau0
    else:
        if np.any(d >= assumed.max_rate):
            raise ValidityError(f"detected rate outside the validity range (< {assumed.max_rate:.6g}/s)")
        tau = assumed.tau0 - assumed.slope * d
    busy = tau * d
    if np.any(busy >= 1.0):
        raise NonInvertibleError("detected rate at or above the saturation bound 1/tau")
    out = d / (1.0 - busy) / assumed.efficiency
    return float(out) if out.ndim == 0 else out


def pulsed_detected_rate(actual_rate, pulse_period: float, model: DeadtimeModel):
    """Detected rate for light arriving in pulses of at most one click each.

    After a click the detector misses the ``m`` following pulses that fall
    inside its deadtime, so the response is the steady-state one with
    ``tau`` replaced by ``m * pulse_period``. When the period exceeds the
    deadtime, ``m = 0`` and the detector is linear.
    """
    if not pulse_period > 0:
        raise DomainError("pulse_period must be positive")
    x = _photon_rate(actual_rate, model)
    tau = model.tau0 if model.kind is DeadtimeKind.CONSTANT else np.max(model.tau0 - model.slope * x)
    skipped = max(0, math.ceil(tau / pulse_period - 1e-12) - 1)
    effective = DeadtimeModel.constant(skipped * pulse_period, model.dark_rate, model.efficiency)
    return detected_rate(actual_rate, effective)


@numba.njit(cache=True)
def _gate(times, tau):
    keep = np.zeros(times.size, dtype=np.bool_)
    ready = -np.inf
    for i in range(times.size):
        t = times[i]
        if t >= ready:
            keep[i] = True
            ready = t + tau
    return keep


def apply_deadtime_events(arrivals, model: DeadtimeModel, rng_seed, duration: float | None = None):
    """Event-level non-paralyzable gating of an arrival stream.

    Each photon survives an efficiency draw; dark counts are merged in as an
    independent Poisson stream over ``[0, duration)`` (default: the last
    arrival time). An event is recorded iff it comes at least ``tau`` after
    the previous recorded event. For the rate-dependent model the deadtime is
    evaluated once at the mean recorded photon rate of the stream.
    """
    t = np.asarray(arrivals, dtype=float)
    if t.ndim != 1:
        raise DomainError("arrivals must be one-dimensional")
    if t.size > 1 and np.any(np.diff(t) < 0):
        raise DomainError("arrival times must be sorted")
    rng = make_rng(rng_seed)
    if model.efficiency < 1.0:
        t = t[rng.random(t.size) < model.efficiency]
    if duration is None:
        duration = float(t[-1]) if t.size else 0.0
    if model.dark_rate > 0 and duration > 0:
        darks = rng.uniform(0.0, duration, size=rng.poisson(model.dark_rate * duration))
        t = np.sort(np.concatenate([t, darks]))
    if model.kind is DeadtimeKind.CONSTANT:
        tau = model.tau0
    else:
        rate = t.size / duration if duration > 0 else 0.0
        linear = DeadtimeModel.linear_in_rate(model.tau0, model.slope)
        tau = tau_at_rate(model, float(_photon_rate(rate, linear)))
    return t[_gate(t, tau)] if t.size else t


@dataclass(frozen=True)
class SuperpositionMeasurement:
    """Detected rates with both, only the first, only the second, or no source unblocked."""

    r_both: float
    r_only1: float
    r_only2: float
    r_none: float = 0.0
    repetitions: int = 1

    def __post_init__(self):
        if min(self.r_both, self.r_only1, self.r_only2, self.r_none) < 0:
            raise DomainError("rates must be non-negative")
        if self.repetitions < 1:
            raise DomainError("repetitions must be >= 1")

    def residual(self, tau: float) -> float:
        """Additivity residual of the deadtime-corrected rates."""
        d = np.array([self.r_both, self.r_only1, self.r_only2]) - self.r_none
        c = d / (1.0 - tau * d)
        return float(c[0] - c[1] - c[2])


@dataclass(frozen=True)
class DeadtimeEstimate:
    tau: float
    uncertainty: float
    per_measurement: tuple[float, ...]


def _tau_upper(measurements) -> float:
    top = max(m.r_both - m.r_none for m in measurements)
    if not top > 0:
        raise IllConditionedError("no photon-triggered counts in the measurements")
    return (1.0 - 1e-9) / top


def _single_estimate(m: SuperpositionMeasurement, upper: float) -> float:
    f = m.residual
    lo, hi = 0.0, upper
    if f(lo) >= 0:
        return 0.0
    if f(hi) <= 0:
        return hi
    return brentq(f, lo, hi, xtol=1e-22, rtol=1e-14)


def characterize_deadtime(measurements, min_nonlinearity: float = 1e-6) -> DeadtimeEstimate:
    """Deadtime from superposition measurements.

    The estimate minimises the sum of squared additivity residuals over all
    measurements; the uncertainty is the standard deviation of the
    estimates obtained from each measurement alone.

    Raises
    ------
    IllConditionedError
        If the best deadtime leaves the detector linear to within
        ``min_nonlinearity`` (busy fraction at the highest rate), i.e. the
        data show no measurable saturation.
    """
    ms = list(measurements)
    if not ms:
        raise DomainError("at least one measurement is required")
    upper = _tau_upper(ms)

    def cost(tau):
        return sum(m.residual(tau) ** 2 for m in ms)

    singles = [_single_estimate(m, upper) for m in ms]
    lo, hi = min(singles), max(singles)
    if hi > lo:
        pad = 0.1 * (hi - lo)
        res = minimize_scalar(cost, bounds=(max(0.0, lo - pad), min(upper, hi + pad)), method="bounded",
                              options={"xatol": 1e-20, "maxiter": 500})
        tau = float(res.x)
    else:
        tau = lo
    top = max(m.r_both - m.r_none for m in ms)
    if tau * top < min_nonlinearity:
        raise IllConditionedError(
            f"fitted deadtime {tau:.3g} s leaves the detector linear to {tau * top:.1e}; "
            "the data carry no deadtime information")
    unc = float(np.std(singles, ddof=1)) if len(singles) > 1 else math.nan
    return DeadtimeEstimate(tau, unc, tuple(singles))


def simulate_superposition(tau_model: DeadtimeModel, rate1: float, rate2: float, repetitions: int,
                           window: float | None, rng_seed) -> list[SuperpositionMeasurement]:
    """Synthetic superposition data for two mutually incoherent sources.

    With ``window=None`` the rates are exact; otherwise each rate is the
    Poisson count in a window of that length divided by the window.
    """
    rng = make_rng(rng_seed)
    exact = detected_rate(np.array([rate1 + rate2, rate1, rate2, 0.0]), tau_model)
    out = []
    for _ in range(repetitions):
        r = exact if window is None else rng.poisson(exact * window) / window
        out.append(SuperpositionMeasurement(*map(float, r)))
    return out
