"""Statistical light-source models: laser, ideal and contaminated single-photon sources."""
from __future__ import annotations

import enum
import math
from dataclasses import dataclass, field, replace

import numpy as np

from ._rng import make_rng
from .errors import DomainError

MAX_PULSES = 10**8


class SourceKind(str, enum.Enum):
    COHERENT = "coherent"
    IDEAL_SPS = "ideal_sps"
    CONTAMINATED_SPS = "contaminated_sps"


@dataclass(frozen=True)
class SourceModel:
    """Photon source description.

    For the pulsed kinds the mean rate is tied to the pulse period through
    ``mean_rate = emission_probability / pulse_period``; give either the rate
    or the emission probability and the other is filled in.
    """

    kind: SourceKind
    mean_rate: float | None = None
    pulse_period: float | None = None
    emission_probability: float | None = None
    g2_zero: float = 0.0

    def __post_init__(self):
        kind = SourceKind(self.kind)
        object.__setattr__(self, "kind", kind)
        if kind is SourceKind.COHERENT:
            if self.mean_rate is None or not (self.mean_rate >= 0 and math.isfinite(self.mean_rate)):
                raise DomainError(f"coherent source needs a finite mean_rate >= 0, got {self.mean_rate}")
            if self.g2_zero != 0.0:
                raise DomainError("g2_zero is fixed at 1 for coherent light and cannot be set")
            return
        if self.pulse_period is None or not self.pulse_period > 0:
            raise DomainError("pulsed sources need pulse_period > 0")
        p = self.emission_probability
        if p is None:
            if self.mean_rate is None:
                raise DomainError("give mean_rate or emission_probability")
            p = self.mean_rate * self.pulse_period
            object.__setattr__(self, "emission_probability", p)
        elif self.mean_rate is not None and not math.isclose(self.mean_rate, p / self.pulse_period, rel_tol=1e-12):
            raise DomainError("mean_rate disagrees with emission_probability / pulse_period")
        if not 0.0 <= p <= 1.0 + 1e-12:
            raise DomainError(f"emission probability per pulse must lie in [0, 1], got {p}")
        object.__setattr__(self, "emission_probability", min(p, 1.0))
        object.__setattr__(self, "mean_rate", min(p, 1.0) / self.pulse_period)
        if kind is SourceKind.IDEAL_SPS and self.g2_zero != 0.0:
            raise DomainError("an ideal single-photon source has g2_zero = 0")
        if kind is SourceKind.CONTAMINATED_SPS:
            if not 0.0 <= self.g2_zero < 1.0:
                raise DomainError(f"g2_zero must lie in [0, 1), got {self.g2_zero}")
            self.photon_number_probabilities()

    @classmethod
    def coherent(cls, mean_rate: float) -> "SourceModel":
        return cls(SourceKind.COHERENT, mean_rate=mean_rate)

    @classmethod
    def ideal_sps(cls, mean_rate: float, pulse_period: float) -> "SourceModel":
        return cls(SourceKind.IDEAL_SPS, mean_rate=mean_rate, pulse_period=pulse_period)

    @classmethod
    def contaminated_sps(cls, mean_rate: float, pulse_period: float, g2_zero: float) -> "SourceModel":
        return cls(SourceKind.CONTAMINATED_SPS, mean_rate=mean_rate, pulse_period=pulse_period,
                   g2_zero=g2_zero)

    @property
    def pulsed(self) -> bool:
        return self.kind is not SourceKind.COHERENT

    def with_rate(self, mean_rate: float) -> "SourceModel":
        return replace(self, mean_rate=mean_rate, emission_probability=None)

    def photon_number_probabilities(self) -> tuple[float, float, float]:
        """(P0, P1, P2) per pulse.

        The mean photon number per pulse equals the emission probability and
        P2 is set so that 2*P2 / (P1 + 2*P2)**2 reproduces ``g2_zero``.
        """
        mu = self.emission_probability if self.pulsed else None
        if mu is None:
            raise DomainError("photon-number distribution is only defined for pulsed sources")
        p2 = 0.5 * self.g2_zero * mu * mu
        p1 = mu - 2.0 * p2
        p0 = 1.0 - p1 - p2
        if p1 < 0 or p0 < 0:
            raise DomainError(f"g2_zero={self.g2_zero} is unreachable at {mu} photons per pulse")
        return p0, p1, p2


@dataclass(frozen=True)
class CountSample:
    counts: int
    duration: float

    def __post_init__(self):
        if self.counts < 0:
            raise DomainError("counts must be non-negative")
        if not self.duration > 0:
            raise DomainError("duration must be positive")

    @property
    def effective_rate(self) -> float:
        return self.counts / self.duration


def _n_pulses(source: SourceModel, duration: float) -> int:
    n = duration / source.pulse_period
    if n > MAX_PULSES:
        raise DomainError(f"{n:.3g} pulses exceed the limit of {MAX_PULSES:.0e}")
    return int(round(n))


def draw_counts(source: SourceModel, transmission: float, duration: float, rng_seed) -> CountSample:
    """Photons delivered through a channel of intensity ``transmission``.

    Laser light gives Poisson counts. The ideal single-photon source emits a
    fixed number of photons; channel loss thins them one by one (binomial).
    The contaminated source draws 0, 1 or 2 photons per pulse and thins each
    photon independently.
    """
    if not 0.0 <= transmission <= 1.0:
        raise DomainError(f"transmission must lie in [0, 1], got {transmission}")
    if not duration > 0:
        raise DomainError("duration must be positive")
    rng = make_rng(rng_seed)
    if source.kind is SourceKind.COHERENT:
        return CountSample(int(rng.poisson(source.mean_rate * transmission * duration)), duration)
    pulses = _n_pulses(source, duration)
    if source.kind is SourceKind.IDEAL_SPS:
        emitted = int(round(pulses * source.emission_probability))
        if transmission < 1.0:
            emitted = int(rng.binomial(emitted, transmission))
        return CountSample(emitted, duration)
    _, n1, n2 = rng.multinomial(pulses, source.photon_number_probabilities())
    if transmission < 1.0:
        n1 = rng.binomial(n1, transmission)
        n2 = rng.binomial(n2, transmission, size=2).sum()
    return CountSample(int(n1 + 2 * n2), duration)


def draw_photon_numbers(source: SourceModel, n_pulses: int, rng_seed) -> np.ndarray:
    """Per-pulse photon numbers (0, 1 or 2) for a pulsed source."""
    if not source.pulsed:
        raise DomainError("per-pulse photon numbers need a pulsed source")
    if n_pulses > MAX_PULSES:
        raise DomainError(f"{n_pulses} pulses exceed the limit of {MAX_PULSES:.0e}")
    rng = make_rng(rng_seed)
    if source.kind is SourceKind.IDEAL_SPS:
        return (rng.random(n_pulses) < source.emission_probability).astype(np.int8)
    return rng.choice(3, size=n_pulses, p=source.photon_number_probabilities()).astype(np.int8)


def estimate_g2_zero(photon_numbers) -> float:
    """Pulse-wise g2(0) from per-pulse photon numbers restricted to {0, 1, 2}."""
    n = np.asarray(photon_numbers)
    p1 = np.mean(n == 1)
    p2 = np.mean(n == 2)
    denom = (p1 + 2 * p2) ** 2
    if denom == 0:
        raise DomainError("no photons in the sample")
    return float(2 * p2 / denom)


def pulse_train_timestamps(source: SourceModel, duration: float, rng_seed) -> np.ndarray:
    """Sorted photon arrival times in [0, duration).

    Pulsed sources emit only at multiples of the pulse period; photons of a
    multi-photon pulse share its timestamp. Laser light is a homogeneous
    Poisson process.
    """
    if duration < 0:
        raise DomainError("duration must be non-negative")
    if duration == 0:
        return np.empty(0)
    rng = make_rng(rng_seed)
    if source.kind is SourceKind.COHERENT:
        expected = source.mean_rate * duration
        if expected > MAX_PULSES:
            raise DomainError(f"{expected:.3g} expected photons exceed the limit of {MAX_PULSES:.0e}")
        n = rng.poisson(expected)
        return np.sort(rng.uniform(0.0, duration, size=n))
    pulses = int(math.ceil(duration / source.pulse_period - 1e-9))
    if pulses > MAX_PULSES:
        raise DomainError(f"{pulses} pulses exceed the limit of {MAX_PULSES:.0e}")
    numbers = draw_photon_numbers(source, pulses, rng)
    times = np.arange(pulses) * source.pulse_period
    times = np.repeat(times, numbers)
    return times[times < duration]
