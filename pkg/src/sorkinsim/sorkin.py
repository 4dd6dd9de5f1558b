"""Shutter configurations, the third-order term, its normalisation and kappa."""
from __future__ import annotations

import itertools
from dataclasses import dataclass
from typing import Mapping, Sequence

import numpy as np

from ._rng import make_rng
from .errors import DomainError, UndefinedKappaError

PATHS = ("A", "B", "C")


@dataclass(frozen=True)
class ShutterConfig:
    """Set of open paths; the empty set is the dark (all closed) setting."""

    open_paths: frozenset

    def __post_init__(self):
        paths = frozenset(self.open_paths)
        if not paths <= set(PATHS):
            raise DomainError(f"unknown paths {sorted(paths - set(PATHS))}")
        object.__setattr__(self, "open_paths", paths)

    @classmethod
    def from_label(cls, label: str) -> "ShutterConfig":
        label = label.strip().upper()
        return cls(frozenset() if label in ("", "0", "R0", "NONE") else frozenset(label.lstrip("R")))

    @property
    def label(self) -> str:
        return "".join(p for p in PATHS if p in self.open_paths) or "0"

    @property
    def key(self) -> str:
        """Field name used in rate files: r0, ra, ..., rabc."""
        return "r" + self.label.lower()

    def indices(self) -> list[int]:
        return [PATHS.index(p) for p in PATHS if p in self.open_paths]

    def __repr__(self):
        return f"ShutterConfig({self.label})"


# canonical order: r0, ra, rb, rc, rab, rac, rbc, rabc
CONFIGS: tuple[ShutterConfig, ...] = tuple(
    ShutterConfig(frozenset(c)) for n in range(4) for c in itertools.combinations(PATHS, n)
)
RATE_KEYS = tuple(c.key for c in CONFIGS)

# signed weights of each canonical rate in epsilon
_EPS_SIGNS = np.array([-1, 1, 1, 1, -1, -1, -1, 1], dtype=float)


class RateOctet:
    """Detected rates (counts/s) for all eight shutter configurations, raw (dark counts included)."""

    __slots__ = ("_r",)

    def __init__(self, rates):
        if isinstance(rates, Mapping):
            try:
                values = [rates[c] if c in rates else rates[c.key] for c in CONFIGS]
            except KeyError as exc:
                raise DomainError(f"missing rate for configuration {exc}") from None
        else:
            values = rates
        r = np.array(values, dtype=float)
        if r.shape != (8,):
            raise DomainError(f"an octet needs 8 rates, got shape {r.shape}")
        if not np.all(np.isfinite(r)) or np.any(r < 0):
            raise DomainError("rates must be finite and non-negative")
        r.setflags(write=False)
        self._r = r

    @property
    def values(self) -> np.ndarray:
        return self._r

    def __getitem__(self, config: ShutterConfig | str) -> float:
        if isinstance(config, str):
            config = ShutterConfig.from_label(config)
        return float(self._r[CONFIGS.index(config)])

    def as_dict(self) -> dict[str, float]:
        return dict(zip(RATE_KEYS, map(float, self._r)))

    def __repr__(self):
        return f"RateOctet({self.as_dict()})"

    def __eq__(self, other):
        return isinstance(other, RateOctet) and np.array_equal(self._r, other._r)


@dataclass(frozen=True)
class KappaSample:
    epsilon: float
    delta: float
    kappa: float | None
    config_order: tuple[ShutterConfig, ...]
    acquisition_time: float


def _values(rates) -> np.ndarray:
    if isinstance(rates, RateOctet):
        return rates.values
    return RateOctet(rates).values


def epsilon(rates) -> float:
    """R_ABC - R_AB - R_AC - R_BC + R_A + R_B + R_C - R_0."""
    r0, ra, rb, rc, rab, rac, rbc, rabc = _values(rates)
    return float(rabc - rab - rac - rbc + ra + rb + rc - r0)


def delta(rates) -> float:
    """Sum of the magnitudes of the three dark-corrected pairwise interference terms."""
    r0, ra, rb, rc, rab, rac, rbc, rabc = _values(rates)
    return float(abs(rab - ra - rb + r0) + abs(rac - ra - rc + r0) + abs(rbc - rb - rc + r0))


def kappa(rates) -> float:
    d = delta(rates)
    if d == 0:
        raise UndefinedKappaError("second-order interference vanishes (delta = 0); kappa is undefined")
    return epsilon(rates) / d


def epsilon_delta_batch(octets) -> tuple[np.ndarray, np.ndarray]:
    """Vectorised epsilon and delta for an (n, 8) array in canonical order."""
    r = np.asarray(octets, dtype=float)
    r0, ra, rb, rc, rab, rac, rbc, rabc = r.T
    eps = rabc - rab - rac - rbc + ra + rb + rc - r0
    dlt = np.abs(rab - ra - rb + r0) + np.abs(rac - ra - rc + r0) + np.abs(rbc - rb - rc + r0)
    return eps, dlt


def randomized_config_order(rng_seed) -> tuple[ShutterConfig, ...]:
    """Uniformly random measurement order of the eight configurations."""
    perm = make_rng(rng_seed).permutation(8)
    return tuple(CONFIGS[i] for i in perm)


def _check_amplitudes(path_amplitudes, phases):
    a = np.asarray(path_amplitudes, dtype=float)
    if a.shape != (3,) or np.any(a < 0) or not np.all(np.isfinite(a)):
        raise DomainError("need three finite, non-negative path amplitudes")
    if a.sum() == 0:
        raise DomainError("at least one path amplitude must be positive")
    # only ratios matter; rescaling keeps (sum a)^2 away from underflow
    a = a / a.max()
    ph = np.zeros(3) if phases is None else np.asarray(phases, dtype=float)
    if ph.shape != (3,) or not np.all(np.isfinite(ph)):
        raise DomainError("need three finite path phases")
    return a, ph


def interference_weights(path_amplitudes: Sequence[float], phases: Sequence[float] | None = None):
    """Per-path and pairwise contributions to the detected-port intensity.

    Returns ``(single, pair)`` with ``single[i] = a_i**2 / S`` and
    ``pair[(i, j)] = 2 a_i a_j cos(phi_i - phi_j) / S`` where ``S = (sum a)**2``,
    so the fraction transmitted with paths ``P`` open is
    ``sum(single[P]) + sum(pair within P)``.
    """
    a, ph = _check_amplitudes(path_amplitudes, phases)
    norm = a.sum() ** 2
    single = a * a / norm
    pair = {(i, j): 2 * a[i] * a[j] * np.cos(ph[i] - ph[j]) / norm
            for i, j in itertools.combinations(range(3), 2)}
    return single, pair


def interferometer_rate(config: ShutterConfig, path_amplitudes: Sequence[float], incident_rate: float,
                        dark_rate: float = 0.0, phases: Sequence[float] | None = None,
                        transmission: float = 1.0) -> float:
    """Expected rate at the detected port for one shutter configuration.

    The rate is ``incident * transmission * |sum_open a_i e^{i phi_i}|^2 / (sum_all a_i)^2``
    plus the dark rate, so with zero phases and all paths open it equals
    ``incident * transmission``.
    """
    if incident_rate < 0 or dark_rate < 0:
        raise DomainError("rates must be non-negative")
    if not 0 <= transmission <= 1:
        raise DomainError("transmission must lie in [0, 1]")
    a, ph = _check_amplitudes(path_amplitudes, phases)
    idx = config.indices()
    field = np.sum(a[idx] * np.exp(1j * ph[idx])) if idx else 0.0
    return float(incident_rate * transmission * abs(field) ** 2 / a.sum() ** 2 + dark_rate)


def octet_fractions(path_amplitudes, phases=None) -> np.ndarray:
    """Transmitted fraction of each canonical configuration (dark setting = 0)."""
    return np.array([interferometer_rate(c, path_amplitudes, 1.0, 0.0, phases) for c in CONFIGS])


def born_octet(path_amplitudes, incident_rate: float, dark_rate: float = 0.0, phases=None,
               transmission: float = 1.0) -> RateOctet:
    return RateOctet([interferometer_rate(c, path_amplitudes, incident_rate, dark_rate, phases, transmission)
                      for c in CONFIGS])
