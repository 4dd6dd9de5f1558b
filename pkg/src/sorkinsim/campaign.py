"""Monte Carlo and deterministic sweeps of kappa against incident photon rate.

One run measures all eight shutter configurations once, in a random order,
for ``acquisition_time`` seconds each. Photon counts are drawn from the
source statistics, turned into rates and passed through the detector
response; optionally the rates are then corrected with an assumed detector
model before kappa is evaluated.

The all-open configuration at the interference maximum receives the full
incident rate (times ``transmission``). Kappa does not depend on this scale,
but the shot noise does.
"""
from __future__ import annotations

import itertools
import logging
import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass, field
from typing import Sequence

import numpy as np
from scipy.optimize import brentq

from . import __version__
from ._rng import derived_seed, make_rng
from .errors import DomainError, NonInvertibleError, SorkinSimError, ValidityError
from .sorkin import CONFIGS, KappaSample, epsilon_delta_batch, interference_weights, octet_fractions
from .sources import SourceKind, SourceModel
from .spad import DeadtimeKind, DeadtimeModel, correct_rate, detected_rate, pulsed_detected_rate

log = logging.getLogger(__name__)

TRANSMISSION_NOTE = ("all-open interference-maximum rate equals incident_rate * transmission; "
                     "the absolute transmission of the reference setup is not known")


@dataclass(frozen=True)
class CampaignConfig:
    source: SourceModel
    true_detector: DeadtimeModel
    rate_grid: Sequence[float]
    assumed_detector: DeadtimeModel | None = None
    path_amplitudes: Sequence[float] = (1.0, 1.0, 1.0)
    acquisition_time: float = 1.0
    runs: int = 10_000
    rng_seed: int = 0
    transmission: float = 1.0
    retain_samples: bool = False

    def __post_init__(self):
        grid = tuple(float(r) for r in self.rate_grid)
        object.__setattr__(self, "rate_grid", grid)
        object.__setattr__(self, "path_amplitudes", tuple(float(a) for a in self.path_amplitudes))
        if self.runs < 1:
            raise DomainError("runs must be >= 1")
        if not self.acquisition_time > 0:
            raise DomainError("acquisition_time must be positive")
        if not grid or any(r < 0 for r in grid) or any(b <= a for a, b in zip(grid, grid[1:])):
            raise DomainError("rate_grid must be non-empty, non-negative and strictly ascending")
        if not 0 <= self.transmission <= 1:
            raise DomainError("transmission must lie in [0, 1]")
        if self.rng_seed < 0:
            raise DomainError("rng_seed must be non-negative")
        octet_fractions(self.path_amplitudes)


@dataclass
class RunSamples:
    """Per-run results at one rate, in run-index order."""

    epsilon: np.ndarray
    delta: np.ndarray
    kappa: np.ndarray  # NaN where undefined
    orders: np.ndarray  # (runs, 8) indices into CONFIGS
    acquisition_time: float

    def __iter__(self):
        for e, d, k, o in zip(self.epsilon, self.delta, self.kappa, self.orders):
            yield KappaSample(float(e), float(d), None if math.isnan(k) else float(k),
                              tuple(CONFIGS[i] for i in o), self.acquisition_time)


@dataclass
class RatePoint:
    rate_hz: float
    mean_kappa: float = math.nan
    std_kappa: float = math.nan
    mean_eps: float = math.nan
    mean_delta: float = math.nan
    n_undefined: int = 0
    n_runs: int = 0
    error: str | None = None


@dataclass
class CampaignResult:
    points: list[RatePoint]
    config: CampaignConfig
    samples: dict[float, RunSamples] = field(default_factory=dict)

    @property
    def rates(self) -> np.ndarray:
        return np.array([p.rate_hz for p in self.points])

    def column(self, name: str) -> np.ndarray:
        return np.array([getattr(p, name) for p in self.points], dtype=float)

    def metadata(self) -> dict:
        return {
            "software": "sorkinsim",
            "version": __version__,
            "seed": self.config.rng_seed,
            "config": config_echo(self.config),
            "transmission_convention": TRANSMISSION_NOTE,
            "errors": {repr(p.rate_hz): p.error for p in self.points if p.error},
        }


def config_echo(cfg: CampaignConfig) -> dict:
    out = asdict(cfg)
    for key in ("source", "true_detector", "assumed_detector"):
        if out[key] is not None:
            out[key] = {k: (v.value if hasattr(v, "value") else v) for k, v in out[key].items()}
    out["rate_grid"] = list(cfg.rate_grid)
    out["path_amplitudes"] = list(cfg.path_amplitudes)
    return out


def _sps_allocation(photons: int, amplitudes) -> np.ndarray:
    """Integer photon numbers per configuration for a deterministic source.

    Each single-path and pairwise interference term receives a rounded
    integer share, and configuration counts are sums of their terms. The
    integer arithmetic keeps the Born-rule cancellation in epsilon exact.
    """
    single, pair = interference_weights(amplitudes)
    s = np.rint(photons * single).astype(np.int64)
    x = {k: int(np.rint(photons * w)) for k, w in pair.items()}
    counts = np.zeros(8, dtype=np.int64)
    for n, cfg in enumerate(CONFIGS):
        idx = cfg.indices()
        counts[n] = s[idx].sum() + sum(x[p] for p in itertools.combinations(idx, 2))
    return np.maximum(counts, 0)


def _draw_window_counts(cfg: CampaignConfig, source: SourceModel, fractions, sps_counts, rng,
                        order) -> np.ndarray:
    """Photon counts reaching the detector in each configuration (canonical order)."""
    counts = np.zeros(8)
    t_acq = cfg.acquisition_time
    trans = cfg.transmission
    if source.kind is SourceKind.COHERENT:
        counts[order] = rng.poisson(source.mean_rate * trans * t_acq * fractions[order])
    elif source.kind is SourceKind.IDEAL_SPS:
        counts[:] = sps_counts
        if trans < 1.0:
            counts[order] = rng.binomial(sps_counts[order], trans)
    else:
        pulses = int(round(t_acq / source.pulse_period))
        probs = source.photon_number_probabilities()
        for i in order:
            _, n1, n2 = rng.multinomial(pulses, probs)
            q = fractions[i] * trans
            counts[i] = rng.binomial(n1, q) + rng.binomial(n2, 1.0 - (1.0 - q) ** 2)
    return counts


def _detect(cfg: CampaignConfig, source: SourceModel, windows: np.ndarray) -> np.ndarray:
    """Integer detected counts per window, (runs, 8) -> (runs, 8)."""
    det = cfg.true_detector
    t_acq = cfg.acquisition_time
    if source.pulsed:
        # one click per pulse at most; a detector that recovers within one
        # period is linear and leaves integer counts untouched
        if det.tau0 <= source.pulse_period and det.efficiency == 1.0:
            return windows + det.dark_rate * t_acq
        return np.rint(pulsed_detected_rate(windows / t_acq, source.pulse_period, det) * t_acq)
    # the counter reads whole clicks
    return np.rint(detected_rate(windows / t_acq, det) * t_acq)


def _run_rate(cfg: CampaignConfig, k: int, rate: float) -> tuple[RatePoint, RunSamples | None]:
    point = RatePoint(rate)
    try:
        source = cfg.source.with_rate(rate)
        fractions = octet_fractions(cfg.path_amplitudes)
        sps_counts = None
        if source.kind is SourceKind.IDEAL_SPS:
            photons = int(round(round(cfg.acquisition_time / source.pulse_period) * source.emission_probability))
            sps_counts = _sps_allocation(photons, cfg.path_amplitudes)
        windows = np.empty((cfg.runs, 8))
        orders = np.empty((cfg.runs, 8), dtype=np.int8)
        for i in range(cfg.runs):
            rng = make_rng(derived_seed(cfg.rng_seed, k, i))
            order = rng.permutation(8)
            orders[i] = order
            windows[i] = _draw_window_counts(cfg, source, fractions, sps_counts, rng, order)
        detected = _detect(cfg, source, windows)
        if cfg.assumed_detector is not None:
            detected = correct_rate(detected / cfg.acquisition_time, cfg.assumed_detector) * cfg.acquisition_time
    except SorkinSimError as exc:
        point.error = f"{type(exc).__name__}: {exc}"
        log.warning("rate %.6g/s skipped: %s", rate, point.error)
        return point, None

    eps, dlt = epsilon_delta_batch(detected)
    ok = dlt > 0
    kap = np.full(cfg.runs, np.nan)
    kap[ok] = eps[ok] / dlt[ok]
    t_acq = cfg.acquisition_time
    point.n_runs = cfg.runs
    point.n_undefined = int((~ok).sum())
    point.mean_eps = float(eps.mean() / t_acq)
    point.mean_delta = float(dlt.mean() / t_acq)
    if ok.any():
        point.mean_kappa = float(kap[ok].mean())
        point.std_kappa = float(kap[ok].std(ddof=1)) if ok.sum() > 1 else 0.0
    samples = RunSamples(eps / t_acq, dlt / t_acq, kap, orders, t_acq)
    return point, samples


def _run_rate_star(args):
    return _run_rate(*args)


def run_campaign(config: CampaignConfig, workers: int = 1) -> CampaignResult:
    """Monte Carlo kappa statistics at every grid rate.

    Every run draws from its own stream derived from ``(seed, rate index,
    run index)``, so the result does not depend on ``workers``.
    """
    jobs = [(config, k, r) for k, r in enumerate(config.rate_grid)]
    if workers > 1:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            outcomes = list(pool.map(_run_rate_star, jobs))
    else:
        outcomes = [_run_rate(*job) for job in jobs]
    result = CampaignResult([p for p, _ in outcomes], config)
    if config.retain_samples:
        result.samples = {p.rate_hz: s for p, s in outcomes if s is not None}
    return result


# deterministic sweeps -------------------------------------------------------

@dataclass
class SweepTable:
    rate_hz: np.ndarray
    columns: dict[str, np.ndarray]
    warnings: list[str] = field(default_factory=list)
    crossings: dict[str, list[float]] = field(default_factory=dict)


def deterministic_kappa(rate: float, true_detector: DeadtimeModel,
                        assumed_detector: DeadtimeModel | None = None,
                        path_amplitudes=(1.0, 1.0, 1.0), transmission: float = 1.0) -> float:
    """Noise-free kappa after the detector (and optional correction)."""
    incident = rate * transmission * octet_fractions(path_amplitudes)
    det = detected_rate(incident, true_detector)
    if assumed_detector is not None:
        det = correct_rate(det, assumed_detector)
    eps, dlt = epsilon_delta_batch(det[None, :])
    return float(eps[0] / dlt[0])


def _sweep(rate_grid, curves: dict[str, tuple], path_amplitudes, transmission) -> SweepTable:
    grid = np.asarray(rate_grid, dtype=float)
    if grid.size == 0 or np.any(grid <= 0) or np.any(np.diff(grid) <= 0):
        raise DomainError("rate_grid must be positive and strictly ascending")
    table = SweepTable(grid, {})
    stop = grid.size
    values = {}
    for name, (true, assumed) in curves.items():
        col = np.full(grid.size, np.nan)
        for i, r in enumerate(grid):
            try:
                col[i] = deterministic_kappa(r, true, assumed, path_amplitudes, transmission)
            except (NonInvertibleError, ValidityError) as exc:
                table.warnings.append(f"{name}: grid truncated at {r:.6g}/s ({exc})")
                stop = min(stop, i)
                break
        values[name] = col
    table.rate_hz = grid[:stop]
    table.columns = {k: v[:stop] for k, v in values.items()}
    return table


def find_crossings(rates, values, func) -> list[float]:
    """Zero crossings of ``func`` bracketed by sign changes of the sampled ``values``."""
    out = []
    v = np.asarray(values)
    for i in range(len(v) - 1):
        if v[i] == 0:
            out.append(float(rates[i]))
        elif v[i] * v[i + 1] < 0:
            out.append(float(brentq(func, rates[i], rates[i + 1], xtol=1e-9 * rates[i], rtol=1e-14)))
    return out


def sweep_corrected_kappa(true_tau: float, assumed_taus: Sequence[float], rate_grid,
                          path_amplitudes=(1.0, 1.0, 1.0), dark_rate: float = 0.0,
                          transmission: float = 1.0) -> SweepTable:
    """Kappa after correcting constant-deadtime data with mis-estimated deadtimes."""
    if true_tau <= 0 or any(t <= 0 for t in assumed_taus):
        raise DomainError("deadtimes must be positive")
    true = DeadtimeModel.constant(true_tau, dark_rate)
    curves = {f"tau_{t * 1e9:.4g}ns": (true, DeadtimeModel.constant(t, dark_rate)) for t in assumed_taus}
    return _sweep(rate_grid, curves, path_amplitudes, transmission)


def sweep_rate_dependent(true_model: DeadtimeModel, assumed_constant_tau: float, rate_grid,
                         path_amplitudes=(1.0, 1.0, 1.0), transmission: float = 1.0) -> SweepTable:
    """Correction of a rate-dependent detector with itself and with a constant deadtime.

    The zero crossings of the constant-deadtime curve are located by
    bisection and stored under ``crossings["constant"]``.
    """
    if true_model.kind is not DeadtimeKind.LINEAR_IN_RATE:
        raise DomainError("true_model must be rate dependent")
    const = DeadtimeModel.constant(assumed_constant_tau, true_model.dark_rate, true_model.efficiency)
    table = _sweep(rate_grid, {"rate_dependent": (true_model, true_model), "constant": (true_model, const)},
                   path_amplitudes, transmission)

    def curve(r):
        return deterministic_kappa(r, true_model, const, path_amplitudes, transmission)

    table.crossings["constant"] = find_crossings(table.rate_hz, table.columns["constant"], curve)
    return table


# shot-noise bias -------------------------------------------------------------

@dataclass
class BiasStudy:
    mean_eps: float
    mean_delta: float
    mean_delta_given_eps_neg: float | None
    mean_delta_given_eps_pos: float | None
    mean_kappa: float
    n_runs: int
    n_undefined: int


def bias_study(rate: float, runs: int, seed: int, acquisition_time: float = 1.0,
               source: SourceModel | None = None, path_amplitudes=(1.0, 1.0, 1.0)) -> BiasStudy:
    """Joint statistics of epsilon and delta at one rate without detector effects.

    Means of delta conditioned on the sign of epsilon are ``None`` when no
    run falls in that branch.
    """
    if runs < 1000:
        raise DomainError("bias_study needs at least 1000 runs")
    cfg = CampaignConfig(
        source=source or SourceModel.coherent(rate),
        true_detector=DeadtimeModel.constant(0.0),
        rate_grid=[rate], path_amplitudes=path_amplitudes, acquisition_time=acquisition_time,
        runs=runs, rng_seed=seed, retain_samples=True,
    )
    res = run_campaign(cfg)
    point = res.points[0]
    if point.error:
        raise DomainError(point.error)
    s = res.samples[point.rate_hz]
    neg, pos = s.epsilon < 0, s.epsilon > 0
    return BiasStudy(
        mean_eps=float(s.epsilon.mean()),
        mean_delta=float(s.delta.mean()),
        mean_delta_given_eps_neg=float(s.delta[neg].mean()) if neg.any() else None,
        mean_delta_given_eps_pos=float(s.delta[pos].mean()) if pos.any() else None,
        mean_kappa=point.mean_kappa,
        n_runs=runs,
        n_undefined=point.n_undefined,
    )


def convergence_check(samples, tolerance: float) -> tuple[bool, np.ndarray]:
    """Running-mean increments |mean_N - mean_{N+1}|; passes if the last is below ``tolerance``."""
    x = np.asarray(samples, dtype=float)
    if x.size < 2:
        raise DomainError("need at least two samples")
    running = np.cumsum(x) / np.arange(1, x.size + 1)
    increments = np.abs(np.diff(running))
    return bool(increments[-1] < tolerance), increments
