"""Transfer matrices for two- and three-path interferometers.

Matrices are plain complex ``numpy`` arrays of shape (2, 2) or (3, 3).
Columns index input ports and rows index output ports, so the field leaving
a network for a unit excitation of port ``k`` is ``network[:, k]``.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Sequence

import numpy as np
from scipy.optimize import least_squares

from .errors import DomainError, NoSolutionError, UndefinedVisibilityError

SOLVER_TOL = 1e-9


@dataclass(frozen=True)
class PathSpec:
    """Loss (field amplitude factor) and phase of one interferometer arm."""

    loss_amplitude: float = 1.0
    phase: float = 0.0

    def __post_init__(self):
        if not 0.0 <= self.loss_amplitude <= 1.0:
            raise DomainError(f"loss_amplitude must lie in [0, 1], got {self.loss_amplitude}")
        if not math.isfinite(self.phase):
            raise DomainError("phase must be finite")


@dataclass(frozen=True)
class SplitterSpec:
    """Intensity efficiencies of the -1, 0 and +1 orders of a 1x3 splitter."""

    t_minus: float
    t_zero: float
    t_plus: float

    def __post_init__(self):
        for t in self.efficiencies:
            if not 0.0 <= t <= 1.0:
                raise DomainError(f"order efficiency must lie in [0, 1], got {t}")
        if sum(self.efficiencies) > 1.0 + 1e-12:
            raise DomainError("order efficiencies sum to more than 1")

    @property
    def efficiencies(self) -> tuple[float, float, float]:
        return (self.t_minus, self.t_zero, self.t_plus)

    def normalized(self) -> tuple[float, float, float]:
        total = sum(self.efficiencies)
        return tuple(t / total for t in self.efficiencies)


def _check_ratio(r, name="reflectivity"):
    if not (0.0 <= r <= 1.0):
        raise DomainError(f"{name} must lie in [0, 1], got {r}")


def _check_matrix(m) -> np.ndarray:
    m = np.asarray(m, dtype=complex)
    if m.ndim != 2 or m.shape[0] != m.shape[1] or m.shape[0] not in (2, 3):
        raise DomainError(f"transfer matrix must be 2x2 or 3x3, got shape {m.shape}")
    return m


def beamsplitter(reflectivity: float) -> np.ndarray:
    """Lossless 2x2 splitter with intensity reflection coefficient R."""
    _check_ratio(reflectivity)
    t = math.sqrt(1.0 - reflectivity)
    r = 1j * math.sqrt(reflectivity)
    return np.array([[t, r], [r, t]], dtype=complex)


def path_matrix(path1: PathSpec, path2: PathSpec = PathSpec()) -> np.ndarray:
    return np.diag([
        path1.loss_amplitude * np.exp(1j * path1.phase),
        path2.loss_amplitude * np.exp(1j * path2.phase),
    ])


def compose(elements: Sequence[np.ndarray]) -> np.ndarray:
    """Combine elements listed in the order the light traverses them.

    The first element acts first, so ``compose([a, b, c]) == c @ b @ a``.
    """
    if len(elements) == 0:
        raise DomainError("cannot compose an empty list of elements")
    mats = [_check_matrix(e) for e in elements]
    dim = mats[0].shape[0]
    out = np.eye(dim, dtype=complex)
    for m in mats:
        if m.shape[0] != dim:
            raise DomainError(f"dimension mismatch: {m.shape[0]} vs {dim}")
        out = m @ out
    return out


def mach_zehnder(phase: float, path1_loss: float = 1.0, path2_loss: float = 1.0,
                 r_in: float = 0.5, r_out: float = 0.5) -> np.ndarray:
    """Splitter, arms, splitter. The phase sits on arm 1."""
    return compose([
        beamsplitter(r_in),
        path_matrix(PathSpec(path1_loss, phase), PathSpec(path2_loss)),
        beamsplitter(r_out),
    ])


def michelson(phase: float, path1_loss: float = 1.0, path2_loss: float = 1.0,
              reflectivity: float = 0.5) -> np.ndarray:
    """Folded two-arm interferometer: each arm is traversed twice.

    Equivalent to a Mach-Zehnder whose arm amplitudes are squared and whose
    arm phase is doubled; the same splitter is used on the way in and out.
    """
    return mach_zehnder(2.0 * phase, path1_loss**2, path2_loss**2, reflectivity, reflectivity)


def output_intensities(network, input_port: int) -> np.ndarray:
    m = _check_matrix(network)
    if not 0 <= input_port < m.shape[0]:
        raise DomainError(f"input port {input_port} out of range for a {m.shape[0]}-port network")
    return np.abs(m[:, input_port]) ** 2


def _embed(r: float, i: int, j: int) -> np.ndarray:
    m = np.eye(3, dtype=complex)
    bs = beamsplitter(r)
    m[np.ix_([i, j], [i, j])] = bs
    return m


def tritter(r1: float, r2: float, r3: float) -> np.ndarray:
    """Three-port splitter built from splitters on ports (0,1), (0,2), (1,2).

    The product is taken in the written order ``B01(r1) @ B02(r2) @ B12(r3)``.
    """
    for k, r in enumerate((r1, r2, r3), start=1):
        _check_ratio(r, f"r{k}")
    return _embed(r1, 0, 1) @ _embed(r2, 0, 2) @ _embed(r3, 1, 2)


def _tritter_residual(r, target, port):
    return output_intensities(tritter(*np.clip(r, 0.0, 1.0)), port) - target


def _snap(x, target, port, reach=1e-5):
    """Pull coordinates stuck just inside a bound onto it when that helps."""
    x = np.clip(x, 0.0, 1.0)
    res = np.max(np.abs(_tritter_residual(x, target, port)))
    for k in range(3):
        for edge in (0.0, 1.0):
            if abs(x[k] - edge) < reach:
                trial = x.copy()
                trial[k] = edge
                r = np.max(np.abs(_tritter_residual(trial, target, port)))
                if r <= res:
                    x, res = trial, r
    return x


def solve_tritter_ratios(target_intensities: Sequence[float], input_port: int = 0,
                         n_starts: int = 16, seed: int = 0,
                         tol: float = SOLVER_TOL) -> tuple[float, float, float]:
    """Internal reflection coefficients reproducing ``target_intensities``.

    Deterministic multi-start least squares. Coefficients that do not
    influence the chosen input port are set to 0.

    Raises
    ------
    NoSolutionError
        If the targets cannot be reached by a lossless tritter; the best
        residual found is attached as ``residual``.
    """
    target = np.asarray(target_intensities, dtype=float)
    if target.shape != (3,):
        raise DomainError("exactly three target intensities are required")
    if np.any(target < 0) or not np.all(np.isfinite(target)):
        raise DomainError("target intensities must be finite and non-negative")
    if target.sum() > 1.0 + tol:
        raise NoSolutionError(f"targets sum to {target.sum():.12g} > 1", residual=target.sum() - 1.0)

    # r = sin^2(theta) keeps the search unbounded, so the optimizer can sit
    # exactly on a splitter that is fully transmitting or reflecting
    rng = np.random.default_rng(seed)
    starts = np.vstack([np.full(3, np.pi / 4), rng.uniform(0.0, np.pi / 2, size=(n_starts - 1, 3))])
    best = None
    for theta0 in starts:
        sol = least_squares(lambda th: _tritter_residual(np.sin(th) ** 2, target, input_port), theta0,
                            method="lm", xtol=1e-15, ftol=1e-15, gtol=1e-15, max_nfev=2_000)
        x = _snap(np.sin(sol.x) ** 2, target, input_port)
        res = float(np.max(np.abs(_tritter_residual(x, target, input_port))))
        if best is None or res < best[1]:
            best = (x, res)
        if res <= tol * 1e-3:
            break
    x, res = best
    if res > tol:
        raise NoSolutionError(f"no lossless tritter reaches {target.tolist()}; best residual {res:.3g}",
                              residual=res)
    for k in range(3):
        trial = x.copy()
        trial[k] = 0.0
        if np.max(np.abs(_tritter_residual(trial, target, input_port))) <= res + 1e-15:
            x = trial
    return tuple(float(v) for v in x)


def two_path_visibility(t_i: float, t_j: float) -> float:
    """Best-case fringe visibility of a folded two-arm interferometer.

    ``t_i`` and ``t_j`` are single-pass intensity efficiencies of the splitter
    orders feeding each arm. Two passes through the splitter make each
    returning field amplitude proportional to that efficiency.
    """
    if t_i < 0 or t_j < 0 or t_i > 1 or t_j > 1:
        raise DomainError("efficiencies must lie in [0, 1]")
    if t_i == 0 and t_j == 0:
        raise UndefinedVisibilityError("visibility undefined with both arms dark")
    return 2.0 * t_i * t_j / (t_i**2 + t_j**2)


def fringe_visibility(intensity_samples) -> float:
    """(Imax - Imin) / (Imax + Imin) over a sampled fringe."""
    x = np.asarray(intensity_samples, dtype=float)
    if x.size == 0:
        raise DomainError("no intensity samples")
    if np.any(x < 0):
        raise DomainError("intensities must be non-negative")
    hi, lo = x.max(), x.min()
    if hi == 0:
        raise UndefinedVisibilityError("all intensity samples are zero")
    return float((hi - lo) / (hi + lo))


def qber_from_visibility(v: float) -> float:
    if not 0.0 <= v <= 1.0:
        raise DomainError(f"visibility must lie in [0, 1], got {v}")
    return (1.0 - v) / 2.0
