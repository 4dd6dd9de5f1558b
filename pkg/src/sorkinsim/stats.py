"""Histograms, normal fits and summary statistics for kappa samples."""
from __future__ import annotations

import enum
import math
import warnings
from dataclasses import dataclass

import numpy as np
from scipy.optimize import OptimizeWarning, curve_fit

from .errors import DomainError, IllConditionedError

MIN_BINS = 10


class FitMethod(str, enum.Enum):
    MOMENTS_ON_DATA = "moments"
    LEAST_SQUARES_ON_HISTOGRAM = "histogram_lsq"


@dataclass(frozen=True)
class Histogram:
    bin_edges: np.ndarray
    counts: np.ndarray

    def __post_init__(self):
        edges = np.asarray(self.bin_edges, dtype=float)
        counts = np.asarray(self.counts, dtype=np.int64)
        if edges.ndim != 1 or counts.shape != (edges.size - 1,):
            raise DomainError("need len(counts) == len(bin_edges) - 1")
        if np.any(np.diff(edges) <= 0):
            raise DomainError("bin edges must be strictly ascending")
        if np.any(counts < 0):
            raise DomainError("bin counts must be non-negative")
        object.__setattr__(self, "bin_edges", edges)
        object.__setattr__(self, "counts", counts)

    @property
    def centers(self) -> np.ndarray:
        return 0.5 * (self.bin_edges[1:] + self.bin_edges[:-1])

    @property
    def total(self) -> int:
        return int(self.counts.sum())


@dataclass(frozen=True)
class NormalFit:
    mu: float
    sigma: float
    method: FitMethod
    n: int

    def as_dict(self) -> dict:
        return {"mu": self.mu, "sigma": self.sigma, "method": self.method.value, "n": self.n}


def default_bin_count(data) -> int:
    """Freedman-Diaconis bin count, never fewer than ``MIN_BINS``."""
    x = np.asarray(data, dtype=float)
    span = x.max() - x.min()
    iqr = np.subtract(*np.percentile(x, [75, 25]))
    if span == 0 or iqr == 0:
        return MIN_BINS
    width = 2.0 * iqr / np.cbrt(x.size)
    return max(MIN_BINS, int(math.ceil(span / width)))


def build_histogram(data, n_bins: int | None = None) -> Histogram:
    """Equal-width, right-closed bins spanning [min, max].

    Each bin holds values in ``(left, right]``; the minimum goes to the first
    bin. Without ``n_bins`` a Freedman-Diaconis count is used.
    """
    x = np.asarray(data, dtype=float).ravel()
    if x.size == 0:
        raise DomainError("cannot histogram empty data")
    if not np.all(np.isfinite(x)):
        raise DomainError("data must be finite")
    if n_bins is None:
        n_bins = default_bin_count(x)
    if n_bins < 1:
        raise DomainError("n_bins must be >= 1")
    lo, hi = float(x.min()), float(x.max())
    if hi == lo:
        lo, hi = lo - 0.5, hi + 0.5
    edges = np.linspace(lo, hi, n_bins + 1)
    # bins are (e_k, e_k+1]; the first bin also takes the minimum
    idx = np.clip(np.searchsorted(edges, x, side="left") - 1, 0, n_bins - 1)
    return Histogram(edges, np.bincount(idx, minlength=n_bins))


def _gauss(x, amplitude, mu, sigma):
    return amplitude * np.exp(-0.5 * ((x - mu) / sigma) ** 2)


def _fit_histogram(hist: Histogram, poisson_weights: bool) -> NormalFit:
    nonzero = hist.counts > 0
    if nonzero.sum() < 3:
        raise IllConditionedError("a histogram fit needs at least three occupied bins")
    x, y = hist.centers, hist.counts.astype(float)
    w = y / y.sum()
    mu0 = float(np.sum(w * x))
    sigma0 = float(np.sqrt(np.sum(w * (x - mu0) ** 2))) or float(hist.bin_edges[1] - hist.bin_edges[0])
    sigma = np.sqrt(np.maximum(y, 1.0)) if poisson_weights else None
    try:
        with warnings.catch_warnings():
            # the parameter covariance is not used
            warnings.simplefilter("ignore", OptimizeWarning)
            popt, _ = curve_fit(_gauss, x, y, p0=[y.max(), mu0, sigma0], sigma=sigma, maxfev=10_000)
    except RuntimeError as exc:
        raise IllConditionedError(f"histogram fit did not converge: {exc}") from None
    return NormalFit(float(popt[1]), float(abs(popt[2])), FitMethod.LEAST_SQUARES_ON_HISTOGRAM, hist.total)


def fit_normal(data=None, method: FitMethod | str = FitMethod.MOMENTS_ON_DATA, *, histogram: Histogram | None = None,
               n_bins: int | None = None, poisson_weights: bool = False) -> NormalFit:
    """Normal distribution parameters of kappa samples.

    ``moments`` uses the sample mean and corrected standard deviation.
    ``histogram_lsq`` fits a Gaussian to bin counts against bin centres by
    least squares (unweighted unless ``poisson_weights``); pass either raw
    ``data`` (binned with ``n_bins``) or a ready ``histogram``.
    """
    method = FitMethod(method)
    if method is FitMethod.MOMENTS_ON_DATA:
        if data is None:
            raise DomainError("the moments method needs raw data")
        x = np.asarray(data, dtype=float).ravel()
        if x.size < 2 or np.all(x == x[0]):
            raise IllConditionedError("need at least two distinct values; sigma is undefined")
        return NormalFit(float(x.mean()), float(x.std(ddof=1)), method, int(x.size))
    if histogram is None:
        if data is None:
            raise DomainError("give data or a histogram")
        x = np.asarray(data, dtype=float).ravel()
        if x.size < 2 or np.all(x == x[0]):
            raise IllConditionedError("need at least two distinct values; sigma is undefined")
        histogram = build_histogram(x, n_bins)
    return _fit_histogram(histogram, poisson_weights)


@dataclass(frozen=True)
class Summary:
    mean: float
    std: float
    stderr: float
    n: int


def summary(data) -> Summary:
    x = np.asarray(data, dtype=float).ravel()
    if x.size < 2:
        raise DomainError("summary needs at least two values")
    std = float(x.std(ddof=1))
    return Summary(float(x.mean()), std, std / math.sqrt(x.size), int(x.size))
