"""Grid posterior for nu under the standard t model, plus summaries.

With mu = 0 and sigma^2 = 1 fixed, the posterior of nu is one-dimensional
and is evaluated exactly (up to discretization) on a :class:`NuDomain` grid.
Each grid point owns the cell between the midpoints to its neighbours; the
cell widths double as trapezoid weights, so a log-spaced grid does not bias
the masses. Quantiles interpolate the cumulative mass linearly across cells.

:func:`quantile` and :func:`summarize` accept either a
:class:`DiscreteNuPosterior` or a plain array of draws.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from functools import lru_cache
from typing import Union

import numpy as np
from scipy.special import logsumexp

from tprior.errors import DomainError, NumericalError
from tprior.priors import NuDomain, PriorSpec, log_prior_nu
from tprior.specfun import log_gamma

_LOG_GAMMA_HALF = 0.5 * math.log(math.pi)


@dataclass(frozen=True)
class Dataset:
    values: np.ndarray
    label: str = ""

    def __post_init__(self) -> None:
        arr = np.asarray(self.values, dtype=float).ravel()
        if arr.size == 0:
            raise DomainError("dataset is empty")
        if not np.all(np.isfinite(arr)):
            raise DomainError("dataset contains non-finite values")
        arr.setflags(write=False)
        object.__setattr__(self, "values", arr)

    @property
    def n(self) -> int:
        return int(self.values.size)

    def require_inference(self) -> None:
        # the posterior of nu is proper only for n >= 2
        if self.n < 2:
            raise DomainError(f"nu inference needs n >= 2 observations, got {self.n}")


def log_lik_standard_t(nu, data: Dataset):
    """Log-likelihood of ``data`` under t_nu(0, 1); vectorized over ``nu``.

    Written as n[lnG((nu+1)/2) - lnG(nu/2) - lnG(1/2)] - (n/2) ln nu
    - ((nu+1)/2) sum log1p(x^2/nu), which is algebraically the usual form but
    avoids cancelling two O(n nu ln nu) terms at large nu.
    """
    arr = np.asarray(nu, dtype=float)
    if not np.all(arr > 0):
        raise DomainError(f"nu must be > 0, got {nu!r}")
    x2 = np.sort(data.values**2)  # fixed summation order: exact permutation invariance
    n = data.n
    flat = arr.ravel()
    s = np.log1p(x2[None, :] / flat[:, None]).sum(axis=1)
    out = (
        n * (log_gamma((flat + 1.0) / 2.0) - log_gamma(flat / 2.0) - _LOG_GAMMA_HALF)
        - 0.5 * n * np.log(flat)
        - 0.5 * (flat + 1.0) * s
    )
    if arr.ndim == 0:
        return float(out[0])
    return out.reshape(arr.shape)


def cell_bounds(grid: np.ndarray) -> np.ndarray:
    """Midpoints between neighbours, closed off by the grid end points."""
    grid = np.asarray(grid, dtype=float)
    if grid.size == 1:
        return np.array([grid[0], grid[0]])
    mids = 0.5 * (grid[1:] + grid[:-1])
    return np.concatenate([[grid[0]], mids, [grid[-1]]])


@dataclass(frozen=True)
class DiscreteNuPosterior:
    """Normalized posterior masses on a strictly increasing nu grid.

    ``log_weights`` is the unnormalized log density at each grid point and
    ``log_total`` the log of its trapezoid integral over the grid.
    """

    grid: np.ndarray
    log_weights: np.ndarray
    masses: np.ndarray
    cell_bounds: np.ndarray
    log_total: float = math.nan

    @classmethod
    def from_log_density(cls, grid, log_density) -> "DiscreteNuPosterior":
        grid = np.asarray(grid, dtype=float)
        logw = np.asarray(log_density, dtype=float)
        if grid.ndim != 1 or grid.shape != logw.shape:
            raise DomainError("grid and log density must be 1-D and the same length")
        if grid.size > 1 and not np.all(np.diff(grid) > 0):
            raise DomainError("grid must be strictly increasing")
        bounds = cell_bounds(grid)
        widths = np.diff(bounds)
        if grid.size == 1:
            widths = np.ones(1)
        with np.errstate(divide="ignore"):
            terms = logw + np.log(widths)
        finite = np.isfinite(terms)
        if not np.any(finite) or np.any(np.isnan(terms)) or np.any(terms == np.inf):
            raise NumericalError(
                "cannot normalize posterior: log weights span "
                f"[{np.nanmin(logw)}, {np.nanmax(logw)}]"
            )
        log_total = float(logsumexp(terms))
        masses = np.exp(terms - log_total)
        masses /= masses.sum()
        return cls(grid, logw, masses, bounds, log_total)

    def cdf_at_bounds(self) -> np.ndarray:
        c = np.concatenate([[0.0], np.cumsum(self.masses)])
        return c / c[-1]

    def cdf(self, x):
        """Piecewise-linear CDF implied by spreading each mass over its cell."""
        if self.grid.size == 1:
            return np.where(np.asarray(x) >= self.grid[0], 1.0, 0.0)
        return np.interp(x, self.cell_bounds, self.cdf_at_bounds())

    def ppf(self, p):
        p_arr = np.asarray(p, dtype=float)
        c = self.cdf_at_bounds()
        b = self.cell_bounds
        k = np.searchsorted(c, p_arr, side="left")
        k = np.clip(k, 1, c.size - 1)
        lo_c, hi_c = c[k - 1], c[k]
        frac = np.where(hi_c > lo_c, (p_arr - lo_c) / np.where(hi_c > lo_c, hi_c - lo_c, 1.0), 0.0)
        out = b[k - 1] + np.clip(frac, 0.0, 1.0) * (b[k] - b[k - 1])
        if p_arr.ndim == 0:
            return float(out)
        return out

    def mean(self) -> float:
        return float(np.dot(self.masses, self.grid))

    def variance(self) -> float:
        m = self.mean()
        return float(np.dot(self.masses, (self.grid - m) ** 2))

    def mode(self) -> float:
        return float(self.grid[int(np.argmax(self.log_weights))])


@lru_cache(maxsize=64)
def _prior_on_grid(spec: PriorSpec, domain: NuDomain) -> tuple[np.ndarray, np.ndarray]:
    grid = domain.grid()
    lp = log_prior_nu(spec, grid)
    grid.setflags(write=False)
    lp.setflags(write=False)
    return grid, lp


def grid_posterior(spec: PriorSpec, data: Dataset, domain: NuDomain | None = None) -> DiscreteNuPosterior:
    """p(nu | data) on the domain grid, for the standard t model."""
    data.require_inference()
    domain = domain or NuDomain()
    grid, lp = _prior_on_grid(spec, domain)
    logw = lp + log_lik_standard_t(grid, data)
    return DiscreteNuPosterior.from_log_density(grid, logw)


PostOrDraws = Union[DiscreteNuPosterior, np.ndarray, list]


def _draws(obj) -> np.ndarray:
    arr = np.asarray(obj, dtype=float).ravel()
    if arr.size == 0:
        raise DomainError("no draws to summarize")
    return arr


def quantile(obj: PostOrDraws, p):
    """Quantile of a grid posterior or of a sample.

    Samples use linear interpolation between order statistics at rank
    h = (m - 1) p + 1.
    """
    p_arr = np.asarray(p, dtype=float)
    if not np.all((p_arr > 0) & (p_arr < 1)):
        raise DomainError(f"p must lie in (0, 1), got {p!r}")
    if isinstance(obj, DiscreteNuPosterior):
        return obj.ppf(p)
    out = np.quantile(_draws(obj), p_arr, method="linear")
    if p_arr.ndim == 0:
        return float(out)
    return out


def mode_estimate(values) -> float:
    """Histogram mode with Freedman-Diaconis bin width.

    Returns the median of the observations in the most populated bin (ties go
    to the lowest bin). When the interquartile range is zero the most
    frequent value is returned instead.
    """
    x = _draws(values)
    if x.size == 1:
        return float(x[0])
    q25, q75 = np.quantile(x, [0.25, 0.75])
    width = 2.0 * (q75 - q25) * x.size ** (-1.0 / 3.0)
    lo, hi = float(x.min()), float(x.max())
    if width <= 0 or hi == lo:
        vals, counts = np.unique(x, return_counts=True)
        return float(vals[int(np.argmax(counts))])
    n_bins = min(int(math.ceil((hi - lo) / width)), 100_000)
    n_bins = max(n_bins, 1)
    counts, edges = np.histogram(x, bins=n_bins, range=(lo, hi))
    k = int(np.argmax(counts))
    if k == n_bins - 1:
        inside = x[(x >= edges[k]) & (x <= edges[k + 1])]
    else:
        inside = x[(x >= edges[k]) & (x < edges[k + 1])]
    return float(np.median(inside))


@dataclass(frozen=True)
class Summary:
    mean: float
    median: float
    mode: float
    variance: float
    equal_tail: tuple[float, float]
    level: float = 0.95

    def to_json(self) -> dict:
        return {
            "mean": self.mean,
            "median": self.median,
            "mode": self.mode,
            "var": self.variance,
            "ci": [self.equal_tail[0], self.equal_tail[1]],
            "level": self.level,
        }


def summarize(obj: PostOrDraws, level: float = 0.95) -> Summary:
    """Mean, median, mode, variance and equal-tail interval."""
    if not 0 < level < 1:
        raise DomainError(f"level must lie in (0, 1), got {level!r}")
    alpha = (1.0 - level) / 2.0
    if isinstance(obj, DiscreteNuPosterior):
        mean, var, mode = obj.mean(), obj.variance(), obj.mode()
        med, lo, hi = obj.ppf([0.5, alpha, 1.0 - alpha])
    else:
        x = _draws(obj)
        mean = float(x.mean())
        var = float(x.var(ddof=1)) if x.size > 1 else 0.0
        mode = mode_estimate(x)
        med, lo, hi = np.quantile(x, [0.5, alpha, 1.0 - alpha], method="linear")
    return Summary(float(mean), float(med), float(mode), max(float(var), 0.0), (float(lo), float(hi)), level)
