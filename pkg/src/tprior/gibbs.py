"""Data-augmented Gibbs sampler for (mu, sigma^2, nu, lambda_1..lambda_n).

The model is x_i | mu, sigma^2, lambda_i ~ N(mu, sigma^2 / lambda_i) with
nu lambda_i ~ chi^2_nu, so that marginally x_i ~ t_nu(mu, sigma^2). With a
prior (sigma^2)^-k p(nu) the full conditionals are

    mu       | .  ~ N(sum(lambda x) / sum(lambda), sigma^2 / sum(lambda))
    sigma^2  | .  ~ q / chi^2_{n + 2k - 2},   q = sum lambda (x - mu)^2
    lambda_i | .  ~ chi^2_{nu+1} / (nu + (x_i - mu)^2 / sigma^2)
    nu       | .  ∝ (nu/2)^{n nu/2} Gamma(nu/2)^-n
                    * exp((nu/2) (sum log lambda - sum lambda)) p(nu)

The nu conditional is sampled on the NuDomain grid (griddy Gibbs): masses
from the log-kernel times cell widths, then a uniform position inside the
chosen cell.
"""

from __future__ import annotations

import csv
import math
from dataclasses import asdict, dataclass, field
from functools import lru_cache
from pathlib import Path

import numpy as np
from scipy.special import logsumexp

from tprior.errors import DegenerateDataError, DomainError, NumericalError, TPriorError
from tprior.posterior import Dataset, cell_bounds
from tprior.priors import NuDomain, PriorSpec, log_prior_nu
from tprior.specfun import RngStream, log_gamma


@dataclass(frozen=True)
class GibbsConfig:
    iterations: int = 30000
    burn_in: int = 5000
    thin: int = 1
    nu_domain: NuDomain = field(default_factory=NuDomain)
    prior: PriorSpec = field(default_factory=lambda: PriorSpec(2))
    seed: int = 0
    fix_mu: float | None = None
    fix_sigma2: float | None = None
    fix_nu: float | None = None
    fix_lambda: bool = False
    keep_lambda: bool = False

    def __post_init__(self) -> None:
        if self.iterations < 1 or self.burn_in < 0 or self.burn_in >= self.iterations:
            raise DomainError("need 0 <= burn_in < iterations")
        if self.thin < 1:
            raise DomainError("thin must be >= 1")
        if self.fix_sigma2 is not None and not self.fix_sigma2 > 0:
            raise DomainError("fix_sigma2 must be > 0")
        if self.fix_nu is not None and not self.fix_nu > 0:
            raise DomainError("fix_nu must be > 0")

    def to_dict(self) -> dict:
        d = asdict(self)
        d["nu_domain"] = self.nu_domain.to_dict()
        d["prior"] = self.prior.to_dict()
        return d


@dataclass
class ChainState:
    mu: float
    sigma2: float
    nu: float
    lam: np.ndarray


@dataclass
class ChainDraws:
    iteration: np.ndarray
    mu: np.ndarray
    sigma2: np.ndarray
    nu: np.ndarray
    config: GibbsConfig
    lam: np.ndarray | None = None

    @property
    def kept(self) -> int:
        return int(self.nu.size)

    def to_csv(self, path: str | Path) -> None:
        with open(path, "w", newline="") as fh:
            w = csv.writer(fh, lineterminator="\n")
            w.writerow(["iter", "mu", "sigma2", "nu"])
            for row in zip(self.iteration, self.mu, self.sigma2, self.nu):
                w.writerow([int(row[0])] + [repr(float(v)) for v in row[1:]])


def update_mu(state: ChainState, data: Dataset, stream: RngStream) -> float:
    lam_sum = float(state.lam.sum())
    mean = float(np.dot(state.lam, data.values)) / lam_sum
    sd = math.sqrt(state.sigma2 / lam_sum)
    return mean + sd * float(stream.generator.standard_normal())


def update_sigma2(state: ChainState, data: Dataset, prior: PriorSpec, stream: RngStream) -> float:
    resid = data.values - state.mu
    q = float(np.dot(state.lam, resid * resid))
    if not q > 0:
        raise DegenerateDataError("all residuals are zero; sigma^2 has no information")
    # (sigma^2)^-k prior adds 2k - 2 degrees of freedom: n for k=1, n+1 for k=3/2
    df = data.n + 2.0 * prior.sigma_power - 2.0
    return q / float(stream.generator.chisquare(df))


def update_lambda(state: ChainState, data: Dataset, stream: RngStream) -> np.ndarray:
    r2 = (data.values - state.mu) ** 2 / state.sigma2
    c = stream.generator.chisquare(state.nu + 1.0, data.n)
    return c / (state.nu + r2)


@dataclass(frozen=True)
class _NuKernel:
    grid: np.ndarray
    bounds: np.ndarray
    base: np.ndarray  # nu-only part of the log-kernel plus log cell width


@lru_cache(maxsize=32)
def _nu_kernel(prior: PriorSpec, domain: NuDomain, n: int) -> _NuKernel:
    grid = domain.grid()
    bounds = cell_bounds(grid)
    half = grid / 2.0
    base = (
        n * half * np.log(half)
        - n * log_gamma(half)
        + log_prior_nu(prior, grid)
        + np.log(np.diff(bounds))
    )
    return _NuKernel(grid, bounds, base)


def nu_conditional_logits(lam: np.ndarray, prior: PriorSpec, domain: NuDomain) -> np.ndarray:
    """Unnormalized log cell masses of nu given lambda on the domain grid."""
    kern = _nu_kernel(prior, domain, int(lam.size))
    with np.errstate(divide="ignore"):
        s = float(np.sum(np.log(lam)) - np.sum(lam))
    return kern.base + 0.5 * kern.grid * s


def update_nu(state: ChainState, prior: PriorSpec, domain: NuDomain, stream: RngStream) -> float:
    kern = _nu_kernel(prior, domain, int(state.lam.size))
    logits = nu_conditional_logits(state.lam, prior, domain)
    top = float(np.max(logits))
    if not math.isfinite(top):
        raise NumericalError(
            "nu conditional underflowed everywhere; lambda in "
            f"[{state.lam.min():.3g}, {state.lam.max():.3g}], mean {state.lam.mean():.3g}"
        )
    w = np.exp(logits - logsumexp(logits))
    cdf = np.cumsum(w)
    cdf /= cdf[-1]
    u = float(stream.generator.random())
    k = int(np.searchsorted(cdf, u, side="right"))
    k = min(k, cdf.size - 1)
    lo = cdf[k - 1] if k > 0 else 0.0
    frac = (u - lo) / (cdf[k] - lo) if cdf[k] > lo else 0.5
    return float(kern.bounds[k] + frac * (kern.bounds[k + 1] - kern.bounds[k]))


def initial_state(data: Dataset, config: GibbsConfig) -> ChainState:
    """Median / scaled-MAD start, nu = 5, all lambda = 1; frozen values override."""
    x = data.values
    mu = float(np.median(x))
    mad = float(np.median(np.abs(x - mu))) / 0.6745
    sigma2 = mad * mad if mad > 0 else float(np.var(x))
    if not sigma2 > 0:
        raise DegenerateDataError("data have zero spread")
    dom = config.nu_domain
    nu = min(max(5.0, dom.nu_min), dom.nu_max)
    if config.fix_mu is not None:
        mu = float(config.fix_mu)
    if config.fix_sigma2 is not None:
        sigma2 = float(config.fix_sigma2)
    if config.fix_nu is not None:
        nu = float(config.fix_nu)
    return ChainState(mu, sigma2, nu, np.ones(data.n))


def run_chain(data: Dataset, config: GibbsConfig, chain: int = 0) -> ChainDraws:
    """Run one chain; scan order is lambda, mu, sigma^2, nu."""
    data.require_inference()
    stream = RngStream(config.seed, (chain,))
    state = initial_state(data, config)
    total = config.iterations
    keep_idx = np.arange(config.burn_in, total, config.thin)
    kept = keep_idx.size
    out_mu = np.empty(kept)
    out_s2 = np.empty(kept)
    out_nu = np.empty(kept)
    out_lam = np.empty((kept, data.n)) if config.keep_lambda else None
    j = 0
    for i in range(total):
        try:
            if not config.fix_lambda:
                state.lam = update_lambda(state, data, stream)
            if config.fix_mu is None:
                state.mu = update_mu(state, data, stream)
            if config.fix_sigma2 is None:
                state.sigma2 = update_sigma2(state, data, config.prior, stream)
            if config.fix_nu is None:
                state.nu = update_nu(state, config.prior, config.nu_domain, stream)
        except TPriorError as exc:
            raise type(exc)(f"iteration {i}: {exc}") from exc
        if j < kept and i == keep_idx[j]:
            out_mu[j] = state.mu
            out_s2[j] = state.sigma2
            out_nu[j] = state.nu
            if out_lam is not None:
                out_lam[j] = state.lam
            j += 1
    return ChainDraws(keep_idx + 1, out_mu, out_s2, out_nu, config, out_lam)
