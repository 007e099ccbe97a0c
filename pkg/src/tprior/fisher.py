"""Fisher information of the location-scale t model and checks built on it.

Parameters are ordered (nu, mu, sigma) and sigma (not sigma^2) is used
throughout, since the information matrix and the matching-prior vector are
naturally written in sigma.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from tprior.errors import DomainError, NumericalError
from tprior.priors import PriorSpec, bracket_p1, bracket_p2, log_prior_nu

NU, MU, SIGMA = 0, 1, 2


def _check(nu: float, sigma: float, n: int) -> None:
    if not nu > 0:
        raise DomainError(f"nu must be > 0, got {nu!r}")
    if not sigma > 0:
        raise DomainError(f"sigma must be > 0, got {sigma!r}")
    if n < 1:
        raise DomainError(f"n must be >= 1, got {n!r}")


@dataclass(frozen=True)
class FisherMatrix:
    entries: np.ndarray
    n: int
    at: tuple[float, float, float]

    def leading_minors(self) -> tuple[float, float, float]:
        e = self.entries
        return (
            float(e[0, 0]),
            float(np.linalg.det(e[:2, :2])),
            float(np.linalg.det(e)),
        )

    def block_det(self) -> float:
        """Determinant using the zero pattern: F22 * (F11 F33 - F13^2)."""
        e = self.entries
        return float(e[1, 1] * (e[0, 0] * e[2, 2] - e[0, 2] ** 2))


def fisher_matrix(nu: float, mu: float, sigma: float, n: int = 1) -> FisherMatrix:
    """Expected information of n iid t_nu(mu, sigma^2) observations."""
    _check(nu, sigma, n)
    f = np.zeros((3, 3))
    f[NU, NU] = n / 4.0 * bracket_p1(nu)
    f[MU, MU] = n * (nu + 1.0) / (sigma**2 * (nu + 3.0))
    f[SIGMA, SIGMA] = 2.0 * n * nu / (sigma**2 * (nu + 3.0))
    f[NU, SIGMA] = f[SIGMA, NU] = -2.0 * n / (sigma * (nu + 1.0) * (nu + 3.0))
    return FisherMatrix(f, n, (float(nu), float(mu), float(sigma)))


def h1_reference(nu: float, n: int = 1) -> float:
    """Schur complement of the (mu, sigma) block, computed numerically.

    This is the quantity whose square root gives the marginal reference
    prior for nu under the ordering {nu, mu, sigma}. It is independent of
    mu and sigma, so it is evaluated at (0, 1).
    """
    e = fisher_matrix(nu, 0.0, 1.0, n).entries
    block = e[1:, 1:]
    cross = e[0, 1:]
    try:
        solved = np.linalg.solve(block, cross)
    except np.linalg.LinAlgError as exc:  # cannot happen for valid inputs
        raise NumericalError(f"singular (mu, sigma) block at nu={nu}") from exc
    return float(e[0, 0] - cross @ solved)


# --- probability matching ------------------------------------------------------

def pm_D(nu: float, sigma: float, n: int, form: str = "simplified") -> float:
    """Determinant of the (sigma, nu) information block.

    ``form="two_term"`` uses the (nu+5) bracket minus the cross term;
    ``form="simplified"`` uses the (nu+3) bracket alone.
    """
    _check(nu, sigma, n)
    lead = n**2 * nu / (2.0 * sigma**2 * (nu + 3.0))
    if form == "simplified":
        return lead * bracket_p2(nu)
    if form == "two_term":
        return lead * bracket_p1(nu) - 4.0 * n**2 / (sigma**2 * (nu + 1.0) ** 2 * (nu + 3.0) ** 2)
    raise DomainError(f"unknown form {form!r}")


@dataclass(frozen=True)
class PmZeta:
    """Normalized gradient vector, ordered (mu, sigma, nu)."""

    components: tuple[float, float, float]
    at: tuple[float, float]
    n: int


def pm_zeta(nu: float, sigma: float, n: int = 1) -> PmZeta:
    """Closed-form zeta vector for the parameter of interest nu."""
    D = pm_D(nu, sigma, n)
    z2 = math.sqrt(2.0 * n) / (math.sqrt(D) * math.sqrt(nu) * (nu + 1.0) * math.sqrt(nu + 3.0))
    z3 = math.sqrt(2.0 * n * nu) / (math.sqrt(D) * sigma * math.sqrt(nu + 3.0))
    return PmZeta((0.0, z2, z3), (float(nu), float(sigma)), n)


def zeta_from_information(nu: float, sigma: float, n: int = 1) -> np.ndarray:
    """zeta = grad' I^-1 / sqrt(grad' I^-1 grad), by direct matrix inversion.

    Returned in (mu, sigma, nu) order to line up with :func:`pm_zeta`.
    """
    e = fisher_matrix(nu, 0.0, sigma, n).entries
    order = [MU, SIGMA, NU]
    info = e[np.ix_(order, order)]
    grad = np.array([0.0, 0.0, 1.0])
    row = np.linalg.solve(info, grad)  # I symmetric, so grad' I^-1 = (I^-1 grad)'
    return row / math.sqrt(grad @ row)


def _prior_sigma_form(prior: PriorSpec, nu: float, sigma: float) -> float:
    # p(sigma) = p(sigma^2) * 2 sigma, so (sigma^2)^-k becomes sigma^(1 - 2k)
    return sigma ** (1.0 - 2.0 * prior.sigma_power) * math.exp(log_prior_nu(prior, nu))


def pm_terms(
    nu: float, sigma: float, n: int = 1, h: float = 1e-4, prior: PriorSpec | None = None
) -> tuple[float, float, float, float]:
    """Product-rule pieces of the matching equation's divergence.

    Returns (dz2/dsigma * p, z2 * dp/dsigma, dz3/dnu * p, z3 * dp/dnu), each
    derivative by a central difference with relative step ``h``. The mu term
    vanishes identically (zeta_1 = 0 and nothing depends on mu).
    """
    prior = prior or PriorSpec(2)
    hs = h * sigma
    hn = h * nu

    def z(nu_, s_):
        return pm_zeta(nu_, s_, n).components

    def p(nu_, s_):
        return _prior_sigma_form(prior, nu_, s_)

    _, z2, z3 = z(nu, sigma)
    p0 = p(nu, sigma)
    dz2_ds = (z(nu, sigma + hs)[1] - z(nu, sigma - hs)[1]) / (2 * hs)
    dp_ds = (p(nu, sigma + hs) - p(nu, sigma - hs)) / (2 * hs)
    dz3_dn = (z(nu + hn, sigma)[2] - z(nu - hn, sigma)[2]) / (2 * hn)
    dp_dn = (p(nu + hn, sigma) - p(nu - hn, sigma)) / (2 * hn)
    return (dz2_ds * p0, z2 * dp_ds, dz3_dn * p0, z3 * dp_dn)


def pm_residual(
    nu: float, sigma: float, n: int = 1, h: float = 1e-4, prior: PriorSpec | None = None
) -> float:
    """Relative residual of the probability-matching differential equation.

    The divergence is divided by the largest product-rule piece, so a value
    near 0 means the pieces cancel and the prior is matching for nu.
    """
    _check(nu, sigma, n)
    terms = pm_terms(nu, sigma, n, h, prior)
    scale = max(abs(t) for t in terms)
    return abs(sum(terms)) / scale
