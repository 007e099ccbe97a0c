"""Priors on the degrees of freedom nu, and their joint forms with sigma^2.

Six priors are supported, identified by ``PriorSpec.id``:

1. reference prior, sqrt of the (nu+5) trigamma bracket
2. reference / probability-matching prior, sqrt of the (nu+3) bracket
3. independence Jeffreys: prior 2 times sqrt(nu/(nu+3))
4. Jeffreys rule: prior 3 times sqrt((nu+1)/(nu+3)), with sigma^-3
5. exponential exp(-xi nu)
6. hierarchical 2 nu d / (nu + d)^3

Log-densities are returned up to an additive constant.

Both brackets are differences of two nearly equal trigamma values minus a
rational term. For large nu they decay like nu**-4 while each trigamma is of
order 1/nu, so the direct difference loses about 3*log10(nu) digits. Above
``BRACKET_CROSSOVER`` the brackets are evaluated from their asymptotic
expansion in u = 1/nu, whose coefficients are built exactly (rational
arithmetic) from the trigamma Bernoulli series at import time.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction

import numpy as np

from tprior.errors import DomainError, NumericalError
from tprior.specfun import trigamma

BRACKET_CROSSOVER = 20.0
_SERIES_ORDER = 40


# --- exact power-series helpers in u = 1/nu --------------------------------

def _mul(a: list[Fraction], b: list[Fraction], order: int) -> list[Fraction]:
    out = [Fraction(0)] * (order + 1)
    for i, ai in enumerate(a[: order + 1]):
        if ai == 0:
            continue
        for j, bj in enumerate(b[: order + 1 - i]):
            out[i + j] += ai * bj
    return out


def _inv(a: list[Fraction], order: int) -> list[Fraction]:
    # a[0] must be nonzero
    out = [Fraction(0)] * (order + 1)
    out[0] = 1 / a[0]
    for k in range(1, order + 1):
        s = sum(a[j] * out[k - j] for j in range(1, min(k, len(a) - 1) + 1))
        out[k] = -s / a[0]
    return out


def _bernoulli_even(count: int) -> list[Fraction]:
    """B_2, B_4, ..., B_{2*count} via the Akiyama-Tanigawa algorithm."""
    top = 2 * count
    bern = []
    row = [Fraction(0)] * (top + 1)
    for m in range(top + 1):
        row[m] = Fraction(1, m + 1)
        for j in range(m, 0, -1):
            row[j - 1] = j * (row[j - 1] - row[j])
        bern.append(row[0])
    return [bern[2 * k] for k in range(1, count + 1)]


def _bracket_series(kind: int, order: int = _SERIES_ORDER) -> list[Fraction]:
    # trigamma(x) ~ sum_j a_j x**-j
    a = [Fraction(0)] * (order + 1)
    a[1] = Fraction(1)
    a[2] = Fraction(1, 2)
    for k, b in enumerate(_bernoulli_even(order // 2), start=1):
        if 2 * k + 1 <= order:
            a[2 * k + 1] = b
    one_plus_u = [Fraction(1), Fraction(1)]
    inv_1pu = _inv(one_plus_u, order)
    diff = [Fraction(0)] * (order + 1)
    power = [Fraction(1)] + [Fraction(0)] * order  # (1+u)**-j
    for j in range(1, order + 1):
        power = _mul(power, inv_1pu, order)
        if a[j] == 0:
            continue
        scale = a[j] * 2**j
        # x = nu/2 contributes 2^j u^j; x = (nu+1)/2 contributes 2^j u^j (1+u)^-j
        diff[j] += scale
        for m in range(0, order + 1 - j):
            diff[j + m] -= scale * power[m]
    if kind == 1:
        # 2u^2 (1+5u) / ((1+u)(1+3u))
        num = [Fraction(0), Fraction(0), Fraction(2), Fraction(10)]
        den = _mul([Fraction(1), Fraction(1)], [Fraction(1), Fraction(3)], order)
    else:
        # 2u^2 (1+3u) / (1+u)^2
        num = [Fraction(0), Fraction(0), Fraction(2), Fraction(6)]
        den = [Fraction(1), Fraction(2), Fraction(1)]
    rational = _mul(num, _inv(den, order), order)
    return [d - r for d, r in zip(diff, rational)]


_SERIES = {k: np.array([float(c) for c in _bracket_series(k)]) for k in (1, 2)}


def bracket_asymptotic(kind: int, nu):
    """Asymptotic expansion of the bracket in powers of 1/nu (valid for large nu)."""
    u = 1.0 / np.asarray(nu, dtype=float)
    coeffs = _SERIES[kind]
    acc = np.zeros_like(u)
    for c in coeffs[::-1]:
        acc = acc * u + c
    return acc


def leading_tail_constant(kind: int) -> float:
    """Limit of nu**4 * bracket as nu -> infinity."""
    return float(_SERIES[kind][4])


def _rational(kind: int, nu: np.ndarray) -> np.ndarray:
    if kind == 1:
        return 2.0 * (nu + 5.0) / (nu * (nu + 1.0) * (nu + 3.0))
    return 2.0 * (nu + 3.0) / (nu * (nu + 1.0) ** 2)


def _bracket(kind: int, nu):
    arr = np.asarray(nu, dtype=float)
    if not np.all(arr > 0):
        raise DomainError(f"nu must be > 0, got {nu!r}")
    out = np.empty_like(arr)
    big = arr > BRACKET_CROSSOVER
    small = ~big
    if np.any(small):
        x = arr[small]
        out[small] = trigamma(x / 2.0) - trigamma((x + 1.0) / 2.0) - _rational(kind, x)
    if np.any(big):
        out[big] = bracket_asymptotic(kind, arr[big])
    if not np.all(out > 0):
        raise NumericalError(f"bracket_p{kind} lost positivity at nu={arr[~(out > 0)]}")
    if np.ndim(nu) == 0:
        return float(out)
    return out


def bracket_p1(nu):
    """psi'(nu/2) - psi'((nu+1)/2) - 2(nu+5)/(nu(nu+1)(nu+3))."""
    return _bracket(1, nu)


def bracket_p2(nu):
    """psi'(nu/2) - psi'((nu+1)/2) - 2(nu+3)/(nu(nu+1)^2)."""
    return _bracket(2, nu)


@dataclass(frozen=True)
class PriorSpec:
    """One of the six priors; ``xi`` is used by prior 5 and ``d`` by prior 6."""

    id: int
    xi: float = 0.1
    d: float = 1.2

    def __post_init__(self) -> None:
        if self.id not in range(1, 7):
            raise DomainError(f"prior id must be in 1..6, got {self.id}")
        if not self.xi > 0 or not self.d > 0:
            raise DomainError("xi and d must be > 0")

    def to_dict(self) -> dict:
        return {"id": self.id, "xi": self.xi, "d": self.d}

    @classmethod
    def from_dict(cls, obj: dict) -> "PriorSpec":
        return cls(int(obj["id"]), float(obj.get("xi", 0.1)), float(obj.get("d", 1.2)))

    @property
    def sigma_power(self) -> float:
        """Exponent k in the sigma^2 factor (sigma^2)^-k of the joint prior."""
        return 1.5 if self.id == 4 else 1.0


@dataclass(frozen=True)
class NuDomain:
    """Truncated grid of nu values on which posteriors are evaluated."""

    nu_min: float = 0.01
    nu_max: float = 1000.0
    n_points: int = 2000
    spacing: str = "logarithmic"

    def __post_init__(self) -> None:
        if not 0 < self.nu_min < self.nu_max:
            raise DomainError("need 0 < nu_min < nu_max")
        if self.n_points < 2:
            raise DomainError("n_points must be >= 2")
        if self.spacing not in ("linear", "logarithmic"):
            raise DomainError(f"unknown spacing {self.spacing!r}")

    def grid(self) -> np.ndarray:
        if self.spacing == "linear":
            return np.linspace(self.nu_min, self.nu_max, self.n_points)
        return np.geomspace(self.nu_min, self.nu_max, self.n_points)

    def to_dict(self) -> dict:
        return {
            "nu_min": self.nu_min,
            "nu_max": self.nu_max,
            "n_points": self.n_points,
            "spacing": self.spacing,
        }


def log_prior_nu(spec: PriorSpec, nu):
    """Log of p_i(nu) up to an additive constant; vectorized over ``nu``."""
    arr = np.asarray(nu, dtype=float)
    if not np.all(arr > 0):
        raise DomainError(f"nu must be > 0, got {nu!r}")
    if spec.id == 1:
        out = 0.5 * np.log(bracket_p1(arr))
    elif spec.id in (2, 3, 4):
        out = 0.5 * np.log(bracket_p2(arr))
        if spec.id >= 3:
            out = out + 0.5 * np.log(arr / (arr + 3.0))
        if spec.id == 4:
            out = out + 0.5 * np.log((arr + 1.0) / (arr + 3.0))
    elif spec.id == 5:
        out = -spec.xi * arr
    else:
        d = spec.d
        out = np.log(2.0 * arr * d) - 3.0 * np.log(arr + d)
    if np.ndim(nu) == 0:
        return float(out)
    return out


def log_prior_joint(spec: PriorSpec, nu, mu: float, sigma2: float):
    """Log joint prior of (nu, mu, sigma^2); flat in mu."""
    if not sigma2 > 0:
        raise DomainError(f"sigma2 must be > 0, got {sigma2!r}")
    return log_prior_nu(spec, nu) - spec.sigma_power * math.log(sigma2)
