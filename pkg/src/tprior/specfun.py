"""Special functions and seeded sampling primitives.

Digamma and trigamma are computed by shifting the argument upward with the
recurrences

    psi(x)  = psi(x + 1) - 1/x
    psi'(x) = psi'(x + 1) + 1/x**2

until x >= 10, then summing the Bernoulli asymptotic series. Both accept
scalars or arrays and return the same shape.

Random draws go through :class:`RngStream`, a path-addressed wrapper over
numpy's ``SeedSequence``: a stream is identified by ``(master_seed, path)``
and sibling streams can be created anywhere without coordination.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np
from scipy import special

from tprior.errors import DomainError

_SHIFT_TO = 10.0

# B_2, B_4, ..., B_16
_BERNOULLI_EVEN = (
    1.0 / 6.0,
    -1.0 / 30.0,
    1.0 / 42.0,
    -1.0 / 30.0,
    5.0 / 66.0,
    -691.0 / 2730.0,
    7.0 / 6.0,
    -3617.0 / 510.0,
)


def _as_positive(x, name: str = "x") -> np.ndarray:
    arr = np.asarray(x, dtype=float)
    if not np.all(arr > 0):  # also catches NaN
        raise DomainError(f"{name} must be > 0, got {x!r}")
    return arr


def _unwrap(arr: np.ndarray, like) -> float | np.ndarray:
    if np.ndim(like) == 0:
        return float(arr)
    return arr


def log_gamma(x):
    """Natural log of the gamma function for ``x > 0``."""
    arr = _as_positive(x)
    return _unwrap(special.gammaln(arr), x)


def digamma(x):
    """Digamma function psi(x) = d/dx ln Gamma(x) for ``x > 0``."""
    arr = _as_positive(x).copy()
    acc = np.zeros_like(arr)
    small = arr < _SHIFT_TO
    while np.any(small):
        acc[small] -= 1.0 / arr[small]
        arr[small] += 1.0
        small = arr < _SHIFT_TO
    inv2 = 1.0 / (arr * arr)
    tail = np.zeros_like(arr)
    power = inv2.copy()
    for k, b in enumerate(_BERNOULLI_EVEN, start=1):
        tail += b / (2 * k) * power
        power = power * inv2
    out = acc + np.log(arr) - 0.5 / arr - tail
    return _unwrap(out, x)


def trigamma(x):
    """Trigamma function psi'(x) for ``x > 0``."""
    arr = _as_positive(x).copy()
    acc = np.zeros_like(arr)
    small = arr < _SHIFT_TO
    while np.any(small):
        acc[small] += 1.0 / (arr[small] * arr[small])
        arr[small] += 1.0
        small = arr < _SHIFT_TO
    inv = 1.0 / arr
    inv2 = inv * inv
    tail = np.zeros_like(arr)
    power = inv2 * inv
    for b in _BERNOULLI_EVEN:
        tail += b * power
        power = power * inv2
    out = acc + inv + 0.5 * inv2 + tail
    return _unwrap(out, x)


@dataclass
class RngStream:
    """Reproducible random stream addressed by a master seed and an integer path.

    Two streams built from the same ``(master_seed, path)`` yield identical
    sequences; different paths give independent streams. Instances are
    stateful and should have a single owner.
    """

    master_seed: int
    path: tuple[int, ...] = ()
    generator: np.random.Generator = field(init=False, repr=False, compare=False)

    def __post_init__(self) -> None:
        if self.master_seed < 0 or self.master_seed >= 2**64:
            raise DomainError("master_seed must be a 64-bit unsigned integer")
        self.path = tuple(int(p) for p in self.path)
        if any(p < 0 for p in self.path):
            raise DomainError("path entries must be non-negative")
        seq = np.random.SeedSequence(self.master_seed, spawn_key=self.path)
        self.generator = np.random.Generator(np.random.PCG64(seq))

    def child(self, *indices: int) -> "RngStream":
        """Fresh stream at ``path + indices``; independent of this stream's state."""
        return RngStream(self.master_seed, self.path + tuple(indices))


@dataclass(frozen=True)
class DistSpec:
    """A parametric distribution that :func:`sample` knows how to draw from.

    Use the constructors :meth:`normal`, :meth:`chi_square`, :meth:`gamma`
    and :meth:`student_t`; parameters are validated on construction.
    """

    kind: str
    params: tuple[float, ...]

    _ARITY = {"normal": 2, "chi_square": 1, "gamma": 2, "student_t": 3}

    def __post_init__(self) -> None:
        if self.kind not in self._ARITY:
            raise DomainError(f"unknown distribution kind {self.kind!r}")
        if len(self.params) != self._ARITY[self.kind]:
            raise DomainError(f"{self.kind} takes {self._ARITY[self.kind]} parameters")
        p = self.params
        if not all(math.isfinite(v) for v in p):
            raise DomainError(f"non-finite parameter in {self}")
        if self.kind == "normal" and not p[1] >= 0:
            # variance 0 is a degenerate point mass, kept for testing
            raise DomainError("normal variance must be >= 0")
        if self.kind == "chi_square" and not p[0] > 0:
            raise DomainError("chi_square df must be > 0")
        if self.kind == "gamma" and not (p[0] > 0 and p[1] > 0):
            raise DomainError("gamma shape and rate must be > 0")
        if self.kind == "student_t" and not (p[0] > 0 and p[2] > 0):
            raise DomainError("student_t nu and sigma2 must be > 0")

    @classmethod
    def normal(cls, mean: float, variance: float) -> "DistSpec":
        return cls("normal", (float(mean), float(variance)))

    @classmethod
    def chi_square(cls, df: float) -> "DistSpec":
        return cls("chi_square", (float(df),))

    @classmethod
    def gamma(cls, shape: float, rate: float) -> "DistSpec":
        return cls("gamma", (float(shape), float(rate)))

    @classmethod
    def student_t(cls, nu: float, mu: float = 0.0, sigma2: float = 1.0) -> "DistSpec":
        return cls("student_t", (float(nu), float(mu), float(sigma2)))


def sample_n(dist: DistSpec, stream: RngStream, size: int | Sequence[int]) -> np.ndarray:
    """Draw an array of independent variates from ``dist``."""
    g = stream.generator
    p = dist.params
    if dist.kind == "normal":
        return p[0] + math.sqrt(p[1]) * g.standard_normal(size)
    if dist.kind == "chi_square":
        return g.chisquare(p[0], size)
    if dist.kind == "gamma":
        return g.gamma(p[0], 1.0 / p[1], size)
    # student_t as a normal scale mixture: z / sqrt(chi2_nu / nu)
    nu, mu, sigma2 = p
    z = g.standard_normal(size)
    c = g.chisquare(nu, size)
    return mu + math.sqrt(sigma2) * z / np.sqrt(c / nu)


def sample(dist: DistSpec, stream: RngStream) -> float:
    """Draw one variate from ``dist``."""
    return float(sample_n(dist, stream, 1)[0])
