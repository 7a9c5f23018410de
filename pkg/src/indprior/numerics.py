"""Special functions and seeded random streams.

Nothing in here knows about Bayes factors or surveys. The chi-square routines
go through the regularized lower incomplete gamma function, evaluated by its
power series below ``a + 1`` and by a Lentz continued fraction above.
"""
from __future__ import annotations

import math
import sys
from dataclasses import dataclass

import numpy as np

SEED_MAX = 2**64 - 1

_GAMMAINC_EPS = 1e-15
_GAMMAINC_MAXITER = 100_000
_TINY = sys.float_info.min / sys.float_info.epsilon


class DomainError(ValueError):
    """Argument outside the mathematical domain of a function."""


@dataclass(frozen=True)
class Tolerance:
    abs: float = 0.0
    rel: float = 0.0

    def __post_init__(self):
        if self.abs < 0 or self.rel < 0:
            raise ValueError("tolerances must be nonnegative")
        if self.abs == 0 and self.rel == 0:
            raise ValueError("at least one of abs, rel must be positive")

    def allows(self, got: float, want: float) -> bool:
        return abs(got - want) <= max(self.abs, self.rel * abs(want))


# --- special functions -------------------------------------------------------

def log1p_stable(x: float) -> float:
    if not x > -1:
        raise DomainError(f"log1p undefined for x={x!r} <= -1")
    return math.log1p(x)


def ln_gamma(x: float) -> float:
    if not x > 0:
        raise DomainError(f"ln_gamma requires x > 0, got {x!r}")
    return math.lgamma(x)


def ln_beta(a: float, b: float) -> float:
    if not (a > 0 and b > 0):
        raise DomainError(f"ln_beta requires a, b > 0, got ({a!r}, {b!r})")
    # sorted so that ln_beta(a, b) == ln_beta(b, a) bit for bit
    lo, hi = (a, b) if a <= b else (b, a)
    return math.lgamma(lo) + math.lgamma(hi) - math.lgamma(lo + hi)


def _log_prefactor(a: float, x: float) -> float:
    return -x + a * math.log(x) - math.lgamma(a)


def _gammainc_series(a: float, x: float) -> float:
    term = 1.0 / a
    total = term
    ap = a
    for _ in range(_GAMMAINC_MAXITER):
        ap += 1.0
        term *= x / ap
        total += term
        if abs(term) < abs(total) * _GAMMAINC_EPS:
            return total * math.exp(_log_prefactor(a, x))
    raise ArithmeticError(f"incomplete gamma series did not converge (a={a}, x={x})")


def _gammaincc_cfrac(a: float, x: float) -> float:
    # modified Lentz evaluation of the continued fraction for Q(a, x)
    b = x + 1.0 - a
    c = 1.0 / _TINY
    d = 1.0 / b
    h = d
    for i in range(1, _GAMMAINC_MAXITER):
        an = -i * (i - a)
        b += 2.0
        d = an * d + b
        if abs(d) < _TINY:
            d = _TINY
        c = b + an / c
        if abs(c) < _TINY:
            c = _TINY
        d = 1.0 / d
        delta = d * c
        h *= delta
        if abs(delta - 1.0) < _GAMMAINC_EPS:
            return math.exp(_log_prefactor(a, x)) * h
    raise ArithmeticError(f"incomplete gamma fraction did not converge (a={a}, x={x})")


def gammainc_lower(a: float, x: float) -> float:
    """Regularized lower incomplete gamma P(a, x)."""
    if not a > 0:
        raise DomainError(f"shape must be positive, got {a!r}")
    if x < 0:
        raise DomainError(f"x must be nonnegative, got {x!r}")
    if x == 0:
        return 0.0
    if math.isinf(x):
        return 1.0
    if x < a + 1.0:
        return min(1.0, _gammainc_series(a, x))
    return max(0.0, 1.0 - _gammaincc_cfrac(a, x))


def gammainc_upper(a: float, x: float) -> float:
    """Regularized upper incomplete gamma Q(a, x) = 1 - P(a, x), without cancellation."""
    if not a > 0:
        raise DomainError(f"shape must be positive, got {a!r}")
    if x < 0:
        raise DomainError(f"x must be nonnegative, got {x!r}")
    if x == 0:
        return 1.0
    if math.isinf(x):
        return 0.0
    if x < a + 1.0:
        return max(0.0, 1.0 - _gammainc_series(a, x))
    return min(1.0, _gammaincc_cfrac(a, x))


def _check_dof(k) -> int:
    if isinstance(k, bool) or int(k) != k or k < 1:
        raise DomainError(f"degrees of freedom must be a positive integer, got {k!r}")
    return int(k)


def chisq_cdf(x: float, k: int) -> float:
    k = _check_dof(k)
    if x < 0:
        raise DomainError(f"chi-square cdf needs x >= 0, got {x!r}")
    return gammainc_lower(0.5 * k, 0.5 * x)


def chisq_sf(x: float, k: int) -> float:
    k = _check_dof(k)
    if x < 0:
        raise DomainError(f"chi-square sf needs x >= 0, got {x!r}")
    return gammainc_upper(0.5 * k, 0.5 * x)


def chisq_quantile(p: float, k: int, width: float = 1e-12) -> float:
    """Inverse of :func:`chisq_cdf` by plain bisection.

    The bracket starts at ``[0, k + 40*sqrt(k) + 100]`` and is halved until it
    is narrower than ``width`` or stops shrinking in floating point.
    """
    k = _check_dof(k)
    if not 0.0 < p < 1.0:
        raise DomainError(f"quantile level must lie in (0, 1), got {p!r}")
    lo, hi = 0.0, k + 40.0 * math.sqrt(k) + 100.0
    while hi - lo > width:
        mid = 0.5 * (lo + hi)
        if mid <= lo or mid >= hi:
            break
        if chisq_cdf(mid, k) < p:
            lo = mid
        else:
            hi = mid
    return 0.5 * (lo + hi)


# --- random streams ----------------------------------------------------------

def check_seed(seed) -> int:
    if isinstance(seed, bool) or int(seed) != seed or not 0 <= seed <= SEED_MAX:
        raise ValueError(f"seed must be an integer in [0, 2**64), got {seed!r}")
    return int(seed)


def make_rng(seed: int, *stream: int) -> np.random.Generator:
    """PCG64 generator for ``seed``, optionally split into a numbered sub-stream.

    ``make_rng(s, i)`` and ``make_rng(s, j)`` are statistically independent for
    ``i != j`` and each is fully determined by its arguments, so replicate
    blocks can be handed to workers in any order.
    """
    ss = np.random.SeedSequence(check_seed(seed), spawn_key=tuple(int(i) for i in stream))
    return np.random.Generator(np.random.PCG64(ss))


def draw_normal(rng: np.random.Generator, mean: float, sd: float) -> float:
    if sd < 0:
        raise DomainError(f"sd must be nonnegative, got {sd!r}")
    z = rng.standard_normal()
    return mean + sd * z if sd > 0 else float(mean)


def draw_bernoulli(rng: np.random.Generator, p: float) -> int:
    if not 0.0 <= p <= 1.0:
        raise DomainError(f"p must be in [0, 1], got {p!r}")
    return int(rng.random() < p)
