"""One-way layout with known unit variance: Bayes factor of the all-zero-means
submodel against independent N(0, tau^2) group means.

``F`` is always oriented null over full, ``F = f2(x) / f1(x)``, so a large
``log F`` favours the (possibly false) submodel.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Sequence, Union

import numpy as np
from scipy.optimize import brentq

from .numerics import chisq_cdf, chisq_quantile, log1p_stable

LOG_2PI = math.log(2 * math.pi)


@dataclass(frozen=True)
class OneWayConfig:
    group_sizes: tuple[int, ...]
    tau2: float
    model_prior: tuple[float, float] = (0.5, 0.5)

    def __post_init__(self):
        sizes = tuple(int(n) for n in self.group_sizes)
        if not sizes:
            raise ValueError("need at least one group")
        if any(n < 1 or n != m for n, m in zip(sizes, self.group_sizes)):
            raise ValueError(f"group sizes must be positive integers, got {self.group_sizes!r}")
        object.__setattr__(self, "group_sizes", sizes)
        if not (self.tau2 >= 0 and math.isfinite(self.tau2)):
            raise ValueError(f"tau2 must be finite and >= 0, got {self.tau2!r}")
        p1, p2 = (float(p) for p in self.model_prior)
        if not (0 <= p1 <= 1 and 0 <= p2 <= 1 and math.isclose(p1 + p2, 1.0, abs_tol=1e-12)):
            raise ValueError(f"model prior must be two probabilities summing to 1, got {self.model_prior!r}")
        object.__setattr__(self, "model_prior", (p1, p2))

    @classmethod
    def balanced(cls, n: int, k: int, tau2: float, model_prior=(0.5, 0.5)) -> "OneWayConfig":
        return cls((n,) * k, tau2, model_prior)

    @property
    def k(self) -> int:
        return len(self.group_sizes)

    @property
    def n_total(self) -> int:
        return sum(self.group_sizes)

    @property
    def is_balanced(self) -> bool:
        return len(set(self.group_sizes)) == 1

    def common_n(self) -> int:
        if not self.is_balanced:
            raise ValueError(f"operation needs equal group sizes, got {self.group_sizes}")
        return self.group_sizes[0]


@dataclass(frozen=True)
class Fixed:
    """Deterministic group means."""
    mu: tuple[float, ...]

    def __post_init__(self):
        object.__setattr__(self, "mu", tuple(float(m) for m in self.mu))


@dataclass(frozen=True)
class IidNormal:
    """Group means drawn iid N(0, epsilon2), fresh for every replicate."""
    epsilon2: float

    def __post_init__(self):
        if not self.epsilon2 >= 0:
            raise ValueError(f"epsilon2 must be >= 0, got {self.epsilon2!r}")


EffectSpec = Union[Fixed, IidNormal]


def check_effect(cfg: OneWayConfig, eff: EffectSpec) -> None:
    if isinstance(eff, Fixed) and len(eff.mu) != cfg.k:
        raise ValueError(f"{len(eff.mu)} means given for {cfg.k} groups")


@dataclass(frozen=True)
class OneWaySufficient:
    group_sums: np.ndarray
    sum_sq: float | None = None

    def __post_init__(self):
        object.__setattr__(self, "group_sums", np.asarray(self.group_sums, dtype=float))

    @classmethod
    def from_groups(cls, groups: Sequence[Sequence[float]]) -> "OneWaySufficient":
        arrays = [np.asarray(g, dtype=float) for g in groups]
        return cls(np.array([a.sum() for a in arrays]), float(sum((a**2).sum() for a in arrays)))


@dataclass(frozen=True)
class BalancedAsymptotics:
    n: int
    a: float
    sigma2: float = field(default=None)

    def __post_init__(self):
        if self.sigma2 is None:
            object.__setattr__(self, "sigma2", float(self.n))
        if self.n < 1 or self.a < 0 or self.sigma2 < self.n * (1 - 1e-12):
            raise ValueError(f"invalid asymptotic parameters {self!r}")

    @classmethod
    def from_params(cls, n: int, tau2: float, epsilon2: float) -> "BalancedAsymptotics":
        return cls(n=n, a=n * tau2, sigma2=n * n * epsilon2 + n)

    @property
    def tau2(self) -> float:
        return self.a / self.n

    @property
    def epsilon2(self) -> float:
        return (self.sigma2 - self.n) / self.n**2


# --- simulation --------------------------------------------------------------

def simulate_group_sums(rng: np.random.Generator, cfg: OneWayConfig, eff: EffectSpec, size: int):
    """Draw ``size`` datasets; returns ``(T, sum_sq)`` with shapes (size, k) and (size,).

    Observations are generated one by one as ``mu_i + N(0, 1)`` and then reduced,
    never drawn from the law of the sums directly.
    """
    check_effect(cfg, eff)
    if isinstance(eff, Fixed):
        mu = np.broadcast_to(np.asarray(eff.mu), (size, cfg.k))
    else:
        mu = math.sqrt(eff.epsilon2) * rng.standard_normal((size, cfg.k))
    T = np.empty((size, cfg.k))
    sum_sq = np.zeros(size)
    if cfg.is_balanced:
        x = mu[:, :, None] + rng.standard_normal((size, cfg.k, cfg.group_sizes[0]))
        T[:] = x.sum(axis=2)
        sum_sq += (x**2).sum(axis=(1, 2))
    else:
        for i, n_i in enumerate(cfg.group_sizes):
            x = mu[:, i, None] + rng.standard_normal((size, n_i))
            T[:, i] = x.sum(axis=1)
            sum_sq += (x**2).sum(axis=1)
    return T, sum_sq


def simulate_dataset(rng: np.random.Generator, cfg: OneWayConfig, eff: EffectSpec) -> OneWaySufficient:
    T, sum_sq = simulate_group_sums(rng, cfg, eff, 1)
    return OneWaySufficient(T[0], float(sum_sq[0]))


# --- Bayes factor and densities ------------------------------------------------

def log_bf_from_sums(T, group_sizes, tau2: float):
    """Vectorized ``log F`` over the last axis of ``T``."""
    T = np.asarray(T, dtype=float)
    n = np.asarray(group_sizes, dtype=float)
    shrink = 1.0 + n * tau2
    return -np.sum(tau2 * T**2 / (2.0 * shrink), axis=-1) + 0.5 * np.sum(np.log1p(n * tau2))


def log_bayes_factor(data: OneWaySufficient, cfg: OneWayConfig) -> float:
    if data.group_sums.shape != (cfg.k,):
        raise ValueError(f"expected {cfg.k} group sums, got shape {data.group_sums.shape}")
    return float(log_bf_from_sums(data.group_sums, cfg.group_sizes, cfg.tau2))


def _need_sum_sq(data: OneWaySufficient) -> float:
    if data.sum_sq is None:
        raise ValueError("density evaluation needs sum_sq")
    return data.sum_sq


def log_density_model2(data: OneWaySufficient, cfg: OneWayConfig) -> float:
    """log f2(x): all observations iid N(0, 1)."""
    return -0.5 * cfg.n_total * LOG_2PI - 0.5 * _need_sum_sq(data)


def log_marginal_density_model1(data: OneWaySufficient, cfg: OneWayConfig) -> float:
    """log f1(x): group means integrated against independent N(0, tau2) priors."""
    sum_sq = _need_sum_sq(data)
    n = np.asarray(cfg.group_sizes, dtype=float)
    T = data.group_sums
    tau2 = cfg.tau2
    return float(
        -0.5 * cfg.n_total * LOG_2PI
        - 0.5 * np.sum(np.log1p(n * tau2))
        - 0.5 * sum_sq
        + np.sum(tau2 * T**2 / (2.0 * (1.0 + n * tau2)))
    )


def posterior_prob_model2(logF: float, cfg: OneWayConfig) -> float:
    """P(Model 2 | x) = pi2 F / (pi1 + pi2 F), evaluated as a logistic in log space."""
    p1, p2 = cfg.model_prior
    if p2 == 0:
        return 0.0
    if p1 == 0:
        return 1.0
    z = logF + math.log(p2) - math.log(p1)
    if z >= 0:
        return 1.0 / (1.0 + math.exp(-z))
    e = math.exp(z)
    return e / (1.0 + e)


# --- frequentist behaviour -----------------------------------------------------

def expected_log_bf(cfg: OneWayConfig, eff: EffectSpec) -> float:
    """Exact mean of log F for a balanced design.

    For ``IidNormal`` the expectation is also taken over the means, which puts
    ``E(T_i^2) = n^2 eps^2 + n``.
    """
    n = cfg.common_n()
    check_effect(cfg, eff)
    tau2, k = cfg.tau2, cfg.k
    if isinstance(eff, Fixed):
        sum_ET2 = n * k + n * n * sum(m * m for m in eff.mu)
    else:
        sum_ET2 = k * (n * n * eff.epsilon2 + n)
    return -tau2 * sum_ET2 / (2.0 * (1.0 + n * tau2)) + 0.5 * k * log1p_stable(n * tau2)


def slope_function(a: float) -> float:
    """log(1 + a) - a / (1 + a): the limit of 2 log F / k when all means are zero."""
    return log1p_stable(a) - a / (1.0 + a)


def asymptotic_slope(asym: BalancedAsymptotics) -> float:
    """Limit of ``2 log F / k`` as k grows with iid N(0, eps^2) means."""
    a = asym.a
    return log1p_stable(a) - a * (asym.sigma2 / asym.n) / (1.0 + a)


def critical_epsilon(n: int, tau2: float) -> float:
    """Mean spread below which F grows exponentially in favour of the null.

    The limiting slope is strictly decreasing in epsilon, so the root is
    bracketed by expanding the upper end until the slope turns negative.
    """
    if n < 1 or tau2 < 0:
        raise ValueError(f"need n >= 1 and tau2 >= 0, got n={n}, tau2={tau2}")
    if n * tau2 == 0:
        return 0.0

    def slope(eps):
        return asymptotic_slope(BalancedAsymptotics.from_params(n, tau2, eps * eps))

    hi = 1.0
    while slope(hi) >= 0:
        hi *= 2.0
    return brentq(slope, 0.0, hi, xtol=1e-15, rtol=4 * np.finfo(float).eps, maxiter=500)


def _tau2_for(asym: BalancedAsymptotics, tau2: float | None) -> float:
    if tau2 is None:
        tau2 = asym.tau2
    elif not math.isclose(asym.n * tau2, asym.a, rel_tol=1e-12, abs_tol=1e-300):
        raise ValueError(f"tau2={tau2} inconsistent with a={asym.a}, n={asym.n}")
    if not tau2 > 0:
        raise ValueError("the chi-square law of log F needs tau2 > 0")
    return tau2


def tail_prob_log_bf(t: float, k: int, asym: BalancedAsymptotics, tau2: float | None = None) -> float:
    """P(log F > k t) under iid N(0, eps^2) means.

    With ``Q = sum T_i^2 / sigma^2 ~ chi2_k``,
    ``log F = (k/2) log(1+a) - tau2 sigma^2 Q / (2 (1+a))``, so the event is
    ``Q < k (1+a) (log(1+a) - 2t) / (tau2 sigma^2)``.
    """
    tau2 = _tau2_for(asym, tau2)
    a = asym.a
    bound = k * (1.0 + a) * (log1p_stable(a) - 2.0 * t) / (tau2 * asym.sigma2)
    if bound <= 0:
        return 0.0
    return chisq_cdf(bound, k)


def median_log_bf(k: int, asym: BalancedAsymptotics, tau2: float | None = None) -> float:
    tau2 = _tau2_for(asym, tau2)
    a = asym.a
    return 0.5 * k * log1p_stable(a) - tau2 * asym.sigma2 * chisq_quantile(0.5, k) / (2.0 * (1.0 + a))


def median_curve(k_min: int, k_max: int, asym: BalancedAsymptotics, tau2: float | None = None):
    """List of ``(k, median log F)`` for every k in ``[k_min, k_max]``."""
    if not 1 <= k_min <= k_max:
        raise ValueError(f"need 1 <= k_min <= k_max, got {k_min}, {k_max}")
    return [(k, median_log_bf(k, asym, tau2)) for k in range(k_min, k_max + 1)]


def fit_line(xs, ys) -> tuple[float, float, float]:
    """Least-squares ``(slope, intercept, r_squared)``."""
    xs = np.asarray(xs, dtype=float)
    ys = np.asarray(ys, dtype=float)
    slope, intercept = np.polyfit(xs, ys, 1)
    resid = ys - (slope * xs + intercept)
    r2 = 1.0 - resid @ resid / np.sum((ys - ys.mean()) ** 2)
    return float(slope), float(intercept), float(r2)
