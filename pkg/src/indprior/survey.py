"""Finite-population Bernoulli survey under a hierarchical Beta prior.

Units ``1..B`` carry success probabilities ``theta_j`` drawn iid from a Beta
with mean ``psi`` and variance ``eta``. The hyperprior is ``psi ~
Beta(alpha0, beta0)`` and, given ``psi``, ``eta`` uniform on ``(0, psi(1-psi))``.
A sample ``J`` is observed, one Bernoulli outcome per sampled unit.

Unit indices are 1-based throughout.
"""
from __future__ import annotations

import enum
import json
import math
import warnings
from dataclasses import dataclass, field
from typing import Iterable, Mapping

import numpy as np

from .numerics import DomainError, draw_bernoulli


class ImproperPosteriorWarning(UserWarning):
    """The improper psi prior gives an improper posterior when S is 0 or |J|."""


class EtaPrior(enum.Enum):
    UNIFORM = "uniform"


@dataclass(frozen=True)
class HyperPrior:
    alpha0: float = 1.0
    beta0: float = 1.0
    improper: bool = False
    eta_prior: EtaPrior = EtaPrior.UNIFORM

    def __post_init__(self):
        if not (self.alpha0 > 0 and self.beta0 > 0):
            raise ValueError("alpha0 and beta0 must be positive; use improper=True for the limit")
        if self.eta_prior is not EtaPrior.UNIFORM:
            raise NotImplementedError(f"closed forms exist only for the uniform eta prior")

    @property
    def effective(self) -> tuple[float, float]:
        """Hyperprior parameters actually used, (0, 0) in the improper limit."""
        return (0.0, 0.0) if self.improper else (self.alpha0, self.beta0)


@dataclass(frozen=True)
class BetaMeanVar:
    psi: float
    eta: float

    def __post_init__(self):
        if not 0 < self.psi < 1:
            raise ValueError(f"psi must be in (0, 1), got {self.psi!r}")
        if not 0 < self.eta < self.psi * (1 - self.psi):
            raise ValueError(f"eta must be in (0, psi(1-psi)) = (0, {self.psi * (1 - self.psi)}), got {self.eta!r}")


def beta_from_mean_var(mv: BetaMeanVar) -> tuple[float, float]:
    psi, eta = mv.psi, mv.eta
    total = psi * (1 - psi) / eta - 1
    alpha = psi * psi * (1 - psi) / eta - psi
    beta = (1 - psi) * (psi - psi * psi - eta) / eta
    if not (total > 0 and alpha > 0 and beta > 0):
        raise DomainError(f"no proper Beta with mean {psi} and variance {eta}")
    return alpha, beta


def mean_var_from_beta(alpha: float, beta: float) -> BetaMeanVar:
    if not (alpha > 0 and beta > 0):
        raise DomainError("alpha and beta must be positive")
    s = alpha + beta
    psi = alpha / s
    return BetaMeanVar(psi, psi * (1 - psi) / (s + 1))


def marginal_y_given_hyper(y: int, mv: BetaMeanVar) -> float:
    """P(Y = y | psi, eta) with theta integrated out; free of eta."""
    if y not in (0, 1):
        raise ValueError(f"y must be 0 or 1, got {y!r}")
    return mv.psi if y == 1 else 1.0 - mv.psi


@dataclass(frozen=True)
class SurveyData:
    B: int
    J: tuple[int, ...]
    Y: tuple[int, ...]
    design_prob: float | None = None

    def __post_init__(self):
        J = tuple(int(j) for j in self.J)
        Y = tuple(int(y) for y in self.Y)
        if self.B < 1:
            raise ValueError(f"B must be >= 1, got {self.B}")
        if not J:
            raise ValueError("the sample J must be nonempty")
        if len(set(J)) != len(J):
            raise ValueError("duplicate indices in J")
        if len(Y) != len(J):
            raise ValueError(f"{len(Y)} outcomes for {len(J)} sampled units")
        if any(not 1 <= j <= self.B for j in J):
            raise ValueError(f"indices in J must lie in 1..{self.B}")
        if any(y not in (0, 1) for y in Y):
            raise ValueError("outcomes must be 0 or 1")
        if self.design_prob is not None and not 0 <= self.design_prob <= 1:
            raise ValueError(f"design probability must be in [0, 1], got {self.design_prob}")
        order = sorted(range(len(J)), key=J.__getitem__)
        object.__setattr__(self, "J", tuple(J[i] for i in order))
        object.__setattr__(self, "Y", tuple(Y[i] for i in order))

    @classmethod
    def from_mapping(cls, B: int, J: Iterable[int], Y: Mapping[int, int], design_prob=None) -> "SurveyData":
        J = list(J)
        extra = set(Y) - set(J)
        if extra:
            raise ValueError(f"outcomes given for units outside J: {sorted(extra)}")
        missing = [j for j in J if j not in Y]
        if missing:
            raise ValueError(f"no outcome for sampled units {missing}")
        return cls(B, tuple(J), tuple(Y[j] for j in J), design_prob)

    @property
    def size(self) -> int:
        return len(self.J)

    @property
    def S(self) -> int:
        return sum(self.Y)

    def outcome(self, j: int) -> int | None:
        try:
            return self.Y[self.J.index(j)]
        except ValueError:
            return None

    def to_json(self) -> str:
        doc = {"B": self.B, "J": list(self.J), "Y": {str(j): y for j, y in zip(self.J, self.Y)}}
        if self.design_prob is not None:
            doc["design_prob"] = self.design_prob
        return json.dumps(doc, indent=2, sort_keys=True)

    @classmethod
    def from_json(cls, text: str) -> "SurveyData":
        doc = json.loads(text)
        unknown = set(doc) - {"B", "J", "Y", "design_prob"}
        if unknown:
            raise ValueError(f"unknown keys {sorted(unknown)}")
        try:
            Y = {int(j): int(y) for j, y in doc["Y"].items()}
            return cls.from_mapping(int(doc["B"]), [int(j) for j in doc["J"]], Y, doc.get("design_prob"))
        except KeyError as exc:
            raise ValueError(f"missing key {exc}") from None


@dataclass(frozen=True)
class ThetaVector:
    theta: np.ndarray = field(repr=False)

    def __post_init__(self):
        th = np.asarray(self.theta, dtype=float)
        if th.ndim != 1 or th.size == 0 or np.any((th < 0) | (th > 1)):
            raise ValueError("theta must be a nonempty vector of probabilities")
        object.__setattr__(self, "theta", th)

    @property
    def B(self) -> int:
        return self.theta.size

    @property
    def psi_B(self) -> float:
        return float(self.theta.mean())


# --- estimators ----------------------------------------------------------------

def _warn_if_improper(data: SurveyData, hp: HyperPrior) -> None:
    if hp.improper and data.S in (0, data.size):
        warnings.warn(
            f"improper posterior for psi with S={data.S}, |J|={data.size}; reporting S/|J|",
            ImproperPosteriorWarning,
            stacklevel=3,
        )


def psi_posterior_params(data: SurveyData, hp: HyperPrior) -> tuple[float, float]:
    a0, b0 = hp.effective
    _warn_if_improper(data, hp)
    return data.S + a0, data.size - data.S + b0


def psi_hat(data: SurveyData, hp: HyperPrior) -> float:
    """Posterior mean of psi."""
    if hp.improper:
        _warn_if_improper(data, hp)
        return data.S / data.size
    return (data.S + hp.alpha0) / (data.size + hp.alpha0 + hp.beta0)


def ht_estimator(data: SurveyData) -> float:
    return data.S / data.size


def posterior_theta_mean(j: int, data: SurveyData, hp: HyperPrior) -> float:
    """E(theta_j | Y, J): psi_hat off the sample, midpoint of psi_hat and Y_j on it."""
    if not 1 <= j <= data.B:
        raise ValueError(f"unit {j} outside 1..{data.B}")
    ph = psi_hat(data, hp)
    y = data.outcome(j)
    return ph if y is None else ph + (y - ph) / 2


def bayes_psi_B(data: SurveyData, hp: HyperPrior) -> float:
    """E(psi_B | Y, J), the posterior mean of the finite-population average."""
    ph = psi_hat(data, hp)
    return ph + (data.size / data.B) * (ht_estimator(data) - ph) / 2


def correction_bound(hp: HyperPrior, B: int) -> float:
    """Envelope on |bayes_psi_B - psi_hat|, of order 1/B."""
    if B < 1:
        raise ValueError(f"B must be >= 1, got {B}")
    a0, b0 = hp.effective
    return a0 / (2 * B) + (a0 + b0) / (2 * B)


def ht_variance(theta: ThetaVector, J: Iterable[int]) -> float:
    """Variance of S/|J| over Bernoulli outcomes with theta and J held fixed."""
    idx = np.asarray(list(J), dtype=int) - 1
    if idx.size == 0:
        raise ValueError("J must be nonempty")
    th = theta.theta[idx]
    return float(np.sum(th * (1 - th)) / idx.size**2)


# --- simulation ----------------------------------------------------------------

def srs_log_design_prob(B: int, n: int) -> float:
    return -(math.lgamma(B + 1) - math.lgamma(n + 1) - math.lgamma(B - n + 1))


def simulate_survey(rng: np.random.Generator, theta: ThetaVector, sample_size: int) -> SurveyData:
    """Simple random sample without replacement, then one Bernoulli draw per unit."""
    B = theta.B
    if not 1 <= sample_size <= B:
        raise ValueError(f"sample size must be in 1..{B}, got {sample_size}")
    J = np.sort(rng.choice(B, size=sample_size, replace=False)) + 1
    Y = [draw_bernoulli(rng, theta.theta[j - 1]) for j in J]
    return SurveyData(B, tuple(J.tolist()), tuple(Y), math.exp(srs_log_design_prob(B, sample_size)))


def simulate_hierarchical(rng: np.random.Generator, B: int, mv: BetaMeanVar) -> ThetaVector:
    alpha, beta = beta_from_mean_var(mv)
    return ThetaVector(rng.beta(alpha, beta, size=B))
