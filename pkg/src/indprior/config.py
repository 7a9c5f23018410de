"""Experiment configuration files.

A config is a TOML document with up to three tables::

    [run]
    seed = 20240501
    reps = 1000
    out = "results"
    format = "csv"      # or "json"
    workers = 1

    [oneway]
    n = 10
    k = 50              # or k_min / k_max for median-curve
    tau = 1.0
    epsilon = 0.3       # or mu = [0.1, -0.2, ...]
    model_prior = [0.5, 0.5]
    freeze_mu = false

    [survey]
    B = 1000
    n = 50
    alpha0 = 1.0
    beta0 = 1.0
    improper = false
    theta_source = "hierarchical"   # or a path to a JSON array of B probabilities
    psi = 0.3
    eta = 0.02

Unknown tables or keys are errors. Command-line flags take precedence.
"""
from __future__ import annotations

import dataclasses
import math
from dataclasses import dataclass, field
from pathlib import Path

try:
    import tomllib
except ModuleNotFoundError:  # Python < 3.11
    import tomli as tomllib

from .numerics import check_seed


class ConfigError(ValueError):
    pass


def _from_table(cls, table: dict, section: str):
    names = {f.name for f in dataclasses.fields(cls)}
    unknown = set(table) - names
    if unknown:
        raise ConfigError(f"unknown key(s) in [{section}]: {', '.join(sorted(unknown))}")
    try:
        return cls(**table)
    except (TypeError, ValueError) as exc:
        raise ConfigError(f"[{section}]: {exc}") from None


def _positive_int(name, v, allow_none=True):
    if v is None and allow_none:
        return
    if isinstance(v, bool) or not isinstance(v, int) or v < 1:
        raise ValueError(f"{name} must be a positive integer, got {v!r}")


def _nonneg(name, v):
    if v is not None and (isinstance(v, bool) or not isinstance(v, (int, float)) or not v >= 0 or not math.isfinite(v)):
        raise ValueError(f"{name} must be a finite number >= 0, got {v!r}")


@dataclass
class RunSection:
    seed: int | None = None
    reps: int | None = None
    out: str | None = None
    format: str | None = None
    workers: int | None = None

    def __post_init__(self):
        if self.seed is not None:
            check_seed(self.seed)
        _positive_int("reps", self.reps)
        _positive_int("workers", self.workers)
        if self.format not in (None, "csv", "json"):
            raise ValueError(f"format must be csv or json, got {self.format!r}")


@dataclass
class OneWaySection:
    n: int | None = None
    k: int | None = None
    k_min: int | None = None
    k_max: int | None = None
    tau: float | None = None
    epsilon: float | None = None
    mu: list | None = None
    model_prior: list | None = None
    freeze_mu: bool | None = None

    def __post_init__(self):
        for name in ("n", "k", "k_min", "k_max"):
            _positive_int(name, getattr(self, name))
        _nonneg("tau", self.tau)
        _nonneg("epsilon", self.epsilon)
        if self.epsilon is not None and self.mu is not None:
            raise ValueError("give either epsilon or mu, not both")
        if self.mu is not None and not all(isinstance(m, (int, float)) for m in self.mu):
            raise ValueError("mu must be a list of numbers")
        if self.k_min is not None and self.k_max is not None and self.k_min > self.k_max:
            raise ValueError("k_min exceeds k_max")
        if self.model_prior is not None:
            if len(self.model_prior) != 2 or not math.isclose(sum(self.model_prior), 1.0) or min(self.model_prior) < 0:
                raise ValueError(f"model_prior must be two probabilities summing to 1, got {self.model_prior!r}")


@dataclass
class SurveySection:
    B: int | None = None
    n: int | None = None
    alpha0: float | None = None
    beta0: float | None = None
    improper: bool | None = None
    theta_source: str | None = None
    psi: float | None = None
    eta: float | None = None

    def __post_init__(self):
        _positive_int("B", self.B)
        _positive_int("n", self.n)
        if self.B is not None and self.n is not None and self.n > self.B:
            raise ValueError(f"sample size n={self.n} exceeds B={self.B}")
        for name in ("alpha0", "beta0"):
            v = getattr(self, name)
            if v is not None and not (isinstance(v, (int, float)) and v > 0):
                raise ValueError(f"{name} must be positive, got {v!r}")
        if self.psi is not None and not 0 < self.psi < 1:
            raise ValueError(f"psi must be in (0, 1), got {self.psi!r}")
        if self.psi is not None and self.eta is not None and not 0 < self.eta < self.psi * (1 - self.psi):
            raise ValueError(f"eta must be in (0, psi(1-psi)), got {self.eta!r}")


@dataclass
class ExperimentConfig:
    run: RunSection = field(default_factory=RunSection)
    oneway: OneWaySection = field(default_factory=OneWaySection)
    survey: SurveySection = field(default_factory=SurveySection)

    @classmethod
    def from_dict(cls, doc: dict) -> "ExperimentConfig":
        unknown = set(doc) - {"run", "oneway", "survey"}
        if unknown:
            raise ConfigError(f"unknown table(s): {', '.join(sorted(unknown))}")
        return cls(
            run=_from_table(RunSection, doc.get("run", {}), "run"),
            oneway=_from_table(OneWaySection, doc.get("oneway", {}), "oneway"),
            survey=_from_table(SurveySection, doc.get("survey", {}), "survey"),
        )

    @classmethod
    def load(cls, path: str | Path) -> "ExperimentConfig":
        with open(path, "rb") as fh:
            try:
                doc = tomllib.load(fh)
            except tomllib.TOMLDecodeError as exc:
                raise ConfigError(f"{path}: {exc}") from None
        return cls.from_dict(doc)
