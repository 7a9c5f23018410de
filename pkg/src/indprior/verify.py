"""Closed form vs oracle agreement checks, as run by ``indprior verify``.

Closed forms are looked up through their modules at call time so that a
patched (mutated) implementation is what gets checked.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable

import numpy as np

from . import oneway as ow
from . import oracles
from . import survey as sv
from .numerics import chisq_quantile, make_rng

LEVELS = {
    "quick": dict(fuzz=30, survey_fuzz=15, collapse=2, mc_reps=20_000, bound_fuzz=2000),
    "full": dict(fuzz=100, survey_fuzz=50, collapse=4, mc_reps=100_000, bound_fuzz=10_000),
}


@dataclass
class CheckResult:
    name: str
    deviation: float
    tolerance: float
    detail: str = ""

    @property
    def passed(self) -> bool:
        return bool(self.deviation <= self.tolerance)


class _Worst:
    """Tracks the largest deviation and the instance that produced it."""

    def __init__(self):
        self.dev = 0.0
        self.detail = ""

    def add(self, dev, detail):
        dev = float(dev) if np.isfinite(dev) else math.inf
        if dev > self.dev or (dev == math.inf and not self.detail):
            self.dev, self.detail = dev, detail


def _oneway_instance(rng, max_k=5, max_n=5):
    k = int(rng.integers(1, max_k + 1))
    sizes = tuple(int(n) for n in rng.integers(1, max_n + 1, k))
    tau2 = float(rng.uniform(0.0, 5.0))
    mu = rng.normal(0, 1, k)
    data = ow.OneWaySufficient.from_groups([rng.normal(m, 1, n) for m, n in zip(mu, sizes)])
    p1 = float(rng.uniform(0.05, 0.95))
    return ow.OneWayConfig(sizes, tau2, (p1, 1 - p1)), data


def _describe(cfg, data):
    return f"sizes={cfg.group_sizes} tau2={cfg.tau2:.6g} prior={cfg.model_prior} T={np.round(data.group_sums, 6).tolist()} sum_sq={data.sum_sq:.6g}"


BASE_ASYM = ow.BalancedAsymptotics.from_params(10, 1.0, 0.09)


# --- one-way checks ---------------------------------------------------------------

def check_oneway_examples(seed, level):
    worst = _Worst()
    cases = [
        ("zero data k=5 n=10 tau2=1", ow.OneWayConfig.balanced(10, 5, 1.0), ow.OneWaySufficient(np.zeros(5), 0.0), 5.99473818199592636),
        ("single group n=1 T=2", ow.OneWayConfig((1,), 1.0), ow.OneWaySufficient([2.0], 4.0), -0.65342640972002735),
    ]
    for label, cfg, data, want in cases:
        worst.add(abs(ow.log_bayes_factor(data, cfg) - want), label)
        via = ow.log_density_model2(data, cfg) - oracles.oneway_marginal_oracle(data, cfg)
        worst.add(abs(via - want), label + " (quadrature)")
    return CheckResult("oneway.log_bayes_factor examples", worst.dev, 1e-8, worst.detail)


def check_density_identity(seed, level):
    rng = make_rng(seed, 101)
    worst = _Worst()
    for _ in range(LEVELS[level]["fuzz"]):
        cfg, data = _oneway_instance(rng)
        diff = ow.log_density_model2(data, cfg) - ow.log_marginal_density_model1(data, cfg)
        worst.add(abs(ow.log_bayes_factor(data, cfg) - diff), _describe(cfg, data))
    return CheckResult("oneway log F = log f2 - log f1", worst.dev, 1e-10, worst.detail)


def check_marginal_quadrature(seed, level):
    rng = make_rng(seed, 102)
    worst = _Worst()
    for _ in range(LEVELS[level]["fuzz"]):
        cfg, data = _oneway_instance(rng)
        worst.add(abs(ow.log_marginal_density_model1(data, cfg) - oracles.oneway_marginal_oracle(data, cfg)), _describe(cfg, data))
    return CheckResult("oneway log f1 vs quadrature", worst.dev, 1e-6, worst.detail)


def check_posterior_prob(seed, level):
    rng = make_rng(seed, 103)
    worst = _Worst()
    for _ in range(LEVELS[level]["fuzz"]):
        cfg, data = _oneway_instance(rng)
        p1, p2 = cfg.model_prior
        l1 = oracles.oneway_marginal_oracle(data, cfg)
        l2 = ow.log_density_model2(data, cfg)
        m = max(l1, l2)
        direct = p2 * math.exp(l2 - m) / (p1 * math.exp(l1 - m) + p2 * math.exp(l2 - m))
        got = ow.posterior_prob_model2(ow.log_bayes_factor(data, cfg), cfg)
        worst.add(abs(got - direct), _describe(cfg, data))
    return CheckResult("oneway posterior P(model 2) vs two densities", worst.dev, 1e-8, worst.detail)


def check_expected_log_bf(seed, level):
    cfg = ow.OneWayConfig.balanced(10, 1, 1.0)
    eff = ow.Fixed((0.0,))
    reps = LEVELS[level]["mc_reps"]
    logF = oracles.mc_log_bf(seed, cfg, eff, reps)
    se = logF.std(ddof=1) / math.sqrt(reps)
    z = abs(logF.mean() - ow.expected_log_bf(cfg, eff)) / se
    return CheckResult("oneway E[log F] vs Monte Carlo (SE units)", z, 3.0, f"n=10 k=1 tau2=1 mu=0 reps={reps} seed={seed}")


def check_asymptotics(seed, level):
    worst = _Worst()
    worst.add(abs(ow.asymptotic_slope(BASE_ASYM) - 0.67062254552564327), "slope n=10 tau=1 eps=0.3")
    eps = ow.critical_epsilon(10, 1.0)
    closed = math.sqrt((11 * math.log(11) / 10 - 1) / 10)
    worst.add(abs(eps - closed), "critical epsilon n=10 tau2=1 vs closed-form root")
    worst.add(abs(ow.asymptotic_slope(ow.BalancedAsymptotics.from_params(10, 1.0, eps * eps))), "slope at critical epsilon")
    return CheckResult("oneway asymptotic slope and critical epsilon", worst.dev, 1e-10, worst.detail)


def check_tail_law(seed, level):
    reps = LEVELS[level]["mc_reps"]
    k = 50
    cfg = ow.OneWayConfig.balanced(10, k, 1.0)
    ts = [0.1, 0.2, 0.3, 0.4, 0.5]
    p_mc, se = oracles.mc_tail_oracle(seed, ts, k, cfg, ow.IidNormal(0.09), reps)
    worst = _Worst()
    for t, p, s in zip(ts, p_mc, se):
        exact = ow.tail_prob_log_bf(t, k, BASE_ASYM)
        z = abs(exact - p) / s if s > 0 else (0.0 if exact == p else math.inf)
        worst.add(z, f"t={t} exact={exact:.6g} mc={p:.6g} n=10 k=50 tau2=1 eps2=0.09 reps={reps} seed={seed}")
    return CheckResult("oneway tail law vs Monte Carlo (SE units)", worst.dev, 3.0, worst.detail)


def check_median(seed, level):
    reps = LEVELS[level]["mc_reps"]
    k = 20
    mc_seed = (seed + 1) % 2**64
    logF = np.sort(oracles.mc_log_bf(mc_seed, ow.OneWayConfig.balanced(10, k, 1.0), ow.IidNormal(0.09), reps))
    half = 3.0 * math.sqrt(reps) / 2
    lo, hi = logF[int(reps / 2 - half)], logF[int(reps / 2 + half)]
    med = ow.median_log_bf(k, BASE_ASYM)
    # distance outside the order-statistic interval, zero when inside
    dev = max(lo - med, med - hi, 0.0)
    return CheckResult("oneway median log F inside MC order-statistic CI", dev, 0.0, f"k=20 exact={med:.6g} ci=[{lo:.6g}, {hi:.6g}] seed={mc_seed}")


def check_median_curve(seed, level):
    curve = ow.median_curve(50, 200, BASE_ASYM)
    ks, meds = zip(*curve)
    slope, _, r2 = ow.fit_line(ks, np.asarray(meds) / math.log(10))
    target = ow.asymptotic_slope(BASE_ASYM) / 2 / math.log(10)
    rel = abs(slope - target) / target
    dev = max(rel / 0.05, (0.999 - r2) / 0.001 + 1 if r2 <= 0.999 else 0.0)
    med200 = ow.median_log_bf(200, BASE_ASYM)
    dev = max(dev, 0.0 if 64 <= med200 <= 71 else math.inf)
    return CheckResult("oneway median curve slope/R^2 (fraction of budget)", dev, 1.0, f"slope={slope:.6g} target={target:.6g} r2={r2:.8f} median(200)={med200:.6g}")


def check_chisq(seed, level):
    worst = _Worst()
    worst.add(abs(chisq_quantile(0.5, 2) - 2 * math.log(2)), "median chi2_2")
    worst.add(abs(chisq_quantile(0.5, 200) - 199.33372983863098), "median chi2_200")
    return CheckResult("chi-square quantiles", worst.dev, 1e-8, worst.detail)


# --- survey checks ------------------------------------------------------------------

def _survey_instance(rng, max_B=50, max_m=10):
    B = int(rng.integers(1, max_B + 1))
    m = int(rng.integers(1, min(B, max_m) + 1))
    J = tuple((rng.choice(B, m, replace=False) + 1).tolist())
    Y = tuple(int(y) for y in rng.integers(0, 2, m))
    hp = sv.HyperPrior(float(rng.uniform(0.2, 5)), float(rng.uniform(0.2, 5)))
    return sv.SurveyData(B, J, Y), hp


def _sdescribe(d, hp):
    return f"B={d.B} J={list(d.J)} Y={list(d.Y)} alpha0={hp.alpha0:.6g} beta0={hp.beta0:.6g}"


def check_survey_quadrature(seed, level):
    rng = make_rng(seed, 201)
    worst = _Worst()
    for _ in range(LEVELS[level]["survey_fuzz"]):
        d, hp = _survey_instance(rng)
        for j in range(1, d.B + 1):
            worst.add(abs(sv.posterior_theta_mean(j, d, hp) - oracles.survey_posterior_oracle(j, d, hp)), f"j={j} " + _sdescribe(d, hp))
        worst.add(abs(sv.bayes_psi_B(d, hp) - oracles.survey_bayes_psi_B_oracle(d, hp)), "psi_B " + _sdescribe(d, hp))
    return CheckResult("survey E(theta_j|Y,J) and psi_B vs 2-D quadrature", worst.dev, 1e-6, worst.detail)


def check_survey_collapse(seed, level):
    rng = make_rng(seed, 202)
    worst = _Worst()
    for _ in range(LEVELS[level]["collapse"]):
        B = int(rng.integers(3, 30))
        m = int(rng.integers(1, 4))
        J = tuple((rng.choice(B, m, replace=False) + 1).tolist())
        Y = tuple(int(y) for y in rng.integers(0, 2, m))
        d = sv.SurveyData(B, J, Y)
        hp = sv.HyperPrior(float(rng.uniform(1, 5)), float(rng.uniform(1, 5)))
        mean, var = oracles.survey_collapse_oracle(d, hp)
        a, b = sv.psi_posterior_params(d, hp)
        worst.add(abs(mean - a / (a + b)), "mean " + _sdescribe(d, hp))
        worst.add(abs(var - a * b / ((a + b) ** 2 * (a + b + 1))), "var " + _sdescribe(d, hp))
    return CheckResult("survey joint law collapses to Beta posterior of psi", worst.dev, 1e-8, worst.detail)


def check_marginal_y(seed, level):
    rng = make_rng(seed, 203)
    worst = _Worst()
    for _ in range(LEVELS[level]["fuzz"]):
        psi = float(rng.uniform(0.02, 0.98))
        mv = sv.BetaMeanVar(psi, float(rng.uniform(0.01, 0.95)) * psi * (1 - psi))
        a, b = sv.beta_from_mean_var(mv)
        for y in (0, 1):
            worst.add(abs(sv.marginal_y_given_hyper(y, mv) - float(oracles.beta_moment_oracle(y, a, b))), f"y={y} psi={mv.psi:.6g} eta={mv.eta:.6g}")
    a, b = sv.beta_from_mean_var(sv.BetaMeanVar(0.3, 0.01))
    worst.add(abs(a - 6.0) + abs(b - 14.0), "psi=0.3 eta=0.01 -> (6, 14)")
    return CheckResult("survey Beta reparametrization and theta marginal", worst.dev, 1e-8, worst.detail)


def check_correction_bound(seed, level):
    rng = make_rng(seed, 204)
    worst = _Worst()
    for _ in range(LEVELS[level]["bound_fuzz"]):
        B = int(rng.integers(1, 5000))
        m = int(rng.integers(1, B + 1))
        S = int(rng.integers(0, m + 1))
        d = sv.SurveyData(B, tuple(range(1, m + 1)), (1,) * S + (0,) * (m - S))
        hp = sv.HyperPrior(float(rng.uniform(0.01, 20)), float(rng.uniform(0.01, 20)))
        excess = abs(sv.bayes_psi_B(d, hp) - sv.psi_hat(d, hp)) - sv.correction_bound(hp, B)
        worst.add(max(excess, 0.0), f"B={B} |J|={m} S={S} alpha0={hp.alpha0:.6g} beta0={hp.beta0:.6g}")
        if 0 < S < m:
            imp = sv.HyperPrior(improper=True)
            worst.add(abs(sv.bayes_psi_B(d, imp) - S / m), f"improper B={B} |J|={m} S={S}")
    return CheckResult("survey correction bound and improper HT limit", worst.dev, 0.0, worst.detail)


def check_ht_variance(seed, level):
    reps = LEVELS[level]["mc_reps"]
    rng = make_rng(seed, 205)
    theta = sv.simulate_hierarchical(rng, 1000, sv.BetaMeanVar(0.3, 0.02))
    J = sv.simulate_survey(rng, theta, 50).J
    rmse = oracles.mc_ht_rmse_oracle(seed, theta, J, reps)
    rel = abs(rmse / math.sqrt(sv.ht_variance(theta, J)) - 1)
    return CheckResult("survey HT RMSE vs design variance (relative)", rel, 0.10, f"B=1000 n=50 reps={reps} seed={seed}")


def check_outcome_frequency(seed, level):
    reps = LEVELS[level]["mc_reps"]
    mv = sv.BetaMeanVar(0.35, 0.05)
    rng = make_rng(seed, 206)
    hits = 0
    for _ in range(reps // 1000):
        hits += sv.simulate_survey(rng, sv.simulate_hierarchical(rng, 1000, mv), 1000).S
    n = (reps // 1000) * 1000
    z = abs(hits / n - 0.35) / math.sqrt(0.35 * 0.65 / n)
    return CheckResult("survey simulated P(Y=1) vs psi (SE units)", z, 3.0, f"psi=0.35 eta=0.05 draws={n} seed={seed}")


SUITES: dict[str, list[Callable]] = {
    "oneway": [
        check_chisq,
        check_oneway_examples,
        check_density_identity,
        check_marginal_quadrature,
        check_posterior_prob,
        check_expected_log_bf,
        check_asymptotics,
        check_tail_law,
        check_median,
        check_median_curve,
    ],
    "survey": [
        check_marginal_y,
        check_survey_quadrature,
        check_survey_collapse,
        check_correction_bound,
        check_ht_variance,
        check_outcome_frequency,
    ],
}


def run_suite(suite: str, level: str, seed: int) -> list[CheckResult]:
    if level not in LEVELS:
        raise ValueError(f"unknown level {level!r}")
    names = ["oneway", "survey"] if suite == "all" else [suite]
    results = []
    for name in names:
        for check in SUITES[name]:
            results.append(check(seed, level))
    return results
