"""Brute-force reference computations: quadrature and Monte Carlo.

These are slow on purpose and share no algebra with the closed forms they
check. The one-way marginal density is integrated group by group over the
mean; the survey posteriors are integrated over the (psi, eta) triangle mapped
to the unit square via ``eta = u * psi * (1 - psi)``.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from . import survey as sv
from .montecarlo import run_blocks
from .oneway import EffectSpec, OneWayConfig, OneWaySufficient, log_bf_from_sums, simulate_group_sums

SCHEMES = ("simpson", "gauss-legendre")


class OracleScaleError(ValueError):
    """Instance too large for a brute-force oracle."""


@dataclass(frozen=True)
class QuadratureSpec:
    """Grid for the bounded smooth axes.

    The psi axis of the survey oracles always uses a tanh-sinh rule with
    ``points`` nodes, since its integrand can have algebraic endpoint
    singularities.
    """
    points: int = 401
    scheme: str = "simpson"

    def __post_init__(self):
        if self.scheme not in SCHEMES:
            raise ValueError(f"scheme must be one of {SCHEMES}, got {self.scheme!r}")
        if self.points < 17:
            raise ValueError("need at least 17 grid points")
        if self.scheme == "simpson" and self.points % 2 == 0:
            raise ValueError("Simpson needs an odd number of points")

    def doubled(self) -> "QuadratureSpec":
        return QuadratureSpec(2 * self.points - 1 if self.scheme == "simpson" else 2 * self.points, self.scheme)

    def rule(self, lo: float, hi: float):
        if self.scheme == "simpson":
            return simpson_rule(lo, hi, self.points)
        return gauss_legendre_rule(lo, hi, self.points)


# --- rules ---------------------------------------------------------------------

def simpson_rule(lo: float, hi: float, points: int):
    x = np.linspace(lo, hi, points)
    w = np.ones(points)
    w[1:-1:2] = 4.0
    w[2:-1:2] = 2.0
    return x, w * (hi - lo) / (3.0 * (points - 1))


def gauss_legendre_rule(lo: float, hi: float, points: int):
    t, w = np.polynomial.legendre.leggauss(points)
    half = 0.5 * (hi - lo)
    return lo + half * (t + 1.0), half * w


def _softplus(x):
    return np.logaddexp(0.0, x)


def tanh_sinh_unit(points: int, t_max: float = 6.0):
    """Tanh-sinh nodes on (0, 1) in log form.

    Returns ``(log_x, log_1mx, log_w)`` so integrands like
    ``x**(a-1) * (1-x)**(b-1)`` can be evaluated without underflow right up
    to the endpoints.
    """
    t = np.linspace(-t_max, t_max, points)
    h = t[1] - t[0]
    u = 0.5 * math.pi * np.sinh(t)
    log_x = -_softplus(2.0 * u)
    log_1mx = -_softplus(-2.0 * u)
    log_w = math.log(h * math.pi) + np.log(np.cosh(t)) + log_x + log_1mx
    return log_x, log_1mx, log_w


def _logsumexp(a, axis=None):
    m = np.max(a, axis=axis, keepdims=True)
    out = np.log(np.sum(np.exp(a - m), axis=axis, keepdims=True)) + m
    return np.squeeze(out, axis=axis) if axis is not None else float(out.ravel()[0])


# --- one-way layout --------------------------------------------------------------

def oneway_marginal_oracle(data: OneWaySufficient, cfg: OneWayConfig, spec: QuadratureSpec = QuadratureSpec(2001)) -> float:
    """log f1(x) by numerical integration over each group mean."""
    if cfg.k > 6 or max(cfg.group_sizes) > 10:
        raise OracleScaleError(f"oracle limited to k <= 6, n_i <= 10 (got k={cfg.k}, max n={max(cfg.group_sizes)})")
    if data.sum_sq is None:
        raise ValueError("oracle needs sum_sq")
    N = cfg.n_total
    base = -0.5 * N * math.log(2 * math.pi) - 0.5 * data.sum_sq
    if cfg.tau2 == 0:
        return base
    tau = math.sqrt(cfg.tau2)
    total = base
    for T, n in zip(data.group_sums, cfg.group_sizes):
        # group likelihood in mu, up to the factor absorbed into `base`
        def log_integrand(mu):
            return mu * T - 0.5 * n * mu * mu - 0.5 * mu * mu / cfg.tau2 - 0.5 * math.log(2 * math.pi * cfg.tau2)

        center = T / (n + 1.0 / cfg.tau2)
        mu, w = spec.rule(center - 12.0 * tau, center + 12.0 * tau)
        total += _logsumexp(log_integrand(mu) + np.log(w))
    return float(total)


def mc_log_bf(seed: int, cfg: OneWayConfig, eff: EffectSpec, reps: int, workers: int = 1) -> np.ndarray:
    """log F for ``reps`` independently simulated datasets."""
    def block(rng, size):
        T, _ = simulate_group_sums(rng, cfg, eff, size)
        return log_bf_from_sums(T, cfg.group_sizes, cfg.tau2)

    return run_blocks(seed, reps, block, workers)


def mc_tail_oracle(seed: int, t, k: int, cfg: OneWayConfig, eff: EffectSpec, reps: int, workers: int = 1):
    """Empirical P(log F > k t) and its binomial standard error.

    ``t`` may be a scalar or a sequence; all values share the same replicates.
    """
    if cfg.k != k:
        raise ValueError(f"k={k} does not match config with {cfg.k} groups")
    if reps < 10_000:
        raise ValueError("tail oracle needs at least 1e4 replicates")
    logF = mc_log_bf(seed, cfg, eff, reps, workers)
    ts = np.atleast_1d(np.asarray(t, dtype=float))
    p = np.array([np.mean(logF > k * tv) for tv in ts])
    se = np.sqrt(p * (1 - p) / reps)
    if np.ndim(t) == 0:
        return float(p[0]), float(se[0])
    return p, se


# --- survey ------------------------------------------------------------------------

def _psi_grid(spec: QuadratureSpec):
    return tanh_sinh_unit(spec.points)


def _u_grid(spec: QuadratureSpec):
    return spec.rule(0.0, 1.0)


def _log_psi_kernel(S: int, m: int, hp: sv.HyperPrior, log_psi, log_1mpsi):
    # psi^S (1-psi)^(m-S) h0(psi), h0 unnormalized
    a0, b0 = hp.effective
    return (S + a0 - 1.0) * log_psi + (m - S + b0 - 1.0) * log_1mpsi


def survey_posterior_oracle(j: int, data: sv.SurveyData, hp: sv.HyperPrior, spec: QuadratureSpec = QuadratureSpec(201)) -> float:
    """E(theta_j | Y, J) by 2-D quadrature over (psi, eta)."""
    if data.B > 50 or data.size > 10:
        raise OracleScaleError(f"oracle limited to B <= 50, |J| <= 10 (got B={data.B}, |J|={data.size})")
    if not 1 <= j <= data.B:
        raise ValueError(f"unit {j} outside 1..{data.B}")
    log_psi, log_1mpsi, log_wpsi = _psi_grid(spec)
    u, wu = _u_grid(spec)
    psi = np.exp(log_psi)[:, None]
    log_width = (log_psi + log_1mpsi)[:, None]
    with np.errstate(divide="ignore"):  # Simpson includes u = 0, i.e. eta = 0
        log_eta = np.log(u)[None, :] + log_width
    log_h = -log_width  # eta uniform on (0, psi(1-psi))
    log_jac = log_width  # d eta / d u
    log_f = (_log_psi_kernel(data.S, data.size, hp, log_psi, log_1mpsi) + log_wpsi)[:, None] + np.log(wu)[None, :] + log_h + log_jac
    y = data.outcome(j)
    if y is None:
        inner = np.broadcast_to(psi, log_f.shape)
    else:
        # psi - eta/(1-psi) + y eta/(psi(1-psi)), ratios taken in logs so psi -> 0 stays finite
        inner = psi - np.exp(log_eta - log_1mpsi[:, None]) + y * np.exp(log_eta - log_width)
    m = log_f.max()
    weight = np.exp(log_f - m)
    return float(np.sum(inner * weight) / np.sum(weight))


def survey_bayes_psi_B_oracle(data: sv.SurveyData, hp: sv.HyperPrior, spec: QuadratureSpec = QuadratureSpec(201)) -> float:
    return sum(survey_posterior_oracle(j, data, hp, spec) for j in range(1, data.B + 1)) / data.B


def eta_uniform_mean_oracle(psi: float, spec: QuadratureSpec = QuadratureSpec(201)) -> float:
    """Mean of eta under its conditional uniform prior, integrated on the u grid."""
    u, wu = _u_grid(spec)
    width = psi * (1 - psi)
    eta = u * width
    return float(np.sum(eta * (1.0 / width) * width * wu))


def beta_moment_oracle(y: int, alpha, beta, nodes: int = 1601):
    """E[theta^y (1-theta)^(1-y)] under Beta(alpha, beta), by quadrature.

    Works in the logit variable ``z``, where the Beta kernel becomes
    ``exp(alpha z - (alpha+beta) softplus(z))``, with a sinh map centred near
    the mode so both the bulk and the long tails of small shapes are covered.
    Broadcasts over ``alpha`` and ``beta``; never uses a Beta function.
    """
    alpha = np.asarray(alpha, dtype=float)[..., None]
    beta = np.asarray(beta, dtype=float)[..., None]
    s = alpha + beta
    mode = np.log(alpha) - np.log(beta)
    p = alpha / s
    scale = np.minimum(1.0, 1.0 / np.sqrt(s * p * (1 - p)))
    # a narrow bulk always sits within |z| < log(s); flat kernels need the centre near the theta kink
    centre = np.clip(mode, -10.0, 10.0)
    reach = (50.0 / np.minimum(alpha, beta) + 50.0 + np.abs(centre)) / scale
    w_max = np.arcsinh(reach) + 1.0
    grid = np.linspace(-1.0, 1.0, nodes)
    w = grid * w_max
    z = centre + scale * np.sinh(w)
    log_dz = np.log(scale * np.cosh(w) * w_max)
    log_kernel = alpha * z - s * _softplus(z)
    log_g = log_kernel + log_dz
    peak = log_g.max(axis=-1, keepdims=True)
    g = np.exp(log_g - peak)
    log_theta = -_softplus(-z)
    log_1mtheta = -_softplus(z)
    f = np.exp(log_theta) if y == 1 else np.exp(log_1mtheta)
    return np.sum(f * g, axis=-1) / np.sum(g, axis=-1)


def survey_collapse_oracle(data: sv.SurveyData, hp: sv.HyperPrior, spec: QuadratureSpec = QuadratureSpec(161, "gauss-legendre")):
    """Posterior mean and variance of psi from the joint law with theta left in.

    Every sampled theta_j is integrated out numerically at each (psi, eta)
    node, instead of using the collapsed psi^S (1-psi)^(|J|-S) kernel. Nodes
    with psi or 1-psi below 1e-15 are dropped, which is harmless when
    ``S + alpha0 >= 1`` and ``|J| - S + beta0 >= 1``.
    """
    if data.size > 3:
        raise OracleScaleError("collapse oracle limited to |J| <= 3")
    log_psi, log_1mpsi, log_wpsi = _psi_grid(spec)
    keep = (log_psi > math.log(1e-15)) & (log_1mpsi > math.log(1e-15))
    log_psi, log_1mpsi, log_wpsi = log_psi[keep], log_1mpsi[keep], log_wpsi[keep]
    u, wu = gauss_legendre_rule(0.0, 1.0, 16)
    psi = np.exp(log_psi)[:, None]
    one_minus = np.exp(log_1mpsi)[:, None]
    # eta = u psi (1-psi)  =>  alpha + beta = 1/u - 1
    s = 1.0 / u[None, :] - 1.0
    alpha, beta = psi * s, one_minus * s
    log_like = np.zeros(alpha.shape)
    for y in data.Y:
        log_like += np.log(beta_moment_oracle(y, alpha, beta))
    a0, b0 = hp.effective
    log_h0 = (a0 - 1.0) * log_psi + (b0 - 1.0) * log_1mpsi
    log_f = log_like + (log_h0 + log_wpsi)[:, None] + np.log(wu)[None, :]
    weight = np.exp(log_f - log_f.max())
    norm = weight.sum()
    mean = float(np.sum(psi * weight) / norm)
    var = float(np.sum((psi - mean) ** 2 * weight) / norm)
    return mean, var


@dataclass(frozen=True)
class EstimatorSummary:
    reps: int
    bias_vs_psi: dict
    rmse_vs_psi: dict
    bias_vs_psi_B: dict
    rmse_vs_psi_B: dict
    ht_rmse_vs_sample_mean: float
    mean_ht_variance: float
    max_abs_correction: float


def mc_estimator_oracle(seed: int, B: int, mv: sv.BetaMeanVar, n: int, hp: sv.HyperPrior, reps: int, workers: int = 1) -> EstimatorSummary:
    """Frequentist behaviour of the estimators when theta really is hierarchical."""
    if reps < 1000:
        raise ValueError("estimator oracle needs at least 1e3 replicates")
    if not 1 <= n <= B:
        raise ValueError(f"sample size must be in 1..{B}")
    alpha, beta = sv.beta_from_mean_var(mv)

    def block(rng, size):
        rows = np.empty((size, 6))
        for r in range(size):
            theta = rng.beta(alpha, beta, size=B)
            J = rng.choice(B, size=n, replace=False)
            Y = (rng.random(n) < theta[J]).astype(int)
            data = sv.SurveyData(B, tuple((J + 1).tolist()), tuple(Y.tolist()))
            thJ = theta[J]
            rows[r] = (
                Y.mean(),
                sv.psi_hat(data, hp),
                sv.bayes_psi_B(data, hp),
                theta.mean(),
                thJ.mean(),
                np.sum(thJ * (1 - thJ)) / n**2,
            )
        return rows

    out = run_blocks(seed, reps, block, workers, block=250)
    est = {"ht": out[:, 0], "psi_hat": out[:, 1], "bayes_psi_B": out[:, 2]}
    psi_B, theta_J_mean = out[:, 3], out[:, 4]

    def rmse(x, target):
        return float(np.sqrt(np.mean((x - target) ** 2)))

    return EstimatorSummary(
        reps=reps,
        bias_vs_psi={k: float(np.mean(v - mv.psi)) for k, v in est.items()},
        rmse_vs_psi={k: rmse(v, mv.psi) for k, v in est.items()},
        bias_vs_psi_B={k: float(np.mean(v - psi_B)) for k, v in est.items()},
        rmse_vs_psi_B={k: rmse(v, psi_B) for k, v in est.items()},
        ht_rmse_vs_sample_mean=rmse(est["ht"], theta_J_mean),
        mean_ht_variance=float(out[:, 5].mean()),
        max_abs_correction=float(np.max(np.abs(est["bayes_psi_B"] - est["psi_hat"]))),
    )


def mc_ht_rmse_oracle(seed: int, theta: sv.ThetaVector, J: Sequence[int], reps: int, workers: int = 1) -> float:
    """RMSE of S/|J| around the sampled units' mean theta, theta and J held fixed."""
    idx = np.asarray(list(J), dtype=int) - 1
    th = theta.theta[idx]
    target = th.mean()

    def block(rng, size):
        Y = rng.random((size, idx.size)) < th
        return Y.mean(axis=1)

    ht = run_blocks(seed, reps, block, workers)
    return float(np.sqrt(np.mean((ht - target) ** 2)))
