import math

import numpy as np
import pytest

from indprior import oneway as ow
from indprior import oracles
from indprior import survey as sv
from indprior.montecarlo import block_sizes, run_blocks
from indprior.numerics import make_rng


def test_quadrature_spec_validation():
    with pytest.raises(ValueError):
        oracles.QuadratureSpec(15)
    with pytest.raises(ValueError):
        oracles.QuadratureSpec(100, "simpson")
    with pytest.raises(ValueError):
        oracles.QuadratureSpec(101, "trapezoid")
    assert oracles.QuadratureSpec(101).doubled().points == 201


@pytest.mark.parametrize("scheme,points", [("simpson", 101), ("gauss-legendre", 40)])
def test_rules_integrate_polynomials(scheme, points):
    x, w = oracles.QuadratureSpec(points, scheme).rule(-1.0, 2.0)
    assert np.sum(w * x**3) == pytest.approx((16 - 1) / 4, abs=1e-12)


def test_tanh_sinh_handles_endpoint_singularity():
    log_x, log_1mx, log_w = oracles.tanh_sinh_unit(201)
    # int_0^1 x^(-0.8) (1-x)^(-0.5) dx = B(0.2, 0.5)
    val = np.sum(np.exp(-0.8 * log_x - 0.5 * log_1mx + log_w))
    assert val == pytest.approx(math.gamma(0.2) * math.gamma(0.5) / math.gamma(0.7), rel=1e-10)


def test_oneway_oracle_examples():
    cfg = ow.OneWayConfig((1,), 1.0)
    data = ow.OneWaySufficient([0.0], 0.0)
    assert oracles.oneway_marginal_oracle(data, cfg) == pytest.approx(-0.5 * math.log(4 * math.pi), abs=1e-10)
    cfg0 = ow.OneWayConfig((2, 2), 0.0)
    d0 = ow.OneWaySufficient([1.0, 2.0], 5.0)
    assert oracles.oneway_marginal_oracle(d0, cfg0) == ow.log_density_model2(d0, cfg0)
    with pytest.raises(oracles.OracleScaleError):
        oracles.oneway_marginal_oracle(ow.OneWaySufficient(np.zeros(7), 0.0), ow.OneWayConfig((1,) * 7, 1.0))


def test_oneway_oracle_self_convergence():
    rng = make_rng(12)
    for _ in range(10):
        sizes = tuple(int(n) for n in rng.integers(1, 11, 4))
        cfg = ow.OneWayConfig(sizes, float(rng.uniform(0.05, 4)))
        data = ow.OneWaySufficient.from_groups([rng.normal(0.4, 1, n) for n in sizes])
        spec = oracles.QuadratureSpec(2001)
        a = oracles.oneway_marginal_oracle(data, cfg, spec)
        b = oracles.oneway_marginal_oracle(data, cfg, spec.doubled())
        assert abs(a - b) < 1e-8


def test_survey_oracle_examples():
    d = sv.SurveyData(10, (1, 2, 3, 4, 5), (1, 1, 1, 0, 0))
    hp = sv.HyperPrior(1, 1)
    ph = (3 + 1) / (5 + 2)
    assert oracles.survey_posterior_oracle(9, d, hp) == pytest.approx(ph, abs=1e-6)
    assert oracles.survey_posterior_oracle(2, d, hp) == pytest.approx((1 + ph) / 2, abs=1e-6)
    assert oracles.eta_uniform_mean_oracle(0.3) == pytest.approx(0.3 * 0.7 / 2, abs=1e-10)
    with pytest.raises(oracles.OracleScaleError):
        oracles.survey_posterior_oracle(1, sv.SurveyData(51, (1,), (0,)), hp)


@pytest.mark.parametrize("a0,b0", [(0.2, 0.2), (0.2, 5.0), (1.0, 1.0), (5.0, 0.3)])
def test_survey_oracle_self_convergence(a0, b0):
    d = sv.SurveyData(30, (3, 4, 11, 20), (0, 0, 0, 1))
    hp = sv.HyperPrior(a0, b0)
    for spec in (oracles.QuadratureSpec(201), oracles.QuadratureSpec(64, "gauss-legendre")):
        for j in (3, 20, 29):
            a = oracles.survey_posterior_oracle(j, d, hp, spec)
            b = oracles.survey_posterior_oracle(j, d, hp, spec.doubled())
            assert abs(a - b) < 1e-8


@pytest.mark.parametrize(
    "J,Y,a0,b0",
    [((1, 2, 3), (1, 0, 1), 1.0, 1.0), ((4,), (0,), 2.5, 0.7), ((1, 5), (1, 1), 0.6, 3.0), ((2, 3, 7), (0, 0, 0), 1.0, 1.0)],
)
def test_joint_law_collapses_to_beta_posterior(J, Y, a0, b0):
    d = sv.SurveyData(10, J, Y)
    hp = sv.HyperPrior(a0, b0)
    mean, var = oracles.survey_collapse_oracle(d, hp)
    a, b = sv.psi_posterior_params(d, hp)
    assert mean == pytest.approx(a / (a + b), abs=1e-8)
    assert var == pytest.approx(a * b / ((a + b) ** 2 * (a + b + 1)), abs=1e-8)


def test_beta_moment_oracle_extremes():
    psi = np.array([1e-12, 1e-6, 0.2, 0.5, 0.9])
    for s in (0.002, 1.0, 300.0, 1e5):
        got = oracles.beta_moment_oracle(1, psi * s, (1 - psi) * s)
        assert np.allclose(got, psi, rtol=1e-9, atol=0)


def test_mc_tail_oracle_basics():
    cfg = ow.OneWayConfig.balanced(10, 10, 1.0)
    eff = ow.IidNormal(0.09)
    p, se = oracles.mc_tail_oracle(1, -1e6, 10, cfg, eff, 10_000)
    assert p == 1.0 and se == 0.0
    _, se1 = oracles.mc_tail_oracle(1, 0.3, 10, cfg, eff, 20_000)
    _, se2 = oracles.mc_tail_oracle(1, 0.3, 10, cfg, eff, 80_000)
    assert se1 / se2 == pytest.approx(2.0, rel=0.1)
    with pytest.raises(ValueError):
        oracles.mc_tail_oracle(1, 0.3, 10, cfg, eff, 100)


def test_mc_estimator_oracle_census():
    mv = sv.BetaMeanVar(0.3, 0.02)
    s = oracles.mc_estimator_oracle(4, 40, mv, 40, sv.HyperPrior(1, 1), 2000)
    assert abs(s.bias_vs_psi_B["ht"]) < 4 * s.rmse_vs_psi_B["ht"] / math.sqrt(s.reps)
    assert s.rmse_vs_psi_B["ht"] ** 2 == pytest.approx(s.mean_ht_variance, rel=0.1)


def test_mc_estimator_oracle_ht_rmse_matches_design_variance():
    mv = sv.BetaMeanVar(0.3, 0.02)
    s = oracles.mc_estimator_oracle(8, 1000, mv, 50, sv.HyperPrior(1, 1), 2000)
    assert s.ht_rmse_vs_sample_mean == pytest.approx(math.sqrt(s.mean_ht_variance), rel=0.1)
    assert s.max_abs_correction <= sv.correction_bound(sv.HyperPrior(1, 1), 1000)
    mc_err = 4 * s.rmse_vs_psi["bayes_psi_B"] / math.sqrt(s.reps)
    bayes_bias_bound = abs(s.bias_vs_psi["psi_hat"]) + sv.correction_bound(sv.HyperPrior(1, 1), 1000)
    assert abs(s.bias_vs_psi["bayes_psi_B"]) <= bayes_bias_bound + mc_err


def test_run_blocks_parallel_matches_sequential():
    fn = lambda rng, n: rng.standard_normal((n, 3))
    a = run_blocks(77, 9_500, fn, workers=1)
    b = run_blocks(77, 9_500, fn, workers=4)
    assert a.shape == (9_500, 3) and np.array_equal(a, b)
    assert block_sizes(4500, 2000) == [2000, 2000, 500]
    with pytest.raises(ValueError):
        block_sizes(0)
