"""Sampling behaviour of psi_hat, Horvitz-Thompson and the Bayes psi_B estimate under the hierarchical model.

Usage: python3 scripts/survey_mc.py [REPS] [SEED]
"""
import sys

from indprior import oracles
from indprior import survey as sv


def main(reps=20_000, seed=1):
    reps, seed = int(reps), int(seed)
    mv = sv.BetaMeanVar(0.3, 0.02)
    print("B,n,estimator,bias_vs_psi_B,rmse_vs_psi_B")
    for B, n in ((100, 10), (1000, 50), (1000, 500)):
        s = oracles.mc_estimator_oracle(seed, B, mv, n, sv.HyperPrior(1, 1), reps)
        for name in ("psi_hat", "ht", "bayes_psi_B"):
            print(f"{B},{n},{name},{s.bias_vs_psi_B[name]:+.5f},{s.rmse_vs_psi_B[name]:.5f}")


if __name__ == "__main__":
    main(*sys.argv[1:])
