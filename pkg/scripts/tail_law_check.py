"""Compare the exact tail P(log F > k t) with Monte Carlo frequencies at several k.

Usage: python3 scripts/tail_law_check.py [REPS] [SEED]
"""
import sys

import numpy as np

from indprior import oneway as ow
from indprior import oracles


def main(reps=100_000, seed=1):
    reps, seed = int(reps), int(seed)
    asym = ow.BalancedAsymptotics.from_params(10, 1.0, 0.09)
    ts = np.array([0.1, 0.2, 0.3, 0.4, 0.5])
    print("k,t,exact,mc,se,z")
    for k in (5, 20, 50, 100):
        cfg = ow.OneWayConfig.balanced(10, k, 1.0)
        p, se = oracles.mc_tail_oracle(seed, ts, k, cfg, ow.IidNormal(0.09), reps)
        for t, pm, s in zip(ts, p, se):
            ex = ow.tail_prob_log_bf(t, k, asym)
            z = (pm - ex) / s if s > 0 else 0.0
            print(f"{k},{t:.1f},{ex:.6f},{pm:.6f},{s:.6f},{z:+.2f}")


if __name__ == "__main__":
    main(*sys.argv[1:])
