"""Median of log10 F against k for n=10, tau=1, eps=0.3, with a least-squares line over k in [50, 200].

Usage: python3 scripts/median_curve.py [OUT_DIR]
"""
import math
import sys
from pathlib import Path

from indprior import oneway as ow
from indprior.svgplot import median_curve_svg


def main(out_dir="results/median_curve"):
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    asym = ow.BalancedAsymptotics.from_params(10, 1.0, 0.09)
    curve = ow.median_curve(1, 200, asym)
    ks = [k for k, _ in curve]
    y10 = [m / math.log(10) for _, m in curve]
    with open(out / "median_curve.csv", "w") as fh:
        fh.write("k,median_log_F,median_log10_F\n")
        for (k, m), y in zip(curve, y10):
            fh.write(f"{k},{m:.10g},{y:.10g}\n")
    (out / "median_curve.svg").write_text(median_curve_svg(ks, y10, "Median of F against k (n=10, tau=1, epsilon=0.3)"))
    slope, intercept, r2 = ow.fit_line(ks[49:], y10[49:])
    print(f"slope {slope:.5f} per unit k (limit {ow.asymptotic_slope(asym) / 2 / math.log(10):.5f}), "
          f"intercept {intercept:.3f}, R^2 {r2:.6f}")
    print(f"median F at k=200: 10^{y10[-1]:.2f}")


if __name__ == "__main__":
    main(*sys.argv[1:])
