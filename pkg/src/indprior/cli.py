"""Command-line front end.

Subcommands::

    indprior oneway-bf           log Bayes factors for a data file or simulated replicates
    indprior median-curve        exact median of log F against k, as CSV/JSON and SVG
    indprior oneway-asymptotics  limiting slope and critical epsilon
    indprior survey-estimate     psi_hat, Horvitz-Thompson and Bayes psi_B estimates
    indprior verify              closed forms vs quadrature / Monte Carlo oracles

Exit codes: 0 success, 1 verification failure, 2 usage or input error, 3 I/O error.
"""
from __future__ import annotations

import argparse
import csv
import datetime as dt
import hashlib
import io
import json
import math
import os
import sys
import warnings
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from . import __version__
from . import oneway as ow
from . import survey as sv
from . import verify as vf
from .config import ConfigError, ExperimentConfig
from .montecarlo import run_blocks
from .numerics import check_seed, make_rng
from .svgplot import median_curve_svg

EXIT_OK, EXIT_VERIFY, EXIT_USAGE, EXIT_IO = 0, 1, 2, 3
DEFAULT_SEED = 20240501
FROZEN_MU_STREAM = 2**32  # stream key kept clear of replicate block indices


class UsageError(Exception):
    pass


@dataclass
class Table:
    name: str
    columns: list
    rows: list


# --- formatting -------------------------------------------------------------------

def _cell(v):
    if v is None:
        return ""
    if isinstance(v, (bool, np.bool_)):
        return "true" if v else "false"
    if isinstance(v, (int, np.integer)):
        return str(int(v))
    if isinstance(v, (float, np.floating)):
        v = float(v)
        return f"{v:.10g}" if math.isfinite(v) else ("nan" if math.isnan(v) else ("inf" if v > 0 else "-inf"))
    return str(v)


def _json_value(v):
    if isinstance(v, (bool, np.bool_)):
        return bool(v)
    if isinstance(v, (int, np.integer)):
        return int(v)
    if isinstance(v, (float, np.floating)):
        v = float(v)
        return float(f"{v:.10g}") if math.isfinite(v) else _cell(v)
    return v


def render(table: Table, fmt: str) -> str:
    if fmt == "json":
        doc = {"table": table.name, "columns": table.columns, "rows": [{c: _json_value(v) for c, v in zip(table.columns, r)} for r in table.rows]}
        return json.dumps(doc, indent=2) + "\n"
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(table.columns)
    for r in table.rows:
        w.writerow([_cell(v) for v in r])
    return buf.getvalue()


def _atomic_write(path: Path, text: str) -> None:
    tmp = path.with_name(path.name + ".tmp")
    tmp.write_text(text, encoding="utf-8")
    os.replace(tmp, path)


class Output:
    """Collects written files; data goes to stdout when no directory is given."""

    def __init__(self, out_dir: str | None, fmt: str):
        self.dir = Path(out_dir) if out_dir else None
        self.fmt = fmt
        self.files: list[str] = []
        if self.dir is not None:
            self.dir.mkdir(parents=True, exist_ok=True)

    def table(self, table: Table, path: str | None = None):
        text = render(table, self.fmt)
        if path is None and self.dir is None:
            sys.stdout.write(text)
            return
        self.write(Path(path) if path else self.dir / f"{table.name}.{self.fmt}", text)

    def write(self, path: Path, text: str):
        path.parent.mkdir(parents=True, exist_ok=True)
        _atomic_write(path, text)
        self.files.append(str(path))

    def manifest(self, argv, settings: dict):
        if self.dir is None:
            return
        # the hash identifies the computation, so where it ran and how many threads it used are left out
        effective = {k: v for k, v in settings.items() if k not in ("out", "workers")}
        canonical = json.dumps(effective, sort_keys=True, default=str)
        doc = {
            "command": " ".join(["indprior", *argv]),
            "argv": list(argv),
            "settings": settings,
            "config_hash": hashlib.sha256(canonical.encode()).hexdigest(),
            "seed": settings.get("seed"),
            "version": __version__,
            "timestamp": dt.datetime.now(dt.timezone.utc).isoformat(timespec="seconds"),
            "outputs": self.files,
        }
        _atomic_write(self.dir / "manifest.json", json.dumps(doc, indent=2, default=str) + "\n")


# --- argument handling ----------------------------------------------------------------

def _pick(flag, section_value, default):
    if flag is not None:
        return flag
    if section_value is not None:
        return section_value
    return default


def _common(args, cfg: ExperimentConfig, default_reps: int):
    run = cfg.run
    seed = check_seed(_pick(args.seed, run.seed, DEFAULT_SEED))
    reps = _pick(args.reps, run.reps, default_reps)
    if reps < 1:
        raise UsageError("--reps must be >= 1")
    workers = _pick(args.workers, run.workers, 1)
    if workers < 1:
        raise UsageError("--workers must be >= 1")
    return dict(
        seed=seed,
        reps=reps,
        out=_pick(args.out, run.out, None),
        format=_pick(args.format, run.format, "csv"),
        workers=workers,
    )


def _load_config(args) -> ExperimentConfig:
    if not args.config:
        return ExperimentConfig()
    try:
        return ExperimentConfig.load(args.config)
    except FileNotFoundError:
        raise
    except ConfigError as exc:
        raise UsageError(str(exc)) from None


def read_oneway_csv(path: str):
    """Read ``group,x`` rows into a list of groups (ordered by first appearance)."""
    groups: dict[str, list[float]] = {}
    with open(path, newline="", encoding="utf-8") as fh:
        reader = csv.reader(fh)
        header = next(reader, None)
        if header is None or [h.strip() for h in header] != ["group", "x"]:
            raise UsageError(f"{path}:1: expected header 'group,x'")
        for row in reader:
            line = reader.line_num
            if not row or all(not c.strip() for c in row):
                continue
            if len(row) != 2:
                raise UsageError(f"{path}:{line}: expected 2 fields, got {len(row)}")
            try:
                x = float(row[1])
            except ValueError:
                raise UsageError(f"{path}:{line}: not a number: {row[1]!r}") from None
            if not math.isfinite(x):
                raise UsageError(f"{path}:{line}: non-finite value")
            groups.setdefault(row[0].strip(), []).append(x)
    if not groups:
        raise UsageError(f"{path}: no observations")
    return list(groups.values())


# --- subcommands ------------------------------------------------------------------------

def cmd_oneway_bf(args, argv) -> int:
    cfg = _load_config(args)
    c = _common(args, cfg, default_reps=1)
    sec = cfg.oneway
    tau = _pick(args.tau, sec.tau, 1.0)
    pi2 = args.pi2 if args.pi2 is not None else (sec.model_prior[1] if sec.model_prior else 0.5)
    prior = (1.0 - pi2, pi2)
    settings = dict(c, tau=tau, model_prior=prior)
    if args.input:
        groups = read_oneway_csv(args.input)
        owc = ow.OneWayConfig(tuple(len(g) for g in groups), tau * tau, prior)
        data = ow.OneWaySufficient.from_groups(groups)
        logF = np.array([ow.log_bayes_factor(data, owc)])
        settings.update(input=args.input)
    else:
        n = _pick(args.n, sec.n, 10)
        mu = _pick(args.mu, sec.mu, None)
        k = _pick(args.k, sec.k, len(mu) if mu else 5)
        freeze = _pick(args.freeze_mu, sec.freeze_mu, False)
        if mu is not None:
            if len(mu) != k:
                raise UsageError(f"--mu has {len(mu)} values but k={k}")
            eff = ow.Fixed(tuple(mu))
            settings.update(mu=list(mu))
        else:
            eps = _pick(args.epsilon, sec.epsilon, 0.3)
            eff = ow.IidNormal(eps * eps)
            settings.update(epsilon=eps)
            if freeze:
                eff = ow.Fixed(tuple(eps * make_rng(c["seed"], FROZEN_MU_STREAM).standard_normal(k)))
        owc = ow.OneWayConfig.balanced(n, k, tau * tau, prior)
        settings.update(n=n, k=k, freeze_mu=freeze)

        def block(rng, size):
            T, _ = ow.simulate_group_sums(rng, owc, eff, size)
            return ow.log_bf_from_sums(T, owc.group_sizes, owc.tau2)

        logF = run_blocks(c["seed"], c["reps"], block, c["workers"])
    n_col = owc.group_sizes[0] if owc.is_balanced else " ".join(map(str, owc.group_sizes))
    rows = [
        [r, owc.k, n_col, tau, float(lf), float(lf) / math.log(10), ow.posterior_prob_model2(float(lf), owc)]
        for r, lf in enumerate(logF)
    ]
    out = Output(c["out"], c["format"])
    out.table(Table("oneway_bf", ["replicate", "k", "n", "tau", "log_F", "log10_F", "post_prob_model2"], rows))
    out.manifest(argv, settings)
    return EXIT_OK


def cmd_median_curve(args, argv) -> int:
    cfg = _load_config(args)
    c = _common(args, cfg, default_reps=1)
    sec = cfg.oneway
    n = _pick(args.n, sec.n, 10)
    tau = _pick(args.tau, sec.tau, 1.0)
    eps = _pick(args.epsilon, sec.epsilon, 0.3)
    k_min = _pick(args.k_min, sec.k_min, 1)
    k_max = _pick(args.k_max, sec.k_max, 200)
    if not 1 <= k_min <= k_max:
        raise UsageError(f"need 1 <= k-min <= k-max, got {k_min}, {k_max}")
    if tau <= 0:
        raise UsageError("the exact law of log F needs tau > 0")
    asym = ow.BalancedAsymptotics.from_params(n, tau * tau, eps * eps)
    curve = ow.median_curve(k_min, k_max, asym)
    rows = [[k, m, m / math.log(10)] for k, m in curve]
    out = Output(c["out"], c["format"])
    table = Table("median_curve", ["k", "median_log_F", "median_log10_F"], rows)
    out.table(table, args.csv)
    title = f"Median of F against number of samples k (n={n}, tau={_cell(tau)}, epsilon={_cell(eps)})"
    svg = median_curve_svg([r[0] for r in rows], [r[2] for r in rows], title)
    if args.svg:
        out.write(Path(args.svg), svg)
    elif out.dir is not None:
        out.write(out.dir / "median_curve.svg", svg)
    fit = [(k, m) for k, m, _ in ((r[0], r[2], None) for r in rows) if k >= max(50, k_min)]
    if len(fit) >= 2:
        slope, _, r2 = ow.fit_line(*zip(*fit))
        print(f"least-squares slope of log10 median F over k in [{fit[0][0]}, {fit[-1][0]}]: {slope:.6g} (R^2 = {r2:.6f})", file=sys.stderr)
    out.manifest(argv, dict(c, n=n, tau=tau, epsilon=eps, k_min=k_min, k_max=k_max, svg=args.svg, csv=args.csv))
    return EXIT_OK


def cmd_oneway_asymptotics(args, argv) -> int:
    cfg = _load_config(args)
    c = _common(args, cfg, default_reps=1)
    sec = cfg.oneway
    n = _pick(args.n, sec.n, 10)
    tau = _pick(args.tau, sec.tau, 1.0)
    eps = _pick(args.epsilon, sec.epsilon, 0.3)
    asym = ow.BalancedAsymptotics.from_params(n, tau * tau, eps * eps)
    slope2 = ow.asymptotic_slope(asym)
    eps_star = ow.critical_epsilon(n, tau * tau)
    rows = [
        ["a", asym.a],
        ["slope_2logF_per_k", slope2],
        ["slope_logF_per_k", slope2 / 2],
        ["critical_epsilon", eps_star],
        ["F_grows_exponentially", slope2 > 0],
        ["note", "2 log F / k tends to slope_2logF_per_k; log F itself grows like k * slope_logF_per_k"],
    ]
    out = Output(c["out"], c["format"])
    out.table(Table("oneway_asymptotics", ["quantity", "value"], rows))
    out.manifest(argv, dict(c, n=n, tau=tau, epsilon=eps))
    return EXIT_OK


def _load_theta(source: str, B: int | None):
    try:
        values = json.loads(Path(source).read_text(encoding="utf-8"))
    except json.JSONDecodeError as exc:
        raise UsageError(f"{source}:{exc.lineno}: {exc.msg}") from None
    try:
        theta = sv.ThetaVector(np.asarray(values, dtype=float))
    except (ValueError, TypeError) as exc:
        raise UsageError(f"{source}: {exc}") from None
    if B is not None and theta.B != B:
        raise UsageError(f"{source}: {theta.B} probabilities but B={B}")
    return theta


def cmd_survey_estimate(args, argv) -> int:
    cfg = _load_config(args)
    c = _common(args, cfg, default_reps=1)
    sec = cfg.survey
    improper = _pick(args.improper, sec.improper, False)
    hp = sv.HyperPrior(_pick(args.alpha0, sec.alpha0, 1.0), _pick(args.beta0, sec.beta0, 1.0), improper=improper)
    settings = dict(c, alpha0=hp.alpha0, beta0=hp.beta0, improper=improper)
    columns = ["replicate", "B", "J_size", "S", "psi_hat", "psi_hat_HT", "bayes_psi_B", "correction_bound", "psi_B_true", "bayes_error", "ht_error"]

    def estimate(d: sv.SurveyData, psi_B_true):
        ph, ht, bayes = sv.psi_hat(d, hp), sv.ht_estimator(d), sv.bayes_psi_B(d, hp)
        truth = [None, None, None] if psi_B_true is None else [psi_B_true, bayes - psi_B_true, ht - psi_B_true]
        return [d.B, d.size, d.S, ph, ht, bayes, sv.correction_bound(hp, d.B), *truth]

    with warnings.catch_warnings(record=True) as caught:
        warnings.simplefilter("always", sv.ImproperPosteriorWarning)
        if args.input:
            try:
                text = Path(args.input).read_text(encoding="utf-8")
            except FileNotFoundError:
                raise
            try:
                data = sv.SurveyData.from_json(text)
            except json.JSONDecodeError as exc:
                raise UsageError(f"{args.input}:{exc.lineno}: {exc.msg}") from None
            except (ValueError, TypeError) as exc:
                raise UsageError(f"{args.input}: {exc}") from None
            rows = [[0, *estimate(data, None)]]
            settings.update(input=args.input)
        else:
            B = _pick(args.B, sec.B, 1000)
            n = _pick(args.n, sec.n, 50)
            if not 1 <= n <= B:
                raise UsageError(f"need 1 <= n <= B, got n={n}, B={B}")
            source = _pick(args.theta_source, sec.theta_source, "hierarchical")
            settings.update(B=B, n=n, theta_source=source)
            if source == "hierarchical":
                mv = sv.BetaMeanVar(_pick(args.psi, sec.psi, 0.3), _pick(args.eta, sec.eta, 0.02))
                settings.update(psi=mv.psi, eta=mv.eta)
                fixed_theta = None
            else:
                fixed_theta = _load_theta(source, B)

            def block(rng, size):
                out_rows = []
                for _ in range(size):
                    theta = fixed_theta if fixed_theta is not None else sv.simulate_hierarchical(rng, B, mv)
                    d = sv.simulate_survey(rng, theta, n)
                    out_rows.append(estimate(d, theta.psi_B))
                return np.array(out_rows, dtype=float)

            table = run_blocks(c["seed"], c["reps"], block, c["workers"], block=1)
            rows = [[r, int(t[0]), int(t[1]), int(t[2]), *t[3:]] for r, t in enumerate(table)]
    improper_hits = sum(issubclass(w.category, sv.ImproperPosteriorWarning) for w in caught)
    if improper_hits:
        print(
            f"warning: improper posterior for psi (S = 0 or S = |J|) in {improper_hits} evaluation(s); "
            "reported psi_hat is the Horvitz-Thompson value",
            file=sys.stderr,
        )
    out = Output(c["out"], c["format"])
    out.table(Table("survey_estimate", columns, rows))
    out.manifest(argv, settings)
    return EXIT_OK


def cmd_verify(args, argv) -> int:
    cfg = _load_config(args)
    c = _common(args, cfg, default_reps=1)
    results = vf.run_suite(args.suite, args.level, c["seed"])
    rows = []
    for r in results:
        status = "PASS" if r.passed else "FAIL"
        print(f"{status}  {r.name}: max deviation {_cell(r.deviation)} (tolerance {_cell(r.tolerance)})")
        if not r.passed:
            print(f"      failing instance: {r.detail} [seed={c['seed']}, level={args.level}]")
        rows.append([r.name, status, r.deviation, r.tolerance, r.detail])
    failed = sum(not r.passed for r in results)
    print(f"{len(results) - failed}/{len(results)} checks passed")
    if c["out"]:
        out = Output(c["out"], c["format"])
        out.table(Table("verify", ["check", "status", "max_deviation", "tolerance", "instance"], rows))
        out.manifest(argv, dict(c, suite=args.suite, level=args.level))
    return EXIT_VERIFY if failed else EXIT_OK


# --- parser ----------------------------------------------------------------------------

def _floats(text: str):
    try:
        return [float(v) for v in text.split(",") if v.strip()]
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma-separated numbers, got {text!r}") from None


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--seed", type=int, help=f"64-bit seed (default {DEFAULT_SEED})")
    common.add_argument("--reps", type=int, help="number of simulated replicates")
    common.add_argument("--out", help="output directory (data files plus manifest.json)")
    common.add_argument("--format", choices=["csv", "json"], help="table format (default csv)")
    common.add_argument("--config", help="TOML experiment config; flags override it")
    common.add_argument("--workers", type=int, help="threads for replicate blocks (results do not depend on it)")

    p = argparse.ArgumentParser(prog="indprior", description=__doc__.split("\n\n")[0])
    p.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = p.add_subparsers(dest="command", required=True)

    s = sub.add_parser("oneway-bf", parents=[common], help="log Bayes factor of the zero-means submodel")
    src = s.add_mutually_exclusive_group()
    src.add_argument("--input", help="CSV with header 'group,x'")
    src.add_argument("--simulate", action="store_true", help="simulate replicates (the default without --input)")
    s.add_argument("--n", type=int, help="observations per group (simulation)")
    s.add_argument("--k", type=int, help="number of groups (simulation)")
    s.add_argument("--tau", type=float, help="prior sd of the group means under the full model")
    s.add_argument("--epsilon", type=float, help="sd of the true iid N(0, eps^2) means")
    s.add_argument("--mu", type=_floats, help="fixed true means, comma separated")
    s.add_argument("--freeze-mu", action="store_const", const=True, help="draw the iid means once and reuse them")
    s.add_argument("--pi2", type=float, help="prior probability of the submodel (default 0.5)")
    s.set_defaults(func=cmd_oneway_bf)

    s = sub.add_parser("median-curve", parents=[common], help="exact median of log F for a range of k")
    s.add_argument("--n", type=int)
    s.add_argument("--tau", type=float)
    s.add_argument("--epsilon", type=float)
    s.add_argument("--k-min", type=int)
    s.add_argument("--k-max", type=int)
    s.add_argument("--svg", help="write the chart here")
    s.add_argument("--csv", help="write the table here")
    s.set_defaults(func=cmd_median_curve)

    s = sub.add_parser("oneway-asymptotics", parents=[common], help="limiting slope of 2 log F / k and critical epsilon")
    s.add_argument("--n", type=int)
    s.add_argument("--tau", type=float)
    s.add_argument("--epsilon", type=float)
    s.set_defaults(func=cmd_oneway_asymptotics)

    s = sub.add_parser("survey-estimate", parents=[common], help="estimates of the finite-population mean")
    src = s.add_mutually_exclusive_group()
    src.add_argument("--input", help="SurveyData JSON document")
    src.add_argument("--simulate", action="store_true", help="simulate surveys (the default without --input)")
    s.add_argument("--B", type=int, help="population size (simulation)")
    s.add_argument("--n", type=int, help="sample size (simulation)")
    s.add_argument("--psi", type=float, help="Beta mean of theta (simulation)")
    s.add_argument("--eta", type=float, help="Beta variance of theta (simulation)")
    s.add_argument("--theta-source", help="'hierarchical' or a JSON array of B probabilities")
    s.add_argument("--alpha0", type=float)
    s.add_argument("--beta0", type=float)
    s.add_argument("--improper", action="store_const", const=True, help="use the improper limit alpha0, beta0 -> 0")
    s.set_defaults(func=cmd_survey_estimate)

    s = sub.add_parser("verify", parents=[common], help="oracle agreement suites")
    s.add_argument("--suite", choices=["oneway", "survey", "all"], default="all")
    s.add_argument("--level", choices=["quick", "full"], default="quick")
    s.set_defaults(func=cmd_verify)
    return p


def main(argv=None) -> int:
    argv = list(sys.argv[1:] if argv is None else argv)
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)
    try:
        return args.func(args, argv)
    except (UsageError, ValueError) as exc:
        print(f"indprior {args.command}: error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except OSError as exc:
        print(f"indprior {args.command}: I/O error: {exc}", file=sys.stderr)
        return EXIT_IO


if __name__ == "__main__":
    sys.exit(main())
