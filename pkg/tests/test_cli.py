import json
import math
import time
import xml.etree.ElementTree as ET

import pytest

from indprior import cli
from indprior import oneway as ow

SVG = "{http://www.w3.org/2000/svg}"


def run(capsys, *argv):
    code = cli.main(list(argv))
    out, err = capsys.readouterr()
    return code, out, err


@pytest.fixture
def zeros_csv(tmp_path):
    p = tmp_path / "zeros.csv"
    p.write_text("group,x\n" + "".join(f"{g},0\n" for g in range(5) for _ in range(10)))
    return p


def test_zero_dataset_log_bf(capsys, zeros_csv):
    code, out, _ = run(capsys, "oneway-bf", "--input", str(zeros_csv), "--tau", "1")
    assert code == 0
    header, row = out.strip().splitlines()
    assert header == "replicate,k,n,tau,log_F,log10_F,post_prob_model2"
    fields = dict(zip(header.split(","), row.split(",")))
    assert float(fields["log_F"]) == pytest.approx(5.99473818199592636, abs=1e-8)
    assert fields["k"] == "5" and fields["n"] == "10"


def test_oneway_csv_errors_name_line(capsys, tmp_path):
    p = tmp_path / "bad.csv"
    p.write_text("group,x\na,1.0\na,oops\n")
    code, _, err = run(capsys, "oneway-bf", "--input", str(p))
    assert code == 2 and "bad.csv:3" in err
    p.write_text("g,value\n")
    assert run(capsys, "oneway-bf", "--input", str(p))[0] == 2


def test_missing_input_is_io_error(capsys, tmp_path):
    assert run(capsys, "oneway-bf", "--input", str(tmp_path / "nope.csv"))[0] == 3
    assert run(capsys, "survey-estimate", "--input", str(tmp_path / "nope.json"))[0] == 3


def test_usage_errors(capsys):
    assert run(capsys, "no-such-command")[0] == 2
    assert run(capsys, "oneway-bf", "--reps", "0")[0] == 2
    assert run(capsys, "oneway-bf", "--seed", "-1")[0] == 2
    assert run(capsys, "median-curve", "--k-min", "10", "--k-max", "5")[0] == 2
    assert run(capsys, "median-curve", "--tau", "0")[0] == 2
    assert run(capsys, "oneway-bf", "--k", "3", "--mu", "0.1,0.2")[0] == 2
    assert run(capsys, "survey-estimate", "--B", "10", "--n", "11")[0] == 2


@pytest.mark.parametrize(
    "doc",
    [
        '{"B": 10, "J": [1, 2], "Y": {"1": 1}}',
        '{"B": 10, "J": [1, 2], "Y": {"1": 1, "2": 0, "5": 1}}',
        '{"B": 10, "J": [1, 11], "Y": {"1": 1, "11": 0}}',
        '{"B": 10, "J": [1, 2], "Y": {"1": 1, "2": 3}}',
        '{"B": 10, "J": [1], "Y": {"1": 1}, "extra": 0}',
        '{"B": 10, "J": [1, 2',
    ],
)
def test_malformed_survey_input(capsys, tmp_path, doc):
    p = tmp_path / "s.json"
    p.write_text(doc)
    code, _, err = run(capsys, "survey-estimate", "--input", str(p))
    assert code == 2 and "error" in err


def test_config_unknown_key_rejected(capsys, tmp_path):
    cfg = tmp_path / "c.toml"
    cfg.write_text("[oneway]\nn = 10\nkk = 3\n")
    code, _, err = run(capsys, "oneway-bf", "--config", str(cfg))
    assert code == 2 and "kk" in err
    cfg.write_text("[plots]\nx = 1\n")
    assert run(capsys, "oneway-bf", "--config", str(cfg))[0] == 2


def test_flags_override_config(capsys, tmp_path):
    cfg = tmp_path / "c.toml"
    cfg.write_text("[run]\nreps = 3\nseed = 5\n[oneway]\nk = 4\nn = 6\n")
    _, out, _ = run(capsys, "oneway-bf", "--config", str(cfg), "--k", "7")
    rows = out.strip().splitlines()[1:]
    assert len(rows) == 3 and all(r.split(",")[1:3] == ["7", "6"] for r in rows)


def _files(d):
    return {p.name: p.read_bytes() for p in sorted(d.iterdir()) if p.name != "manifest.json"}


@pytest.mark.parametrize(
    "argv",
    [
        ["oneway-bf", "--k", "12", "--reps", "4500", "--epsilon", "0.35"],
        ["oneway-bf", "--k", "6", "--reps", "300", "--freeze-mu"],
        ["survey-estimate", "--B", "200", "--n", "20", "--reps", "40"],
        ["median-curve", "--k-max", "60"],
    ],
)
@pytest.mark.parametrize("fmt", ["csv", "json"])
def test_outputs_are_deterministic(tmp_path, capsys, argv, fmt):
    dirs = []
    for i, workers in enumerate(["1", "1", "4"]):
        d = tmp_path / f"run{i}"
        assert cli.main([*argv, "--seed", "99", "--format", fmt, "--workers", workers, "--out", str(d)]) == 0
        dirs.append(d)
    capsys.readouterr()
    assert _files(dirs[0]) == _files(dirs[1]) == _files(dirs[2])
    m = [json.loads((d / "manifest.json").read_text()) for d in dirs]
    assert m[0]["config_hash"] == m[1]["config_hash"]
    assert m[0]["seed"] == 99 and m[0]["outputs"]


def test_seed_changes_output(capsys):
    a = run(capsys, "oneway-bf", "--reps", "3", "--seed", "1")[1]
    b = run(capsys, "oneway-bf", "--reps", "3", "--seed", "2")[1]
    assert a != b


def test_json_document_shape(capsys):
    code, out, _ = run(capsys, "oneway-asymptotics", "--format", "json")
    doc = json.loads(out)
    values = {r["quantity"]: r["value"] for r in doc["rows"]}
    assert code == 0 and doc["columns"] == ["quantity", "value"]
    assert values["slope_2logF_per_k"] == pytest.approx(0.6706225455, abs=1e-9)
    assert values["slope_logF_per_k"] == pytest.approx(0.6706225455 / 2, abs=1e-9)
    assert values["critical_epsilon"] == pytest.approx(0.4046831847, abs=1e-9)
    assert values["F_grows_exponentially"] is True


def test_small_epsilon_gives_exponential_growth_flag(capsys):
    _, out, _ = run(capsys, "oneway-asymptotics", "--epsilon", "0.5")
    assert "F_grows_exponentially,false" in out


def test_median_curve_svg(tmp_path, capsys):
    svg, table = tmp_path / "fig.svg", tmp_path / "fig.csv"
    code, _, err = run(capsys, "median-curve", "--k-min", "1", "--k-max", "200", "--svg", str(svg), "--csv", str(table))
    assert code == 0 and "slope" in err
    root = ET.parse(svg).getroot()
    assert root.tag == f"{SVG}svg"
    lines = root.findall(f"{SVG}polyline")
    assert len(lines) == 1
    assert len(lines[0].get("points").split()) == 200
    rows = table.read_text().strip().splitlines()
    assert rows[0] == "k,median_log_F,median_log10_F" and len(rows) == 201
    k, m, m10 = map(float, rows[-1].split(","))
    assert k == 200 and m == pytest.approx(67.637669691928483, abs=1e-7)
    assert m10 == pytest.approx(m / math.log(10), rel=1e-9)


def test_improper_prior_reports_ht(tmp_path, capsys):
    p = tmp_path / "s.json"
    p.write_text('{"B": 20, "J": [2, 5, 9, 14], "Y": {"2": 1, "5": 1, "9": 1, "14": 1}}')
    code, out, err = run(capsys, "survey-estimate", "--input", str(p), "--improper")
    assert code == 0 and "warning" in err
    row = dict(zip(*[line.split(",") for line in out.strip().splitlines()]))
    assert row["psi_hat"] == row["psi_hat_HT"] == "1"
    assert float(row["bayes_psi_B"]) == 1.0


def test_improper_simulated_columns_equal_ht(capsys):
    code, out, _ = run(capsys, "survey-estimate", "--reps", "20", "--improper", "--B", "300", "--n", "30")
    rows = [r.split(",") for r in out.strip().splitlines()[1:]]
    assert code == 0 and all(r[4] == r[5] == r[6] for r in rows)


def test_survey_census_within_bound(tmp_path, capsys):
    p = tmp_path / "s.json"
    p.write_text('{"B": 4, "J": [1, 2, 3, 4], "Y": {"1": 1, "2": 0, "3": 1, "4": 1}}')
    _, out, _ = run(capsys, "survey-estimate", "--input", str(p))
    row = dict(zip(*[line.split(",") for line in out.strip().splitlines()]))
    assert abs(float(row["bayes_psi_B"]) - float(row["psi_hat"])) <= float(row["correction_bound"])


def test_theta_file_source(tmp_path, capsys):
    theta = tmp_path / "theta.json"
    theta.write_text(json.dumps([0.1] * 50 + [0.7] * 50))
    code, out, _ = run(capsys, "survey-estimate", "--theta-source", str(theta), "--B", "100", "--n", "10", "--reps", "3")
    rows = [r.split(",") for r in out.strip().splitlines()[1:]]
    assert code == 0 and {float(r[8]) for r in rows} == {0.4}
    assert run(capsys, "survey-estimate", "--theta-source", str(theta), "--B", "90")[0] == 2


def test_verify_quick_passes_and_is_fast(capsys, tmp_path):
    t0 = time.perf_counter()
    code, out, _ = run(capsys, "verify", "--level", "quick", "--out", str(tmp_path))
    assert code == 0 and time.perf_counter() - t0 < 60
    assert "FAIL" not in out and (tmp_path / "verify.csv").exists()


def test_verify_catches_sign_flip(monkeypatch, capsys):
    real = ow.posterior_prob_model2
    monkeypatch.setattr(ow, "posterior_prob_model2", lambda logF, cfg: real(-logF, cfg))
    code, out, _ = run(capsys, "verify", "--suite", "oneway", "--level", "quick", "--seed", "7")
    assert code == 1
    assert "FAIL  oneway posterior" in out and "seed=7" in out


def test_tau_zero_gives_zero_log_bf(capsys):
    code, out, _ = run(capsys, "oneway-bf", "--simulate", "--tau", "0", "--reps", "4")
    rows = [r.split(",") for r in out.strip().splitlines()[1:]]
    assert code == 0 and [r[4] for r in rows] == ["0"] * 4


def test_input_and_simulate_are_exclusive(capsys, zeros_csv):
    assert run(capsys, "oneway-bf", "--simulate", "--input", str(zeros_csv))[0] == 2


def _asymptotics(capsys, eps):
    _, out, _ = run(capsys, "oneway-asymptotics", "--n", "10", "--tau", "1", "--epsilon", repr(eps))
    return dict(line.split(",", 1) for line in out.strip().splitlines()[1:])


def test_asymptotics_sign_around_critical_epsilon(capsys):
    assert float(_asymptotics(capsys, 0.5)["slope_2logF_per_k"]) < 0
    assert abs(float(_asymptotics(capsys, ow.critical_epsilon(10, 1.0))["slope_2logF_per_k"])) < 1e-9


def test_survey_example_row(tmp_path, capsys):
    p = tmp_path / "s.json"
    Y = {str(j): int(j <= 3) for j in range(1, 11)}
    p.write_text(json.dumps({"B": 1000, "J": list(range(1, 11)), "Y": Y}))
    _, out, _ = run(capsys, "survey-estimate", "--input", str(p), "--alpha0", "1", "--beta0", "1")
    row = dict(zip(*[line.split(",") for line in out.strip().splitlines()]))
    assert (row["S"], row["J_size"], row["B"]) == ("3", "10", "1000")
    assert float(row["psi_hat"]) == pytest.approx(1 / 3, abs=1e-9)
    assert float(row["bayes_psi_B"]) == pytest.approx(0.33316666666666667, abs=1e-9)
