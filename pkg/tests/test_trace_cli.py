import io
import json
import subprocess
import sys

import numpy as np
import pytest

from pdadapt import cli
from pdadapt.errors import ConfigError, ParseError
from pdadapt.trace import CSV_HEADER, Trace, TracePoint, read_csv, to_csv_string, write_csv

BPD_ARGS = ["run", "--algo", "bpd", "--synth", "n=200,d=100,q=2", "--loss", "squared",
            "--reg", "l2", "--lambda", "1/n", "--passes", "100", "--seed", "7"]


def _trace(gaps, algo="t", primal_only=False):
    tr = Trace(algo)
    for k, g in enumerate(gaps):
        if primal_only:
            tr.append(TracePoint(k, 1.0 + g))
        else:
            tr.append(TracePoint(k, 1.0 + g, 1.0, (1.0 + g) - 1.0, 0.0))
    return tr


def test_trace_csv_round_trip():
    tr = Trace("x")
    tr.append(TracePoint(0, 2.5, 1.0, 1.5, 0.01, None, None))
    tr.append(TracePoint(3, 2.0, 1.9, 2.0 - 1.9, 0.02, 0.125, "adapt:up"))
    text = to_csv_string(tr)
    assert text.splitlines()[0] == CSV_HEADER
    back = read_csv(io.StringIO(text), algo="x")
    assert back.points == tr.points
    assert to_csv_string(tr, timing=False).splitlines()[1] == "0,2.5,1.0,1.5,,,"


def test_trace_rejects_non_increasing():
    tr = Trace("x")
    tr.append(TracePoint(1, 1.0))
    with pytest.raises(ValueError):
        tr.append(TracePoint(1, 0.5))


@pytest.mark.parametrize(
    "body, line",
    [
        ("0,1.0,,,,,\n0,0.5,,,,,\n", 3),
        ("0,1.0,0.5,0.4,,,\n", 2),
        ("0,abc,,,,,\n", 2),
        ("0,1.0,,,\n", 2),
        ("x,1.0,,,,,\n", 2),
        ("0,,,,,,\n", 2),
    ],
)
def test_read_csv_errors(body, line):
    with pytest.raises(ParseError) as info:
        read_csv(io.StringIO(CSV_HEADER + "\n" + body))
    assert info.value.lineno == line


def test_read_csv_bad_header_and_empty():
    with pytest.raises(ParseError):
        read_csv(io.StringIO("a,b\n"))
    with pytest.raises(ParseError):
        read_csv(io.StringIO(""))


def test_resolve_lambda():
    assert cli.resolve_lambda("1/n", 200) == 1 / 200
    assert cli.resolve_lambda("1e-2/n", 300) == float(__import__("fractions").Fraction(1, 30000))
    assert cli.resolve_lambda("1e-4/n", 1000) == 1e-7
    assert cli.resolve_lambda("0.5", 10) == 0.5
    assert cli.resolve_lambda("2*3/n", 12) == 0.5
    for bad in ("", "1//n", "a/n", "1/0", "-1/n"):
        with pytest.raises(ConfigError):
            cli.resolve_lambda(bad, 10)


def test_parse_synth_and_period():
    assert cli.parse_synth("n=10,d=3,q=2") == {"n": 10, "d": 3, "q": 2.0}
    with pytest.raises(ConfigError):
        cli.parse_synth("n=10,d=3")
    with pytest.raises(ConfigError):
        cli.parse_synth("n=10,d=3,q=2,k=1")
    assert cli.parse_period("inf") is None and cli.parse_period("7") == 7


def test_run_writes_101_rows(tmp_path):
    out = tmp_path / "bpd.csv"
    assert cli.main(BPD_ARGS + ["--out", str(out)]) == 0
    lines = out.read_text().splitlines()
    assert lines[0] == CSV_HEADER and len(lines) == 102
    tr = read_csv(open(out))
    assert list(tr.passes) == list(range(101))


def test_run_is_deterministic(tmp_path):
    a, b = tmp_path / "a.csv", tmp_path / "b.csv"
    for p in (a, b):
        assert cli.main(BPD_ARGS + ["--out", str(p), "--no-timing"]) == 0
    assert a.read_bytes() == b.read_bytes()


def test_output_env_and_stdout(tmp_path, monkeypatch, capsys):
    monkeypatch.setenv(cli.OUTPUT_ENV, str(tmp_path / "traces"))
    args = ["run", "--algo", "spdc", "--synth", "n=50,d=10,q=2", "--passes", "3", "--seed", "2"]
    assert cli.main(args) == 0
    assert (tmp_path / "traces" / "spdc_seed2.csv").exists()
    capsys.readouterr()
    assert cli.main(args + ["--out", "-"]) == 0
    out = capsys.readouterr().out
    assert out.splitlines()[0] == CSV_HEADER and len(out.splitlines()) == 5


def test_repeat_runs_seeds(tmp_path):
    base = ["run", "--algo", "adf-spdc", "--synth", "n=60,d=10,q=2", "--passes", "5",
            "--no-timing"]
    assert cli.main(base + ["--repeat", "3", "--seed", "4", "--out", str(tmp_path / "r.csv")]) == 0
    files = sorted(p.name for p in tmp_path.iterdir())
    assert files == ["r_seed4.csv", "r_seed5.csv", "r_seed6.csv"]
    single = tmp_path / "single.csv"
    assert cli.main(base + ["--seed", "5", "--out", str(single)]) == 0
    assert single.read_bytes() == (tmp_path / "r_seed5.csv").read_bytes()


@pytest.mark.parametrize("algo", cli.ALGOS)
def test_every_algorithm_runs(tmp_path, algo):
    out = tmp_path / f"{algo}.csv"
    args = ["run", "--algo", algo, "--synth", "n=40,d=8,q=2", "--passes", "4",
            "--adapt-period", "2", "--out", str(out)]
    assert cli.main(args) == 0
    assert len(out.read_text().splitlines()) == 6


def test_logistic_and_elastic_net(tmp_path):
    out = tmp_path / "l.csv"
    assert cli.main(["run", "--algo", "ada-bpd", "--synth", "n=60,d=8,q=2", "--loss", "logistic",
                     "--lambda", "1e-2/n", "--passes", "10", "--out", str(out)]) == 0
    assert cli.main(["run", "--algo", "spdc", "--synth", "n=60,d=8,q=2", "--reg", "elastic-net",
                     "--lambda1", "1e-3", "--lambda2", "1/n", "--passes", "5",
                     "--out", str(out)]) == 0


def test_libsvm_input(tmp_path):
    data = tmp_path / "d.libsvm"
    rng = np.random.default_rng(0)
    lines = []
    for i in range(30):
        feats = " ".join(f"{j}:{rng.normal():.6f}" for j in range(1, 6))
        lines.append(f"{1 if i % 2 else -1} {feats}")
    data.write_text("\n".join(lines) + "\n")
    out = tmp_path / "o.csv"
    assert cli.main(["run", "--algo", "df-bpd", "--data", str(data), "--loss", "logistic",
                     "--passes", "5", "--out", str(out)]) == 0


def test_exit_codes(tmp_path, capsys):
    out = str(tmp_path / "x.csv")
    # configuration errors
    assert cli.main(["run", "--algo", "bpd", "--synth", "n=10,d=3", "--out", out]) == 2
    assert cli.main(["run", "--algo", "ada-bpd", "--synth", "n=10,d=3,q=2", "--lambda", "0",
                     "--out", out]) == 2
    assert cli.main(["run", "--algo", "bpd", "--data", str(tmp_path / "missing"), "--out", out]) == 2
    bad = tmp_path / "bad.libsvm"
    bad.write_text("1 1:1\n1 0:1\n")
    assert cli.main(["run", "--algo", "bpd", "--data", str(bad), "--out", out]) == 2
    assert "line 2" in capsys.readouterr().err
    with pytest.raises(SystemExit) as info:
        cli.main(["run", "--algo", "nope", "--synth", "n=10,d=3,q=2"])
    assert info.value.code == 2


def test_solver_failure_exit_code(tmp_path, monkeypatch):
    from pdadapt.errors import ConvergenceError

    def boom(*a, **k):
        raise ConvergenceError("synthetic failure")

    monkeypatch.setattr(cli.batch_pd, "bpd", boom)
    assert cli.main(["run", "--algo", "bpd", "--synth", "n=10,d=3,q=2",
                     "--out", str(tmp_path / "x.csv")]) == 3


def test_summarize(tmp_path, capsys):
    paths = []
    for name, gaps in (("slow", [1.0, 1e-3]), ("fast", [1.0, 1e-9])):
        p = tmp_path / f"{name}.csv"
        with open(p, "w") as fh:
            write_csv(_trace(gaps, name), fh)
        paths.append(str(p))
    base = tmp_path / "svrg.csv"
    with open(base, "w") as fh:
        write_csv(_trace([1.0, 0.5], "svrg", primal_only=True), fh)

    rows = cli.summarize_rows(paths[:1], 1e-6)
    assert len(rows) == 1
    rows = cli.summarize_rows(paths, 1e-6)
    assert [r["algo"] for r in rows] == ["fast", "slow"]
    assert rows[0]["passes_to_tol"] == 1 and rows[1]["passes_to_tol"] is None
    rows = cli.summarize_rows(paths + [str(base)], 1e-6)
    assert rows[-1]["algo"] == "svrg" and rows[-1]["final_gap"] is None

    assert cli.main(["summarize", *paths, str(base)]) == 0
    table = capsys.readouterr().out.splitlines()
    assert table[1].startswith("fast") and table[3].startswith("svrg")
    assert cli.main(["summarize", "--json", *paths]) == 0
    data = json.loads(capsys.readouterr().out)
    assert [r["algo"] for r in data["rows"]] == ["fast", "slow"]

    broken = tmp_path / "broken.csv"
    broken.write_text("nope\n")
    assert cli.main(["summarize", str(broken)]) == 2


def test_module_entry_point(tmp_path):
    out = tmp_path / "m.csv"
    res = subprocess.run([sys.executable, "-m", "pdadapt", "run", "--algo", "saga", "--synth",
                          "n=30,d=5,q=2", "--passes", "2", "--out", str(out)],
                         capture_output=True, text=True)
    assert res.returncode == 0, res.stderr
    assert len(out.read_text().splitlines()) == 4
