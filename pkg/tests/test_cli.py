import csv
import io
import json
import subprocess
import sys

import pytest

from oracles import forward_reach
from rumorbench import __version__
from rumorbench import cli
from rumorbench.engine import draw_offsets, make_lists
from rumorbench.errors import BoundViolation
from rumorbench.graph import hypercube_graph
from rumorbench.rng import derive_seed


def run(capsys, *argv):
    code = cli.main(list(argv))
    out, err = capsys.readouterr()
    return code, out, err


def test_simulate_adversarial_path(capsys):
    code, out, _ = run(capsys, "simulate", "--family", "path", "--n", "5", "--model", "quasirandom",
                       "--adversarial", "--seed", "0")
    assert code == 0
    assert out.strip() == "broadcast_time 7"


def test_bench_csv(capsys):
    code, out, _ = run(capsys, "bench", "--family", "complete", "--n", "1024", "--models",
                       "fully_random,quasirandom", "--trials", "1000", "--seed", "7", "--format", "csv")
    assert code == 0
    lines = out.splitlines()
    header = json.loads(lines[0][2:])
    assert header["version"] == __version__ and header["config"]["trials"] == 1000
    rows = list(csv.reader(lines[1:]))
    assert rows[0] == ["n", "model", "trials", "mean", "stddev", "p50", "p90", "p99", "max", "timeouts"]
    assert len(rows) == 3
    for r in rows[1:]:
        assert 15.2 <= float(r[3]) <= 18.6


def test_reach_matches_forward_oracle(capsys):
    code, out, _ = run(capsys, "reach", "--family", "hypercube", "--d", "3", "--w", "0", "--a", "1", "--b", "24",
                       "--seed", "3")
    assert code == 0
    got = json.loads(out)
    g = hypercube_graph(3)
    lists = make_lists(g, "natural", derive_seed(3, "lists"))
    assert got == sorted(forward_reach(g, lists, draw_offsets(g, 3), 0, 1, 24))
    assert got == [1, 2, 3, 4, 5, 6, 7]


def test_usage_errors_exit_1(capsys, tmp_path):
    assert run(capsys, "simulate", "--bogus")[0] == 1
    assert run(capsys)[0] == 1
    assert run(capsys, "frobnicate")[0] == 1
    code, _, err = run(capsys, "simulate", "--family", "path", "--n", "5", "--out", str(tmp_path / "no" / "x.json"))
    assert code == 1 and "cannot write" in err
    bad = tmp_path / "bad.json"
    bad.write_text("{not json")
    assert run(capsys, "simulate", "--config", str(bad))[0] == 1
    assert run(capsys, "simulate", "--family", "random_regular", "--n", "5", "--d", "3")[0] == 1


def test_bound_violation_exits_2(capsys, monkeypatch):
    def boom(*a, **k):
        raise BoundViolation("synthetic")

    monkeypatch.setattr(cli, "simulate", boom)
    code, _, err = run(capsys, "simulate", "--family", "path", "--n", "5")
    assert code == 2 and "invariant violation" in err


def test_config_file_and_flag_override(capsys, tmp_path):
    kv = tmp_path / "run.cfg"
    kv.write_text("# comment\nfamily = path\nn = 30\nmodel = fully_random\nseed = 4\n")
    code, out, _ = run(capsys, "simulate", "--config", str(kv), "--n", "10", "--format", "json")
    assert code == 0
    d = json.loads(out)
    assert d["config"]["n"] == 10 and d["config"]["model"] == "fully_random" and d["config"]["seed"] == 4
    assert len(d["informed_at"]) == 10
    js = tmp_path / "run.json"
    js.write_text(json.dumps({"family": "complete", "n": 16, "trials": 5}))
    code, out, _ = run(capsys, "bench", "--config", str(js), "--format", "json")
    d = json.loads(out)
    assert d["config"]["graph_spec"]["params"] == {"n": 16}
    assert d["version"] == __version__


def test_identical_argv_identical_output(capsys, tmp_path):
    argv = ["bench", "--family", "gnp", "--n", "128", "--p", "0.08", "--trials", "20", "--seed", "9", "--format", "json"]
    a = run(capsys, *argv)[1]
    b = run(capsys, *argv)[1]
    assert a == b


def test_out_file_and_curves(capsys, tmp_path):
    out = tmp_path / "r.csv"
    curves = tmp_path / "c.csv"
    code, stdout, _ = run(capsys, "bench", "--family", "hypercube", "--d", "6", "--trials", "20", "--format", "csv",
                          "--out", str(out), "--curves", str(curves))
    assert code == 0 and "speedup" in stdout
    assert out.read_text().startswith("# {")
    lines = curves.read_text().splitlines()
    assert lines[1] == "model,t,mean_informed"


def test_gen_and_graph_file(capsys, tmp_path):
    path = tmp_path / "g.txt"
    assert run(capsys, "gen", "--family", "cycle", "--n", "6", "--out", str(path))[0] == 0
    text = path.read_text()
    assert text.startswith("# {") and "6 6" in text
    code, out, _ = run(capsys, "spectral", "--graph-file", str(path))
    assert code == 0 and "lambda1 2" in out


@pytest.mark.parametrize("argv", [
    ["audit", "--family", "complete", "--n", "10", "--c-alpha", "2.7"],
    ["spectral", "--family", "random_regular", "--n", "100", "--d", "4", "--seed", "2"],
    ["sweep", "--family", "complete", "--sizes", "32,64", "--trials", "10"],
    ["simulate", "--family", "two_clique_hub", "--n", "64", "--adversarial", "--seed", "1"],
    ["simulate", "--family", "hypercube", "--d", "5", "--trace", "--model", "literal"],
])
def test_subcommands_succeed(capsys, argv):
    assert run(capsys, *argv)[0] == 0


def test_trace_jsonl_output(capsys, tmp_path):
    out = tmp_path / "t.jsonl"
    assert run(capsys, "simulate", "--family", "path", "--n", "6", "--trace", "--out", str(out))[0] == 0
    rows = [json.loads(x) for x in out.read_text().splitlines()]
    assert rows[0]["version"] == __version__ and rows[0]["n"] == 6
    assert all("t" in r for r in rows[1:])


def test_module_entry_point():
    res = subprocess.run([sys.executable, "-m", "rumorbench", "simulate", "--family", "path", "--n", "5",
                          "--adversarial"], capture_output=True, text=True)
    assert res.returncode == 0 and res.stdout.strip() == "broadcast_time 7"
