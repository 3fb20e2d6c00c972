import json
from pathlib import Path

import pytest

from noisy_bai.cli import main, parse_channel, parse_instance

CONFIGS = Path(__file__).resolve().parent.parent / "configs"


def run(capsys, *argv):
    code = main(list(argv))
    out, err = capsys.readouterr()
    return code, out, err


def test_parse_channel_forms(tmp_path):
    assert parse_channel("typewriter:6:0.3") == {"type": "typewriter", "k": 6, "eps": 0.3}
    assert parse_channel("identity:4") == {"type": "identity", "k": 4}
    assert parse_channel('{"type": "identity", "k": 3}')["k"] == 3
    f = tmp_path / "ch.json"
    f.write_text('{"type": "typewriter", "k": 5, "eps": 0.1}')
    assert parse_channel(str(f))["k"] == 5
    assert parse_instance("1,0.5,0")["mu"] == [1.0, 0.5, 0.0]
    assert parse_instance("[1, 2]")["mu"] == [1, 2]


def test_graph_alpha(capsys):
    code, out, _ = run(capsys, "graph", "alpha", "--channel", "typewriter:5:0.3", "--power", "2")
    lines = out.splitlines()
    assert code == 0 and lines[0] == "alpha 5" and lines[1] == "exact true"
    witness = lines[2].split(" ", 1)[1]
    assert witness.count("(") == 5
    assert lines[3].startswith("seconds ")


def test_graph_nstar(capsys):
    assert run(capsys, "graph", "nstar", "--channel", "typewriter:6:0.3", "--messages", "6")[1].startswith("nstar 2")
    code, out, _ = run(capsys, "graph", "nstar", "--channel", '{"type": "explicit", "rows": [[0.5, 0.5], [0.5, 0.5]]}',
                       "--messages", "2")
    assert code == 1 and "complete-graph" in out


def test_code_build_is_deterministic(capsys):
    a = run(capsys, "code", "build", "--scheme", "slope-c5")[1]
    b = run(capsys, "code", "build", "--scheme", "slope-c5")[1]
    assert a == b and "codeword 4 -> (4, 3)" in a
    p = run(capsys, "code", "build", "--scheme", "parity-c6")[1]
    assert "decode slot 2: 5 1 1 3 3 5" in p
    code, out, _ = run(capsys, "code", "build", "--scheme", "from-indset", "--channel", "typewriter:7:0.2",
                       "--messages", "7")
    assert code == 0 and "messages 7" in out
    assert run(capsys, "code", "build", "--scheme", "from-indset")[0] == 2


def test_simulate(capsys, tmp_path):
    code, out, _ = run(capsys, "simulate", "--case", "2b", "--channel", "typewriter:6:0.3",
                       "--instance", "0,0.4,1,0.7,-0.5,-1", "--reps", "3", "--seed", "2",
                       "--dump-trace", str(tmp_path / "tr"))
    assert code == 0
    csv_part, json_part = out.split("\n\n", 1)
    assert len(csv_part.splitlines()) == 4
    summary = json.loads(json_part)
    assert summary["reps"] == 3 and summary["identity_pass"] == 3
    assert len(list((tmp_path / "tr").glob("trace_*.csv"))) == 3


def test_simulate_out_dir(capsys, tmp_path):
    code, out, _ = run(capsys, "simulate", "--case", "3", "--channel", "typewriter:5:0.3",
                       "--instance", "0.7,1,0.4,0,-0.5", "--reps", "2", "--out", str(tmp_path))
    assert code == 0 and out == ""
    assert (tmp_path / "reps.csv").exists() and (tmp_path / "summary.json").exists()


def test_simulate_bad_input(capsys):
    code, _, err = run(capsys, "simulate", "--case", "2a", "--channel", "typewriter:6:0.3",
                       "--instance", "1,1,0,0,0,0", "--reps", "1")
    assert code == 2 and "unique" in err
    code, _, err = run(capsys, "simulate", "--case", "1", "--channel", "typewriter:6:0.5",
                       "--instance", "0,0.4,1,0.7,-0.5,-1", "--reps", "1")
    assert code == 1


def test_sweep(capsys, tmp_path):
    code, out, _ = run(capsys, "sweep", str(CONFIGS / "smoke.yaml"), "--out", str(tmp_path))
    assert code == 0 and len(out.splitlines()) == 4
    assert (tmp_path / "summary.json").exists()


def test_reproduce(capsys):
    code, out, _ = run(capsys, "reproduce", "combinatorics")
    assert code == 0 and out.startswith("[PASS] combinatorics")
    code, _, err = run(capsys, "reproduce", "no-such-thing")
    assert code == 2 and "unknown criterion" in err
