import json
import math

import pytest

from noisy_bai.channel import make_typewriter
from noisy_bai.harness import (
    ExperimentSpec,
    expand_config,
    run_config,
    run_sweep,
    select_code,
    select_digit,
    select_schedule,
    wilson_interval,
    with_case,
)

BASE = {
    "channel": {"type": "typewriter", "k": 6, "eps": 0.3},
    "instance": {"mu": [0.0, 0.4, 1.0, 0.7, -0.5, -1.0]},
    "reps": 6,
    "seed": 5,
}


def spec(**kw):
    return ExperimentSpec.from_dict({**BASE, **kw})


def test_spec_validation():
    with pytest.raises(ValueError):
        spec(case="4")
    with pytest.raises(ValueError):
        spec(delta=1.0)
    with pytest.raises(ValueError):
        ExperimentSpec.from_dict({**BASE, "colour": "red"})
    assert spec(case=3).case == "3"
    assert ExperimentSpec.from_dict(spec(case="2a").to_dict()) == spec(case="2a")


@pytest.mark.parametrize("case", ["clean", "1", "2a", "2b", "3"])
def test_every_case_runs_healthy(case):
    rep = run_sweep(spec(case=case))
    assert rep.healthy(), rep.summary()
    assert rep.errors == 0


def test_identities_recorded():
    s = run_sweep(spec(case="2b")).summary()
    assert s["identity_checked"] == s["identity_pass"] == 6
    assert s["coupling_checked"] == s["coupling_pass"] == 6
    assert 1.0 <= s["ratio_min"] <= s["ratio_max"] <= 2.0
    s = run_sweep(spec(case="2a")).summary()
    assert s["ratio_min"] == s["ratio_max"] == 2.0


def test_serial_equals_parallel():
    s = spec(case="3", reps=8)
    assert run_sweep(s, workers=1).csv_text() == run_sweep(s, workers=2).csv_text()


def test_seed_changes_results():
    a = run_sweep(spec(case="clean")).csv_text()
    b = run_sweep(spec(case="clean", seed=6)).csv_text()
    assert a != b
    assert a == run_sweep(spec(case="clean")).csv_text()


def test_rep_failures_are_recorded_not_raised():
    rep = run_sweep(spec(case="2a", max_rounds=50))
    assert rep.failures == 6 and not rep.healthy()
    assert all("RunawayRun" in o.error for o in rep.outcomes)


def test_wilson_interval():
    lo, hi = wilson_interval(0, 20)
    z2 = 2.5758293035489**2
    assert lo == 0.0 and hi == pytest.approx(z2 / (20 + z2))
    lo, hi = wilson_interval(10, 100)
    assert lo < 0.1 < hi
    assert wilson_interval(0, 0) == (0.0, 1.0)


def test_expand_config_grid():
    cfg = {"base": {**BASE, "case": "2b"}, "grid": {"channel.eps": [0.1, 0.4], "delta": [0.05, 0.1]}}
    specs = expand_config(cfg)
    assert len(specs) == 4
    assert {(s.channel["eps"], s.delta) for s in specs} == {(0.1, 0.05), (0.1, 0.1), (0.4, 0.05), (0.4, 0.1)}
    assert BASE["channel"]["eps"] == 0.3


def test_run_config_writes_files(tmp_path):
    cfg = {"name": "t", "base": {**BASE, "case": "3", "reps": 3}, "grid": {"channel.eps": [0.2, 0.4]}}
    run_config(cfg, out_dir=tmp_path)
    summary = json.loads((tmp_path / "summary.json").read_text())
    assert summary["schema_version"] == 1 and len(summary["configs"]) == 2
    reps = sorted(tmp_path.glob("reps_*.csv"))
    assert len(reps) == 2
    assert reps[0].read_text().splitlines()[0].startswith("rep,seed,chosen")
    long = (tmp_path / "long.csv").read_text().splitlines()
    assert long[0] == "config,rep,metric,value" and len(long) == 1 + 2 * 3 * 4


def test_trace_dump(tmp_path):
    run_sweep(spec(case="2a", reps=3), trace_dir=tmp_path)
    assert sorted(p.name for p in tmp_path.iterdir()) == ["trace_00000.csv", "trace_00001.csv", "trace_00002.csv"]


def test_scheme_selection():
    assert select_code(make_typewriter(5, 0.2), 5).name == "slope-c5"
    assert select_code(make_typewriter(6, 0.2), 6).name == "product-c6"
    c7 = select_code(make_typewriter(7, 0.2), 7)
    assert c7.n == 2 and c7.messages == 7
    assert select_schedule(make_typewriter(6, 0.2)).name == "parity-c6"
    assert select_schedule(make_typewriter(5, 0.2)).name == "overlap-c5"
    assert select_schedule(make_typewriter(7, 0.2)).covered() == frozenset(range(7))
    assert select_digit(make_typewriter(7, 0.2)).q >= 2


def test_typewriter7_runs_through_generic_path():
    s = ExperimentSpec.from_dict({
        "channel": {"type": "typewriter", "k": 7, "eps": 0.25},
        "instance": {"mu": [0.0, 1.0, 0.5, -0.5, -1.0, 0.2, -0.2]},
        "reps": 2,
    })
    for case in ("2a", "2b", "3"):
        assert run_sweep(with_case(s, case)).healthy()


def test_summary_json_has_no_nan_for_clean_runs():
    s = run_sweep(spec(case="clean")).summary()
    assert not any(isinstance(v, float) and math.isnan(v) for v in s.values())
