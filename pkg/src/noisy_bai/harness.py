"""Seeded replication sweeps, aggregation and flat-file output."""

from __future__ import annotations

import csv
import io
import itertools
import json
import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass, field, replace
from pathlib import Path
from typing import Any

import numpy as np
import yaml

from .bandit import DEFAULT_MAX_ROUNDS, BanditInstance, RewardPools, clean_phased_se, derive_seed
from .channel import TransitionMatrix, channel_from_config, typewriter_support
from .codes import (
    BlockDigit,
    Schedule,
    ZeroErrorCode,
    c6_product_code,
    code_from_independent_set,
    coloring_schedule,
    digit_from_name,
    overlap_schedule_c5,
    parity_schedule_c6,
    slope_code_c5,
)
from .errors import NoisyBAIError
from .graphs import confusability_graph, independence_number, minimal_blocklength, strong_power
from .protocols import (
    RunResult,
    audit_trace,
    plan_family,
    run_case1_baseline,
    run_case2_scheme1,
    run_case2_scheme2,
    run_case3_pse,
)

SCHEMA_VERSION = 1
CASES = ("clean", "1", "2a", "2b", "3")
REP_COLUMNS = (
    "rep", "seed", "chosen", "correct", "tau", "tau_clean", "ratio",
    "identity", "identity_ok", "coupling_ok", "error",
)


# ------------------------------------------------------------ scheme selection

def _is_typewriter(channel: TransitionMatrix, k: int) -> bool:
    return channel.k == k and channel.support() == typewriter_support(k)


def select_code(channel: TransitionMatrix, k_arms: int, name: str = "auto") -> ZeroErrorCode:
    if name == "slope-c5" or (name == "auto" and _is_typewriter(channel, 5) and k_arms <= 5):
        return slope_code_c5(channel.support())
    if name == "product-c6" or (name == "auto" and _is_typewriter(channel, 6) and k_arms <= 6):
        return c6_product_code(channel.support())
    if name != "auto":
        raise ValueError(f"unknown code {name!r}")
    g = confusability_graph(channel.support())
    res = minimal_blocklength(g, k_arms)
    if res.n is None:
        raise NoisyBAIError(f"no zero-error code for {k_arms} messages: {res.reason}")
    return code_from_independent_set(channel.support(), res.n, res.witness.members[:k_arms], name=f"indset-n{res.n}")


def select_schedule(channel: TransitionMatrix, name: str = "auto") -> Schedule:
    if name == "parity-c6" or (name == "auto" and _is_typewriter(channel, 6)):
        return parity_schedule_c6()
    if name == "overlap-c5" or (name == "auto" and _is_typewriter(channel, 5)):
        return overlap_schedule_c5()
    if name in ("auto", "coloring"):
        return coloring_schedule(confusability_graph(channel.support()))
    raise ValueError(f"unknown schedule {name!r}")


def select_digit(channel: TransitionMatrix, name: str = "auto"):
    if name != "auto":
        return digit_from_name(name)
    if _is_typewriter(channel, 5):
        return digit_from_name("c5-slope")
    if _is_typewriter(channel, 6):
        return digit_from_name("c6-parity")
    g = confusability_graph(channel.support())
    res = minimal_blocklength(g, 2)
    if res.n is None:
        raise NoisyBAIError(f"no zero-error digit: {res.reason}")
    best = independence_number(strong_power(g, res.n))
    return BlockDigit(code_from_independent_set(channel.support(), res.n, best.witness, name=f"indset-n{res.n}"))


# ------------------------------------------------------------ specs

@dataclass(frozen=True)
class ExperimentSpec:
    channel: dict
    instance: dict
    case: str = "clean"
    delta: float = 0.1
    reps: int = 100
    seed: int = 0
    code: str = "auto"
    schedule: str = "auto"
    digit: str = "auto"
    max_rounds: int = DEFAULT_MAX_ROUNDS
    label: str = ""

    def __post_init__(self):
        if self.case not in CASES:
            raise ValueError(f"case must be one of {CASES}, got {self.case!r}")
        if not 0.0 < self.delta < 1.0:
            raise ValueError("delta must lie in (0, 1)")
        if self.reps < 0:
            raise ValueError("reps must be >= 0")

    @classmethod
    def from_dict(cls, d: dict) -> "ExperimentSpec":
        known = {f for f in cls.__dataclass_fields__}
        extra = set(d) - known
        if extra:
            raise ValueError(f"unknown experiment fields {sorted(extra)}")
        d = dict(d)
        d["case"] = str(d.get("case", "clean"))
        return cls(**d)

    def to_dict(self) -> dict:
        return asdict(self)

    def name(self) -> str:
        if self.label:
            return self.label
        ch = self.channel
        chs = f"tw{ch['k']}-eps{ch['eps']}" if ch.get("type") == "typewriter" else ch.get("type", "ch")
        return f"case{self.case}-{chs}-d{self.delta}"


@dataclass
class RepOutcome:
    rep: int
    seed: int
    chosen: int
    correct: bool
    tau: int
    tau_clean: int
    ratio: float
    identity: str
    identity_ok: bool | None
    coupling_ok: bool | None
    error: str = ""

    def row(self) -> list:
        return [
            self.rep, self.seed, self.chosen, int(self.correct), self.tau, self.tau_clean,
            repr(self.ratio), self.identity, _tri(self.identity_ok), _tri(self.coupling_ok), self.error,
        ]


def _tri(v):
    return "" if v is None else int(v)


def _identity_claim(spec: ExperimentSpec, result: RunResult) -> str:
    if spec.case == "2a":
        return "scheme1"
    if spec.case == "2b":
        slots = [frozenset(s) for s in result.trace.meta["slots"]]
        return "parity" if len(slots) == 2 and not slots[0] & slots[1] else "schedule"
    if spec.case == "3":
        return "pse-additive"
    return "-"


class _Runner:
    """Holds the parsed channel/instance/scheme objects for one spec."""

    def __init__(self, spec: ExperimentSpec):
        self.spec = spec
        self.channel = channel_from_config(spec.channel)
        self.instance = BanditInstance.from_config(spec.instance)
        k = self.instance.k
        if spec.case in ("1", "2a", "2b", "3") and self.channel.k != k:
            raise ValueError(f"channel alphabet {self.channel.k} != arm count {k}")
        self.code = select_code(self.channel, k, spec.code) if spec.case == "2a" else None
        self.schedule = select_schedule(self.channel, spec.schedule) if spec.case == "2b" else None
        self.family = plan_family(k, select_digit(self.channel, spec.digit)) if spec.case == "3" else None

    def run_case(self, seed: int) -> RunResult:
        s, inst, ch = self.spec, self.instance, self.channel
        if s.case == "1":
            return run_case1_baseline(inst, ch, s.delta, seed, max_rounds=s.max_rounds)
        if s.case == "2a":
            return run_case2_scheme1(inst, ch, self.code, s.delta, seed, max_rounds=s.max_rounds)
        if s.case == "2b":
            return run_case2_scheme2(inst, ch, self.schedule, s.delta, seed, max_rounds=s.max_rounds)
        if s.case == "3":
            return run_case3_pse(inst, ch, self.family, s.delta, seed, max_rounds=s.max_rounds)
        raise ValueError(s.case)

    def replicate(self, rep: int, trace_dir: Path | None = None) -> RepOutcome:
        s = self.spec
        seed = derive_seed(s.seed, rep)
        best = self.instance.best_arm
        try:
            clean = clean_phased_se(self.instance, s.delta, RewardPools(self.instance, seed), max_rounds=s.max_rounds)
            if s.case == "clean":
                return RepOutcome(rep, seed, clean.chosen, clean.chosen == best, clean.tau, clean.tau,
                                  1.0, "-", None, None)
            res = self.run_case(seed)
            claim = _identity_claim(s, res)
            ident = audit_trace(res.trace, claim).passed if claim != "-" else None
            coupling = audit_trace(res.trace, "coupling", clean).passed if s.case != "1" else None
            if trace_dir is not None:
                res.trace.to_csv(trace_dir / f"trace_{rep:05d}.csv")
            ratio = res.tau / clean.tau if clean.tau else 1.0
            return RepOutcome(rep, seed, res.chosen, res.chosen == best, res.tau, clean.tau,
                              ratio, claim, ident, coupling)
        except NoisyBAIError as exc:
            return RepOutcome(rep, seed, -1, False, -1, -1, math.nan, "-", None, None,
                              f"{type(exc).__name__}: {exc}")


_WORKER: _Runner | None = None


def _init_worker(spec_dict: dict):
    global _WORKER
    _WORKER = _Runner(ExperimentSpec.from_dict(spec_dict))


def _work(rep: int) -> RepOutcome:
    return _WORKER.replicate(rep)


def wilson_interval(errors: int, n: int, z: float = 2.5758293035489) -> tuple[float, float]:
    """Wilson score interval (default 99%)."""
    if n == 0:
        return (0.0, 1.0)
    p = errors / n
    denom = 1 + z * z / n
    centre = (p + z * z / (2 * n)) / denom
    half = z * math.sqrt(p * (1 - p) / n + z * z / (4 * n * n)) / denom
    return (max(0.0, centre - half), min(1.0, centre + half))


@dataclass
class AggregateReport:
    name: str
    spec: dict
    reps: int
    errors: int = 0
    error_rate: float = 0.0
    error_ci99: tuple[float, float] = (0.0, 1.0)
    tau_mean: float | None = None
    tau_p50: float | None = None
    tau_p90: float | None = None
    tau_clean_mean: float | None = None
    ratio_mean: float | None = None
    ratio_min: float | None = None
    ratio_max: float | None = None
    identity_checked: int = 0
    identity_pass: int = 0
    coupling_checked: int = 0
    coupling_pass: int = 0
    failures: int = 0
    outcomes: list[RepOutcome] = field(default_factory=list, repr=False)

    def summary(self) -> dict:
        d = asdict(self)
        d.pop("outcomes")
        d["error_ci99"] = list(self.error_ci99)
        d["schema_version"] = SCHEMA_VERSION
        return d

    def healthy(self) -> bool:
        return (
            self.failures == 0
            and self.identity_pass == self.identity_checked
            and self.coupling_pass == self.coupling_checked
        )

    def csv_text(self) -> str:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(REP_COLUMNS)
        for o in self.outcomes:
            w.writerow(o.row())
        return buf.getvalue()

    def long_rows(self) -> list[list]:
        """Plot-ready long format: one (config, rep, metric, value) row per metric."""
        out = []
        for o in self.outcomes:
            for metric in ("tau", "tau_clean", "ratio", "correct"):
                out.append([self.name, o.rep, metric, repr(float(getattr(o, metric)))])
        return out


def aggregate(name: str, spec: ExperimentSpec, outcomes: list[RepOutcome]) -> AggregateReport:
    rep = AggregateReport(name=name, spec=spec.to_dict(), reps=len(outcomes), outcomes=outcomes)
    ok = [o for o in outcomes if not o.error]
    rep.failures = len(outcomes) - len(ok)
    rep.errors = sum(not o.correct for o in outcomes)
    if outcomes:
        rep.error_rate = rep.errors / len(outcomes)
        rep.error_ci99 = wilson_interval(rep.errors, len(outcomes))
    if ok:
        taus = np.array([o.tau for o in ok], dtype=float)
        ratios = np.array([o.ratio for o in ok])
        rep.tau_mean = float(taus.mean())
        rep.tau_p50 = float(np.percentile(taus, 50))
        rep.tau_p90 = float(np.percentile(taus, 90))
        rep.tau_clean_mean = float(np.mean([o.tau_clean for o in ok]))
        rep.ratio_mean = float(ratios.mean())
        rep.ratio_min = float(ratios.min())
        rep.ratio_max = float(ratios.max())
    checked = [o for o in outcomes if o.identity_ok is not None]
    rep.identity_checked = len(checked)
    rep.identity_pass = sum(o.identity_ok for o in checked)
    coupled = [o for o in outcomes if o.coupling_ok is not None]
    rep.coupling_checked = len(coupled)
    rep.coupling_pass = sum(o.coupling_ok for o in coupled)
    return rep


def run_sweep(spec: ExperimentSpec, workers: int = 1, trace_dir: str | Path | None = None) -> AggregateReport:
    """Run every replication of one configuration and aggregate in rep order.

    Replication ``i`` uses seed ``derive_seed(spec.seed, i)`` whatever the
    worker count, so serial and parallel runs agree exactly.
    """
    runner = _Runner(spec)
    if trace_dir is not None:
        trace_dir = Path(trace_dir)
        trace_dir.mkdir(parents=True, exist_ok=True)
    if workers > 1 and spec.reps > 1 and trace_dir is None:
        with ProcessPoolExecutor(workers, initializer=_init_worker, initargs=(spec.to_dict(),)) as ex:
            outcomes = list(ex.map(_work, range(spec.reps), chunksize=max(1, spec.reps // (4 * workers))))
    else:
        outcomes = [runner.replicate(i, trace_dir) for i in range(spec.reps)]
    return aggregate(spec.name(), spec, outcomes)


# ------------------------------------------------------------ config files

def _set_dotted(d: dict, key: str, value):
    parts = key.split(".")
    cur = d
    for p in parts[:-1]:
        cur = cur.setdefault(p, {})
    cur[parts[-1]] = value


def expand_config(cfg: dict) -> list[ExperimentSpec]:
    """``base`` spec plus an optional ``grid`` of dotted keys -> value lists."""
    base = cfg.get("base", {})
    grid = cfg.get("grid", {}) or {}
    keys = sorted(grid)
    specs = []
    for values in itertools.product(*(grid[k] for k in keys)):
        d = json.loads(json.dumps(base))
        for k, v in zip(keys, values):
            _set_dotted(d, k, v)
        specs.append(ExperimentSpec.from_dict(d))
    return specs


def load_config(path: str | Path) -> dict:
    text = Path(path).read_text()
    return yaml.safe_load(text)


def dumps_json(obj) -> str:
    return json.dumps(obj, indent=2, sort_keys=True, allow_nan=True) + "\n"


def run_config(cfg: dict, out_dir: str | Path | None = None, workers: int = 1) -> list[AggregateReport]:
    """Run all configurations of a sweep config, writing CSV/JSON when ``out_dir`` is set."""
    reports = [run_sweep(s, workers=workers) for s in expand_config(cfg)]
    out_dir = out_dir or cfg.get("output_dir")
    if out_dir:
        out = Path(out_dir)
        out.mkdir(parents=True, exist_ok=True)
        long_rows = []
        for i, rep in enumerate(reports):
            (out / f"reps_{i:03d}_{rep.name}.csv").write_text(rep.csv_text())
            long_rows.extend(rep.long_rows())
        (out / "summary.json").write_text(
            dumps_json({"schema_version": SCHEMA_VERSION, "name": cfg.get("name", ""),
                        "configs": [r.summary() for r in reports]})
        )
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["config", "rep", "metric", "value"])
        w.writerows(long_rows)
        (out / "long.csv").write_text(buf.getvalue())
    return reports


def with_case(spec: ExperimentSpec, case: str) -> ExperimentSpec:
    return replace(spec, case=case)
