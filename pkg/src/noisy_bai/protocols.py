"""Learner-agent protocols over a noisy actuation channel.

Every runner returns a :class:`RunResult` whose trace records, per physical
round, the transmitted symbol, the channel output, the arm the agent actually
executed, the reward and whether that reward was counted.  Rewards come from
:class:`~noisy_bai.bandit.RewardPools` seeded by the run seed, so a wrapper and
the clean algorithm on the same seed see identical counted rewards.
"""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any

import numpy as np

from .bandit import (
    COUNTED,
    DEFAULT_MAX_ROUNDS,
    UNCOUNTED,
    BanditInstance,
    PhasedSE,
    PhaseRecord,
    RewardPools,
    SEResult,
    beta,
    clean_phased_se,
    elimination_step,
    make_rng,
)
from .channel import TransitionMatrix, invert, sample_outputs, smallest_singular_value
from .codes import (
    BlockDigit,
    PacketCodec,
    Schedule,
    ScheduleDigit,
    ZeroErrorCode,
    digitized_packet_code,
    schedule_decode_luts,
)
from .errors import (
    CodeTooSmall,
    NonIdentifiable,
    PacketTooSmall,
    RunawayRun,
    SingularChannel,
    UncoveredArm,
    ZeroErrorViolation,
)

KIND_COUNTED = 0
KIND_FILL = 1  # scheme-1 slots before the codeword is complete
KIND_WAIT = 2  # scheme-2 slots whose active set lacks the requested arm
KIND_INSTALL = 3  # PSE plan-packet slots
KIND_NAMES = {KIND_COUNTED: "counted", KIND_FILL: "fill", KIND_WAIT: "wait", KIND_INSTALL: "install"}

TRACE_COLUMNS = ("t", "x", "y", "executed", "reward", "counted", "step", "phase", "kind")


@dataclass
class RunTrace:
    """Omniscient per-round record of one run (columnar)."""

    case: str
    x: np.ndarray
    y: np.ndarray
    executed: np.ndarray
    reward: np.ndarray
    counted: np.ndarray
    step: np.ndarray
    phase: np.ndarray
    kind: np.ndarray
    t: np.ndarray | None = None
    meta: dict[str, Any] = field(default_factory=dict)

    def __post_init__(self):
        if self.t is None:
            self.t = np.arange(1, len(self.x) + 1, dtype=np.int64)

    @property
    def tau(self) -> int:
        return int(len(self.t))

    @property
    def n_counted(self) -> int:
        return int(self.counted.sum())

    def counted_arms(self) -> np.ndarray:
        return self.executed[self.counted]

    def counted_rewards(self) -> np.ndarray:
        return self.reward[self.counted]

    def learner_view(self) -> dict[str, np.ndarray]:
        """What the learner may see: its own inputs and the rewards."""
        return {"t": self.t, "x": self.x, "reward": self.reward, "counted": self.counted}

    def drop_row(self, i: int) -> "RunTrace":
        keep = np.ones(self.tau, dtype=bool)
        keep[i] = False
        cols = {c: getattr(self, c)[keep] for c in TRACE_COLUMNS}
        return RunTrace(case=self.case, meta=dict(self.meta), **cols)

    def rows(self):
        for i in range(self.tau):
            yield (
                int(self.t[i]),
                int(self.x[i]),
                int(self.y[i]),
                int(self.executed[i]),
                repr(float(self.reward[i])),
                int(self.counted[i]),
                int(self.step[i]),
                int(self.phase[i]),
                KIND_NAMES[int(self.kind[i])],
            )

    def to_csv(self, path: str | Path):
        with open(path, "w", newline="") as fh:
            w = csv.writer(fh, lineterminator="\n")
            w.writerow(TRACE_COLUMNS)
            w.writerows(self.rows())


class _TraceBuilder:
    def __init__(self):
        self.cols: dict[str, list[np.ndarray]] = {c: [] for c in TRACE_COLUMNS if c != "t"}
        self.length = 0

    def add(self, x, y, executed, reward, counted, step, phase, kind):
        n = len(x)
        vals = dict(x=x, y=y, executed=executed, reward=reward, counted=counted, step=step, phase=phase, kind=kind)
        for name, v in vals.items():
            v = np.asarray(v)
            self.cols[name].append(np.broadcast_to(v, (n,)).copy() if v.ndim == 0 else v)
        self.length += n

    def build(self, case: str, meta: dict) -> RunTrace:
        dtypes = dict(x=np.int64, y=np.int64, executed=np.int64, reward=np.float64,
                      counted=bool, step=np.int64, phase=np.int64, kind=np.int8)
        arrays = {
            c: (np.concatenate(v).astype(dtypes[c]) if v else np.empty(0, dtype=dtypes[c]))
            for c, v in self.cols.items()
        }
        return RunTrace(case=case, meta=meta, **arrays)


@dataclass
class RunResult:
    chosen: int
    tau: int
    trace: RunTrace
    phases: list[PhaseRecord] = field(default_factory=list)
    extras: dict[str, Any] = field(default_factory=dict)


def _check_support(channel: TransitionMatrix, support, what: str):
    for x, (ch, sup) in enumerate(zip(channel.support(), support)):
        if not ch <= sup:
            raise ValueError(f"{what} assumes output support {sorted(sup)} for input {x}, channel has {sorted(ch)}")


def _check_rounds(tau: int, max_rounds: int):
    if tau > max_rounds:
        raise RunawayRun(f"run exceeded {max_rounds} rounds")


def run_clean(instance: BanditInstance, delta: float, seed: int, max_rounds: int = DEFAULT_MAX_ROUNDS) -> RunResult:
    """Clean phased SE expressed as a trace (identity channel, every round counted)."""
    se = clean_phased_se(instance, delta, RewardPools(instance, seed), max_rounds=max_rounds)
    n = se.tau
    phase = np.concatenate([np.full(p.budget * len(p.active), p.r) for p in se.phases]) if se.phases else np.empty(0)
    tb = _TraceBuilder()
    tb.add(se.requests, se.requests, se.requests, se.rewards, np.ones(n, bool), np.arange(n), phase, KIND_COUNTED)
    res = RunResult(se.chosen, n, tb.build("clean", {}), se.phases)
    res.extras["clean"] = se
    return res


# ---------------------------------------------------------------- case 1

def _case1_setup(channel: TransitionMatrix, threshold: float):
    try:
        winv = invert(channel, threshold)
    except SingularChannel as exc:
        raise NonIdentifiable(f"mixing map is not invertible: {exc}") from None
    return winv, smallest_singular_value(channel)


def run_case1_baseline(
    instance: BanditInstance,
    channel: TransitionMatrix,
    delta: float,
    seed: int,
    threshold: float = 1e-9,
    max_rounds: int = DEFAULT_MAX_ROUNDS,
) -> RunResult:
    """Single-shot commands with unmixing; no decoding at the agent.

    Each phase sends every command ``2**(r-1)`` times in round-robin order,
    estimates the command-conditioned means, unmixes with ``W^-1`` and runs
    the elimination rule with radius ``sqrt(K) / sigma_min(W) * beta(t)``.
    """
    k = instance.k
    winv, smin = _case1_setup(channel, threshold)
    inflation = math.sqrt(k) / smin
    pools = RewardPools(instance, seed)
    rng = make_rng(seed, "channel")
    sums = np.zeros(k)
    active = tuple(range(k))
    phases: list[PhaseRecord] = []
    tb = _TraceBuilder()
    r, tau = 1, 0
    while len(active) > 1:
        m = 2 ** (r - 1)
        x = np.tile(np.arange(k), m)
        tau += x.size
        _check_rounds(tau, max_rounds)
        y = sample_outputs(channel, x, rng)
        rew = pools.draw_for(y, COUNTED)
        sums += np.bincount(x, weights=rew, minlength=k)
        t_r = 2**r - 1
        mu_hat = winv @ (sums / t_r)
        rad = inflation * beta(t_r, k, delta)
        means = {a: float(mu_hat[a]) for a in active}
        leader, survivors = elimination_step(active, means, rad)
        phases.append(PhaseRecord(r, active, m, t_r, means, rad, leader, survivors))
        tb.add(x, y, y, rew, np.ones(x.size, bool), -1, r, KIND_COUNTED)
        active = survivors
        r += 1
    meta = {"sigma_min": smin, "inflation": inflation}
    return RunResult(active[0], tau, tb.build("1", meta), phases, {"sigma_min": smin})


def case1_unmix_estimate(
    instance: BanditInstance, channel: TransitionMatrix, budget: int, seed: int, threshold: float = 1e-9
) -> np.ndarray:
    """Unmixed mean estimate after ``budget`` round-robin single-shot rounds."""
    k = instance.k
    if budget < k:
        raise ValueError("budget must cover every command at least once")
    winv, _ = _case1_setup(channel, threshold)
    pools = RewardPools(instance, seed)
    rng = make_rng(seed, "channel")
    x = np.arange(budget) % k
    y = sample_outputs(channel, x, rng)
    rew = pools.draw_for(y, COUNTED)
    nu_hat = np.bincount(x, weights=rew, minlength=k) / np.bincount(x, minlength=k)
    return winv @ nu_hat


# ---------------------------------------------------------------- case 2, scheme 1

def run_case2_scheme1(
    instance: BanditInstance,
    channel: TransitionMatrix,
    code: ZeroErrorCode,
    delta: float,
    seed: int,
    initial_arm: int = 0,
    max_rounds: int = DEFAULT_MAX_ROUNDS,
) -> RunResult:
    """Per-pull zero-error codewords with execute-on-decode.

    Virtual request ``i`` occupies block ``i`` of ``n_u`` slots.  The agent
    keeps executing its committed arm on the first ``n_u - 1`` slots
    (uncounted) and switches to the decoded arm on the last one, whose reward
    is the only one fed back to the virtual algorithm.
    """
    k = instance.k
    if code.messages < k:
        raise CodeTooSmall(f"code has {code.messages} messages, instance has {k} arms")
    if code.k != channel.k:
        raise ValueError("code alphabet does not match channel")
    _check_support(channel, code.support, "code")
    n_u = code.n
    words = np.array(code.codewords, dtype=np.int64)
    pools = RewardPools(instance, seed)
    rng = make_rng(seed, "channel")
    se = PhasedSE(k, delta)
    tb = _TraceBuilder()
    committed = initial_arm
    step0 = 0
    while not se.done:
        plan = se.plan()
        L = plan.size
        _check_rounds(tb.length + L * n_u, max_rounds)
        x = words[plan]
        y = sample_outputs(channel, x.ravel(), rng).reshape(L, n_u)
        decoded = code.decode_blocks(y)
        if np.any(decoded != plan):
            i = int(np.flatnonzero(decoded != plan)[0])
            raise ZeroErrorViolation(f"block {step0 + i}: sent arm {plan[i]}, decoded {decoded[i]}")
        executed = np.empty((L, n_u), dtype=np.int64)
        executed[:, -1] = decoded
        executed[:, :-1] = np.concatenate([[committed], decoded[:-1]])[:, None]
        counted = np.zeros((L, n_u), dtype=bool)
        counted[:, -1] = True
        reward = np.empty((L, n_u))
        reward[:, -1] = pools.draw_for(decoded, COUNTED)
        if n_u > 1:
            reward[:, :-1] = pools.draw_for(executed[:, :-1].ravel(), UNCOUNTED).reshape(L, n_u - 1)
        se.observe(reward[:, -1])
        steps = np.full((L, n_u), -1, dtype=np.int64)
        steps[:, -1] = step0 + np.arange(L)
        kind = np.where(counted, KIND_COUNTED, KIND_FILL)
        tb.add(x.ravel(), y.ravel(), executed.ravel(), reward.ravel(), counted.ravel(),
               steps.ravel(), se.r - 1, kind.ravel())
        committed = int(decoded[-1])
        step0 += L
    meta = {"n_u": n_u, "code": code.name}
    trace = tb.build("2a", meta)
    return RunResult(se.chosen if k > 1 else 0, trace.tau, trace, se.phases, {"tau_virtual": step0})


# ---------------------------------------------------------------- case 2, scheme 2

def _serve_times(offsets: np.ndarray, period: int, t_prev: int, m: int) -> np.ndarray:
    """First ``m`` slots after ``t_prev`` whose active set contains the arm.

    ``offsets`` are the 0-based slot indices (within a period) containing it;
    slot index ``j`` corresponds to times ``t = j + 1 + period * q``.
    """
    c = offsets.size
    q, rem = divmod(t_prev, period)
    already = c * q + int(np.count_nonzero(offsets + 1 <= rem))
    i = already + np.arange(m)
    qq, rr = np.divmod(i, c)
    return qq * period + offsets[rr] + 1


def run_case2_scheme2(
    instance: BanditInstance,
    channel: TransitionMatrix,
    schedule: Schedule,
    delta: float,
    seed: int,
    max_rounds: int = DEFAULT_MAX_ROUNDS,
) -> RunResult:
    """Independent-set calendar: one channel use per counted pull.

    Request ``a_i`` is served at the first slot whose active set contains it;
    slots in between transmit the smallest member of the active set and their
    rewards are discarded.
    """
    k = instance.k
    missing = sorted(set(range(k)) - schedule.covered())
    if missing:
        raise UncoveredArm(f"arms {missing} appear in no slot of the schedule")
    if schedule.graph.v != channel.k:
        raise ValueError("schedule alphabet does not match channel")
    luts = schedule_decode_luts(schedule, channel.support())
    p = schedule.period
    offsets = {a: np.array([j for j, s in enumerate(schedule.slots) if a in s], dtype=np.int64) for a in range(k)}
    wait_symbol = np.array([min(s) for s in schedule.slots], dtype=np.int64)
    pools = RewardPools(instance, seed)
    rng = make_rng(seed, "channel")
    se = PhasedSE(k, delta)
    tb = _TraceBuilder()
    t_prev, step0 = 0, 0
    classes = []
    while not se.done:
        m = se.budget
        chunks = []
        t_cur = t_prev
        for a in se.active:
            ts = _serve_times(offsets[a], p, t_cur, m)
            chunks.append(ts)
            t_cur = int(ts[-1])
        serve = np.concatenate(chunks)
        plan = se.plan()
        classes.append(np.array([schedule.class_of(a) for a in se.active]).repeat(m))
        t_all = np.arange(t_prev + 1, t_cur + 1, dtype=np.int64)
        _check_rounds(t_cur, max_rounds)
        slot = (t_all - 1) % p
        is_serve = np.zeros(t_all.size, dtype=bool)
        is_serve[serve - t_prev - 1] = True
        x = wait_symbol[slot].copy()
        x[is_serve] = plan
        y = sample_outputs(channel, x, rng)
        decoded = luts[slot, y]
        if np.any(decoded != x):
            i = int(np.flatnonzero(decoded != x)[0])
            raise ZeroErrorViolation(f"slot {t_all[i]}: sent {x[i]}, decoded {decoded[i]}")
        reward = np.empty(t_all.size)
        reward[is_serve] = pools.draw_for(decoded[is_serve], COUNTED)
        reward[~is_serve] = pools.draw_for(decoded[~is_serve], UNCOUNTED)
        se.observe(reward[is_serve])
        steps = np.full(t_all.size, -1, dtype=np.int64)
        steps[is_serve] = step0 + np.arange(plan.size)
        kind = np.where(is_serve, KIND_COUNTED, KIND_WAIT)
        tb.add(x, y, decoded, reward, is_serve, steps, se.r - 1, kind)
        t_prev = t_cur
        step0 += plan.size
    class_log = np.concatenate(classes) if classes else np.empty(0, dtype=np.int64)
    meta = {
        "schedule": schedule.name,
        "slots": [sorted(s) for s in schedule.slots],
        "class_log": class_log,
    }
    trace = tb.build("2b", meta)
    extras = {"class_log": class_log, "tau_virtual": step0}
    return RunResult(se.chosen if k > 1 else 0, trace.tau, trace, se.phases, extras)


def parity_calendar_tau(class_log) -> int:
    """Round count predicted for an alternating two-set calendar.

    ``class_log[i]`` is 0 if request ``i`` lies in the set active on odd
    slots and 1 otherwise: ``tau_clean + [p_1 = 1] + #{i >= 2 : p_i = p_(i-1)}``.
    """
    p = np.asarray(class_log)
    if p.size == 0:
        return 0
    return int(p.size + (p[0] == 1) + np.count_nonzero(p[1:] == p[:-1]))


def parity_string(class_log) -> str:
    return "".join("EO"[int(c)] for c in class_log)


# ---------------------------------------------------------------- case 3

@dataclass
class PlanPacketFamily:
    """Full-subset plan family: plan index = (bitmask of the active set) - 1."""

    k: int
    codec: PacketCodec
    declared_length: int | None = None

    def __post_init__(self):
        size = self.size
        if self.codec.message_count < size:
            raise PacketTooSmall(f"codec carries {self.codec.message_count} plans, family has {size}")
        if self.declared_length is not None and self.declared_length < self.codec.length:
            raise PacketTooSmall(
                f"declared n_r = {self.declared_length} but {self.codec.length} uses are needed "
                f"for {size} plans with a base-{self.codec.digit.q} digit"
            )

    @property
    def size(self) -> int:
        return 2**self.k - 1

    @property
    def n_r(self) -> int:
        return self.codec.length

    @staticmethod
    def index(active) -> int:
        return sum(1 << a for a in active) - 1

    @staticmethod
    def subset(index: int) -> tuple[int, ...]:
        mask = index + 1
        return tuple(a for a in range(mask.bit_length()) if mask >> a & 1)


def plan_family(k: int, digit, declared_length: int | None = None) -> PlanPacketFamily:
    return PlanPacketFamily(k, digitized_packet_code(digit, 2**k - 1), declared_length)


def _digit_support(digit):
    if isinstance(digit, BlockDigit):
        return digit.code.support
    if isinstance(digit, ScheduleDigit):
        return digit.support
    raise TypeError(f"unsupported digit {digit!r}")


def run_case3_pse(
    instance: BanditInstance,
    channel: TransitionMatrix,
    family: PlanPacketFamily,
    delta: float,
    seed: int,
    hold_arm: int = 0,
    max_rounds: int = DEFAULT_MAX_ROUNDS,
) -> RunResult:
    """Packetized successive elimination.

    Each phase first installs ``plan(S_r, m_r)`` with an ``n_r``-symbol
    zero-error packet while the agent keeps pulling the hold arm (uncounted),
    then executes the decoded plan with every reward counted.  During
    execution the learner's transmissions are ignored by the agent.
    """
    k = instance.k
    if family.k != k:
        raise ValueError(f"plan family is for {family.k} arms, instance has {k}")
    _check_support(channel, _digit_support(family.codec.digit), "packet digit")
    codec = family.codec
    pools = RewardPools(instance, seed)
    rng = make_rng(seed, "channel")
    se = PhasedSE(k, delta)
    tb = _TraceBuilder()
    h = hold_arm
    step0 = 0
    phase_log = []
    while not se.done:
        r, m, active = se.r, se.budget, se.active
        idx = family.index(active)
        n_r = codec.length
        t0 = tb.length + 1
        _check_rounds(tb.length + n_r + m * len(active), max_rounds)
        xs = np.array(codec.encode(idx, t0), dtype=np.int64)
        ys = sample_outputs(channel, xs, rng)
        got = codec.decode(ys.tolist(), t0) if n_r else idx
        if got != idx:
            raise ZeroErrorViolation(f"phase {r}: sent plan {idx}, decoded {got}")
        held = np.full(n_r, h, dtype=np.int64)
        tb.add(xs, ys, held, pools.draw_for(held, UNCOUNTED), np.zeros(n_r, bool), -1, r, KIND_INSTALL)

        plan = np.repeat(np.array(family.subset(got), dtype=np.int64), m)
        ye = sample_outputs(channel, plan, rng)
        rew = pools.draw_for(plan, COUNTED)
        se.observe(rew)
        tb.add(plan, ye, plan, rew, np.ones(plan.size, bool), step0 + np.arange(plan.size), r, KIND_COUNTED)
        step0 += plan.size
        h = int(plan[-1])
        phase_log.append({"r": r, "n_r": n_r, "active": len(active), "m_r": m})
    meta = {"phases": phase_log, "digit": codec.digit.name}
    trace = tb.build("3", meta)
    extras = {"phases": phase_log, "n_counted": step0, "install_total": sum(p["n_r"] for p in phase_log)}
    return RunResult(se.chosen if k > 1 else 0, trace.tau, trace, se.phases, extras)


# ---------------------------------------------------------------- audit

@dataclass
class AuditReport:
    claim: str
    passed: bool
    message: str = ""
    first_bad_row: int | None = None
    stats: dict[str, Any] = field(default_factory=dict)

    def __bool__(self):
        return self.passed


def _fail(claim, row, msg, **stats):
    return AuditReport(claim, False, msg, row, stats)


def _contiguous(trace: RunTrace, claim: str):
    bad = np.flatnonzero(trace.t != np.arange(1, trace.tau + 1))
    if bad.size:
        i = int(bad[0])
        return _fail(claim, i, f"row {i} has t = {trace.t[i]}, expected {i + 1}")
    return None


def _serve_recurrence(arms: np.ndarray, slots: list) -> np.ndarray:
    """Slot of each counted pull when every request waits for its first admissible slot."""
    p = len(slots)
    out = np.empty(arms.size, dtype=np.int64)
    t = 0
    for i, a in enumerate(arms):
        t += 1
        while a not in slots[(t - 1) % p]:
            t += 1
        out[i] = t
    return out


def audit_trace(trace: RunTrace, claim: str, reference: SEResult | None = None) -> AuditReport:
    """Re-check a round-count identity (or the coupling) from the raw rows.

    Claims: ``scheme1`` (tau = n_u * tau_clean), ``parity`` (alternating
    two-set calendar), ``schedule`` (first-admissible-slot recurrence for any
    calendar), ``pse-additive`` (tau = N_counted + sum n_r) and ``coupling``
    (counted (arm, reward) sequence equals ``reference``).
    """
    bad = _contiguous(trace, claim)
    if bad is not None:
        return bad
    tau, n_c = trace.tau, trace.n_counted
    if claim == "scheme1":
        n_u = int(trace.meta["n_u"])
        expected = (np.arange(tau) % n_u) == n_u - 1
        wrong = np.flatnonzero(trace.counted != expected)
        if wrong.size:
            i = int(wrong[0])
            return _fail(claim, i, f"row {i}: counted={bool(trace.counted[i])}, block position {i % n_u}")
        if tau != n_u * n_c:
            return _fail(claim, tau - 1, f"tau {tau} != {n_u} * {n_c}")
        return AuditReport(claim, True, f"tau = {n_u} * {n_c} = {tau}", stats={"tau": tau, "tau_clean": n_c})
    if claim in ("parity", "schedule"):
        slots = [frozenset(s) for s in trace.meta["slots"]]
        arms = trace.counted_arms()
        actual = trace.t[trace.counted]
        if claim == "parity":
            if len(slots) != 2 or slots[0] & slots[1]:
                return _fail(claim, None, "parity claim needs an alternating two-set partition calendar")
            classes = np.array([0 if a in slots[0] else 1 for a in arms], dtype=np.int64)
            inc = np.ones(arms.size, dtype=np.int64)
            if arms.size:
                inc[0] += classes[0] == 1
                inc[1:] += classes[1:] == classes[:-1]
            expected_t = np.cumsum(inc)
            formula = parity_calendar_tau(classes)
        else:
            expected_t = _serve_recurrence(arms, slots)
            formula = int(expected_t[-1]) if arms.size else 0
        wrong = np.flatnonzero(actual != expected_t)
        if wrong.size:
            j = int(wrong[0])
            row = int(np.flatnonzero(trace.counted)[j])
            return _fail(claim, row, f"counted pull {j} at t = {actual[j]}, recurrence gives {expected_t[j]}")
        if tau != formula:
            return _fail(claim, tau - 1, f"tau {tau} != predicted {formula}")
        return AuditReport(claim, True, f"tau = {tau} matches prediction", stats={"tau": tau, "tau_clean": n_c})
    if claim == "pse-additive":
        phases = trace.meta["phases"]
        i = 0
        for ph in phases:
            n_r, size = ph["n_r"], ph["active"] * ph["m_r"]
            seg_install = slice(i, i + n_r)
            seg_exec = slice(i + n_r, i + n_r + size)
            if np.any(trace.counted[seg_install]) or trace.counted[seg_install].size != n_r:
                return _fail(claim, i, f"phase {ph['r']}: install segment malformed")
            ex = trace.counted[seg_exec]
            if ex.size != size or not np.all(ex):
                off = int(np.flatnonzero(~ex)[0]) if ex.size and not np.all(ex) else ex.size
                return _fail(claim, i + n_r + off, f"phase {ph['r']}: execution segment malformed")
            i += n_r + size
        install = sum(ph["n_r"] for ph in phases)
        stats = {"tau": tau, "n_counted": n_c, "install_total": install, "phases": len(phases)}
        if i != tau or tau != n_c + install:
            return _fail(claim, min(i, tau - 1), f"tau {tau} != {n_c} + {install}", **stats)
        return AuditReport(claim, True, f"tau = {n_c} + {install} = {tau}", stats=stats)
    if claim == "coupling":
        if reference is None:
            raise ValueError("coupling audit needs the clean reference run")
        rows = np.flatnonzero(trace.counted)
        arms, rews = trace.executed[rows], trace.reward[rows]
        n = min(rows.size, reference.tau)
        mism = np.flatnonzero((arms[:n] != reference.requests[:n]) | (rews[:n] != reference.rewards[:n]))
        if mism.size:
            j = int(mism[0])
            return _fail(claim, int(rows[j]), f"counted pull {j} differs from the clean run")
        if rows.size != reference.tau:
            row = int(rows[n]) if rows.size > n else tau - 1
            return _fail(claim, row, f"{rows.size} counted pulls vs {reference.tau} clean pulls")
        return AuditReport(claim, True, f"{n} counted pulls identical", stats={"n": n})
    raise ValueError(f"unknown claim {claim!r}")
