import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from noisy_bai.bandit import BanditInstance, RewardPools, clean_phased_se
from noisy_bai.channel import identity_channel, make_typewriter
from noisy_bai.codes import (
    PacketCodec,
    Schedule,
    c6_product_code,
    digit_from_name,
    overlap_schedule_c5,
    parity_schedule_c6,
    slope_code_c5,
)
from noisy_bai.errors import CodeTooSmall, NonIdentifiable, PacketTooSmall, UncoveredArm
from noisy_bai.graphs import cycle_graph
from noisy_bai.protocols import (
    KIND_COUNTED,
    KIND_INSTALL,
    PlanPacketFamily,
    audit_trace,
    case1_unmix_estimate,
    parity_calendar_tau,
    parity_string,
    plan_family,
    run_case1_baseline,
    run_case2_scheme1,
    run_case2_scheme2,
    run_case3_pse,
    run_clean,
)

MU5 = (0.7, 1.0, 0.4, 0.0, -0.5)
MU6 = (0.0, 0.4, 1.0, 0.7, -0.5, -1.0)
I5, I6 = BanditInstance(MU5), BanditInstance(MU6)
TW5, TW6 = make_typewriter(5, 0.3), make_typewriter(6, 0.3)


def clean(inst, seed, delta=0.1):
    return clean_phased_se(inst, delta, RewardPools(inst, seed))


def outputs_in_support(trace, channel):
    sup = channel.support()
    return all(int(y) in sup[int(x)] for x, y in zip(trace.x, trace.y))


@pytest.mark.parametrize("seed", range(5))
def test_scheme1_identity_and_coupling(seed):
    ref = clean(I5, seed)
    res = run_case2_scheme1(I5, TW5, slope_code_c5(), 0.1, seed)
    assert res.tau == 2 * ref.tau
    assert res.chosen == ref.chosen
    assert audit_trace(res.trace, "scheme1")
    assert audit_trace(res.trace, "coupling", ref)
    assert outputs_in_support(res.trace, TW5)


@pytest.mark.parametrize("seed", range(5))
def test_parity_calendar_identity(seed):
    ref = clean(I6, seed)
    res = run_case2_scheme2(I6, TW6, parity_schedule_c6(), 0.1, seed)
    classes = [0 if a in (0, 2, 4) else 1 for a in ref.requests]
    assert res.tau == parity_calendar_tau(classes)
    assert np.asarray(res.extras["class_log"]).tolist() == classes
    assert ref.tau <= res.tau <= 2 * ref.tau
    assert audit_trace(res.trace, "parity") and audit_trace(res.trace, "coupling", ref)
    assert res.chosen == ref.chosen


def test_parity_calendar_examples():
    # classes: 0 = even set (served on odd slots), 1 = odd set
    assert parity_calendar_tau([0, 0, 1]) == 4
    assert parity_calendar_tau([1]) == 2
    assert parity_calendar_tau([0]) == 1
    assert parity_calendar_tau([0, 1, 0, 1]) == 4
    assert parity_calendar_tau([1, 1, 1]) == 6
    assert parity_calendar_tau([]) == 0
    assert parity_string([0, 0, 1]) == "EEO"


def brute_calendar(arms, slots):
    t, out = 0, []
    for a in arms:
        t += 1
        while a not in slots[(t - 1) % len(slots)]:
            t += 1
        out.append(t)
    return out


@settings(max_examples=100, deadline=None)
@given(st.lists(st.integers(0, 1), max_size=40))
def test_parity_formula_matches_calendar_walk(classes):
    slots = [{0, 2, 4}, {1, 3, 5}]
    arms = [0 if c == 0 else 1 for c in classes]
    walk = brute_calendar(arms, slots)
    assert parity_calendar_tau(classes) == (walk[-1] if walk else 0)


@pytest.mark.parametrize("seed", range(3))
def test_overlap_calendar_recurrence(seed):
    ref = clean(I5, seed)
    res = run_case2_scheme2(I5, TW5, overlap_schedule_c5(), 0.1, seed)
    slots = [set(s) for s in overlap_schedule_c5().slots]
    counted_t = res.trace.t[res.trace.counted].tolist()
    assert counted_t == brute_calendar(ref.requests.tolist(), slots)
    assert audit_trace(res.trace, "schedule") and audit_trace(res.trace, "coupling", ref)


@pytest.mark.parametrize("k, mu, digit, n_r", [(5, MU5, "c5-slope", 6), (6, MU6, "c6-parity", 4)])
def test_pse_additive(k, mu, digit, n_r):
    inst = BanditInstance(mu)
    ch = make_typewriter(k, 0.45)
    for seed in range(4):
        ref = clean(inst, seed)
        res = run_case3_pse(inst, ch, plan_family(k, digit_from_name(digit)), 0.1, seed)
        phases = res.extras["phases"]
        assert all(p["n_r"] == n_r for p in phases)
        assert len(phases) == ref.num_phases
        assert res.tau == ref.tau + n_r * len(phases)
        assert audit_trace(res.trace, "pse-additive") and audit_trace(res.trace, "coupling", ref)
        assert res.chosen == ref.chosen
        assert outputs_in_support(res.trace, ch)


def test_pse_install_rows_hold_arm():
    res = run_case3_pse(I6, TW6, plan_family(6, digit_from_name("c6-parity")), 0.1, 2, hold_arm=3)
    tr = res.trace
    install = tr.kind == KIND_INSTALL
    assert not tr.counted[install].any()
    # first packet is held on the initial arm; later packets on the last executed arm
    assert tr.executed[:4].tolist() == [3, 3, 3, 3]
    starts = np.flatnonzero(install & ~np.r_[False, install[:-1]])
    for s in starts[1:]:
        assert np.all(tr.executed[s : s + 4] == tr.executed[s - 1])


def test_plan_family_indexing():
    fam = plan_family(6, digit_from_name("c6-parity"))
    assert fam.size == 63 and fam.n_r == 4
    assert PlanPacketFamily.index((0,)) == 0
    assert PlanPacketFamily.index(tuple(range(6))) == 62
    assert all(PlanPacketFamily.index(PlanPacketFamily.subset(i)) == i for i in range(63))
    with pytest.raises(PacketTooSmall):
        plan_family(6, digit_from_name("c6-parity"), declared_length=3)
    with pytest.raises(PacketTooSmall):
        PlanPacketFamily(6, PacketCodec(digit_from_name("c6-parity"), 20))


def test_scheme_guards():
    with pytest.raises(CodeTooSmall):
        run_case2_scheme1(BanditInstance(tuple(range(10))), make_typewriter(10, 0.3), c6_product_code(), 0.1, 0)
    sched = Schedule(cycle_graph(6), (frozenset({0, 2, 4}),))
    with pytest.raises(UncoveredArm):
        run_case2_scheme2(I6, TW6, sched, 0.1, 0)


def test_case1_identity_channel_matches_clean_choice():
    ref = run_clean(I6, 0.1, 5)
    res = run_case1_baseline(I6, identity_channel(6), 0.1, 5)
    assert res.chosen == I6.best_arm == ref.chosen
    # sqrt(K) inflation with sigma_min = 1 makes the baseline slower than the clean run
    assert res.tau > ref.tau


def test_case1_rejects_singular():
    with pytest.raises(NonIdentifiable):
        run_case1_baseline(I6, make_typewriter(6, 0.5), 0.1, 0)
    with pytest.raises(NonIdentifiable):
        case1_unmix_estimate(I6, make_typewriter(6, 0.5), 600, 0)


def test_case1_estimate_is_consistent():
    est = np.mean([case1_unmix_estimate(I6, TW6, 60_000, s) for s in range(20)], axis=0)
    assert np.allclose(est, MU6, atol=0.05)


def test_counted_rows_execute_the_intended_arm():
    ref = clean(I5, 9)
    for res in (
        run_case2_scheme1(I5, TW5, slope_code_c5(), 0.1, 9),
        run_case2_scheme2(I5, TW5, overlap_schedule_c5(), 0.1, 9),
        run_case3_pse(I5, TW5, plan_family(5, digit_from_name("c5-slope")), 0.1, 9),
    ):
        assert np.array_equal(res.trace.counted_arms(), ref.requests)
        assert np.all(res.trace.kind[res.trace.counted] == KIND_COUNTED)


@pytest.mark.parametrize(
    "make, claim",
    [
        (lambda s: run_case2_scheme1(I5, TW5, slope_code_c5(), 0.1, s), "scheme1"),
        (lambda s: run_case2_scheme2(I6, TW6, parity_schedule_c6(), 0.1, s), "parity"),
        (lambda s: run_case2_scheme2(I5, TW5, overlap_schedule_c5(), 0.1, s), "schedule"),
        (lambda s: run_case3_pse(I6, TW6, plan_family(6, digit_from_name("c6-parity")), 0.1, s), "pse-additive"),
    ],
)
def test_dropping_a_counted_row_is_caught(make, claim):
    res = make(3)
    rows = np.flatnonzero(res.trace.counted)
    for i in (int(rows[0]), int(rows[len(rows) // 2]), int(rows[-1])):
        rep = audit_trace(res.trace.drop_row(i), claim)
        assert not rep.passed
        assert rep.first_bad_row == i or (i == res.trace.tau - 1 and rep.first_bad_row is not None)


def test_coupling_detects_reward_tamper():
    ref = clean(I5, 4)
    res = run_case2_scheme1(I5, TW5, slope_code_c5(), 0.1, 4)
    tr = res.trace
    j = int(np.flatnonzero(tr.counted)[10])
    tr.reward[j] += 1e-9
    rep = audit_trace(tr, "coupling", ref)
    assert not rep.passed and rep.first_bad_row == j


def test_trace_csv(tmp_path):
    res = run_case2_scheme1(I5, TW5, slope_code_c5(), 0.1, 1)
    p = tmp_path / "t.csv"
    res.trace.to_csv(p)
    lines = p.read_text().splitlines()
    assert lines[0] == "t,x,y,executed,reward,counted,step,phase,kind"
    assert len(lines) == res.tau + 1
    assert lines[1].startswith("1,")


def test_learner_view_hides_agent_state():
    res = run_case2_scheme1(I5, TW5, slope_code_c5(), 0.1, 1)
    assert set(res.trace.learner_view()) == {"t", "x", "reward", "counted"}
