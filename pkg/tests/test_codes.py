import itertools

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from noisy_bai.channel import make_typewriter, sample_outputs, typewriter_support
from noisy_bai.codes import (
    BlockDigit,
    PacketCodec,
    Schedule,
    c6_product_code,
    code_from_independent_set,
    coloring_schedule,
    decode_single_use,
    digit_from_name,
    digits_needed,
    generic_indset_decode,
    overlap_schedule_c5,
    packet_from_config,
    parity_schedule_c6,
    schedule_decode_luts,
    slope_code_c5,
)
from noisy_bai.errors import InvalidOutput, NotIndependent, ZeroErrorViolation
from noisy_bai.graphs import cycle_graph, independence_number, strong_power

SLOPE_DUMP_HEAD = """\
# zero-error code: slope-c5
alphabet 5
blocklength 2
messages 5
codeword 0 -> (0, 0)
codeword 1 -> (1, 2)
codeword 2 -> (2, 4)
codeword 3 -> (3, 1)
codeword 4 -> (4, 3)
decode (0, 0) -> 0
decode (0, 1) -> 0
"""


def typewriter_outputs(word, k):
    return set(itertools.product(*((x, (x + 1) % k) for x in word)))


def test_slope_codewords():
    code = slope_code_c5()
    assert code.codewords == tuple((i, 2 * i % 5) for i in range(5))


def test_c6_product_codewords():
    code = c6_product_code()
    assert code.codewords == tuple(itertools.product((0, 2, 4), repeat=2))
    assert code.messages == 9


@pytest.mark.parametrize("code, k", [(slope_code_c5(), 5), (c6_product_code(), 6)])
def test_exhaustive_zero_error(code, k):
    seen = {}
    for m, word in enumerate(code.codewords):
        outs = typewriter_outputs(word, k)
        assert set(code.output_set(m)) == outs
        for y in outs:
            assert y not in seen
            seen[y] = m
            assert code.decode(y) == m
    assert len(seen) == code.messages * 2**code.n


def test_unreachable_output_rejected():
    code = slope_code_c5()
    reachable = {y for m in range(5) for y in code.output_set(m)}
    bad = next(y for y in itertools.product(range(5), repeat=2) if y not in reachable)
    with pytest.raises(InvalidOutput):
        code.decode(bad)
    blocks = np.array([[0, 0], list(bad)])
    assert code.decode_blocks(blocks).tolist() == [0, -1]


def test_confusable_words_rejected():
    with pytest.raises(NotIndependent):
        code_from_independent_set(typewriter_support(5), 2, [(0, 0), (1, 1)])


def test_overlap_guard():
    from noisy_bai.codes import ZeroErrorCode

    with pytest.raises(ZeroErrorViolation):
        ZeroErrorCode(typewriter_support(5), ((0,), (1,)), name="bad")


def test_code_from_solver_witness():
    g = cycle_graph(7)
    best = independence_number(strong_power(g, 2))
    code = code_from_independent_set(typewriter_support(7), 2, best.witness)
    assert code.messages == 10
    for m in range(10):
        for y in code.output_set(m):
            assert code.decode(y) == m


@settings(max_examples=100, deadline=None)
@given(eps=st.floats(0.01, 0.99), seed=st.integers(0, 2**32 - 1))
def test_noisy_roundtrip(eps, seed):
    rng = np.random.default_rng(seed)
    for code, k in ((slope_code_c5(), 5), (c6_product_code(), 6)):
        ch = make_typewriter(k, eps)
        msgs = rng.integers(0, code.messages, 50)
        xs = np.array([code.encode(int(m)) for m in msgs])
        ys = sample_outputs(ch, xs.ravel(), rng).reshape(xs.shape)
        assert code.decode_blocks(ys).tolist() == msgs.tolist()


def test_dump_is_deterministic():
    a = slope_code_c5().dump()
    assert a == slope_code_c5().dump()
    assert a.startswith(SLOPE_DUMP_HEAD)
    assert a.count("\ndecode ") == 20


def test_parity_schedule():
    s = parity_schedule_c6()
    assert s.period == 2
    assert s.active(1) == {0, 2, 4} and s.active(2) == {1, 3, 5} and s.active(7) == {0, 2, 4}
    assert s.class_of(3) == 1 and s.class_of(4) == 0
    assert s.covered() == frozenset(range(6))


def test_overlap_schedule():
    s = overlap_schedule_c5()
    assert [sorted(x) for x in s.slots] == [[1, 3], [2, 4], [0, 2]]
    assert s.covered() == frozenset(range(5))


def test_schedule_rejects_dependent_slot():
    with pytest.raises(NotIndependent):
        Schedule(cycle_graph(6), (frozenset({0, 1}),))


def test_coloring_schedule_covers():
    for k in (4, 5, 7):
        s = coloring_schedule(cycle_graph(k))
        assert s.covered() == frozenset(range(k))


@pytest.mark.parametrize("k", [5, 6, 8])
def test_single_use_decoders_agree(k):
    sup = typewriter_support(k)
    g = cycle_graph(k)
    for size in (1, 2, 3):
        for active in itertools.combinations(range(k), size):
            if any(g.adjacent(a, b) for a, b in itertools.combinations(active, 2)):
                continue
            for x in active:
                for y in (x, (x + 1) % k):
                    assert decode_single_use(active, y, k) == x
                    assert generic_indset_decode(sup, active, y) == x


def test_single_use_invalid():
    with pytest.raises(InvalidOutput):
        decode_single_use({0, 3}, 2, 6)


def test_schedule_luts():
    luts = schedule_decode_luts(parity_schedule_c6(), typewriter_support(6))
    assert luts.tolist() == [[0, 0, 2, 2, 4, 4], [5, 1, 1, 3, 3, 5]]


@pytest.mark.parametrize("q, m", [(2, 1), (2, 2), (2, 3), (3, 63), (5, 31), (5, 25), (5, 26), (9, 511), (7, 10**6)])
def test_digits_needed_matches_base_repr(q, m):
    expected = 0 if m == 1 else len(np.base_repr(m - 1, q))
    assert digits_needed(q, m) == expected


def test_packet_lengths():
    c5 = PacketCodec(digit_from_name("c5-slope"), 31)
    c6 = PacketCodec(digit_from_name("c6-parity"), 63)
    assert (c5.num_digits, c5.length) == (3, 6)
    assert (c6.num_digits, c6.length) == (4, 4)
    assert packet_from_config({"digit": "c6-parity", "messages": 63}).length == 4


def test_packet_digits_most_significant_first():
    codec = PacketCodec(digit_from_name("c6-parity"), 63)
    # 47 = 1*27 + 2*9 + 0*3 + 2 -> digits (1, 2, 0, 2); slot 1 uses {0,2,4}, slot 2 uses {1,3,5}
    assert codec.encode(47, t0=1) == [2, 5, 0, 5]
    assert codec.encode(47, t0=2) == [3, 4, 1, 4]


@settings(max_examples=100, deadline=None)
@given(st.data())
def test_packet_roundtrip_noisy(data):
    name, count = data.draw(st.sampled_from([("c5-slope", 31), ("c6-parity", 63)]))
    codec = PacketCodec(digit_from_name(name), count)
    k = 5 if name == "c5-slope" else 6
    m = data.draw(st.integers(0, count - 1))
    t0 = data.draw(st.integers(1, 50))
    eps = data.draw(st.floats(0.01, 0.99))
    rng = np.random.default_rng(data.draw(st.integers(0, 2**31)))
    xs = codec.encode(m, t0)
    ys = sample_outputs(make_typewriter(k, eps), xs, rng).tolist()
    assert codec.decode(ys, t0) == m


def test_packet_rejects_out_of_range():
    codec = PacketCodec(BlockDigit(slope_code_c5()), 7)
    with pytest.raises(ValueError):
        codec.encode(7)
    with pytest.raises(InvalidOutput):
        codec.decode(codec.digit.encode_digit(1, 1) + codec.digit.encode_digit(4, 3))
