"""Zero-error codes, independent-set schedules and digitised packet codecs."""

from __future__ import annotations

import itertools
from dataclasses import dataclass, field
from typing import Iterable, Sequence

import numpy as np

from .channel import SupportSet, typewriter_support
from .errors import InvalidOutput, NotIndependent, ZeroErrorViolation
from .graphs import (
    ConfusabilityGraph,
    IndependentSet,
    confusability_graph,
    cycle_graph,
    strong_power,
)

Word = tuple[int, ...]


def _word_index(word: Sequence[int], k: int) -> int:
    idx = 0
    for d in reversed(word):
        idx = idx * k + d
    return idx


@dataclass(frozen=True, eq=False)
class ZeroErrorCode:
    """Block code whose codewords have pairwise disjoint output supports.

    The decode table maps every output word reachable from some codeword to
    that codeword's message; it is built eagerly so zero-error decoding is a
    property of the constructed object.
    """

    support: SupportSet
    codewords: tuple[Word, ...]
    name: str = "code"
    decode_table: dict = field(init=False, repr=False)
    lut: np.ndarray = field(init=False, repr=False)

    def __post_init__(self):
        table: dict[Word, int] = {}
        for m, word in enumerate(self.codewords):
            for out in self.output_set(m):
                if out in table:
                    raise ZeroErrorViolation(
                        f"output {out} reachable from messages {table[out]} and {m}"
                    )
                table[out] = m
        object.__setattr__(self, "decode_table", table)
        lut = np.full(self.k**self.n, -1, dtype=np.int64)
        for out, m in table.items():
            lut[_word_index(out, self.k)] = m
        lut.setflags(write=False)
        object.__setattr__(self, "lut", lut)

    @property
    def k(self) -> int:
        return len(self.support)

    @property
    def n(self) -> int:
        return len(self.codewords[0]) if self.codewords else 0

    @property
    def messages(self) -> int:
        return len(self.codewords)

    def output_set(self, m: int) -> list[Word]:
        return list(itertools.product(*(sorted(self.support[x]) for x in self.codewords[m])))

    def encode(self, m: int) -> Word:
        return self.codewords[m]

    def decode(self, y: Sequence[int]) -> int:
        try:
            return self.decode_table[tuple(y)]
        except KeyError:
            raise InvalidOutput(f"output {tuple(y)} is not reachable from any codeword") from None

    def decode_blocks(self, ys: np.ndarray) -> np.ndarray:
        """Decode an ``(m, n)`` array of output words; -1 marks unreachable words."""
        ys = np.asarray(ys, dtype=np.int64)
        weights = self.k ** np.arange(self.n, dtype=np.int64)
        return self.lut[ys @ weights]

    def dump(self) -> str:
        lines = [
            f"# zero-error code: {self.name}",
            f"alphabet {self.k}",
            f"blocklength {self.n}",
            f"messages {self.messages}",
        ]
        for m, word in enumerate(self.codewords):
            lines.append(f"codeword {m} -> {word}")
        for out in sorted(self.decode_table):
            lines.append(f"decode {out} -> {self.decode_table[out]}")
        return "\n".join(lines) + "\n"


def code_from_independent_set(
    support: SupportSet, n: int, members: IndependentSet | Iterable, name: str = "from-indset"
) -> ZeroErrorCode:
    """Codebook from an independent set of the n-th strong power.

    ``members`` may be an :class:`IndependentSet` of the power graph, product
    indices, or explicit n-tuples.  Independence is re-checked against the
    confusability graph of ``support``.
    """
    power = strong_power(confusability_graph(support), n)
    if isinstance(members, IndependentSet):
        members = members.members
    words = []
    for m in members:
        words.append(power.to_tuple(m) if isinstance(m, (int, np.integer)) else tuple(int(v) for v in m))
    for w in words:
        if len(w) != n or any(not 0 <= d < len(support) for d in w):
            raise ValueError(f"codeword {w} is not a length-{n} word over 0..{len(support) - 1}")
    for a, b in itertools.combinations(words, 2):
        if power.confusable(a, b):
            raise NotIndependent(f"codewords {a} and {b} are confusable")
    return ZeroErrorCode(support, tuple(words), name=name)


def slope_code_c5(support: SupportSet | None = None) -> ZeroErrorCode:
    """Length-2 pentagon code ``i -> (i, 2i mod 5)``."""
    support = support if support is not None else typewriter_support(5)
    return code_from_independent_set(
        support, 2, [(i, 2 * i % 5) for i in range(5)], name="slope-c5"
    )


def product_code(support: SupportSet, factors: Sequence[Iterable[int]], name: str = "product") -> ZeroErrorCode:
    """Cartesian product of single-use independent sets, words in lexicographic order."""
    words = list(itertools.product(*(sorted(f) for f in factors)))
    return code_from_independent_set(support, len(factors), words, name=name)


def c6_product_code(support: SupportSet | None = None) -> ZeroErrorCode:
    support = support if support is not None else typewriter_support(6)
    return product_code(support, [(0, 2, 4), (0, 2, 4)], name="product-c6")


@dataclass(frozen=True)
class Schedule:
    """Public periodic calendar of independent sets; slot ``t`` counts from 1."""

    graph: ConfusabilityGraph
    slots: tuple[frozenset[int], ...]
    name: str = "schedule"

    def __post_init__(self):
        if not self.slots:
            raise ValueError("schedule needs at least one slot")
        slots = tuple(frozenset(s) for s in self.slots)
        object.__setattr__(self, "slots", slots)
        for i, s in enumerate(slots):
            if not s:
                raise ValueError(f"slot {i} is empty")
            try:
                IndependentSet(self.graph, tuple(s))
            except NotIndependent as exc:
                raise NotIndependent(f"slot {i}: {exc}") from None

    @property
    def period(self) -> int:
        return len(self.slots)

    def slot_index(self, t: int) -> int:
        return (t - 1) % self.period

    def active(self, t: int) -> frozenset[int]:
        return self.slots[(t - 1) % self.period]

    def covered(self) -> frozenset[int]:
        return frozenset().union(*self.slots)

    def class_of(self, arm: int) -> int:
        """Index of the first slot whose set contains ``arm``."""
        for i, s in enumerate(self.slots):
            if arm in s:
                return i
        raise KeyError(arm)

    def dump(self) -> str:
        lines = [f"# schedule: {self.name}", f"period {self.period}"]
        for i, s in enumerate(self.slots):
            lines.append(f"slot t = {i + 1} (mod {self.period}) -> {sorted(s)}")
        return "\n".join(lines) + "\n"


S_EVEN = frozenset({0, 2, 4})
S_ODD = frozenset({1, 3, 5})


def parity_schedule_c6() -> Schedule:
    # S_even on odd slots t = 1, 3, ...
    return Schedule(cycle_graph(6), (S_EVEN, S_ODD), name="parity-c6")


def overlap_schedule_c5() -> Schedule:
    return Schedule(cycle_graph(5), ({1, 3}, {2, 4}, {0, 2}), name="overlap-c5")


def coloring_schedule(g: ConfusabilityGraph) -> Schedule:
    """Greedy (largest-degree-first) colouring, one slot per colour class."""
    colour: dict[int, int] = {}
    for v in sorted(range(g.v), key=lambda u: (-g.degree(u), u)):
        used = {colour[u] for u in g.nbrs[v] if u in colour}
        colour[v] = next(c for c in itertools.count() if c not in used)
    classes = [frozenset(v for v in range(g.v) if colour[v] == c) for c in range(max(colour.values()) + 1)]
    return Schedule(g, tuple(classes), name="coloring")


def decode_single_use(active: Iterable[int], y: int, k: int) -> int:
    """Typewriter single-use decoder: ``y`` if active, else ``y - 1 mod k``."""
    active = frozenset(active)
    if y in active:
        return y
    prev = (y - 1) % k
    if prev in active:
        return prev
    raise InvalidOutput(f"neither {y} nor {prev} is in the active set {sorted(active)}")


def generic_indset_decode(support: SupportSet, active: Iterable[int], y: int) -> int:
    """The unique active input that can produce ``y``."""
    hits = [x for x in sorted(active) if y in support[x]]
    if not hits:
        raise InvalidOutput(f"no member of {sorted(active)} can produce output {y}")
    if len(hits) > 1:
        raise NotIndependent(f"inputs {hits} share output {y}")
    return hits[0]


def schedule_decode_luts(schedule: Schedule, support: SupportSet) -> np.ndarray:
    """``lut[slot, y]`` = decoded input for output ``y`` in that slot, or -1."""
    k = len(support)
    lut = np.full((schedule.period, k), -1, dtype=np.int64)
    for i, s in enumerate(schedule.slots):
        for y in range(k):
            try:
                lut[i, y] = generic_indset_decode(support, s, y)
            except InvalidOutput:
                pass
    return lut


class BlockDigit:
    """Digit carried by a fixed zero-error block code (q = codebook size)."""

    def __init__(self, code: ZeroErrorCode):
        self.code = code
        self.q = code.messages
        self.n0 = code.n
        self.name = code.name

    def encode_digit(self, d: int, t: int) -> Word:
        return self.code.encode(d)

    def decode_digit(self, ys: Sequence[int], t: int) -> int:
        return self.code.decode(ys)


class ScheduleDigit:
    """One channel use per digit under a public schedule.

    Digit ``d`` in slot ``t`` is sent as the d-th smallest member of the
    active set; ``q`` is the smallest slot size so every slot carries it.
    """

    def __init__(self, schedule: Schedule, support: SupportSet):
        self.schedule = schedule
        self.support = support
        self.q = min(len(s) for s in schedule.slots)
        self.n0 = 1
        self.name = schedule.name
        self._sorted = [sorted(s) for s in schedule.slots]

    def encode_digit(self, d: int, t: int) -> Word:
        return (self._sorted[self.schedule.slot_index(t)][d],)

    def decode_digit(self, ys: Sequence[int], t: int) -> int:
        x = generic_indset_decode(self.support, self.schedule.active(t), ys[0])
        return self._sorted[self.schedule.slot_index(t)].index(x)


DigitCode = BlockDigit | ScheduleDigit


def digits_needed(q: int, message_count: int) -> int:
    """Smallest ``d`` with ``q**d >= message_count`` (0 for a single message)."""
    if message_count < 1:
        raise ValueError("message_count must be >= 1")
    if q < 2 and message_count > 1:
        raise ValueError("a digit must carry at least two messages")
    d, cap = 0, 1
    while cap < message_count:
        d += 1
        cap *= q
    return d


class PacketCodec:
    """Messages ``0..M-1`` as base-q digits, most significant first."""

    def __init__(self, digit: DigitCode, message_count: int):
        self.digit = digit
        self.message_count = message_count
        self.num_digits = digits_needed(digit.q, message_count)
        self.length = digit.n0 * self.num_digits
        self.capacity = digit.q**self.num_digits

    def _digits(self, m: int) -> list[int]:
        out = []
        for _ in range(self.num_digits):
            m, d = divmod(m, self.digit.q)
            out.append(d)
        return out[::-1]

    def encode(self, m: int, t0: int = 1) -> list[int]:
        """Channel symbols for message ``m`` when the packet starts at slot ``t0``."""
        if not 0 <= m < self.message_count:
            raise ValueError(f"message {m} outside 0..{self.message_count - 1}")
        symbols: list[int] = []
        for i, d in enumerate(self._digits(m)):
            symbols.extend(self.digit.encode_digit(d, t0 + i * self.digit.n0))
        return symbols

    def decode(self, ys: Sequence[int], t0: int = 1) -> int:
        n0 = self.digit.n0
        m = 0
        for i in range(self.num_digits):
            chunk = ys[i * n0 : (i + 1) * n0]
            m = m * self.digit.q + self.digit.decode_digit(chunk, t0 + i * n0)
        if m >= self.message_count:
            raise InvalidOutput(f"decoded message {m} outside 0..{self.message_count - 1}")
        return m


def digitized_packet_code(digit: DigitCode, message_count: int) -> PacketCodec:
    return PacketCodec(digit, message_count)


def digit_from_name(name: str) -> DigitCode:
    if name == "c5-slope":
        return BlockDigit(slope_code_c5())
    if name == "c6-parity":
        return ScheduleDigit(parity_schedule_c6(), typewriter_support(6))
    raise ValueError(f"unknown digit {name!r}; expected 'c5-slope' or 'c6-parity'")


def packet_from_config(cfg: dict) -> PacketCodec:
    return digitized_packet_code(digit_from_name(cfg["digit"]), int(cfg["messages"]))
