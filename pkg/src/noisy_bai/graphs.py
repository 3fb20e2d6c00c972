"""Confusability graphs, strong powers and exact independence numbers.

Vertex sets are handled as Python-int bitsets throughout; the exact solver is
a maximum-clique branch and bound (greedy-colouring bound) run on the
complement graph.

Product-graph vertices are n-tuples addressed by a little-endian mixed-radix
index: coordinate 0 is the least significant digit, so with base ``K`` the
tuple ``(x0, x1)`` has index ``x0 + K * x1``.
"""

from __future__ import annotations

import itertools
import time
from dataclasses import dataclass
from typing import Iterable, Sequence, Union

from .channel import SupportSet
from .errors import CapExceeded, NotIndependent

DEFAULT_POWER_CAP = 10**6
DEFAULT_SOLVER_CAP = 4096
DEFAULT_NMAX = 8


@dataclass(frozen=True)
class ConfusabilityGraph:
    """Simple undirected graph on ``0..v-1``; no self-loops are stored."""

    v: int
    nbrs: tuple[frozenset[int], ...]

    def __post_init__(self):
        if len(self.nbrs) != self.v:
            raise ValueError("neighbour list length must equal vertex count")
        for a, na in enumerate(self.nbrs):
            if a in na:
                raise ValueError(f"self-loop at {a}")
            for b in na:
                if a not in self.nbrs[b]:
                    raise ValueError(f"adjacency not symmetric at {{{a}, {b}}}")

    @property
    def num_vertices(self) -> int:
        return self.v

    def adjacent(self, a: int, b: int) -> bool:
        return b in self.nbrs[a]

    def confusable(self, a: int, b: int) -> bool:
        """Equal-or-adjacent."""
        return a == b or b in self.nbrs[a]

    def edges(self) -> list[tuple[int, int]]:
        return sorted((a, b) for a in range(self.v) for b in self.nbrs[a] if a < b)

    def degree(self, a: int) -> int:
        return len(self.nbrs[a])

    def neighbor_masks(self) -> list[int]:
        return [sum(1 << b for b in na) for na in self.nbrs]

    def is_complete(self) -> bool:
        return all(len(na) == self.v - 1 for na in self.nbrs)

    def label(self, vertex: int):
        return vertex


def graph_from_edges(v: int, edges: Iterable[tuple[int, int]]) -> ConfusabilityGraph:
    nbrs = [set() for _ in range(v)]
    for a, b in edges:
        if a != b:
            nbrs[a].add(b)
            nbrs[b].add(a)
    return ConfusabilityGraph(v, tuple(frozenset(s) for s in nbrs))


def cycle_graph(n: int) -> ConfusabilityGraph:
    return graph_from_edges(n, ((i, (i + 1) % n) for i in range(n)))


def complete_graph(n: int) -> ConfusabilityGraph:
    return graph_from_edges(n, itertools.combinations(range(n), 2))


def confusability_graph(support: SupportSet) -> ConfusabilityGraph:
    """Edge ``{x, x'}`` iff the output supports of ``x`` and ``x'`` intersect."""
    k = len(support)
    if any(not s for s in support):
        raise ValueError("every input needs a nonempty output support")
    return graph_from_edges(
        k, ((a, b) for a, b in itertools.combinations(range(k), 2) if support[a] & support[b])
    )


class ProductGraph:
    """n-fold strong power of a base graph, exposed as an adjacency oracle."""

    def __init__(self, base: ConfusabilityGraph, n: int):
        self.base = base
        self.n = n
        self.k = base.v

    @property
    def num_vertices(self) -> int:
        return self.k**self.n

    def to_tuple(self, index: int) -> tuple[int, ...]:
        out = []
        for _ in range(self.n):
            index, d = divmod(index, self.k)
            out.append(d)
        return tuple(out)

    def to_index(self, tup: Sequence[int]) -> int:
        if len(tup) != self.n:
            raise ValueError(f"expected a {self.n}-tuple, got {tup!r}")
        idx = 0
        for d in reversed(tup):
            idx = idx * self.k + d
        return idx

    def label(self, vertex: int):
        return self.to_tuple(vertex)

    def _as_tuple(self, u) -> tuple[int, ...]:
        return self.to_tuple(u) if isinstance(u, int) else tuple(u)

    def confusable(self, u, w) -> bool:
        tu, tw = self._as_tuple(u), self._as_tuple(w)
        return all(self.base.confusable(a, b) for a, b in zip(tu, tw))

    def adjacent(self, u, w) -> bool:
        tu, tw = self._as_tuple(u), self._as_tuple(w)
        return tu != tw and self.confusable(tu, tw)

    def neighbor_masks(self) -> list[int]:
        # neighbourhood of a tuple = product of closed base neighbourhoods, minus itself
        closed = [sorted(self.base.nbrs[a] | {a}) for a in range(self.k)]
        weights = [self.k**i for i in range(self.n)]
        masks = []
        for idx in range(self.num_vertices):
            tup = self.to_tuple(idx)
            m = 0
            for combo in itertools.product(*(closed[d] for d in tup)):
                m |= 1 << sum(c * w for c, w in zip(combo, weights))
            masks.append(m & ~(1 << idx))
        return masks

    def is_complete(self) -> bool:
        return self.base.is_complete()


GraphView = Union[ConfusabilityGraph, ProductGraph]


def strong_power(g: ConfusabilityGraph, n: int, cap: int = DEFAULT_POWER_CAP) -> ProductGraph:
    if n < 1:
        raise ValueError("blocklength must be >= 1")
    if g.v**n > cap:
        raise CapExceeded(f"{g.v}^{n} = {g.v ** n} vertices exceeds cap {cap}")
    return ProductGraph(g, n)


@dataclass(frozen=True)
class IndependentSet:
    graph: GraphView
    members: tuple[int, ...]

    def __post_init__(self):
        members = tuple(sorted(set(self.members)))
        object.__setattr__(self, "members", members)
        for a, b in itertools.combinations(members, 2):
            if self.graph.adjacent(a, b):
                raise NotIndependent(
                    f"{self.graph.label(a)} and {self.graph.label(b)} are adjacent"
                )

    def __len__(self):
        return len(self.members)

    def __contains__(self, v) -> bool:
        return v in self.members

    def __iter__(self):
        return iter(self.members)

    def labels(self) -> list:
        return sorted(self.graph.label(v) for v in self.members)


@dataclass(frozen=True)
class AlphaResult:
    value: int
    witness: IndependentSet
    exact: bool
    seconds: float


def _bits(mask: int):
    while mask:
        low = mask & -mask
        yield low.bit_length() - 1
        mask ^= low


def _greedy_independent(masks: list[int], alive: int) -> list[int]:
    """Min-degree greedy on the subgraph induced by ``alive``."""
    chosen = []
    while alive:
        v = min(_bits(alive), key=lambda u: (bin(masks[u] & alive).count("1"), u))
        chosen.append(v)
        alive &= ~(masks[v] | (1 << v))
    return chosen


def greedy_independent_set(g: GraphView) -> AlphaResult:
    """Lower bound only; ``exact`` is False on the returned result."""
    t0 = time.perf_counter()
    masks = g.neighbor_masks()
    chosen = _greedy_independent(masks, (1 << len(masks)) - 1)
    return AlphaResult(len(chosen), IndependentSet(g, tuple(chosen)), False, time.perf_counter() - t0)


class _CliqueSearch:
    """Tomita-style maximum clique with greedy colouring bounds."""

    def __init__(self, adj: list[int], best: list[int], target: int | None):
        self.adj = adj
        self.best = list(best)
        self.target = target
        self.current: list[int] = []

    def _done(self) -> bool:
        return self.target is not None and len(self.best) >= self.target

    def _colour_sort(self, cand: int):
        order, bounds = [], []
        colour = 0
        uncoloured = cand
        while uncoloured:
            colour += 1
            avail = uncoloured
            while avail:
                low = avail & -avail
                v = low.bit_length() - 1
                uncoloured &= ~low
                avail &= ~low & ~self.adj[v]
                order.append(v)
                bounds.append(colour)
        return order, bounds

    def expand(self, cand: int):
        order, bounds = self._colour_sort(cand)
        for i in range(len(order) - 1, -1, -1):
            if len(self.current) + bounds[i] <= len(self.best) or self._done():
                return
            v = order[i]
            self.current.append(v)
            nxt = cand & self.adj[v]
            if nxt:
                self.expand(nxt)
            elif len(self.current) > len(self.best):
                self.best = list(self.current)
            self.current.pop()
            cand &= ~(1 << v)


def independence_number(
    g: GraphView,
    cap: int = DEFAULT_SOLVER_CAP,
    target: int | None = None,
    allow_greedy: bool = False,
) -> AlphaResult:
    """Exact independence number with a witness set.

    With ``target`` set the search stops as soon as an independent set of that
    size is found; the returned value is then only certified to be
    ``>= target`` (``exact`` is False unless the search ran to completion).
    """
    nv = g.num_vertices
    if nv > cap:
        if allow_greedy:
            return greedy_independent_set(g)
        raise CapExceeded(f"{nv} vertices exceeds exact-solver cap {cap}")
    t0 = time.perf_counter()
    masks = g.neighbor_masks()
    full = (1 << nv) - 1

    # relabel so that low bits are the vertices of lowest degree in g
    # (highest degree in the complement, where the clique search runs)
    perm = sorted(range(nv), key=lambda v: (bin(masks[v]).count("1"), v))
    pos = {v: i for i, v in enumerate(perm)}
    comp = []
    for v in perm:
        m = full & ~masks[v] & ~(1 << v)
        comp.append(sum(1 << pos[u] for u in _bits(m)))

    seed = [pos[v] for v in _greedy_independent(masks, full)]
    search = _CliqueSearch(comp, seed, target)
    if not search._done():
        search.expand((1 << nv) - 1)
    members = tuple(perm[i] for i in search.best)
    exact = target is None or len(members) < target
    return AlphaResult(len(members), IndependentSet(g, members), exact, time.perf_counter() - t0)


def message_count(
    g: ConfusabilityGraph, n: int, cap: int = DEFAULT_SOLVER_CAP
) -> int:
    """Largest number of zero-error messages in ``n`` channel uses."""
    return independence_number(strong_power(g, n), cap=cap).value


@dataclass(frozen=True)
class BlocklengthResult:
    n: int | None
    reason: str
    witness: IndependentSet | None = None

    def __bool__(self):
        return self.n is not None


def minimal_blocklength(
    g: ConfusabilityGraph,
    s: int,
    n_max: int = DEFAULT_NMAX,
    cap: int = DEFAULT_SOLVER_CAP,
) -> BlocklengthResult:
    """Smallest ``n`` whose strong power has an independent set of size ``s``."""
    if s < 1:
        raise ValueError("message set must be nonempty")
    if s == 1:
        return BlocklengthResult(1, "ok", IndependentSet(strong_power(g, 1), (0,)))
    if is_zero_capacity(g):
        return BlocklengthResult(None, "complete-graph")
    for n in range(1, n_max + 1):
        if g.v**n > cap:
            return BlocklengthResult(None, f"cap: {g.v}^{n} vertices exceeds {cap}")
        res = independence_number(strong_power(g, n), cap=cap, target=s)
        if res.value >= s:
            return BlocklengthResult(n, "ok", res.witness)
    return BlocklengthResult(None, f"n_max={n_max} reached")


def is_zero_capacity(g: ConfusabilityGraph) -> bool:
    return g.is_complete()
