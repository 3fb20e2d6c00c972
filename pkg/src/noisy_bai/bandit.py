"""Bandit instances, coupled reward pools and phased successive elimination."""

from __future__ import annotations

import hashlib
import math
from dataclasses import dataclass, field
from typing import Callable, Sequence

import numpy as np

from .errors import RunawayRun

LAWS = ("gaussian", "bernoulli", "deterministic")
COUNTED = "c"
UNCOUNTED = "u"
_POOL_BLOCK = 4096
DEFAULT_MAX_ROUNDS = 10**8


def derive_seed(*keys) -> int:
    """Stable 63-bit seed from a tuple of ints/strings (independent of PYTHONHASHSEED)."""
    h = hashlib.blake2b(repr(tuple(keys)).encode(), digest_size=8)
    return int.from_bytes(h.digest(), "little") >> 1


def make_rng(*keys) -> np.random.Generator:
    return np.random.Generator(np.random.PCG64(derive_seed(*keys)))


@dataclass(frozen=True)
class BanditInstance:
    mu: tuple[float, ...]
    law: str = "gaussian"

    def __post_init__(self):
        mu = tuple(float(m) for m in self.mu)
        object.__setattr__(self, "mu", mu)
        if not mu:
            raise ValueError("need at least one arm")
        if self.law not in LAWS:
            raise ValueError(f"unknown reward law {self.law!r}; expected one of {LAWS}")
        if self.law == "bernoulli" and any(not 0.0 <= m <= 1.0 for m in mu):
            raise ValueError("bernoulli means must lie in [0, 1]")
        top = max(mu)
        if sum(m == top for m in mu) > 1:
            raise ValueError("best arm must be unique")

    @property
    def k(self) -> int:
        return len(self.mu)

    @property
    def best_arm(self) -> int:
        return int(np.argmax(self.mu))

    @property
    def gaps(self) -> np.ndarray:
        mu = np.asarray(self.mu)
        return mu.max() - mu

    def min_gap(self) -> float:
        g = self.gaps
        return float(g[g > 0].min()) if self.k > 1 else math.inf

    def to_config(self) -> dict:
        return {"k": self.k, "mu": list(self.mu), "law": self.law}

    @classmethod
    def from_config(cls, cfg: dict) -> "BanditInstance":
        inst = cls(tuple(cfg["mu"]), cfg.get("law", "gaussian"))
        if "k" in cfg and int(cfg["k"]) != inst.k:
            raise ValueError(f"k = {cfg['k']} but {inst.k} means given")
        return inst


class _Stream:
    def __init__(self, seed: int, uniform: bool):
        self._gen = np.random.Generator(np.random.PCG64(seed))
        self._uniform = uniform
        self._blocks: list[np.ndarray] = []
        self.pos = 0

    def _ensure(self, n: int):
        while len(self._blocks) * _POOL_BLOCK < n:
            gen = self._gen
            self._blocks.append(gen.random(_POOL_BLOCK) if self._uniform else gen.standard_normal(_POOL_BLOCK))

    def at(self, j: int) -> float:
        self._ensure(j + 1)
        return float(self._blocks[j // _POOL_BLOCK][j % _POOL_BLOCK])

    def take(self, n: int) -> np.ndarray:
        start, stop = self.pos, self.pos + n
        self._ensure(stop)
        first, last = start // _POOL_BLOCK, (stop - 1) // _POOL_BLOCK if n else start // _POOL_BLOCK
        if n == 0:
            out = np.empty(0)
        elif first == last:
            out = self._blocks[first][start % _POOL_BLOCK : start % _POOL_BLOCK + n].copy()
        else:
            out = np.concatenate(self._blocks[first : last + 1])[start - first * _POOL_BLOCK :][:n]
        self.pos = stop
        return out


class RewardPools:
    """Per-arm counted and uncounted reward streams.

    The j-th draw of (arm, pool) is a fixed function of
    ``(seed, arm, pool, j)``: noise is generated in fixed blocks from a stream
    seeded by ``derive_seed(seed, arm, pool)``, so any two protocols built on
    the same seed see the same counted rewards in the same per-arm order.
    """

    def __init__(self, instance: BanditInstance, seed: int):
        self.instance = instance
        self.seed = seed
        uniform = instance.law == "bernoulli"
        self._streams = {
            (a, p): _Stream(derive_seed(seed, "pool", a, p), uniform)
            for a in range(instance.k)
            for p in (COUNTED, UNCOUNTED)
        }

    def _to_reward(self, arm: int, noise: np.ndarray) -> np.ndarray:
        mu = self.instance.mu[arm]
        law = self.instance.law
        if law == "gaussian":
            return mu + noise
        if law == "bernoulli":
            return (noise < mu).astype(np.float64)
        return np.full(noise.shape, mu)

    def draw(self, arm: int, pool: str, n: int = 1) -> np.ndarray:
        return self._to_reward(arm, self._streams[(arm, pool)].take(n))

    def value(self, arm: int, pool: str, j: int) -> float:
        """Position-addressed j-th draw (0-based); does not advance the pool."""
        return float(self._to_reward(arm, np.array([self._streams[(arm, pool)].at(j)]))[0])

    def used(self, arm: int, pool: str) -> int:
        return self._streams[(arm, pool)].pos

    def draw_for(self, arms: np.ndarray, pool: str) -> np.ndarray:
        """Rewards for a sequence of executed arms, consuming each arm's pool in order."""
        arms = np.asarray(arms, dtype=np.int64)
        out = np.empty(arms.size)
        for a in np.unique(arms):
            sel = arms == a
            out[sel] = self.draw(int(a), pool, int(sel.sum()))
        return out


def beta(t, k: int, delta: float):
    """Anytime confidence radius ``sqrt(2 ln(8 k t^2 / delta) / t)`` (natural log)."""
    t = np.asarray(t, dtype=np.float64)
    r = np.sqrt(2.0 * np.log(8.0 * k * t * t / delta) / t)
    return float(r) if r.ndim == 0 else r


def elimination_time(gap: float, k: int, delta: float) -> int:
    """Smallest counted sample size ``t`` with ``4 beta(t) < gap``."""
    if gap <= 0:
        raise ValueError("gap must be positive")

    def ok(t):
        return 4.0 * beta(t, k, delta) < gap

    hi = 1
    while not ok(hi):
        hi *= 2
    lo = hi // 2  # ok(lo) is False unless hi == 1
    if hi == 1:
        return 1
    while hi - lo > 1:
        mid = (lo + hi) // 2
        if ok(mid):
            hi = mid
        else:
            lo = mid
    return hi


@dataclass
class PhaseRecord:
    r: int
    active: tuple[int, ...]
    budget: int
    t_r: int
    means: dict[int, float]
    radius: float
    leader: int
    survivors: tuple[int, ...]


def elimination_step(active: Sequence[int], means, radius: float) -> tuple[int, tuple[int, ...]]:
    """Keep arms whose UCB reaches the best LCB; ties resolve to the lowest index."""
    leader = active[0]
    for a in active[1:]:
        if means[a] - radius > means[leader] - radius:
            leader = a
    lcb_best = means[leader] - radius
    return leader, tuple(a for a in active if means[a] + radius >= lcb_best)


class PhasedSE:
    """Phased successive elimination driven one phase at a time.

    Each phase requests every active arm ``2**(r-1)`` times, in ascending arm
    order, and is fed back the rewards of exactly those requests.
    """

    def __init__(self, k: int, delta: float, radius: Callable[[int], float] | None = None):
        self.k = k
        self.delta = delta
        self.radius = radius or (lambda t: beta(t, k, delta))
        self.active: tuple[int, ...] = tuple(range(k))
        self.r = 1
        self.sums = np.zeros(k)
        self.counts = np.zeros(k, dtype=np.int64)
        self.phases: list[PhaseRecord] = []

    @property
    def done(self) -> bool:
        return len(self.active) <= 1

    @property
    def budget(self) -> int:
        return 2 ** (self.r - 1)

    @property
    def chosen(self) -> int:
        return self.active[0] if self.done else -1

    def plan(self) -> np.ndarray:
        return np.repeat(np.array(self.active, dtype=np.int64), self.budget)

    def observe(self, rewards: np.ndarray):
        rewards = np.asarray(rewards, dtype=np.float64)
        m = self.budget
        if rewards.size != m * len(self.active):
            raise ValueError("reward batch does not match the phase plan")
        for i, a in enumerate(self.active):
            self.sums[a] += rewards[i * m : (i + 1) * m].sum()
            self.counts[a] += m
        t_r = 2**self.r - 1
        assert all(self.counts[a] == t_r for a in self.active)
        means = {a: self.sums[a] / t_r for a in self.active}
        rad = self.radius(t_r)
        leader, survivors = elimination_step(self.active, means, rad)
        self.phases.append(PhaseRecord(self.r, self.active, m, t_r, means, rad, leader, survivors))
        self.active = survivors
        self.r += 1


@dataclass
class SEResult:
    chosen: int
    tau: int
    requests: np.ndarray
    rewards: np.ndarray
    phases: list[PhaseRecord] = field(default_factory=list)

    @property
    def num_phases(self) -> int:
        return len(self.phases)


def clean_phased_se(
    instance: BanditInstance,
    delta: float,
    pools: RewardPools,
    max_rounds: int = DEFAULT_MAX_ROUNDS,
) -> SEResult:
    """Noiseless phased SE; every reward comes from the counted pools."""
    se = PhasedSE(instance.k, delta)
    reqs, rews = [], []
    tau = 0
    while not se.done:
        plan = se.plan()
        tau += plan.size
        if tau > max_rounds:
            raise RunawayRun(f"clean run exceeded {max_rounds} rounds")
        r = pools.draw_for(plan, COUNTED)
        se.observe(r)
        reqs.append(plan)
        rews.append(r)
    requests = np.concatenate(reqs) if reqs else np.empty(0, dtype=np.int64)
    rewards = np.concatenate(rews) if rews else np.empty(0)
    chosen = se.active[0]
    return SEResult(chosen, int(requests.size), requests, rewards, se.phases)


def envelope_violated(requests, rewards, mu: Sequence[float], delta: float) -> bool:
    """Whether any arm's running mean leaves ``mu_a +- beta(t)`` at some ``t`` it reached."""
    requests = np.asarray(requests)
    rewards = np.asarray(rewards)
    k = len(mu)
    for a in range(k):
        ra = rewards[requests == a]
        if ra.size == 0:
            continue
        t = np.arange(1, ra.size + 1)
        dev = np.abs(np.cumsum(ra) / t - mu[a])
        if np.any(dev > beta(t, k, delta)):
            return True
    return False
