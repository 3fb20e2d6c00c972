"""Discrete memoryless actuation channels over the arm alphabet {0..K-1}."""

from __future__ import annotations

from dataclasses import dataclass, field
from decimal import Decimal, InvalidOperation
from typing import Any, Mapping, Sequence

import numpy as np

from .errors import ChannelError, SingularChannel

ROW_SUM_TOL = 1e-12
DEFAULT_SINGULAR_THRESHOLD = 1e-9

SupportSet = tuple[frozenset[int], ...]


@dataclass(frozen=True, eq=False)
class TransitionMatrix:
    """Row-stochastic channel law, ``w[x, y] = Pr(Y = y | X = x)``.

    Impossible transitions must be stored as exact zeros: the support (and
    with it every zero-error statement) is read off with ``> 0``.
    """

    w: np.ndarray
    label: str = "explicit"
    params: Mapping[str, Any] = field(default_factory=dict)

    def __post_init__(self):
        w = np.array(self.w, dtype=np.float64, copy=True)
        if w.ndim != 2 or w.shape[0] != w.shape[1]:
            raise ChannelError(f"transition matrix must be square, got shape {w.shape}")
        if w.shape[0] < 2:
            raise ChannelError("need at least two symbols")
        if not np.all(np.isfinite(w)) or np.any(w < 0.0) or np.any(w > 1.0):
            raise ChannelError("entries must lie in [0, 1]")
        bad = np.abs(w.sum(axis=1) - 1.0) > ROW_SUM_TOL
        if bad.any():
            raise ChannelError(f"rows {np.flatnonzero(bad).tolist()} do not sum to 1")
        w.setflags(write=False)
        object.__setattr__(self, "w", w)
        object.__setattr__(self, "params", dict(self.params))
        object.__setattr__(self, "_cdf", np.cumsum(w, axis=1))
        last = np.array([np.flatnonzero(row > 0)[-1] for row in w])
        object.__setattr__(self, "_last_positive", last)

    @property
    def k(self) -> int:
        return self.w.shape[0]

    def support(self) -> SupportSet:
        return tuple(frozenset(np.flatnonzero(row > 0.0).tolist()) for row in self.w)

    def mix(self, mu: Sequence[float]) -> np.ndarray:
        """Command-conditioned means ``W @ mu`` seen by a learner without decoding."""
        return self.w @ np.asarray(mu, dtype=np.float64)

    def to_config(self) -> dict:
        if self.label == "typewriter":
            return {"type": "typewriter", **self.params}
        return {"type": "explicit", "rows": [[repr(float(v)) for v in row] for row in self.w]}

    def __repr__(self):
        if self.label == "typewriter":
            return f"TransitionMatrix(typewriter k={self.params['k']} eps={self.params['eps']})"
        return f"TransitionMatrix(explicit k={self.k})"


def make_typewriter(k: int, eps: float) -> TransitionMatrix:
    """One-sided typewriter: ``x -> x`` w.p. ``1-eps``, ``x -> x+1 mod k`` w.p. ``eps``."""
    k = int(k)
    eps = float(eps)
    if k < 2:
        raise ChannelError("typewriter needs k >= 2")
    if not 0.0 < eps < 1.0:
        raise ChannelError(f"eps must lie in (0, 1), got {eps}")
    w = np.zeros((k, k))
    for x in range(k):
        w[x, x] = 1.0 - eps
        w[x, (x + 1) % k] = eps
    return TransitionMatrix(w, label="typewriter", params={"k": k, "eps": eps})


def identity_channel(k: int) -> TransitionMatrix:
    return TransitionMatrix(np.eye(k), label="identity", params={"k": k})


def typewriter_support(k: int) -> SupportSet:
    return tuple(frozenset({x, (x + 1) % k}) for x in range(k))


def _parse_prob(v) -> Decimal:
    try:
        return Decimal(str(v).strip())
    except InvalidOperation as exc:
        raise ChannelError(f"cannot parse probability {v!r}") from exc


def channel_from_config(cfg: Mapping[str, Any]) -> TransitionMatrix:
    """Build a channel from ``{type: typewriter, k, eps}`` or ``{type: explicit, rows}``.

    Explicit rows are parsed as decimals so that row sums are checked exactly
    before conversion to floats.
    """
    kind = cfg.get("type")
    if kind == "typewriter":
        return make_typewriter(int(cfg["k"]), float(_parse_prob(cfg["eps"])))
    if kind == "identity":
        return identity_channel(int(cfg["k"]))
    if kind == "explicit":
        rows = [[_parse_prob(v) for v in row] for row in cfg["rows"]]
        for i, row in enumerate(rows):
            if abs(sum(row) - 1) > Decimal("1e-12"):
                raise ChannelError(f"row {i} sums to {sum(row)}, not 1")
        return TransitionMatrix(np.array([[float(v) for v in row] for row in rows]))
    raise ChannelError(f"unknown channel type {kind!r}")


def sample_output(w: TransitionMatrix, x: int, rng: np.random.Generator) -> int:
    """Draw one channel output for input ``x``; consumes exactly one uniform from ``rng``."""
    if not 0 <= x < w.k:
        raise ValueError(f"input symbol {x} outside 0..{w.k - 1}")
    u = rng.random()
    y = int(np.searchsorted(w._cdf[x], u, side="right"))
    return min(y, int(w._last_positive[x]))


def sample_outputs(w: TransitionMatrix, xs, rng: np.random.Generator) -> np.ndarray:
    """Vectorised :func:`sample_output`; draws ``len(xs)`` uniforms in order."""
    xs = np.asarray(xs, dtype=np.int64)
    if xs.size == 0:
        return np.empty(0, dtype=np.int64)
    u = rng.random(xs.size)
    cdf = w._cdf[xs]
    y = (cdf <= u[:, None]).sum(axis=1)
    return np.minimum(y, w._last_positive[xs])


def smallest_singular_value(w: TransitionMatrix) -> float:
    return float(np.linalg.svd(w.w, compute_uv=False)[-1])


def invert(w: TransitionMatrix, threshold: float = DEFAULT_SINGULAR_THRESHOLD) -> np.ndarray:
    smin = smallest_singular_value(w)
    if smin < threshold:
        raise SingularChannel(f"sigma_min = {smin:.3e} below threshold {threshold:.1e}")
    return np.linalg.inv(w.w)


def null_space(w: TransitionMatrix, tol: float = 1e-10) -> np.ndarray:
    """Orthonormal basis (columns) for the right null space of ``W``."""
    _, s, vt = np.linalg.svd(w.w)
    return vt[s <= tol].T.copy()
