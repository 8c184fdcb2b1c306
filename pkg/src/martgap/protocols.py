"""Coin-tossing protocol trees: the gap-optimal construction and counting baselines."""

from __future__ import annotations

import json
import math
from dataclasses import asdict, dataclass

import numpy as np

from .curves import DEFAULT_RESOLUTION, gap_curves, solve_left, solve_right
from .errors import UsageError
from .scores import directional_susceptibility
from .tree import MartingaleTree, leaf

MAX_OPTIMAL_DEPTH = 24


def build_optimal(x0: float, n: int, resolution: int = DEFAULT_RESOLUTION,
                  max_depth: int = MAX_OPTIMAL_DEPTH) -> MartingaleTree:
    """Binary tree whose every stopping rule scores the optimal gap ``C_n(x0)``.

    A node with value ``v`` and ``d > 1`` rounds left splits into the two
    points where the 45-degree lines through ``(v, 0)`` meet ``C_{d-1}``; the
    last round reveals a bit with bias ``v``. Levels are solved as arrays.
    """
    if not 0.0 <= x0 <= 1.0:
        raise UsageError(f"x0 = {x0} outside [0, 1]")
    if n < 1:
        raise UsageError("n must be >= 1")
    if n > max_depth:
        raise UsageError(f"n = {n} exceeds the depth cap {max_depth}; raise max_depth to override")
    curves = gap_curves(n - 1, resolution) if n > 1 else []

    # levels[i] = (values, child_lo, child_hi, p_left) for nodes at depth i
    values = np.array([float(x0)])
    levels = []
    for depth in range(n):
        d = n - depth
        inner = (values > 0.0) & (values < 1.0)
        v = values[inner]
        if d == 1:
            xs, xl = np.zeros_like(v), np.ones_like(v)
        else:
            xs, xl = solve_left(curves[d - 2], v), solve_right(curves[d - 2], v)
        spread = xl - xs
        # rounding can collapse a split; such nodes are treated as constant
        ok = spread > 0
        idx = np.flatnonzero(inner)
        inner[idx[~ok]] = False
        xs, xl, v, spread = xs[ok], xl[ok], v[ok], spread[ok]
        p_left = (xl - v) / spread
        levels.append((values, inner, p_left))
        nxt = np.empty(2 * inner.sum() + (~inner).sum())
        pos = 0
        ki = 0
        for k in range(values.size):
            if inner[k]:
                nxt[pos], nxt[pos + 1] = xs[ki], xl[ki]
                pos += 2
                ki += 1
            else:
                nxt[pos] = values[k]
                pos += 1
        values = nxt

    below = [leaf(int(round(x))) if x in (0.0, 1.0) else None for x in values]
    for vals, inner, p_left in reversed(levels):
        built = []
        pos = 0
        ki = 0
        for k, x in enumerate(vals):
            if inner[k]:
                pl = float(p_left[ki])
                built.append(MartingaleTree(float(x), ((pl, below[pos]), (1.0 - pl, below[pos + 1]))))
                pos += 2
                ki += 1
            else:
                built.append(MartingaleTree(float(x), ((1.0, below[pos]),)))
                pos += 1
        below = built
    return below[0]


def _tail(m: int, need: int) -> float:
    """Pr[Bin(m, 1/2) >= need], exact integer sum then one rounding."""
    if need <= 0:
        return 1.0
    if need > m:
        return 0.0
    return sum(math.comb(m, j) for j in range(need, m + 1)) / 2 ** m


def build_threshold(n: int, k: int) -> MartingaleTree:
    """Doob tree of "at least ``k`` of ``n`` fair bits are 1"; child 0 is bit 0.

    Nodes with equal (depth, ones so far) are shared.
    """
    if n < 1:
        raise UsageError("n must be >= 1")
    if not 0 <= k <= n + 1:
        raise UsageError(f"threshold k = {k} outside [0, {n + 1}]")
    level = [leaf(1 if h >= k else 0) for h in range(n + 1)]
    for depth in range(n - 1, -1, -1):
        level = [MartingaleTree(_tail(n - depth, k - h), ((0.5, level[h]), (0.5, level[h + 1])))
                 for h in range(depth + 1)]
    return level[0]


def build_majority(n: int) -> MartingaleTree:
    if n < 1 or n % 2 == 0:
        raise UsageError(f"majority needs an odd number of bits, got {n}")
    return build_threshold(n, (n + 1) // 2)


def insecurity(tree: MartingaleTree) -> float:
    """Largest shift of Pr[outcome = 1] from restarting one message once."""
    return directional_susceptibility(tree).insecurity


def processors_needed(x0: float, eps: float, model: str = "optimal_upper") -> int:
    """Smallest round count whose insecurity bound is at most ``eps``.

    ``optimal_upper`` uses sqrt(x0(1-x0)) / (2 sqrt(n)); ``majority_asymptotic``
    uses 1 / sqrt(2 pi n) and is defined only for x0 = 1/2.
    """
    if not 0.0 < eps < 1.0:
        raise UsageError("eps must lie in (0, 1)")
    if not 0.0 < x0 < 1.0:
        raise UsageError("x0 must lie in (0, 1)")
    if model == "optimal_upper":
        bound = lambda n: math.sqrt(x0 * (1 - x0)) / (2 * math.sqrt(n))
        guess = x0 * (1 - x0) / (4 * eps * eps)
    elif model == "majority_asymptotic":
        if x0 != 0.5:
            raise UsageError("the majority model is defined only for x0 = 0.5")
        bound = lambda n: 1 / math.sqrt(2 * math.pi * n)
        guess = 1 / (2 * math.pi * eps * eps)
    else:
        raise UsageError(f"unknown model {model!r}")
    n = max(1, math.floor(guess) - 1)
    slack = eps * 1e-12
    while n > 1 and bound(n - 1) <= eps + slack:
        n -= 1
    while bound(n) > eps + slack:
        n += 1
    return n


@dataclass
class ProtocolSpec:
    kind: str
    n: int
    x0: float = 0.5
    k: int | None = None
    resolution: int = DEFAULT_RESOLUTION

    def __post_init__(self):
        if self.kind not in ("optimal", "majority", "threshold"):
            raise UsageError(f"unknown protocol kind {self.kind!r}")
        if self.n < 1:
            raise UsageError("n must be >= 1")
        if self.kind == "majority":
            if self.n % 2 == 0:
                raise UsageError("majority needs odd n")
            if self.x0 != 0.5:
                raise UsageError("majority has bias 0.5; x0 must be 0.5")
        if self.kind == "threshold":
            if self.k is None or not 0 <= self.k <= self.n + 1:
                raise UsageError(f"threshold needs 0 <= k <= {self.n + 1}")
        if self.kind == "optimal" and not 0.0 <= self.x0 <= 1.0:
            raise UsageError("x0 must lie in [0, 1]")

    def build(self, max_depth: int = MAX_OPTIMAL_DEPTH) -> MartingaleTree:
        if self.kind == "optimal":
            return build_optimal(self.x0, self.n, self.resolution, max_depth)
        if self.kind == "majority":
            return build_majority(self.n)
        return build_threshold(self.n, self.k)

    @classmethod
    def from_json(cls, text: str) -> ProtocolSpec:
        data = json.loads(text)
        if not isinstance(data, dict):
            raise UsageError("protocol config must be a JSON object")
        extra = set(data) - {"kind", "x0", "n", "k", "resolution"}
        if extra:
            raise UsageError(f"unknown protocol config keys {sorted(extra)}")
        return cls(**data)

    def to_json(self) -> str:
        return json.dumps({k: v for k, v in asdict(self).items() if v is not None})


__all__ = ["build_optimal", "build_majority", "build_threshold", "insecurity",
           "processors_needed", "ProtocolSpec", "MAX_OPTIMAL_DEPTH"]
