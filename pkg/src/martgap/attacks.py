"""Attacks on protocol trees: one-time restarts, one-sided stopping, fail-stop aborts.

A two-party tree is a :class:`MartingaleTree` whose internal nodes carry a
``defense`` (probability the surviving party outputs 1 if the next speaker
aborts there) and optionally a ``turn`` label naming that next speaker.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field

import numpy as np

from .curves import DEFAULT_RESOLUTION, Curve, gap_curves
from .errors import TreeValidationError, UsageError
from .scores import directional_susceptibility
from .tree import (MartingaleTree, StoppingRule, Violation, require_valid, turn_at,
                   unique_nodes)

PARTIES = ("A+", "A-", "B+", "B-")
MARK_SLACK = 1e-9


# -- restart ------------------------------------------------------------------------

def restart_attack(tree: MartingaleTree, direction: str = "up") -> tuple[StoppingRule, float]:
    """Optimal one-time restart strategy and the shift it causes in ``direction``."""
    d = directional_susceptibility(tree)
    if direction == "up":
        return d.up_rule, d.up
    if direction == "down":
        return d.down_rule, d.down
    raise UsageError(f"direction must be 'up' or 'down', got {direction!r}")


# -- specialized (one-sided) stopping --------------------------------------------------

def _best_cut(n, below):
    """Best one-sided stop set at node ``n`` given child continuation values ``below``.

    Returns (score, stopped child indices). Left cuts stop every child at or
    below a threshold t <= x; right cuts mirror this. The empty cut is allowed.
    """
    x = n.value
    kids = [(c.value, j, p) for j, (p, c) in enumerate(n.children)]
    best_score, best_set = None, ()
    for side in ("left", "right"):
        if side == "left":
            cands = sorted((k for k in kids if k[0] <= x), key=lambda k: k[0])
        else:
            cands = sorted((k for k in kids if k[0] >= x), key=lambda k: -k[0])
        base = math.fsum(p * below[j] for _, j, p in kids)
        score, stopped = base, []
        side_best, side_set = base, ()
        i = 0
        while i < len(cands):
            # children with equal value fall on the same side of any cut
            v = cands[i][0]
            while i < len(cands) and cands[i][0] == v:
                _, j, p = cands[i]
                score += p * (abs(x - v) - below[j])
                stopped.append(j)
                i += 1
            if score > side_best:
                side_best, side_set = score, tuple(stopped)
        if best_score is None or side_best > best_score:
            best_score, best_set = side_best, side_set
    return best_score, best_set


def specialized_max_score(tree: MartingaleTree) -> tuple[float, StoppingRule]:
    """Best score over rules that, at every node, stop a one-sided set of children."""
    require_valid(tree)
    value: dict[int, float] = {}
    choice: dict[int, tuple[int, ...]] = {}
    for n in unique_nodes(tree):
        if n.is_leaf:
            value[id(n)] = 0.0
            continue
        below = [value[id(c)] for _, c in n.children]
        value[id(n)], choice[id(n)] = _best_cut(n, below)
    stops = []
    stack = [((), tree)]
    while stack:
        path, n = stack.pop()
        stopped = set(choice.get(id(n), ()))
        for j, (_, c) in enumerate(n.children):
            if j in stopped:
                stops.append(path + (j,))
            elif not c.is_leaf:
                stack.append((path + (j,), c))
    return value[id(tree)], StoppingRule.of(stops)


# -- fail-stop ---------------------------------------------------------------------------

def _groups(tree: MartingaleTree, rule: StoppingRule):
    """Per stopped parent: (parent path, path probability, parent turn, sum of p*(x_child - D))."""
    rule.check(tree)
    by_parent: dict[tuple, list[int]] = {}
    for s in rule.stops:
        by_parent.setdefault(s[:-1], []).append(s[-1])
    out = []
    for ppath in sorted(by_parent):
        prob, n = 1.0, tree
        for j in ppath:
            p, n = n.children[j]
            prob *= p
        if n.defense is None:
            raise TreeValidationError([Violation(ppath, "defense-missing", "stopped node's parent has no defense")])
        signed = math.fsum(n.children[j].p * (n.children[j].node.value - n.defense) for j in by_parent[ppath])
        out.append((ppath, prob, turn_at(tree, ppath), signed))
    return out


def score_sprime(tree: MartingaleTree, rule: StoppingRule) -> float:
    """Sum over parents of path probability times |sum over stopped children of p*(x_child - D_parent)|."""
    return math.fsum(prob * abs(signed) for _, prob, _, signed in _groups(tree, rule))


def sprime_split(tree: MartingaleTree, rule: StoppingRule) -> dict[str, float]:
    """Attribute each parent group of the S' score to (aborting party, direction).

    The aborting party is the next speaker at the parent; the direction is the
    sign of the outcome shift sum p*(D - x_child).
    """
    acc = {k: [] for k in PARTIES}
    for _, prob, turn, signed in _groups(tree, rule):
        acc[turn + ("+" if signed < 0 else "-")].append(prob * abs(signed))
    return {k: math.fsum(v) for k, v in acc.items()}


@dataclass(frozen=True)
class FailStopReport:
    rule: StoppingRule
    s_prime: float
    split: dict[str, float]
    bound: float

    def best_party(self) -> tuple[str, float]:
        return best_party_attack(self)


def best_party_attack(report: FailStopReport) -> tuple[str, float]:
    """Largest of the four attributed deviations; ties go to the earlier of A+, A-, B+, B-."""
    best = PARTIES[0]
    for k in PARTIES[1:]:
        if report.split[k] > report.split[best]:
            best = k
    return best, report.split[best]


def failstop_attack(tree: MartingaleTree, resolution: int = DEFAULT_RESOLUTION) -> FailStopReport:
    """Abort strategy from the inductive marking argument, with its S' score.

    At a node with value x and defense D whose children have height h, child j
    is marked when |x - x_j| >= C'_h(x_j). No marks: recurse everywhere. A
    marked child whose value is pulled toward by D (D within a third of the way
    from x to x_j, or beyond) lets the attacker abort every child. Otherwise
    the attacker aborts the marked children on one side and recurses on the
    rest; with marks on both sides the side with the larger guaranteed
    continuation is taken.
    """
    require_valid(tree, uniform_depth=True, two_party=True)
    height = tree.height
    if height == 0:
        raise UsageError("a leaf has no rounds to abort")
    curves: list[Curve] = gap_curves(height, resolution, "Cprime")
    cprime = lambda h, v: 0.0 if h == 0 else float(curves[h - 1](v))

    stops: list[tuple[int, ...]] = []
    stack = [((), tree)]
    while stack:
        path, n = stack.pop()
        x, D = n.value, n.defense
        h = n.height - 1
        kids = [(j, p, c) for j, (p, c) in enumerate(n.children)]
        if h == 0:
            target = 0.0 if D >= x else 1.0
            stops.extend(path + (j,) for j, _, c in kids if c.value == target)
            continue
        marked = {j for j, _, c in kids if abs(x - c.value) + MARK_SLACK >= cprime(h, c.value)}
        if not marked:
            stack.extend((path + (j,), c) for j, _, c in kids)
            continue
        pulled = any((c.value <= x and D <= (x + 2 * c.value) / 3) or
                     (c.value >= x and D >= (x + 2 * c.value) / 3)
                     for j, _, c in kids if j in marked)
        if pulled:
            stops.extend(path + (j,) for j, _, _ in kids)
            continue
        left = {j for j, _, c in kids if j in marked and c.value <= x}
        right = {j for j, _, c in kids if j in marked and c.value >= x}
        if left and right:
            def proxy(side):
                return math.fsum(p * (abs(x - c.value) if j in side else cprime(h, c.value)) for j, p, c in kids)
            side = left if proxy(left) >= proxy(right) else right
        else:
            side = marked
        for j, _, c in kids:
            if j in side:
                stops.append(path + (j,))
            else:
                stack.append((path + (j,), c))

    rule = StoppingRule.of(stops)
    bound = cprime(height, tree.value) / 3.0
    return FailStopReport(rule, score_sprime(tree, rule), sprime_split(tree, rule), bound)


# -- defenses ----------------------------------------------------------------------------

DEFENSE_POLICIES = ("value", "threshold", "random")


def assign_defenses(tree: MartingaleTree, policy: str = "value", seed: int = 42,
                    turns: bool = True) -> MartingaleTree:
    """Copy of ``tree`` (expanded, no sharing) with a defense on every internal node.

    ``value``: D = node value; ``threshold``: D = 1 if value >= 1/2 else 0;
    ``random``: D uniform on [0, 1] from a seeded generator. With ``turns``
    the next speaker alternates A, B, A, ... from the root.
    """
    if policy not in DEFENSE_POLICIES:
        raise UsageError(f"unknown defense policy {policy!r}; expected one of {DEFENSE_POLICIES}")
    rng = np.random.default_rng(seed)

    def copy(n, depth):
        if n.is_leaf:
            return MartingaleTree(n.value)
        if policy == "value":
            D = n.value
        elif policy == "threshold":
            D = 1.0 if n.value >= 0.5 else 0.0
        else:
            D = float(rng.random())
        turn = ("A" if depth % 2 == 0 else "B") if turns else None
        return MartingaleTree(n.value, tuple((p, copy(c, depth + 1)) for p, c in n.children), D, turn)

    return copy(tree, 0)


# -- Monte Carlo --------------------------------------------------------------------------

SIM_MODES = ("restart_up", "restart_down", "failstop")
SHARD = 1 << 17


@dataclass
class _Flat:
    value: np.ndarray
    defense: np.ndarray
    first: np.ndarray
    count: np.ndarray
    cum: np.ndarray
    stop: np.ndarray


def _flatten(tree: MartingaleTree, rule: StoppingRule) -> _Flat:
    """Breadth-first arrays of the expanded tree; children of a node are contiguous."""
    nodes, paths = [tree], [()]
    first, count = [], []
    i = 0
    while i < len(nodes):
        n = nodes[i]
        first.append(len(nodes))
        count.append(len(n.children))
        for j, (_, c) in enumerate(n.children):
            nodes.append(c)
            paths.append(paths[i] + (j,))
        i += 1
    width = max(1, max(count))
    cum = np.ones((len(nodes), width))
    for k, n in enumerate(nodes):
        if n.children:
            c = np.cumsum([p for p, _ in n.children])
            cum[k, :c.size] = c
            cum[k, c.size - 1:] = np.inf
    return _Flat(
        value=np.array([n.value for n in nodes]),
        defense=np.array([np.nan if n.defense is None else n.defense for n in nodes]),
        first=np.array(first), count=np.array(count), cum=cum,
        stop=np.array([p in rule.stops for p in paths]),
    )


def _sample_child(flat: _Flat, parent: np.ndarray, rng) -> np.ndarray:
    u = rng.random(parent.size)
    slot = (u[:, None] >= flat.cum[parent]).sum(axis=1)
    return flat.first[parent] + np.minimum(slot, flat.count[parent] - 1)


def _run_shard(flat: _Flat, mode: str, trials: int, rng) -> np.ndarray:
    at = np.zeros(trials, dtype=np.int64)
    outcome = np.full(trials, np.nan)
    used = np.zeros(trials, dtype=bool)
    live = np.arange(trials)
    while live.size:
        here = at[live]
        done = flat.count[here] == 0
        outcome[live[done]] = flat.value[here[done]]
        live, here = live[~done], here[~done]
        if not live.size:
            break
        nxt = _sample_child(flat, here, rng)
        hit = flat.stop[nxt] & ~used[live]
        if mode == "failstop":
            outcome[live[hit]] = flat.defense[here[hit]]
            at[live[~hit]] = nxt[~hit]
            live = live[~hit]
            continue
        if hit.any():
            nxt[hit] = _sample_child(flat, here[hit], rng)
            used[live[hit]] = True
        at[live] = nxt
    return outcome


def simulate_attack(tree: MartingaleTree, strategy: StoppingRule, mode: str,
                    trials: int, seed: int = 42) -> tuple[float, float]:
    """Monte Carlo estimate of Pr[outcome = 1] under an attack, with its standard error.

    Trials run in shards of 2**17 with generator seeds ``seed + shard index``
    (numpy PCG64). Restart modes resample the stopped message once from the
    same conditional distribution; fail-stop mode ends the run with the
    parent's defense value as the outcome.
    """
    if mode not in SIM_MODES:
        raise UsageError(f"unknown mode {mode!r}; expected one of {SIM_MODES}")
    if trials < 1:
        raise UsageError("trials must be >= 1")
    require_valid(tree, two_party=(mode == "failstop"))
    strategy.check(tree)
    flat = _flatten(tree, strategy)
    count, mean, m2 = 0, 0.0, 0.0
    for shard, start in enumerate(range(0, trials, SHARD)):
        size = min(SHARD, trials - start)
        x = _run_shard(flat, mode, size, np.random.default_rng(seed + shard))
        mu = float(x.mean())
        s2 = float(((x - mu) ** 2).sum())
        # pairwise merge of running mean and squared deviations
        delta = mu - mean
        total = count + size
        mean += delta * size / total
        m2 += s2 + delta * delta * count * size / total
        count = total
    var = m2 / (count - 1) if count > 1 else 0.0
    return mean, math.sqrt(var / count)


# -- reports -------------------------------------------------------------------------------

@dataclass
class AttackReport:
    mode: str
    deviation: float
    stops: StoppingRule
    bound: float | None = None
    s_prime: float | None = None
    split: dict[str, float] | None = None
    extra: dict = field(default_factory=dict)

    def to_dict(self) -> dict:
        d = {"mode": self.mode, "deviation": self.deviation, "s_prime": self.s_prime,
             "split": self.split, "bound": self.bound, "stops": self.stops.to_dict()["stops"]}
        d.update(self.extra)
        return d

    def to_json(self) -> str:
        return json.dumps(self.to_dict())

    @classmethod
    def from_dict(cls, d: dict) -> AttackReport:
        known = {"mode", "deviation", "s_prime", "split", "bound", "stops"}
        return cls(d["mode"], d["deviation"], StoppingRule.of(d["stops"]), d.get("bound"),
                   d.get("s_prime"), d.get("split"), {k: v for k, v in d.items() if k not in known})
