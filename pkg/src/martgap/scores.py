"""Stopping-time dynamic programs over martingale trees.

All folds memoize on node identity, so trees that share subtrees (majority,
threshold) cost time linear in the number of distinct nodes.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from functools import cached_property

import numpy as np

from .errors import RuleError
from .tree import MartingaleTree, StoppingRule, require_valid, unique_nodes

NORMS = ("L1", "L2")


def gap(child: float, parent: float, norm: str = "L1") -> float:
    d = child - parent
    if norm == "L1":
        return abs(d)
    if norm == "L2":
        return d * d
    raise ValueError(f"unknown norm {norm!r}; expected L1 or L2")


@dataclass(frozen=True)
class ScoreReport:
    score: float
    norm: str
    rule: StoppingRule

    def to_dict(self):
        return {"score": self.score, "norm": self.norm, **self.rule.to_dict()}


def _fold(tree, combine):
    """Bottom-up fold: ``combine(node, child_values)`` per distinct node, leaves included."""
    memo: dict[int, float] = {}
    for n in unique_nodes(tree):
        memo[id(n)] = combine(n, [memo[id(c)] for _, c in n.children])
    return memo


def _extract(tree, choose):
    """Collect stop paths top-down; ``choose(parent, j, child)`` returns 'stop', 'go' or None."""
    stops = []
    stack = [((), tree)]
    while stack:
        path, n = stack.pop()
        for j, (_, c) in enumerate(n.children):
            action = choose(n, j, c)
            if action == "stop":
                stops.append(path + (j,))
            elif action == "go":
                stack.append((path + (j,), c))
    return StoppingRule.of(stops)


def max_score(tree: MartingaleTree, norm: str = "L1") -> ScoreReport:
    """Best expected gap over all stopping rules, with one optimal rule.

    Ties prefer stopping at the child.
    """
    require_valid(tree)
    gap(0.0, 0.0, norm)
    memo = _fold(tree, lambda n, vals: math.fsum(
        p * max(gap(c.value, n.value, norm), v) for (p, c), v in zip(n.children, vals)))

    def choose(n, j, c):
        return "stop" if gap(c.value, n.value, norm) >= memo[id(c)] else "go"

    return ScoreReport(memo[id(tree)], norm, _extract(tree, choose))


def min_score(tree: MartingaleTree, norm: str = "L1") -> ScoreReport:
    """Least expected gap over maximal stopping rules; ties prefer continuing."""
    require_valid(tree)
    gap(0.0, 0.0, norm)

    def combine(n, vals):
        return math.fsum(p * (gap(c.value, n.value, norm) if c.is_leaf else min(gap(c.value, n.value, norm), v))
                         for (p, c), v in zip(n.children, vals))

    memo = _fold(tree, combine)

    def choose(n, j, c):
        if c.is_leaf or gap(c.value, n.value, norm) < memo[id(c)]:
            return "stop"
        return "go"

    return ScoreReport(memo[id(tree)], norm, _extract(tree, choose))


def score_of_rule(tree: MartingaleTree, rule: StoppingRule, norm: str = "L1") -> float:
    """Expected gap at the stop nodes of ``rule``; unstopped paths contribute nothing."""
    rule.check(tree)
    terms = []
    for s in rule.stops:
        prob, n = 1.0, tree
        for j in s[:-1]:
            p, n = n.children[j]
            prob *= p
        p, c = n.children[s[-1]]
        terms.append(prob * p * gap(c.value, n.value, norm))
    return math.fsum(terms)


class Directional:
    """Best one-restart shift of the outcome probability in each direction.

    The optimal rules are extracted on first access; on shared-subtree trees
    they can be exponentially larger than the DP itself.
    """

    def __init__(self, tree: MartingaleTree):
        self._tree = tree
        self._up = _directional_values(tree, 1.0)
        self._down = _directional_values(tree, -1.0)
        self.up = self._up[id(tree)]
        self.down = self._down[id(tree)]

    def __repr__(self):
        return f"Directional(up={self.up!r}, down={self.down!r})"

    @property
    def insecurity(self) -> float:
        return max(self.up, self.down)

    @cached_property
    def up_rule(self) -> StoppingRule:
        return _directional_rule(self._tree, 1.0, self._up)

    @cached_property
    def down_rule(self) -> StoppingRule:
        return _directional_rule(self._tree, -1.0, self._down)


def _directional_values(tree, sign):
    # restarting child c of n earns sign*(n - c): the fresh sample returns to n's mean
    return _fold(tree, lambda n, vals: math.fsum(
        p * max(sign * (n.value - c.value), v, 0.0) for (p, c), v in zip(n.children, vals)))


def _directional_rule(tree, sign, memo):
    def choose(n, j, c):
        g = sign * (n.value - c.value)
        v = memo[id(c)]
        if g > 0 and g >= v:
            return "stop"
        return "go" if v > 0 else None

    return _extract(tree, choose)


def directional_susceptibility(tree: MartingaleTree) -> Directional:
    require_valid(tree)
    return Directional(tree)


def sum_squared_increments(tree: MartingaleTree) -> float:
    """Expected sum of squared steps; equals root*(1-root) for binary leaves."""
    require_valid(tree)
    memo = _fold(tree, lambda n, vals: math.fsum(
        p * ((c.value - n.value) ** 2 + v) for (p, c), v in zip(n.children, vals)))
    return memo[id(tree)]


def sample_maximal_rules(tree: MartingaleTree, count: int, seed: int = 42) -> list[StoppingRule]:
    """Random maximal rules: a fair coin per reached internal child decides stop or continue."""
    if count < 1:
        raise ValueError("count must be at least 1")
    if tree.is_leaf:
        raise RuleError("a leaf has no non-root nodes to stop at")
    rng = np.random.default_rng(seed)
    rules = []
    for _ in range(count):
        rules.append(_extract(tree, lambda n, j, c: "stop" if c.is_leaf or rng.random() < 0.5 else "go"))
    return rules
