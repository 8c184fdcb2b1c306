"""Finite martingale trees, stopping rules, validation and JSON I/O.

A :class:`MartingaleTree` node carries the conditional expectation ``value``
and an ordered tuple of ``(p, child)`` edges. Nodes are immutable, so a
constructor may share identical subtrees; every consumer treats the structure
as the fully expanded tree addressed by child-index paths.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from enum import Enum
from functools import cached_property
from pathlib import Path
from typing import Callable, Iterable, Iterator, NamedTuple, Sequence

import numpy as np

from .errors import RuleError, TreeValidationError

TOL = 1e-9

Path_ = tuple[int, ...]


class Edge(NamedTuple):
    p: float
    node: "MartingaleTree"


@dataclass(frozen=True, eq=False)
class MartingaleTree:
    value: float
    children: tuple[Edge, ...] = ()
    defense: float | None = None
    turn: str | None = None

    def __post_init__(self):
        object.__setattr__(self, "value", float(self.value))
        object.__setattr__(self, "children",
                           tuple(Edge(float(p), c) for p, c in self.children))
        if self.defense is not None:
            object.__setattr__(self, "defense", float(self.defense))

    @property
    def is_leaf(self) -> bool:
        return not self.children

    @cached_property
    def height(self) -> int:
        """Length of the longest root-to-leaf path."""
        return 1 + max(c.height for _, c in self.children) if self.children else 0

    @cached_property
    def min_height(self) -> int:
        return 1 + min(c.min_height for _, c in self.children) if self.children else 0

    @property
    def uniform(self) -> bool:
        return self.height == self.min_height

    def child(self, path: Sequence[int]) -> MartingaleTree:
        node = self
        for j in path:
            node = node.children[j].node
        return node

    def walk(self) -> Iterator[tuple[Path_, float, MartingaleTree]]:
        """Depth-first ``(path, path probability, node)`` over the expanded tree."""
        stack = [((), 1.0, self)]
        while stack:
            path, prob, node = stack.pop()
            yield path, prob, node
            for j in range(len(node.children) - 1, -1, -1):
                p, c = node.children[j]
                stack.append((path + (j,), prob * p, c))

    def replace(self, **changes) -> MartingaleTree:
        fields = dict(value=self.value, children=self.children,
                      defense=self.defense, turn=self.turn)
        fields.update(changes)
        return MartingaleTree(**fields)


def leaf(bit: int) -> MartingaleTree:
    return MartingaleTree(float(bit))


def node(children: Iterable[tuple[float, MartingaleTree]], value: float | None = None,
         defense: float | None = None, turn: str | None = None) -> MartingaleTree:
    """Internal node; ``value`` defaults to the probability-weighted child mean.

    The computed mean is clamped to [0, 1] against rounding.
    """
    children = tuple(children)
    if value is None:
        value = min(1.0, max(0.0, math.fsum(p * c.value for p, c in children)))
    return MartingaleTree(value, children, defense, turn)


def unique_nodes(root: MartingaleTree) -> list[MartingaleTree]:
    """Distinct node objects in post-order (children before parents)."""
    seen: set[int] = set()
    order: list[MartingaleTree] = []
    stack = [(root, False)]
    while stack:
        n, expanded = stack.pop()
        if expanded:
            order.append(n)
            continue
        if id(n) in seen:
            continue
        seen.add(id(n))
        stack.append((n, True))
        for _, c in n.children:
            if id(c) not in seen:
                stack.append((c, False))
    return order


# -- validation -------------------------------------------------------------------

@dataclass(frozen=True)
class Violation:
    path: Path_
    predicate: str
    detail: str = ""

    def __str__(self):
        where = "root" if not self.path else "/".join(map(str, self.path))
        return f"[{where}] {self.predicate}: {self.detail}"


def validate(tree: MartingaleTree, uniform_depth: bool = False,
             two_party: bool = False) -> list[Violation]:
    """Return every violated tree invariant; an empty list means valid.

    Each distinct node object is checked once and reported at the first path
    that reaches it.
    """
    out: list[Violation] = []
    seen: set[int] = set()
    turns_given = tree.turn is not None
    stack: list[tuple[Path_, MartingaleTree, str | None]] = [((), tree, None)]
    while stack:
        path, n, parent_turn = stack.pop()
        key = id(n)
        if key in seen:
            continue
        seen.add(key)
        x = n.value
        if not (math.isfinite(x) and 0.0 <= x <= 1.0):
            out.append(Violation(path, "value-range", f"value {x!r} outside [0, 1]"))
        if n.is_leaf:
            if x not in (0.0, 1.0):
                out.append(Violation(path, "leaf-binary", f"leaf value {x!r} is not 0 or 1"))
            continue
        probs = [p for p, _ in n.children]
        bad = [p for p in probs if not (math.isfinite(p) and 0.0 <= p <= 1.0)]
        if bad:
            out.append(Violation(path, "probability-range", f"edge probabilities {bad} outside [0, 1]"))
        total = math.fsum(probs)
        if abs(total - 1.0) > TOL:
            out.append(Violation(path, "probability-sum", f"edge probabilities sum to {total!r}"))
        mean = math.fsum(p * c.value for p, c in n.children)
        if abs(mean - x) > TOL:
            out.append(Violation(path, "martingale-mean",
                                 f"children average {mean!r} but node value is {x!r}"))
        if two_party:
            if n.defense is None:
                out.append(Violation(path, "defense-missing", "internal node has no defense"))
            elif not (math.isfinite(n.defense) and 0.0 <= n.defense <= 1.0):
                out.append(Violation(path, "defense-range", f"defense {n.defense!r} outside [0, 1]"))
            if turns_given:
                if n.turn not in ("A", "B"):
                    out.append(Violation(path, "turn-missing", f"turn {n.turn!r} is not 'A' or 'B'"))
                elif parent_turn is not None and n.turn == parent_turn:
                    out.append(Violation(path, "turn-alternation", f"turn {n.turn} repeats its parent's"))
            elif n.turn is not None:
                out.append(Violation(path, "turn-missing", "root has no turn but a descendant does"))
        for j in range(len(n.children) - 1, -1, -1):
            stack.append((path + (j,), n.children[j].node, n.turn))
    if uniform_depth and not tree.uniform:
        out.append(Violation((), "uniform-depth",
                             f"leaf depths range from {tree.min_height} to {tree.height}"))
    return out


def require_valid(tree: MartingaleTree, uniform_depth: bool = False,
                  two_party: bool = False) -> None:
    violations = validate(tree, uniform_depth=uniform_depth, two_party=two_party)
    if violations:
        raise TreeValidationError(violations)


def turn_at(tree: MartingaleTree, path: Path_) -> str:
    """Party sending the message after ``path``; inferred as A/B by depth parity if unlabeled."""
    if tree.turn is None:
        return "A" if len(path) % 2 == 0 else "B"
    t = tree.child(path).turn
    if t is None:
        raise RuleError(f"node {path} has no turn label")
    return t


# -- stopping rules ---------------------------------------------------------------

class Decision(Enum):
    STOP = "stop"
    CONTINUE = "continue"
    ABSTAIN = "abstain"


@dataclass(frozen=True)
class StoppingRule:
    """A set of stop nodes addressed by child-index paths from the root.

    Nodes on the way to a stop CONTINUE; every other path ABSTAINs (never stops).
    """

    stops: frozenset[Path_] = field(default_factory=frozenset)

    def __post_init__(self):
        object.__setattr__(self, "stops", frozenset(tuple(int(i) for i in s) for s in self.stops))

    @classmethod
    def of(cls, paths: Iterable[Sequence[int]]) -> StoppingRule:
        return cls(frozenset(tuple(p) for p in paths))

    @cached_property
    def _prefixes(self) -> frozenset[Path_]:
        return frozenset(s[:k] for s in self.stops for k in range(len(s)))

    def decision(self, path: Sequence[int]) -> Decision:
        path = tuple(path)
        if path in self.stops:
            return Decision.STOP
        if path in self._prefixes:
            return Decision.CONTINUE
        return Decision.ABSTAIN

    @property
    def is_antichain(self) -> bool:
        return not (self.stops & self._prefixes)

    def check(self, tree: MartingaleTree) -> None:
        """Raise :class:`RuleError` unless the rule is an antichain of non-root nodes of ``tree``."""
        for s in self.stops:
            if not s:
                raise RuleError("stopping at the root is not allowed")
            n = tree
            for depth, j in enumerate(s):
                if not 0 <= j < len(n.children):
                    raise RuleError(f"path {list(s)} leaves the tree at depth {depth}")
                n = n.children[j].node
        if not self.is_antichain:
            clash = sorted(self.stops & self._prefixes)[0]
            raise RuleError(f"stop {list(clash)} is an ancestor of another stop")

    def is_maximal(self, tree: MartingaleTree) -> bool:
        """True iff every root-to-leaf path meets exactly one stop."""
        self.check(tree)

        def covered(n, path):
            if path in self.stops:
                return True
            if n.is_leaf:
                return False
            return all(covered(c, path + (j,)) for j, (_, c) in enumerate(n.children))

        return bool(tree.children) and covered(tree, ())

    def to_dict(self) -> dict:
        return {"stops": [list(s) for s in sorted(self.stops)]}

    def to_json(self, dest=None) -> str | None:
        return _emit(json.dumps(self.to_dict()), dest)

    @classmethod
    def from_dict(cls, data: dict) -> StoppingRule:
        if not isinstance(data, dict) or not isinstance(data.get("stops"), list):
            raise RuleError("stopping rule JSON must be an object with a 'stops' list")
        paths = []
        for s in data["stops"]:
            if not isinstance(s, list) or not all(isinstance(i, int) and not isinstance(i, bool) for i in s):
                raise RuleError(f"stop path {s!r} is not a list of child indices")
            paths.append(tuple(s))
        return cls(frozenset(paths))

    @classmethod
    def from_json(cls, text: str) -> StoppingRule:
        return cls.from_dict(json.loads(text))


# -- JSON --------------------------------------------------------------------------

def to_dict(tree: MartingaleTree) -> dict:
    d: dict = {"value": tree.value,
               "children": [{"p": p, "node": to_dict(c)} for p, c in tree.children]}
    if tree.defense is not None:
        d["defense"] = tree.defense
    if tree.turn is not None:
        d["turn"] = tree.turn
    return d


def _number(obj, key, where):
    v = obj.get(key)
    if isinstance(v, bool) or not isinstance(v, (int, float)):
        raise TreeValidationError([Violation(where, "schema", f"'{key}' must be a number, got {v!r}")])
    return float(v)


def from_dict(data, _path: Path_ = ()) -> MartingaleTree:
    if not isinstance(data, dict):
        raise TreeValidationError([Violation(_path, "schema", "tree node must be a JSON object")])
    value = _number(data, "value", _path)
    raw = data.get("children", [])
    if not isinstance(raw, list):
        raise TreeValidationError([Violation(_path, "schema", "'children' must be a list")])
    children = []
    for j, e in enumerate(raw):
        if not isinstance(e, dict) or "node" not in e:
            raise TreeValidationError([Violation(_path + (j,), "schema", "edge needs 'p' and 'node'")])
        children.append(Edge(_number(e, "p", _path + (j,)), from_dict(e["node"], _path + (j,))))
    defense = _number(data, "defense", _path) if data.get("defense") is not None else None
    turn = data.get("turn")
    if turn is not None and turn not in ("A", "B"):
        raise TreeValidationError([Violation(_path, "schema", f"turn must be 'A' or 'B', got {turn!r}")])
    return MartingaleTree(value, tuple(children), defense, turn)


def dumps(tree: MartingaleTree) -> str:
    return json.dumps(to_dict(tree))


def loads(text: str) -> MartingaleTree:
    return from_dict(json.loads(text))


def save(tree: MartingaleTree, dest) -> None:
    _emit(dumps(tree), dest)


def load(src) -> MartingaleTree:
    if isinstance(src, (str, Path)):
        return loads(Path(src).read_text())
    return loads(src.read())


def _emit(text: str, dest):
    if dest is None:
        return text
    if isinstance(dest, (str, Path)):
        Path(dest).write_text(text)
    else:
        dest.write(text)
    return None


# -- Doob martingales ---------------------------------------------------------------

def doob_from_outcome(spaces: Sequence[Sequence], dist: Callable[[tuple, object], float] | None,
                      outcome: Callable[[tuple], int], event: Iterable[int] = (1,)) -> MartingaleTree:
    """Doob martingale of the event ``outcome(e_1..e_n) in event``.

    ``dist(prefix, e)`` returns ``Pr[E_i = e | prefix]``; ``None`` means uniform
    over each alphabet. Node values are the conditional probabilities of the
    event given the transcript prefix.
    """
    event = frozenset(event)
    n = len(spaces)

    def build(prefix: tuple, idx: Path_) -> MartingaleTree:
        i = len(prefix)
        if i == n:
            return leaf(1 if outcome(prefix) in event else 0)
        alphabet = list(spaces[i])
        if not alphabet:
            raise ValueError(f"alphabet {i} is empty")
        if dist is None:
            probs = [1.0 / len(alphabet)] * len(alphabet)
        else:
            probs = [float(dist(prefix, e)) for e in alphabet]
        total = math.fsum(probs)
        if abs(total - 1.0) > TOL or any(p < 0 for p in probs):
            raise TreeValidationError([Violation(idx, "probability-sum",
                                                 f"distribution after prefix {prefix!r} sums to {total!r}")])
        kids = [(p, build(prefix + (e,), idx + (j,))) for j, (p, e) in enumerate(zip(probs, alphabet))]
        return node(kids)

    return build((), ())


# -- random trees -------------------------------------------------------------------

def random_tree(rng, depth: int, max_branching: int = 3, uniform: bool = True,
                leaf_prob: float = 0.0) -> MartingaleTree:
    """Random valid tree: random 0/1 leaves, Dirichlet edge probabilities.

    With ``uniform`` every leaf sits at ``depth``; otherwise each internal
    position below the root becomes a leaf early with probability ``leaf_prob``.
    Internal values are the probability-weighted child means, so the result
    always validates.
    """
    def grow(d: int, top: bool) -> MartingaleTree:
        if d == 0 or (not uniform and not top and rng.random() < leaf_prob):
            return leaf(int(rng.integers(2)))
        b = int(rng.integers(1, max_branching + 1)) if max_branching > 1 else 1
        probs = rng.dirichlet(np.ones(b))
        probs[-1] = max(0.0, 1.0 - math.fsum(probs[:-1]))
        return node((float(p), grow(d - 1, False)) for p in probs)

    return grow(depth, True)
