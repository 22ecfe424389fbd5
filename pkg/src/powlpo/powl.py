"""POWL model types, label sets, structural equivalence and the JSON model format."""
from __future__ import annotations

import itertools
import json
from dataclasses import dataclass, field
from typing import Any, Iterable, Union

from .errors import ModelFormatError


def _cache(obj: Any, name: str, value: Any) -> Any:
    object.__setattr__(obj, name, value)
    return value


@dataclass(frozen=True)
class Transition:
    """The ``index``-th instance of activity ``label``."""

    label: str
    index: int = 1

    def __post_init__(self):
        if not self.label:
            raise ValueError("transition label must be non-empty")
        if self.index < 1:
            raise ValueError("transition index must be >= 1")

    def __str__(self) -> str:
        return self.label if self.index == 1 else f"{self.label}#{self.index}"


@dataclass(frozen=True)
class Silent:
    index: int = 1

    def __str__(self) -> str:
        return "tau"


@dataclass(frozen=True)
class Xor:
    children: tuple

    def __post_init__(self):
        object.__setattr__(self, "children", tuple(self.children))
        if len(self.children) < 2:
            raise ValueError("xor needs at least two children")

    def __str__(self) -> str:
        return "X(" + ", ".join(map(str, self.children)) + ")"


@dataclass(frozen=True)
class Loop:
    do: "PowlModel"
    redo: "PowlModel"

    def __str__(self) -> str:
        return f"*({self.do}, {self.redo})"


@dataclass(frozen=True)
class Order:
    """Partial order over ``children``; ``edges`` holds index pairs ``(i, j)`` meaning i before j."""

    children: tuple
    edges: frozenset = field(default_factory=frozenset)

    def __post_init__(self):
        object.__setattr__(self, "children", tuple(self.children))
        object.__setattr__(self, "edges", frozenset((int(i), int(j)) for i, j in self.edges))
        n = len(self.children)
        if n < 2:
            raise ValueError("order needs at least two children")
        for i, j in self.edges:
            if not (0 <= i < n and 0 <= j < n):
                raise ValueError(f"order edge {(i, j)} out of range")
            if i == j:
                raise ValueError("order edges must be irreflexive")
            if (j, i) in self.edges:
                raise ValueError("order edges must be asymmetric")
        for i, j in self.edges:
            for k, l in self.edges:
                if j == k and (i, l) not in self.edges:
                    raise ValueError("order edges must be transitive")

    def predecessors(self, j: int) -> list[int]:
        return sorted(i for i, k in self.edges if k == j)

    def __str__(self) -> str:
        edges = ", ".join(f"{i}->{j}" for i, j in sorted(self.edges))
        return "PO(" + ", ".join(map(str, self.children)) + " | " + edges + ")"


PowlModel = Union[Transition, Silent, Xor, Loop, Order]
LEAVES = (Transition, Silent)


def labels(m: PowlModel) -> frozenset:
    """All activity labels in the model; silent steps contribute nothing."""
    cached = getattr(m, "_labels", None)
    if cached is not None:
        return cached
    if isinstance(m, Transition):
        out = frozenset((m.label,))
    elif isinstance(m, Silent):
        out = frozenset()
    elif isinstance(m, Loop):
        out = labels(m.do) | labels(m.redo)
    else:
        out = frozenset().union(*(labels(c) for c in m.children))
    return _cache(m, "_labels", out)


def children_of(m: PowlModel) -> tuple:
    if isinstance(m, Loop):
        return (m.do, m.redo)
    if isinstance(m, (Xor, Order)):
        return m.children
    return ()


def size(m: PowlModel) -> dict:
    """Counts of leaves, operator nodes and order edges."""
    out = {"leaves": 0, "operators": 0, "order_edges": 0}
    stack = [m]
    while stack:
        node = stack.pop()
        if isinstance(node, LEAVES):
            out["leaves"] += 1
            continue
        out["operators"] += 1
        if isinstance(node, Order):
            out["order_edges"] += len(node.edges)
        stack.extend(children_of(node))
    return out


# -- equivalence ------------------------------------------------------------


def equivalent(m1: PowlModel, m2: PowlModel) -> bool:
    """Structural equivalence: leaves compare by label, operators up to child bijection.

    Deliberately independent of :func:`canonical_key` so the two can check each other.
    """
    if isinstance(m1, Transition) and isinstance(m2, Transition):
        return m1.label == m2.label
    if isinstance(m1, Silent) and isinstance(m2, Silent):
        return True
    if type(m1) is not type(m2):
        return False
    if isinstance(m1, Loop):
        return equivalent(m1.do, m2.do) and equivalent(m1.redo, m2.redo)
    if len(m1.children) != len(m2.children):
        return False
    n = len(m1.children)
    eq = [[equivalent(a, b) for b in m2.children] for a in m1.children]
    if isinstance(m1, Xor):
        return _find_bijection(n, eq, lambda assignment: True)
    edges1, edges2 = m1.edges, m2.edges

    def consistent(assignment: list[int]) -> bool:
        i = len(assignment) - 1
        for k in range(i + 1):
            a, b = assignment[k], assignment[i]
            if ((k, i) in edges1) != ((a, b) in edges2):
                return False
            if ((i, k) in edges1) != ((b, a) in edges2):
                return False
        return True

    return _find_bijection(n, eq, consistent)


def _find_bijection(n: int, eq: list[list[bool]], consistent) -> bool:
    assignment: list[int] = []
    used = [False] * n

    def extend(i: int) -> bool:
        if i == n:
            return True
        for j in range(n):
            if used[j] or not eq[i][j]:
                continue
            assignment.append(j)
            used[j] = True
            if consistent(assignment) and extend(i + 1):
                return True
            assignment.pop()
            used[j] = False
        return False

    return extend(0)


# -- canonical key ----------------------------------------------------------


def canonical_key(m: PowlModel) -> str:
    """Serialization that is identical exactly for equivalent models.

    Keys also define the total order used for every tie-break in discovery.
    """
    cached = getattr(m, "_key", None)
    if cached is not None:
        return cached
    if isinstance(m, Transition):
        key = "t:" + json.dumps(m.label)
    elif isinstance(m, Silent):
        key = "tau"
    elif isinstance(m, Xor):
        key = "xor(" + ",".join(sorted(canonical_key(c) for c in m.children)) + ")"
    elif isinstance(m, Loop):
        key = f"loop({canonical_key(m.do)},{canonical_key(m.redo)})"
    else:
        perm, edges = _canonical_order(m)
        keys = [canonical_key(m.children[i]) for i in perm]
        key = "po(" + ",".join(keys) + "|" + ";".join(f"{i}>{j}" for i, j in edges) + ")"
    return _cache(m, "_key", key)


def _canonical_order(m: Order) -> tuple[list[int], list[tuple[int, int]]]:
    """Child permutation (old indexes in new order) and the edge list it induces.

    Children are sorted by key; children with equal keys are disambiguated by
    colour refinement over the order, and any remaining ties by trying every
    permutation and keeping the smallest edge list.
    """
    cached = getattr(m, "_canon", None)
    if cached is not None:
        return cached
    n = len(m.children)
    keys = [canonical_key(c) for c in m.children]
    preds = [[] for _ in range(n)]
    succs = [[] for _ in range(n)]
    for i, j in m.edges:
        succs[i].append(j)
        preds[j].append(i)

    ranks = _rank(keys)
    while True:
        sigs = [
            (ranks[i], tuple(sorted(ranks[p] for p in preds[i])), tuple(sorted(ranks[s] for s in succs[i])))
            for i in range(n)
        ]
        new = _rank(sigs)
        if len(set(new)) == len(set(ranks)):
            break
        ranks = new

    groups: dict[int, list[int]] = {}
    for i in range(n):
        groups.setdefault(ranks[i], []).append(i)
    ordered_groups = [groups[r] for r in sorted(groups)]

    best = None
    for combo in itertools.product(*(itertools.permutations(g) for g in ordered_groups)):
        perm = [i for part in combo for i in part]
        pos = {old: new for new, old in enumerate(perm)}
        edges = sorted((pos[i], pos[j]) for i, j in m.edges)
        if best is None or edges < best[1]:
            best = (perm, edges)
        if not m.edges:
            break
    return _cache(m, "_canon", best)


def _rank(values: list) -> list[int]:
    distinct = sorted(set(values))
    index = {v: r for r, v in enumerate(distinct)}
    return [index[v] for v in values]


# -- JSON model format ------------------------------------------------------


def to_dict(m: PowlModel) -> dict:
    if isinstance(m, Transition):
        return {"kind": "transition", "label": m.label}
    if isinstance(m, Silent):
        return {"kind": "silent"}
    if isinstance(m, Xor):
        ordered = sorted(m.children, key=canonical_key)
        return {"kind": "xor", "children": [to_dict(c) for c in ordered]}
    if isinstance(m, Loop):
        return {"kind": "loop", "do": to_dict(m.do), "redo": to_dict(m.redo)}
    perm, edges = _canonical_order(m)
    return {
        "kind": "order",
        "children": [to_dict(m.children[i]) for i in perm],
        "edges": [[i, j] for i, j in edges],
    }


def to_json(m: PowlModel) -> str:
    """Compact canonical JSON; equivalent models serialize to identical text."""
    return json.dumps(to_dict(m), separators=(",", ":"), ensure_ascii=False)


def from_dict(data: Any) -> PowlModel:
    """Build a model from the JSON model format.

    Transition and silent indexes are assigned 1, 2, ... per label in
    depth-first order, so parsing then serializing is the identity.
    """
    counters: dict[str | None, int] = {}

    def build(node: Any, path: str) -> PowlModel:
        if not isinstance(node, dict) or "kind" not in node:
            raise ModelFormatError(f"{path}: expected an object with a 'kind' field")
        kind = node["kind"]
        expected = {
            "transition": {"kind", "label"},
            "silent": {"kind"},
            "xor": {"kind", "children"},
            "loop": {"kind", "do", "redo"},
            "order": {"kind", "children", "edges"},
        }.get(kind)
        if expected is None:
            raise ModelFormatError(f"{path}: unknown kind {kind!r}")
        if set(node) != expected:
            raise ModelFormatError(f"{path}: {kind} requires exactly the fields {sorted(expected)}")
        if kind == "transition":
            label = node["label"]
            if not isinstance(label, str) or not label:
                raise ModelFormatError(f"{path}: transition label must be a non-empty string")
            counters[label] = counters.get(label, 0) + 1
            return Transition(label, counters[label])
        if kind == "silent":
            counters[None] = counters.get(None, 0) + 1
            return Silent(counters[None])
        if kind == "loop":
            return Loop(build(node["do"], path + ".do"), build(node["redo"], path + ".redo"))
        kids = node["children"]
        if not isinstance(kids, list) or len(kids) < 2:
            raise ModelFormatError(f"{path}: {kind} needs a list of at least two children")
        children = tuple(build(c, f"{path}.children[{i}]") for i, c in enumerate(kids))
        if kind == "xor":
            return Xor(children)
        edges = node["edges"]
        if not isinstance(edges, list) or not all(
            isinstance(e, list) and len(e) == 2 and all(isinstance(x, int) and not isinstance(x, bool) for x in e)
            for e in edges
        ):
            raise ModelFormatError(f"{path}: edges must be a list of [i, j] integer pairs")
        try:
            return Order(children, frozenset(tuple(e) for e in edges))
        except ValueError as exc:
            raise ModelFormatError(f"{path}: {exc}") from None

    return build(data, "$")


def from_json(text: str) -> PowlModel:
    try:
        data = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ModelFormatError(f"invalid JSON: {exc}") from None
    return from_dict(data)


def canonicalize(m: PowlModel) -> PowlModel:
    return from_dict(to_dict(m))


def make_order(children: Iterable[PowlModel], edges: Iterable[tuple[PowlModel, PowlModel]] = ()) -> Order:
    """Convenience constructor taking edges between child objects instead of indexes."""
    children = tuple(children)
    index = {id(c): i for i, c in enumerate(children)}
    return Order(children, frozenset((index[id(a)], index[id(b)]) for a, b in edges))
