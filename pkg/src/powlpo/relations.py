"""Small helpers for binary relations given as sets of pairs."""
from __future__ import annotations

from collections import defaultdict
from typing import Hashable, Iterable


def successors(edges: Iterable[tuple]) -> dict:
    out: dict = defaultdict(set)
    for u, v in edges:
        out[u].add(v)
    return out


def transitive_closure(edges: Iterable[tuple]) -> set:
    succ = successors(edges)
    closure = set()
    for start in list(succ):
        seen: set = set()
        stack = list(succ[start])
        while stack:
            v = stack.pop()
            if v in seen:
                continue
            seen.add(v)
            stack.extend(succ.get(v, ()))
        closure.update((start, v) for v in seen)
    return closure


def transitive_reduction(edges: Iterable[tuple]) -> set:
    """Hasse diagram of a transitively closed acyclic relation."""
    edges = set(edges)
    succ = successors(edges)
    return {(u, v) for u, v in edges if not any((w, v) in edges for w in succ[u] if w != v)}


def is_strict_partial_order(nodes: Iterable[Hashable], edges: Iterable[tuple]) -> bool:
    nodes = set(nodes)
    edges = set(edges)
    for u, v in edges:
        if u == v or u not in nodes or v not in nodes or (v, u) in edges:
            return False
    return transitive_closure(edges) == edges
