"""Partially ordered traces (POTs) and weighted multisets of them."""
from __future__ import annotations

from dataclasses import dataclass
from typing import Iterable

from .errors import EmptyInputError, PreconditionError
from .intervals import IntervalEvent, IntervalLog
from .powl import Transition, canonical_key
from .relations import is_strict_partial_order, transitive_reduction


def node_order(node) -> tuple:
    """Total order on nodes: payload key first, then a per-kind tie-break."""
    order_key = getattr(node, "order_key", None)
    if order_key is not None:
        return order_key
    if isinstance(node, Transition):
        return (node.label, node.index)
    return (canonical_key(node), 0)


@dataclass(frozen=True)
class Pot:
    """A strict partial order ``edges`` over ``nodes``.

    Nodes are any hashable handles: :class:`Transition` payloads when built
    from event data, discovery node handles later on.
    """

    nodes: frozenset
    edges: frozenset = frozenset()

    def sorted_nodes(self) -> list:
        return sorted(self.nodes, key=node_order)

    def key(self) -> str:
        nodes = self.sorted_nodes()
        index = {n: i for i, n in enumerate(nodes)}
        edges = sorted((index[u], index[v]) for u, v in self.edges)
        return " ".join(map(str, nodes)) + " | " + " ".join(f"{nodes[u]}<{nodes[v]}" for u, v in edges)

    def is_valid(self) -> bool:
        return is_strict_partial_order(self.nodes, self.edges)


class PotMultiset:
    """Variants (distinct POTs) with positive multiplicities.

    Equal POTs passed to the constructor are folded and their counts summed;
    variants keep first-appearance order.
    """

    __slots__ = ("variants", "_universe")

    def __init__(self, variants: Iterable[tuple[Pot, int]]):
        folded: dict[Pot, int] = {}
        for pot, count in variants:
            if count < 1:
                raise ValueError("variant counts must be positive")
            folded[pot] = folded.get(pot, 0) + count
        self.variants: tuple[tuple[Pot, int], ...] = tuple(folded.items())
        self._universe = None

    @property
    def node_universe(self) -> frozenset:
        if self._universe is None:
            self._universe = frozenset().union(*(p.nodes for p, _ in self.variants))
        return self._universe

    @property
    def total(self) -> int:
        return sum(c for _, c in self.variants)

    def __len__(self) -> int:
        return len(self.variants)

    def __iter__(self):
        return iter(self.variants)

    def __eq__(self, other) -> bool:
        return isinstance(other, PotMultiset) and dict(self.variants) == dict(other.variants)

    def __repr__(self) -> str:
        return f"PotMultiset({[(p.key(), c) for p, c in self.variants]})"

    def sorted_variants(self) -> list[tuple[Pot, int]]:
        """Descending count, then canonical key."""
        return sorted(self.variants, key=lambda pc: (-pc[1], pc[0].key()))


def build_pot(intervals: Iterable[IntervalEvent]) -> Pot:
    """One node per interval; i precedes j iff i ends strictly before j starts.

    Same-label instances are numbered 1..m by (start, end, file position).
    """
    ordered = sorted(intervals, key=lambda iv: (iv.start, iv.end, iv.seq_no))
    if not ordered:
        raise EmptyInputError("cannot build a partially ordered trace from an empty case")
    if len({iv.case_id for iv in ordered}) > 1:
        raise PreconditionError("intervals of a single case expected")
    counters: dict[str, int] = {}
    nodes = []
    for iv in ordered:
        counters[iv.label] = counters.get(iv.label, 0) + 1
        nodes.append(Transition(iv.label, counters[iv.label]))
    edges = frozenset(
        (nodes[i], nodes[j])
        for i, a in enumerate(ordered)
        for j, b in enumerate(ordered)
        if a.end < b.start
    )
    return Pot(frozenset(nodes), edges)


def build_pot_multiset(log: IntervalLog) -> PotMultiset:
    cases = log.by_case()
    if not cases:
        raise EmptyInputError("interval log has no cases")
    return PotMultiset((build_pot(cases[c]), 1) for c in sorted(cases))


def _dot_quote(text: str) -> str:
    return '"' + text.replace("\\", "\\\\").replace('"', '\\"') + '"'


def export_pot_dot(pot: Pot, name: str = "pot") -> str:
    """Graphviz digraph showing the Hasse diagram of the POT."""
    nodes = pot.sorted_nodes()
    ids = {n: i for i, n in enumerate(nodes)}
    lines = [f"digraph {_dot_quote(name)} {{", "  rankdir=LR;", "  node [shape=box, style=rounded];"]
    for n in nodes:
        lines.append(f"  n{ids[n]} [label={_dot_quote(str(n))}];")
    for u, v in sorted((ids[u], ids[v]) for u, v in transitive_reduction(pot.edges)):
        lines.append(f"  n{u} -> n{v};")
    lines.append("}")
    return "\n".join(lines) + "\n"
