"""Recursive POWL discovery from a multiset of partially ordered traces.

The building blocks (projection, substitution, conflict and co-occurrence
partitioning, equivalence classes, order aggregation) work on any
:class:`PotMultiset`; :func:`discover` chains them into the five mining steps.
"""
from __future__ import annotations

import itertools
import logging
from dataclasses import dataclass, field
from typing import Iterable

import numpy as np

from .errors import DomainError, IdentityCollisionError, PreconditionError
from .pots import Pot, PotMultiset, node_order
from .powl import Loop, Order, PowlModel, Silent, Xor, canonical_key, labels

log = logging.getLogger(__name__)


@dataclass(frozen=True, eq=False)
class NodeHandle:
    """A node of the working multiset. Identity is the handle itself."""

    id: int
    payload: PowlModel
    key: str = field(default="")

    def __post_init__(self):
        if not self.key:
            object.__setattr__(self, "key", canonical_key(self.payload))

    @property
    def order_key(self) -> tuple:
        return (self.key, self.id)

    def __str__(self) -> str:
        return f"{self.payload}@{self.id}"


def payload_of(node) -> PowlModel:
    return node.payload if isinstance(node, NodeHandle) else node


def key_of(node) -> str:
    return node.key if isinstance(node, NodeHandle) else canonical_key(node)


# -- projection and substitution --------------------------------------------


def project(m: PotMultiset, keep: Iterable) -> PotMultiset:
    """Restrict every variant to ``keep``; variants left empty are dropped."""
    keep = frozenset(keep)
    if not keep <= m.node_universe:
        raise DomainError("projection set is not a subset of the multiset's nodes")
    out = []
    for pot, count in m.variants:
        nodes = pot.nodes & keep
        if not nodes:
            continue
        if len(nodes) == len(pot.nodes):
            out.append((pot, count))
            continue
        edges = frozenset(e for e in pot.edges if e[0] in nodes and e[1] in nodes)
        out.append((Pot(nodes, edges), count))
    return PotMultiset(out)


def substitute(m: PotMultiset, old: Iterable, replacement) -> PotMultiset:
    """Replace the nodes ``old`` by the single node ``replacement``.

    The new node precedes (follows) an untouched node iff every replaced
    node present in that variant does.
    """
    old = frozenset(old)
    universe = m.node_universe
    if replacement in universe:
        raise IdentityCollisionError(f"replacement node {replacement} already occurs in the multiset")
    if not old <= universe:
        raise DomainError("substituted nodes are not a subset of the multiset's nodes")
    out = []
    for pot, count in m.variants:
        present = pot.nodes & old
        if not present:
            out.append((pot, count))
            continue
        rest = pot.nodes - present
        succ_of = {o: set() for o in present}
        pred_of = {o: set() for o in present}
        edges = []
        for s, t in pot.edges:
            if s in present:
                if t not in present:
                    succ_of[s].add(t)
            elif t in present:
                pred_of[t].add(s)
            else:
                edges.append((s, t))
        after = set.intersection(*succ_of.values())
        before = set.intersection(*pred_of.values())
        edges.extend((replacement, t) for t in after)
        edges.extend((s, replacement) for s in before)
        out.append((Pot(rest | {replacement}, frozenset(edges)), count))
    return PotMultiset(out)


# -- pattern detection ------------------------------------------------------


def conflict_partition(m: PotMultiset) -> list[frozenset] | None:
    """Connected components of the label co-occurrence graph, if there are two or more.

    Labels seen in a common variant are joined; the components form a
    maximal conflict group covering every label.
    """
    if not m.variants:
        raise PreconditionError("conflict partition of an empty multiset")
    parent: dict[str, str] = {}

    def find(x: str) -> str:
        while parent[x] != x:
            parent[x] = parent[parent[x]]
            x = parent[x]
        return x

    node_labels: dict = {}
    for node in m.node_universe:
        node_labels[node] = labels(payload_of(node))
        for lab in node_labels[node]:
            parent.setdefault(lab, lab)
    for pot, _ in m.variants:
        variant_labels = sorted(frozenset().union(*(node_labels[n] for n in pot.nodes)))
        if not variant_labels:
            continue
        root = find(variant_labels[0])
        for lab in variant_labels[1:]:
            other = find(lab)
            if other != root:
                parent[other] = root
    groups: dict[str, set] = {}
    for lab in parent:
        groups.setdefault(find(lab), set()).add(lab)
    if len(groups) < 2:
        return None
    return sorted((frozenset(g) for g in groups.values()), key=sorted)


def cooccurrence_partition(m: PotMultiset) -> list[frozenset]:
    """Blocks of nodes that are present in exactly the same variants."""
    if not m.variants:
        raise PreconditionError("co-occurrence partition of an empty multiset")
    profile: dict = {}
    for bit, (pot, _) in enumerate(m.variants):
        for node in pot.nodes:
            profile[node] = profile.get(node, 0) | (1 << bit)
    blocks: dict[int, list] = {}
    for node in sorted(profile, key=node_order):
        blocks.setdefault(profile[node], []).append(node)
    return sorted((frozenset(b) for b in blocks.values()), key=_block_order)


def _block_order(block: frozenset) -> list:
    return sorted(node_order(n) for n in block)


def equivalence_classes(nodes: Iterable) -> list[frozenset]:
    """Partition nodes by structural equivalence of their payloads."""
    classes: dict[str, list] = {}
    for node in sorted(nodes, key=node_order):
        classes.setdefault(key_of(node), []).append(node)
    return [frozenset(classes[k]) for k in sorted(classes)]


# -- order aggregation ------------------------------------------------------


@dataclass
class AggregatedOrder:
    nodes: list
    edges: frozenset
    base_edges: int = 0
    inferred_edges: int = 0
    pruned_edges: int = 0

    def edge_indexes(self) -> frozenset:
        index = {n: i for i, n in enumerate(self.nodes)}
        return frozenset((index[u], index[v]) for u, v in self.edges)


def pair_counts(m: PotMultiset, nodes: list) -> tuple[np.ndarray, np.ndarray]:
    """``both[u, v]``: variants (with multiplicity) containing u and v;
    ``ordered[u, v]``: those where additionally u precedes v."""
    index = {n: i for i, n in enumerate(nodes)}
    k = len(nodes)
    both = np.zeros((k, k), dtype=np.int64)
    ordered = np.zeros((k, k), dtype=np.int64)
    for pot, count in m.variants:
        ix = np.fromiter((index[n] for n in pot.nodes), dtype=np.intp, count=len(pot.nodes))
        both[np.ix_(ix, ix)] += count
        if pot.edges:
            src = np.fromiter((index[u] for u, _ in pot.edges), dtype=np.intp, count=len(pot.edges))
            dst = np.fromiter((index[v] for _, v in pot.edges), dtype=np.intp, count=len(pot.edges))
            ordered[src, dst] += count
    return both, ordered


def _closure(rel: np.ndarray) -> np.ndarray:
    out = rel.copy()
    for k in range(out.shape[0]):
        out |= out[:, k : k + 1] & out[k : k + 1, :]
    return out


def prune(edges: np.ndarray, support: np.ndarray) -> tuple[np.ndarray, int]:
    """Remove edges until the relation is transitive.

    Each round removes one edge taking part in a violation (a before b,
    b before c, a not before c): the one with least support, ties going to
    the smaller (source, target) position. Two-cycles count as violations.
    """
    rel = edges.copy()
    removed = 0
    while True:
        r = rel.astype(np.int64)
        nr = (~rel).astype(np.int64)
        first = rel & ((nr @ r.T) > 0)
        second = rel & ((r.T @ nr) > 0)
        legs = first | second
        if not legs.any():
            return rel, removed
        us, vs = np.nonzero(legs)
        best = min(zip(support[us, vs].tolist(), us.tolist(), vs.tolist()))
        rel[best[1], best[2]] = False
        removed += 1


def combine_orders(m: PotMultiset) -> AggregatedOrder:
    """Aggregate the variants into a single strict partial order over all nodes.

    An edge u -> v survives only if every variant containing both u and v
    orders them that way; transitive inferences are added under the same
    condition, then transitivity violations are pruned.
    """
    if not m.variants:
        raise PreconditionError("cannot combine an empty multiset")
    nodes = sorted(m.node_universe, key=node_order)
    both, ordered = pair_counts(m, nodes)
    unanimous = ordered == both
    np.fill_diagonal(unanimous, False)
    base = unanimous & (ordered >= 1)
    extended = _closure(base) & unanimous
    agg, removed = prune(extended, ordered)
    us, vs = np.nonzero(agg)
    edges = frozenset((nodes[u], nodes[v]) for u, v in zip(us.tolist(), vs.tolist()))
    n_base = int(base.sum())
    return AggregatedOrder(nodes, edges, n_base, int(extended.sum()) - n_base, removed)


# -- the recursive miner ----------------------------------------------------


class _Miner:
    def __init__(self):
        self._ids = itertools.count()

    def handle(self, payload: PowlModel) -> NodeHandle:
        return NodeHandle(next(self._ids), payload)

    def adopt(self, m: PotMultiset) -> PotMultiset:
        """Give every distinct input node a fresh handle."""
        mapping = {n: self.handle(payload_of(n)) for n in sorted(m.node_universe, key=node_order)}
        return PotMultiset(
            (Pot(frozenset(mapping[n] for n in pot.nodes), frozenset((mapping[u], mapping[v]) for u, v in pot.edges)), c)
            for pot, c in m.variants
        )

    def replace(self, m: PotMultiset, old: Iterable, payload: PowlModel) -> PotMultiset:
        return substitute(m, old, self.handle(payload))

    def discover(self, m: PotMultiset) -> PowlModel:
        universe = m.node_universe
        if len(universe) == 1:
            return next(iter(universe)).payload

        # Step 1: exclusive choice between label groups that never co-occur.
        parts = conflict_partition(m)
        if parts is not None:
            branches, covered = [], set()
            for part in parts:
                block = [n for n in universe if labels(n.payload) <= part]
                covered.update(block)
                branches.append(self.discover(project(m, block)))
            m = self.replace(m, covered, Xor(tuple(branches)))
            if len(m.node_universe) == 1:
                return next(iter(m.node_universe)).payload

        # Step 2: blocks of nodes that always appear together.
        blocks = cooccurrence_partition(m)
        if len(blocks) > 1:
            for block in blocks:
                if len(block) > 1:
                    m = self.replace(m, block, self.discover(project(m, block)))
            if len(m.node_universe) == 1:
                return next(iter(m.node_universe)).payload

        # Step 3: repeated equivalent nodes become a loop.
        for cls in equivalence_classes(m.node_universe):
            if len(cls) > 1:
                rep = min(cls, key=node_order)
                m = self.replace(m, cls, Loop(rep.payload, Silent()))
        if len(m.node_universe) == 1:
            return next(iter(m.node_universe)).payload

        # Step 4: nodes missing from some variant become skippable.
        present: dict = {}
        for pot, _ in m.variants:
            for node in pot.nodes:
                present[node] = present.get(node, 0) + 1
        for node in sorted(m.node_universe, key=node_order):
            if present[node] < len(m.variants):
                m = self.replace(m, [node], Xor((node.payload, Silent())))

        # Step 5: aggregate the remaining nodes into one partial order.
        agg = combine_orders(m)
        if len(agg.nodes) == 1:
            return agg.nodes[0].payload
        return Order(tuple(n.payload for n in agg.nodes), agg.edge_indexes())


def discover(m: PotMultiset) -> PowlModel:
    """Mine a POWL model from a multiset of partially ordered traces."""
    if not m.variants:
        raise PreconditionError("discovery needs a non-empty multiset")
    if any(not pot.nodes for pot, _ in m.variants):
        raise PreconditionError("discovery input contains an empty partial order")
    miner = _Miner()
    return miner.discover(miner.adopt(m))
