from __future__ import annotations

from pathlib import Path

import pytest
from hypothesis import strategies as st

from powlpo.pots import Pot, PotMultiset
from powlpo.powl import Loop, Order, Silent, Transition, Xor
from powlpo.relations import transitive_closure

FIXTURES = Path(__file__).parent / "fixtures"


def node(text: str) -> Transition:
    """'a' -> Transition(a, 1), 'a#2' -> Transition(a, 2)."""
    label, _, index = text.partition("#")
    return Transition(label, int(index) if index else 1)


def pot(nodes: str, edges: str = "") -> Pot:
    """pot("a b c", "a<b b<c"); edges are closed transitively."""
    ns = {s: node(s) for s in nodes.split()}
    pairs = [tuple(e.split("<")) for e in edges.split()]
    closed = transitive_closure({(ns[u], ns[v]) for u, v in pairs})
    return Pot(frozenset(ns.values()), frozenset(closed))


def multiset(*variants) -> PotMultiset:
    """multiset((pot, 2), pot2, ...): bare pots count once."""
    return PotMultiset(v if isinstance(v, tuple) else (v, 1) for v in variants)


@pytest.fixture
def fixtures() -> Path:
    return FIXTURES


@st.composite
def small_pots(draw, labels="abc", max_nodes=5):
    """A random POT with at most ``max_nodes`` nodes; repeated labels allowed."""
    k = draw(st.integers(1, max_nodes))
    chosen = draw(st.lists(st.sampled_from(labels), min_size=k, max_size=k))
    counters: dict[str, int] = {}
    nodes = []
    for lab in chosen:
        counters[lab] = counters.get(lab, 0) + 1
        nodes.append(Transition(lab, counters[lab]))
    # random DAG over a random permutation, then closed
    perm = draw(st.permutations(range(k)))
    pairs = [(perm[i], perm[j]) for i in range(k) for j in range(i + 1, k)]
    flags = draw(st.lists(st.booleans(), min_size=len(pairs), max_size=len(pairs)))
    edges = transitive_closure({(nodes[u], nodes[v]) for (u, v), f in zip(pairs, flags) if f})
    return Pot(frozenset(nodes), frozenset(edges))


@st.composite
def small_multisets(draw, labels="abc", max_nodes=5, max_variants=4):
    variants = draw(st.lists(small_pots(labels, max_nodes), min_size=1, max_size=max_variants))
    counts = draw(st.lists(st.integers(1, 3), min_size=len(variants), max_size=len(variants)))
    return PotMultiset(zip(variants, counts))


def _order_from(draw, children):
    k = len(children)
    perm = draw(st.permutations(range(k)))
    pairs = [(perm[i], perm[j]) for i in range(k) for j in range(i + 1, k)]
    flags = draw(st.lists(st.booleans(), min_size=len(pairs), max_size=len(pairs)))
    return Order(tuple(children), frozenset(transitive_closure({p for p, f in zip(pairs, flags) if f})))


@st.composite
def _order(draw, child):
    return _order_from(draw, draw(st.lists(child, min_size=2, max_size=3)))


def models(labels="ab", max_leaves=6):
    """Random models with repeated labels allowed (good for equivalence checks)."""
    leaf = st.one_of(st.sampled_from(labels).map(Transition), st.just(Silent()))
    return st.recursive(
        leaf,
        lambda child: st.one_of(
            st.lists(child, min_size=2, max_size=3).map(lambda cs: Xor(tuple(cs))),
            st.tuples(child, child).map(lambda dr: Loop(*dr)),
            _order(child),
        ),
        max_leaves=max_leaves,
    )


# -- acceptance summary -----------------------------------------------------

ACCEPTANCE_LINES: list[str] = []


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)
