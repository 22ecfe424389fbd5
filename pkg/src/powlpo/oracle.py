"""Verification machinery: linearizations of POTs, the perfect-fitness check,
and seeded generators of random models and logs."""
from __future__ import annotations

import random
import string
from dataclasses import dataclass, field
from typing import Sequence

from .errors import ConfigError
from .pots import Pot, PotMultiset
from .powl import Loop, Order, PowlModel, Silent, Transition, Xor
from .relations import transitive_closure
from .semantics import DEFAULT_ACCEPT_BUDGET, Acceptor

DEFAULT_LIN_CAP = 1000
MAX_STORED_FAILURES = 50


class _PotWalker:
    """Label-level enumeration of linear extensions.

    A prefix is tracked as the set of node downsets that can produce it, so
    each distinct label sequence is visited once even when several node
    orderings spell it.
    """

    def __init__(self, pot: Pot):
        self.nodes = pot.sorted_nodes()
        index = {n: i for i, n in enumerate(self.nodes)}
        self.preds = [0] * len(self.nodes)
        for u, v in pot.edges:
            self.preds[index[v]] |= 1 << index[u]
        self.labels = [getattr(n, "label", str(n)) for n in self.nodes]
        self.full = (1 << len(self.nodes)) - 1

    def expand(self, downsets: frozenset) -> list[tuple[str, frozenset]]:
        nxt: dict[str, set] = {}
        for d in downsets:
            for i, pre in enumerate(self.preds):
                bit = 1 << i
                if not d & bit and pre & d == pre:
                    nxt.setdefault(self.labels[i], set()).add(d | bit)
        return [(lab, frozenset(nxt[lab])) for lab in sorted(nxt)]


@dataclass
class Linearizations:
    sequences: list[tuple[str, ...]]
    capped: bool = False

    def __iter__(self):
        return iter(self.sequences)

    def __len__(self) -> int:
        return len(self.sequences)


def linearizations(pot: Pot, cap: int = DEFAULT_LIN_CAP) -> Linearizations:
    """Distinct label sequences of all topological orderings of ``pot``,
    in lexicographic order, stopping after ``cap`` of them."""
    if cap < 1:
        raise ValueError("cap must be >= 1")
    walker = _PotWalker(pot)
    out: list[tuple[str, ...]] = []
    capped = False

    def walk(downsets: frozenset, prefix: list[str]) -> None:
        nonlocal capped
        if walker.full in downsets:
            out.append(tuple(prefix))
            return
        for label, nxt in walker.expand(downsets):
            if len(out) >= cap:
                capped = True
                return
            prefix.append(label)
            walk(nxt, prefix)
            prefix.pop()

    walk(frozenset([0]), [])
    return Linearizations(out, capped)


@dataclass
class FitnessReport:
    variants_checked: int = 0
    linearizations_checked: int = 0
    accepted: int = 0
    inconclusive: int = 0
    failure_count: int = 0
    failures: list[tuple[str, tuple[str, ...]]] = field(default_factory=list)
    capped: bool = False

    @property
    def ok(self) -> bool:
        return self.failure_count == 0

    def to_dict(self) -> dict:
        return {
            "variants_checked": self.variants_checked,
            "linearizations_checked": self.linearizations_checked,
            "accepted": self.accepted,
            "inconclusive": self.inconclusive,
            "failure_count": self.failure_count,
            "failures": [{"variant": key, "trace": list(trace)} for key, trace in self.failures],
            "capped": self.capped,
        }


def verify_perfect_fitness(
    model: PowlModel,
    m: PotMultiset,
    lin_cap: int = DEFAULT_LIN_CAP,
    accept_budget: int = DEFAULT_ACCEPT_BUDGET,
) -> FitnessReport:
    """Replay every linearization of every variant (up to ``lin_cap`` per variant).

    Linearizations sharing a prefix share the replay work. A linearization
    whose replay visits more than ``accept_budget`` states is counted as
    inconclusive, never as a failure.
    """
    if lin_cap < 1 or accept_budget < 1:
        raise ValueError("caps must be >= 1")
    acceptor = Acceptor(model)
    report = FitnessReport()
    for pot, _count in m.sorted_variants():
        report.variants_checked += 1
        walker = _PotWalker(pot)
        key = pot.key()
        done = 0

        def walk(downsets, states, used, prefix):
            nonlocal done
            if walker.full in downsets:
                done += 1
                report.linearizations_checked += 1
                if states is None:
                    report.inconclusive += 1
                elif acceptor.accepting(states):
                    report.accepted += 1
                else:
                    report.failure_count += 1
                    if len(report.failures) < MAX_STORED_FAILURES:
                        report.failures.append((key, tuple(prefix)))
                return
            for label, nxt in walker.expand(downsets):
                if done >= lin_cap:
                    report.capped = True
                    return
                new_states, new_used = None, used
                if states is not None:
                    new_states = acceptor.step(states, label)
                    new_used = used + len(new_states)
                    if new_used > accept_budget:
                        new_states = None
                prefix.append(label)
                walk(nxt, new_states, new_used, prefix)
                prefix.pop()

        start = acceptor.start
        walk(frozenset([0]), start if len(start) <= accept_budget else None, len(start), [])
    return report


# -- generators -------------------------------------------------------------


def default_label_pool(n: int) -> tuple[str, ...]:
    letters = string.ascii_lowercase
    return tuple(letters[i] if i < 26 else f"a{i}" for i in range(n))


def random_powl(
    seed: int,
    max_depth: int = 3,
    max_children: int = 3,
    label_pool: Sequence[str] = default_label_pool(6),
    silent_prob: float = 0.15,
) -> PowlModel:
    """Draw a random model whose labeled leaves carry distinct labels from the pool.

    The do-part of a loop and the children of an order are never silent, and
    an exclusive choice has at most one silent branch, so every model emits
    at least one label per run of each loop body.
    """
    pool = list(dict.fromkeys(label_pool))
    if not pool:
        raise ConfigError("label pool must not be empty")
    if max_depth < 0 or max_children < 2:
        raise ConfigError("need max_depth >= 0 and max_children >= 2")
    rng = random.Random(seed)

    class _OutOfLabels(Exception):
        pass

    while True:
        labels = iter(rng.sample(pool, len(pool)))

        def leaf() -> Transition:
            try:
                return Transition(next(labels))
            except StopIteration:
                raise _OutOfLabels from None

        def gen(depth: int) -> PowlModel:
            if depth >= max_depth or rng.random() < 0.25 + 0.15 * depth:
                return leaf()
            op = rng.choice(("xor", "loop", "order"))
            if op == "loop":
                do = gen(depth + 1)
                redo = Silent() if rng.random() < 2 * silent_prob else gen(depth + 1)
                return Loop(do, redo)
            k = rng.randint(2, max_children)
            if op == "xor":
                kids, has_silent = [], False
                for _ in range(k):
                    if not has_silent and rng.random() < silent_prob:
                        kids.append(Silent())
                        has_silent = True
                    else:
                        kids.append(gen(depth + 1))
                if all(isinstance(c, Silent) for c in kids):
                    kids[0] = leaf()
                return Xor(tuple(kids))
            kids = [gen(depth + 1) for _ in range(k)]
            perm = rng.sample(range(k), k)
            edges = {(perm[i], perm[j]) for i in range(k) for j in range(i + 1, k) if rng.random() < 0.5}
            return Order(tuple(kids), frozenset(transitive_closure(edges)))

        try:
            return gen(0)
        except _OutOfLabels:
            continue


def _geometric(rng: random.Random, p: float, cap: int) -> int:
    k = 0
    while k < cap and rng.random() >= p:
        k += 1
    return k


def _topological(order: Order) -> list[int]:
    n = len(order.children)
    preds = [set(order.predecessors(j)) for j in range(n)]
    done: list[int] = []
    while len(done) < n:
        ready = min(i for i in range(n) if i not in done and preds[i] <= set(done))
        done.append(ready)
    return done


def sample_run(model: PowlModel, rng: random.Random, p: float = 0.5, max_redo: int = 3) -> Pot | None:
    """Execute the model once and record the run as a POT (None if nothing was emitted)."""
    emitted: list[str] = []
    edges: set[tuple[int, int]] = set()

    def before(first: list[int], second: list[int]) -> None:
        edges.update((u, v) for u in first for v in second)

    def run(node: PowlModel) -> list[int]:
        if isinstance(node, Transition):
            emitted.append(node.label)
            return [len(emitted) - 1]
        if isinstance(node, Silent):
            return []
        if isinstance(node, Xor):
            return run(rng.choice(node.children))
        if isinstance(node, Loop):
            segments = [run(node.do)]
            for _ in range(_geometric(rng, p, max_redo)):
                segments.append(run(node.redo))
                segments.append(run(node.do))
            for i, first in enumerate(segments):
                for second in segments[i + 1 :]:
                    before(first, second)
            return [e for seg in segments for e in seg]
        outs: dict[int, list[int]] = {}
        for i in _topological(node):
            outs[i] = run(node.children[i])
        for i, j in node.edges:
            before(outs[i], outs[j])
        return [e for i in _topological(node) for e in outs[i]]

    run(model)
    if not emitted:
        return None
    counters: dict[str, int] = {}
    nodes = []
    for label in emitted:
        counters[label] = counters.get(label, 0) + 1
        nodes.append(Transition(label, counters[label]))
    closed = transitive_closure(edges)
    return Pot(frozenset(nodes), frozenset((nodes[u], nodes[v]) for u, v in closed))


def sample_pot_log(
    model: PowlModel, traces: int, seed: int, loop_geometric_p: float = 0.5, max_redo: int = 3
) -> PotMultiset:
    """Run the model ``traces`` times; runs that emit nothing are dropped."""
    if traces < 1:
        raise ConfigError("need at least one trace")
    rng = random.Random(seed)
    runs = (sample_run(model, rng, loop_geometric_p, max_redo) for _ in range(traces))
    return PotMultiset((pot, 1) for pot in runs if pot is not None)
