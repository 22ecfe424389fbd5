"""Execution semantics of POWL models.

``accepts`` simulates the model as a nondeterministic automaton whose states
mirror the model hierarchy, resolving silent moves only when a visible step
or completion needs them. ``enumerate_language`` builds bounded languages
compositionally and serves as an independent oracle for it.
"""
from __future__ import annotations

from typing import Iterable, Sequence

from .errors import BudgetExceeded, LanguageTooLarge
from .powl import Loop, Order, PowlModel, Silent, Transition, Xor

DEFAULT_ACCEPT_BUDGET = 100_000
DEFAULT_LANGUAGE_CAP = 200_000


CLOSED = "#"


class _Runner:
    """One node of the compiled model.

    Silent moves are resolved on demand: ``steps(state, label)`` returns the
    states reachable by silent moves followed by one ``label`` move, and
    ``can_finish(state)`` tells whether silent moves alone reach completion.
    States are small hashable tuples.
    """

    def __init__(self):
        self._steps: dict = {}
        self._finish: dict = {}

    def steps(self, state, label: str) -> frozenset:
        key = (state, label)
        out = self._steps.get(key)
        if out is None:
            out = self._steps[key] = frozenset(self._compute_steps(state, label))
        return out

    def can_finish(self, state) -> bool:
        out = self._finish.get(state)
        if out is None:
            out = self._finish[state] = self._compute_finish(state)
        return out


class _Leaf(_Runner):
    initial = 0

    def __init__(self, label: str | None):
        super().__init__()
        self.label = label

    def _compute_steps(self, state, label):
        if state == 0 and label == self.label:
            yield 1

    def _compute_finish(self, state) -> bool:
        return state == 1 or self.label is None


class _Xor(_Runner):
    initial = None

    def __init__(self, children: list[_Runner]):
        super().__init__()
        self.children = children

    def _compute_steps(self, state, label):
        if state is None:
            for i, child in enumerate(self.children):
                for nxt in child.steps(child.initial, label):
                    yield i, nxt
            return
        i, inner = state
        for nxt in self.children[i].steps(inner, label):
            yield i, nxt

    def _compute_finish(self, state) -> bool:
        if state is None:
            return any(c.can_finish(c.initial) for c in self.children)
        return self.children[state[0]].can_finish(state[1])


class _Loop(_Runner):
    """States are (0, s) inside the do-part and (1, s) inside the redo-part."""

    def __init__(self, do: _Runner, redo: _Runner):
        super().__init__()
        self.parts = (do, redo)
        self.initial = (0, do.initial)

    def _compute_steps(self, state, label):
        phase, inner = state
        # at most one full silent round trip through both parts can matter
        for _ in range(3):
            part = self.parts[phase]
            for nxt in part.steps(inner, label):
                yield phase, nxt
            if not part.can_finish(inner):
                return
            phase = 1 - phase
            inner = self.parts[phase].initial

    def _compute_finish(self, state) -> bool:
        phase, inner = state
        do, redo = self.parts
        if phase == 0:
            return do.can_finish(inner)
        return redo.can_finish(inner) and do.can_finish(do.initial)


class _Order(_Runner):
    """Children run concurrently. A child may move once every predecessor can
    finish silently; those predecessors are then closed for good."""

    def __init__(self, children: list[_Runner], preds: list[list[int]]):
        super().__init__()
        self.children = children
        self.preds = preds
        self.initial = tuple(c.initial for c in children)

    def _finished(self, state, i) -> bool:
        return state[i] == CLOSED or self.children[i].can_finish(state[i])

    def _compute_steps(self, state, label):
        for i, child in enumerate(self.children):
            if state[i] == CLOSED:
                continue
            preds = self.preds[i]
            if not all(self._finished(state, p) for p in preds):
                continue
            for nxt in child.steps(state[i], label):
                new = list(state)
                for p in preds:
                    new[p] = CLOSED
                new[i] = nxt
                yield tuple(new)

    def _compute_finish(self, state) -> bool:
        return all(self._finished(state, i) for i in range(len(self.children)))


def _compile(m: PowlModel) -> _Runner:
    if isinstance(m, Transition):
        return _Leaf(m.label)
    if isinstance(m, Silent):
        return _Leaf(None)
    if isinstance(m, Xor):
        return _Xor([_compile(c) for c in m.children])
    if isinstance(m, Loop):
        return _Loop(_compile(m.do), _compile(m.redo))
    return _Order([_compile(c) for c in m.children], [m.predecessors(j) for j in range(len(m.children))])


class Acceptor:
    """Incremental trace recognizer for one model.

    Results are memoized, so stepping many traces that share prefixes
    through one acceptor is cheap.
    """

    def __init__(self, model: PowlModel):
        self.model = model
        self._root = _compile(model)
        self._step_cache: dict = {}
        self.start = frozenset([self._root.initial])

    def step(self, states: frozenset, label: str) -> frozenset:
        key = (states, label)
        out = self._step_cache.get(key)
        if out is None:
            out = self._step_cache[key] = frozenset().union(*(self._root.steps(s, label) for s in states))
        return out

    def accepting(self, states: Iterable) -> bool:
        return any(self._root.can_finish(s) for s in states)

    def run(self, trace: Sequence[str], budget: int = DEFAULT_ACCEPT_BUDGET) -> bool:
        """Membership of ``trace``; raises BudgetExceeded once more than
        ``budget`` states were visited in total."""
        if budget < 1:
            raise ValueError("budget must be >= 1")
        states = self.start
        used = len(states)
        for label in trace:
            states = self.step(states, label)
            if not states:
                return False
            used += len(states)
            if used > budget:
                raise BudgetExceeded(budget)
        return self.accepting(states)


def accepts(m: PowlModel, trace: Sequence[str], budget: int = DEFAULT_ACCEPT_BUDGET) -> bool:
    """True iff ``trace`` is in the language of ``m``.

    Exhausting ``budget`` raises :class:`BudgetExceeded` instead of answering.
    """
    return Acceptor(m).run(trace, budget)


# -- bounded language -------------------------------------------------------


def enumerate_language(
    m: PowlModel, max_loop_iterations: int, max_length: int, cap: int = DEFAULT_LANGUAGE_CAP
) -> frozenset:
    """Traces of length <= ``max_length`` where each loop's redo part runs at most
    ``max_loop_iterations`` times per loop execution."""
    if max_loop_iterations < 0 or max_length < 0:
        raise ValueError("bounds must be non-negative")
    n, limit = max_loop_iterations, max_length

    def check(out: set) -> set:
        if len(out) > cap:
            raise LanguageTooLarge(cap)
        return out

    def concat(left: set, right: set) -> set:
        return check({a + b for a in left for b in right if len(a) + len(b) <= limit})

    def lang(node: PowlModel) -> set:
        if isinstance(node, Transition):
            return {(node.label,)} if limit >= 1 else set()
        if isinstance(node, Silent):
            return {()}
        if isinstance(node, Xor):
            return check(set().union(*(lang(c) for c in node.children)))
        if isinstance(node, Loop):
            do, redo = lang(node.do), lang(node.redo)
            out = set(do)
            layer = set(do)
            for _ in range(n):
                layer = concat(concat(layer, redo), do)
                if layer <= out:
                    break
                out |= layer
                check(out)
            return out
        return _interleave_order(node, [lang(c) for c in node.children], limit, check)

    return frozenset(lang(m))


def _interleave_order(node: Order, langs: list[set], limit: int, check) -> set:
    """All-before-all interleavings of one trace per child."""
    preds = [node.predecessors(j) for j in range(len(node.children))]
    out: set = set()

    def choose(i: int, picked: list, total: int):
        if i == len(langs):
            _merge(picked, preds, out)
            check(out)
            return
        for t in sorted(langs[i]):
            if total + len(t) <= limit:
                picked.append(t)
                choose(i + 1, picked, total + len(t))
                picked.pop()

    choose(0, [], 0)
    return out


def _merge(traces: list[tuple], preds: list[list[int]], out: set) -> None:
    k = len(traces)
    memo: dict = {}

    def rec(pos: tuple) -> set:
        hit = memo.get(pos)
        if hit is not None:
            return hit
        if all(pos[i] == len(traces[i]) for i in range(k)):
            return {()}
        result = set()
        for i in range(k):
            if pos[i] == len(traces[i]):
                continue
            if any(pos[p] < len(traces[p]) for p in preds[i]):
                continue
            nxt = list(pos)
            nxt[i] += 1
            head = traces[i][pos[i]]
            for tail in rec(tuple(nxt)):
                result.add((head,) + tail)
        memo[pos] = result
        return result

    out |= rec(tuple([0] * k))
