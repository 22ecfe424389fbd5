"""Workflow nets: construction from POWL models, soundness checking, PNML and DOT output."""
from __future__ import annotations

import re
import xml.etree.ElementTree as ET
from collections import Counter, defaultdict, deque
from dataclasses import dataclass, field

from .errors import StructureError
from .powl import Loop, Order, PowlModel, Silent, Transition, Xor

DEFAULT_SOUNDNESS_BUDGET = 100_000
NET_SIZE_FACTOR = 16
PTNET_TYPE = "http://www.pnml.org/version-2009/grammar/ptnet"


@dataclass
class WorkflowNet:
    places: list[str] = field(default_factory=list)
    transitions: dict[str, str | None] = field(default_factory=dict)  # id -> label, None for silent
    arcs: list[tuple[str, str]] = field(default_factory=list)
    source: str = "source"
    sink: str = "sink"
    # (loop entry transition, redo transition) pairs; lets tests bound redo counts per loop execution
    loops: list[tuple[str, str]] = field(default_factory=list)

    def preset(self, node: str) -> list[str]:
        return [s for s, t in self.arcs if t == node]

    def postset(self, node: str) -> list[str]:
        return [t for s, t in self.arcs if s == node]


def _id_key(ident: str):
    m = re.fullmatch(r"(\D*)(\d*)", ident)
    prefix, digits = (m.group(1), m.group(2)) if m else (ident, "")
    return (prefix, int(digits) if digits else -1, ident)


class _NetBuilder:
    def __init__(self):
        self.net = WorkflowNet(places=["source", "sink"])
        self._p = 0
        self._t = 0

    def place(self) -> str:
        self._p += 1
        pid = f"p{self._p}"
        self.net.places.append(pid)
        return pid

    def transition(self, label: str | None = None, inputs=(), outputs=()) -> str:
        self._t += 1
        tid = f"t{self._t}"
        self.net.transitions[tid] = label
        self.net.arcs.extend((p, tid) for p in inputs)
        self.net.arcs.extend((tid, p) for p in outputs)
        return tid

    def build(self, m: PowlModel, entry: str, exit: str) -> None:
        if isinstance(m, Transition):
            self.transition(m.label, [entry], [exit])
        elif isinstance(m, Silent):
            self.transition(None, [entry], [exit])
        elif isinstance(m, Xor):
            for child in m.children:
                start, end = self.place(), self.place()
                self.transition(None, [entry], [start])
                self.build(child, start, end)
                self.transition(None, [end], [exit])
        elif isinstance(m, Loop):
            p_do, p_after = self.place(), self.place()
            enter = self.transition(None, [entry], [p_do])
            self.build(m.do, p_do, p_after)
            r_in, r_out = self.place(), self.place()
            redo = self.transition(None, [p_after], [r_in])
            self.build(m.redo, r_in, r_out)
            self.transition(None, [r_out], [p_do])
            self.transition(None, [p_after], [exit])
            self.net.loops.append((enter, redo))
        elif isinstance(m, Order):
            n = len(m.children)
            control = [self.place() for _ in range(n)]
            done = [self.place() for _ in range(n)]
            edge_place = {e: self.place() for e in sorted(m.edges)}
            self.transition(None, [entry], control)
            for i, child in enumerate(m.children):
                start, end = self.place(), self.place()
                incoming = [edge_place[e] for e in sorted(m.edges) if e[1] == i]
                outgoing = [edge_place[e] for e in sorted(m.edges) if e[0] == i]
                self.transition(None, [control[i], *incoming], [start])
                self.build(child, start, end)
                self.transition(None, [end], [*outgoing, done[i]])
            self.transition(None, done, [exit])
        else:
            raise TypeError(f"not a POWL model: {m!r}")


def to_workflow_net(m: PowlModel) -> WorkflowNet:
    """Translate a model into a workflow net, one single-entry single-exit subnet per node.

    The net has at most ``NET_SIZE_FACTOR * (leaves + operators + order edges)``
    places and transitions: a node costs at most 6 as a child of its parent
    and at most 8 on its own, each order edge adds one place, plus source and sink.
    """
    builder = _NetBuilder()
    builder.build(m, "source", "sink")
    return builder.net


# -- soundness --------------------------------------------------------------


@dataclass
class SoundnessReport:
    verdict: str  # "sound" | "unsound" | "inconclusive"
    explored_states: int
    witnesses: list[str] = field(default_factory=list)

    def to_dict(self) -> dict:
        return {"verdict": self.verdict, "explored_states": self.explored_states, "witnesses": self.witnesses}


def _check_structure(net: WorkflowNet) -> None:
    has_in = {t for _, t in net.arcs}
    has_out = {s for s, _ in net.arcs}
    sources = [p for p in net.places if p not in has_in]
    sinks = [p for p in net.places if p not in has_out]
    if sources != [net.source]:
        raise StructureError(f"expected the single source place {net.source!r}, found {sources}")
    if sinks != [net.sink]:
        raise StructureError(f"expected the single sink place {net.sink!r}, found {sinks}")
    forward, backward = defaultdict(list), defaultdict(list)
    for s, t in net.arcs:
        forward[s].append(t)
        backward[t].append(s)

    def reach(start: str, step: dict) -> set:
        seen, stack = {start}, [start]
        while stack:
            for nxt in step[stack.pop()]:
                if nxt not in seen:
                    seen.add(nxt)
                    stack.append(nxt)
        return seen

    on_path = reach(net.source, forward) & reach(net.sink, backward)
    stray = [n for n in [*net.places, *net.transitions] if n not in on_path]
    if stray:
        raise StructureError(f"nodes not on a path from source to sink: {sorted(stray, key=_id_key)[:10]}")


class _Firing:
    """Index-based firing rule over markings stored as tuples of token counts."""

    def __init__(self, net: WorkflowNet):
        self.places = list(net.places)
        self.index = {p: i for i, p in enumerate(self.places)}
        self.tids = sorted(net.transitions, key=_id_key)
        self.pre = {t: [] for t in self.tids}
        self.post = {t: [] for t in self.tids}
        for s, t in net.arcs:
            if t in self.pre:
                self.pre[t].append(self.index[s])
            else:
                self.post[s].append(self.index[t])
        self.initial = self.marking({net.source: 1})
        self.final = self.marking({net.sink: 1})

    def marking(self, tokens: dict) -> tuple:
        m = [0] * len(self.places)
        for p, k in tokens.items():
            m[self.index[p]] = k
        return tuple(m)

    def enabled(self, marking: tuple):
        for t in self.tids:
            if all(marking[i] >= self.pre[t].count(i) for i in self.pre[t]):
                yield t

    def fire(self, marking: tuple, t: str) -> tuple:
        m = list(marking)
        for i in self.pre[t]:
            m[i] -= 1
        for i in self.post[t]:
            m[i] += 1
        return tuple(m)

    def show(self, marking: tuple) -> str:
        return "[" + ", ".join(f"{p}:{k}" if k > 1 else p for p, k in zip(self.places, marking) if k) + "]"


class _Reducer:
    """Classic liveness- and boundedness-preserving reduction rules.

    A workflow net is sound iff its short-circuited version is live and
    bounded, so applying the rules to the short-circuited net (never touching
    the short-circuit transition itself) keeps the soundness verdict. Arcs are
    multisets, stored as Counters keyed by place.
    """

    def __init__(self, net: WorkflowNet):
        self.source, self.sink = net.source, net.sink
        self.places = set(net.places)
        self.pre: dict[str, Counter] = {t: Counter() for t in net.transitions}
        self.post: dict[str, Counter] = {t: Counter() for t in net.transitions}
        for s, t in net.arcs:
            if t in self.pre:
                self.pre[t][s] += 1
            else:
                self.post[s][t] += 1

    def _io(self):
        ins = {p: Counter() for p in self.places}
        outs = {p: Counter() for p in self.places}
        for t in self.pre:
            for p, w in self.pre[t].items():
                outs[p][t] += w
            for p, w in self.post[t].items():
                ins[p][t] += w
        return ins, outs

    def _drop_transition(self, t: str) -> None:
        del self.pre[t], self.post[t]

    def _rename_place(self, old: str, new: str) -> None:
        for arcs in (*self.pre.values(), *self.post.values()):
            if old in arcs:
                arcs[new] += arcs.pop(old)
        self.places.discard(old)

    def step(self) -> bool:
        ins, outs = self._io()
        tids = sorted(self.pre, key=_id_key)
        # self-loop transitions on a place that has other traffic
        for t in tids:
            if sum(self.pre[t].values()) == 1 and self.pre[t] == self.post[t]:
                (p,) = self.pre[t]
                if len(ins[p]) > 1 and len(outs[p]) > 1:
                    self._drop_transition(t)
                    return True
        # parallel transitions
        seen: dict = {}
        for t in tids:
            sig = (frozenset(self.pre[t].items()), frozenset(self.post[t].items()))
            if sig in seen:
                self._drop_transition(t)
                return True
            seen[sig] = t
        # parallel places
        seen = {}
        for p in sorted(self.places, key=_id_key):
            if p in (self.source, self.sink) or not ins[p] or not outs[p]:
                continue
            sig = (frozenset(ins[p].items()), frozenset(outs[p].items()))
            if sig in seen:
                for arcs in (*self.pre.values(), *self.post.values()):
                    arcs.pop(p, None)
                self.places.discard(p)
                return True
            seen[sig] = p
        # series transitions: p is fed only by t1 and drained only by t2, t2 needs only p
        for p in sorted(self.places, key=_id_key):
            if p in (self.source, self.sink):
                continue
            if len(ins[p]) == 1 and len(outs[p]) == 1:
                (t1,), (t2,) = ins[p], outs[p]
                if t1 != t2 and ins[p][t1] == 1 and self.pre[t2] == Counter({p: 1}):
                    self.post[t1].pop(p)
                    self.post[t1].update(self.post[t2])
                    self._drop_transition(t2)
                    self.places.discard(p)
                    return True
        # series places: t moves a token from p1, which feeds only t, to p2
        for t in tids:
            if sum(self.pre[t].values()) != 1 or sum(self.post[t].values()) != 1:
                continue
            (p1,), (p2,) = self.pre[t], self.post[t]
            if p1 == p2 or p1 == self.sink or outs[p1] != Counter({t: 1}):
                continue
            if p1 == self.source:
                if p2 == self.sink or ins[p2] != Counter({t: 1}):
                    continue
                self._drop_transition(t)
                self._rename_place(p2, p1)
                return True
            self._drop_transition(t)
            self._rename_place(p1, p2)
            return True
        return False

    def result(self, net: WorkflowNet) -> WorkflowNet:
        while self.step():
            pass
        arcs = [(p, t) for t in self.pre for p, w in self.pre[t].items() for _ in range(w)]
        arcs += [(t, p) for t in self.post for p, w in self.post[t].items() for _ in range(w)]
        return WorkflowNet(
            places=sorted(self.places, key=_id_key),
            transitions={t: net.transitions[t] for t in sorted(self.pre, key=_id_key)},
            arcs=arcs,
            source=self.source,
            sink=self.sink,
        )


def reduce_net(net: WorkflowNet) -> WorkflowNet:
    """A smaller net with the same soundness verdict as ``net``."""
    _check_structure(net)
    return _Reducer(net).result(net)


def check_soundness(
    net: WorkflowNet, state_budget: int = DEFAULT_SOUNDNESS_BUDGET, reduce: bool = True
) -> SoundnessReport:
    """Explicit-state soundness check: option to complete, proper completion,
    no dead transitions. Exceeding ``state_budget`` markings is inconclusive.

    With ``reduce`` the state space of :func:`reduce_net`'s output is explored
    instead; witnesses then refer to the surviving places and transitions.
    """
    if state_budget < 1:
        raise ValueError("state budget must be >= 1")
    _check_structure(net)
    if reduce:
        net = reduce_net(net)
    firing = _Firing(net)
    sink = firing.index[net.sink]
    seen = {firing.initial}
    order = [firing.initial]
    succ: dict[tuple, list[tuple]] = {}
    fired: set[str] = set()
    queue = deque([firing.initial])
    while queue:
        m = queue.popleft()
        nexts = []
        for t in firing.enabled(m):
            fired.add(t)
            n = firing.fire(m, t)
            nexts.append(n)
            if n not in seen:
                if len(seen) >= state_budget:
                    return SoundnessReport("inconclusive", len(seen))
                seen.add(n)
                order.append(n)
                queue.append(n)
        succ[m] = nexts

    witnesses = []
    improper = [m for m in order if m[sink] >= 1 and m != firing.final]
    witnesses.extend(f"improper completion: {firing.show(m)}" for m in improper[:5])

    pred: dict[tuple, list[tuple]] = {m: [] for m in order}
    for m, nexts in succ.items():
        for n in nexts:
            pred[n].append(m)
    can_finish = set()
    if firing.final in pred:
        can_finish.add(firing.final)
        stack = [firing.final]
        while stack:
            for p in pred[stack.pop()]:
                if p not in can_finish:
                    can_finish.add(p)
                    stack.append(p)
    stuck = [m for m in order if m not in can_finish]
    witnesses.extend(f"cannot complete from: {firing.show(m)}" for m in stuck[:5])

    dead = [t for t in firing.tids if t not in fired]
    witnesses.extend(f"dead transition: {t} ({net.transitions[t] or 'silent'})" for t in dead)
    return SoundnessReport("unsound" if witnesses else "sound", len(seen), witnesses)


def firing_language(net: WorkflowNet, max_length: int, loop_bound: int) -> frozenset:
    """Visible label sequences of complete firing sequences, silent steps hidden.

    Each loop's redo transition may fire at most ``loop_bound`` times per
    firing of that loop's entry transition. The redo counters rule out
    silent cycles, so suffix languages can be memoized per state.
    """
    firing = _Firing(net)
    entry_slot = {enter: k for k, (enter, _) in enumerate(net.loops)}
    redo_slot = {redo: k for k, (_, redo) in enumerate(net.loops)}
    memo: dict = {}

    def suffixes(marking: tuple, counters: tuple, budget: int) -> frozenset:
        key = (marking, counters, budget)
        hit = memo.get(key)
        if hit is not None:
            return hit
        out = {()} if marking == firing.final else set()
        for t in firing.enabled(marking):
            label = net.transitions[t]
            cost = 0 if label is None else 1
            if cost > budget:
                continue
            new_counters = counters
            if t in entry_slot:
                k = entry_slot[t]
                new_counters = counters[:k] + (0,) + counters[k + 1 :]
            elif t in redo_slot:
                k = redo_slot[t]
                if counters[k] >= loop_bound:
                    continue
                new_counters = counters[:k] + (counters[k] + 1,) + counters[k + 1 :]
            rest = suffixes(firing.fire(marking, t), new_counters, budget - cost)
            out.update(rest if label is None else ((label,) + r for r in rest))
        memo[key] = result = frozenset(out)
        return result

    return suffixes(firing.initial, (0,) * len(net.loops), max_length)


# -- serialization ----------------------------------------------------------


def export_pnml(net: WorkflowNet, net_id: str = "net1") -> str:
    """PNML (P/T net) text; silent transitions have an empty name and an invisible flag."""
    root = ET.Element("pnml")
    xnet = ET.SubElement(root, "net", id=net_id, type=PTNET_TYPE)
    page = ET.SubElement(xnet, "page", id="page1")
    for p in sorted(net.places, key=_id_key):
        place = ET.SubElement(page, "place", id=p)
        ET.SubElement(ET.SubElement(place, "name"), "text").text = p
        if p == net.source:
            ET.SubElement(ET.SubElement(place, "initialMarking"), "text").text = "1"
    for t in sorted(net.transitions, key=_id_key):
        label = net.transitions[t]
        trans = ET.SubElement(page, "transition", id=t)
        ET.SubElement(ET.SubElement(trans, "name"), "text").text = label or ""
        if label is None:
            ET.SubElement(trans, "toolspecific", tool="ProM", version="6.4", activity="$invisible$", localNodeID=t)
    for k, (s, t) in enumerate(sorted(net.arcs, key=lambda a: (_id_key(a[0]), _id_key(a[1]))), start=1):
        ET.SubElement(page, "arc", id=f"a{k}", source=s, target=t)
    final = ET.SubElement(ET.SubElement(xnet, "finalmarkings"), "marking")
    ET.SubElement(ET.SubElement(final, "place", idref=net.sink), "text").text = "1"
    ET.indent(root, space="  ")
    return '<?xml version="1.0" encoding="UTF-8"?>\n' + ET.tostring(root, encoding="unicode") + "\n"


def export_net_dot(net: WorkflowNet, name: str = "wfnet") -> str:
    def q(text: str) -> str:
        return '"' + text.replace("\\", "\\\\").replace('"', '\\"') + '"'

    lines = [f"digraph {q(name)} {{", "  rankdir=LR;"]
    for p in sorted(net.places, key=_id_key):
        extra = ", style=filled, fillcolor=lightgrey" if p in (net.source, net.sink) else ""
        lines.append(f'  {q(p)} [shape=circle, label=""{extra}];')
    for t in sorted(net.transitions, key=_id_key):
        label = net.transitions[t]
        if label is None:
            lines.append(f'  {q(t)} [shape=box, style=filled, fillcolor=black, label="", width=0.2];')
        else:
            lines.append(f"  {q(t)} [shape=box, label={q(label)}];")
    for s, t in sorted(net.arcs, key=lambda a: (_id_key(a[0]), _id_key(a[1]))):
        lines.append(f"  {q(s)} -> {q(t)};")
    lines.append("}")
    return "\n".join(lines) + "\n"
