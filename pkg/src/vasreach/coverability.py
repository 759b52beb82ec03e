"""Karp-Miller covers over state-labelled vector addition systems.

Witness graphs are viewed as finite automata whose edges carry counter
updates; the classical tree construction with acceleration computes, per
state, the maximal omega-markings whose downward closure equals the cover
of the reachable set.  On top of the cover sit the pumpability tests for
marked witness graphs and the bounded-component certificate used by the
unpumpable decomposition case.
"""

from __future__ import annotations

import functools
from collections import deque
from dataclasses import dataclass, field
from typing import Iterable, Optional

from .core import Action
from .ideals import OMEGA, val_leq

_WITNESS_NODE_CAP = 2_000_000


class CertificateNotFoundError(RuntimeError):
    """No single component is bounded by the cover intersection.

    Surfaced, never silently ignored: it would mean the unpumpable
    decomposition case cannot proceed on this graph.
    """


@dataclass(frozen=True)
class StateVas:
    """Finite automaton with counter updates on a fixed subset of components.

    ``nodes`` fixes the canonical iteration order; values are tuples
    aligned with ``counters``.
    """

    nodes: tuple
    edges: tuple
    counters: tuple

    def __init__(self, nodes: Iterable, edges: Iterable, counters: Iterable[int]):
        nodes = tuple(nodes)
        edges = tuple(edges)
        node_set = set(nodes)
        for (u, a, v) in edges:
            if u not in node_set or v not in node_set:
                raise ValueError("edge endpoints must be nodes")
        object.__setattr__(self, "nodes", nodes)
        object.__setattr__(self, "edges", edges)
        object.__setattr__(self, "counters", tuple(counters))

    def out_edges(self, node):
        return tuple(e for e in self.edges if e[0] == node)

    def step(self, value: tuple, action: Action) -> Optional[tuple]:
        out = []
        for pos, i in enumerate(self.counters):
            x = value[pos]
            if x is OMEGA:
                out.append(OMEGA)
                continue
            x += action.delta[i]
            if x < 0:
                return None
            out.append(x)
        return tuple(out)

    def reversed(self):
        """Edge-reversed copy with negated deltas; maps new edges to old."""
        back = {}
        redges = []
        for (u, a, v) in self.edges:
            ra = Action(a.name, tuple(-d for d in a.delta))
            redge = (v, ra, u)
            redges.append(redge)
            back[redge] = (u, a, v)
        return StateVas(self.nodes, redges, self.counters), back


@dataclass
class CoverNode:
    state: object
    value: tuple
    parent: Optional["CoverNode"] = None
    edge: Optional[tuple] = None
    accelerated: bool = False
    children: list = field(default_factory=list)

    def ancestors(self):
        cur = self.parent
        while cur is not None:
            yield cur
            cur = cur.parent


def _value_leq(a: tuple, b: tuple) -> bool:
    return all(val_leq(x, y) for x, y in zip(a, b))


def km_tree(g: StateVas, init) -> CoverNode:
    """Karp-Miller tree with acceleration.

    A child strictly dominating an ancestor at the same state gets the
    strictly increased components lifted to w; a child equal to an
    ancestor at the same state is a leaf.
    """
    state0, value0 = init
    root = CoverNode(state0, tuple(value0))
    queue = deque([root])
    while queue:
        node = queue.popleft()
        for edge in g.out_edges(node.state):
            value = g.step(node.value, edge[1])
            if value is None:
                continue
            accelerated = False
            while True:
                lifted = None
                for anc in [node] + list(node.ancestors()):
                    if anc.state == edge[2] and _value_leq(anc.value, value) \
                            and anc.value != value:
                        lifted = tuple(
                            OMEGA if (a is not OMEGA and (v is OMEGA or v > a)) else v
                            for a, v in zip(anc.value, value))
                        break
                if lifted is None or lifted == value:
                    break
                value = lifted
                accelerated = True
            child = CoverNode(edge[2], value, node, edge, accelerated)
            node.children.append(child)
            repeat = any(anc.state == child.state and anc.value == child.value
                         for anc in child.ancestors())
            if not repeat:
                queue.append(child)
    return root


def _tree_nodes(root: CoverNode):
    stack = [root]
    while stack:
        node = stack.pop()
        yield node
        stack.extend(reversed(node.children))


def km_cover(g: StateVas, init) -> tuple:
    """Per-state maximal omega-markings of the Karp-Miller tree."""
    root = km_tree(g, init)
    by_state = {}
    for node in _tree_nodes(root):
        by_state.setdefault(node.state, []).append(node)
    out = []
    for state in g.nodes:
        nodes = by_state.get(state, [])
        seen = set()
        for node in nodes:
            if node.value in seen:
                continue
            if any(_value_leq(node.value, other.value) and node.value != other.value
                   for other in nodes):
                continue
            seen.add(node.value)
            out.append(node)
    return tuple(out)


@dataclass(frozen=True)
class PathWitness:
    """Concrete edge path; replayable from any large enough instantiation."""

    edges: tuple

    @property
    def actions(self) -> tuple:
        return tuple(a for (_, a, _) in self.edges)


def replay(g: StateVas, init, witness: PathWitness, fill: int = 0):
    """Walk the witness from the initial marking; returns the final
    (state, value) or None when a counter would go negative.

    ``fill`` > 0 instantiates w entries of the initial value; otherwise
    they stay symbolic and absorb every update.
    """
    state, value = init
    if fill > 0:
        value = tuple(fill if v is OMEGA else v for v in value)
    else:
        value = tuple(value)
    for (u, a, v) in witness.edges:
        if u != state:
            return None
        value = g.step(value, a)
        if value is None:
            return None
        state = v
    return state, value


def coverable(g: StateVas, init, target) -> Optional[PathWitness]:
    """Edge path from the initial marking covering the target, or None.

    Decided on the Karp-Miller cover; the witness itself is found by a
    concrete forward search with domination pruning, which terminates
    because the cover already certifies coverability.
    """
    t_state, t_value = target
    s_state, s_value = init
    for tv, sv in zip(t_value, s_value):
        if tv is OMEGA and sv is not OMEGA:
            raise ValueError("target has w above a finite initial component")
    if not any(node.state == t_state and _value_leq(t_value, node.value)
               for node in km_cover(g, init)):
        return None

    def covered(state, value):
        return state == t_state and _value_leq(t_value, value)

    start = (s_state, tuple(s_value))
    if covered(*start):
        return PathWitness(())
    parents = {start: None}
    maximal = {s_state: [tuple(s_value)]}
    queue = deque([start])
    explored = 0
    while queue:
        state, value = queue.popleft()
        for edge in g.out_edges(state):
            value2 = g.step(value, edge[1])
            if value2 is None:
                continue
            key = (edge[2], value2)
            if key in parents:
                continue
            kept = maximal.setdefault(edge[2], [])
            if any(_value_leq(value2, old) for old in kept):
                continue
            kept[:] = [old for old in kept if not _value_leq(old, value2)]
            kept.append(value2)
            parents[key] = ((state, value), edge)
            if covered(*key):
                path = []
                cur = key
                while parents[cur] is not None:
                    prev, e = parents[cur]
                    path.append(e)
                    cur = prev
                path.reverse()
                return PathWitness(tuple(path))
            queue.append(key)
            explored += 1
            if explored > _WITNESS_NODE_CAP:
                raise RuntimeError("witness extraction exceeded the node cap")
    raise RuntimeError("cover claimed coverable but concrete search failed")


@dataclass(frozen=True)
class PumpWord:
    """Cycle label with its total counter effect and the edge path taken."""

    actions: tuple
    effect: tuple
    edges: tuple = ()


def _graph_state_vas(m, counters) -> StateVas:
    g = m.graph
    edges = tuple((e.src, e.action, e.dst) for e in g.edges)
    return StateVas(g.nodes, edges, tuple(sorted(counters)))


def _mark_value(mark, counters) -> tuple:
    return tuple(mark[i] for i in counters)


@functools.lru_cache(maxsize=None)
def pumpable_forward(m) -> Optional[PumpWord]:
    """Cycle on the root that strictly grows every component the root
    leaves unconstrained, starting from the input mark.

    When the mark constrains nothing beyond the root the empty word pumps.
    """
    f = m.graph.root.support()
    f_in = m.in_mark.support()
    required = sorted(f_in - f)
    d = len(m.in_mark)
    if not required:
        return PumpWord((), (0,) * d)
    g = _graph_state_vas(m, f_in)
    init_value = _mark_value(m.in_mark, g.counters)
    target_value = tuple(v + 1 if g.counters[pos] in required else v
                         for pos, v in enumerate(init_value))
    witness = coverable(g, (m.graph.root, init_value), (m.graph.root, target_value))
    if witness is None:
        return None
    effect = [0] * d
    for a in witness.actions:
        for i in range(d):
            effect[i] += a.delta[i]
    return PumpWord(witness.actions, tuple(effect), witness.edges)


@functools.lru_cache(maxsize=None)
def pumpable_backward(m) -> Optional[PumpWord]:
    """Same test on the reversed graph with the output mark."""
    f = m.graph.root.support()
    f_out = m.out_mark.support()
    required = sorted(f_out - f)
    d = len(m.out_mark)
    if not required:
        return PumpWord((), (0,) * d)
    g = _graph_state_vas(m, f_out)
    rg, back = g.reversed()
    init_value = _mark_value(m.out_mark, rg.counters)
    target_value = tuple(v + 1 if rg.counters[pos] in required else v
                         for pos, v in enumerate(init_value))
    witness = coverable(rg, (m.graph.root, init_value), (m.graph.root, target_value))
    if witness is None:
        return None
    forward_edges = [back[e] for e in reversed(witness.edges)]
    actions = tuple(a for (_, a, _) in forward_edges)
    effect = [0] * d
    for a in actions:
        for i in range(d):
            effect[i] += a.delta[i]
    return PumpWord(actions, tuple(effect), tuple(forward_edges))


def _cover_sups(cover, counters):
    """Per-state, per-counter supremum over the cover nodes."""
    sups = {}
    for node in cover:
        cur = sups.setdefault(node.state, [0] * len(counters))
        for pos, v in enumerate(node.value):
            if cur[pos] is OMEGA:
                continue
            if v is OMEGA:
                cur[pos] = OMEGA
            else:
                cur[pos] = max(cur[pos], v)
    return sups


@functools.lru_cache(maxsize=None)
def bounded_component_certificate(m) -> tuple:
    """Component bounded along every run of the marked graph, with its bound.

    Intersects the forward cover from the input mark with the backward
    cover from the output mark: a configuration on a run is dominated by
    both at its state.  Raises CertificateNotFoundError when no component
    is bounded in the intersection.
    """
    f = m.graph.root.support()
    f_in = m.in_mark.support()
    f_out = m.out_mark.support()
    candidates = sorted((f_in | f_out) - f)
    if not candidates:
        raise CertificateNotFoundError("no component to certify")
    counters = tuple(sorted(f_in | f_out))
    g = _graph_state_vas(m, counters)
    fwd_init = tuple(m.in_mark[i] for i in counters)
    fwd = _cover_sups(km_cover(g, (m.graph.root, fwd_init)), counters)
    rg, _ = g.reversed()
    bwd_init = tuple(m.out_mark[i] for i in counters)
    bwd = _cover_sups(km_cover(rg, (m.graph.root, bwd_init)), counters)
    states = [q for q in g.nodes if q in fwd and q in bwd]
    if not states:
        return (candidates[0], 0)  # no run traverses the graph at all
    pos_of = {i: counters.index(i) for i in candidates}
    for i in candidates:
        pos = pos_of[i]
        bounds = []
        ok = True
        for q in states:
            a, b = fwd[q][pos], bwd[q][pos]
            cap = b if a is OMEGA else (a if b is OMEGA else min(a, b))
            if cap is OMEGA:
                ok = False
                break
            bounds.append(cap)
        if ok:
            return (i, max(bounds) if bounds else 0)
    raise CertificateNotFoundError(
        f"every candidate component unbounded in the cover intersection "
        f"(candidates {candidates})")


def km_tree_dot(g: StateVas, init, node_label=str) -> str:
    """DOT rendering of the Karp-Miller tree; accelerated nodes doubled."""
    root = km_tree(g, init)
    lines = ["digraph km {", "  node [shape=box];"]
    ids = {}
    for idx, node in enumerate(_tree_nodes(root)):
        ids[id(node)] = idx
        value = "(" + ",".join("w" if v is OMEGA else str(v) for v in node.value) + ")"
        style = " peripheries=2" if node.accelerated else ""
        lines.append(f'  n{idx} [label="{node_label(node.state)} {value}"{style}];')
    for node in _tree_nodes(root):
        for child in node.children:
            label = child.edge[1].name
            lines.append(f'  n{ids[id(node)]} -> n{ids[id(child)]} [label="{label}"];')
    lines.append("}")
    return "\n".join(lines)
