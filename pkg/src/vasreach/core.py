"""Vector addition systems: model, run semantics, and concrete oracles.

A VAS of dimension d is a finite set of named integer vectors (actions)
acting additively on configurations in N^d.  Preruns are (source, word,
target) triples whose word letters are arbitrary (config, action, config)
triples; runs are the connected preruns.  The embedding order compares
preruns by componentwise domination of endpoints and subword embedding of
letters with equal actions.

Besides the model this module houses the brute-force reachability oracle
used to cross-check the symbolic solver, and a bounded explorer for the
local run sets generated by a periodic set of transformer pairs.
"""

from __future__ import annotations

from collections import deque
from dataclasses import dataclass, field
from typing import Iterable, Optional, Sequence

from .ideals import OMEGA, OmegaVec, PartialTransition

Config = tuple


class VasError(Exception):
    """Base class for model-level errors."""


class InstanceParseError(VasError):
    def __init__(self, message: str, line: int):
        super().__init__(f"line {line}: {message}")
        self.line = line


class NegativeComponentError(VasError):
    """Applying an action would drive a component below zero."""

    def __init__(self, index: int):
        super().__init__(f"component {index} would become negative")
        self.index = index


class GeneratorNotValidatedError(VasError):
    """A transformer generator pair has no connecting run within bounds."""


@dataclass(frozen=True)
class Action:
    name: str
    delta: tuple

    def __post_init__(self):
        object.__setattr__(self, "delta", tuple(int(d) for d in self.delta))

    def __repr__(self):
        return f"{self.name}{self.delta}"


@dataclass(frozen=True)
class Vas:
    dim: int
    actions: tuple

    def __post_init__(self):
        object.__setattr__(self, "actions", tuple(self.actions))
        if self.dim < 1:
            raise ValueError("dimension must be at least 1")
        names = [a.name for a in self.actions]
        if len(set(names)) != len(names):
            raise ValueError("action names must be distinct")
        for a in self.actions:
            if len(a.delta) != self.dim:
                raise ValueError(f"action {a.name} has arity {len(a.delta)}, expected {self.dim}")

    def action_named(self, name: str) -> Action:
        for a in self.actions:
            if a.name == name:
                return a
        raise KeyError(name)


@dataclass(frozen=True)
class Instance:
    vas: Vas
    source: Config
    target: Config

    def __post_init__(self):
        object.__setattr__(self, "source", tuple(self.source))
        object.__setattr__(self, "target", tuple(self.target))
        for c in (self.source, self.target):
            if len(c) != self.vas.dim:
                raise ValueError("endpoint dimension mismatch")
            if any(x < 0 for x in c):
                raise ValueError("endpoints must be natural vectors")


@dataclass(frozen=True)
class Prerun:
    """(source, word, target); the word letters need not chain."""

    source: Config
    word: tuple
    target: Config

    def __post_init__(self):
        object.__setattr__(self, "source", tuple(self.source))
        object.__setattr__(self, "target", tuple(self.target))
        object.__setattr__(self, "word", tuple(
            (tuple(u), a, tuple(v)) for (u, a, v) in self.word))

    def label(self) -> tuple:
        return tuple(a for (_, a, _) in self.word)

    def __repr__(self):
        names = "".join(a.name for a in self.label())
        return f"{self.source}-[{names}]->{self.target}"


def parse_instance(text) -> Instance:
    """Parse the line-oriented instance format.

    Directives: ``dim d``, ``action name d-integers``, ``init d-naturals``,
    ``target d-naturals``.  ``#`` starts a comment.
    """
    if isinstance(text, bytes):
        text = text.decode("utf-8")
    dim = None
    actions = []
    init = None
    target = None
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        tokens = line.split()
        head = tokens[0]

        def ints(parts, what):
            out = []
            for p in parts:
                try:
                    out.append(int(p))
                except ValueError:
                    raise InstanceParseError(f"bad integer {p!r} in {what}", lineno)
            return tuple(out)

        if head == "dim":
            if dim is not None:
                raise InstanceParseError("duplicate dim directive", lineno)
            if len(tokens) != 2:
                raise InstanceParseError("dim takes a single integer", lineno)
            (dim,) = ints(tokens[1:], "dim")
            if dim < 1:
                raise InstanceParseError("dimension must be at least 1", lineno)
        elif head == "action":
            if dim is None:
                raise InstanceParseError("dim must come before actions", lineno)
            if len(tokens) < 2:
                raise InstanceParseError("action needs a name", lineno)
            name = tokens[1]
            if any(a.name == name for a in actions):
                raise InstanceParseError(f"duplicate action name {name!r}", lineno)
            delta = ints(tokens[2:], f"action {name}")
            if len(delta) != dim:
                raise InstanceParseError(
                    f"action {name} has {len(delta)} components, expected {dim}", lineno)
            actions.append(Action(name, delta))
        elif head in ("init", "target"):
            if dim is None:
                raise InstanceParseError(f"dim must come before {head}", lineno)
            vec = ints(tokens[1:], head)
            if len(vec) != dim:
                raise InstanceParseError(
                    f"{head} has {len(vec)} components, expected {dim}", lineno)
            if any(x < 0 for x in vec):
                raise InstanceParseError(f"{head} must be a natural vector", lineno)
            if head == "init":
                if init is not None:
                    raise InstanceParseError("duplicate init", lineno)
                init = vec
            else:
                if target is not None:
                    raise InstanceParseError("duplicate target", lineno)
                target = vec
        else:
            raise InstanceParseError(f"unknown directive {head!r}", lineno)
    if dim is None:
        raise InstanceParseError("missing dim directive", 0)
    if init is None:
        raise InstanceParseError("missing init directive", 0)
    if target is None:
        raise InstanceParseError("missing target directive", 0)
    return Instance(Vas(dim, tuple(actions)), init, target)


def apply_action(config: Config, action: Action) -> Config:
    """config + delta, componentwise; raises when a component would go negative."""
    if len(config) != len(action.delta):
        raise ValueError("dimension mismatch")
    out = []
    for i, (c, d) in enumerate(zip(config, action.delta)):
        v = c + d
        if v < 0:
            raise NegativeComponentError(i)
        out.append(v)
    return tuple(out)


def run_from_actions(source: Config, actions: Iterable[Action]) -> Prerun:
    """Connected run obtained by chaining the actions from the source."""
    word = []
    cur = tuple(source)
    for a in actions:
        nxt = apply_action(cur, a)
        word.append((cur, a, nxt))
        cur = nxt
    return Prerun(source, tuple(word), cur)


def _is_connected(prerun: Prerun) -> bool:
    """Letters are transitions that chain, with matching endpoints."""
    if not prerun.word:
        return prerun.source == prerun.target
    prev = None
    for (u, a, v) in prerun.word:
        if len(u) != len(a.delta) or len(v) != len(a.delta):
            return False
        if any(x < 0 for x in u) or any(x < 0 for x in v):
            return False
        if tuple(x + d for x, d in zip(u, a.delta)) != v:
            return False
        if prev is not None and prev != u:
            return False
        prev = v
    return prerun.word[0][0] == prerun.source and prerun.word[-1][2] == prerun.target


def validate_run(prerun: Prerun, vas: Vas) -> bool:
    """True when the prerun is a run of the given VAS."""
    if len(prerun.source) != vas.dim or len(prerun.target) != vas.dim:
        return False
    if any(a not in vas.actions for (_, a, _) in prerun.word):
        return False
    return _is_connected(prerun)


@dataclass(frozen=True)
class EmbeddingWitness:
    """Strictly increasing map from the smaller word into the larger one."""

    positions: tuple

    def __post_init__(self):
        object.__setattr__(self, "positions", tuple(self.positions))


def _letter_leq(letter, big) -> bool:
    (u, a, v), (u2, a2, v2) = letter, big
    return (a == a2
            and all(x <= y for x, y in zip(u, u2))
            and all(x <= y for x, y in zip(v, v2)))


def _config_leq(c1, c2) -> bool:
    return all(x <= y for x, y in zip(c1, c2))


def embeds(p1: Prerun, p2: Prerun) -> Optional[EmbeddingWitness]:
    """Witness that p1 embeds into p2, or None.

    Leftmost-greedy matching; greedy is complete for subsequence embedding
    with componentwise letter domination.
    """
    if len(p1.source) != len(p2.source):
        raise ValueError("dimension mismatch")
    if not (_config_leq(p1.source, p2.source) and _config_leq(p1.target, p2.target)):
        return None
    positions = []
    j = 0
    for letter in p1.word:
        while j < len(p2.word) and not _letter_leq(letter, p2.word[j]):
            j += 1
        if j == len(p2.word):
            return None
        positions.append(j)
        j += 1
    return EmbeddingWitness(tuple(positions))


def verify_embedding(p1: Prerun, p2: Prerun, w: EmbeddingWitness) -> bool:
    if not (_config_leq(p1.source, p2.source) and _config_leq(p1.target, p2.target)):
        return False
    if len(w.positions) != len(p1.word):
        return False
    prev = -1
    for letter, pos in zip(p1.word, w.positions):
        if pos <= prev or pos >= len(p2.word):
            return False
        if not _letter_leq(letter, p2.word[pos]):
            return False
        prev = pos
    return True


def _vec_add(a, b):
    return tuple(x + y for x, y in zip(a, b))


def _vec_sub(a, b):
    return tuple(x - y for x, y in zip(a, b))


def amalgamate(r0: Prerun, r1: Prerun, r2: Prerun,
               w1: EmbeddingWitness, w2: EmbeddingWitness) -> Prerun:
    """Interleave the surplus of r1 and r2 around each r0 transition.

    Both witnesses must embed the run r0 into the runs r1 and r2; the
    result is a run that dominates both, with offsets summing at every
    matched transition.
    """
    if not _is_connected(r0):
        raise ValueError("r0 must be a run")
    if not verify_embedding(r0, r1, w1) or not verify_embedding(r0, r2, w2):
        raise ValueError("witness invalid")

    k = len(r0.word)

    def segments(r: Prerun, w: EmbeddingWitness):
        segs = []
        prev = 0
        for p in w.positions:
            segs.append(r.word[prev:p])
            prev = p + 1
        segs.append(r.word[prev:])
        return segs

    def offsets(r: Prerun, w: EmbeddingWitness):
        off = [_vec_sub(r.source, r0.source)]
        for j, p in enumerate(w.positions):
            off.append(_vec_sub(r.word[p][0], r0.word[j][0]))
        off.append(_vec_sub(r.target, r0.target))
        return off

    segs1, segs2 = segments(r1, w1), segments(r2, w2)
    off1, off2 = offsets(r1, w1), offsets(r2, w2)

    def shift(letters, off):
        return [(_vec_add(u, off), a, _vec_add(v, off)) for (u, a, v) in letters]

    word = []
    for j in range(k + 1):
        word.extend(shift(segs1[j], off2[j]))
        word.extend(shift(segs2[j], off1[j + 1]))
        if j < k:
            both = _vec_add(off1[j + 1], off2[j + 1])
            u, a, v = r0.word[j]
            word.append((_vec_add(u, both), a, _vec_add(v, both)))
    source = _vec_add(r0.source, _vec_add(off1[0], off2[0]))
    target = _vec_add(r0.target, _vec_add(off1[k + 1], off2[k + 1]))
    return Prerun(source, tuple(word), target)


REACHABLE = "reachable"
UNREACHABLE = "unreachable"
UNKNOWN = "unknown"


@dataclass(frozen=True)
class OracleResult:
    verdict: str
    run: Optional[Prerun] = None


def bfs_oracle(inst: Instance, max_norm: int, max_len: int) -> OracleResult:
    """Breadth-first reachability restricted to configurations of norm <= max_norm.

    Unreachability is certified only when the explored set is closed under
    every action, never by running out of length budget.  The returned run
    is the lexicographically least shortest one under the action order of
    the VAS (actions are tried in declaration order).
    """
    if max_norm < max(max(inst.source, default=0), max(inst.target, default=0)):
        raise ValueError("max_norm must cover both endpoints")
    if inst.source == inst.target:
        return OracleResult(REACHABLE, Prerun(inst.source, (), inst.target))
    parents = {inst.source: None}
    frontier = [inst.source]
    truncated = False
    found = None
    for _ in range(max_len):
        nxt = []
        for c in frontier:
            for a in inst.vas.actions:
                try:
                    c2 = apply_action(c, a)
                except NegativeComponentError:
                    continue
                if max(c2) > max_norm:
                    truncated = True
                    continue
                if c2 not in parents:
                    parents[c2] = (c, a)
                    if c2 == inst.target:
                        found = c2
                        break
                    nxt.append(c2)
            if found:
                break
        if found:
            actions = []
            cur = found
            while parents[cur] is not None:
                prev, a = parents[cur]
                actions.append(a)
                cur = prev
            actions.reverse()
            return OracleResult(REACHABLE, run_from_actions(inst.source, actions))
        frontier = nxt
        if not frontier:
            break
    if frontier:
        return OracleResult(UNKNOWN)
    return OracleResult(UNKNOWN) if truncated else OracleResult(UNREACHABLE)


@dataclass(frozen=True)
class LocalSummary:
    """Observed shape of a local run set, projected on its stable components.

    ``truncated`` flags that an exploration bound was hit, in which case
    the reported stable set is only the best desk-scale guess.
    """

    F_gamma: frozenset
    s_gamma: OmegaVec
    s_in: OmegaVec
    s_out: OmegaVec
    states: frozenset
    edges: frozenset
    truncated: bool


def _bounded_distances(vas: Vas, start: Config, max_norm: int, max_len: int,
                       backward: bool):
    """Shortest step counts from start, staying within the norm box."""
    dist = {tuple(start): 0}
    frontier = [tuple(start)]
    truncated = False
    depth = 0
    while frontier and depth < max_len:
        depth += 1
        nxt = []
        for c in frontier:
            for a in vas.actions:
                if backward:
                    c2 = tuple(x - d for x, d in zip(c, a.delta))
                    if any(x < 0 for x in c2):
                        continue
                else:
                    try:
                        c2 = apply_action(c, a)
                    except NegativeComponentError:
                        continue
                if max(c2) > max_norm:
                    truncated = True
                    continue
                if c2 not in dist:
                    dist[c2] = depth
                    nxt.append(c2)
        frontier = nxt
    if frontier:
        truncated = True
    return dist, truncated


def explore_local(vas: Vas, c: Config, generators, max_norm: int, max_len: int,
                  max_coeff: int) -> LocalSummary:
    """Bounded enumeration of the runs c+u -> c+v over the periodic closure
    of the generator pairs.

    Every generator must itself admit a connecting run within the bounds.
    Components are reported stable when their observed value sets did not
    change between coefficient caps max_coeff-1 and max_coeff.
    """
    c = tuple(c)
    generators = [(tuple(u), tuple(v)) for (u, v) in generators]
    for (u, v) in generators:
        if len(u) != vas.dim or len(v) != vas.dim:
            raise ValueError("generator dimension mismatch")
        if any(x < 0 for x in u) or any(x < 0 for x in v):
            raise ValueError("generator pairs must be natural vectors")
        probe = bfs_oracle(
            Instance(vas, _vec_add(c, u), _vec_add(c, v)),
            max(max_norm, max(_vec_add(c, u)), max(_vec_add(c, v))), max_len)
        if probe.verdict != REACHABLE:
            raise GeneratorNotValidatedError(
                f"no run from c+{u} to c+{v} within bounds")

    def closure(cap: int):
        pairs = {((0,) * vas.dim, (0,) * vas.dim)}
        for (u, v) in generators:
            new = set()
            for (pu, pv) in pairs:
                for k in range(cap + 1):
                    new.add((tuple(a + k * b for a, b in zip(pu, u)),
                             tuple(a + k * b for a, b in zip(pv, v))))
            pairs = new
        return pairs

    truncated = False
    pair_configs = {}
    pair_edges = {}

    def analyze(pair):
        nonlocal truncated
        u, v = pair
        src, tgt = _vec_add(c, u), _vec_add(c, v)
        if max(src) > max_norm or max(tgt) > max_norm:
            truncated = True
            return set(), set()
        fwd, t1 = _bounded_distances(vas, src, max_norm, max_len, backward=False)
        bwd, t2 = _bounded_distances(vas, tgt, max_norm, max_len, backward=True)
        truncated = truncated or t1 or t2
        configs = {q for q in fwd if q in bwd and fwd[q] + bwd[q] <= max_len}
        edges = set()
        for q in configs:
            for a in vas.actions:
                try:
                    q2 = apply_action(q, a)
                except NegativeComponentError:
                    continue
                if q2 in bwd and fwd[q] + 1 + bwd[q2] <= max_len and max(q2) <= max_norm:
                    edges.add((q, a, q2))
        return configs, edges

    big = closure(max_coeff)
    small = closure(max_coeff - 1) if max_coeff > 0 else big
    q_small, q_big = set(), set()
    t_big = set()
    for pair in sorted(big):
        configs, edges = analyze(pair)
        q_big |= configs
        t_big |= edges
        if pair in small:
            q_small |= configs

    if max_coeff == 0:
        stable = frozenset(range(vas.dim))
    else:
        stable = frozenset(
            i for i in range(vas.dim)
            if {q[i] for q in q_big} == {q[i] for q in q_small})

    f_in = frozenset(i for i in range(vas.dim)
                     if all(u[i] == 0 for (u, _) in generators))
    f_out = frozenset(i for i in range(vas.dim)
                      if all(v[i] == 0 for (_, v) in generators))
    proj = lambda q: OmegaVec.from_config(q).project(stable)
    states = frozenset(proj(q) for q in q_big)
    edges = frozenset(
        PartialTransition(proj(q), a, proj(q2)) for (q, a, q2) in t_big)
    cvec = OmegaVec.from_config(c)
    return LocalSummary(
        F_gamma=stable,
        s_gamma=cvec.project(stable),
        s_in=cvec.project(f_in),
        s_out=cvec.project(f_out),
        states=states,
        edges=edges,
        truncated=truncated,
    )


def run_to_json(run: Prerun) -> dict:
    """Runs serialize with intermediate configurations recomputed, not stored."""
    return {
        "source": list(run.source),
        "steps": [{"action": a.name} for a in run.label()],
        "target": list(run.target),
    }


def run_from_json(data: dict, vas: Vas) -> Prerun:
    source = tuple(data["source"])
    actions = [vas.action_named(step["action"]) for step in data["steps"]]
    run = run_from_actions(source, actions)
    if run.target != tuple(data["target"]):
        raise ValueError("stored target does not match the recomputed one")
    return run
