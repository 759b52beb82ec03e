"""Finite representations of downward-closed sets used by the solver.

Configurations, transition letters, and prerun words are all well quasi
ordered, so their downward-closed subsets split into finitely many ideals.
This module provides the effective representations of those ideals:

* ``OmegaVec`` -- a vector over the naturals extended with a top element
  ``w``; denotes the set of configurations it dominates,
* ``PartialTransition`` -- a triple of omega-vectors around an action;
  denotes a set of concrete word letters,
* ``DownSet`` / ``Star`` / ``Single`` / ``Product`` -- regular-expression
  style representations of ideals of words,
* ``PrerunIdealRep`` -- source bound, word product, target bound.

Everything here is immutable and safe to share.  Component indices are
0-based throughout the package.
"""

from __future__ import annotations

import random
from dataclasses import dataclass
from typing import TYPE_CHECKING, Iterable, Sequence, Union

if TYPE_CHECKING:
    from .core import Action, Prerun


class _Omega:
    """Top element adjoined to the naturals; compares above every int."""

    __slots__ = ()
    _instance = None

    def __new__(cls):
        if cls._instance is None:
            cls._instance = super().__new__(cls)
        return cls._instance

    def __repr__(self):
        return "w"

    def __eq__(self, other):
        return other is self

    def __hash__(self):
        return hash("_omega_top_")

    def __lt__(self, other):
        if isinstance(other, int) or other is self:
            return False
        return NotImplemented

    def __le__(self, other):
        if other is self:
            return True
        if isinstance(other, int):
            return False
        return NotImplemented

    def __gt__(self, other):
        if isinstance(other, int):
            return True
        if other is self:
            return False
        return NotImplemented

    def __ge__(self, other):
        if isinstance(other, int) or other is self:
            return True
        return NotImplemented


OMEGA = _Omega()

Nat = Union[int, _Omega]


def val_leq(x: Nat, y: Nat) -> bool:
    """Order on N with w on top."""
    if y is OMEGA:
        return True
    return x is not OMEGA and x <= y


def val_add(x: Nat, k: int) -> Nat:
    """Addition where w absorbs."""
    return OMEGA if x is OMEGA else x + k


def val_min(x: Nat, y: Nat) -> Nat:
    if x is OMEGA:
        return y
    if y is OMEGA:
        return x
    return min(x, y)


def _check_entry(e) -> Nat:
    if e is OMEGA:
        return e
    if isinstance(e, bool) or not isinstance(e, int):
        raise ValueError(f"entries must be naturals or w, got {e!r}")
    if e < 0:
        raise ValueError(f"entries must be non-negative, got {e}")
    return e


class OmegaVec(tuple):
    """Vector over N extended with w; denotes the configurations it dominates."""

    __slots__ = ()

    def __new__(cls, entries: Iterable[Nat]):
        return super().__new__(cls, (_check_entry(e) for e in entries))

    @classmethod
    def of(cls, *entries: Nat) -> "OmegaVec":
        return cls(entries)

    @classmethod
    def top(cls, dim: int) -> "OmegaVec":
        return cls((OMEGA,) * dim)

    @classmethod
    def from_config(cls, config: Sequence[int]) -> "OmegaVec":
        return cls(config)

    def leq(self, other: Sequence[Nat]) -> bool:
        if len(self) != len(other):
            raise ValueError("dimension mismatch")
        return all(val_leq(a, b) for a, b in zip(self, other))

    def dominates_config(self, config: Sequence[int]) -> bool:
        return all(val_leq(c, v) for c, v in zip(config, self)) and len(config) == len(self)

    def support(self) -> frozenset:
        """Indices carrying finite values."""
        return frozenset(i for i, e in enumerate(self) if e is not OMEGA)

    def is_finite(self) -> bool:
        return all(e is not OMEGA for e in self)

    def as_config(self) -> tuple:
        if not self.is_finite():
            raise ValueError(f"{self!r} has w entries")
        return tuple(self)

    def project(self, indices: Iterable[int]) -> "OmegaVec":
        keep = set(indices)
        return OmegaVec(e if i in keep else OMEGA for i, e in enumerate(self))

    def refined(self, index: int, value: int) -> "OmegaVec":
        return OmegaVec(self[:index] + (value,) + self[index + 1:])

    def shift(self, delta: Sequence[int]):
        """Omega-absorbing addition; None when a finite entry would go negative."""
        out = []
        for e, d in zip(self, delta):
            if e is OMEGA:
                out.append(OMEGA)
            else:
                v = e + d
                if v < 0:
                    return None
                out.append(v)
        return OmegaVec(out)

    def instantiate(self, fill: int) -> tuple:
        return tuple(fill if e is OMEGA else e for e in self)

    def key(self) -> tuple:
        """Total-order key: finite values first, w above all naturals."""
        return tuple((1, 0) if e is OMEGA else (0, e) for e in self)

    def __repr__(self):
        return "(" + ",".join("w" if e is OMEGA else str(e) for e in self) + ")"

    def to_json(self) -> list:
        return ["w" if e is OMEGA else e for e in self]

    @classmethod
    def from_json(cls, data: list) -> "OmegaVec":
        return cls(OMEGA if e == "w" else e for e in data)


def omega_leq(u: OmegaVec, v: OmegaVec) -> bool:
    """Componentwise order with w on top; equivalently inclusion of the ideals."""
    return u.leq(v)


def project(v: OmegaVec, indices: Iterable[int]) -> OmegaVec:
    """Keep the listed components, send every other one to w."""
    return v.project(indices)


@dataclass(frozen=True)
class PartialTransition:
    """Triple of omega-vectors around an action; denotes a letter ideal.

    The triples occurring as witness-graph edges additionally satisfy
    ``dst = src + delta`` under omega arithmetic (see
    :func:`is_partial_transition`); link atoms between refined marks need
    not, since prerun letters are arbitrary triples.
    """

    src: OmegaVec
    action: "Action"
    dst: OmegaVec

    def leq(self, other: "PartialTransition") -> bool:
        return (
            self.action == other.action
            and self.src.leq(other.src)
            and self.dst.leq(other.dst)
        )

    def dominates_letter(self, letter) -> bool:
        """Does this ideal contain the concrete letter (u, a, v)?"""
        u, a, v = letter
        return (
            a == self.action
            and self.src.dominates_config(u)
            and self.dst.dominates_config(v)
        )

    def key(self) -> tuple:
        return (self.src.key(), self.action.name, self.dst.key())

    def __repr__(self):
        return f"{self.src!r}-{self.action.name}->{self.dst!r}"

    def to_json(self) -> dict:
        return {
            "src": self.src.to_json(),
            "action": self.action.name,
            "dst": self.dst.to_json(),
        }

    @classmethod
    def from_json(cls, data: dict, vas) -> "PartialTransition":
        return cls(
            OmegaVec.from_json(data["src"]),
            vas.action_named(data["action"]),
            OmegaVec.from_json(data["dst"]),
        )


def is_partial_transition(t) -> bool:
    """Check the omega-arithmetic identity dst = src + delta.

    Accepts a :class:`PartialTransition` or a raw (src, action, dst) triple.
    """
    if isinstance(t, PartialTransition):
        src, action, dst = t.src, t.action, t.dst
    else:
        src, action, dst = t
        if not isinstance(src, OmegaVec):
            src = OmegaVec(src)
        if not isinstance(dst, OmegaVec):
            dst = OmegaVec(dst)
    if len(src) != len(dst) or len(src) != len(action.delta):
        return False
    shifted = src.shift(action.delta)
    return shifted is not None and shifted == dst


def _max_antichain(vecs: Iterable[OmegaVec]) -> list:
    """Maximal elements under the product order, deduplicated, sorted."""
    vecs = list(dict.fromkeys(vecs))
    out = []
    for v in vecs:
        if any(v is not w and v.leq(w) and v != w for w in vecs):
            continue
        if v not in out:
            out.append(v)
    out.sort(key=lambda v: v.key())
    return out


def cu_vec(v: OmegaVec, x: Sequence[int]) -> list:
    """Maximal ideals of (configurations below v) minus (configurations above x).

    Empty result exactly when every configuration below v dominates x.
    """
    if len(v) != len(x):
        raise ValueError("dimension mismatch")
    candidates = []
    for i, xi in enumerate(x):
        if xi > 0:
            cap = xi - 1 if (v[i] is OMEGA or v[i] >= xi) else v[i]
            candidates.append(OmegaVec(v[:i] + (cap,) + v[i + 1:]))
    return _max_antichain(candidates)


class DownSet:
    """Finite antichain of letter ideals; denotes their union."""

    __slots__ = ("elements",)

    def __init__(self, elements: Iterable[PartialTransition] = ()):
        elems = list(dict.fromkeys(elements))
        filtered = [t for t in elems
                    if not any(t.leq(u) and t != u for u in elems)]
        filtered.sort(key=lambda t: t.key())
        self.elements = tuple(filtered)

    def __bool__(self):
        return bool(self.elements)

    def __eq__(self, other):
        return isinstance(other, DownSet) and self.elements == other.elements

    def __hash__(self):
        return hash(self.elements)

    def contains_ideal(self, t: PartialTransition) -> bool:
        return any(t.leq(u) for u in self.elements)

    def contains_letter(self, letter) -> bool:
        return any(u.dominates_letter(letter) for u in self.elements)

    def key(self) -> tuple:
        return tuple(t.key() for t in self.elements)

    def __repr__(self):
        return "{" + ", ".join(repr(t) for t in self.elements) + "}"


@dataclass(frozen=True)
class Star:
    """Atom D*: any number of letters, each from the downward-closed set D."""

    down: DownSet

    def key(self):
        return (0, self.down.key())


@dataclass(frozen=True)
class Single:
    """Atom I + epsilon: at most one letter, dominated by the ideal I."""

    ideal: PartialTransition

    def key(self):
        return (1, self.ideal.key())


Atom = Union[Star, Single]


@dataclass(frozen=True)
class Product:
    """Concatenation of atoms; denotes an ideal of words."""

    atoms: tuple

    def __init__(self, atoms: Iterable[Atom]):
        object.__setattr__(self, "atoms", tuple(atoms))

    def key(self):
        return tuple(a.key() for a in self.atoms)

    def __repr__(self):
        if not self.atoms:
            return "eps"
        parts = []
        for a in self.atoms:
            if isinstance(a, Star):
                parts.append(f"{a.down!r}*")
            else:
                parts.append(f"[{a.ideal!r}]")
        return "·".join(parts)

    def to_json(self) -> list:
        out = []
        for a in self.atoms:
            if isinstance(a, Star):
                out.append({"star": [t.to_json() for t in a.down.elements]})
            else:
                out.append({"single": a.ideal.to_json()})
        return out

    @classmethod
    def from_json(cls, data: list, vas) -> "Product":
        atoms = []
        for entry in data:
            if "star" in entry:
                atoms.append(Star(DownSet(
                    PartialTransition.from_json(t, vas) for t in entry["star"])))
            else:
                atoms.append(Single(PartialTransition.from_json(entry["single"], vas)))
        return cls(atoms)


def atom_leq(a1: Atom, a2: Atom) -> bool:
    """Language inclusion between atoms."""
    if isinstance(a1, Star):
        if isinstance(a2, Star):
            return all(a2.down.contains_ideal(t) for t in a1.down.elements)
        return not a1.down  # D* fits in I+eps only when it denotes {eps}
    if isinstance(a2, Star):
        return a2.down.contains_ideal(a1.ideal)
    return a1.ideal.leq(a2.ideal)


def word_in_product(word, product: Product) -> bool:
    """Membership of a concrete word in the ideal denoted by the product.

    Left-to-right scan tracking the minimal number of atoms needed for the
    consumed prefix; sound and complete because every atom admits epsilon
    and is closed under taking prefixes.
    """
    atoms = product.atoms
    progress = 0  # prefix so far fits into the first `progress` atoms
    for letter in word:
        progress = _advance(atoms, progress, letter, concrete=True)
        if progress is None:
            return False
    return True


def _advance(atoms, progress, letter, concrete: bool):
    """Minimal atom count after consuming one more letter, None if stuck.

    A star at 1-based position p absorbs the letter when p >= progress (it
    may still be open); a single needs p >= progress + 1 (the prefix must
    already fit strictly before it).  Scanning left to right, the first
    position that absorbs is the minimum.
    """
    for t, atom in enumerate(atoms):
        pos = t + 1
        if isinstance(atom, Star):
            if pos < progress:
                continue
            ok = (atom.down.contains_letter(letter) if concrete
                  else atom.down.contains_ideal(letter))
        else:
            if pos < progress + 1:
                continue
            ok = (atom.ideal.dominates_letter(letter) if concrete
                  else letter.leq(atom.ideal))
        if ok:
            return pos
    return None


def product_leq(p1: Product, p2: Product) -> bool:
    """Ideal inclusion between products.

    Atoms of ``p1`` are consumed left to right; a star atom iterates the
    worst single-letter advance to a fixpoint, which is reached within
    ``len(p2.atoms)`` rounds.
    """
    atoms2 = p2.atoms
    progress = 0
    for atom in p1.atoms:
        if isinstance(atom, Single):
            progress = _advance(atoms2, progress, atom.ideal, concrete=False)
            if progress is None:
                return False
        else:
            if not atom.down:
                continue
            while True:
                best = progress
                for t in atom.down.elements:
                    nxt = _advance(atoms2, progress, t, concrete=False)
                    if nxt is None:
                        return False
                    best = max(best, nxt)
                if best == progress:
                    break
                progress = best
    return True


def reduce_product(p: Product) -> Product:
    """Enforce the reduction conditions; the denoted ideal is unchanged.

    Drops empty stars and any atom absorbed by an adjacent star, until no
    rule applies.
    """
    atoms = list(p.atoms)
    changed = True
    while changed:
        changed = False
        atoms = [a for a in atoms if not (isinstance(a, Star) and not a.down)]
        for j in range(len(atoms)):
            right = atoms[j + 1] if j + 1 < len(atoms) else None
            left = atoms[j - 1] if j - 1 >= 0 else None
            if right is not None and isinstance(right, Star) and atom_leq(atoms[j], right):
                del atoms[j]
                changed = True
                break
            if left is not None and isinstance(left, Star) and atom_leq(atoms[j], left):
                del atoms[j]
                changed = True
                break
    return Product(atoms)


@dataclass(frozen=True)
class PrerunIdealRep:
    """Source bound x word product x target bound; denotes a prerun ideal."""

    src_bound: OmegaVec
    word_part: Product
    tgt_bound: OmegaVec

    def to_json(self) -> dict:
        return {
            "src_bound": self.src_bound.to_json(),
            "word": self.word_part.to_json(),
            "tgt_bound": self.tgt_bound.to_json(),
        }

    @classmethod
    def from_json(cls, data: dict, vas) -> "PrerunIdealRep":
        return cls(
            OmegaVec.from_json(data["src_bound"]),
            Product.from_json(data["word"], vas),
            OmegaVec.from_json(data["tgt_bound"]),
        )


def prerun_ideal_contains(rep: PrerunIdealRep, prerun: "Prerun") -> bool:
    """Does the prerun lie inside the represented ideal?"""
    if len(prerun.source) != len(rep.src_bound):
        raise ValueError("dimension mismatch")
    if not rep.src_bound.dominates_config(prerun.source):
        return False
    if not rep.tgt_bound.dominates_config(prerun.target):
        return False
    return word_in_product(prerun.word, rep.word_part)


def sample_prerun(rep: PrerunIdealRep, budget: int, seed: int) -> "Prerun":
    """Pseudo-random prerun inside the ideal; deterministic for a fixed seed.

    Each w entry is instantiated with a value <= budget, every star atom
    contributes at most `budget` letters.
    """
    from .core import Prerun

    rng = random.Random(seed)

    def inst(v: OmegaVec) -> tuple:
        return tuple(rng.randint(0, budget) if e is OMEGA else e for e in v)

    source = inst(rep.src_bound)
    word = []
    for atom in rep.word_part.atoms:
        if isinstance(atom, Star):
            if not atom.down or budget == 0:
                continue
            for _ in range(rng.randint(0, budget)):
                t = rng.choice(atom.down.elements)
                word.append((inst(t.src), t.action, inst(t.dst)))
        else:
            if budget > 0 and rng.random() < 0.5:
                t = atom.ideal
                word.append((inst(t.src), t.action, inst(t.dst)))
    target = inst(rep.tgt_bound)
    return Prerun(source, tuple(word), target)
