"""Ordinal arithmetic for the termination rank of the decomposition loop.

Ranks of marked witness graphs are ordinals w^2*a + w*b + c below w^3;
ranks of whole sequences are natural sums of w-powers of such exponents,
hence ordinals below w^(w^3).  Only comparison, natural sum, and the norm
are needed; no general epsilon_0 arithmetic.
"""

from __future__ import annotations

import re
from dataclasses import dataclass
from typing import TYPE_CHECKING, Iterable

if TYPE_CHECKING:
    from .klmst import MarkedWitnessGraph, MwgSequence


@dataclass(frozen=True, order=True)
class GraphRank:
    """Exponent w^2*a + w*b + c; lexicographic order on (a, b, c) matches
    the ordinal order."""

    a: int
    b: int
    c: int


def graph_rank_cmp(b1: GraphRank, b2: GraphRank) -> int:
    if b1 < b2:
        return -1
    if b1 > b2:
        return 1
    return 0


@dataclass(frozen=True)
class Ordinal:
    """Cantor normal form: descending (exponent, multiplicity) terms."""

    terms: tuple

    def __init__(self, terms: Iterable = ()):
        merged = {}
        for exp, mult in terms:
            if mult < 0:
                raise ValueError("multiplicities must be non-negative")
            if mult:
                merged[exp] = merged.get(exp, 0) + mult
        ordered = tuple(sorted(merged.items(), key=lambda t: t[0], reverse=True))
        object.__setattr__(self, "terms", ordered)

    def is_zero(self) -> bool:
        return not self.terms

    def __repr__(self):
        return format_ordinal(self)


ZERO = Ordinal(())


def omega_power(exp: GraphRank, mult: int = 1) -> Ordinal:
    return Ordinal(((exp, mult),))


def ord_cmp(alpha: Ordinal, beta: Ordinal) -> int:
    """CNF comparison: first differing (exponent, multiplicity) decides."""
    for (e1, m1), (e2, m2) in zip(alpha.terms, beta.terms):
        if e1 != e2:
            return -1 if e1 < e2 else 1
        if m1 != m2:
            return -1 if m1 < m2 else 1
    if len(alpha.terms) != len(beta.terms):
        return -1 if len(alpha.terms) < len(beta.terms) else 1
    return 0


def natural_sum(alpha: Ordinal, beta: Ordinal) -> Ordinal:
    return Ordinal(alpha.terms + beta.terms)


def ord_norm(alpha: Ordinal) -> int:
    """Largest constant occurring in the CNF (multiplicities and exponent parts)."""
    best = 0
    for exp, mult in alpha.terms:
        best = max(best, mult, exp.a, exp.b, exp.c)
    return best


def rank_graph(m: "MarkedWitnessGraph") -> GraphRank:
    """(d - |F|, |E|, 2d - |F_in| - |F_out|) for a marked witness graph."""
    d = len(m.in_mark)
    f = len(m.graph.root.support())
    return GraphRank(
        d - f,
        len(m.graph.edges),
        2 * d - len(m.in_mark.support()) - len(m.out_mark.support()),
    )


def rank_sequence(seq: "MwgSequence") -> Ordinal:
    """Natural sum of w^rank over the graphs of the sequence."""
    out = ZERO
    for m in seq.graphs:
        out = natural_sum(out, omega_power(rank_graph(m)))
    return out


def _format_exp(exp: GraphRank) -> str:
    parts = []
    if exp.a:
        parts.append("w^2" + (f"*{exp.a}" if exp.a != 1 else ""))
    if exp.b:
        parts.append("w" + (f"*{exp.b}" if exp.b != 1 else ""))
    if exp.c:
        parts.append(str(exp.c))
    return "+".join(parts) if parts else "0"


def format_ordinal(alpha: Ordinal) -> str:
    """Render as e.g. ``w^(w^2*2+w*2) + w^(w*3+1)*4`` with descending terms."""
    if alpha.is_zero():
        return "0"
    rendered = []
    for exp, mult in alpha.terms:
        if exp == GraphRank(0, 0, 0):
            rendered.append(str(mult))
            continue
        if exp == GraphRank(0, 0, 1):
            base = "w"
        else:
            base = f"w^({_format_exp(exp)})"
        rendered.append(base + (f"*{mult}" if mult != 1 else ""))
    return " + ".join(rendered)


_EXP_PART = re.compile(r"^(?:w\^2(?:\*(\d+))?|w(?:\*(\d+))?|(\d+))$")


def _parse_exp(text: str) -> GraphRank:
    a = b = c = 0
    for chunk in text.split("+"):
        chunk = chunk.strip()
        m = _EXP_PART.match(chunk)
        if not m:
            raise ValueError(f"bad exponent part {chunk!r}")
        if chunk.startswith("w^2"):
            a += int(m.group(1) or 1)
        elif chunk.startswith("w"):
            b += int(m.group(2) or 1)
        else:
            c += int(m.group(3))
    return GraphRank(a, b, c)


def parse_ordinal(text: str) -> Ordinal:
    """Inverse of :func:`format_ordinal` (whitespace tolerant)."""
    text = text.strip()
    if text == "0":
        return ZERO
    terms = []
    depth = 0
    chunk = ""
    chunks = []
    for ch in text:
        if ch == "(":
            depth += 1
        elif ch == ")":
            depth -= 1
        if ch == "+" and depth == 0:
            chunks.append(chunk)
            chunk = ""
        else:
            chunk += ch
    chunks.append(chunk)
    for raw in chunks:
        term = raw.strip()
        if not term:
            raise ValueError("empty term")
        mult = 1
        m = re.match(r"^(.*?)(?:\*(\d+))?$", term)
        base, mult_text = m.group(1), m.group(2)
        base = base.strip()
        if mult_text is not None and (base.endswith(")") or base == "w"):
            mult = int(mult_text)
        else:
            base = term
        if base.isdigit():
            terms.append((GraphRank(0, 0, 0), int(base)))
        elif base == "w":
            terms.append((GraphRank(0, 0, 1), mult))
        elif base.startswith("w^(") and base.endswith(")"):
            terms.append((_parse_exp(base[3:-1]), mult))
        else:
            raise ValueError(f"bad ordinal term {term!r}")
    return Ordinal(terms)
