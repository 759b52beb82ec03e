"""Linear equation systems over the naturals.

The perfectness conditions on a sequence reduce to questions about the
solution set of an integer linear system solved over N: is it non-empty,
is a coordinate unbounded, what is the exact supremum of a bounded
coordinate, is there a solution positive on a prescribed set of
coordinates.  All four are answered from the Hilbert basis (minimal
homogeneous and inhomogeneous solutions), computed by Contejean-Devie
saturation.  All arithmetic is exact.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Iterable, Optional, Sequence

DEFAULT_MAX_NODES = 200_000


class DiophantineBudgetError(RuntimeError):
    """The basis search exceeded its node budget; never a wrong answer."""


@dataclass(frozen=True)
class NatLinearSystem:
    matrix: tuple
    rhs: tuple
    var_names: tuple

    def __init__(self, matrix: Iterable[Sequence[int]], rhs: Sequence[int],
                 var_names: Sequence[str]):
        rows = tuple(tuple(int(x) for x in row) for row in matrix)
        names = tuple(var_names)
        for row in rows:
            if len(row) != len(names):
                raise ValueError("row width must match variable count")
        if len(rows) != len(rhs):
            raise ValueError("one right-hand side per row")
        object.__setattr__(self, "matrix", rows)
        object.__setattr__(self, "rhs", tuple(int(x) for x in rhs))
        object.__setattr__(self, "var_names", names)

    @property
    def num_vars(self) -> int:
        return len(self.var_names)


@dataclass(frozen=True)
class HilbertBasis:
    """Minimal non-zero homogeneous solutions and minimal inhomogeneous ones.

    Every solution is some ``part`` element plus a natural combination of
    ``hom`` elements.
    """

    hom: tuple
    part: tuple


def _preprocess(sys: NatLinearSystem):
    """Pin variables forced by single-variable rows; drop settled rows.

    Returns (rows, rhs, live columns, part pins, feasible-part flag).  For
    the homogeneous side every pinned variable is 0 regardless of the pin
    value, and the reduced matrix is the same.
    """
    rows = [list(r) for r in sys.matrix]
    rhs = list(sys.rhs)
    live = list(range(sys.num_vars))
    pins = {}
    part_ok = True
    while True:
        settled = None
        for idx, row in enumerate(rows):
            support = [c for c in live if row[c] != 0]
            if len(support) <= 1:
                settled = (idx, support)
                break
        if settled is None:
            break
        idx, support = settled
        r = rhs[idx]
        if support:
            c = support[0]
            k = rows[idx][c]
            if r % k != 0 or r // k < 0:
                part_ok = False
                pins[c] = 0
            else:
                pins[c] = r // k
            live.remove(c)
            del rows[idx], rhs[idx]
            for i2, row2 in enumerate(rows):
                if row2[c] != 0:
                    rhs[i2] -= row2[c] * pins[c]
                    row2[c] = 0
        else:
            if r != 0:
                part_ok = False
            del rows[idx], rhs[idx]
    return rows, rhs, live, pins, part_ok


def _rationally_consistent(rows, rhs) -> bool:
    """Exact Gaussian elimination; False iff the equalities are already
    contradictory over the rationals (hence over N)."""
    from fractions import Fraction

    work = [[Fraction(x) for x in row] + [Fraction(r)]
            for row, r in zip(rows, rhs)]
    cols = len(rows[0]) if rows else 0
    pivot_row = 0
    for col in range(cols):
        pick = next((r for r in range(pivot_row, len(work)) if work[r][col]), None)
        if pick is None:
            continue
        work[pivot_row], work[pick] = work[pick], work[pivot_row]
        lead = work[pivot_row][col]
        for r in range(len(work)):
            if r != pivot_row and work[r][col]:
                factor = work[r][col] / lead
                work[r] = [a - factor * b for a, b in zip(work[r], work[pivot_row])]
        pivot_row += 1
        if pivot_row == len(work):
            break
    return not any(all(x == 0 for x in row[:-1]) and row[-1] != 0 for row in work)


def _saturate(columns, max_nodes: int, caps=None):
    """Contejean-Devie breadth-first saturation over the homogeneous system
    whose column vectors are given; returns the minimal non-zero solutions.

    ``caps`` limits individual coordinates; sound for targets within the
    caps because coordinates only grow along a search path.
    """
    n = len(columns)
    rows = len(columns[0]) if n else 0
    zero = (0,) * rows
    caps = caps or {}

    def add(a, b):
        return tuple(x + y for x, y in zip(a, b))

    def dot(a, b):
        return sum(x * y for x, y in zip(a, b))

    basis = []
    frontier = {}
    for j in range(n):
        vec = tuple(1 if i == j else 0 for i in range(n))
        frontier[vec] = columns[j]
    seen = set(frontier)
    nodes = n
    while frontier:
        new = {}
        for vec, res in frontier.items():
            if res == zero:
                basis.append(vec)
                continue
            for j in range(n):
                if vec[j] >= caps.get(j, max_nodes):
                    continue
                if dot(res, columns[j]) >= 0:
                    continue
                vec2 = vec[:j] + (vec[j] + 1,) + vec[j + 1:]
                if vec2 in seen:
                    continue
                if any(all(x <= y for x, y in zip(b, vec2)) for b in basis):
                    continue
                seen.add(vec2)
                new[vec2] = add(res, columns[j])
                nodes += 1
                if nodes > max_nodes:
                    raise DiophantineBudgetError(
                        f"saturation exceeded {max_nodes} nodes")
        frontier = new
    minimal = []
    for v in basis:
        if not any(w != v and all(x <= y for x, y in zip(w, v)) for w in basis):
            if v not in minimal:
                minimal.append(v)
    minimal.sort()
    return minimal


def hilbert(sys: NatLinearSystem, max_nodes: int = DEFAULT_MAX_NODES) -> HilbertBasis:
    """Complete Hilbert basis of ``matrix . z = rhs`` over the naturals.

    The inhomogeneous part is handled by a fresh variable pinned to one;
    minimal solutions with a larger value there are discarded.
    """
    rows, rhs, live, pins, part_ok = _preprocess(sys)
    if part_ok and rows:
        part_ok = _rationally_consistent(rows, rhs)
    columns = [tuple(row[c] for row in rows) for c in live]
    if part_ok:
        columns.append(tuple(-r for r in rhs))
        minimal = _saturate(columns, max_nodes, caps={len(columns) - 1: 1})
    else:
        minimal = [v + (0,) for v in _saturate(columns, max_nodes)]

    def inflate(reduced, aux: int):
        out = [0] * sys.num_vars
        for value, c in zip(reduced, live):
            out[c] = value
        if aux == 1:
            for c, v in pins.items():
                out[c] = v
        return tuple(out)

    hom = []
    part = []
    for v in minimal:
        reduced, aux = v[:-1], v[-1]
        if aux == 0:
            hom.append(inflate(reduced, 0))
        elif aux == 1 and part_ok:
            part.append(inflate(reduced, 1))
    hom = [h for h in hom if any(h)]
    hom.sort()
    part.sort()
    return HilbertBasis(tuple(hom), tuple(part))


def feasible(sys: NatLinearSystem,
             max_nodes: int = DEFAULT_MAX_NODES) -> Optional[tuple]:
    """Some minimal solution, or None when the system has none."""
    basis = hilbert(sys, max_nodes)
    return basis.part[0] if basis.part else None


def coord_unbounded(basis: HilbertBasis, i: int) -> bool:
    """Is the i-th coordinate unbounded over the solution set?"""
    return any(h[i] > 0 for h in basis.hom)


def coord_max(basis: HilbertBasis, i: int) -> int:
    """Exact supremum of a bounded coordinate.

    Correct because the coordinate vanishes on every homogeneous basis
    element, so the maximum is attained on a minimal solution.
    """
    if not basis.part:
        raise ValueError("system is infeasible")
    if coord_unbounded(basis, i):
        raise ValueError(f"coordinate {i} is unbounded")
    return max(p[i] for p in basis.part)


def positive_support_solution(basis: HilbertBasis, coords) -> Optional[tuple]:
    """A solution with every listed coordinate at least 1, or None.

    Bounded coordinates must be covered by a single minimal solution
    (homogeneous elements vanish there); unbounded ones are topped up with
    covering homogeneous elements.
    """
    coords = sorted(set(coords))
    if not basis.part:
        return None
    bounded = [c for c in coords if not coord_unbounded(basis, c)]
    for p in basis.part:
        if any(p[c] == 0 for c in bounded):
            continue
        vec = list(p)
        for c in coords:
            if vec[c] == 0:
                cover = next(h for h in basis.hom if h[c] > 0)
                vec = [a + b for a, b in zip(vec, cover)]
        return tuple(vec)
    return None


# --- Exact linear programming over the rationals, and small integer
# --- programs on top of it.  The sequence solver uses these for systems
# --- whose saturation basis would be far too large; answers are exact.

from fractions import Fraction

_LP_INFEASIBLE = "infeasible"
_LP_UNBOUNDED = "unbounded"
_LP_OPTIMAL = "optimal"


def lp_solve(rows, rhs, objective, num_vars, maximize=True):
    """Exact two-phase simplex: optimize over rows . x = rhs, x >= 0.

    The tableau holds integers with one positive denominator per row, so
    the hot loops never touch Fraction objects; Bland's rule guarantees
    termination.  Returns (status, value, point) with Fractions.
    """
    import math

    m = len(rows)
    n = num_vars
    if m == 0:
        if maximize and any(c > 0 for c in objective):
            return (_LP_UNBOUNDED, None, None)
        if not maximize and any(c < 0 for c in objective):
            return (_LP_UNBOUNDED, None, None)
        return (_LP_OPTIMAL, Fraction(0), (Fraction(0),) * n)

    total = n + m  # structural + artificial columns
    tab = []
    for row, r in zip(rows, rhs):
        row = [int(x) for x in row]
        r = int(r)
        if r < 0:
            row = [-x for x in row]
            r = -r
        tab.append(row + [0] * m + [r])
    for i in range(m):
        tab[i][n + i] = 1
    basis = list(range(n, n + m))
    RHS = total
    state = {"q": 1}  # basis determinant; actual tableau = tab / q

    def pivot(r, c, cost):
        # fraction-free update: entries stay determinant-sized and the
        # division by the previous pivot is exact; rows missing the pivot
        # column still rescale by p/q
        q = state["q"]
        p = tab[r][c]
        rowr = tab[r]
        for i in range(m):
            if i != r:
                f = tab[i][c]
                if f:
                    tab[i] = [(x * p - f * y) // q for x, y in zip(tab[i], rowr)]
                elif p != q:
                    tab[i] = [(x * p) // q for x in tab[i]]
        f = cost[c]
        if f:
            cost[:] = [(x * p - f * y) // q for x, y in zip(cost, rowr)]
        elif p != q:
            cost[:] = [(x * p) // q for x in cost]
        state["q"] = p
        basis[r] = c

    def run_phase(cost, allowed_end):
        while True:
            entering = None
            for j in range(allowed_end):
                if cost[j] < 0:
                    entering = j
                    break
            if entering is None:
                return _LP_OPTIMAL
            leaving = None
            for i in range(m):
                if tab[i][entering] > 0:
                    if leaving is None:
                        leaving = i
                        continue
                    lhs = tab[i][RHS] * tab[leaving][entering]
                    rhs_ = tab[leaving][RHS] * tab[i][entering]
                    if lhs < rhs_ or (lhs == rhs_ and basis[i] < basis[leaving]):
                        leaving = i
            if leaving is None:
                return _LP_UNBOUNDED
            pivot(leaving, entering, cost)

    # phase 1: minimize the artificial sum; initial reduced costs are the
    # negated column sums since the artificials form the basis
    cost = [0] * (total + 1)
    for j in range(total + 1):
        cost[j] = -sum(tab[i][j] for i in range(m))
    for i in range(m):
        cost[n + i] = 0
    run_phase(cost, total)
    if cost[RHS] != 0:
        return (_LP_INFEASIBLE, None, None)
    for i in range(m):
        if basis[i] >= n:
            col = next((j for j in range(n) if tab[i][j] != 0), None)
            if col is not None:
                # degenerate pivot; flip the row sign to keep q positive
                if tab[i][col] < 0:
                    tab[i] = [-x for x in tab[i]]
                pivot(i, col, cost)

    # phase 2 over the structural columns only
    sign = -1 if maximize else 1
    obj = [sign * int(c) for c in objective]
    q = state["q"]
    cost = [0] * (total + 1)
    for j in range(total + 1):
        acc = (obj[j] * q) if j < n else 0
        for i in range(m):
            cb = obj[basis[i]] if basis[i] < n else 0
            if cb and tab[i][j]:
                acc -= cb * tab[i][j]
        cost[j] = acc
    status = run_phase(cost, n)
    if status == _LP_UNBOUNDED:
        return (_LP_UNBOUNDED, None, None)
    q = state["q"]
    point = [Fraction(0)] * n
    for i in range(m):
        if basis[i] < n:
            point[basis[i]] = Fraction(tab[i][RHS], q)
    value = sum(Fraction(int(c)) * x for c, x in zip(objective, point))
    return (_LP_OPTIMAL, value, tuple(point))


def _with_surplus(eq_rows, eq_rhs, ge_rows, ge_rhs, n):
    """Equality form of {eq = rhs, ge >= rhs, x >= 0} with surplus vars."""
    rows = []
    rhs = []
    total = n + len(ge_rows)
    for row, r in zip(eq_rows, eq_rhs):
        rows.append(list(row) + [0] * len(ge_rows))
        rhs.append(r)
    for idx, (row, r) in enumerate(zip(ge_rows, ge_rhs)):
        full = list(row) + [0] * len(ge_rows)
        full[n + idx] = -1
        rows.append(full)
        rhs.append(r)
    return rows, rhs, total


def lp_feasible_point(eq_rows, eq_rhs, ge_rows, ge_rhs, n):
    """A rational point of the polyhedron, or None."""
    rows, rhs, total = _with_surplus(eq_rows, eq_rhs, ge_rows, ge_rhs, n)
    status, _, point = lp_solve(rows, rhs, [0] * total, total)
    if status == _LP_INFEASIBLE:
        return None
    return point[:n]


def lp_max(eq_rows, eq_rhs, ge_rows, ge_rhs, n, objective):
    """(status, value, point) maximizing the objective over the polyhedron."""
    rows, rhs, total = _with_surplus(eq_rows, eq_rhs, ge_rows, ge_rhs, n)
    status, value, point = lp_solve(rows, rhs, list(objective) + [0] * len(ge_rows),
                                    total)
    if point is not None:
        point = point[:n]
    return status, value, point


def cone_direction(eq_rows, ge_rows, n, positive_forms):
    """Integer recession direction: h >= 0 with eq(h) = 0, ge(h) >= 0 and
    every listed linear form at least 1; None when no rational one exists."""
    ge = [list(row) for row in ge_rows] + [list(f) for f in positive_forms]
    ge_rhs = [0] * len(ge_rows) + [1] * len(positive_forms)
    point = lp_feasible_point(eq_rows, [0] * len(eq_rows), ge, ge_rhs, n)
    if point is None:
        return None
    scale = 1
    for x in point:
        scale = scale * x.denominator // _gcd(scale, x.denominator)
    return tuple(int(x * scale) for x in point)


def _gcd(a, b):
    while b:
        a, b = b, a % b
    return a


def _is_integral(point):
    return all(x.denominator == 1 for x in point)


def ilp_feasible(eq_rows, eq_rhs, ge_rows, ge_rhs, n, max_nodes=10_000):
    """Integer point of the polyhedron by branch and bound, or None.

    Branching adds variable bounds; the node budget (a plain int or a
    shared one-element countdown list) turns pathological instances into
    a DiophantineBudgetError, never a wrong answer.
    """
    budget = max_nodes if isinstance(max_nodes, list) else [max_nodes]
    stack = [([], [])]
    while stack:
        extra_ge, extra_rhs = stack.pop()
        budget[0] -= 1
        if budget[0] < 0:
            raise DiophantineBudgetError("integer search exceeded node budget")
        point = lp_feasible_point(eq_rows, eq_rhs,
                                  list(ge_rows) + extra_ge,
                                  list(ge_rhs) + extra_rhs, n)
        if point is None:
            continue
        frac = next((i for i, x in enumerate(point) if x.denominator != 1), None)
        if frac is None:
            return tuple(int(x) for x in point)
        floor = point[frac].numerator // point[frac].denominator
        low = [0] * n
        low[frac] = -1
        high = [0] * n
        high[frac] = 1
        stack.append((extra_ge + [low], extra_rhs + [-(floor)]))
        stack.append((extra_ge + [high], extra_rhs + [floor + 1]))
    return None


def ilp_max(eq_rows, eq_rhs, ge_rows, ge_rhs, n, objective,
            max_nodes: int = 10_000):
    """Exact integer maximum of a non-negative objective form; the caller
    guarantees no recession direction increases it.

    Descends from the rational bound, pinning the objective to each
    candidate value and testing integer feasibility; for the network-like
    systems at hand the first candidate almost always succeeds."""
    status, value, point = lp_max(eq_rows, eq_rhs, ge_rows, ge_rhs, n, objective)
    if status == _LP_INFEASIBLE:
        raise ValueError("no solution at all")
    if status == _LP_UNBOUNDED:
        raise ValueError("objective unbounded over the relaxation")
    bound = value.numerator // value.denominator
    if value.denominator == 1 and _is_integral(point):
        return bound
    budget = [max_nodes]

    def attainable(v):
        return ilp_feasible(eq_rows, eq_rhs,
                            list(ge_rows) + [list(objective)],
                            list(ge_rhs) + [v], n, budget) is not None

    # "some integer solution reaches v" is monotone in v: bisect
    lo, hi = 0, bound
    if not attainable(0):
        raise ValueError("no integer solution")
    while lo < hi:
        mid = (lo + hi + 1) // 2
        if attainable(mid):
            lo = mid
        else:
            hi = mid - 1
    return lo
