import random

import pytest

from vasreach.core import parse_instance
from vasreach.klmst import initial_sequence
from vasreach.ordinal import (GraphRank, Ordinal, ZERO, format_ordinal,
                              graph_rank_cmp, natural_sum, omega_power,
                              ord_cmp, ord_norm, parse_ordinal, rank_graph,
                              rank_sequence)

from conftest import FIG_TEXT


class TestGraphRank:
    def test_square_term_dominates(self):
        assert graph_rank_cmp(GraphRank(2, 0, 0), GraphRank(1, 99, 99)) == 1

    def test_equal(self):
        assert graph_rank_cmp(GraphRank(1, 2, 3), GraphRank(1, 2, 3)) == 0

    def test_linear_term_beats_constant(self):
        assert graph_rank_cmp(GraphRank(0, 1, 0), GraphRank(0, 0, 5)) == 1


class TestOrdCmp:
    def test_exponent_dominates(self):
        assert ord_cmp(omega_power(GraphRank(2, 0, 0)),
                       omega_power(GraphRank(0, 5, 3))) == 1

    def test_multiplicity_breaks_ties(self):
        beta = GraphRank(1, 1, 1)
        assert ord_cmp(omega_power(beta, 2), omega_power(beta, 1)) == 1

    def test_equal_and_zero(self):
        alpha = natural_sum(omega_power(GraphRank(1, 0, 0)),
                            omega_power(GraphRank(0, 0, 1), 3))
        assert ord_cmp(alpha, alpha) == 0
        assert ord_cmp(ZERO, alpha) == -1

    def test_strict_total_order(self):
        rng = random.Random(12)
        pool = []
        for _ in range(40):
            terms = [(GraphRank(rng.randint(0, 2), rng.randint(0, 3),
                                rng.randint(0, 3)), rng.randint(1, 3))
                     for _ in range(rng.randint(0, 3))]
            pool.append(Ordinal(terms))
        for x in pool:
            for y in pool:
                cxy, cyx = ord_cmp(x, y), ord_cmp(y, x)
                assert cxy == -cyx
                if cxy == 0:
                    assert x == y
        for x in pool:
            for y in pool:
                for z in pool:
                    if ord_cmp(x, y) <= 0 and ord_cmp(y, z) <= 0:
                        assert ord_cmp(x, z) <= 0


class TestNaturalSum:
    def test_multiplicities_add(self):
        beta = GraphRank(1, 2, 0)
        alpha = natural_sum(omega_power(beta), omega_power(GraphRank(0, 0, 0)))
        summed = natural_sum(alpha, omega_power(beta))
        assert summed.terms[0] == (beta, 2)

    def test_zero_is_neutral(self):
        alpha = omega_power(GraphRank(2, 1, 0), 3)
        assert natural_sum(alpha, ZERO) == alpha

    def test_commutative_associative(self):
        rng = random.Random(13)

        def rand_ord():
            return Ordinal([(GraphRank(rng.randint(0, 2), rng.randint(0, 2),
                                       rng.randint(0, 2)), rng.randint(1, 3))
                            for _ in range(rng.randint(0, 3))])

        for _ in range(100):
            x, y, z = rand_ord(), rand_ord(), rand_ord()
            assert natural_sum(x, y) == natural_sum(y, x)
            assert natural_sum(natural_sum(x, y), z) == \
                natural_sum(x, natural_sum(y, z))
            # independent oracle: sort the combined exponent multiset
            combined = sorted(
                list(x.terms) + list(y.terms), key=lambda t: t[0], reverse=True)
            merged = {}
            for exp, mult in combined:
                merged[exp] = merged.get(exp, 0) + mult
            expected = tuple(sorted(merged.items(), key=lambda t: t[0],
                                    reverse=True))
            assert natural_sum(x, y).terms == expected

    def test_strictly_increasing(self):
        rng = random.Random(14)
        for _ in range(100):
            x = Ordinal([(GraphRank(rng.randint(0, 2), rng.randint(0, 2),
                                    rng.randint(0, 2)), rng.randint(1, 3))])
            y = omega_power(GraphRank(rng.randint(0, 2), rng.randint(0, 2),
                                      rng.randint(0, 2)))
            assert ord_cmp(natural_sum(x, y), x) == 1
            assert ord_cmp(natural_sum(x, y), y) >= 0

    def test_smaller_exponent_with_any_multiplicity(self):
        small, big = GraphRank(1, 4, 9), GraphRank(2, 0, 0)
        for mult in (1, 7, 1000):
            assert ord_cmp(omega_power(small, mult), omega_power(big)) == -1


class TestOrdNorm:
    def test_exponent_coefficients(self):
        assert ord_norm(omega_power(GraphRank(3, 7, 0))) == 7

    def test_finite_ordinal(self):
        assert ord_norm(omega_power(GraphRank(0, 0, 0), 5)) == 5

    def test_zero(self):
        assert ord_norm(ZERO) == 0


class TestRanks:
    def test_initial_sequence_rank(self):
        inst = parse_instance(FIG_TEXT)
        seq = initial_sequence(inst)
        m = seq.graphs[0]
        assert rank_graph(m) == GraphRank(2, 2, 0)
        assert format_ordinal(rank_sequence(seq)) == "w^(w^2*2+w*2)"

    def test_three_counter_marked_graph(self, three_counter):
        # d=3, two stable components, four edges, full input support,
        # output support equal to the stable set
        from vasreach.ideals import OMEGA, OmegaVec, PartialTransition
        from vasreach.klmst import MarkedWitnessGraph, WitnessGraph
        a, b = three_counter.actions
        mid = OmegaVec.of(1, OMEGA, 1)
        hi = OmegaVec.of(2, OMEGA, 0)
        lo = OmegaVec.of(0, OMEGA, 2)
        graph = WitnessGraph(
            (lo, mid, hi),
            (PartialTransition(mid, a, hi), PartialTransition(hi, b, mid),
             PartialTransition(mid, b, lo), PartialTransition(lo, a, mid)),
            mid)
        marked = MarkedWitnessGraph(OmegaVec.of(1, 0, 1), graph,
                                    OmegaVec.of(1, OMEGA, 1))
        assert rank_graph(marked) == GraphRank(1, 4, 1)

    def test_fully_finite_marks(self):
        from vasreach.ideals import OmegaVec, PartialTransition
        from vasreach.klmst import MarkedWitnessGraph, WitnessGraph
        from vasreach.core import Action
        loop = Action("u", (0,))
        node = OmegaVec.of(2)
        graph = WitnessGraph((node,), (PartialTransition(node, loop, node),),
                             node)
        marked = MarkedWitnessGraph(node, graph, node)
        assert rank_graph(marked) == GraphRank(0, 1, 0)

    def test_sequence_rank_sums(self, three_counter):
        inst = parse_instance(FIG_TEXT)
        seq = initial_sequence(inst)
        single = rank_sequence(seq)
        doubled = natural_sum(single, single)
        assert doubled.terms[0][1] == 2


class TestFormatParse:
    def test_print_examples(self):
        alpha = natural_sum(omega_power(GraphRank(2, 2, 0)),
                            omega_power(GraphRank(0, 3, 1), 4))
        assert format_ordinal(alpha) == "w^(w^2*2+w*2) + w^(w*3+1)*4"

    def test_small_forms(self):
        assert format_ordinal(ZERO) == "0"
        assert format_ordinal(omega_power(GraphRank(0, 0, 0), 3)) == "3"
        assert format_ordinal(omega_power(GraphRank(0, 0, 1))) == "w"
        assert format_ordinal(omega_power(GraphRank(0, 0, 2), 2)) == "w^(2)*2"

    def test_round_trip(self):
        rng = random.Random(15)
        for _ in range(200):
            alpha = Ordinal([(GraphRank(rng.randint(0, 3), rng.randint(0, 3),
                                        rng.randint(0, 3)), rng.randint(1, 4))
                             for _ in range(rng.randint(0, 4))])
            assert parse_ordinal(format_ordinal(alpha)) == alpha

    def test_parse_rejects_garbage(self):
        with pytest.raises(ValueError):
            parse_ordinal("w^^2")


class TestDescent:
    def test_random_descending_chains_terminate(self):
        # every strictly descending chain the harness can build is finite;
        # generated steps shrink a term, so chains must end well before the
        # step cap
        rng = random.Random(16)

        def step_down(alpha):
            terms = list(alpha.terms)
            if not terms:
                return None
            idx = rng.randrange(len(terms))
            exp, mult = terms[idx]
            if mult > 1 and rng.random() < 0.5:
                terms[idx] = (exp, mult - 1)
                return Ordinal(terms)
            smaller = []
            if exp.c:
                smaller.append(GraphRank(exp.a, exp.b, exp.c - 1))
            if exp.b:
                smaller.append(GraphRank(exp.a, exp.b - 1, rng.randint(0, 3)))
            if exp.a:
                smaller.append(GraphRank(exp.a - 1, rng.randint(0, 3),
                                         rng.randint(0, 3)))
            del terms[idx]
            if mult > 1:
                terms.append((exp, mult - 1))
            if smaller:
                terms.append((rng.choice(smaller), rng.randint(1, 3)))
            return Ordinal(terms)

        for _ in range(200):
            alpha = Ordinal([(GraphRank(rng.randint(0, 2), rng.randint(0, 3),
                                        rng.randint(0, 3)), rng.randint(1, 3))
                             for _ in range(rng.randint(1, 3))])
            steps = 0
            while True:
                nxt = step_down(alpha)
                if nxt is None:
                    break
                assert ord_cmp(nxt, alpha) == -1
                alpha = nxt
                steps += 1
                assert steps < 10_000
