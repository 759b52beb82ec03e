import itertools
import random

import pytest

from vasreach.core import Action, Prerun, Vas, run_from_actions
from vasreach.ideals import (OMEGA, DownSet, OmegaVec, PartialTransition,
                             PrerunIdealRep, Product, Single, Star, atom_leq,
                             cu_vec, is_partial_transition, omega_leq,
                             prerun_ideal_contains, product_leq, project,
                             reduce_product, sample_prerun, word_in_product)

A3 = Action("a", (1, 1, -1))
B3 = Action("b", (-1, 0, 1))


def vec(*entries):
    return OmegaVec(entries)


class TestOmegaVec:
    def test_order_examples(self):
        assert omega_leq(vec(1, 0, 1), vec(1, OMEGA, 1))
        assert omega_leq(vec(2, 0), vec(2, 0))
        assert not omega_leq(vec(2, 0), vec(1, OMEGA))

    def test_partial_order(self):
        rng = random.Random(5)
        pool = [OmegaVec(rng.choice([0, 1, 2, OMEGA]) for _ in range(3))
                for _ in range(60)]
        for u in pool:
            assert omega_leq(u, u)
        for u, v, w in zip(pool, pool[1:], pool[2:]):
            if omega_leq(u, v) and omega_leq(v, w):
                assert omega_leq(u, w)
            if omega_leq(u, v) and omega_leq(v, u):
                assert u == v

    def test_project_examples(self):
        assert project(vec(1, 0, 1), [0, 2]) == vec(1, OMEGA, 1)
        v = vec(3, 1)
        assert project(v, range(2)) == v
        assert project(v, []) == OmegaVec.top(2)

    def test_project_monotone_idempotent(self):
        rng = random.Random(6)
        for _ in range(100):
            u = OmegaVec(rng.choice([0, 1, 2, OMEGA]) for _ in range(3))
            v = OmegaVec(rng.choice([0, 1, 2, OMEGA]) for _ in range(3))
            keep = {i for i in range(3) if rng.random() < 0.5}
            if omega_leq(u, v):
                assert omega_leq(project(u, keep), project(v, keep))
            assert project(project(u, keep), keep) == project(u, keep)

    def test_entry_validation(self):
        with pytest.raises(ValueError):
            OmegaVec((-1, 0))

    def test_json_round_trip(self):
        v = vec(1, OMEGA, 0)
        assert v.to_json() == [1, "w", 0]
        assert OmegaVec.from_json([1, "w", 0]) == v


class TestPartialTransition:
    def test_graph_edge(self):
        assert is_partial_transition((vec(1, OMEGA, 1), A3, vec(2, OMEGA, 0)))

    def test_all_omega_absorbs(self):
        top = OmegaVec.top(3)
        assert is_partial_transition((top, A3, top))
        assert is_partial_transition((top, B3, top))

    def test_arithmetic_violation(self):
        a = Action("a", (0, 1))
        assert not is_partial_transition((vec(1, 0), a, vec(1, 0)))

    def test_omega_positions_must_match(self):
        a = Action("a", (0, 0, 0))
        assert not is_partial_transition((vec(1, OMEGA, 1), a, vec(1, 1, 1)))


class TestCuVec:
    def test_textbook_complement(self):
        assert cu_vec(OmegaVec.top(2), (1, 1)) == [vec(0, OMEGA), vec(OMEGA, 0)]

    def test_finite_box(self):
        assert cu_vec(vec(2, 3), (1, 1)) == [vec(0, 3), vec(2, 0)]

    def test_zero_threshold(self):
        assert cu_vec(vec(2, 3), (0, 0)) == []

    def test_exhaustive_membership(self):
        # membership in the leftover set coincides with membership in the
        # union of the returned ideals, over a box past every bound
        rng = random.Random(7)
        vals = [0, 1, 2, 3, 4, OMEGA]
        for _ in range(150):
            d = rng.randint(1, 3)
            v = OmegaVec(rng.choice(vals) for _ in range(d))
            x = tuple(rng.randint(0, 4) for _ in range(d))
            out = cu_vec(v, x)
            for w in out:
                assert omega_leq(w, v)
                assert not all(w[i] is OMEGA or w[i] >= x[i] for i in range(d))
            for point in itertools.product(range(6), repeat=d):
                inside = (all(point[i] <= v[i] or v[i] is OMEGA for i in range(d))
                          and not all(point[i] >= x[i] for i in range(d)))
                covered = any(
                    all(point[i] <= w[i] or w[i] is OMEGA for i in range(d))
                    for w in out)
                assert inside == covered, (v, x, point)


def lift(action, src=None, dst=None, dim=2):
    top = OmegaVec.top(dim)
    return PartialTransition(src or top, action, dst or top)


A2 = Action("a", (1, 1))
B2 = Action("b", (-1, -2))
TA = lift(A2)
TB = lift(B2)


class TestDownSet:
    def test_antichain_canonicalization(self):
        small = PartialTransition(vec(1, 1), A2, vec(2, 2))
        ds = DownSet([small, TA, TB])
        assert ds.elements == DownSet([TA, TB]).elements
        assert ds.contains_ideal(small)

    def test_letter_membership(self):
        ds = DownSet([PartialTransition(vec(2, 2), A2, vec(3, 3))])
        assert ds.contains_letter(((1, 0), A2, (2, 1)))
        assert not ds.contains_letter(((3, 0), A2, (4, 1)))
        assert not ds.contains_letter(((1, 0), B2, (0, 0)))


class TestWordInProduct:
    def test_empty_word_everywhere(self):
        assert word_in_product((), Product([Star(DownSet([TA])), Single(TB)]))
        assert word_in_product((), Product([]))

    def test_full_run_in_all_omega_star(self, two_counter, two_counter_run):
        product = Product([Star(DownSet([TA, TB]))])
        assert word_in_product(two_counter_run.word, product)
        for letter in two_counter_run.word:
            assert DownSet([TA, TB]).contains_letter(letter)

    def test_wrong_action_rejected(self, two_counter_run):
        product = Product([Star(DownSet([TA]))])
        assert not word_in_product(two_counter_run.word, product)

    def test_single_atom_capacity(self):
        letter = ((0, 0), A2, (1, 1))
        assert word_in_product((letter,), Product([Single(TA)]))
        assert not word_in_product((letter, letter), Product([Single(TA)]))

    def test_downward_closure_monotone(self, two_counter):
        import conftest
        rng = random.Random(8)
        products = [
            Product([Star(DownSet([TA, TB]))]),
            Product([Star(DownSet([TA])), Single(TB), Star(DownSet([TB]))]),
            Product([Single(TA), Single(TB)]),
            Product([Star(DownSet([lift(A2, vec(2, 2), vec(3, 3))])),
                     Star(DownSet([TB]))]),
        ]
        for _ in range(200):
            big = conftest.random_prerun(rng, two_counter.vas)
            keep = [letter for letter in big.word if rng.random() < 0.6]
            small = tuple(
                (tuple(max(0, x - rng.randint(0, 2)) for x in u), a,
                 tuple(max(0, x - rng.randint(0, 2)) for x in v))
                for (u, a, v) in keep)
            for product in products:
                if word_in_product(big.word, product):
                    assert word_in_product(small, product)


class TestAtomLeq:
    def test_star_in_star(self):
        small = Star(DownSet([lift(A2, vec(1, 1), vec(2, 2))]))
        assert atom_leq(small, Star(DownSet([TA])))
        assert not atom_leq(Star(DownSet([TA])), small)

    def test_single_in_star(self):
        assert atom_leq(Single(TA), Star(DownSet([TA])))

    def test_star_not_in_single(self):
        assert not atom_leq(Star(DownSet([TA])), Single(TA))
        assert atom_leq(Star(DownSet([])), Single(TA))

    def test_single_in_single(self):
        small = Single(lift(A2, vec(0, 0), vec(1, 1)))
        assert atom_leq(small, Single(TA))
        assert not atom_leq(Single(TA), small)


def brute_product_leq(p1, p2, letters, max_len=4):
    """Word-level inclusion over every word of length <= max_len.

    Complete for products with at most three atoms: a blocking subword
    never needs more letters than one per consumed atom plus one.
    """
    for length in range(max_len + 1):
        for combo in itertools.product(letters, repeat=length):
            if word_in_product(combo, p1) and not word_in_product(combo, p2):
                return False
    return True


class TestProductLeq:
    def test_redundant_star_pair(self):
        both = Product([Star(DownSet([TA, TB])), Star(DownSet([TB]))])
        merged = Product([Star(DownSet([TA, TB]))])
        assert product_leq(both, merged)
        assert product_leq(merged, both)

    def test_reflexive(self):
        p = Product([Star(DownSet([TA])), Single(TB)])
        assert product_leq(p, p)

    def test_order_sensitive(self):
        ba = Product([Star(DownSet([TB])), Star(DownSet([TA]))])
        ab = Product([Star(DownSet([TA])), Star(DownSet([TB]))])
        assert not product_leq(ba, ab)
        word = (((1, 2), B2, (0, 0)), ((0, 0), A2, (1, 1)))
        assert word_in_product(word, ba)
        assert not word_in_product(word, ab)

    def test_agrees_with_brute_force(self):
        rng = random.Random(9)
        inc = Action("i", (1,))
        dec = Action("d", (-1,))
        values = [0, 1, OMEGA]
        # value 2 exceeds every finite bound of the generated ideals, so
        # it stands in for arbitrarily large letters
        letters = [((u,), act, (v,))
                   for act in (inc, dec) for u in range(3) for v in range(3)]

        def random_ideal():
            return PartialTransition(
                OmegaVec((rng.choice(values),)), rng.choice((inc, dec)),
                OmegaVec((rng.choice(values),)))

        def random_atom():
            if rng.random() < 0.5:
                return Star(DownSet([random_ideal()
                                     for _ in range(rng.randint(0, 2))]))
            return Single(random_ideal())

        for _ in range(150):
            p1 = Product([random_atom() for _ in range(rng.randint(0, 3))])
            p2 = Product([random_atom() for _ in range(rng.randint(0, 3))])
            assert product_leq(p1, p2) == brute_product_leq(p1, p2, letters)


class TestReduceProduct:
    def test_redundancy_example(self):
        p = Product([Star(DownSet([TA, TB])), Star(DownSet([TB]))])
        assert reduce_product(p) == Product([Star(DownSet([TA, TB]))])

    def test_already_reduced(self):
        p = Product([Star(DownSet([TA])), Single(TB)])
        assert reduce_product(p) == p

    def test_empty_star_dropped(self):
        p = Product([Star(DownSet([])), Single(TA)])
        assert reduce_product(p) == Product([Single(TA)])

    def test_preserves_denotation(self):
        rng = random.Random(10)
        values = [0, 1, OMEGA]
        inc = Action("i", (1,))
        dec = Action("d", (-1,))

        def random_ideal():
            return PartialTransition(
                OmegaVec((rng.choice(values),)), rng.choice((inc, dec)),
                OmegaVec((rng.choice(values),)))

        def random_atom():
            if rng.random() < 0.5:
                return Star(DownSet([random_ideal()
                                     for _ in range(rng.randint(0, 2))]))
            return Single(random_ideal())

        for _ in range(150):
            p = Product([random_atom() for _ in range(rng.randint(0, 4))])
            reduced = reduce_product(p)
            assert product_leq(p, reduced)
            assert product_leq(reduced, p)


class TestPrerunIdeal:
    def test_everything_ideal(self, two_counter, two_counter_run):
        rep = PrerunIdealRep(OmegaVec.top(2),
                             Product([Star(DownSet([TA, TB]))]),
                             OmegaVec.top(2))
        assert prerun_ideal_contains(rep, two_counter_run)

    def test_source_bound_violation(self, two_counter_run):
        rep = PrerunIdealRep(vec(0, 0), Product([Star(DownSet([TA, TB]))]),
                             OmegaVec.top(2))
        assert not prerun_ideal_contains(rep, two_counter_run)

    def test_sampler_determinism_and_membership(self):
        rep = PrerunIdealRep(
            vec(2, OMEGA),
            Product([Star(DownSet([TA])), Single(TB), Star(DownSet([TB]))]),
            OmegaVec.top(2))
        assert sample_prerun(rep, 3, 11) == sample_prerun(rep, 3, 11)
        for seed in range(50):
            sampled = sample_prerun(rep, 3, seed)
            assert prerun_ideal_contains(rep, sampled)

    def test_budget_zero_minimal(self):
        rep = PrerunIdealRep(vec(1, OMEGA), Product([Star(DownSet([TA]))]),
                             OmegaVec.top(2))
        sampled = sample_prerun(rep, 0, 0)
        assert sampled.word == ()
        assert sampled.source == (1, 0)
        assert sampled.target == (0, 0)

    def test_json_round_trip(self, two_counter):
        rep = PrerunIdealRep(
            vec(0, 2), Product([Star(DownSet([TA, TB])), Single(TB)]),
            vec(1, 0))
        data = rep.to_json()
        back = PrerunIdealRep.from_json(data, two_counter.vas)
        assert back == rep
