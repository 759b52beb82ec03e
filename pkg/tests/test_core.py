import random

import pytest

from vasreach.core import (Action, GeneratorNotValidatedError, Instance,
                           InstanceParseError, NegativeComponentError, Prerun,
                           REACHABLE, UNKNOWN, UNREACHABLE, Vas, amalgamate,
                           apply_action, bfs_oracle, embeds, explore_local,
                           parse_instance, run_from_actions, run_from_json,
                           run_to_json, validate_run, verify_embedding)
from vasreach.ideals import OMEGA, OmegaVec

from conftest import FIG_TEXT, pump_prerun, random_prerun


class TestParse:
    def test_two_counter_instance(self):
        inst = parse_instance(FIG_TEXT)
        assert inst.vas.dim == 2
        assert [a.name for a in inst.vas.actions] == ["a", "b"]
        assert inst.vas.action_named("a").delta == (1, 1)
        assert inst.vas.action_named("b").delta == (-1, -2)
        assert inst.source == (0, 2)
        assert inst.target == (1, 0)

    def test_empty_action_set_is_legal(self):
        inst = parse_instance("dim 1\ninit 0\ntarget 0\n")
        assert inst.vas.actions == ()

    def test_arity_mismatch(self):
        with pytest.raises(InstanceParseError) as err:
            parse_instance("dim 2\naction a 1\ninit 0 0\ntarget 0 0\n")
        assert err.value.line == 2

    def test_duplicate_action_name(self):
        with pytest.raises(InstanceParseError):
            parse_instance("dim 1\naction a 1\naction a 2\ninit 0\ntarget 0\n")

    def test_negative_endpoint(self):
        with pytest.raises(InstanceParseError):
            parse_instance("dim 1\ninit -1\ntarget 0\n")

    def test_comments_and_bytes(self):
        inst = parse_instance(b"dim 1 # counters\ninit 2\ntarget 2\n")
        assert inst.source == (2,)

    def test_missing_directives(self):
        with pytest.raises(InstanceParseError):
            parse_instance("dim 1\ninit 0\n")
        with pytest.raises(InstanceParseError):
            parse_instance("init 0\ntarget 0\n")


class TestApplyAction:
    def test_first_step(self):
        assert apply_action((0, 2), Action("a", (1, 1))) == (1, 3)

    def test_decrement(self):
        assert apply_action((4, 6), Action("b", (-1, -2))) == (3, 4)

    def test_negative_component(self):
        with pytest.raises(NegativeComponentError) as err:
            apply_action((0, 0), Action("d", (-1, 0)))
        assert err.value.index == 0

    def test_reverse_restores(self):
        rng = random.Random(0)
        for _ in range(200):
            d = rng.randint(1, 3)
            c = tuple(rng.randint(0, 5) for _ in range(d))
            delta = tuple(rng.randint(-2, 2) for _ in range(d))
            try:
                c2 = apply_action(c, Action("x", delta))
                back = apply_action(c2, Action("y", tuple(-v for v in delta)))
            except NegativeComponentError:
                continue
            assert back == c


class TestValidateRun:
    def test_seven_step_run(self, two_counter, two_counter_run):
        assert validate_run(two_counter_run, two_counter.vas)
        assert two_counter_run.target == (1, 0)

    def test_empty_run(self, two_counter):
        assert validate_run(Prerun((3, 3), (), (3, 3)), two_counter.vas)

    def test_empty_word_needs_equal_endpoints(self, two_counter):
        assert not validate_run(Prerun((0, 0), (), (0, 1)), two_counter.vas)

    def test_disconnected_word(self, two_counter):
        a, _ = two_counter.vas.actions
        word = (((0, 2), a, (1, 3)), ((5, 5), a, (6, 6)))
        assert not validate_run(Prerun((0, 2), word, (6, 6)), two_counter.vas)

    def test_foreign_action(self, two_counter):
        word = (((0, 2), Action("z", (0, 0)), (0, 2)),)
        assert not validate_run(Prerun((0, 2), word, (0, 2)), two_counter.vas)


class TestEmbeds:
    def test_figure_example(self, two_counter):
        a, b = two_counter.vas.actions
        small = Prerun((1, 0), (((1, 0), a, (2, 1)),), (2, 1))
        big = run_from_actions((3, 3), [b, a, b, a])
        witness = embeds(small, big)
        assert witness is not None and witness.positions == (1,)
        assert verify_embedding(small, big, witness)

    def test_reflexive(self, two_counter):
        rng = random.Random(1)
        for _ in range(100):
            p = random_prerun(rng, two_counter.vas)
            w = embeds(p, p)
            assert w is not None and w.positions == tuple(range(len(p.word)))

    def test_transitive_on_pumped_chains(self, two_counter):
        rng = random.Random(2)
        for _ in range(100):
            p0 = random_prerun(rng, two_counter.vas)
            p1 = pump_prerun(rng, two_counter.vas, p0)
            p2 = pump_prerun(rng, two_counter.vas, p1)
            assert embeds(p0, p1) is not None
            assert embeds(p1, p2) is not None
            assert embeds(p0, p2) is not None

    def test_length_obstruction(self, two_counter):
        a, _ = two_counter.vas.actions
        two = Prerun((0, 0), (((0, 0), a, (1, 1)), ((1, 1), a, (2, 2))), (2, 2))
        one = Prerun((5, 5), (((5, 5), a, (6, 6)),), (6, 6))
        assert embeds(two, one) is None

    def test_concatenation_compatible(self, two_counter):
        rng = random.Random(3)
        for _ in range(60):
            p = random_prerun(rng, two_counter.vas)
            q = random_prerun(rng, two_counter.vas)
            pb, qb = (pump_prerun(rng, two_counter.vas, x) for x in (p, q))
            joined = Prerun(p.source, p.word + q.word, q.target)
            joined_big = Prerun(pb.source, pb.word + qb.word, qb.target)
            assert embeds(joined, joined_big) is not None


class TestAmalgamate:
    def test_degenerate_empty(self):
        e = Prerun((3, 3), (), (3, 3))
        w = embeds(e, e)
        assert amalgamate(e, e, e, w, w) == e

    def test_empty_base_doubles_offsets(self, two_counter, two_counter_run):
        base = Prerun((0, 0), (), (0, 0))
        w = embeds(base, two_counter_run)
        merged = amalgamate(base, two_counter_run, two_counter_run, w, w)
        assert validate_run(merged, two_counter.vas)
        assert embeds(two_counter_run, merged) is not None
        assert merged.source == (0, 4)

    def test_single_step_base(self, two_counter):
        a, b = two_counter.vas.actions
        base = Prerun((1, 0), (((1, 0), a, (2, 1)),), (2, 1))
        big = run_from_actions((3, 3), [b, a, b, a])
        w = embeds(base, big)
        merged = amalgamate(base, big, big, w, w)
        assert validate_run(merged, two_counter.vas)
        assert embeds(big, merged) is not None

    def test_random_postconditions(self, two_counter):
        rng = random.Random(4)
        vas = two_counter.vas
        checked = 0
        while checked < 40:
            length = rng.randint(0, 4)
            start = tuple(rng.randint(0, 3) for _ in range(2))
            try:
                actions = [rng.choice(vas.actions) for _ in range(length)]
                base = run_from_actions(start, actions)
            except NegativeComponentError:
                continue
            offs = [tuple(rng.randint(0, 2) for _ in range(2)) for _ in range(2)]
            bigger = []
            for off in offs:
                shifted = run_from_actions(
                    tuple(x + o for x, o in zip(start, off)), actions)
                bigger.append(shifted)
            w1 = embeds(base, bigger[0])
            w2 = embeds(base, bigger[1])
            assert w1 is not None and w2 is not None
            merged = amalgamate(base, bigger[0], bigger[1], w1, w2)
            assert validate_run(merged, vas)
            assert embeds(bigger[0], merged) is not None
            assert embeds(bigger[1], merged) is not None
            checked += 1

    def test_invalid_witness_rejected(self, two_counter, two_counter_run):
        from vasreach.core import EmbeddingWitness
        base = Prerun((0, 0), (), (0, 0))
        bad = EmbeddingWitness((0,))
        with pytest.raises(ValueError):
            amalgamate(base, two_counter_run, two_counter_run, bad, bad)


class TestBfsOracle:
    def test_reachable_lexicographically_least(self, two_counter):
        result = bfs_oracle(two_counter, 8, 10)
        assert result.verdict == REACHABLE
        assert [a.name for a in result.run.label()] == list("aaaabbb")
        assert validate_run(result.run, two_counter.vas)

    def test_certified_unreachable_by_closure(self):
        vas = Vas(2, (Action("d", (-1, 0)),))
        inst = Instance(vas, (2, 0), (0, 1))
        assert bfs_oracle(inst, 3, 10).verdict == UNREACHABLE

    def test_unknown_when_norm_capped(self):
        vas = Vas(2, (Action("u", (1, 1)),))
        inst = Instance(vas, (0, 0), (0, 1))
        assert bfs_oracle(inst, 3, 10).verdict == UNKNOWN

    def test_equal_endpoints(self, two_counter):
        inst = Instance(two_counter.vas, (1, 1), (1, 1))
        result = bfs_oracle(inst, 4, 4)
        assert result.verdict == REACHABLE and result.run.word == ()

    def test_norm_precondition(self, two_counter):
        with pytest.raises(ValueError):
            bfs_oracle(two_counter, 1, 10)


class TestExploreLocal:
    def test_three_counter_example(self, three_counter):
        summary = explore_local(three_counter, (1, 0, 1),
                                [((0, 0, 0), (0, 1, 0))], 8, 16, 6)
        assert summary.F_gamma == frozenset({0, 2})
        assert summary.s_gamma == OmegaVec.of(1, OMEGA, 1)
        assert summary.s_in == OmegaVec.of(1, 0, 1)
        assert summary.s_out == OmegaVec.of(1, OMEGA, 1)
        assert summary.states == frozenset({
            OmegaVec.of(2, OMEGA, 0), OmegaVec.of(1, OMEGA, 1),
            OmegaVec.of(0, OMEGA, 2)})
        assert len(summary.edges) == 4

    def test_zero_generator_only(self):
        vas = Vas(2, (Action("u", (1, 1)),))
        summary = explore_local(vas, (0, 0), [((0, 0), (0, 0))], 4, 6, 3)
        assert summary.states == frozenset({OmegaVec.of(0, 0)})
        assert not summary.edges

    def test_unconnected_generator_rejected(self):
        vas = Vas(1, (Action("d", (-1,)),))
        with pytest.raises(GeneratorNotValidatedError):
            explore_local(vas, (0,), [((0,), (1,))], 4, 6, 2)


class TestRunJson:
    def test_round_trip(self, two_counter, two_counter_run):
        data = run_to_json(two_counter_run)
        assert data["source"] == [0, 2]
        assert [s["action"] for s in data["steps"]] == list("aaaabbb")
        back = run_from_json(data, two_counter.vas)
        assert back == two_counter_run

    def test_target_mismatch_rejected(self, two_counter, two_counter_run):
        data = run_to_json(two_counter_run)
        data["target"] = [9, 9]
        with pytest.raises(ValueError):
            run_from_json(data, two_counter.vas)
