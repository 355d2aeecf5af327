"""Canonical forms, the communication table, and the termination weight."""

import random

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

import termgen
from siacp.kernel import (
    DELTA,
    Action,
    ActionName,
    Alt,
    CommTable,
    Inaction,
    Seq,
    TermError,
    ThetaError,
    alt,
    canonicalize,
    gamma_apply,
    gamma_validate,
    is_closed,
    seq,
    sort_key,
    theta_eval,
)

A = ActionName.plain("a")
B = ActionName.plain("b")
C = ActionName.plain("c")


def p(name):
    return Action(ActionName.plain(name))


class TestActionName:
    def test_labels(self):
        assert ActionName.plain("go").label == "go"
        assert ActionName.create_request("d").label == "cr(d)"
        assert ActionName.create_act("d").label == "rcr(d)"

    def test_plain_name_never_looks_like_creation(self):
        # The creation spellings live in the kind, not the identifier.
        assert ActionName.plain("crd").label == "crd"
        with pytest.raises(TermError):
            ActionName.plain("cr(d)")

    def test_lowercase_initial_required(self):
        with pytest.raises(TermError):
            ActionName.plain("Ax")


class TestCanonicalize:
    def test_commutativity_orders_branches(self):
        assert canonicalize(Alt((p("b"), p("a")))) == canonicalize(Alt((p("a"), p("b"))))

    def test_idempotent_choice_collapses(self):
        assert canonicalize(Alt((p("a"), p("a")))) == p("a")

    def test_inaction_unit_then_collapse(self):
        t = Alt((Alt((p("a"), DELTA)), p("a")))
        assert canonicalize(t) == p("a")

    def test_nested_choice_flattens(self):
        t = Alt((Alt((p("a"), p("b"))), p("c")))
        out = canonicalize(t)
        assert isinstance(out, Alt)
        assert len(out.children) == 3

    def test_nested_sequence_flattens(self):
        t = Seq((Seq((p("a"), p("b"))), p("c")))
        assert canonicalize(t) == Seq((p("a"), p("b"), p("c")))

    def test_all_inaction_choice_is_inaction(self):
        assert canonicalize(Alt((DELTA, DELTA))) == DELTA

    def test_idempotent_on_corpus(self, corpus500):
        for t in corpus500[:200]:
            once = canonicalize(t)
            assert canonicalize(once) == once

    def test_sort_key_total_on_corpus(self, corpus500):
        keys = [sort_key(t) for t in corpus500[:100]]
        sorted(keys)  # comparable without type errors

    @given(st.permutations(["a", "b", "c", "a_b", "zz"]))
    @settings(max_examples=30, deadline=None)
    def test_choice_order_independent(self, names):
        reference = alt([p(n) for n in sorted(names)])
        assert alt([p(n) for n in names]) == reference


class TestGamma:
    def table(self, entries=((A, B, C),)):
        return CommTable({A, B, C}, entries)

    def test_lookup(self):
        assert gamma_apply(self.table(), A, B) == C

    def test_symmetric(self):
        ct = self.table()
        assert gamma_apply(ct, B, A) == C
        for x in (A, B, C, None):
            for y in (A, B, C, None):
                assert gamma_apply(ct, x, y) == gamma_apply(ct, y, x)

    def test_inaction_absorbs(self):
        assert gamma_apply(self.table(), None, A) is None

    def test_creation_request_never_synchronizes(self):
        assert gamma_apply(self.table(), ActionName.create_request("d"), A) is None

    def test_missing_pair_defaults_to_inaction(self):
        assert gamma_apply(self.table(), A, C) is None

    def test_valid_table_passes_exhaustively(self):
        # Oracle: brute-force associativity over (alphabet + inaction)^3.
        ct = self.table()

        def lookup(x, y):
            if x is None or y is None:
                return None
            return {frozenset((A, B)): C}.get(frozenset((x, y)))

        failures = [
            (x, y, z)
            for x in (A, B, C, None)
            for y in (A, B, C, None)
            for z in (A, B, C, None)
            if lookup(lookup(x, y), z) != lookup(x, lookup(y, z))
        ]
        assert failures == []
        assert gamma_validate(ct) == []

    def test_nonassociative_table_is_flagged(self):
        # gamma(a,b)=a fails on (a,b,b): gamma(gamma(a,b),b)=a but
        # gamma(a,gamma(b,b))=delta; the brute-force oracle agrees.
        ct = CommTable({A, B}, [(A, B, A)])

        def lookup(x, y):
            if x is None or y is None:
                return None
            return {frozenset((A, B)): A}.get(frozenset((x, y)))

        oracle_failures = [
            (x, y, z)
            for x in (A, B, None)
            for y in (A, B, None)
            for z in (A, B, None)
            if lookup(lookup(x, y), z) != lookup(x, lookup(y, z))
        ]
        assert oracle_failures
        report = gamma_validate(ct)
        assert any("associativity" in line for line in report)
        assert len([line for line in report if "associativity" in line]) == len(oracle_failures)

    def test_creation_request_result_is_flagged(self):
        ct = CommTable({A, B}, [(A, B, ActionName.create_request("d"))])
        assert any("creation request" in line for line in gamma_validate(ct))

    def test_undeclared_operand_is_flagged(self):
        ct = CommTable({A}, [(A, B, A)])
        assert any("not in alphabet" in line for line in gamma_validate(ct))


class TestTheta:
    def test_action(self):
        assert theta_eval(p("a"), {}, {}) == 2

    def test_inaction(self):
        assert theta_eval(DELTA, {}, {}) == 2

    def test_sequence(self):
        assert theta_eval(seq([p("a"), p("b")]), {}, {}) == 8

    def test_parallel(self):
        from siacp.kernel import Par

        assert theta_eval(Par(p("a"), p("b")), {}, {}) == 49

    def test_choice_adds(self):
        assert theta_eval(alt([p("a"), p("b")]), {}, {}) == 4

    def test_merges_square_product(self):
        from siacp.kernel import CommMerge, LeftMerge

        assert theta_eval(LeftMerge(p("a"), p("b")), {}, {}) == 16
        assert theta_eval(CommMerge(p("a"), p("b")), {}, {}) == 16

    def test_encapsulation_exponentiates(self):
        from siacp.kernel import Encap

        assert theta_eval(Encap(frozenset({A}), p("a")), {}, {}) == 4

    def test_creation_request_uses_spawned_process(self):
        t = Action(ActionName.create_request("d"))
        assert theta_eval(t, {"d": p("b")}, {}) == 5
        assert theta_eval(Action(ActionName.create_act("d")), {}, {}) == 2

    def test_interleaving_weights(self):
        from siacp.kernel import Posm, Si
        from siacp.strategies import EMPTY_HISTORY

        si = Si(EMPTY_HISTORY, "init", (p("a"), p("b")))
        posm = Posm(1, EMPTY_HISTORY, "init", (p("a"), p("b")))
        assert theta_eval(si, {}, {}) == 2 * 16 - 1
        assert theta_eval(posm, {}, {}) == 2 * 16 - 2

    def test_recursive_constants(self):
        from siacp.kernel import RecConst

        kinds = {"P": "acp", "Q": "siacp"}
        assert theta_eval(RecConst("X", "P"), {}, kinds) == 2
        assert theta_eval(RecConst("X", "Q"), {}, kinds) == 3
        with pytest.raises(ThetaError):
            theta_eval(RecConst("X", "R"), {}, kinds)

    def test_unknown_datum(self):
        with pytest.raises(ThetaError):
            theta_eval(Action(ActionName.create_request("nope")), {}, {})

    def test_self_spawning_datum(self):
        t = Action(ActionName.create_request("d"))
        with pytest.raises(ThetaError):
            theta_eval(t, {"d": t}, {})

    def test_weight_at_least_two_on_corpus(self, corpus500):
        for t in corpus500[:200]:
            assert theta_eval(t, termgen.PHI, {}) >= 2

    def test_invariant_under_branch_permutation(self):
        rng = random.Random(7)
        branches = [p("a"), seq([p("b"), p("c")]), p("c")]
        reference = theta_eval(alt(branches), {}, {})
        for _ in range(10):
            rng.shuffle(branches)
            assert theta_eval(alt(branches), {}, {}) == reference


def test_closedness_predicate():
    from siacp.kernel import Var

    assert is_closed(p("a"))
    assert not is_closed(alt([p("a"), seq([p("b"), Var("X")])]))
