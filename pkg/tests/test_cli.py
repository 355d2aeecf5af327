"""Concrete syntax, definition files, and the command-line interface."""

import io

import pytest

import termgen
from siacp.cli import (
    EXIT_BUDGET,
    EXIT_INPUT,
    EXIT_OK,
    DefsFile,
    ParseError,
    format_spec,
    format_term,
    parse_defs,
    parse_term,
    run_command,
)
from siacp.kernel import (
    DELTA,
    Action,
    ActionName,
    Alt,
    Encap,
    Posm,
    Seq,
    Si,
    alt,
    seq,
)
from siacp.strategies import EMPTY_HISTORY, INITIAL_STATE, History

BASE_DEFS = """
# shared declarations
acts a, b, c
gamma a b = c
proc d = b
spec P { X = a.X }
spec Q { X = a.si(b.b, c) + b.X }
strategy round-robin
policy halt
"""


def p(name):
    return Action(ActionName.plain(name))


@pytest.fixture()
def defs():
    return parse_defs(BASE_DEFS)


def run(argv, defs_path=None):
    out, err = io.StringIO(), io.StringIO()
    code = run_command(argv, stdout=out, stderr=err)
    return code, out.getvalue(), err.getvalue()


class TestParseTerm:
    def test_precedence(self):
        assert parse_term("a + b . c") == Alt((p("a"), Seq((p("b"), p("c")))))

    def test_pool_defaults(self):
        t = parse_term("si(a, b)")
        assert t == Si(EMPTY_HISTORY, INITIAL_STATE, (p("a"), p("b")))

    def test_positional_index_checked(self):
        with pytest.raises(ParseError):
            parse_term("posm[3](a, b)")

    def test_history_and_state(self):
        t = parse_term("si@[(1,2)(2,2)]$init(a, b)")
        assert t.hist == History(((1, 2), (2, 2)))
        assert t.state == INITIAL_STATE

    def test_invalid_history_rejected(self):
        with pytest.raises(ParseError):
            parse_term("si@[(1,2)(2,4)](a, b)")

    def test_aging_state_literal(self):
        t = parse_term("si$w:0,2(a, b)")
        assert t.state == "w:0,2"

    def test_merge_operators(self):
        t = parse_term("a || b |L c |C a")
        # Left-associative chain.
        from siacp.kernel import CommMerge, LeftMerge, Par

        assert isinstance(t, CommMerge)
        assert isinstance(t.left, LeftMerge)
        assert isinstance(t.left.left, Par)

    def test_undeclared_action_with_defs(self, defs):
        with pytest.raises(ParseError):
            parse_term("z", defs)

    def test_unknown_datum(self, defs):
        with pytest.raises(ParseError):
            parse_term("cr(zz)", defs)

    def test_recursion_constant(self, defs):
        from siacp.kernel import RecConst

        assert parse_term("<X|P>", defs) == RecConst("X", "P")
        with pytest.raises(ParseError):
            parse_term("<Y|P>", defs)

    def test_creation_act_inside_pool_warns(self, defs):
        with pytest.warns(RuntimeWarning):
            parse_term("si(rcr(d), a)", defs)

    def test_syntax_error_has_position(self):
        with pytest.raises(ParseError) as err:
            parse_term("a + ")
        assert "offset" in str(err.value)

    def test_round_trip_on_corpus(self, corpus500, defs):
        permissive = DefsFile(permissive=True, phi=dict(termgen.PHI))
        for t in corpus500[:150]:
            assert parse_term(format_term(t), permissive) == t

    def test_round_trip_with_history_and_state(self):
        t = Posm(2, History(((1, 2),)), "w:1,0", (p("a"), seq([p("b"), p("c")])))
        permissive = DefsFile(permissive=True)
        assert parse_term(format_term(t), permissive) == t

    def test_parentheses_minimal(self):
        assert format_term(parse_term("(a + b).c")) == "(a + b).c"
        assert format_term(parse_term("a.(b + c)")) == "a.(b + c)"
        assert format_term(parse_term("a || (b |C c)")) == "a || (b |C c)"


class TestParseDefs:
    def test_minimal(self):
        defs = parse_defs("acts a\n")
        assert len(defs.actions) == 1
        assert defs.comm.entries() == []
        assert defs.specs == {}

    def test_gamma_requires_declared_result(self):
        with pytest.raises(ParseError):
            parse_defs("acts a, b\ngamma a b = c\n")

    def test_unguarded_spec_rejected(self):
        with pytest.raises(ParseError) as err:
            parse_defs("acts a\nspec P { X = X + a }\n")
        assert "unguarded" in str(err.value)

    def test_rewritable_guard_accepted(self):
        defs = parse_defs("acts a, b\nspec P { X = (a + b).X }\n")
        assert "P" in defs.specs

    def test_phi_must_be_closed_and_first_order(self):
        with pytest.raises(ParseError) as err:
            parse_defs("acts a\nspec P { X = a.X }\nproc d = <X|P>\n")
        assert "recursion constants" in str(err.value)

    def test_extended_phi_allows_constants(self):
        defs = parse_defs("acts a\nspec P { X = a.X }\nproc d = <X|P>\n", extended_phi=True)
        assert "d" in defs.phi

    def test_duplicate_spec_rejected(self):
        with pytest.raises(ParseError):
            parse_defs("acts a\nspec P { X = a.X }\nspec P { X = a.X }\n")

    def test_policy_and_strategy_lines(self):
        defs = parse_defs("acts a\nstrategy aging\npolicy defer\n")
        assert defs.strategy_name == "aging"
        assert defs.policy == "defer"

    def test_unknown_strategy_rejected(self):
        with pytest.raises(Exception):
            parse_defs("acts a\nstrategy lottery\n")

    def test_comment_and_blank_lines(self):
        defs = parse_defs("\n# nothing\nacts a\n\n")
        assert len(defs.actions) == 1


class TestRunCommand:
    def test_eliminate_golden(self, tmp_path):
        path = tmp_path / "base.defs"
        path.write_text(BASE_DEFS)
        code, out, err = run(["eliminate", "si(a.b, c)", "--defs", str(path)])
        assert (code, out.strip(), err) == (EXIT_OK, "a.c.b", "")

    def test_bisim_yes(self):
        code, out, _ = run(["bisim", "a+a", "a"])
        assert code == EXIT_OK
        assert out.strip() == "bisimilar"

    def test_bisim_no(self):
        code, out, _ = run(["bisim", "a.(b+c)", "a.b + a.c"])
        assert code == EXIT_OK
        assert out.startswith("not bisimilar")

    def test_trace_rejects_defer(self):
        code, out, err = run(["trace", "si(delta, a)", "--policy", "defer"])
        assert code == EXIT_INPUT
        assert "defer" in err

    def test_normalize_defer(self):
        code, out, _ = run(["normalize", "si(delta, a)", "--policy", "defer"])
        assert (code, out.strip()) == (EXIT_OK, "a.delta")

    def test_trace_output(self):
        code, out, _ = run(["trace", "si(a.b, c)"])
        assert code == EXIT_OK
        assert out.strip() == "a c b [terminated]"

    def test_verify_does_not_change_result(self, tmp_path):
        path = tmp_path / "base.defs"
        path.write_text(BASE_DEFS)
        plain = run(["eliminate", "si(cr(d))", "--defs", str(path)])
        verified = run(["eliminate", "si(cr(d))", "--defs", str(path), "--verify"])
        assert plain[0] == verified[0] == EXIT_OK
        assert plain[1] == verified[1] == "rcr(d).b\n"

    def test_check_command(self, tmp_path):
        path = tmp_path / "base.defs"
        path.write_text(BASE_DEFS)
        code, out, _ = run(["check", str(path)])
        assert code == EXIT_OK
        assert out.startswith("ok:")

    def test_check_reports_line(self, tmp_path):
        path = tmp_path / "bad.defs"
        path.write_text("acts a\ngamma a a = zz\n")
        code, out, err = run(["check", str(path)])
        assert code == EXIT_INPUT
        assert "line 2" in err

    def test_reduce_spec_command(self, tmp_path):
        path = tmp_path / "base.defs"
        path.write_text(BASE_DEFS)
        code, out, err = run(["reduce-spec", "Q", "X", "--defs", str(path)])
        assert code == EXIT_OK
        assert out.startswith("spec Q_X_acp {")
        assert "si(" not in out

    def test_reduce_spec_budget_exit(self, tmp_path):
        path = tmp_path / "spawn.defs"
        path.write_text("acts a\nproc boom = a.cr(boom)\nspec P { X = si(cr(boom)) }\n")
        code, out, err = run(["reduce-spec", "P", "X", "--defs", str(path), "--budget", "10"])
        assert code == EXIT_BUDGET
        assert "budget exhausted" in err

    def test_budget_exit_code(self, tmp_path):
        path = tmp_path / "base.defs"
        path.write_text(BASE_DEFS)
        code, _, err = run(["eliminate", "si(<X|P>)", "--defs", str(path), "--budget", "60"])
        assert code == EXIT_BUDGET
        assert "budget" in err

    def test_lts_dot_output(self, tmp_path):
        dot = tmp_path / "out.dot"
        code, out, _ = run(["lts", "a.b", "--dot", str(dot)])
        assert code == EXIT_OK
        assert "states: 2" in out
        assert dot.read_text().startswith("digraph lts {")

    def test_unknown_action_without_defs_is_fine(self):
        code, out, _ = run(["normalize", "pick || drop"])
        assert code == EXIT_OK

    def test_input_error_exit(self, tmp_path):
        code, _, err = run(["normalize", "a +"])
        assert code == EXIT_INPUT
        assert "error" in err

    def test_deterministic_output(self):
        first = run(["eliminate", "si(a || b, c)"])
        second = run(["eliminate", "si(a || b, c)"])
        assert first == second


def test_format_spec_round_trip(defs):
    text = format_spec(defs.specs["Q"])
    reparsed = parse_defs("acts a, b, c\nproc d = b\n" + text)
    assert reparsed.specs["Q"].equations == defs.specs["Q"].equations
