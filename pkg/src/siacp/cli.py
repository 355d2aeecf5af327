"""Concrete syntax and the command-line interface.

Terms: choice binds weakest (`+`), sequence strongest (`.`), and the three
merge operators (`||`, `|L`, `|C`) sit in between at equal precedence,
associating left.  Atoms are `delta`, lowercase-initial action names,
`cr(d)` / `rcr(d)` creation actions, `encap{a,b}(t)`, `si(...)` and
`posm[i](...)` (optionally with `@[(i,n)...]` history and `$literal`
control state), `<X|Spec>` constants, uppercase-initial variables inside
specification bodies, and parenthesized terms.

Definition files are line-oriented: `acts a, b`, `gamma a b = c`,
`proc d = <term>`, `spec P { X = <term>; ... }`, `strategy <name>`,
`policy halt|defer`, with `#` comments.  Printing is the inverse of
parsing on canonical terms, with minimal parentheses, dots printed tight,
and default histories and states omitted.
"""

from __future__ import annotations

import argparse
import sys
import warnings
from dataclasses import dataclass, field
from typing import Dict, FrozenSet, List, Optional, Sequence, Set, Tuple

from .kernel import (
    CREATE_ACT,
    CREATE_REQUEST,
    DELTA,
    Action,
    ActionName,
    Alt,
    CommMerge,
    CommTable,
    Encap,
    Inaction,
    LeftMerge,
    Par,
    Posm,
    RecConst,
    Seq,
    Si,
    Term,
    TermError,
    ThetaError,
    Var,
    alt,
    canonicalize,
    gamma_validate,
    is_closed,
    iter_subterms,
    seq,
    theta_eval,
)
from .recursion import (
    GUARDED,
    UNKNOWN,
    RecSpec,
    SpecError,
    check_guarded,
    reduce_spec,
)
from .rewrite import (
    DEFAULT_STEP_BUDGET,
    BudgetExceeded,
    Context,
    EliminationDefect,
    UndeclaredDatumError,
    UnguardedTermError,
    eliminate,
    full_ruleset,
    head_normal_form,
    is_head_normal_form,
    normalize,
)
from .semantics import (
    TICK_TARGET,
    BisimResult,
    bisimilar,
    build_lts,
    enumerate_traces,
    export_dot,
    sos_step,
)
from .strategies import (
    DEFER,
    HALT,
    INITIAL_STATE,
    EMPTY_HISTORY,
    History,
    HistoryError,
    PolicyError,
    StateDecodeError,
    StrategyContractError,
    UnknownStrategyError,
    get_strategy,
    history_validate,
)

__all__ = [
    "ParseError",
    "DefsFile",
    "parse_term",
    "parse_defs",
    "format_term",
    "format_spec",
    "run_command",
    "main",
    "EXIT_OK",
    "EXIT_INPUT",
    "EXIT_BUDGET",
    "EXIT_INTERNAL",
]

EXIT_OK = 0
EXIT_INPUT = 1
EXIT_BUDGET = 2
EXIT_INTERNAL = 3

_KEYWORDS = {"delta", "cr", "rcr", "si", "posm", "encap"}


class ParseError(ValueError):
    """Syntax or declaration error, with a position into the source."""

    def __init__(self, message: str, pos: int, line: Optional[int] = None):
        where = f"line {line}, " if line is not None else ""
        super().__init__(f"{where}offset {pos}: {message}")
        self.pos = pos
        self.line = line


class VerifyError(RuntimeError):
    """A verification-mode assertion failed; an engine defect."""


@dataclass
class DefsFile:
    """Parsed definitions: the action alphabet, the synchronization table,
    the spawned-process map, named specifications, and defaults for the
    strategy and deadlock policy."""

    actions: FrozenSet[ActionName] = frozenset()
    comm: CommTable = field(default_factory=CommTable)
    phi: Dict[str, Term] = field(default_factory=dict)
    specs: Dict[str, RecSpec] = field(default_factory=dict)
    strategy_name: str = "round-robin"
    policy: str = HALT
    permissive: bool = False
    #: Data whose spawned processes are still being parsed; lets them
    #: reference each other.
    pending_data: FrozenSet[str] = frozenset()

    def to_context(
        self,
        strategy_name: Optional[str] = None,
        policy: Optional[str] = None,
        extra_actions: FrozenSet[ActionName] = frozenset(),
    ) -> Context:
        comm = self.comm
        if extra_actions - comm.alphabet:
            comm = CommTable(comm.alphabet | extra_actions, comm.entries())
        return Context(
            comm=comm,
            phi=dict(self.phi),
            specs=dict(self.specs),
            strategy=get_strategy(strategy_name or self.strategy_name),
            policy=policy or self.policy,
        )


# --- scanning and term parsing -------------------------------------------------


class _Scanner:
    def __init__(self, src: str, line: Optional[int] = None):
        self.src = src
        self.pos = 0
        self.line = line

    def error(self, message: str) -> ParseError:
        return ParseError(message, self.pos, self.line)

    def skip_ws(self) -> None:
        while self.pos < len(self.src) and self.src[self.pos].isspace():
            self.pos += 1

    def at_end(self) -> bool:
        self.skip_ws()
        return self.pos >= len(self.src)

    def peek(self, text: str) -> bool:
        self.skip_ws()
        return self.src.startswith(text, self.pos)

    def take(self, text: str) -> bool:
        if self.peek(text):
            self.pos += len(text)
            return True
        return False

    def expect(self, text: str) -> None:
        if not self.take(text):
            raise self.error(f"expected {text!r}")

    def ident(self) -> str:
        self.skip_ws()
        start = self.pos
        if self.pos < len(self.src) and self.src[self.pos].isalpha():
            self.pos += 1
            while self.pos < len(self.src) and (
                self.src[self.pos].isalnum() or self.src[self.pos] == "_"
            ):
                self.pos += 1
        if start == self.pos:
            raise self.error("expected an identifier")
        return self.src[start : self.pos]

    def nat(self) -> int:
        self.skip_ws()
        start = self.pos
        while self.pos < len(self.src) and self.src[self.pos].isdigit():
            self.pos += 1
        if start == self.pos:
            raise self.error("expected a number")
        return int(self.src[start : self.pos])

    def state_literal(self) -> str:
        # Everything after '$' up to '(' or whitespace; covers literals
        # like "w:0,2" without fighting the main token set.
        start = self.pos
        while self.pos < len(self.src):
            ch = self.src[self.pos]
            if ch == "(" or ch.isspace():
                break
            if not (ch.isalnum() or ch in ":,._-"):
                raise self.error(f"bad character {ch!r} in state literal")
            self.pos += 1
        if start == self.pos:
            raise self.error("expected a state literal after '$'")
        return self.src[start : self.pos]


class _TermParser:
    def __init__(
        self,
        scanner: _Scanner,
        defs: Optional[DefsFile],
        variables: FrozenSet[str],
        collected_actions: Optional[Set[ActionName]] = None,
    ):
        self.s = scanner
        self.defs = defs
        self.variables = variables
        self.collected = collected_actions

    def _action(self, name: str) -> ActionName:
        action = ActionName.plain(name)
        if self.defs is not None and not self.defs.permissive:
            if action not in self.defs.actions:
                raise self.s.error(f"undeclared action {name!r}")
        if self.collected is not None:
            self.collected.add(action)
        return action

    def _datum(self, name: str) -> str:
        known = set() if self.defs is None else set(self.defs.phi) | self.defs.pending_data
        if name not in known:
            raise self.s.error(f"no process is defined for datum {name!r}")
        return name

    def term(self) -> Term:
        branches = [self.merge()]
        while self.s.take("+"):
            branches.append(self.merge())
        return alt(branches)

    def merge(self) -> Term:
        left = self.sequence()
        while True:
            if self.s.take("||"):
                left = Par(left, self.sequence())
            elif self.s.take("|L"):
                left = LeftMerge(left, self.sequence())
            elif self.s.take("|C"):
                left = CommMerge(left, self.sequence())
            else:
                return left

    def sequence(self) -> Term:
        parts = [self.atom()]
        while self.s.take("."):
            parts.append(self.atom())
        return seq(parts)

    def atom(self) -> Term:
        s = self.s
        s.skip_ws()
        if s.take("("):
            inner = self.term()
            s.expect(")")
            return inner
        if s.take("<"):
            var = self._variable_name()
            s.expect("|")
            spec_name = s.ident()
            s.expect(">")
            if self.defs is not None and spec_name not in self.defs.specs:
                raise s.error(f"unknown specification {spec_name!r}")
            if self.defs is None:
                raise s.error("recursion constants need a definitions file")
            spec = self.defs.specs[spec_name]
            if var not in spec.equations:
                raise s.error(f"specification {spec_name!r} does not define {var}")
            return RecConst(var, spec_name)
        if s.pos < len(s.src) and s.src[s.pos].isalpha():
            mark = s.pos
            name = s.ident()
            if name == "delta":
                return DELTA
            if name in ("cr", "rcr"):
                s.expect("(")
                datum = s.ident()
                s.expect(")")
                self._datum(datum)
                if name == "cr":
                    return Action(ActionName.create_request(datum))
                return Action(ActionName.create_act(datum))
            if name == "encap":
                s.expect("{")
                blocked = [self._action(s.ident())]
                while s.take(","):
                    blocked.append(self._action(s.ident()))
                s.expect("}")
                s.expect("(")
                body = self.term()
                s.expect(")")
                return Encap(frozenset(blocked), body)
            if name == "si":
                hist, state = self._hist_state()
                procs = self._proc_list()
                return self._check_pool(Si(hist, state, procs))
            if name == "posm":
                s.expect("[")
                pos = s.nat()
                s.expect("]")
                hist, state = self._hist_state()
                procs = self._proc_list()
                if not 1 <= pos <= len(procs):
                    raise s.error(f"position {pos} outside 1..{len(procs)}")
                return self._check_pool(Posm(pos, hist, state, procs))
            if name[0].isupper():
                full = _dollar_suffix(s, name)
                if full in self.variables:
                    return Var(full)
                raise s.error(f"variable {full} is not in scope")
            s.pos = mark
            return Action(self._action(s.ident()))
        raise s.error("expected a term")

    def _variable_name(self) -> str:
        name = self.s.ident()
        if not name[0].isupper():
            raise self.s.error(f"variables are uppercase-initial, got {name!r}")
        return _dollar_suffix(self.s, name)

    def _hist_state(self) -> Tuple[History, str]:
        s = self.s
        hist = EMPTY_HISTORY
        state = INITIAL_STATE
        if s.take("@"):
            s.expect("[")
            pairs = []
            while s.take("("):
                i = s.nat()
                s.expect(",")
                n = s.nat()
                s.expect(")")
                pairs.append((i, n))
            s.expect("]")
            try:
                hist = history_validate(pairs)
            except HistoryError as exc:
                raise s.error(f"invalid history: {exc}") from None
        s.skip_ws()
        if s.pos < len(s.src) and s.src[s.pos] == "$":
            s.pos += 1
            state = s.state_literal()
        return hist, state

    def _proc_list(self) -> Tuple[Term, ...]:
        s = self.s
        s.expect("(")
        procs = [self.term()]
        while s.take(","):
            procs.append(self.term())
        s.expect(")")
        return tuple(procs)

    def _check_pool(self, node: Term) -> Term:
        for proc in node.procs:
            for sub in iter_subterms(proc):
                if isinstance(sub, Action) and sub.name.kind == CREATE_ACT:
                    warnings.warn(
                        f"{sub.name.label} inside an interleaving operator is "
                        f"treated as an ordinary action",
                        RuntimeWarning,
                        stacklevel=2,
                    )
                    return node
        return node


def _dollar_suffix(s: _Scanner, name: str) -> str:
    # Machine-made variables look like X$3; '$' otherwise introduces a
    # state literal, which never follows a bare identifier.
    if s.pos < len(s.src) and s.src[s.pos] == "$":
        save = s.pos
        s.pos += 1
        if s.pos < len(s.src) and s.src[s.pos].isdigit():
            return f"{name}${s.nat()}"
        s.pos = save
    return name


def parse_term(
    src: str,
    defs: Optional[DefsFile] = None,
    variables: FrozenSet[str] = frozenset(),
    collected_actions: Optional[Set[ActionName]] = None,
    line: Optional[int] = None,
) -> Term:
    """Parse one term.  With ``defs`` given, actions, data, and
    specification names are checked against it (unless the file is
    permissive); ``variables`` is the recursion-variable scope for
    specification bodies.  The result is canonical and its histories are
    validated."""
    scanner = _Scanner(src, line)
    parser = _TermParser(scanner, defs, variables, collected_actions)
    term = parser.term()
    if not scanner.at_end():
        raise scanner.error("trailing input after term")
    return canonicalize(term)


# --- definition files ------------------------------------------------------------


def parse_defs(src: str, extended_phi: bool = False) -> DefsFile:
    """Parse a definitions file and validate it: declared actions only, a
    lawful synchronization table, closed spawned processes (recursion
    constants in them only with ``extended_phi``), and guarded
    specifications."""
    statements = _split_statements(src)
    actions: Set[ActionName] = set()
    gamma_entries: List[Tuple[ActionName, ActionName, ActionName, int]] = []
    phi_sources: List[Tuple[str, str, int]] = []
    spec_sources: List[Tuple[str, List[Tuple[str, str]], int]] = []
    strategy_name = "round-robin"
    policy = HALT

    def declared(name: str, line: int) -> ActionName:
        action = ActionName.plain(name)
        if action not in actions:
            raise ParseError(f"undeclared action {name!r}", 0, line)
        return action

    for text, line in statements:
        scanner = _Scanner(text, line)
        keyword = scanner.ident()
        if keyword == "acts":
            while True:
                name = scanner.ident()
                if name in _KEYWORDS:
                    raise scanner.error(f"{name!r} is reserved and cannot be an action")
                try:
                    actions.add(ActionName.plain(name))
                except TermError as exc:
                    raise scanner.error(str(exc)) from None
                if not scanner.take(","):
                    break
            if not scanner.at_end():
                raise scanner.error("trailing input after action list")
        elif keyword == "gamma":
            a = declared(scanner.ident(), line)
            b = declared(scanner.ident(), line)
            scanner.expect("=")
            result_name = scanner.ident()
            if result_name == "delta":
                continue  # synchronizing to inaction is the default
            c = declared(result_name, line)
            gamma_entries.append((a, b, c, line))
        elif keyword == "proc":
            datum = scanner.ident()
            scanner.expect("=")
            phi_sources.append((datum, scanner.src[scanner.pos :], line))
        elif keyword == "spec":
            name = scanner.ident()
            scanner.expect("{")
            body_end = text.rindex("}")
            body = text[scanner.pos : body_end]
            equations = []
            for part in body.split(";"):
                part = part.strip()
                if not part:
                    continue
                eq_scanner = _Scanner(part, line)
                var = _dollar_suffix(eq_scanner, eq_scanner.ident())
                eq_scanner.expect("=")
                equations.append((var, part[eq_scanner.pos :]))
            spec_sources.append((name, equations, line))
        elif keyword == "strategy":
            scanner.skip_ws()
            strategy_name = scanner.src[scanner.pos :].strip()
            get_strategy(strategy_name)  # raises on unknown names
        elif keyword == "policy":
            value = scanner.ident()
            if value not in (HALT, DEFER):
                raise scanner.error(f"policy must be {HALT!r} or {DEFER!r}")
            policy = value
        else:
            raise scanner.error(f"unknown declaration {keyword!r}")

    defs = DefsFile(
        actions=frozenset(actions),
        comm=CommTable(actions, [(a, b, c) for a, b, c, _ in gamma_entries]),
        strategy_name=strategy_name,
        policy=policy,
    )
    problems = gamma_validate(defs.comm)
    if problems:
        raise ParseError("; ".join(problems), 0, gamma_entries[0][3] if gamma_entries else 1)

    # Spawned processes may reference each other's data, so declare the
    # domain first and parse the bodies against it.
    defs.pending_data = frozenset(d for d, _, _ in phi_sources)
    for datum, body_src, line in phi_sources:
        body = parse_term(body_src, defs, line=line)
        if not is_closed(body):
            raise ParseError(f"spawned process for {datum!r} must be closed", 0, line)
        if not extended_phi and any(isinstance(s, RecConst) for s in iter_subterms(body)):
            raise ParseError(
                f"spawned process for {datum!r} uses recursion constants; "
                f"enable extended spawning to allow this",
                0,
                line,
            )
        defs.phi[datum] = body
    defs.pending_data = frozenset()

    for name, equations, line in spec_sources:
        if name in defs.specs:
            raise ParseError(f"duplicate specification {name!r}", 0, line)
        scope = frozenset(var for var, _ in equations)
        parsed = {}
        for var, rhs in equations:
            if var in parsed:
                raise ParseError(f"specification {name!r} defines {var} twice", 0, line)
            parsed[var] = parse_term(rhs, defs, variables=scope, line=line)
        try:
            spec = RecSpec.make(name, parsed)
        except SpecError as exc:
            raise ParseError(str(exc), 0, line) from None
        defs.specs[name] = spec

    ctx = defs.to_context()
    for spec in defs.specs.values():
        verdict = check_guarded(spec, ctx)
        if verdict.status == UNKNOWN:
            raise ParseError(
                f"specification {spec.name!r}: guardedness of {verdict.variable} "
                f"undecided within the rewriting budget",
                0,
                1,
            )
        if not verdict.ok:
            raise ParseError(
                f"specification {spec.name!r} is unguarded at {verdict.variable}", 0, 1
            )
    return defs


def _split_statements(src: str) -> List[Tuple[str, int]]:
    """Split a definitions file into statements, joining lines until braces
    balance; '#' starts a comment."""
    statements: List[Tuple[str, int]] = []
    buffer: List[str] = []
    start_line = 0
    depth = 0
    for lineno, raw in enumerate(src.splitlines(), start=1):
        line = raw.split("#", 1)[0].rstrip()
        if not line.strip() and depth == 0:
            continue
        if not buffer:
            start_line = lineno
        buffer.append(line)
        depth += line.count("{") - line.count("}")
        if depth < 0:
            raise ParseError("unbalanced '}'", 0, lineno)
        if depth == 0:
            statement = " ".join(buffer).strip()
            if statement:
                statements.append((statement, start_line))
            buffer = []
    if depth != 0:
        raise ParseError("unbalanced '{'", 0, start_line)
    return statements


# --- printing ---------------------------------------------------------------------

_ATOM = 3
_SEQ = 2
_MERGE = 1
_ALT = 0


def _level(t: Term) -> int:
    if isinstance(t, Alt):
        return _ALT
    if isinstance(t, (Par, LeftMerge, CommMerge)):
        return _MERGE
    if isinstance(t, Seq):
        return _SEQ
    return _ATOM


def format_term(t: Term) -> str:
    """Canonical printing; `parse_term` inverts it on canonical terms."""
    return _fmt(t)


def _fmt(t: Term) -> str:
    if isinstance(t, Action):
        return t.name.label
    if isinstance(t, Inaction):
        return "delta"
    if isinstance(t, Alt):
        return " + ".join(_fmt(c) for c in t.children)
    if isinstance(t, Seq):
        return ".".join(_wrap(p, _SEQ) for p in t.parts)
    if isinstance(t, (Par, LeftMerge, CommMerge)):
        op = {Par: "||", LeftMerge: "|L", CommMerge: "|C"}[type(t)]
        return f"{_wrap_left_merge(t.left)} {op} {_wrap(t.right, _MERGE, strict=True)}"
    if isinstance(t, Encap):
        labels = ",".join(sorted(a.label for a in t.blocked))
        return f"encap{{{labels}}}({_fmt(t.body)})"
    if isinstance(t, Si):
        return f"si{_fmt_hist_state(t.hist, t.state)}({', '.join(_fmt(p) for p in t.procs)})"
    if isinstance(t, Posm):
        return (
            f"posm[{t.pos}]{_fmt_hist_state(t.hist, t.state)}"
            f"({', '.join(_fmt(p) for p in t.procs)})"
        )
    if isinstance(t, RecConst):
        return f"<{t.var}|{t.spec}>"
    if isinstance(t, Var):
        return t.name
    raise TermError(f"not a term: {t!r}")


def _wrap(t: Term, level: int, strict: bool = False) -> str:
    mine = _level(t)
    if mine < level or (strict and mine == level):
        return f"({_fmt(t)})"
    return _fmt(t)


def _wrap_left_merge(t: Term) -> str:
    # Merge chains associate left, so a merge as a left operand reparses
    # identically without parentheses.
    if _level(t) < _MERGE:
        return f"({_fmt(t)})"
    return _fmt(t)


def _fmt_hist_state(hist: History, state: str) -> str:
    out = ""
    if hist.entries:
        out += "@[" + "".join(f"({i},{n})" for i, n in hist.entries) + "]"
    if state != INITIAL_STATE:
        out += f"${state}"
    return out


def format_spec(spec: RecSpec) -> str:
    lines = [f"spec {spec.name} {{"]
    for var, body in spec.equations.items():
        lines.append(f"  {var} = {_fmt(body)};")
    lines.append("}")
    return "\n".join(lines)


# --- commands ---------------------------------------------------------------------


def _build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--defs", metavar="FILE", help="definitions file")
    common.add_argument("--strategy", metavar="NAME", help="interleaving strategy")
    common.add_argument("--policy", choices=[HALT, DEFER], help="deadlock policy")
    common.add_argument(
        "--budget",
        type=int,
        metavar="N",
        help="step budget (equations for reduce-spec, unfoldings for hnf)",
    )
    common.add_argument(
        "--verify",
        action="store_true",
        help="assert the termination-weight decrease and transition-system "
        "agreement on every rewrite step",
    )
    common.add_argument(
        "--extended-phi",
        action="store_true",
        help="allow recursion constants inside spawned processes",
    )

    parser = argparse.ArgumentParser(
        prog="siacp",
        description="Process-algebra toolkit with scheduler-driven interleaving",
    )
    sub = parser.add_subparsers(dest="command", required=True)
    sub.add_parser("normalize", parents=[common]).add_argument("term")
    sub.add_parser("eliminate", parents=[common]).add_argument("term")
    sub.add_parser("hnf", parents=[common]).add_argument("term")
    lts = sub.add_parser("lts", parents=[common])
    lts.add_argument("term")
    lts.add_argument("--dot", metavar="FILE", help="write the system as a DOT digraph")
    lts.add_argument("--max-states", type=int, default=4_000, metavar="N")
    lts.add_argument("--max-depth", type=int, default=1_000_000_000, metavar="N")
    bisim = sub.add_parser("bisim", parents=[common])
    bisim.add_argument("term1")
    bisim.add_argument("term2")
    bisim.add_argument("--max-states", type=int, default=4_000, metavar="N")
    trace = sub.add_parser("trace", parents=[common])
    trace.add_argument("term")
    trace.add_argument("--max-len", type=int, default=64, metavar="N")
    trace.add_argument("--max-traces", type=int, default=256, metavar="N")
    red = sub.add_parser("reduce-spec", parents=[common])
    red.add_argument("spec")
    red.add_argument("var")
    sub.add_parser("check", parents=[common]).add_argument("defsfile")
    return parser


def _load_defs(args) -> DefsFile:
    if args.defs:
        with open(args.defs, "r", encoding="utf-8") as handle:
            return parse_defs(handle.read(), extended_phi=args.extended_phi)
    return DefsFile(permissive=True)


def _context_for(args, defs: DefsFile, *terms: Term) -> Context:
    used = set()
    for t in terms:
        for sub in iter_subterms(t):
            if isinstance(sub, Action):
                used.add(sub.name)
    plain = frozenset(a for a in used if a.kind not in (CREATE_REQUEST, CREATE_ACT))
    return defs.to_context(args.strategy, args.policy, extra_actions=plain)


def _make_verifier(ctx: Context, policy: str):
    """Per-step assertions for verification mode: the termination weight
    strictly decreases under the halt policy (unfolding steps excepted, as
    they rebuild the measured term), and each step preserves behavior."""

    def on_step(before: Term, after: Term, rule: str) -> None:
        if policy != HALT:
            return
        if rule not in ("RDP",):
            kinds = ctx.spec_kinds()
            try:
                wb = theta_eval(before, ctx.phi, kinds)
                wa = theta_eval(after, ctx.phi, kinds)
            except ThetaError:
                return
            if not wb > wa:
                raise VerifyError(
                    f"termination weight did not decrease on {rule}: {wb} -> {wa}"
                )
        verdict = bisimilar(before, after, ctx, max_states=512)
        if verdict.verdict == "no":
            raise VerifyError(f"step {rule} changed behavior: {verdict.reason}")

    return on_step


def run_command(argv: Sequence[str], stdout=None, stderr=None) -> int:
    """Run one CLI invocation; returns the exit code (0 success, 1 input
    error, 2 budget exhausted, 3 internal invariant violation)."""
    stdout = stdout or sys.stdout
    stderr = stderr or sys.stderr
    parser = _build_parser()
    try:
        args = parser.parse_args(list(argv))
    except SystemExit as exc:
        return EXIT_INPUT if exc.code else EXIT_OK
    try:
        return _dispatch(args, stdout, stderr)
    except (
        ParseError,
        TermError,
        ThetaError,
        SpecError,
        HistoryError,
        StateDecodeError,
        PolicyError,
        UnknownStrategyError,
        UndeclaredDatumError,
        UnguardedTermError,
        FileNotFoundError,
    ) as exc:
        print(f"error: {exc}", file=stderr)
        return EXIT_INPUT
    except BudgetExceeded as exc:
        print(f"budget exhausted: {exc}", file=stderr)
        if exc.term is not None:
            print(f"last term: {format_term(exc.term)}", file=stderr)
        return EXIT_BUDGET
    except (EliminationDefect, VerifyError, StrategyContractError) as exc:
        print(f"internal invariant violation: {exc}", file=stderr)
        return EXIT_INTERNAL


def _dispatch(args, stdout, stderr) -> int:
    defs = _load_defs(args)
    policy = args.policy or defs.policy
    step_budget = args.budget or DEFAULT_STEP_BUDGET

    if args.command == "check":
        with open(args.defsfile, "r", encoding="utf-8") as handle:
            checked = parse_defs(handle.read(), extended_phi=args.extended_phi)
        print(
            f"ok: {len(checked.actions)} actions, "
            f"{len(checked.comm.entries())} gamma entries, "
            f"{len(checked.phi)} data, {len(checked.specs)} specs",
            file=stdout,
        )
        return EXIT_OK

    if args.command in ("normalize", "eliminate", "hnf", "lts", "trace"):
        term = parse_term(args.term, defs if args.defs else None)
        ctx = _context_for(args, defs, term)
        ctx.policy = policy
        if args.command in ("lts", "trace") and policy == DEFER:
            print(
                "error: the defer policy has no transition rules; "
                "lts and trace need --policy halt",
                file=stderr,
            )
            return EXIT_INPUT
        on_step = _make_verifier(ctx, policy) if args.verify else None
        if args.command == "normalize":
            result = normalize(
                full_ruleset(ctx, policy), term, step_budget=step_budget, on_step=on_step
            )
            print(format_term(result), file=stdout)
        elif args.command == "eliminate":
            result = eliminate(term, ctx, policy=policy, step_budget=step_budget, on_step=on_step)
            print(format_term(result), file=stdout)
        elif args.command == "hnf":
            result = head_normal_form(term, ctx, depth_budget=args.budget or 1_000, policy=policy)
            print(format_term(result), file=stdout)
        elif args.command == "lts":
            system = build_lts(term, ctx, max_states=args.max_states, max_depth=args.max_depth)
            print(
                f"states: {len(system.states)}\n"
                f"transitions: {len(system.transitions)}\n"
                f"truncated: {'yes' if system.truncated else 'no'}",
                file=stdout,
            )
            if args.dot:
                with open(args.dot, "w", encoding="utf-8") as handle:
                    handle.write(export_dot(system))
        else:
            for item in enumerate_traces(term, ctx, max_len=args.max_len, max_traces=args.max_traces):
                print(str(item), file=stdout)
        return EXIT_OK

    if args.command == "bisim":
        t1 = parse_term(args.term1, defs if args.defs else None)
        t2 = parse_term(args.term2, defs if args.defs else None)
        ctx = _context_for(args, defs, t1, t2)
        ctx.policy = policy
        if policy == DEFER:
            print(
                "error: the defer policy has no transition rules; bisim needs --policy halt",
                file=stderr,
            )
            return EXIT_INPUT
        verdict = bisimilar(t1, t2, ctx, max_states=args.max_states)
        if verdict.verdict == "yes":
            print("bisimilar", file=stdout)
        elif verdict.verdict == "no":
            print(f"not bisimilar: {verdict.reason}", file=stdout)
        else:
            print(f"unknown: {verdict.reason}", file=stdout)
        return EXIT_OK

    if args.command == "reduce-spec":
        if not args.defs:
            print("error: reduce-spec needs --defs", file=stderr)
            return EXIT_INPUT
        spec = defs.specs.get(args.spec)
        if spec is None:
            print(f"error: unknown specification {args.spec!r}", file=stderr)
            return EXIT_INPUT
        ctx = defs.to_context(args.strategy, args.policy)
        result = reduce_spec(spec, args.var, ctx, equation_budget=args.budget or 500)
        print(format_spec(result.spec), file=stdout)
        if not result.complete:
            print(
                f"budget exhausted: {len(result.frontier)} residuals unprocessed; "
                f"first: {', '.join(v for v, _ in result.frontier[:5])}",
                file=stderr,
            )
            return EXIT_BUDGET
        return EXIT_OK

    raise AssertionError(f"unhandled command {args.command!r}")


def main() -> None:
    sys.exit(run_command(sys.argv[1:]))


if __name__ == "__main__":
    main()
