"""The axiom tables as a rewrite system over canonical terms: single
steps, normalization, head normal forms, and elimination of the
interleaving and parallel operators.

Canonicalization already quotients by commutativity, associativity,
idempotence and inaction units of choice, so the rules here are the
remaining axioms oriented left to right.  Under the halt policy every
rule strictly decreases the kernel's termination weight, which makes
normalization of closed terms total; the defer policy trades that
guarantee for deadlock postponement and leans on the step budget.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable, Dict, Optional, Tuple

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
    Var,
    alt,
    canonicalize,
    gamma_apply,
    seq,
)
from .strategies import (
    DEFER,
    HALT,
    Strategy,
    get_strategy,
    sched_dispatch,
    update_dispatch,
)

__all__ = [
    "Context",
    "RuleSet",
    "full_ruleset",
    "acp_ruleset",
    "rewrite_step",
    "normalize",
    "head_normal_form",
    "eliminate",
    "BudgetExceeded",
    "EliminationDefect",
    "UndeclaredDatumError",
    "UnguardedTermError",
    "DEFAULT_STEP_BUDGET",
    "DEFAULT_UNFOLD_BUDGET",
    "INNERMOST",
    "OUTERMOST",
]

DEFAULT_STEP_BUDGET = 100_000
DEFAULT_UNFOLD_BUDGET = 1_000

INNERMOST = "innermost"
OUTERMOST = "outermost"


class BudgetExceeded(RuntimeError):
    """A step or unfolding budget ran out; carries the last term reached."""

    def __init__(self, message: str, term: Optional[Term] = None):
        super().__init__(message)
        self.term = term


class EliminationDefect(RuntimeError):
    """A normal form kept an operator the rule set must eliminate.  This is
    an engine defect, not an input error."""


class UndeclaredDatumError(ValueError):
    """A creation request over a datum with no spawned process defined."""


class UnguardedTermError(ValueError):
    """A variable occurrence surfaced where a guard was required."""


@dataclass
class Context:
    """Everything the engines need besides the term itself: the
    synchronization table, the spawned-process map, the specification
    registry, the active strategy, and the deadlock policy."""

    comm: CommTable
    phi: Dict[str, Term] = field(default_factory=dict)
    specs: Dict[str, object] = field(default_factory=dict)
    strategy: Strategy = None
    policy: str = HALT
    _reduced: Dict[Tuple[str, str], str] = field(default_factory=dict, repr=False)

    def __post_init__(self):
        if self.strategy is None:
            self.strategy = get_strategy("round-robin")
        if self.policy not in (HALT, DEFER):
            raise ValueError(f"unknown policy {self.policy!r}")

    def spec_kinds(self) -> Dict[str, str]:
        return {name: spec.over for name, spec in self.specs.items()}

    def spawned(self, datum: str) -> Term:
        try:
            return self.phi[datum]
        except KeyError:
            raise UndeclaredDatumError(f"no process is defined for datum {datum!r}") from None


Rule = Tuple[str, Callable]


@dataclass
class RuleSet:
    """An ordered rule list under one deadlock policy, bound to a context.

    The halt rule set is the full axiom table minus the four laws folded
    into canonicalization; the defer variant swaps the immediate-deadlock
    rule for the two deadlock-postponing ones.  ``acp_only`` drops the
    interleaving rules and recursion hooks, leaving the core table.
    """

    policy: str
    rules: Tuple[Rule, ...]
    ctx: Context
    acp_only: bool = False


# --- the core rules ----------------------------------------------------------
#
# Each rule takes the candidate redex (always canonical) and the rule set,
# returning the contractum or None.  Sequences are flat tuples, so the two
# rules that look inside a sequence pick their slot innermost-first or
# outermost-first depending on the traversal mode.


def _is_const(t: Term) -> bool:
    return isinstance(t, (Action, Inaction))


def _const_name(t: Term) -> Optional[ActionName]:
    return t.name if isinstance(t, Action) else None


def _gamma_term(ctx: Context, x: Term, y: Term) -> Term:
    result = gamma_apply(ctx.comm, _const_name(x), _const_name(y))
    return DELTA if result is None else Action(result)


def _r_a4(t: Term, rs: RuleSet, mode: str) -> Optional[Term]:
    # (x + y) . z distributes; in a flat sequence any non-final choice slot
    # is such a redex.
    if not isinstance(t, Seq):
        return None
    slots = [k for k in range(len(t.parts) - 1) if isinstance(t.parts[k], Alt)]
    if not slots:
        return None
    k = slots[-1] if mode == INNERMOST else slots[0]
    rest = t.parts[k + 1 :]
    branches = [seq((c,) + rest) for c in t.parts[k].children]
    return seq(t.parts[:k] + (alt(branches),))


def _r_a5(t: Term, rs: RuleSet, mode: str) -> Optional[Term]:
    # Nested sequences cannot occur in canonical terms; kept so the rule
    # list matches the axiom table and non-canonical input still reduces.
    if isinstance(t, Seq) and any(isinstance(p, Seq) for p in t.parts):
        return seq(t.parts)
    return None


def _r_a7(t: Term, rs: RuleSet, mode: str) -> Optional[Term]:
    # delta . x = delta; any non-final inaction slot truncates the tail.
    if not isinstance(t, Seq):
        return None
    slots = [k for k in range(len(t.parts) - 1) if isinstance(t.parts[k], Inaction)]
    if not slots:
        return None
    k = slots[-1] if mode == INNERMOST else slots[0]
    return seq(t.parts[: k + 1])


def _r_cm1(t: Term, rs: RuleSet, mode: str) -> Optional[Term]:
    if isinstance(t, Par):
        return alt(
            [
                LeftMerge(t.left, t.right),
                LeftMerge(t.right, t.left),
                CommMerge(t.left, t.right),
            ]
        )
    return None


def _r_cm2(t: Term, rs: RuleSet, mode: str) -> Optional[Term]:
    if isinstance(t, LeftMerge) and _is_const(t.left):
        return seq([t.left, t.right])
    return None


def _r_cm3(t: Term, rs: RuleSet, mode: str) -> Optional[Term]:
    if (
        isinstance(t, LeftMerge)
        and isinstance(t.left, Seq)
        and _is_const(t.left.parts[0])
    ):
        head, tail = t.left.parts[0], seq(t.left.parts[1:])
        return seq([head, Par(tail, t.right)])
    return None


def _r_cm4(t: Term, rs: RuleSet, mode: str) -> Optional[Term]:
    if isinstance(t, LeftMerge) and isinstance(t.left, Alt):
        return alt(LeftMerge(c, t.right) for c in t.left.children)
    return None


def _r_cm5(t: Term, rs: RuleSet, mode: str) -> Optional[Term]:
    if (
        isinstance(t, CommMerge)
        and isinstance(t.left, Seq)
        and _is_const(t.left.parts[0])
        and _is_const(t.right)
    ):
        head, tail = t.left.parts[0], seq(t.left.parts[1:])
        return seq([_gamma_term(rs.ctx, head, t.right), tail])
    return None


def _r_cm6(t: Term, rs: RuleSet, mode: str) -> Optional[Term]:
    if (
        isinstance(t, CommMerge)
        and _is_const(t.left)
        and isinstance(t.right, Seq)
        and _is_const(t.right.parts[0])
    ):
        head, tail = t.right.parts[0], seq(t.right.parts[1:])
        return seq([_gamma_term(rs.ctx, t.left, head), tail])
    return None


def _r_cm7(t: Term, rs: RuleSet, mode: str) -> Optional[Term]:
    if (
        isinstance(t, CommMerge)
        and isinstance(t.left, Seq)
        and _is_const(t.left.parts[0])
        and isinstance(t.right, Seq)
        and _is_const(t.right.parts[0])
    ):
        lh, lt = t.left.parts[0], seq(t.left.parts[1:])
        rh, rt = t.right.parts[0], seq(t.right.parts[1:])
        return seq([_gamma_term(rs.ctx, lh, rh), Par(lt, rt)])
    return None


def _r_cm8(t: Term, rs: RuleSet, mode: str) -> Optional[Term]:
    if isinstance(t, CommMerge) and isinstance(t.left, Alt):
        return alt(CommMerge(c, t.right) for c in t.left.children)
    return None


def _r_cm9(t: Term, rs: RuleSet, mode: str) -> Optional[Term]:
    if isinstance(t, CommMerge) and isinstance(t.right, Alt):
        return alt(CommMerge(t.left, c) for c in t.right.children)
    return None


def _r_cm10(t: Term, rs: RuleSet, mode: str) -> Optional[Term]:
    if isinstance(t, CommMerge) and isinstance(t.left, Inaction):
        return DELTA
    return None


def _r_cm11(t: Term, rs: RuleSet, mode: str) -> Optional[Term]:
    if isinstance(t, CommMerge) and isinstance(t.right, Inaction):
        return DELTA
    return None


def _r_cm12(t: Term, rs: RuleSet, mode: str) -> Optional[Term]:
    if isinstance(t, CommMerge) and _is_const(t.left) and _is_const(t.right):
        return _gamma_term(rs.ctx, t.left, t.right)
    return None


def _r_d1_d2(t: Term, rs: RuleSet, mode: str) -> Optional[Term]:
    if isinstance(t, Encap):
        if isinstance(t.body, Inaction):
            return DELTA
        if isinstance(t.body, Action):
            return DELTA if t.body.name in t.blocked else t.body
    return None


def _r_d3(t: Term, rs: RuleSet, mode: str) -> Optional[Term]:
    if isinstance(t, Encap) and isinstance(t.body, Alt):
        return alt(Encap(t.blocked, c) for c in t.body.children)
    return None


def _r_d4(t: Term, rs: RuleSet, mode: str) -> Optional[Term]:
    if isinstance(t, Encap) and isinstance(t.body, Seq):
        head, tail = t.body.parts[0], seq(t.body.parts[1:])
        return seq([Encap(t.blocked, head), Encap(t.blocked, tail)])
    return None


# --- interleaving rules ------------------------------------------------------
#
# The component at the scheduled position dictates which rule fires.  Bare
# and prefixed actions move (creation requests spawn instead, appending the
# spawned process to the pool), inaction deadlocks per policy, and a choice
# at the position distributes over the operator.  History entries record
# the mover and the process count after the step; the control state is
# transformed with the count before the step, matching the axioms.


def _r_si1(t: Term, rs: RuleSet, mode: str) -> Optional[Term]:
    if isinstance(t, Si):
        i = sched_dispatch(rs.ctx.strategy, len(t.procs), t.hist, t.state)
        return Posm(i, t.hist, t.state, t.procs)
    return None


def _drop(procs: Tuple[Term, ...], pos: int) -> Tuple[Term, ...]:
    return procs[: pos - 1] + procs[pos:]


def _swap(procs: Tuple[Term, ...], pos: int, term: Term) -> Tuple[Term, ...]:
    return procs[: pos - 1] + (term,) + procs[pos:]


def _update(rs: RuleSet, t: Posm, action: Optional[ActionName]) -> str:
    return update_dispatch(
        rs.ctx.strategy, len(t.procs), t.hist, t.state, t.pos, action, policy=rs.policy
    )


def _r_si2(t: Term, rs: RuleSet, mode: str) -> Optional[Term]:
    if isinstance(t, Posm) and isinstance(t.procs[t.pos - 1], Inaction):
        return DELTA
    return None


def _r_si2a(t: Term, rs: RuleSet, mode: str) -> Optional[Term]:
    if (
        isinstance(t, Posm)
        and len(t.procs) == 1
        and isinstance(t.procs[t.pos - 1], Inaction)
    ):
        return DELTA
    return None


def _r_si2b(t: Term, rs: RuleSet, mode: str) -> Optional[Term]:
    if (
        isinstance(t, Posm)
        and len(t.procs) > 1
        and isinstance(t.procs[t.pos - 1], Inaction)
    ):
        n = len(t.procs)
        hist = t.hist.extend(t.pos, n - 1)
        state = _update(rs, t, None)
        return seq([Si(hist, state, _drop(t.procs, t.pos)), DELTA])
    return None


def _movable(name: ActionName) -> bool:
    # Creation requests are handled by their own rules; creation acts move
    # like any other action.
    return name.kind != CREATE_REQUEST


def _r_si3(t: Term, rs: RuleSet, mode: str) -> Optional[Term]:
    if (
        isinstance(t, Posm)
        and len(t.procs) == 1
        and isinstance(t.procs[0], Action)
        and _movable(t.procs[0].name)
    ):
        return t.procs[0]
    return None


def _r_si4(t: Term, rs: RuleSet, mode: str) -> Optional[Term]:
    if isinstance(t, Posm) and len(t.procs) > 1:
        comp = t.procs[t.pos - 1]
        if isinstance(comp, Action) and _movable(comp.name):
            n = len(t.procs)
            hist = t.hist.extend(t.pos, n - 1)
            state = _update(rs, t, comp.name)
            return seq([comp, Si(hist, state, _drop(t.procs, t.pos))])
    return None


def _r_si5(t: Term, rs: RuleSet, mode: str) -> Optional[Term]:
    if isinstance(t, Posm):
        comp = t.procs[t.pos - 1]
        if (
            isinstance(comp, Seq)
            and isinstance(comp.parts[0], Action)
            and _movable(comp.parts[0].name)
        ):
            head, tail = comp.parts[0], seq(comp.parts[1:])
            n = len(t.procs)
            hist = t.hist.extend(t.pos, n)
            state = _update(rs, t, head.name)
            return seq([head, Si(hist, state, _swap(t.procs, t.pos, tail))])
    return None


def _r_si6(t: Term, rs: RuleSet, mode: str) -> Optional[Term]:
    if isinstance(t, Posm):
        comp = t.procs[t.pos - 1]
        if isinstance(comp, Action) and comp.name.kind == CREATE_REQUEST:
            datum = comp.name.base
            spawned = canonicalize(rs.ctx.spawned(datum))
            n = len(t.procs)
            hist = t.hist.extend(t.pos, n)
            state = _update(rs, t, comp.name)
            pool = _drop(t.procs, t.pos) + (spawned,)
            return seq([Action(ActionName.create_act(datum)), Si(hist, state, pool)])
    return None


def _r_si7(t: Term, rs: RuleSet, mode: str) -> Optional[Term]:
    if isinstance(t, Posm):
        comp = t.procs[t.pos - 1]
        if (
            isinstance(comp, Seq)
            and isinstance(comp.parts[0], Action)
            and comp.parts[0].name.kind == CREATE_REQUEST
        ):
            datum = comp.parts[0].name.base
            spawned = canonicalize(rs.ctx.spawned(datum))
            tail = seq(comp.parts[1:])
            n = len(t.procs)
            hist = t.hist.extend(t.pos, n + 1)
            state = _update(rs, t, comp.parts[0].name)
            pool = _swap(t.procs, t.pos, tail) + (spawned,)
            return seq([Action(ActionName.create_act(datum)), Si(hist, state, pool)])
    return None


def _r_si8(t: Term, rs: RuleSet, mode: str) -> Optional[Term]:
    if isinstance(t, Posm) and isinstance(t.procs[t.pos - 1], Alt):
        return alt(
            Posm(t.pos, t.hist, t.state, _swap(t.procs, t.pos, c))
            for c in t.procs[t.pos - 1].children
        )
    return None


# --- recursion hooks ----------------------------------------------------------


def _r_rec_reduce(t: Term, rs: RuleSet, mode: str) -> Optional[Term]:
    # A constant over a specification that still uses the interleaving
    # operators is replaced by the constant over its reduced specification.
    if not isinstance(t, RecConst):
        return None
    spec = rs.ctx.specs.get(t.spec)
    if spec is None or spec.over != "siacp":
        return None
    from .recursion import reduce_spec

    key = (t.spec, t.var)
    if key not in rs.ctx._reduced:
        result = reduce_spec(spec, t.var, rs.ctx)
        if not result.complete:
            raise BudgetExceeded(
                f"reduction of specification {t.spec!r} from {t.var!r} "
                f"exceeded its equation budget",
                t,
            )
        name = result.spec.name
        if name in rs.ctx.specs:
            k = 2
            while f"{name}{k}" in rs.ctx.specs:
                k += 1
            result = type(result)(
                spec=result.spec.renamed(f"{name}{k}"),
                complete=True,
                frontier=(),
            )
            name = result.spec.name
        rs.ctx.specs[name] = result.spec
        rs.ctx._reduced[key] = name
    return RecConst(t.var, rs.ctx._reduced[key])


def _blocking_constant(t: Term) -> Optional[RecConst]:
    if isinstance(t, RecConst):
        return t
    if isinstance(t, Seq) and isinstance(t.parts[0], RecConst):
        return t.parts[0]
    return None


def _r_rdp_blocked(t: Term, rs: RuleSet, mode: str) -> Optional[Term]:
    # Lazy unfolding: a recursive constant is opened only where its head
    # shape blocks every other rule.  Eager unfolding would never terminate
    # on any recursive specification.
    sites = []
    if isinstance(t, LeftMerge):
        sites.append(t.left)
    elif isinstance(t, CommMerge):
        sites.extend((t.left, t.right))
    elif isinstance(t, Encap):
        sites.append(t.body)
    elif isinstance(t, Posm):
        sites.append(t.procs[t.pos - 1])
    for site in sites:
        blocked = _blocking_constant(site)
        if blocked is not None:
            spec = rs.ctx.specs.get(blocked.spec)
            if spec is None:
                raise TermError(f"unknown specification {blocked.spec!r}")
            from .recursion import unfold_rdp

            unfolded = unfold_rdp(blocked.var, spec)
            return _replace_once(t, blocked, unfolded)
    return None


def _replace_once(t: Term, old: Term, new: Term) -> Term:
    if t == old:
        return new
    if isinstance(t, Seq):
        done = False
        parts = []
        for p in t.parts:
            if not done and p == old:
                parts.append(new)
                done = True
            else:
                parts.append(p)
        return seq(parts) if done else t
    if isinstance(t, LeftMerge):
        if t.left == old:
            return LeftMerge(new, t.right)
        return LeftMerge(t.left, _replace_once(t.right, old, new))
    if isinstance(t, CommMerge):
        if t.left == old:
            return CommMerge(new, t.right)
        return CommMerge(t.left, _replace_once(t.right, old, new))
    if isinstance(t, Encap):
        return Encap(t.blocked, _replace_once(t.body, old, new))
    if isinstance(t, Posm):
        return Posm(t.pos, t.hist, t.state, _swap(t.procs, t.pos, _replace_once(t.procs[t.pos - 1], old, new)))
    return t


_ACP_RULES: Tuple[Rule, ...] = (
    ("A4", _r_a4),
    ("A5", _r_a5),
    ("A7", _r_a7),
    ("CM1", _r_cm1),
    ("CM2", _r_cm2),
    ("CM3", _r_cm3),
    ("CM4", _r_cm4),
    ("CM5", _r_cm5),
    ("CM6", _r_cm6),
    ("CM7", _r_cm7),
    ("CM8", _r_cm8),
    ("CM9", _r_cm9),
    ("CM10", _r_cm10),
    ("CM11", _r_cm11),
    ("CM12", _r_cm12),
    ("D1/D2", _r_d1_d2),
    ("D3", _r_d3),
    ("D4", _r_d4),
)

_SI_COMMON: Tuple[Rule, ...] = (
    ("SI1", _r_si1),
    ("SI3", _r_si3),
    ("SI4", _r_si4),
    ("SI5", _r_si5),
    ("SI6", _r_si6),
    ("SI7", _r_si7),
    ("SI8", _r_si8),
)

_REC_RULES: Tuple[Rule, ...] = (
    ("REC-REDUCE", _r_rec_reduce),
    ("RDP", _r_rdp_blocked),
)


def full_ruleset(ctx: Context, policy: Optional[str] = None) -> RuleSet:
    """The complete rule set under the given policy (default: the
    context's)."""
    policy = policy or ctx.policy
    if policy == HALT:
        si2: Tuple[Rule, ...] = (("SI2", _r_si2),)
    elif policy == DEFER:
        si2 = (("SI2a", _r_si2a), ("SI2b", _r_si2b))
    else:
        raise ValueError(f"unknown policy {policy!r}")
    rules = _ACP_RULES + si2 + _SI_COMMON + _REC_RULES
    return RuleSet(policy=policy, rules=rules, ctx=ctx)


def acp_ruleset(ctx: Context) -> RuleSet:
    """The core rule set alone, with no interleaving rules and no
    recursion hooks."""
    return RuleSet(policy=HALT, rules=_ACP_RULES, ctx=ctx, acp_only=True)


# --- single steps and normalization -------------------------------------------


def _children(t: Term) -> Tuple[Term, ...]:
    if isinstance(t, Alt):
        return t.children
    if isinstance(t, Seq):
        return t.parts
    if isinstance(t, (Par, LeftMerge, CommMerge)):
        return (t.left, t.right)
    if isinstance(t, Encap):
        return (t.body,)
    if isinstance(t, (Si, Posm)):
        return t.procs
    return ()


def _rebuild(t: Term, children: Tuple[Term, ...]) -> Term:
    if isinstance(t, Alt):
        return Alt(children)
    if isinstance(t, Seq):
        return Seq(children)
    if isinstance(t, (Par, LeftMerge, CommMerge)):
        return type(t)(children[0], children[1])
    if isinstance(t, Encap):
        return Encap(t.blocked, children[0])
    if isinstance(t, Si):
        return Si(t.hist, t.state, children)
    if isinstance(t, Posm):
        return Posm(t.pos, t.hist, t.state, children)
    return t


def _try_rules(t: Term, rs: RuleSet, mode: str) -> Optional[Tuple[str, Term]]:
    for name, rule in rs.rules:
        result = rule(t, rs, mode)
        if result is not None:
            return name, result
    return None


def _step_anywhere(t: Term, rs: RuleSet, mode: str) -> Optional[Tuple[str, Term]]:
    if mode == OUTERMOST:
        here = _try_rules(t, rs, mode)
        if here is not None:
            return here
    kids = _children(t)
    for k, child in enumerate(kids):
        inner = _step_anywhere(child, rs, mode)
        if inner is not None:
            name, new_child = inner
            return name, _rebuild(t, kids[:k] + (new_child,) + kids[k + 1 :])
    if mode == INNERMOST:
        return _try_rules(t, rs, mode)
    return None


def rewrite_step(rs: RuleSet, t: Term, order: str = INNERMOST) -> Optional[Term]:
    """Apply one rule instance at the first matching position (leftmost
    innermost by default) and return the canonicalized contractum, or None
    when ``t`` is a normal form."""
    stepped = _step_anywhere(t, rs, order)
    if stepped is None:
        return None
    return canonicalize(stepped[1])


def normalize(
    rs: RuleSet,
    t: Term,
    step_budget: int = DEFAULT_STEP_BUDGET,
    order: str = INNERMOST,
    on_step: Optional[Callable[[Term, Term, str], None]] = None,
) -> Term:
    """Iterate `rewrite_step` to a normal form.

    Under the halt policy termination is guaranteed and the budget is a
    safety net; under the defer policy the budget is load-bearing.  The
    ``on_step`` hook sees every (before, after, rule name) triple and is
    how verification mode attaches its assertions.
    """
    if step_budget < 1:
        raise ValueError("step budget must be positive")
    current = canonicalize(t)
    for _ in range(step_budget):
        stepped = _step_anywhere(current, rs, order)
        if stepped is None:
            return current
        name, raw = stepped
        nxt = canonicalize(raw)
        if on_step is not None:
            on_step(current, nxt, name)
        current = nxt
    raise BudgetExceeded(
        f"no normal form within {step_budget} steps (policy {rs.policy})", current
    )


# --- head normal forms ---------------------------------------------------------


def head_normal_form(
    t: Term,
    ctx: Context,
    depth_budget: int = DEFAULT_UNFOLD_BUDGET,
    policy: Optional[str] = None,
) -> Term:
    """Bring a guarded term to the shape: a choice between action-prefixed
    terms and bare action constants, or inaction.

    Works by structural induction, so variables are tolerated anywhere a
    guard shields them; hitting one head-on means the term was not guarded.
    The budget counts recursive-constant unfoldings, the only source of
    divergence on guarded input.
    """
    policy = policy or ctx.policy
    rs = full_ruleset(ctx, policy)
    budget = [depth_budget]

    def summands(u: Term):
        return u.children if isinstance(u, Alt) else (u,)

    def hnf(u: Term) -> Term:
        if isinstance(u, (Action, Inaction)):
            return u
        if isinstance(u, Var):
            raise UnguardedTermError(f"variable {u.name} reached head position; term is not guarded")
        if isinstance(u, Alt):
            return alt(hnf(c) for c in u.children)
        if isinstance(u, Seq):
            head, rest = u.parts[0], seq(u.parts[1:])
            out = []
            for s in summands(hnf(head)):
                if isinstance(s, Inaction):
                    out.append(DELTA)
                elif isinstance(s, Action):
                    out.append(seq([s, rest]))
                else:
                    out.append(seq([s, rest]))
            return alt(out)
        if isinstance(u, LeftMerge):
            out = []
            for s in summands(hnf(u.left)):
                if isinstance(s, Inaction):
                    out.append(DELTA)
                elif isinstance(s, Action):
                    out.append(seq([s, u.right]))
                else:
                    head, tail = s.parts[0], seq(s.parts[1:])
                    out.append(seq([head, Par(tail, u.right)]))
            return alt(out)
        if isinstance(u, CommMerge):
            lefts = summands(hnf(u.left))
            rights = summands(hnf(u.right))
            out = []
            for ls in lefts:
                for rx in rights:
                    out.append(_comm_pair(ls, rx))
            return alt(out)
        if isinstance(u, Par):
            return hnf(
                alt(
                    [
                        LeftMerge(u.left, u.right),
                        LeftMerge(u.right, u.left),
                        CommMerge(u.left, u.right),
                    ]
                )
            )
        if isinstance(u, Encap):
            out = []
            for s in summands(hnf(u.body)):
                if isinstance(s, Inaction):
                    out.append(DELTA)
                elif isinstance(s, Action):
                    out.append(DELTA if s.name in u.blocked else s)
                else:
                    head, tail = s.parts[0], seq(s.parts[1:])
                    if head.name in u.blocked:
                        out.append(DELTA)
                    else:
                        out.append(seq([head, Encap(u.blocked, tail)]))
            return alt(out)
        if isinstance(u, Si):
            i = sched_dispatch(ctx.strategy, len(u.procs), u.hist, u.state)
            return hnf(Posm(i, u.hist, u.state, u.procs))
        if isinstance(u, Posm):
            return hnf_posm(u)
        if isinstance(u, RecConst):
            budget[0] -= 1
            if budget[0] < 0:
                raise BudgetExceeded("unfolding budget exhausted in head normal form", u)
            from .recursion import unfold_rdp

            spec = ctx.specs.get(u.spec)
            if spec is None:
                raise TermError(f"unknown specification {u.spec!r}")
            return hnf(unfold_rdp(u.var, spec))
        raise TermError(f"not a term: {u!r}")

    def _comm_pair(ls: Term, rx: Term) -> Term:
        if isinstance(ls, Inaction) or isinstance(rx, Inaction):
            return DELTA
        lh = ls if isinstance(ls, Action) else ls.parts[0]
        rh = rx if isinstance(rx, Action) else rx.parts[0]
        joint = gamma_apply(ctx.comm, lh.name, rh.name)
        if joint is None:
            return DELTA
        lt = None if isinstance(ls, Action) else seq(ls.parts[1:])
        rt = None if isinstance(rx, Action) else seq(rx.parts[1:])
        if lt is None and rt is None:
            return Action(joint)
        if lt is None:
            return seq([Action(joint), rt])
        if rt is None:
            return seq([Action(joint), lt])
        return seq([Action(joint), Par(lt, rt)])

    def hnf_posm(u: Posm) -> Term:
        n = len(u.procs)
        comp = hnf(u.procs[u.pos - 1])
        strat = ctx.strategy

        def upd(action):
            return update_dispatch(strat, n, u.hist, u.state, u.pos, action, policy=policy)

        if isinstance(comp, Inaction):
            if policy == HALT or n == 1:
                return DELTA
            hist = u.hist.extend(u.pos, n - 1)
            rest = Si(hist, upd(None), _drop(u.procs, u.pos))
            return hnf(seq([rest, DELTA]))
        out = []
        for s in summands(comp):
            if isinstance(s, Action):
                if s.name.kind == CREATE_REQUEST:
                    datum = s.name.base
                    spawned = canonicalize(ctx.spawned(datum))
                    hist = u.hist.extend(u.pos, n)
                    pool = _drop(u.procs, u.pos) + (spawned,)
                    out.append(seq([Action(ActionName.create_act(datum)), Si(hist, upd(s.name), pool)]))
                elif n == 1:
                    out.append(s)
                else:
                    hist = u.hist.extend(u.pos, n - 1)
                    out.append(seq([s, Si(hist, upd(s.name), _drop(u.procs, u.pos))]))
            else:
                head, tail = s.parts[0], seq(s.parts[1:])
                if head.name.kind == CREATE_REQUEST:
                    datum = head.name.base
                    spawned = canonicalize(ctx.spawned(datum))
                    hist = u.hist.extend(u.pos, n + 1)
                    pool = _swap(u.procs, u.pos, tail) + (spawned,)
                    out.append(
                        seq([Action(ActionName.create_act(datum)), Si(hist, upd(head.name), pool)])
                    )
                else:
                    hist = u.hist.extend(u.pos, n)
                    out.append(seq([head, Si(hist, upd(head.name), _swap(u.procs, u.pos, tail))]))
        return alt(out)

    del rs
    return canonicalize(hnf(canonicalize(t)))


def is_head_normal_form(t: Term) -> bool:
    """Check the target shape of `head_normal_form` structurally."""

    def prefixed(u: Term) -> bool:
        if isinstance(u, Action):
            return True
        return isinstance(u, Seq) and isinstance(u.parts[0], Action)

    if isinstance(t, Inaction):
        return True
    if isinstance(t, Alt):
        return all(prefixed(c) for c in t.children)
    return prefixed(t)


# --- elimination ----------------------------------------------------------------


def _non_core_node(t: Term, ctx: Context) -> Optional[Term]:
    for sub in _walk_shape(t):
        if isinstance(sub, (Action, Inaction, Alt, Seq)):
            continue
        if isinstance(sub, RecConst):
            spec = ctx.specs.get(sub.spec)
            if spec is not None and spec.over == "acp":
                continue
            return sub
        return sub
    return None


def _walk_shape(t: Term):
    yield t
    if isinstance(t, Alt):
        for c in t.children:
            yield from _walk_shape(c)
    elif isinstance(t, Seq):
        for p in t.parts:
            yield from _walk_shape(p)
    elif isinstance(t, (Par, LeftMerge, CommMerge)):
        yield from _walk_shape(t.left)
        yield from _walk_shape(t.right)
    elif isinstance(t, Encap):
        yield from _walk_shape(t.body)
    elif isinstance(t, (Si, Posm)):
        for p in t.procs:
            yield from _walk_shape(p)


def eliminate(
    t: Term,
    ctx: Context,
    policy: Optional[str] = None,
    step_budget: int = DEFAULT_STEP_BUDGET,
    order: str = INNERMOST,
    on_step: Optional[Callable[[Term, Term, str], None]] = None,
) -> Term:
    """Normalize with the full rule set and check that the interleaving,
    parallel, merge and encapsulation operators are gone: the result may
    contain only action constants, inaction, choice, sequence, and
    recursive constants whose specifications avoid the interleaving
    operators.  A leftover operator is an engine defect, never an input
    error."""
    rs = full_ruleset(ctx, policy)
    nf = normalize(rs, t, step_budget=step_budget, order=order, on_step=on_step)
    leftover = _non_core_node(nf, ctx)
    if leftover is not None:
        raise EliminationDefect(
            f"normal form kept a non-core node {type(leftover).__name__}; "
            f"this is a defect in the rule set"
        )
    return nf
