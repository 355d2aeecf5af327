"""Guarded recursive specifications: guardedness checking, unfolding, and
reduction of specifications that use the interleaving operators down to
specifications over the core signature.

A specification maps variables to right-hand sides; it is guarded when
every variable occurrence in every right-hand side sits under an action
prefix, either as written or after bounded rewriting.  Guardedness is what
makes the defined processes unique, and what lets every right-hand side be
driven to a head normal form.
"""

from __future__ import annotations

import re
from dataclasses import dataclass
from typing import Dict, Iterable, Mapping, Optional, Tuple

from .kernel import (
    Action,
    Alt,
    CommMerge,
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
    iter_subterms,
    seq,
)
from .rewrite import (
    BudgetExceeded,
    Context,
    UnguardedTermError,
    acp_ruleset,
    full_ruleset,
    head_normal_form,
    normalize,
)

__all__ = [
    "ACP",
    "SIACP",
    "RecSpec",
    "SpecError",
    "GuardResult",
    "check_guarded",
    "unfold_rdp",
    "ReduceResult",
    "reduce_spec",
    "is_guarded_term",
]

ACP = "acp"
SIACP = "siacp"

_VAR_RE = re.compile(r"[A-Z][A-Za-z0-9_]*(\$[0-9]+)?\Z")


class SpecError(ValueError):
    """A malformed recursive specification."""


def _classify(equations: Mapping[str, Term]) -> str:
    for body in equations.values():
        if any(isinstance(s, (Si, Posm)) for s in iter_subterms(body)):
            return SIACP
    return ACP


@dataclass(frozen=True)
class RecSpec:
    """A named, finite guarded recursive specification.

    ``equations`` maps each variable to its right-hand side (canonical,
    with recursion variables as `Var` nodes).  ``over`` classifies the
    specification: "acp" when no right-hand side uses the interleaving
    operators, "siacp" otherwise.  Use `RecSpec.make`, which canonicalizes
    bodies, computes the classification, and checks that every variable
    used is defined.
    """

    name: str
    equations: Mapping[str, Term]
    over: str

    @classmethod
    def make(cls, name: str, equations: Mapping[str, Term]) -> "RecSpec":
        if not equations:
            raise SpecError(f"specification {name!r} has no equations")
        canon: Dict[str, Term] = {}
        for var, body in equations.items():
            if not _VAR_RE.match(var):
                raise SpecError(f"bad variable name {var!r}; variables are uppercase-initial")
            canon[var] = canonicalize(body)
        for var, body in canon.items():
            for sub in iter_subterms(body):
                if isinstance(sub, Var) and sub.name not in canon:
                    raise SpecError(
                        f"specification {name!r}: equation for {var} uses undefined variable {sub.name}"
                    )
        return cls(name=name, equations=canon, over=_classify(canon))

    def renamed(self, name: str) -> "RecSpec":
        return RecSpec(name=name, equations=self.equations, over=self.over)

    def variables(self) -> Tuple[str, ...]:
        return tuple(self.equations)

    def __repr__(self):
        return f"RecSpec({self.name!r}, {len(self.equations)} equations, over={self.over})"


# --- guardedness ----------------------------------------------------------------


def _unguarded_vars(t: Term, under: bool) -> Iterable[str]:
    if isinstance(t, Var):
        if not under:
            yield t.name
    elif isinstance(t, (Action, Inaction, RecConst)):
        return
    elif isinstance(t, Alt):
        for c in t.children:
            yield from _unguarded_vars(c, under)
    elif isinstance(t, Seq):
        g = under
        for p in t.parts:
            yield from _unguarded_vars(p, g)
            if isinstance(p, Action):
                g = True
    elif isinstance(t, (Par, LeftMerge, CommMerge)):
        yield from _unguarded_vars(t.left, under)
        yield from _unguarded_vars(t.right, under)
    elif isinstance(t, Encap):
        yield from _unguarded_vars(t.body, under)
    elif isinstance(t, (Si, Posm)):
        for p in t.procs:
            yield from _unguarded_vars(p, under)
    else:
        raise TermError(f"not a term: {t!r}")


def is_guarded_term(t: Term) -> bool:
    """True when every variable occurrence sits under an action prefix."""
    return next(iter(_unguarded_vars(t, False)), None) is None


def _substitute_unguarded(t: Term, mapping: Mapping[str, Term], under: bool) -> Term:
    if isinstance(t, Var):
        if not under and t.name in mapping:
            return mapping[t.name]
        return t
    if isinstance(t, (Action, Inaction, RecConst)):
        return t
    if isinstance(t, Alt):
        return alt(_substitute_unguarded(c, mapping, under) for c in t.children)
    if isinstance(t, Seq):
        g = under
        parts = []
        for p in t.parts:
            parts.append(_substitute_unguarded(p, mapping, g))
            if isinstance(p, Action):
                g = True
        return seq(parts)
    if isinstance(t, (Par, LeftMerge, CommMerge)):
        return type(t)(
            _substitute_unguarded(t.left, mapping, under),
            _substitute_unguarded(t.right, mapping, under),
        )
    if isinstance(t, Encap):
        return Encap(t.blocked, _substitute_unguarded(t.body, mapping, under))
    if isinstance(t, Si):
        return Si(t.hist, t.state, tuple(_substitute_unguarded(p, mapping, under) for p in t.procs))
    if isinstance(t, Posm):
        return Posm(
            t.pos, t.hist, t.state, tuple(_substitute_unguarded(p, mapping, under) for p in t.procs)
        )
    raise TermError(f"not a term: {t!r}")


def substitute_vars(t: Term, mapping: Mapping[str, Term]) -> Term:
    """Replace every variable occurrence, guarded or not."""
    if isinstance(t, Var):
        return mapping.get(t.name, t)
    if isinstance(t, (Action, Inaction, RecConst)):
        return t
    if isinstance(t, Alt):
        return alt(substitute_vars(c, mapping) for c in t.children)
    if isinstance(t, Seq):
        return seq(substitute_vars(p, mapping) for p in t.parts)
    if isinstance(t, (Par, LeftMerge, CommMerge)):
        return type(t)(substitute_vars(t.left, mapping), substitute_vars(t.right, mapping))
    if isinstance(t, Encap):
        return Encap(t.blocked, substitute_vars(t.body, mapping))
    if isinstance(t, Si):
        return Si(t.hist, t.state, tuple(substitute_vars(p, mapping) for p in t.procs))
    if isinstance(t, Posm):
        return Posm(t.pos, t.hist, t.state, tuple(substitute_vars(p, mapping) for p in t.procs))
    raise TermError(f"not a term: {t!r}")


GUARDED = "guarded"
UNGUARDED = "unguarded"
UNKNOWN = "unknown"


@dataclass(frozen=True)
class GuardResult:
    """Outcome of a guardedness check.

    ``status`` is "guarded", "unguarded" (with the offending variable and
    its right-hand side), or "unknown" when the rewriting budget ran out
    before a verdict."""

    status: str
    variable: Optional[str] = None
    term: Optional[Term] = None

    @property
    def ok(self) -> bool:
        return self.status == GUARDED


def _guarded_form(body: Term, ctx: Context, rewrite_budget: int) -> Optional[Term]:
    """The body itself if guarded, else its normal form if that is guarded,
    else None.  Raises BudgetExceeded when normalization cannot finish."""
    if is_guarded_term(body):
        return body
    rewritten = normalize(full_ruleset(ctx), body, step_budget=rewrite_budget)
    if is_guarded_term(rewritten):
        return rewritten
    return None


def check_guarded(spec: RecSpec, ctx: Context, rewrite_budget: int = 1_000) -> GuardResult:
    """Decide whether every right-hand side is guarded, rewriting within
    the budget where the written form is not.  Budget exhaustion yields
    status "unknown", distinct from a definite "unguarded"."""
    for var, body in spec.equations.items():
        try:
            form = _guarded_form(body, ctx, rewrite_budget)
        except BudgetExceeded:
            return GuardResult(UNKNOWN, var, body)
        if form is None:
            return GuardResult(UNGUARDED, var, body)
    return GuardResult(GUARDED)


def guarded_forms(spec: RecSpec, ctx: Context, rewrite_budget: int = 1_000) -> Dict[str, Term]:
    """Guarded right-hand sides for every variable; raises when the
    specification is not guarded within the budget."""
    forms: Dict[str, Term] = {}
    for var, body in spec.equations.items():
        form = _guarded_form(body, ctx, rewrite_budget)
        if form is None:
            raise UnguardedTermError(f"specification {spec.name!r} is unguarded at {var}")
        forms[var] = form
    return forms


# --- unfolding ------------------------------------------------------------------


def unfold_rdp(var: str, spec: RecSpec) -> Term:
    """One unfolding of the constant for ``var``: its right-hand side with
    every variable replaced by the matching constant over the same
    specification."""
    if var not in spec.equations:
        raise SpecError(f"specification {spec.name!r} does not define {var}")
    constants = {v: RecConst(v, spec.name) for v in spec.equations}
    return canonicalize(substitute_vars(spec.equations[var], constants))


# --- reduction to the core signature ----------------------------------------------


@dataclass(frozen=True)
class ReduceResult:
    """Result of `reduce_spec`: the (possibly partial) output specification,
    whether the procedure closed up, and the unprocessed frontier when it
    did not."""

    spec: RecSpec
    complete: bool
    frontier: Tuple[Tuple[str, Term], ...] = ()


def reduce_spec(
    spec: RecSpec,
    start: str,
    ctx: Context,
    equation_budget: int = 500,
    unfold_budget: int = 1_000,
) -> ReduceResult:
    """Rewrite a specification that uses the interleaving operators into one
    over the core signature, preserving the process defined for ``start``.

    Each reachable right-hand side is driven to head normal form; every
    prefixed residual becomes a fresh variable (after substituting defined
    bodies for any unguarded variable occurrences, which keeps the new
    equations guarded).  Residuals are memoized by canonical form, so
    specifications whose reachable residual set is finite close up in
    finitely many equations; the others exhaust the equation budget and
    come back partial, frontier attached.

    Specifications already over the core signature are returned unchanged.
    """
    if start not in spec.equations:
        raise SpecError(f"specification {spec.name!r} does not define {start}")
    if spec.over == ACP:
        return ReduceResult(spec=spec, complete=True)

    forms = guarded_forms(spec, ctx)
    memo: Dict[Term, str] = {}
    out: Dict[str, Term] = {}
    queue: list[Tuple[str, Term]] = []
    queued: set[str] = set()
    counter = [0]

    def enqueue(var: str, body: Term) -> None:
        if var not in queued:
            queued.add(var)
            queue.append((var, body))

    # Seed the start variable first so its name survives canonical-form
    # collisions with other original equations.
    memo[canonicalize(forms[start])] = start
    enqueue(start, forms[start])
    for var, body in forms.items():
        memo.setdefault(canonicalize(body), var)

    def var_for(residual: Term) -> str:
        key = canonicalize(residual)
        hit = memo.get(key)
        if hit is not None:
            if hit not in queued and hit in forms:
                enqueue(hit, forms[hit])
            return hit
        counter[0] += 1
        fresh = f"X${counter[0]}"
        memo[key] = fresh
        enqueue(fresh, key)
        return fresh

    while queue:
        if len(out) >= equation_budget:
            return ReduceResult(
                spec=RecSpec(name=_out_name(spec.name, start), equations=dict(out), over=SIACP),
                complete=False,
                frontier=tuple(queue),
            )
        var, body = queue.pop(0)
        head = head_normal_form(body, ctx, depth_budget=unfold_budget)
        summands = head.children if isinstance(head, Alt) else (head,)
        new_branches = []
        for s in summands:
            if isinstance(s, (Inaction, Action)):
                new_branches.append(s)
            else:
                prefix, residual = s.parts[0], seq(s.parts[1:])
                guarded_residual = _substitute_unguarded(residual, forms, False)
                new_branches.append(seq([prefix, Var(var_for(guarded_residual))]))
        out[var] = alt(new_branches)

    reduced = RecSpec.make(_out_name(spec.name, start), out)
    if reduced.over != ACP:
        raise EliminationFailure(
            f"reduction of {spec.name!r} left interleaving operators in the output"
        )
    return ReduceResult(spec=reduced, complete=True)


class EliminationFailure(RuntimeError):
    """The reduction procedure produced output outside the core signature;
    an engine defect."""


def _out_name(name: str, start: str) -> str:
    return f"{name}_{start.replace('$', '_')}_acp"
