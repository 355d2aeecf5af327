"""Operational semantics: single transitions, transition-system
construction, bisimulation checking, trace enumeration, and DOT export.

A step is a pair of an action and either a successor term or the
distinguished successful-termination marker `TICK`.  States of a built
transition system are canonical terms, so syntactically equal states are
merged; recursive constants are unfolded one step at a time on demand.
The deferred-deadlock policy has no transition rules, so the entry points
here insist on the halt policy.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Dict, FrozenSet, List, Optional, Tuple, Union

from .kernel import (
    CREATE_REQUEST,
    DELTA,
    Action,
    ActionName,
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
    canonicalize,
    gamma_apply,
    seq,
    sort_key,
)
from .rewrite import Context
from .strategies import DEFER, PolicyError, sched_dispatch, update_dispatch

__all__ = [
    "TICK",
    "Tick",
    "sos_step",
    "Lts",
    "TICK_TARGET",
    "build_lts",
    "BisimResult",
    "bisimilar",
    "bounded_bisimilar",
    "Trace",
    "enumerate_traces",
    "export_dot",
]


class Tick:
    """Successful termination marker; a single shared instance `TICK`."""

    _instance = None

    def __new__(cls):
        if cls._instance is None:
            cls._instance = super().__new__(cls)
        return cls._instance

    def __repr__(self):
        return "TICK"


TICK = Tick()

Step = Tuple[ActionName, Union[Term, Tick]]


def _require_halt(ctx: Context, what: str) -> None:
    if ctx.policy == DEFER:
        raise PolicyError(f"{what} is defined for the halt policy only; the defer policy has no transition rules")


def sos_step(t: Term, ctx: Context) -> FrozenSet[Step]:
    """All transitions of a closed term: pairs of an action and a successor
    term, or `TICK` for steps that terminate successfully.  Stuck terms
    (inaction included) return the empty set."""
    return frozenset(_steps(canonicalize(t), ctx))


def _steps(t: Term, ctx: Context) -> List[Step]:
    if isinstance(t, Action):
        return [(t.name, TICK)]
    if isinstance(t, Inaction):
        return []
    if isinstance(t, Alt):
        out: List[Step] = []
        for c in t.children:
            out.extend(_steps(c, ctx))
        return out
    if isinstance(t, Seq):
        head, rest = t.parts[0], seq(t.parts[1:])
        out = []
        for a, nxt in _steps(head, ctx):
            if nxt is TICK:
                out.append((a, rest))
            else:
                out.append((a, canonicalize(seq([nxt, rest]))))
        return out
    if isinstance(t, Par):
        left = _steps(t.left, ctx)
        right = _steps(t.right, ctx)
        out = []
        for a, nxt in left:
            out.append((a, t.right if nxt is TICK else Par(nxt, t.right)))
        for a, nxt in right:
            out.append((a, t.left if nxt is TICK else Par(t.left, nxt)))
        out.extend(_comm_steps(left, right, ctx))
        return [(a, u if u is TICK else canonicalize(u)) for a, u in out]
    if isinstance(t, LeftMerge):
        out = []
        for a, nxt in _steps(t.left, ctx):
            out.append((a, t.right if nxt is TICK else canonicalize(Par(nxt, t.right))))
        return out
    if isinstance(t, CommMerge):
        left = _steps(t.left, ctx)
        right = _steps(t.right, ctx)
        return [
            (a, u if u is TICK else canonicalize(u))
            for a, u in _comm_steps(left, right, ctx)
        ]
    if isinstance(t, Encap):
        out = []
        for a, nxt in _steps(t.body, ctx):
            if a in t.blocked:
                continue
            out.append((a, TICK if nxt is TICK else canonicalize(Encap(t.blocked, nxt))))
        return out
    if isinstance(t, RecConst):
        from .recursion import unfold_rdp

        spec = ctx.specs.get(t.spec)
        if spec is None:
            raise TermError(f"unknown specification {t.spec!r}")
        return _steps(unfold_rdp(t.var, spec), ctx)
    if isinstance(t, Si):
        i = sched_dispatch(ctx.strategy, len(t.procs), t.hist, t.state)
        return _pool_steps(t.hist, t.state, t.procs, i, ctx)
    if isinstance(t, Posm):
        return _pool_steps(t.hist, t.state, t.procs, t.pos, ctx)
    if isinstance(t, Var):
        raise TermError("transitions are defined for closed terms only")
    raise TermError(f"not a term: {t!r}")


def _comm_steps(left: List[Step], right: List[Step], ctx: Context) -> List[Step]:
    out: List[Step] = []
    for a, u in left:
        for b, v in right:
            joint = gamma_apply(ctx.comm, a, b)
            if joint is None:
                continue
            if u is TICK and v is TICK:
                out.append((joint, TICK))
            elif u is TICK:
                out.append((joint, v))
            elif v is TICK:
                out.append((joint, u))
            else:
                out.append((joint, Par(u, v)))
    return out


def _pool_steps(
    hist, state: str, procs: Tuple[Term, ...], mover: int, ctx: Context
) -> List[Step]:
    """Transitions of an interleaving pool when ``mover`` moves.

    The mover's creation-request steps are carried out: the observed action
    is the creation act, the spawned process joins the pool, and the
    control state is transformed with the request itself.  Ordinary steps
    (creation acts included) keep or retire the mover.  A pool of one whose
    mover terminates terminates the whole.
    """
    n = len(procs)
    strat = ctx.strategy
    out: List[Step] = []
    for a, nxt in _steps(procs[mover - 1], ctx):
        if a.kind == CREATE_REQUEST:
            spawned = canonicalize(ctx.spawned(a.base))
            observed = ActionName.create_act(a.base)
            new_state = update_dispatch(strat, n, hist, state, mover, a)
            if nxt is TICK:
                pool = procs[: mover - 1] + procs[mover:] + (spawned,)
                out.append((observed, Si(hist.extend(mover, n), new_state, pool)))
            else:
                pool = procs[: mover - 1] + (nxt,) + procs[mover:] + (spawned,)
                out.append((observed, Si(hist.extend(mover, n + 1), new_state, pool)))
            continue
        new_state = update_dispatch(strat, n, hist, state, mover, a)
        if nxt is TICK:
            if n == 1:
                out.append((a, TICK))
            else:
                pool = procs[: mover - 1] + procs[mover:]
                out.append((a, Si(hist.extend(mover, n - 1), new_state, pool)))
        else:
            pool = procs[: mover - 1] + (nxt,) + procs[mover:]
            out.append((a, Si(hist.extend(mover, n), new_state, pool)))
    return [(a, u if u is TICK else canonicalize(u)) for a, u in out]


# --- transition systems ----------------------------------------------------------

#: Transition target index standing for successful termination.
TICK_TARGET = -1


@dataclass(frozen=True)
class Lts:
    """A finite transition system over canonical terms.

    ``states[0]`` is the root.  Transitions are (source index, action,
    target index) with `TICK_TARGET` as the termination target.
    ``truncated`` holds the states whose outgoing transitions were cut by
    the state or depth budget; construction is deterministic, so equal
    inputs and budgets give equal systems."""

    states: Tuple[Term, ...]
    transitions: Tuple[Tuple[int, ActionName, int], ...]
    truncated: FrozenSet[int]
    root: int = 0

    def outgoing(self, state: int) -> Tuple[Tuple[ActionName, int], ...]:
        return tuple((a, dst) for src, a, dst in self.transitions if src == state)


def build_lts(
    t: Term,
    ctx: Context,
    max_states: int = 4_000,
    max_depth: int = 1_000_000_000,
) -> Lts:
    """Breadth-first closure of `sos_step` from the canonical root, merging
    syntactically equal states.  Budgets cut expansion and mark the cut
    states truncated; truncation is data, not a failure."""
    _require_halt(ctx, "transition-system construction")
    if max_states < 1 or max_depth < 0:
        raise ValueError("budgets must be positive")
    root = canonicalize(t)
    index: Dict[Term, int] = {root: 0}
    states: List[Term] = [root]
    depth: List[int] = [0]
    transitions: List[Tuple[int, ActionName, int]] = []
    truncated: set[int] = set()
    frontier = 0
    while frontier < len(states):
        src = frontier
        frontier += 1
        if depth[src] >= max_depth:
            if sos_step(states[src], ctx):
                truncated.add(src)
            continue
        steps = sorted(
            sos_step(states[src], ctx),
            key=lambda s: (s[0].key(), (0,) if s[1] is TICK else sort_key(s[1])),
        )
        for action, target in steps:
            if target is TICK:
                transitions.append((src, action, TICK_TARGET))
                continue
            dst = index.get(target)
            if dst is None:
                if len(states) >= max_states:
                    truncated.add(src)
                    continue
                dst = len(states)
                index[target] = dst
                states.append(target)
                depth.append(depth[src] + 1)
            transitions.append((src, action, dst))
    return Lts(
        states=tuple(states),
        transitions=tuple(transitions),
        truncated=frozenset(truncated),
    )


# --- bisimulation ------------------------------------------------------------------


@dataclass(frozen=True)
class BisimResult:
    """Verdict of a bisimilarity check.

    ``verdict`` is "yes", "no", or "unknown" when either system was
    truncated by the state budget (``equivalent`` then reports the answer
    over the truncated systems).  ``reason`` explains "no" verdicts."""

    verdict: str
    equivalent: bool
    reason: str = ""

    def __bool__(self) -> bool:
        return self.verdict == "yes"


def bisimilar(t1: Term, t2: Term, ctx: Context, max_states: int = 4_000) -> BisimResult:
    """Decide strong bisimilarity of two closed terms by partition
    refinement over the disjoint union of their transition systems, with
    successful termination as a separate, never-merged class."""
    _require_halt(ctx, "bisimilarity checking")
    l1 = build_lts(t1, ctx, max_states=max_states)
    l2 = build_lts(t2, ctx, max_states=max_states)
    offset = len(l1.states)
    tick_node = offset + len(l2.states)
    adjacency: List[List[Tuple[ActionName, int]]] = [[] for _ in range(tick_node + 1)]
    for src, action, dst in l1.transitions:
        adjacency[src].append((action, tick_node if dst == TICK_TARGET else dst))
    for src, action, dst in l2.transitions:
        adjacency[offset + src].append(
            (action, tick_node if dst == TICK_TARGET else offset + dst)
        )

    block = [0] * tick_node + [1]
    while True:
        signatures = {}
        new_block = []
        for state in range(tick_node + 1):
            sig = (
                block[state] if state == tick_node else 0,
                frozenset((a, block[dst]) for a, dst in adjacency[state]),
            )
            if sig not in signatures:
                signatures[sig] = len(signatures)
            new_block.append(signatures[sig])
        if new_block == block:
            break
        block = new_block

    equivalent = block[l1.root] == block[offset + l2.root]
    truncated = bool(l1.truncated or l2.truncated)
    if truncated:
        return BisimResult(
            "unknown",
            equivalent,
            "state budget truncated one or both systems; verdict covers the truncations only",
        )
    if equivalent:
        return BisimResult("yes", True)
    reason = _distinguish(adjacency, block, l1.root, offset + l2.root, tick_node)
    return BisimResult("no", False, reason)


def _distinguish(adjacency, block, u: int, v: int, tick_node: int, depth: int = 0) -> str:
    """A short explanation of why two refinement classes differ."""
    if depth > len(block):
        return "states fall into different classes"
    sig_u = frozenset((a, block[d]) for a, d in adjacency[u])
    sig_v = frozenset((a, block[d]) for a, d in adjacency[v])
    for side, here, there in (("left", sig_u, sig_v), ("right", sig_v, sig_u)):
        for a, cls in sorted(here - there, key=lambda p: (p[0].key(), p[1])):
            matching = [d for b, d in (adjacency[u] if side == "left" else adjacency[v]) if b == a and block[d] == cls]
            other = adjacency[v] if side == "left" else adjacency[u]
            other_same_action = [d for b, d in other if b == a]
            if not other_same_action:
                kind = "terminate with" if cls == block[tick_node] else "perform"
                return f"only the {side} side can {kind} {a.label}"
            src = matching[0]
            for dst in other_same_action:
                if block[src] != block[dst]:
                    nested = _distinguish(adjacency, block, src, dst, tick_node, depth + 1)
                    return f"after {a.label}: {nested}"
    return "states fall into different classes"


def bounded_bisimilar(t1: Term, t2: Term, ctx: Context, depth: int = 6) -> bool:
    """Whether the two terms' behaviors agree for ``depth`` steps.  Exact
    up to the depth; syntactically equal successors short-circuit."""
    _require_halt(ctx, "bounded bisimilarity checking")
    memo: Dict[Tuple[Term, Term, int], bool] = {}

    def go(u: Term, v: Term, k: int) -> bool:
        if u == v or k == 0:
            return True
        key = (u, v, k)
        hit = memo.get(key)
        if hit is not None:
            return hit
        memo[key] = True  # coinductive default for cycles within the bound
        su = sos_step(u, ctx)
        sv = sos_step(v, ctx)
        result = _match(su, sv, k) and _match(sv, su, k)
        memo[key] = result
        return result

    def _match(steps, other, k: int) -> bool:
        for a, nxt in steps:
            hit = False
            for b, cand in other:
                if a != b:
                    continue
                if nxt is TICK or cand is TICK:
                    if nxt is TICK and cand is TICK:
                        hit = True
                        break
                    continue
                if go(nxt, cand, k - 1):
                    hit = True
                    break
            if not hit:
                return False
        return True

    return go(canonicalize(t1), canonicalize(t2), depth)


# --- traces ------------------------------------------------------------------------

TERMINATED = "terminated"
DEADLOCKED = "deadlocked"
CUT = "cut"


@dataclass(frozen=True)
class Trace:
    actions: Tuple[str, ...]
    status: str

    def __str__(self) -> str:
        body = " ".join(self.actions) if self.actions else "(empty)"
        return f"{body} [{self.status}]"


def enumerate_traces(
    t: Term,
    ctx: Context,
    max_len: int = 64,
    max_traces: int = 256,
) -> List[Trace]:
    """Maximal action sequences by depth-first search, lexicographic by
    action label.  Each trace is flagged terminated, deadlocked, or cut
    (by the length or trace budget)."""
    _require_halt(ctx, "trace enumeration")
    if max_len < 1 or max_traces < 1:
        raise ValueError("budgets must be positive")
    out: List[Trace] = []

    def walk(term: Term, prefix: Tuple[str, ...]) -> None:
        if len(out) >= max_traces:
            return
        steps = sorted(
            sos_step(term, ctx),
            key=lambda s: (s[0].label, (0,) if s[1] is TICK else sort_key(s[1])),
        )
        if not steps:
            out.append(Trace(prefix, DEADLOCKED))
            return
        for action, target in steps:
            if len(out) >= max_traces:
                return
            extended = prefix + (action.label,)
            if target is TICK:
                out.append(Trace(extended, TERMINATED))
            elif len(extended) >= max_len:
                out.append(Trace(extended, CUT))
            else:
                walk(target, extended)

    walk(canonicalize(t), ())
    return out


# --- DOT export --------------------------------------------------------------------


def _dot_quote(text: str) -> str:
    return '"' + text.replace("\\", "\\\\").replace('"', '\\"') + '"'


def export_dot(lts: Lts) -> str:
    """Render a transition system as a DOT digraph: the root is a double
    circle, successful termination a box labeled with a check mark,
    truncated states dashed.  Output is byte-deterministic for a given
    system."""
    from .cli import format_term

    lines = ["digraph lts {", "  rankdir=LR;"]
    for idx, state in enumerate(lts.states):
        attrs = [f"label={_dot_quote(format_term(state))}"]
        if idx == lts.root:
            attrs.append("shape=doublecircle")
        if idx in lts.truncated:
            attrs.append("style=dashed")
        lines.append(f"  n{idx} [{', '.join(attrs)}];")
    if any(dst == TICK_TARGET for _, _, dst in lts.transitions):
        lines.append('  tick [label="✓", shape=box];')
    for src, action, dst in lts.transitions:
        target = "tick" if dst == TICK_TARGET else f"n{dst}"
        lines.append(f"  n{src} -> {target} [label={_dot_quote(action.label)}];")
    lines.append("}")
    return "\n".join(lines) + "\n"
