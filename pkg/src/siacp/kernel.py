"""Process terms, canonical forms, the communication table, and the
integer termination weight.

Terms are immutable trees.  Choice nodes keep a flattened, sorted,
duplicate-free tuple of branches, and drop explicit inaction standing
beside other branches; sequence nodes keep a flat tuple read
right-associatively.  `canonicalize` maps any term onto this shape, so
two terms equal up to commutativity, associativity, idempotence of
choice, and inaction units compare equal as Python values.  Everything
else in the package assumes canonical input.
"""

from __future__ import annotations

import re
from dataclasses import dataclass
from functools import lru_cache
from typing import Iterable, Iterator, Mapping, Optional, Tuple, Union

from .strategies import History

__all__ = [
    "PLAIN",
    "CREATE_REQUEST",
    "CREATE_ACT",
    "TermError",
    "ThetaError",
    "ActionName",
    "Term",
    "Action",
    "Inaction",
    "DELTA",
    "Alt",
    "Seq",
    "Par",
    "LeftMerge",
    "CommMerge",
    "Encap",
    "Si",
    "Posm",
    "RecConst",
    "Var",
    "alt",
    "seq",
    "canonicalize",
    "sort_key",
    "is_closed",
    "iter_subterms",
    "free_vars",
    "CommTable",
    "gamma_apply",
    "gamma_validate",
    "theta_eval",
]

_IDENT_RE = re.compile(r"[a-z][A-Za-z0-9_]*\Z")

PLAIN = "plain"
CREATE_REQUEST = "create-request"
CREATE_ACT = "create-act"
_KIND_ORDER = {PLAIN: 0, CREATE_REQUEST: 1, CREATE_ACT: 2}


class TermError(ValueError):
    """Malformed term component: bad identifier, arity, or position."""


class ThetaError(ValueError):
    """The termination weight is undefined for the given term."""


def _memo_hash(cls):
    """Cache the dataclass-generated hash per node; terms are deeply nested
    and hashed constantly as dictionary keys."""
    generated = cls.__hash__

    def cached(self):
        value = self.__dict__.get("_hash_memo")
        if value is None:
            value = generated(self)
            object.__setattr__(self, "_hash_memo", value)
        return value

    cls.__hash__ = cached
    return cls


@_memo_hash
@dataclass(frozen=True, eq=True)
class ActionName:
    """An action constant: a plain named action, a process-creation request
    over a datum (printed ``cr(d)``), or a creation act (printed ``rcr(d)``).
    """

    kind: str
    base: str

    def __post_init__(self):
        if self.kind not in _KIND_ORDER:
            raise TermError(f"unknown action kind: {self.kind!r}")
        if not _IDENT_RE.match(self.base):
            raise TermError(f"bad action identifier: {self.base!r}")

    @classmethod
    def plain(cls, name: str) -> "ActionName":
        return cls(PLAIN, name)

    @classmethod
    def create_request(cls, datum: str) -> "ActionName":
        return cls(CREATE_REQUEST, datum)

    @classmethod
    def create_act(cls, datum: str) -> "ActionName":
        return cls(CREATE_ACT, datum)

    @property
    def label(self) -> str:
        if self.kind == CREATE_REQUEST:
            return f"cr({self.base})"
        if self.kind == CREATE_ACT:
            return f"rcr({self.base})"
        return self.base

    def key(self) -> Tuple[int, str]:
        return (_KIND_ORDER[self.kind], self.base)

    def __repr__(self) -> str:
        return f"ActionName({self.label})"


class Term:
    """Base class for process term nodes."""

    __slots__ = ()


@_memo_hash
@dataclass(frozen=True)
class Action(Term):
    name: ActionName


@_memo_hash
@dataclass(frozen=True)
class Inaction(Term):
    pass


#: The inaction constant; use this instance rather than making new ones.
DELTA = Inaction()


@_memo_hash
@dataclass(frozen=True)
class Alt(Term):
    """Choice between two or more branches (canonical: flat, sorted, unique)."""

    children: Tuple[Term, ...]

    def __post_init__(self):
        if len(self.children) < 2:
            raise TermError("choice needs at least two branches")


@_memo_hash
@dataclass(frozen=True)
class Seq(Term):
    """Sequential composition, a flat tuple read right-associatively."""

    parts: Tuple[Term, ...]

    def __post_init__(self):
        if len(self.parts) < 2:
            raise TermError("sequence needs at least two parts")


@_memo_hash
@dataclass(frozen=True)
class Par(Term):
    left: Term
    right: Term


@_memo_hash
@dataclass(frozen=True)
class LeftMerge(Term):
    """Parallel composition forced to start with a step of the left operand."""

    left: Term
    right: Term


@_memo_hash
@dataclass(frozen=True)
class CommMerge(Term):
    """Parallel composition forced to start with a synchronization."""

    left: Term
    right: Term


@_memo_hash
@dataclass(frozen=True)
class Encap(Term):
    """Blocks the actions in ``blocked``, mapping them to inaction."""

    blocked: frozenset
    body: Term

    def __post_init__(self):
        for a in self.blocked:
            if not isinstance(a, ActionName):
                raise TermError("encapsulation set must contain action names")


@_memo_hash
@dataclass(frozen=True)
class Si(Term):
    """Strategic interleaving of one or more processes after a history in a
    control state (a raw literal interpreted by the active strategy)."""

    hist: History
    state: str
    procs: Tuple[Term, ...]

    def __post_init__(self):
        if len(self.procs) < 1:
            raise TermError("interleaving needs at least one process")
        if not self.state:
            raise TermError("empty state literal")


@_memo_hash
@dataclass(frozen=True)
class Posm(Term):
    """Positional variant of `Si`: the process at ``pos`` (1-based) moves
    next regardless of the strategy.  Auxiliary, used to axiomatize `Si`."""

    pos: int
    hist: History
    state: str
    procs: Tuple[Term, ...]

    def __post_init__(self):
        if len(self.procs) < 1:
            raise TermError("interleaving needs at least one process")
        if not 1 <= self.pos <= len(self.procs):
            raise TermError(f"position {self.pos} outside 1..{len(self.procs)}")
        if not self.state:
            raise TermError("empty state literal")


@_memo_hash
@dataclass(frozen=True)
class RecConst(Term):
    """The distinguished solution of a named recursive specification for one
    of its variables; printed ``<X|SpecName>``."""

    var: str
    spec: str


@_memo_hash
@dataclass(frozen=True)
class Var(Term):
    """A recursion variable; only meaningful inside specification bodies."""

    name: str


_TAG = {
    Inaction: 0,
    Action: 1,
    Seq: 2,
    Alt: 3,
    Par: 4,
    LeftMerge: 5,
    CommMerge: 6,
    Encap: 7,
    Si: 8,
    Posm: 9,
    RecConst: 10,
    Var: 11,
}


@lru_cache(maxsize=None)
def sort_key(t: Term) -> tuple:
    """Total syntactic order on terms: lexicographic on a node-tag/child
    tuple encoding.  Any fixed total order gives unique canonical forms;
    this one never compares values of different types."""
    tag = _TAG[type(t)]
    if isinstance(t, Inaction):
        return (tag,)
    if isinstance(t, Action):
        return (tag,) + t.name.key()
    if isinstance(t, Seq):
        return (tag, len(t.parts)) + tuple(sort_key(p) for p in t.parts)
    if isinstance(t, Alt):
        return (tag, len(t.children)) + tuple(sort_key(c) for c in t.children)
    if isinstance(t, (Par, LeftMerge, CommMerge)):
        return (tag, sort_key(t.left), sort_key(t.right))
    if isinstance(t, Encap):
        return (tag, tuple(sorted(a.key() for a in t.blocked)), sort_key(t.body))
    if isinstance(t, Si):
        return (tag, len(t.procs), t.hist.entries, t.state) + tuple(sort_key(p) for p in t.procs)
    if isinstance(t, Posm):
        return (tag, len(t.procs), t.pos, t.hist.entries, t.state) + tuple(sort_key(p) for p in t.procs)
    if isinstance(t, RecConst):
        return (tag, t.var, t.spec)
    if isinstance(t, Var):
        return (tag, t.name)
    raise TermError(f"not a term: {t!r}")


def alt(branches: Iterable[Term]) -> Term:
    """Build a canonical choice: flatten nested choices, drop inaction next
    to other branches, deduplicate, sort.  Zero branches give inaction and
    a single branch collapses to itself."""
    flat = []
    for b in branches:
        if isinstance(b, Alt):
            flat.extend(b.children)
        else:
            flat.append(b)
    live = [b for b in flat if not isinstance(b, Inaction)]
    if not live:
        return DELTA
    unique = sorted(set(live), key=sort_key)
    if len(unique) == 1:
        return unique[0]
    return Alt(tuple(unique))


def seq(parts: Iterable[Term]) -> Term:
    """Build a flat sequence, splicing in nested sequences."""
    flat = []
    for p in parts:
        if isinstance(p, Seq):
            flat.extend(p.parts)
        else:
            flat.append(p)
    if not flat:
        raise TermError("sequence needs at least one part")
    if len(flat) == 1:
        return flat[0]
    return Seq(tuple(flat))


def canonicalize(t: Term) -> Term:
    """Return the canonical representative of ``t``; idempotent."""
    if isinstance(t, (Action, Inaction, RecConst, Var)):
        return t
    if isinstance(t, Alt):
        return alt(canonicalize(c) for c in t.children)
    if isinstance(t, Seq):
        return seq(canonicalize(p) for p in t.parts)
    if isinstance(t, Par):
        return Par(canonicalize(t.left), canonicalize(t.right))
    if isinstance(t, LeftMerge):
        return LeftMerge(canonicalize(t.left), canonicalize(t.right))
    if isinstance(t, CommMerge):
        return CommMerge(canonicalize(t.left), canonicalize(t.right))
    if isinstance(t, Encap):
        return Encap(t.blocked, canonicalize(t.body))
    if isinstance(t, Si):
        return Si(t.hist, t.state, tuple(canonicalize(p) for p in t.procs))
    if isinstance(t, Posm):
        return Posm(t.pos, t.hist, t.state, tuple(canonicalize(p) for p in t.procs))
    raise TermError(f"not a term: {t!r}")


def iter_subterms(t: Term) -> Iterator[Term]:
    """Yield ``t`` and every subterm, preorder."""
    yield t
    if isinstance(t, Alt):
        for c in t.children:
            yield from iter_subterms(c)
    elif isinstance(t, Seq):
        for p in t.parts:
            yield from iter_subterms(p)
    elif isinstance(t, (Par, LeftMerge, CommMerge)):
        yield from iter_subterms(t.left)
        yield from iter_subterms(t.right)
    elif isinstance(t, Encap):
        yield from iter_subterms(t.body)
    elif isinstance(t, (Si, Posm)):
        for p in t.procs:
            yield from iter_subterms(p)


def free_vars(t: Term) -> frozenset:
    return frozenset(s.name for s in iter_subterms(t) if isinstance(s, Var))


def is_closed(t: Term) -> bool:
    return not any(isinstance(s, Var) for s in iter_subterms(t))


# --- communication table -----------------------------------------------------


class CommTable:
    """Symmetric synchronization table over a declared alphabet.

    Entries map unordered action pairs to the action that results from
    performing them synchronously; pairs without an entry synchronize to
    inaction.  The constructor only stores entries (rejecting conflicting
    duplicates); `gamma_validate` checks the semantic contract.
    """

    __slots__ = ("alphabet", "_pairs")

    def __init__(
        self,
        alphabet: Iterable[ActionName] = (),
        entries: Iterable[Tuple[ActionName, ActionName, ActionName]] = (),
    ):
        self.alphabet = frozenset(alphabet)
        pairs = {}
        for a, b, result in entries:
            key = frozenset((a, b))
            if key in pairs and pairs[key] != result:
                raise TermError(f"conflicting synchronization results for {a.label}, {b.label}")
            pairs[key] = result
        self._pairs = pairs

    def entries(self):
        """Deterministically ordered (a, b, result) triples."""
        out = []
        for key, result in self._pairs.items():
            ops = sorted(key, key=ActionName.key)
            a = ops[0]
            b = ops[-1]
            out.append((a, b, result))
        out.sort(key=lambda e: (e[0].key(), e[1].key()))
        return out

    def __repr__(self):
        return f"CommTable({len(self.alphabet)} actions, {len(self._pairs)} entries)"


def gamma_apply(
    table: CommTable, a: Optional[ActionName], b: Optional[ActionName]
) -> Optional[ActionName]:
    """Result of synchronously performing ``a`` and ``b``; None stands for
    inaction on both sides.  Inaction and creation requests never
    synchronize, and missing pairs default to inaction."""
    if a is None or b is None:
        return None
    if a.kind == CREATE_REQUEST or b.kind == CREATE_REQUEST:
        return None
    return table._pairs.get(frozenset((a, b)))


def gamma_validate(table: CommTable) -> list[str]:
    """Check the full synchronization contract; an empty list means ok.

    Flags entries over undeclared actions, entries touching creation
    requests (as operand or result), results outside the alphabet, and
    every associativity failure over alphabet plus inaction, by exhaustive
    enumeration of the triples.
    """
    violations = []
    for a, b, result in table.entries():
        for op in (a, b):
            if op.kind == CREATE_REQUEST:
                violations.append(f"entry ({a.label},{b.label}): creation requests never synchronize")
                break
            if op not in table.alphabet:
                violations.append(f"entry ({a.label},{b.label}): operand {op.label} not in alphabet")
        if result.kind == CREATE_REQUEST:
            violations.append(f"entry ({a.label},{b.label}) -> {result.label}: result is a creation request")
        elif result not in table.alphabet:
            violations.append(f"entry ({a.label},{b.label}) -> {result.label}: result not in alphabet")
    domain = sorted(table.alphabet, key=ActionName.key) + [None]

    def show(x):
        return "delta" if x is None else x.label

    for a in domain:
        for b in domain:
            ab = gamma_apply(table, a, b)
            for c in domain:
                left = gamma_apply(table, ab, c)
                right = gamma_apply(table, a, gamma_apply(table, b, c))
                if left != right:
                    violations.append(
                        f"associativity fails on ({show(a)},{show(b)},{show(c)}): "
                        f"{show(left)} vs {show(right)}"
                    )
    return violations


# --- termination weight ------------------------------------------------------


def theta_eval(
    term: Term,
    phi: Mapping[str, Term],
    spec_kinds: Mapping[str, str],
) -> int:
    """Integer weight of a closed term, strictly decreasing under every
    rewrite step of the halt-policy rule set.

    Clauses: actions and inaction weigh 2; a creation request weighs the
    square of its spawned process plus one; choice adds, sequence is
    (left squared) times rest, parallel is 3(l*r)^2+1, both forced merges
    are (l*r)^2, encapsulation is 2^body.  The interleaving operators weigh
    2p^2-1 (scheduled form) and 2p^2-2 (positional form) for p the product
    of the component weights; the offsets are what makes scheduling a
    process strictly cheaper while keeping the step that retires a finished
    component decreasing as well.  Recursive constants weigh 2 when their
    specification avoids the interleaving operators and 3 otherwise.

    ``phi`` resolves creation data, ``spec_kinds`` classifies specification
    names as "acp" or "siacp".  Weights are exact big integers; nested
    encapsulation grows them as towers of exponents, so weigh such terms
    only when you mean it.
    """

    def ev(t: Term, spawning: frozenset) -> int:
        if isinstance(t, Action):
            if t.name.kind == CREATE_REQUEST:
                datum = t.name.base
                if datum not in phi:
                    raise ThetaError(f"unknown datum {datum!r}")
                if datum in spawning:
                    raise ThetaError(f"datum {datum!r} spawns itself; weight undefined")
                return ev(phi[datum], spawning | {datum}) ** 2 + 1
            return 2
        if isinstance(t, Inaction):
            return 2
        if isinstance(t, Alt):
            return sum(ev(c, spawning) for c in t.children)
        if isinstance(t, Seq):
            acc = ev(t.parts[-1], spawning)
            for p in reversed(t.parts[:-1]):
                acc = ev(p, spawning) ** 2 * acc
            return acc
        if isinstance(t, Par):
            return 3 * (ev(t.left, spawning) * ev(t.right, spawning)) ** 2 + 1
        if isinstance(t, (LeftMerge, CommMerge)):
            return (ev(t.left, spawning) * ev(t.right, spawning)) ** 2
        if isinstance(t, Encap):
            return 2 ** ev(t.body, spawning)
        if isinstance(t, Si):
            p = 1
            for c in t.procs:
                p *= ev(c, spawning)
            return 2 * p * p - 1
        if isinstance(t, Posm):
            p = 1
            for c in t.procs:
                p *= ev(c, spawning)
            return 2 * p * p - 2
        if isinstance(t, RecConst):
            kind = spec_kinds.get(t.spec)
            if kind == "acp":
                return 2
            if kind == "siacp":
                return 3
            raise ThetaError(f"specification {t.spec!r} is not classified")
        if isinstance(t, Var):
            raise ThetaError("weight is defined for closed terms only")
        raise TermError(f"not a term: {t!r}")

    return ev(term, frozenset())
