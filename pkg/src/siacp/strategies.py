"""Interleaving histories and pluggable scheduling strategies.

A history records, step by step, which of the interleaved processes moved
and how many processes remained afterwards.  A strategy is a deterministic
bundle of a control-state codec, a scheduler picking the next mover from
the history and control state, and a control-state transformer applied
after every move.  Two strategies ship built in: ``round-robin`` (whose
control state carries no information) and ``aging`` (longest-waiting
process first), and more can be added to the registry by library users.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable, Iterable, Optional, Sequence, Tuple

__all__ = [
    "HALT",
    "DEFER",
    "INITIAL_STATE",
    "History",
    "EMPTY_HISTORY",
    "HistoryError",
    "history_validate",
    "Strategy",
    "StateDecodeError",
    "PolicyError",
    "StrategyContractError",
    "UnknownStrategyError",
    "sched_dispatch",
    "update_dispatch",
    "register_strategy",
    "get_strategy",
    "strategy_names",
    "ROUND_ROBIN",
    "AGING",
]

HALT = "halt"
DEFER = "defer"

#: Literal naming every strategy's designated initial control state.
INITIAL_STATE = "init"


class HistoryError(ValueError):
    """A pair sequence that is not a well-formed interleaving history."""

    def __init__(self, index: int, rule: str, message: str):
        super().__init__(f"history entry {index}: {message} (violates {rule})")
        self.index = index
        self.rule = rule


class StateDecodeError(ValueError):
    """A state literal the active strategy cannot decode."""


class PolicyError(ValueError):
    """An operation that is not allowed under the active deadlock policy."""


class StrategyContractError(RuntimeError):
    """A strategy returned a value outside its declared contract."""


class UnknownStrategyError(ValueError):
    """A strategy name with no registry entry."""


@dataclass(frozen=True)
class History:
    """A finite sequence of (mover index, process count after the move) pairs.

    Construction checks only that entries are pairs of positive integers;
    the inductive well-formedness rules are enforced by `history_validate`
    for external input and by `extend` for engine-made appends.
    """

    entries: Tuple[Tuple[int, int], ...] = ()

    def __post_init__(self):
        for k, entry in enumerate(self.entries):
            if len(entry) != 2 or entry[0] < 1 or entry[1] < 1:
                raise HistoryError(k, "shape", f"{entry!r} is not a pair of positive integers")

    def extend(self, mover: int, count_after: int) -> "History":
        """Append one pair, checking it against the last entry only."""
        _check_link(len(self.entries), self.entries[-1] if self.entries else None, (mover, count_after))
        return History(self.entries + ((mover, count_after),))

    def __len__(self) -> int:
        return len(self.entries)

    def __str__(self) -> str:
        return "".join(f"({i},{n})" for i, n in self.entries)


EMPTY_HISTORY = History()


def _check_link(index: int, prev: Optional[Tuple[int, int]], entry: Tuple[int, int]) -> None:
    i, n = entry
    if i < 1 or n < 1:
        raise HistoryError(index, "shape", f"({i},{n}) is not a pair of positive integers")
    if prev is None:
        if i > n:
            raise HistoryError(index, "first-entry rule", f"mover {i} exceeds process count {n}")
        return
    pn = prev[1]
    if i > pn:
        raise HistoryError(index, "mover-bound rule", f"mover {i} exceeds previous process count {pn}")
    if not (pn - 1 <= n <= pn + 1):
        raise HistoryError(index, "count-step rule", f"count {n} not within one of previous count {pn}")


def history_validate(pairs: Iterable[Sequence[int]]) -> History:
    """Check a raw pair sequence against the inductive history rules.

    Returns the validated `History`; raises `HistoryError` naming the first
    offending index and the rule it breaks.
    """
    prev = None
    checked = []
    for k, raw in enumerate(pairs):
        entry = (int(raw[0]), int(raw[1]))
        _check_link(k, prev, entry)
        checked.append(entry)
        prev = entry
    return History(tuple(checked))


@dataclass(frozen=True)
class Strategy:
    """A named scheduling strategy.

    ``decode``/``encode`` translate between state literals (the strings
    carried inside interleaving operators) and the strategy's internal
    control state; ``decode(INITIAL_STATE)`` must yield the initial state.
    ``sched(n, h, s)`` picks the next mover in 1..n; ``update(n, h, s, i, a)``
    is the control-state transformer, where ``a`` is the action performed
    or None for a deadlocked turn (deferred-deadlock policy only).  Both
    must be deterministic.
    """

    name: str
    decode: Callable[[str], object]
    encode: Callable[[object], str]
    sched: Callable[[int, History, object], int]
    update: Callable[[int, History, object, int, object], object]


def sched_dispatch(strategy: Strategy, n: int, h: History, state_literal: str) -> int:
    """Ask the strategy which of the n processes moves next."""
    if n < 1:
        raise ValueError("process count must be positive")
    state = strategy.decode(state_literal)
    i = strategy.sched(n, h, state)
    if not 1 <= i <= n:
        raise StrategyContractError(f"strategy {strategy.name!r} scheduled {i} outside 1..{n}")
    return i


def update_dispatch(
    strategy: Strategy,
    n: int,
    h: History,
    state_literal: str,
    mover: int,
    action,
    policy: str = HALT,
) -> str:
    """Run the control-state transformer and re-encode the result.

    ``action`` is the action performed, or None for a deadlocked turn;
    None is accepted only under the deferred-deadlock policy.
    """
    if action is None and policy != DEFER:
        raise PolicyError("a deadlocked turn updates the control state only under the defer policy")
    if not 1 <= mover <= n:
        raise ValueError(f"mover {mover} outside 1..{n}")
    state = strategy.decode(state_literal)
    return strategy.encode(strategy.update(n, h, state, mover, action))


# --- round-robin -----------------------------------------------------------
#
# The control state is a singleton, so decode accepts only the initial
# literal and update is the identity.  The mover after history h ending in
# (j, _) is (j mod n) + 1, which always lands in 1..n; an empty history
# schedules process 1.


def _rr_decode(literal: str):
    if literal != INITIAL_STATE:
        raise StateDecodeError(f"round-robin accepts only {INITIAL_STATE!r}, got {literal!r}")
    return None


def _rr_sched(n: int, h: History, state) -> int:
    if not h.entries:
        return 1
    j = h.entries[-1][0]
    return (j % n) + 1


ROUND_ROBIN = Strategy(
    name="round-robin",
    decode=_rr_decode,
    encode=lambda state: INITIAL_STATE,
    sched=_rr_sched,
    update=lambda n, h, state, mover, action: state,
)


# --- aging ------------------------------------------------------------------
#
# The control state is a wait counter per position, serialized as
# "w:c1,...,cn" (the initial literal stands for all-zero counters).  The
# scheduler picks the longest-waiting position, ties to the lowest index;
# update resets the mover's counter and increments the rest.  Positions are
# purely positional: when the process count changes between steps the
# counters are conformed to the live count by padding or trimming on the
# right, and a deadlocked turn is aged exactly like a move.


def _aging_decode(literal: str):
    if literal == INITIAL_STATE:
        return ()
    if literal.startswith("w:"):
        try:
            return tuple(int(part) for part in literal[2:].split(","))
        except ValueError:
            pass
    raise StateDecodeError(f"aging expects {INITIAL_STATE!r} or 'w:<c1>,...,<cn>', got {literal!r}")


def _aging_encode(state) -> str:
    if not state:
        return INITIAL_STATE
    return "w:" + ",".join(str(c) for c in state)


def _conform(state, n: int):
    return (tuple(state) + (0,) * n)[:n]


def _aging_sched(n: int, h: History, state) -> int:
    waits = _conform(state, n)
    return max(range(n), key=lambda k: (waits[k], -k)) + 1


def _aging_update(n: int, h: History, state, mover: int, action):
    waits = _conform(state, n)
    return tuple(0 if k == mover - 1 else c + 1 for k, c in enumerate(waits))


AGING = Strategy(
    name="aging",
    decode=_aging_decode,
    encode=_aging_encode,
    sched=_aging_sched,
    update=_aging_update,
)


# --- registry ---------------------------------------------------------------

_REGISTRY: dict[str, Strategy] = {}


def register_strategy(strategy: Strategy) -> None:
    """Add a strategy to the name registry; names must be unique."""
    if strategy.name in _REGISTRY:
        raise ValueError(f"strategy {strategy.name!r} is already registered")
    _REGISTRY[strategy.name] = strategy


def get_strategy(name: str) -> Strategy:
    try:
        return _REGISTRY[name]
    except KeyError:
        raise UnknownStrategyError(
            f"unknown strategy {name!r}; registered: {', '.join(strategy_names())}"
        ) from None


def strategy_names() -> Tuple[str, ...]:
    return tuple(sorted(_REGISTRY))


register_strategy(ROUND_ROBIN)
register_strategy(AGING)
