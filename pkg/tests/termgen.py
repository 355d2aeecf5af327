"""Seeded random-term corpus shared across the test suite.

Terms are closed, depth at most four, interleaving arity at most three,
with up to two creation data whose spawned processes are closed,
creation-free terms.  Encapsulation bodies are kept light: the
termination weight is exponential in them, and the weight-decrease checks
evaluate it at every step.
"""

from __future__ import annotations

import random
from typing import List

from siacp.kernel import (
    DELTA,
    Action,
    ActionName,
    CommTable,
    Encap,
    Par,
    CommMerge,
    LeftMerge,
    Posm,
    Si,
    Term,
    alt,
    canonicalize,
    seq,
    theta_eval,
)
from siacp.rewrite import Context
from siacp.strategies import EMPTY_HISTORY, INITIAL_STATE

A = ActionName.plain("a")
B = ActionName.plain("b")
C = ActionName.plain("c")
ACTIONS = (A, B, C)

PHI = {
    "d1": seq([Action(B), Action(C)]),
    "d2": alt([Action(A), Action(B)]),
}

ENCAP_WEIGHT_CAP = 512
DEFAULT_SEED = 20260810


def make_context(policy: str = "halt", strategy: str = "round-robin") -> Context:
    from siacp.strategies import get_strategy

    table = CommTable(set(ACTIONS), [(A, B, C)])
    return Context(comm=table, phi=dict(PHI), strategy=get_strategy(strategy), policy=policy)


def _leaf(rng: random.Random) -> Term:
    roll = rng.random()
    if roll < 0.60:
        return Action(rng.choice(ACTIONS))
    if roll < 0.72:
        return DELTA
    if roll < 0.92:
        return Action(ActionName.create_request(rng.choice(("d1", "d2"))))
    return Action(ActionName.create_act(rng.choice(("d1", "d2"))))


def random_term(rng: random.Random, depth: int) -> Term:
    if depth <= 0:
        return _leaf(rng)
    roll = rng.random()
    if roll < 0.22:
        return _leaf(rng)
    if roll < 0.40:
        return alt([random_term(rng, depth - 1) for _ in range(rng.randint(2, 3))])
    if roll < 0.58:
        return seq([random_term(rng, depth - 1) for _ in range(rng.randint(2, 3))])
    if roll < 0.66:
        return Par(random_term(rng, depth - 1), random_term(rng, depth - 1))
    if roll < 0.72:
        return LeftMerge(random_term(rng, depth - 1), random_term(rng, depth - 1))
    if roll < 0.78:
        return CommMerge(random_term(rng, depth - 1), random_term(rng, depth - 1))
    if roll < 0.84:
        return _light_encap(rng, depth)
    if roll < 0.94:
        procs = tuple(random_term(rng, depth - 1) for _ in range(rng.randint(1, 3)))
        return Si(EMPTY_HISTORY, INITIAL_STATE, procs)
    procs = tuple(random_term(rng, depth - 1) for _ in range(rng.randint(1, 3)))
    # A positional operator at the last index whose component terminates
    # would record a first history entry with the mover above the remaining
    # count, which the history rules exclude; stay inside the valid domain.
    pos = 1 if len(procs) == 1 else rng.randint(1, len(procs) - 1)
    return Posm(pos, EMPTY_HISTORY, INITIAL_STATE, procs)


def _light_encap(rng: random.Random, depth: int) -> Term:
    blocked = frozenset(rng.sample(ACTIONS, rng.randint(1, 2)))
    for _ in range(6):
        body = random_term(rng, min(depth - 1, 2))
        if theta_eval(canonicalize(body), PHI, {}) <= ENCAP_WEIGHT_CAP:
            return Encap(blocked, body)
    return Encap(blocked, Action(rng.choice(ACTIONS)))


def random_acp_term(rng: random.Random, depth: int) -> Term:
    """Closed terms over the core signature only: no interleaving operators
    and no creation actions."""
    if depth <= 0:
        return DELTA if rng.random() < 0.15 else Action(rng.choice(ACTIONS))
    roll = rng.random()
    if roll < 0.25:
        return DELTA if rng.random() < 0.15 else Action(rng.choice(ACTIONS))
    if roll < 0.50:
        return alt([random_acp_term(rng, depth - 1) for _ in range(rng.randint(2, 3))])
    if roll < 0.72:
        return seq([random_acp_term(rng, depth - 1) for _ in range(rng.randint(2, 3))])
    if roll < 0.82:
        return Par(random_acp_term(rng, depth - 1), random_acp_term(rng, depth - 1))
    if roll < 0.88:
        return LeftMerge(random_acp_term(rng, depth - 1), random_acp_term(rng, depth - 1))
    if roll < 0.94:
        return CommMerge(random_acp_term(rng, depth - 1), random_acp_term(rng, depth - 1))
    blocked = frozenset(rng.sample(ACTIONS, rng.randint(1, 2)))
    return Encap(blocked, random_acp_term(rng, min(depth - 1, 2)))


def corpus(n: int = 500, seed: int = DEFAULT_SEED, max_depth: int = 4) -> List[Term]:
    rng = random.Random(seed)
    return [canonicalize(random_term(rng, rng.randint(2, max_depth))) for _ in range(n)]


def acp_corpus(n: int = 200, seed: int = DEFAULT_SEED + 1, max_depth: int = 4) -> List[Term]:
    rng = random.Random(seed)
    return [canonicalize(random_acp_term(rng, rng.randint(2, max_depth))) for _ in range(n)]
