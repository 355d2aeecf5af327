"""Histories, the strategy interface, and the built-in strategies."""

import random

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from siacp.strategies import (
    AGING,
    DEFER,
    HALT,
    INITIAL_STATE,
    ROUND_ROBIN,
    EMPTY_HISTORY,
    History,
    HistoryError,
    PolicyError,
    StateDecodeError,
    Strategy,
    StrategyContractError,
    UnknownStrategyError,
    get_strategy,
    history_validate,
    register_strategy,
    sched_dispatch,
    strategy_names,
    update_dispatch,
)


class TestHistoryValidate:
    def test_empty_is_valid(self):
        assert history_validate([]) == EMPTY_HISTORY

    def test_two_step_walk(self):
        h = history_validate([(1, 2), (2, 2)])
        assert h.entries == ((1, 2), (2, 2))

    def test_count_jump_rejected(self):
        with pytest.raises(HistoryError) as err:
            history_validate([(1, 2), (2, 4)])
        assert err.value.index == 1
        assert "count-step" in err.value.rule

    def test_first_entry_mover_bound(self):
        with pytest.raises(HistoryError) as err:
            history_validate([(3, 2)])
        assert err.value.index == 0

    def test_mover_bound_against_previous_count(self):
        with pytest.raises(HistoryError):
            history_validate([(1, 2), (3, 2)])

    def test_nonpositive_rejected(self):
        with pytest.raises(HistoryError):
            history_validate([(0, 1)])

    def test_extend_matches_validate(self):
        h = history_validate([(1, 3), (2, 2)])
        extended = h.extend(2, 3)
        assert history_validate(extended.entries) == extended
        with pytest.raises(HistoryError):
            h.extend(3, 2)


class TestRoundRobin:
    def test_empty_history_schedules_first(self):
        assert sched_dispatch(ROUND_ROBIN, 2, EMPTY_HISTORY, INITIAL_STATE) == 1

    def test_wraps_within_range(self):
        # After process 1 of 2 moved, process 2 is next; the successor of
        # the last index wraps to 1 instead of leaving the range.
        h = history_validate([(1, 2)])
        assert sched_dispatch(ROUND_ROBIN, 2, h, INITIAL_STATE) == 2
        h2 = history_validate([(2, 2)])
        assert sched_dispatch(ROUND_ROBIN, 2, h2, INITIAL_STATE) == 1

    def test_single_process_always_first(self):
        # (2,1) is not a valid first entry, so build it raw: the scheduler
        # must still land in 1..1 whatever the history claims.
        h = History(((2, 1),))
        assert sched_dispatch(ROUND_ROBIN, 1, h, INITIAL_STATE) == 1

    def test_update_keeps_state(self):
        out = update_dispatch(ROUND_ROBIN, 2, EMPTY_HISTORY, INITIAL_STATE, 1, None, policy=DEFER)
        assert out == INITIAL_STATE

    def test_rejects_other_literals(self):
        with pytest.raises(StateDecodeError):
            sched_dispatch(ROUND_ROBIN, 2, EMPTY_HISTORY, "w:1,2")

    def test_depends_only_on_last_entry_and_count(self):
        rng = random.Random(5)
        for _ in range(50):
            n = rng.randint(1, 5)
            last = (rng.randint(1, 6), rng.randint(1, 6))
            prefix_a = tuple((rng.randint(1, 4), rng.randint(1, 4)) for _ in range(rng.randint(0, 4)))
            prefix_b = tuple((rng.randint(1, 4), rng.randint(1, 4)) for _ in range(rng.randint(0, 4)))
            ha = History(prefix_a + (last,))
            hb = History(prefix_b + (last,))
            assert sched_dispatch(ROUND_ROBIN, n, ha, INITIAL_STATE) == sched_dispatch(
                ROUND_ROBIN, n, hb, INITIAL_STATE
            )

    @given(
        st.lists(st.tuples(st.integers(1, 9), st.integers(1, 9)), max_size=8),
        st.integers(1, 9),
    )
    @settings(max_examples=200, deadline=None)
    def test_always_in_range(self, pairs, n):
        h = History(tuple(pairs))
        assert 1 <= sched_dispatch(ROUND_ROBIN, n, h, INITIAL_STATE) <= n


class TestAging:
    def test_initial_state_ties_to_lowest(self):
        assert sched_dispatch(AGING, 3, EMPTY_HISTORY, INITIAL_STATE) == 1

    def test_longest_waiting_wins(self):
        assert sched_dispatch(AGING, 3, EMPTY_HISTORY, "w:0,5,2") == 2

    def test_tie_breaks_to_lowest_index(self):
        assert sched_dispatch(AGING, 3, EMPTY_HISTORY, "w:4,4,1") == 1

    def test_update_resets_mover_and_ages_rest(self):
        out = update_dispatch(AGING, 3, EMPTY_HISTORY, "w:1,2,3", 2, None, policy=DEFER)
        assert out == "w:2,0,4"

    def test_state_conforms_to_count(self):
        # Stale vectors pad or trim on the right.
        assert sched_dispatch(AGING, 2, EMPTY_HISTORY, "w:0,1,9") == 2
        assert update_dispatch(AGING, 3, EMPTY_HISTORY, "w:5", 1, None, policy=DEFER) == "w:0,1,1"

    def test_bad_literal_rejected(self):
        with pytest.raises(StateDecodeError):
            sched_dispatch(AGING, 2, EMPTY_HISTORY, "w:one,two")
        with pytest.raises(StateDecodeError):
            sched_dispatch(AGING, 2, EMPTY_HISTORY, "counters")


class TestDispatchContracts:
    def test_update_rejects_deadlock_under_halt(self):
        with pytest.raises(PolicyError):
            update_dispatch(ROUND_ROBIN, 2, EMPTY_HISTORY, INITIAL_STATE, 1, None, policy=HALT)

    def test_sched_result_contract_is_enforced(self):
        bad = Strategy(
            name="always-zero",
            decode=lambda lit: None,
            encode=lambda s: INITIAL_STATE,
            sched=lambda n, h, s: 0,
            update=lambda n, h, s, i, a: s,
        )
        with pytest.raises(StrategyContractError):
            sched_dispatch(bad, 2, EMPTY_HISTORY, INITIAL_STATE)

    def test_deterministic_dispatch(self):
        h = history_validate([(1, 3), (2, 3)])
        first = sched_dispatch(AGING, 3, h, "w:1,0,2")
        assert all(sched_dispatch(AGING, 3, h, "w:1,0,2") == first for _ in range(5))


class TestRegistry:
    def test_builtins_registered(self):
        assert "round-robin" in strategy_names()
        assert "aging" in strategy_names()
        assert get_strategy("round-robin") is ROUND_ROBIN

    def test_unknown_name(self):
        with pytest.raises(UnknownStrategyError):
            get_strategy("lottery")

    def test_duplicate_registration_rejected(self):
        with pytest.raises(ValueError):
            register_strategy(ROUND_ROBIN)
