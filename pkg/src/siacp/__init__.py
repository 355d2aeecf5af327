"""Process-algebra toolkit with scheduler-driven interleaving.

The library is organized in layers: `kernel` holds terms, canonical
forms, the communication table, and the termination weight; `strategies`
holds interleaving histories and the scheduling-strategy interface;
`rewrite` turns the axiom tables into a rewrite system with
normalization, head normal forms, and operator elimination; `recursion`
covers guarded recursive specifications; `semantics` builds transition
systems and checks bisimilarity; `cli` owns concrete syntax and the
command-line tool.
"""

from .kernel import (
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
    gamma_apply,
    gamma_validate,
    is_closed,
    seq,
    sort_key,
    theta_eval,
)
from .strategies import (
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
    get_strategy,
    history_validate,
    register_strategy,
    sched_dispatch,
    strategy_names,
    update_dispatch,
)
from .rewrite import (
    BudgetExceeded,
    Context,
    EliminationDefect,
    RuleSet,
    acp_ruleset,
    eliminate,
    full_ruleset,
    head_normal_form,
    is_head_normal_form,
    normalize,
    rewrite_step,
)
from .recursion import (
    GuardResult,
    RecSpec,
    ReduceResult,
    SpecError,
    check_guarded,
    is_guarded_term,
    reduce_spec,
    unfold_rdp,
)
from .semantics import (
    TICK,
    TICK_TARGET,
    BisimResult,
    Lts,
    Trace,
    bisimilar,
    bounded_bisimilar,
    build_lts,
    enumerate_traces,
    export_dot,
    sos_step,
)
from .cli import (
    DefsFile,
    ParseError,
    format_spec,
    format_term,
    parse_defs,
    parse_term,
    run_command,
)

__version__ = "0.1.0"
