"""Constraint-automata compiler toolkit.

Core layers:

- ``caf.constraints``: the data-constraint calculus and the brute-force oracle
- ``caf.automata``: the automaton model, primitives, join and hide
- ``caf.eliminate``: determinant-based variable elimination
- ``caf.commands`` / ``caf.commandify``: data commands and constraint-to-command
  translation
- ``caf.runtime``: deterministic coordinator, benchmarks, trace oracle
- ``caf.documents`` / ``caf.cli``: file formats and the ``caf`` command
"""

from .constraints import (
    App,
    BOT,
    Const,
    DataConstraint,
    DataVariable,
    Eq,
    FiniteDomain,
    Neg,
    NIL,
    Rel,
    TOP,
    Var,
    constraint,
    default_registry,
    entails,
    equivalent_on_domain,
    evaluate,
    free_vars,
    port,
    post,
    pre,
    simplify_trivial,
    solve_bruteforce,
    substitute,
    symmetric_closure,
)
from .automata import (
    ConstraintAutomaton,
    PortTriple,
    Transition,
    eval_composition,
    hide,
    join,
    make_primitive,
    validate,
    with_initial,
)
from .eliminate import determinants, eliminate, ever_determined, syn_exists
from .commands import FAIL, exec_command
from .commandify import (
    commandify_automaton,
    commandify_constraint,
    build_bgraph,
    compute_arborescence,
    is_arborescent,
)
from .runtime import (
    bench_throughput,
    bounded_trace_equivalent,
    command_equivalent_on_domain,
    fire_step,
    run_simulation,
)

__all__ = [name for name in dir() if not name.startswith("_")]
