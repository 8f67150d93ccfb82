"""Constraint automata: the model, the eight primitives, join and hide.

A constraint automaton labels every transition with a synchronization
constraint (the set of ports that must see pending I/O) and a data
constraint (which data may flow).  Composites are built with ``join``
(parallel composition glued on shared ports) and ``hide`` (port
abstraction); both keep every guard local to its transition's scope.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Iterable, Optional, Sequence, Union

from .constraints import (
    App,
    DEFAULT_REGISTRY,
    DataConstraint,
    Eq,
    ExtralogicalRegistry,
    Neg,
    Rel,
    TOP,
    Var,
    conjoin,
    constraint_key,
    free_vars,
    port,
    post,
    pre,
)


class AutomatonError(Exception):
    """Structural misuse of the automaton model (not a validation finding)."""


@dataclass(frozen=True)
class PortTriple:
    all: frozenset[str]
    inputs: frozenset[str]
    outputs: frozenset[str]

    def __post_init__(self):
        object.__setattr__(self, "all", frozenset(self.all))
        object.__setattr__(self, "inputs", frozenset(self.inputs))
        object.__setattr__(self, "outputs", frozenset(self.outputs))

    @property
    def internal(self) -> frozenset[str]:
        return self.all - self.inputs - self.outputs


@dataclass(frozen=True)
class Transition:
    source: str
    sync: frozenset[str]
    guard: DataConstraint
    target: str

    def __post_init__(self):
        object.__setattr__(self, "sync", frozenset(self.sync))

    def key(self):
        return (self.source, tuple(sorted(self.sync)), constraint_key(self.guard), self.target)


@dataclass(frozen=True)
class ConstraintAutomaton:
    states: frozenset[str]
    ports: PortTriple
    memory: frozenset[str]
    transitions: tuple[Transition, ...]
    initial: str

    def __post_init__(self):
        object.__setattr__(self, "states", frozenset(self.states))
        object.__setattr__(self, "memory", frozenset(self.memory))
        # Canonical transition order; the relation is a set, so exact
        # duplicates collapse.
        unique = {t.key(): t for t in self.transitions}
        object.__setattr__(
            self, "transitions", tuple(unique[k] for k in sorted(unique))
        )

    def transitions_from(self, state: str) -> list[tuple[int, Transition]]:
        return [(i, t) for i, t in enumerate(self.transitions) if t.source == state]

    def guards(self) -> list[DataConstraint]:
        return [t.guard for t in self.transitions]


def scope_vars(sync: Iterable[str], memory: Iterable[str]) -> frozenset:
    """The variables a guard may mention: sync ports plus both memory views."""
    return frozenset(
        [port(p) for p in sync]
        + [pre(m) for m in memory]
        + [post(m) for m in memory]
    )


def validate(a: ConstraintAutomaton) -> list[str]:
    """Invariant violations as data; an empty list means the automaton is well formed."""
    problems = []
    if a.initial not in a.states:
        problems.append(f"initial state {a.initial!r} is not a state")
    if not a.ports.inputs <= a.ports.all:
        problems.append("input ports are not a subset of all ports")
    if not a.ports.outputs <= a.ports.all:
        problems.append("output ports are not a subset of all ports")
    clash = a.ports.inputs & a.ports.outputs
    if clash:
        problems.append(f"ports {sorted(clash)} are both input and output")
    for t in a.transitions:
        where = f"transition {t.source}->{t.target} on {{{','.join(sorted(t.sync))}}}"
        if t.source not in a.states:
            problems.append(f"{where}: unknown source state")
        if t.target not in a.states:
            problems.append(f"{where}: unknown target state")
        stray = t.sync - a.ports.all
        if stray:
            problems.append(f"{where}: sync ports {sorted(stray)} are not ports of the automaton")
        loose = free_vars(t.guard) - scope_vars(t.sync, a.memory)
        if loose:
            names = ",".join(sorted(repr(x) for x in loose))
            problems.append(f"{where}: guard mentions {names} outside the transition scope")
    return problems


# ---------------------------------------------------------------------------
# the eight primitives

_SIGNATURES = {
    # name: (inputs, outputs, memory cells, extralogical kind)
    "sync": (1, 1, 0, None),
    "syncdrain": (2, 0, 0, None),
    "lossysync": (1, 1, 0, None),
    "filter": (1, 1, 0, "relation"),
    "fifo": (1, 1, 1, None),
    "merg2": (2, 1, 0, None),
    "repl2": (1, 2, 0, None),
    "binop": (2, 1, 0, "function"),
}


def make_primitive(
    name: str,
    inputs: Sequence[str],
    outputs: Sequence[str],
    memory: Sequence[str] = (),
    extralogical: Optional[str] = None,
    *,
    start_full: bool = False,
    registry: ExtralogicalRegistry = DEFAULT_REGISTRY,
) -> ConstraintAutomaton:
    """Construct one of the eight primitive automata.

    ``start_full`` applies to fifo only and makes the full state initial
    (the buffer's initial datum itself is runtime configuration).
    """
    key = name.lower()
    if key not in _SIGNATURES:
        raise AutomatonError(f"unknown primitive {name!r}")
    n_in, n_out, n_mem, extra_kind = _SIGNATURES[key]
    if len(inputs) != n_in or len(outputs) != n_out or len(memory) != n_mem:
        raise AutomatonError(
            f"{key} takes {n_in} input(s), {n_out} output(s), {n_mem} memory cell(s); "
            f"got {len(inputs)}/{len(outputs)}/{len(memory)}"
        )
    if extra_kind and extralogical is None:
        raise AutomatonError(f"{key} needs a {extra_kind} name")
    if extra_kind is None and extralogical is not None:
        raise AutomatonError(f"{key} takes no extralogical")
    if extra_kind == "relation":
        registry.relation(extralogical, 1)
    if extra_kind == "function":
        registry.function(extralogical, 2)
    if start_full and key != "fifo":
        raise AutomatonError("start_full applies to fifo only")

    def v(p):
        return Var(port(p))

    ports = PortTriple(frozenset(inputs) | frozenset(outputs), frozenset(inputs), frozenset(outputs))
    one = lambda *lits: DataConstraint((), tuple(lits))

    if key == "sync":
        p1, p2 = inputs[0], outputs[0]
        trans = [Transition("q0", {p1, p2}, one(Eq(v(p1), v(p2))), "q0")]
        return ConstraintAutomaton(frozenset(["q0"]), ports, frozenset(), tuple(trans), "q0")
    if key == "syncdrain":
        p1, p2 = inputs
        trans = [Transition("q0", {p1, p2}, one(TOP), "q0")]
        return ConstraintAutomaton(frozenset(["q0"]), ports, frozenset(), tuple(trans), "q0")
    if key == "lossysync":
        p1, p2 = inputs[0], outputs[0]
        trans = [
            Transition("q0", {p1}, one(TOP), "q0"),
            Transition("q0", {p1, p2}, one(Eq(v(p1), v(p2))), "q0"),
        ]
        return ConstraintAutomaton(frozenset(["q0"]), ports, frozenset(), tuple(trans), "q0")
    if key == "filter":
        p1, p2 = inputs[0], outputs[0]
        rel = lambda: Rel(extralogical, (v(p1),))
        trans = [
            Transition("q0", {p1}, one(Neg(rel())), "q0"),
            Transition("q0", {p1, p2}, one(rel(), Eq(v(p1), v(p2))), "q0"),
        ]
        return ConstraintAutomaton(frozenset(["q0"]), ports, frozenset(), tuple(trans), "q0")
    if key == "fifo":
        p1, p2 = inputs[0], outputs[0]
        m = memory[0]
        trans = [
            Transition("q0", {p1}, one(Eq(Var(post(m)), v(p1))), "q1"),
            Transition("q1", {p2}, one(Eq(v(p2), Var(pre(m)))), "q0"),
        ]
        initial = "q1" if start_full else "q0"
        return ConstraintAutomaton(frozenset(["q0", "q1"]), ports, frozenset([m]), tuple(trans), initial)
    if key == "merg2":
        p1, p2 = inputs
        p3 = outputs[0]
        trans = [
            Transition("q0", {p1, p3}, one(Eq(v(p1), v(p3))), "q0"),
            Transition("q0", {p2, p3}, one(Eq(v(p2), v(p3))), "q0"),
        ]
        return ConstraintAutomaton(frozenset(["q0"]), ports, frozenset(), tuple(trans), "q0")
    if key == "repl2":
        p1 = inputs[0]
        p2, p3 = outputs
        trans = [
            Transition("q0", {p1, p2, p3}, one(Eq(v(p1), v(p2)), Eq(v(p1), v(p3))), "q0")
        ]
        return ConstraintAutomaton(frozenset(["q0"]), ports, frozenset(), tuple(trans), "q0")
    # binop
    p1, p2 = inputs
    p3 = outputs[0]
    trans = [
        Transition(
            "q0",
            {p1, p2, p3},
            one(Eq(App(extralogical, (v(p1), v(p2))), v(p3))),
            "q0",
        )
    ]
    return ConstraintAutomaton(frozenset(["q0"]), ports, frozenset(), tuple(trans), "q0")


# ---------------------------------------------------------------------------
# join and hide


def _prune_unreachable(a: ConstraintAutomaton) -> ConstraintAutomaton:
    reached = {a.initial}
    frontier = [a.initial]
    by_source: dict[str, list[Transition]] = {}
    for t in a.transitions:
        by_source.setdefault(t.source, []).append(t)
    while frontier:
        q = frontier.pop()
        for t in by_source.get(q, ()):
            if t.target not in reached:
                reached.add(t.target)
                frontier.append(t.target)
    trans = tuple(t for t in a.transitions if t.source in reached)
    return ConstraintAutomaton(frozenset(reached), a.ports, a.memory, trans, a.initial)


def join(a1: ConstraintAutomaton, a2: ConstraintAutomaton) -> ConstraintAutomaton:
    """Parallel composition glued on shared ports.

    A transition pair fires synchronously when each side's sync set projects
    to the same shared ports; a transition fires alone only when it touches
    no port of the other automaton.  A port that is input on one side and
    output on the other becomes internal; other shared ports keep their
    direction.  Unreachable product states are pruned.
    """
    clash = a1.memory & a2.memory
    if clash:
        raise AutomatonError(f"memory cells {sorted(clash)} exist on both sides of the join")
    shared = a1.ports.all & a2.ports.all
    for p in shared:
        if p in a1.ports.internal or p in a2.ports.internal:
            raise AutomatonError(f"shared port {p!r} is internal in one of the operands")

    now_internal = (a1.ports.inputs & a2.ports.outputs) | (a2.ports.inputs & a1.ports.outputs)
    ports = PortTriple(
        a1.ports.all | a2.ports.all,
        (a1.ports.inputs | a2.ports.inputs) - now_internal,
        (a1.ports.outputs | a2.ports.outputs) - now_internal,
    )

    def pair(q1, q2):
        return f"{q1}|{q2}"

    trans = []
    for t1 in a1.transitions:
        for t2 in a2.transitions:
            if t1.sync & a2.ports.all == t2.sync & a1.ports.all:
                trans.append(
                    Transition(
                        pair(t1.source, t2.source),
                        t1.sync | t2.sync,
                        conjoin(t1.guard, t2.guard),
                        pair(t1.target, t2.target),
                    )
                )
    for t1 in a1.transitions:
        if not t1.sync & a2.ports.all:
            for q2 in a2.states:
                trans.append(Transition(pair(t1.source, q2), t1.sync, t1.guard, pair(t1.target, q2)))
    for t2 in a2.transitions:
        if not t2.sync & a1.ports.all:
            for q1 in a1.states:
                trans.append(Transition(pair(q1, t2.source), t2.sync, t2.guard, pair(q1, t2.target)))

    states = frozenset(pair(q1, q2) for q1 in a1.states for q2 in a2.states)
    joined = ConstraintAutomaton(
        states, ports, a1.memory | a2.memory, tuple(trans), pair(a1.initial, a2.initial)
    )
    return _prune_unreachable(joined)


def hide(a: ConstraintAutomaton, p: str) -> ConstraintAutomaton:
    """Remove a port; guards lose it behind an existential quantifier.

    No quantifier is introduced when the port does not occur free in a guard.
    """
    if p not in a.ports.all:
        raise AutomatonError(f"unknown port {p!r}")
    ports = PortTriple(a.ports.all - {p}, a.ports.inputs - {p}, a.ports.outputs - {p})
    x = port(p)
    trans = []
    for t in a.transitions:
        guard = t.guard
        if x in free_vars(guard):
            guard = DataConstraint((x,) + guard.quantified, guard.kernel)
        trans.append(Transition(t.source, t.sync - {p}, guard, t.target))
    return ConstraintAutomaton(a.states, ports, a.memory, tuple(trans), a.initial)


def with_initial(a: ConstraintAutomaton, state: str) -> ConstraintAutomaton:
    if state not in a.states:
        raise AutomatonError(f"unknown state {state!r}")
    return ConstraintAutomaton(a.states, a.ports, a.memory, a.transitions, state)


# ---------------------------------------------------------------------------
# composition expressions


@dataclass(frozen=True)
class Prim:
    name: str
    inputs: tuple[str, ...]
    outputs: tuple[str, ...]
    memory: tuple[str, ...] = ()
    extralogical: Optional[str] = None


@dataclass(frozen=True)
class Join:
    left: "CompositionExpr"
    right: "CompositionExpr"


@dataclass(frozen=True)
class Hide:
    expr: "CompositionExpr"
    port: str


@dataclass(frozen=True)
class Elim:
    expr: "CompositionExpr"
    port: str


CompositionExpr = Union[Prim, Join, Hide, Elim]


def eval_composition(
    expr: CompositionExpr,
    *,
    eliminate_hides: bool = False,
    registry: ExtralogicalRegistry = DEFAULT_REGISTRY,
    elim_log: Optional[list] = None,
) -> ConstraintAutomaton:
    """Bottom-up evaluation of a composition expression.

    With ``eliminate_hides`` every Hide node is evaluated as Elim, which is
    how the eliminate optimization is switched on for a whole composition.
    """
    from .eliminate import eliminate  # local import: the pass builds on this module

    if isinstance(expr, Prim):
        return make_primitive(
            expr.name,
            expr.inputs,
            expr.outputs,
            expr.memory,
            expr.extralogical,
            registry=registry,
        )
    if isinstance(expr, Join):
        return join(
            eval_composition(expr.left, eliminate_hides=eliminate_hides, registry=registry, elim_log=elim_log),
            eval_composition(expr.right, eliminate_hides=eliminate_hides, registry=registry, elim_log=elim_log),
        )
    inner = eval_composition(expr.expr, eliminate_hides=eliminate_hides, registry=registry, elim_log=elim_log)
    if isinstance(expr, Elim) or (isinstance(expr, Hide) and eliminate_hides):
        return eliminate(inner, expr.port, registry=registry, log=elim_log)
    return hide(inner, expr.port)
