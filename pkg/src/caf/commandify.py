"""Translation of data constraints into data commands.

The pipeline per constraint: take the symmetric closure of the kernel, build
the dependency B-graph (a hypergraph whose arcs have one head and a tail per
required variable), compute a star-rooted arborescence with a breadth-first
frontier sweep, split its arcs into a strict precedence relation, linearize
by topological sort, and feed the order to the translation loop that turns
variable-headed equalities into assignments and everything else into failure
statements.  Constraints without an arborescence keep their declarative form
and are flagged for the runtime solver.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Optional, Union

from .automata import ConstraintAutomaton, PortTriple, validate
from .commands import (
    Assign,
    DataCommand,
    FailUnless,
    SKIP,
    Skip,
    seq_of,
    statements,
)
from .constraints import (
    DataConstraint,
    DataLiteral,
    DataVariable,
    Eq,
    Var,
    constraint_vars,
    free_vars,
    literal_key,
    literal_text,
    literal_vars,
    port,
    pre,
    symmetric_closure,
    term_vars,
)


class InternalConsistencyError(Exception):
    """A linearization violated the translation requirements; indicates a bug."""


class _Star:
    _instance = None

    def __new__(cls):
        if cls._instance is None:
            cls._instance = super().__new__(cls)
        return cls._instance

    def __repr__(self):
        return "*"


STAR = _Star()

Vertex = Union[_Star, DataLiteral]


def vertex_key(v: Vertex) -> str:
    return "*" if v is STAR else literal_key(v)


@dataclass(frozen=True)
class BArc:
    tails: frozenset  # of Vertex
    head: DataLiteral

    def key(self):
        return (tuple(sorted(vertex_key(t) for t in self.tails)), vertex_key(self.head))


@dataclass(frozen=True)
class BGraph:
    vertices: frozenset  # of Vertex
    barcs: frozenset  # of BArc


@dataclass(frozen=True)
class Arborescence:
    barcs: tuple[BArc, ...]

    def __bool__(self):
        # A complete arborescence over {star} alone is legitimately empty.
        return True


def _var_headed(lit: DataLiteral) -> Optional[DataVariable]:
    """The x of an x == t literal, if it has that shape."""
    if isinstance(lit, Eq) and isinstance(lit.lhs, Var):
        return lit.lhs.var
    return None


def _self_eq(x: DataVariable) -> Eq:
    return Eq(Var(x), Var(x))


def build_bgraph(phi: DataConstraint, uncontrolled: frozenset[DataVariable]) -> BGraph:
    """Dependency B-graph over the symmetric closure of phi's kernel.

    Vertices: the closed literal set, the star root, and an x == x vertex per
    uncontrollable variable.  A literal depends conjunctively on one
    variable-headed equality per variable it mentions; an equality x == t
    alternatively depends only on the variables of t.  Literals without
    variables hang off the star directly.
    """
    symlit = symmetric_closure(phi)
    selfeqs = frozenset(_self_eq(x) for x in uncontrolled)
    vertices = symlit | selfeqs | {STAR}

    by_lhs: dict[DataVariable, list[DataLiteral]] = {}
    for lit in symlit | selfeqs:
        x = _var_headed(lit)
        if x is not None:
            by_lhs.setdefault(x, []).append(lit)
    for options in by_lhs.values():
        options.sort(key=literal_key)

    barcs = set(BArc(frozenset([STAR]), _self_eq(x)) for x in uncontrolled)

    def add_arcs(variables, head):
        variables = sorted(variables)
        if not variables:
            barcs.add(BArc(frozenset([STAR]), head))
            return
        if any(x not in by_lhs for x in variables):
            return
        def expand(i, chosen):
            if i == len(variables):
                barcs.add(BArc(frozenset(chosen), head))
                return
            for option in by_lhs[variables[i]]:
                chosen.append(option)
                expand(i + 1, chosen)
                chosen.pop()
        expand(0, [])

    for lit in symlit:
        add_arcs(literal_vars(lit), lit)
        x = _var_headed(lit)
        if x is not None:
            add_arcs(term_vars(lit.rhs), lit)

    return BGraph(vertices, frozenset(barcs))


def compute_arborescence(g: BGraph) -> Optional[Arborescence]:
    """Breadth-first frontier sweep from the star root.

    A vertex joins the frontier once some incoming arc has all tails already
    explored; one such arc (the least, for determinism) is recorded for it.
    Returns None when the sweep cannot cover every vertex, which is exactly
    when no arborescence exists.
    """
    incoming: dict[DataLiteral, list[BArc]] = {}
    for arc in g.barcs:
        incoming.setdefault(arc.head, []).append(arc)
    for arcs in incoming.values():
        arcs.sort(key=BArc.key)

    done = {STAR}
    chosen = []
    todo = set(g.vertices) - done
    while True:
        layer = []
        for v in sorted(todo, key=vertex_key):
            for arc in incoming.get(v, ()):
                if arc.tails <= done:
                    layer.append((v, arc))
                    break
        if not layer:
            break
        for v, arc in layer:
            chosen.append(arc)
            done.add(v)
            todo.discard(v)
    if todo:
        return None
    return Arborescence(tuple(sorted(chosen, key=BArc.key)))


def precedence_digraph(phi: DataConstraint, uncontrolled: frozenset[DataVariable]) -> frozenset:
    """The raw precedence relation over the closed literals, star included.

    Variable-headed equalities precede every literal mentioning their
    variable and every non-equality-shaped literal; literals over
    uncontrollable variables only hang off the star.  Closed transitively.
    Used for diagnostics and as the containment oracle for the strict order.
    """
    symlit = symmetric_closure(phi)
    edges = set()
    for a in symlit:
        x = _var_headed(a)
        if x is None:
            continue
        for b in symlit:
            if x in literal_vars(b):
                edges.add((a, b))
            if _var_headed(b) is None:
                edges.add((a, b))
    for b in symlit:
        if literal_vars(b) <= uncontrolled:
            edges.add((STAR, b))
        x = _var_headed(b)
        if x is not None and term_vars(b.rhs) <= uncontrolled:
            edges.add((STAR, b))
    return frozenset(_transitive_closure(edges))


def _transitive_closure(edges: set) -> set:
    closure = set(edges)
    changed = True
    while changed:
        changed = False
        by_src: dict = {}
        for u, v in closure:
            by_src.setdefault(v, []).append(u)
        for u, v in list(closure):
            for w in by_src.get(u, ()):
                if w != u and u != v and (w, v) not in closure:
                    closure.add((w, v))
                    changed = True
    return closure


@dataclass(frozen=True)
class LinearizedPlan:
    literals: tuple[DataLiteral, ...]
    n: int  # leading variable-headed equalities
    m: int  # remaining literals


def derive_plan(
    phi: DataConstraint,
    uncontrolled: frozenset[DataVariable],
    arb: Arborescence,
) -> LinearizedPlan:
    """Split the arborescence into a strict order and linearize it.

    The resulting order puts every variable-headed equality before every
    other literal and respects all recorded dependencies; the translation
    requirements are re-checked and any violation raises, since a complete
    arborescence guarantees them.
    """
    symlit = symmetric_closure(phi)

    strict = set()
    for arc in arb.barcs:
        if arc.head not in symlit:
            continue
        for t in arc.tails:
            if t is not STAR and t in symlit:
                strict.add((t, arc.head))
    for a in symlit:
        if _var_headed(a) is None:
            continue
        for b in symlit:
            if _var_headed(b) is None:
                strict.add((a, b))
    strict = _transitive_closure(strict)

    # Kahn's algorithm with the canonical literal order breaking ties.
    preds = {v: set() for v in symlit}
    for u, v in strict:
        if u != v:
            preds[v].add(u)
    remaining = set(symlit)
    order = []
    while remaining:
        ready = [v for v in remaining if not preds[v] & remaining]
        if not ready:
            raise InternalConsistencyError("dependency cycle survived the arborescence")
        nxt = min(ready, key=literal_key)
        order.append(nxt)
        remaining.discard(nxt)

    n = 0
    while n < len(order) and _var_headed(order[n]) is not None:
        n += 1
    plan = LinearizedPlan(tuple(order), n, len(order) - n)
    _verify_requirements(phi, uncontrolled, plan)
    return plan


def _verify_requirements(phi, uncontrolled, plan):
    position = {lit: i for i, lit in enumerate(plan.literals)}
    heads = []
    for i, lit in enumerate(plan.literals):
        x = _var_headed(lit)
        if i < plan.n:
            if x is None:
                raise InternalConsistencyError("equality prefix contains a non-assignable literal")
            heads.append(x)
        elif x is not None:
            raise InternalConsistencyError("variable-headed equality after the prefix")
    missing = constraint_vars(phi) - uncontrolled - set(heads)
    if missing:
        raise InternalConsistencyError(
            f"variables {sorted(map(repr, missing))} have no defining equality"
        )
    for lit in plan.literals[: plan.n]:
        x = _var_headed(lit)
        for y in term_vars(lit.rhs):
            if y in uncontrolled:
                continue
            earlier = any(
                _var_headed(other) == y and position[other] < position[lit]
                for other in plan.literals
            )
            if not earlier:
                raise InternalConsistencyError(
                    f"{literal_text(lit)} depends on {y!r} before any equality defines it"
                )


def translate(
    phi: DataConstraint,
    uncontrolled: frozenset[DataVariable],
    plan: LinearizedPlan,
) -> DataCommand:
    """The translation loop: a leading skip, one assignment per first
    definition of a controllable variable, failure statements for everything
    else, sequenced left-associatively in plan order."""
    stmts: list[DataCommand] = [SKIP]
    seen: set[DataVariable] = set()
    for i, lit in enumerate(plan.literals):
        if i < plan.n:
            x = _var_headed(lit)
            if x in uncontrolled or x in seen:
                stmts.append(FailUnless(lit, SKIP))
            else:
                stmts.append(Assign(x, lit.rhs))
            seen.add(x)
        else:
            stmts.append(FailUnless(lit, SKIP))
    return seq_of(stmts)


def dedup_failures(pi: DataCommand) -> DataCommand:
    """Remove the redundant partner of every mirrored equality pair.

    The closure doubles each equality, so its translation carries either an
    assignment plus a mirror failure check or two mirror failure checks; the
    later check is implied by the earlier statement and is dropped.
    """
    kept = []
    seen_eqs = set()
    for s in statements(pi):
        if isinstance(s, FailUnless) and isinstance(s.guard, Eq):
            mirror = (s.guard.rhs, s.guard.lhs)
            if mirror != (s.guard.lhs, s.guard.rhs) and mirror in seen_eqs:
                continue
            seen_eqs.add((s.guard.lhs, s.guard.rhs))
        elif isinstance(s, Assign):
            seen_eqs.add((Var(s.var), s.term))
        kept.append(s)
    return seq_of(kept)


# ---------------------------------------------------------------------------
# compiled constraints and automata


@dataclass(frozen=True)
class CompiledConstraint:
    original: DataConstraint
    command: Optional[DataCommand]
    uncontrolled: tuple[DataVariable, ...]  # ordered by the structural order
    free_order: tuple[DataVariable, ...]
    mode: str  # "compiled" | "fallback"

    @property
    def compiled(self) -> bool:
        return self.mode == "compiled"


def commandify_constraint(
    phi: DataConstraint,
    uncontrolled: frozenset[DataVariable],
) -> CompiledConstraint:
    """Compile one constraint, falling back to the declarative form when the
    B-graph has no arborescence or the uncontrollable variables are not all
    free in the constraint."""
    cc, _ = _commandify_detail(phi, uncontrolled)
    return cc


def _commandify_detail(phi, uncontrolled):
    free_order = tuple(sorted(free_vars(phi)))
    x_sorted = tuple(sorted(uncontrolled))
    if not set(uncontrolled) <= set(free_order):
        return CompiledConstraint(phi, None, x_sorted, free_order, "fallback"), None
    arb = compute_arborescence(build_bgraph(phi, frozenset(uncontrolled)))
    if arb is None:
        return CompiledConstraint(phi, None, x_sorted, free_order, "fallback"), None
    plan = derive_plan(phi, frozenset(uncontrolled), arb)
    command = dedup_failures(translate(phi, frozenset(uncontrolled), plan))
    return CompiledConstraint(phi, command, x_sorted, free_order, "compiled"), len(arb.barcs)


@dataclass(frozen=True)
class CompiledTransition:
    source: str
    sync: frozenset[str]
    compiled: CompiledConstraint
    target: str

    @property
    def guard(self) -> DataConstraint:
        return self.compiled.original


@dataclass(frozen=True)
class CompiledAutomaton:
    states: frozenset[str]
    ports: PortTriple
    memory: frozenset[str]
    transitions: tuple[CompiledTransition, ...]
    initial: str

    def transitions_from(self, state: str) -> list[tuple[int, CompiledTransition]]:
        return [(i, t) for i, t in enumerate(self.transitions) if t.source == state]


def initial_uncontrollables(a) -> frozenset[DataVariable]:
    """Variables whose values are fixed before solving: input ports and
    pre-step memory reads."""
    return frozenset(port(p) for p in a.ports.inputs) | frozenset(pre(m) for m in a.memory)


def transition_uncontrollables(a, guard: DataConstraint) -> frozenset[DataVariable]:
    return free_vars(guard) & initial_uncontrollables(a)


def commandify_automaton(
    a: ConstraintAutomaton,
    *,
    log: Optional[list] = None,
) -> CompiledAutomaton:
    """Compile every guard; the automaton structure and transition order stay."""
    problems = validate(a)
    if problems:
        raise ValueError("refusing to commandify an invalid automaton: " + "; ".join(problems))
    trans = []
    for i, t in enumerate(a.transitions):
        cc, arb_size = _commandify_detail(t.guard, transition_uncontrollables(a, t.guard))
        if log is not None:
            log.append(
                {
                    "pass": "commandify",
                    "trans": i,
                    "mode": cc.mode,
                    "statements": len(statements(cc.command)) if cc.command is not None else 0,
                    "arborescence": arb_size if arb_size is not None else 0,
                }
            )
        trans.append(CompiledTransition(t.source, t.sync, cc, t.target))
    return CompiledAutomaton(a.states, a.ports, a.memory, tuple(trans), a.initial)


def is_arborescent(a: ConstraintAutomaton) -> bool:
    """Whether every guard's B-graph (with its transition's uncontrollables)
    admits an arborescence, i.e. commandify needs no solver fallback."""
    for t in a.transitions:
        g = build_bgraph(t.guard, transition_uncontrollables(a, t.guard))
        if compute_arborescence(g) is None:
            return False
    return True
