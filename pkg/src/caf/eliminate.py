"""Variable elimination for data constraints.

Hiding a port wraps guards in existential quantifiers and leaves the
constraint as large as before.  When the port has a determinant (a term that
fixes its value in every satisfying assignment without mentioning the port),
the quantifier can be avoided altogether by substituting the determinant.
This module computes determinants, the resulting syntactic existential
quantification, and the eliminate operation on automata.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Optional

from .automata import AutomatonError, ConstraintAutomaton, PortTriple, Transition
from .constraints import (
    DEFAULT_REGISTRY,
    DataConstraint,
    DataTerm,
    DataVariable,
    Eq,
    ExtralogicalRegistry,
    Var,
    constraint_vars,
    free_vars,
    port,
    simplify_trivial,
    substitute,
    term_key,
    term_text,
    term_vars,
)


@dataclass(frozen=True)
class DeterminantSet:
    variable: DataVariable
    terms: tuple[DataTerm, ...]  # ordered by the structural term order

    def __bool__(self):
        return bool(self.terms)

    @property
    def least(self) -> Optional[DataTerm]:
        return self.terms[0] if self.terms else None


def determinants(x: DataVariable, phi: DataConstraint) -> DeterminantSet:
    """Terms that precisely fix x's value in every assignment satisfying phi.

    Only equalities with x alone on one side contribute, and never with x on
    the other side (determinants have no recursion).  Terms mentioning a
    bound variable of phi are excluded: they cannot be evaluated against the
    assignments phi characterizes, so they do not determine anything.
    """
    if x in phi.quantified:
        return DeterminantSet(x, ())
    bound = frozenset(phi.quantified)
    found = set()
    for lit in phi.kernel:
        if not isinstance(lit, Eq):
            continue
        for side, other in ((lit.lhs, lit.rhs), (lit.rhs, lit.lhs)):
            if side == Var(x) and x not in term_vars(other) and not term_vars(other) & bound:
                found.add(other)
    return DeterminantSet(x, tuple(sorted(found, key=term_key)))


def syn_exists(x: DataVariable, phi: DataConstraint) -> DataConstraint:
    """Quantify x away syntactically: substitute the least determinant if one
    exists, otherwise fall back to a real existential quantifier (dropped
    when vacuous)."""
    phi, _ = _syn_exists_detail(x, phi)
    return phi


def _syn_exists_detail(x: DataVariable, phi: DataConstraint):
    ds = determinants(x, phi)
    if ds:
        return substitute(phi, ds.least, x), ds.least
    if x in free_vars(phi):
        return DataConstraint((x,) + phi.quantified, phi.kernel), None
    return phi, None


def eliminate(
    a: ConstraintAutomaton,
    p: str,
    *,
    registry: ExtralogicalRegistry = DEFAULT_REGISTRY,
    log: Optional[list] = None,
) -> ConstraintAutomaton:
    """Hide variant: remove port p, rewriting each guard with syn_exists and
    cleaning up the trivial equalities the substitution leaves behind."""
    if p not in a.ports.all:
        raise AutomatonError(f"unknown port {p!r}")
    ports = PortTriple(a.ports.all - {p}, a.ports.inputs - {p}, a.ports.outputs - {p})
    x = port(p)
    trans = []
    for i, t in enumerate(a.transitions):
        rewritten, chosen = _syn_exists_detail(x, t.guard)
        guard = simplify_trivial(rewritten)
        if log is not None:
            log.append(
                {
                    "pass": "eliminate",
                    "port": p,
                    "trans": i,
                    "determinant": term_text(chosen) if chosen is not None else None,
                    "before": len(t.guard.kernel),
                    "after": len(guard.kernel),
                }
            )
        trans.append(Transition(t.source, t.sync - {p}, guard, t.target))
    return ConstraintAutomaton(a.states, ports, a.memory, tuple(trans), a.initial)


def ever_determined(a: ConstraintAutomaton) -> frozenset[str]:
    """Ports with a determinant in every guard that mentions them.

    Ports absent from all guards qualify vacuously.  Eliminating an
    ever-determined port is guaranteed to erase it from every guard.
    """
    result = set()
    for p in a.ports.all:
        x = port(p)
        if all(
            determinants(x, guard)
            for guard in a.guards()
            if x in constraint_vars(guard)
        ):
            result.add(p)
    return frozenset(result)
