"""Shared fixtures: the running-example constraint, the producers/consumer
automaton, and a seeded generator for random constraints."""

from __future__ import annotations

import random

import pytest

from caf.automata import ConstraintAutomaton, PortTriple, Transition
from caf.constraints import (
    App,
    Const,
    DataConstraint,
    Eq,
    Neg,
    Rel,
    Var,
    default_registry,
    port,
    post,
    pre,
)


def v(name):
    """Shorthand: a port variable as a term."""
    return Var(port(name))


@pytest.fixture
def phi_eg() -> DataConstraint:
    # 'x == B & C == D & add(B,D) == E & E == F & E == G & !Odd(G)
    return DataConstraint(
        (),
        (
            Eq(Var(pre("x")), v("B")),
            Eq(v("C"), v("D")),
            Eq(App("add", (v("B"), v("D"))), v("E")),
            Eq(v("E"), v("F")),
            Eq(v("E"), v("G")),
            Neg(Rel("Odd", (v("G"),))),
        ),
    )


@pytest.fixture
def merger_buffer() -> ConstraintAutomaton:
    """Two producers feed one buffered consumer: the classic two-state example."""
    return ConstraintAutomaton(
        frozenset(["q1", "q2"]),
        PortTriple(frozenset("ABC"), frozenset("AB"), frozenset("C")),
        frozenset(["x"]),
        (
            Transition("q1", frozenset("A"), DataConstraint((), (Eq(v("A"), Var(post("x"))),)), "q2"),
            Transition("q1", frozenset("B"), DataConstraint((), (Eq(v("B"), Var(post("x"))),)), "q2"),
            Transition("q2", frozenset("C"), DataConstraint((), (Eq(Var(pre("x")), v("C")),)), "q1"),
        ),
        "q1",
    )


def make_registry(n: int):
    """The default extralogicals plus functions closed on the domain 0..n-1.

    Closed functions keep every computable value inside the enumeration
    carrier, so the finite-domain witness search and the brute-force solver
    are exact on generated instances instead of approximations.
    """
    registry = default_registry()
    registry.functions["addm"] = (2, lambda a, b: (a + b) % n)
    registry.functions["incm"] = (1, lambda a: (a + 1) % n)
    return registry


class ConstraintGen:
    """Seeded random constraints for property suites.

    Variables are drawn from a small pool of ports and memory views; literals
    are equalities over variables/constants/domain-closed applications plus
    relation atoms.  Constants stay inside the domain handed to the tests.
    """

    def __init__(self, seed: int, modulus: int = 3):
        self.rng = random.Random(seed)
        self.modulus = modulus
        self.registry = make_registry(modulus)
        self.pool = [port(n) for n in "ABCDEF"] + [pre("m"), post("m")]

    def variable(self):
        return self.rng.choice(self.pool)

    def term(self, depth: int = 0, variables=None):
        variables = variables or self.pool
        roll = self.rng.random()
        if roll < 0.55 or depth >= 2:
            return Var(self.rng.choice(variables))
        if roll < 0.75:
            return Const(self.rng.randrange(self.modulus))
        if roll < 0.9:
            return App("addm", (self.term(depth + 1, variables), self.term(depth + 1, variables)))
        return App("incm", (self.term(depth + 1, variables),))

    def literal(self, variables=None):
        roll = self.rng.random()
        if roll < 0.6:
            return Eq(self.term(variables=variables), self.term(variables=variables))
        if roll < 0.75:
            return Rel("Odd", (self.term(variables=variables),))
        if roll < 0.9:
            return Neg(Rel("Odd", (self.term(variables=variables),)))
        return Neg(Eq(self.term(variables=variables), self.term(variables=variables)))

    def constraint(self, max_literals: int = 4, quantify: bool = False) -> DataConstraint:
        k = self.rng.randrange(1, max_literals + 1)
        kernel = tuple(self.literal() for _ in range(k))
        quantified = ()
        if quantify and self.rng.random() < 0.5:
            from caf.constraints import kernel_vars

            candidates = sorted(kernel_vars(DataConstraint((), kernel)))
            if candidates:
                quantified = (self.rng.choice(candidates),)
        return DataConstraint(quantified, kernel)


class ArborescentGen:
    """Random constraints whose B-graph is arborescent by construction.

    Every controllable variable is introduced by an equality over earlier
    variables, uncontrollables or constants; extra relation/negation literals
    are sprinkled over the introduced variables.  Functions are closed on the
    domain so the solver oracle enumerates exactly the computable values.
    """

    def __init__(self, seed: int, modulus: int = 5):
        import random

        self.rng = random.Random(seed)
        self.modulus = modulus
        self.registry = make_registry(modulus)

    def sample(self, max_vars: int = 6, max_literals: int = 8):
        rng = self.rng
        n_unc = rng.randrange(1, 3)
        uncontrolled = [port(f"u{i}") for i in range(n_unc)]
        known = list(uncontrolled)
        kernel = []
        n_vars = rng.randrange(1, max_vars - n_unc + 1)
        for i in range(n_vars):
            x = [port(f"w{i}"), pre(f"c{i}"), post(f"c{i}")][rng.randrange(3)]
            if x in known:
                x = port(f"w{i}")
            rhs = self._term_over(known)
            kernel.append(Eq(Var(x), rhs))
            known.append(x)
        while len(kernel) < rng.randrange(1, max_literals + 1):
            roll = rng.random()
            t = self._term_over(known)
            if roll < 0.4:
                kernel.append(Rel("Odd", (t,)))
            elif roll < 0.7:
                kernel.append(Neg(Rel("Odd", (t,))))
            else:
                kernel.append(Eq(t, self._term_over(known)))
        return DataConstraint((), tuple(kernel)), frozenset(uncontrolled)

    def _term_over(self, known):
        rng = self.rng
        roll = rng.random()
        if roll < 0.5:
            return Var(rng.choice(known))
        if roll < 0.75:
            return Const(rng.randrange(self.modulus))
        return App("addm", (Var(rng.choice(known)), self._term_over(known)))
