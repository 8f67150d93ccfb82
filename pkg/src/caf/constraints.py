"""First-order data-constraint calculus.

Terms, literals and constraints range over three kinds of data variables:
ports, pre-step memory reads (``'m``) and post-step memory writes (``m'``).
Constraints are kept in prenex normal form: an existential quantifier prefix
over a conjunctive kernel of literals.  The module also provides the
finite-domain brute-force solver that serves as the baseline engine and as
the correctness oracle for every optimization pass.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass, field
from typing import Callable, Iterable, Optional, Union


class RegistryError(Exception):
    """An extralogical (function or relation) name is unknown or misused."""


# ---------------------------------------------------------------------------
# data, variables, terms


class _Nil:
    """The empty datum: result of evaluating an unbound variable."""

    _instance = None

    def __new__(cls):
        if cls._instance is None:
            cls._instance = super().__new__(cls)
        return cls._instance

    def __repr__(self):
        return "NIL"


NIL = _Nil()

Datum = int

_KIND_RANK = {"port": 0, "pre": 1, "post": 2}


@dataclass(frozen=True)
class DataVariable:
    kind: str  # "port" | "pre" | "post"
    name: str

    def __post_init__(self):
        if self.kind not in _KIND_RANK:
            raise ValueError(f"bad variable kind: {self.kind!r}")

    def key(self):
        return (_KIND_RANK[self.kind], self.name)

    def __lt__(self, other: "DataVariable"):
        return self.key() < other.key()

    def __repr__(self):
        return var_text(self)


def port(name: str) -> DataVariable:
    return DataVariable("port", name)


def pre(name: str) -> DataVariable:
    return DataVariable("pre", name)


def post(name: str) -> DataVariable:
    return DataVariable("post", name)


@dataclass(frozen=True)
class Var:
    var: DataVariable

    def __repr__(self):
        return term_text(self)


@dataclass(frozen=True)
class Const:
    value: Datum

    def __repr__(self):
        return term_text(self)


@dataclass(frozen=True)
class App:
    fn: str
    args: tuple["DataTerm", ...]

    def __post_init__(self):
        if len(self.args) < 1:
            raise ValueError("function application needs at least one argument")

    def __repr__(self):
        return term_text(self)


DataTerm = Union[Var, Const, App]


def term_key(t: DataTerm):
    """Structural total order on terms: variables < constants < applications."""
    if isinstance(t, Var):
        return (0, t.var.key())
    if isinstance(t, Const):
        return (1, t.value)
    return (2, t.fn, len(t.args), tuple(term_key(a) for a in t.args))


def term_vars(t: DataTerm) -> frozenset[DataVariable]:
    if isinstance(t, Var):
        return frozenset((t.var,))
    if isinstance(t, Const):
        return frozenset()
    return frozenset().union(*(term_vars(a) for a in t.args))


# ---------------------------------------------------------------------------
# literals and constraints


@dataclass(frozen=True)
class Bot:
    def __repr__(self):
        return "false"


@dataclass(frozen=True)
class Top:
    def __repr__(self):
        return "true"


@dataclass(frozen=True)
class Eq:
    lhs: DataTerm
    rhs: DataTerm

    def __repr__(self):
        return literal_text(self)


@dataclass(frozen=True)
class Rel:
    rel: str
    args: tuple[DataTerm, ...]

    def __post_init__(self):
        if len(self.args) < 1:
            raise ValueError("relation needs at least one argument")

    def __repr__(self):
        return literal_text(self)


@dataclass(frozen=True)
class Neg:
    atom: Union[Bot, Top, Eq, Rel]

    def __post_init__(self):
        if isinstance(self.atom, Neg):
            raise ValueError("negation never nests")

    def __repr__(self):
        return literal_text(self)


BOT = Bot()
TOP = Top()

DataAtom = Union[Bot, Top, Eq, Rel]
DataLiteral = Union[Bot, Top, Eq, Rel, Neg]


def literal_vars(lit: DataLiteral) -> frozenset[DataVariable]:
    if isinstance(lit, Neg):
        return literal_vars(lit.atom)
    if isinstance(lit, Eq):
        return term_vars(lit.lhs) | term_vars(lit.rhs)
    if isinstance(lit, Rel):
        return frozenset().union(*(term_vars(a) for a in lit.args))
    return frozenset()


def var_text(x: DataVariable) -> str:
    if x.kind == "port":
        return x.name
    if x.kind == "pre":
        return f"'{x.name}"
    return f"{x.name}'"


def term_text(t: DataTerm) -> str:
    if isinstance(t, Var):
        return var_text(t.var)
    if isinstance(t, Const):
        return str(t.value)
    return f"{t.fn}({','.join(term_text(a) for a in t.args)})"


def literal_text(lit: DataLiteral) -> str:
    if isinstance(lit, Bot):
        return "false"
    if isinstance(lit, Top):
        return "true"
    if isinstance(lit, Eq):
        return f"{term_text(lit.lhs)} == {term_text(lit.rhs)}"
    if isinstance(lit, Rel):
        return f"{lit.rel}({','.join(term_text(a) for a in lit.args)})"
    return f"!{literal_text(lit.atom)}"


def literal_key(lit: DataLiteral) -> str:
    """Canonical literal order: lexicographic on the serialized form."""
    return literal_text(lit)


@dataclass(frozen=True)
class DataConstraint:
    """Prenex constraint: E x1 . ... E xl . (l1 & ... & lk).

    The kernel is kept sorted under the canonical literal order, which makes
    structural equality of constraints insensitive to conjunct ordering.
    Duplicate literals are preserved; only explicit simplification removes
    them.
    """

    quantified: tuple[DataVariable, ...]
    kernel: tuple[DataLiteral, ...]

    def __post_init__(self):
        if len(self.kernel) < 1:
            raise ValueError("kernel needs at least one literal")
        if len(set(self.quantified)) != len(self.quantified):
            raise ValueError("quantified variables must be pairwise distinct")
        object.__setattr__(
            self, "kernel", tuple(sorted(self.kernel, key=literal_key))
        )

    def __repr__(self):
        return constraint_text(self)


def constraint(*literals: DataLiteral, quantified: Iterable[DataVariable] = ()) -> DataConstraint:
    return DataConstraint(tuple(quantified), tuple(literals))


def constraint_text(phi: DataConstraint) -> str:
    prefix = "".join(f"E {var_text(x)} . " for x in phi.quantified)
    return prefix + " & ".join(literal_text(l) for l in phi.kernel)


def constraint_key(phi: DataConstraint) -> str:
    return constraint_text(phi)


def kernel_vars(phi: DataConstraint) -> frozenset[DataVariable]:
    return frozenset().union(*(literal_vars(l) for l in phi.kernel))


def constraint_vars(phi: DataConstraint) -> frozenset[DataVariable]:
    """All data variables occurring in the constraint, bound ones included."""
    return kernel_vars(phi) | frozenset(phi.quantified)


def free_vars(phi: DataConstraint) -> frozenset[DataVariable]:
    return kernel_vars(phi) - frozenset(phi.quantified)


# ---------------------------------------------------------------------------
# extralogicals

DataAssignment = dict  # DataVariable -> Datum


@dataclass
class ExtralogicalRegistry:
    functions: dict[str, tuple[int, Callable]] = field(default_factory=dict)
    relations: dict[str, tuple[int, Callable]] = field(default_factory=dict)

    def function(self, name: str, arity: int) -> Callable:
        entry = self.functions.get(name)
        if entry is None:
            raise RegistryError(f"unregistered data function: {name}")
        if entry[0] != arity:
            raise RegistryError(f"data function {name} has arity {entry[0]}, got {arity} arguments")
        return entry[1]

    def relation(self, name: str, arity: int) -> Callable:
        entry = self.relations.get(name)
        if entry is None:
            raise RegistryError(f"unregistered data relation: {name}")
        if entry[0] != arity:
            raise RegistryError(f"data relation {name} has arity {entry[0]}, got {arity} arguments")
        return entry[1]


def default_registry() -> ExtralogicalRegistry:
    return ExtralogicalRegistry(
        functions={
            "add": (2, lambda a, b: a + b),
            "mult": (2, lambda a, b: a * b),
            "inc": (1, lambda a: a + 1),
            "divByThree": (1, lambda a: a // 3),
        },
        relations={
            "Odd": (1, lambda a: a % 2 == 1),
            "SmallerThan": (2, lambda a, b: a < b),
        },
    )


DEFAULT_REGISTRY = default_registry()


@dataclass(frozen=True)
class FiniteDomain:
    """Finite carrier 0..size-1 used for assignment enumeration and E-witness search."""

    size: int

    def __post_init__(self):
        if self.size < 1:
            raise ValueError("domain size must be positive")

    @property
    def values(self) -> range:
        return range(self.size)


# ---------------------------------------------------------------------------
# evaluation and entailment


def evaluate(sigma: DataAssignment, t: DataTerm, registry: ExtralogicalRegistry = DEFAULT_REGISTRY):
    """Evaluate a term to a datum, or NIL if some variable of t is unbound."""
    if isinstance(t, Var):
        return sigma.get(t.var, NIL)
    if isinstance(t, Const):
        return t.value
    fn = registry.function(t.fn, len(t.args))
    args = []
    for a in t.args:
        v = evaluate(sigma, a, registry)
        if v is NIL:
            return NIL
        args.append(v)
    return fn(*args)


def _atom_holds(sigma, atom: DataAtom, registry) -> bool:
    if isinstance(atom, Top):
        return True
    if isinstance(atom, Bot):
        return False
    if isinstance(atom, Eq):
        left = evaluate(sigma, atom.lhs, registry)
        if left is NIL:
            return False
        return left == evaluate(sigma, atom.rhs, registry)
    rel = registry.relation(atom.rel, len(atom.args))
    args = []
    for a in atom.args:
        v = evaluate(sigma, a, registry)
        if v is NIL:
            return False
        args.append(v)
    return rel(*args)


def literal_holds(sigma: DataAssignment, lit: DataLiteral, registry: ExtralogicalRegistry = DEFAULT_REGISTRY) -> bool:
    """Entailment of a single literal.

    A negation holds only when every variable of the atom is bound and the
    atom fails; this keeps entailment monotone in the assignment.
    """
    if isinstance(lit, Neg):
        if not all(x in sigma for x in literal_vars(lit.atom)):
            return False
        return not _atom_holds(sigma, lit.atom, registry)
    return _atom_holds(sigma, lit, registry)


def entails(
    sigma: DataAssignment,
    phi: DataConstraint,
    dom: Optional[FiniteDomain] = None,
    registry: ExtralogicalRegistry = DEFAULT_REGISTRY,
) -> bool:
    """Decide sigma |= phi.

    Existential quantifiers are resolved by witness search over the finite
    domain, which is exact for the quantifier-free constraints the optimized
    pipeline produces.  The search assigns one quantified variable at a time
    and rejects a partial choice as soon as a fully-bound literal fails.
    """
    if not phi.quantified:
        return all(literal_holds(sigma, l, registry) for l in phi.kernel)
    if dom is None:
        raise ValueError("quantified constraint needs a finite domain for witness search")

    quantified = set(phi.quantified)
    # Scope: quantified variables shadow any outer binding.
    base = {x: v for x, v in sigma.items() if x not in quantified}

    # Literals that mention a variable which can never become bound are
    # unsatisfiable under every witness choice.
    bindable = set(base) | quantified
    lits = []
    for lit in phi.kernel:
        lvars = literal_vars(lit)
        if not lvars <= bindable:
            return False
        lits.append((lit, lvars))

    values = list(dom.values)

    def search(unassigned: list[DataVariable], scope: dict, pending: list) -> bool:
        if not unassigned:
            return all(literal_holds(scope, lit, registry) for lit, _ in pending)
        # Prefer a variable that completes some pending literal: its value is
        # usually forced, which prunes the search on equality chains.
        pick = None
        assigned_vars = set(scope)
        for x in unassigned:
            for lit, lvars in pending:
                if x in lvars and lvars <= assigned_vars | {x}:
                    pick = x
                    break
            if pick is not None:
                break
        if pick is None:
            pick = unassigned[0]
        rest = [x for x in unassigned if x != pick]
        for d in values:
            scope[pick] = d
            now = set(scope)
            ok = True
            still = []
            for lit, lvars in pending:
                if lvars <= now:
                    if not literal_holds(scope, lit, registry):
                        ok = False
                        break
                else:
                    still.append((lit, lvars))
            if ok and search(rest, scope, still):
                del scope[pick]
                return True
        del scope[pick]
        return False

    scope = dict(base)
    start = set(scope)
    pending = []
    for lit, lvars in lits:
        if lvars <= start:
            if not literal_holds(scope, lit, registry):
                return False
        else:
            pending.append((lit, lvars))
    return search(sorted(quantified), scope, pending)


# ---------------------------------------------------------------------------
# substitution


_FRESH_PREFIX = "v$"


def _fresh_like(x: DataVariable, taken: set[DataVariable]) -> DataVariable:
    i = 1
    while True:
        candidate = DataVariable(x.kind, f"{_FRESH_PREFIX}{x.name}{i}")
        if candidate not in taken:
            return candidate
        i += 1


def term_substitute(t: DataTerm, replacement: DataTerm, x: DataVariable) -> DataTerm:
    if isinstance(t, Var):
        return replacement if t.var == x else t
    if isinstance(t, Const):
        return t
    return App(t.fn, tuple(term_substitute(a, replacement, x) for a in t.args))


def literal_substitute(lit: DataLiteral, replacement: DataTerm, x: DataVariable) -> DataLiteral:
    if isinstance(lit, Neg):
        return Neg(literal_substitute(lit.atom, replacement, x))
    if isinstance(lit, Eq):
        return Eq(term_substitute(lit.lhs, replacement, x), term_substitute(lit.rhs, replacement, x))
    if isinstance(lit, Rel):
        return Rel(lit.rel, tuple(term_substitute(a, replacement, x) for a in lit.args))
    return lit


def rename_bound(phi: DataConstraint, old: DataVariable, new: DataVariable) -> DataConstraint:
    kernel = tuple(literal_substitute(l, Var(new), old) for l in phi.kernel)
    quantified = tuple(new if q == old else q for q in phi.quantified)
    return DataConstraint(quantified, kernel)


def substitute(phi: DataConstraint, t: DataTerm, x: DataVariable) -> DataConstraint:
    """phi[t/x]: capture-free substitution of t for every free occurrence of x.

    Quantified variables that collide with variables of t are renamed to
    fresh reserved names first.
    """
    if x in phi.quantified:
        return phi
    incoming = term_vars(t)
    taken = set(constraint_vars(phi) | incoming)
    for q in phi.quantified:
        if q in incoming:
            fresh = _fresh_like(q, taken)
            taken.add(fresh)
            phi = rename_bound(phi, q, fresh)
    return DataConstraint(phi.quantified, tuple(literal_substitute(l, t, x) for l in phi.kernel))


# ---------------------------------------------------------------------------
# kernel-level operations


def symmetric_closure(phi: DataConstraint) -> frozenset[DataLiteral]:
    """lit(phi) extended with the mirrored form of every equality."""
    lits = set(phi.kernel)
    for l in phi.kernel:
        if isinstance(l, Eq):
            lits.add(Eq(l.rhs, l.lhs))
    return frozenset(lits)


def simplify_trivial(phi: DataConstraint) -> DataConstraint:
    """Drop t == t literals; an emptied kernel becomes true, vacuous quantifiers go."""
    kernel = tuple(l for l in phi.kernel if not (isinstance(l, Eq) and l.lhs == l.rhs))
    if not kernel:
        kernel = (TOP,)
    occurring = frozenset().union(*(literal_vars(l) for l in kernel))
    quantified = tuple(q for q in phi.quantified if q in occurring)
    return DataConstraint(quantified, kernel)


def conjoin(phi1: DataConstraint, phi2: DataConstraint) -> DataConstraint:
    """phi1 & phi2 in normal form: prefixes concatenated, kernels merged as a set.

    Bound variables of either side are renamed when they collide with the
    other side's variables, so no free occurrence is ever captured.
    """
    taken = set(constraint_vars(phi1) | constraint_vars(phi2))
    for q in phi1.quantified:
        if q in constraint_vars(phi2):
            fresh = _fresh_like(q, taken)
            taken.add(fresh)
            phi1 = rename_bound(phi1, q, fresh)
    for q in phi2.quantified:
        if q in constraint_vars(phi1):
            fresh = _fresh_like(q, taken)
            taken.add(fresh)
            phi2 = rename_bound(phi2, q, fresh)
    kernel = tuple(set(phi1.kernel) | set(phi2.kernel))
    return DataConstraint(phi1.quantified + phi2.quantified, kernel)


# ---------------------------------------------------------------------------
# brute-force solving (the oracle)


NoSolution = None


def _value_pool(dom: FiniteDomain, sigma_init: DataAssignment) -> list[Datum]:
    # Data already present in the initial assignment (put payloads, memory
    # contents) stay solvable even when they fall outside the finite carrier.
    return sorted(set(dom.values) | set(sigma_init.values()))


def solve_bruteforce(
    phi: DataConstraint,
    sigma_init: DataAssignment,
    dom: FiniteDomain,
    registry: ExtralogicalRegistry = DEFAULT_REGISTRY,
) -> Optional[DataAssignment]:
    """First satisfying extension of sigma_init over free(phi), or None.

    Enumeration is deterministic: variables in the structural order, values
    ascending over the domain plus any data already in sigma_init.
    """
    unknowns = sorted(free_vars(phi) - set(sigma_init))
    pool = _value_pool(dom, sigma_init)
    for combo in itertools.product(pool, repeat=len(unknowns)):
        sigma = dict(sigma_init)
        sigma.update(zip(unknowns, combo))
        if entails(sigma, phi, dom, registry):
            return sigma
    return NoSolution


def iter_assignments(variables, dom: FiniteDomain, partial: bool = True):
    """All assignments over the given variables with values in the domain.

    With partial=True each variable may also stay unbound.
    """
    variables = sorted(variables)
    choices = [NIL, *dom.values] if partial else list(dom.values)
    for combo in itertools.product(choices, repeat=len(variables)):
        yield {x: v for x, v in zip(variables, combo) if v is not NIL}


def equivalent_on_domain(
    phi1: DataConstraint,
    phi2: DataConstraint,
    dom: FiniteDomain,
    registry: ExtralogicalRegistry = DEFAULT_REGISTRY,
) -> bool:
    """Entailment-equivalence over every (partial) assignment of the free variables."""
    variables = free_vars(phi1) | free_vars(phi2)
    for sigma in iter_assignments(variables, dom):
        if entails(sigma, phi1, dom, registry) != entails(sigma, phi2, dom, registry):
            return False
    return True
