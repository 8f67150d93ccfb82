"""Deterministic coordinator runtime, benchmark harness and trace oracle.

The coordinator fires automaton transitions against pending put/get
operations.  In solver mode every guard goes through the brute-force
constraint solver; in command mode compiled transitions execute their data
command instead (transitions flagged for fallback still use the solver).
The module also provides the bounded trace-equivalence oracle that stands in
for behavioral congruence at desk scale.
"""

from __future__ import annotations

import time
from dataclasses import dataclass, field
from typing import Iterable, Optional, Union

from .automata import ConstraintAutomaton
from .commandify import (
    CompiledAutomaton,
    CompiledConstraint,
    CompiledTransition,
    commandify_automaton,
)
from .commands import FAIL, exec_command
from .constraints import (
    DEFAULT_REGISTRY,
    DataConstraint,
    ExtralogicalRegistry,
    FiniteDomain,
    entails,
    free_vars,
    port,
    post,
    pre,
    solve_bruteforce,
)

SOLVER = "solver"
COMMAND = "command"


@dataclass(frozen=True)
class PendingIO:
    port: str
    kind: str  # "put" | "get"
    value: Optional[int] = None  # datum of a put


@dataclass
class CoordinatorState:
    current: str
    memory: dict  # cell -> datum or None
    pending: dict = field(default_factory=dict)  # port -> PendingIO
    fired: int = 0


@dataclass(frozen=True)
class FiringRecord:
    index: int
    sync: frozenset[str]
    assignment: dict

    def __eq__(self, other):
        return (
            isinstance(other, FiringRecord)
            and self.index == other.index
            and self.sync == other.sync
            and self.assignment == other.assignment
        )


@dataclass(frozen=True)
class BenchReport:
    automaton: str
    mode: str
    duration_s: float
    firings: int

    @property
    def firings_per_s(self) -> float:
        return self.firings / self.duration_s if self.duration_s else 0.0

    def csv_row(self) -> str:
        return f"{self.automaton},{self.mode},{self.duration_s:.3f},{self.firings},{self.firings_per_s:.1f}"


CSV_HEADER = "automaton,mode,duration_s,firings,firings_per_s"

Automaton = Union[ConstraintAutomaton, CompiledAutomaton]


def initial_state(a: Automaton, initial_memory: Optional[dict] = None) -> CoordinatorState:
    memory = {m: None for m in a.memory}
    if initial_memory:
        unknown = set(initial_memory) - set(memory)
        if unknown:
            raise ValueError(f"unknown memory cells {sorted(unknown)}")
        memory.update(initial_memory)
    return CoordinatorState(a.initial, memory)


def ready(t, pending: dict, a: Automaton) -> bool:
    """All sync inputs have a pending put and all sync outputs a pending get;
    internal ports never count as ready in this runtime."""
    for p in t.sync:
        op = pending.get(p)
        if p in a.ports.inputs:
            if op is None or op.kind != "put":
                return False
        elif p in a.ports.outputs:
            if op is None or op.kind != "get":
                return False
        else:
            return False
    return True


def build_initial_assignment(t, pending: dict, memory: dict, a: Automaton) -> Optional[dict]:
    """The pre-solving assignment of the uncontrollable variables: pending put
    payloads for input ports and current contents for memory reads.  Returns
    None when a required memory cell is empty (the transition cannot fire)."""
    guard = t.guard if isinstance(t, CompiledTransition) else t.guard
    sigma = {}
    for x in free_vars(guard):
        if x.kind == "port" and x.name in a.ports.inputs:
            op = pending.get(x.name)
            if op is None or op.kind != "put":
                return None
            sigma[x] = op.value
        elif x.kind == "pre":
            value = memory.get(x.name)
            if value is None:
                return None
            sigma[x] = value
    return sigma


def _satisfy(
    t,
    sigma_init: dict,
    mode: str,
    dom: FiniteDomain,
    registry: ExtralogicalRegistry,
    stats: Optional[dict] = None,
) -> Optional[dict]:
    """A satisfying assignment covering free(guard), or None."""
    compiled = isinstance(t, CompiledTransition)
    if mode == COMMAND and compiled and t.compiled.compiled:
        result = exec_command(t.compiled.command, sigma_init, registry)
        return None if result is FAIL else result
    if mode == COMMAND and compiled and stats is not None:
        stats["fallback_firings"] = stats.get("fallback_firings", 0) + 1
    guard = t.guard
    return solve_bruteforce(guard, sigma_init, dom, registry)


def fire_step(
    coord: CoordinatorState,
    a: Automaton,
    mode: str = SOLVER,
    dom: FiniteDomain = FiniteDomain(5),
    registry: ExtralogicalRegistry = DEFAULT_REGISTRY,
    stats: Optional[dict] = None,
) -> Optional[FiringRecord]:
    """Fire the first ready, satisfiable transition from the current state.

    Transitions are scanned in the automaton's canonical order.  Completed
    gets receive the solved value of their port (the least domain value when
    the guard leaves it unconstrained); memory cells written by the guard
    take their post-step value, all other cells keep their content.
    """
    for index, t in a.transitions_from(coord.current):
        if not ready(t, coord.pending, a):
            continue
        sigma_init = build_initial_assignment(t, coord.pending, coord.memory, a)
        if sigma_init is None:
            continue
        sigma = _satisfy(t, sigma_init, mode, dom, registry, stats)
        if sigma is None:
            continue

        record = {}
        for p in sorted(t.sync):
            x = port(p)
            op = coord.pending.pop(p)
            if op.kind == "put":
                record[x] = op.value
            else:
                record[x] = sigma.get(x, next(iter(dom.values)))
        guard_vars = free_vars(t.guard)
        for m in sorted(a.memory):
            for x in (pre(m), post(m)):
                if x in guard_vars and x in sigma:
                    record[x] = sigma[x]
            if post(m) in sigma:
                coord.memory[m] = sigma[post(m)]
        coord.current = t.target
        coord.fired += 1
        return FiringRecord(index, t.sync, record)
    return None


# ---------------------------------------------------------------------------
# scripted and eager I/O suppliers


class PortProgram:
    """Deterministic per-port operation source.

    Scripted form: a finite list of ("put", value) / ("get",) operations.
    Eager form: an endless producer (put 1, 2, 3, ...) or consumer.
    """

    def __init__(
        self,
        port_name: str,
        ops: Optional[list] = None,
        eager: Optional[str] = None,
        modulus: Optional[int] = None,
    ):
        self.port = port_name
        self.ops = list(ops or [])
        self.eager = eager
        self.modulus = modulus
        self.cursor = 0
        self.counter = 0
        self.received: list[int] = []

    def refill(self, pending: dict):
        if self.port in pending:
            return
        if self.eager == "put":
            self.counter += 1
            value = self.counter if self.modulus is None else self.counter % self.modulus
            pending[self.port] = PendingIO(self.port, "put", value)
        elif self.eager == "get":
            pending[self.port] = PendingIO(self.port, "get")
        elif self.cursor < len(self.ops):
            op = self.ops[self.cursor]
            self.cursor += 1
            if op[0] == "put":
                pending[self.port] = PendingIO(self.port, "put", op[1])
            else:
                pending[self.port] = PendingIO(self.port, "get")


def eager_producer(port_name: str, modulus: Optional[int] = None) -> PortProgram:
    return PortProgram(port_name, eager="put", modulus=modulus)


def eager_consumer(port_name: str) -> PortProgram:
    return PortProgram(port_name, eager="get")


def eager_suppliers(a: Automaton, modulus: Optional[int] = None) -> list[PortProgram]:
    """Endless producers and consumers on every external port.

    The benchmark harness passes the domain size as modulus so put payloads
    cycle through the solver's enumeration carrier; unbounded payloads would
    starve solver mode on guards with witness search.
    """
    return [eager_producer(p, modulus) for p in sorted(a.ports.inputs)] + [
        eager_consumer(p) for p in sorted(a.ports.outputs)
    ]


def _as_mode(a: Automaton, mode: str) -> Automaton:
    if mode == COMMAND and isinstance(a, ConstraintAutomaton):
        return commandify_automaton(a)
    return a


def run_simulation(
    a: Automaton,
    mode: str,
    processes: Iterable[PortProgram],
    steps: int,
    dom: FiniteDomain = FiniteDomain(5),
    registry: ExtralogicalRegistry = DEFAULT_REGISTRY,
    initial_memory: Optional[dict] = None,
    stats: Optional[dict] = None,
) -> list[FiringRecord]:
    """Round-robin scheduler: refill pending operations, attempt one firing,
    repeat for the given number of rounds.  Fully deterministic."""
    a = _as_mode(a, mode)
    processes = sorted(processes, key=lambda s: s.port)
    coord = initial_state(a, initial_memory)
    records = []
    for _ in range(steps):
        for s in processes:
            s.refill(coord.pending)
        before = dict(coord.pending)
        rec = fire_step(coord, a, mode, dom, registry, stats)
        if rec is not None:
            for s in processes:
                op = before.get(s.port)
                if op is not None and op.kind == "get" and s.port not in coord.pending:
                    s.received.append(rec.assignment[port(s.port)])
            records.append(rec)
    return records


def bench_throughput(
    a: Automaton,
    mode: str,
    duration: float,
    dom: FiniteDomain = FiniteDomain(5),
    registry: ExtralogicalRegistry = DEFAULT_REGISTRY,
    name: str = "automaton",
    initial_memory: Optional[dict] = None,
) -> BenchReport:
    """Fire against eager producers/consumers for a wall-clock duration."""
    if duration < 1:
        raise ValueError("benchmark duration must be at least one second")
    a = _as_mode(a, mode)
    suppliers = eager_suppliers(a, dom.size)
    coord = initial_state(a, initial_memory)
    start = time.perf_counter()
    deadline = start + duration
    fired = 0
    while True:
        for _ in range(512):
            for s in suppliers:
                s.refill(coord.pending)
            if fire_step(coord, a, mode, dom, registry) is not None:
                fired += 1
        now = time.perf_counter()
        if now >= deadline:
            break
    return BenchReport(name, mode, now - start, fired)


def command_equivalent_on_domain(
    cc: CompiledConstraint,
    dom: FiniteDomain,
    registry: ExtralogicalRegistry = DEFAULT_REGISTRY,
) -> bool:
    """The command and its source constraint describe the same data relation.

    For every total assignment of the free variables over the domain, with
    the uncontrollable part as the initial state: the constraint holds
    exactly when execution succeeds and reproduces the assignment.  Fallback
    entries compare trivially equal.  (Commands may compute values outside
    the finite carrier; those lie outside the enumerated relation on both
    sides, which is the documented approximation of the oracle.)
    """
    from .constraints import iter_assignments

    if not cc.compiled:
        return True
    rest = sorted(set(cc.free_order) - set(cc.uncontrolled))
    for sigma_init in iter_assignments(cc.uncontrolled, dom, partial=False):
        result = exec_command(cc.command, sigma_init, registry)
        for extension in iter_assignments(rest, dom, partial=False):
            sigma = {**sigma_init, **extension}
            satisfied = entails(sigma, cc.original, dom, registry)
            produced = result is not FAIL and all(
                result.get(x) == sigma[x] for x in cc.free_order
            )
            if satisfied != produced:
                return False
    return True


# ---------------------------------------------------------------------------
# bounded trace equivalence


def _satisfies_candidate(t, sigma: dict, dom, registry) -> bool:
    if isinstance(t, CompiledTransition) and t.compiled.compiled:
        cc = t.compiled
        sigma_init = {x: sigma[x] for x in cc.uncontrolled if x in sigma}
        if len(sigma_init) != len(cc.uncontrolled):
            return False
        result = exec_command(cc.command, sigma_init, registry)
        if result is FAIL:
            return False
        return all(result.get(x) == sigma.get(x) for x in cc.free_order)
    return entails(sigma, t.guard, dom, registry)


def _transition_solutions(t, a: Automaton, memory: dict, dom, registry):
    """All observable resolutions of one transition from a memory snapshot.

    Input and output ports in the sync set range over the domain, post-step
    memory variables too; pre-step variables are fixed by the snapshot.
    """
    guard_vars = free_vars(t.guard)
    fixed = {}
    for x in guard_vars:
        if x.kind == "pre":
            if memory.get(x.name) is None:
                return
            fixed[x] = memory[x.name]
    enumerated = sorted(
        {port(p) for p in t.sync} | {x for x in guard_vars if x.kind == "post"}
    )
    values = list(dom.values)

    def walk(i, sigma):
        if i == len(enumerated):
            if _satisfies_candidate(t, sigma, dom, registry):
                yield dict(sigma)
            return
        x = enumerated[i]
        for d in values:
            sigma[x] = d
            yield from walk(i + 1, sigma)
        del sigma[x]

    yield from walk(0, dict(fixed))


def _config_tree(a: Automaton, config, depth: int, dom, registry, memo):
    if depth == 0:
        return frozenset()
    key = (config, depth)
    if key in memo:
        return memo[key]
    state, mem_items = config
    memory = dict(mem_items)
    branches = set()
    for _, t in a.transitions_from(state):
        if any(p in a.ports.internal for p in t.sync):
            continue
        for sigma in _transition_solutions(t, a, memory, dom, registry):
            label = (
                tuple(sorted(t.sync)),
                tuple((p, sigma[port(p)]) for p in sorted(t.sync)),
            )
            new_memory = dict(memory)
            for m in a.memory:
                if post(m) in sigma:
                    new_memory[m] = sigma[post(m)]
            child = (t.target, tuple(sorted(new_memory.items(), key=lambda kv: kv[0])))
            branches.add((label, _config_tree(a, child, depth - 1, dom, registry, memo)))
    tree = frozenset(branches)
    memo[key] = tree
    return tree


def bounded_trace_equivalent(
    a1: Automaton,
    a2: Automaton,
    depth: int,
    dom: FiniteDomain,
    registry: ExtralogicalRegistry = DEFAULT_REGISTRY,
    initial_memory_1: Optional[dict] = None,
    initial_memory_2: Optional[dict] = None,
) -> bool:
    """Equality of observable firing trees (sync set plus external port data)
    up to the given depth over the finite domain."""
    if a1.ports.inputs != a2.ports.inputs or a1.ports.outputs != a2.ports.outputs:
        raise ValueError("automata expose different port interfaces")

    def start(a, init_mem):
        coord = initial_state(a, init_mem)
        return (coord.current, tuple(sorted(coord.memory.items(), key=lambda kv: kv[0])))

    t1 = _config_tree(a1, start(a1, initial_memory_1), depth, dom, registry, {})
    t2 = _config_tree(a2, start(a2, initial_memory_2), depth, dom, registry, {})
    return t1 == t2
