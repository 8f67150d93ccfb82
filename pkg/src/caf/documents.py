"""File formats: automaton files (.ca), composition files (.cax) and the
versioned compiled-automaton document.

All three share the token syntax of the constraint language.  Documents are
line-oriented and deterministic: identical inputs serialize byte-identically,
and load(save(x)) == x.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Optional, Union

from .automata import (
    ConstraintAutomaton,
    Elim,
    Hide,
    Join,
    PortTriple,
    Prim,
    Transition,
)
from .commandify import (
    Assign,
    CompiledAutomaton,
    CompiledConstraint,
    CompiledTransition,
    transition_uncontrollables,
)
from .commands import DataCommand, FailUnless, SKIP, Skip, command_text, seq_of
from .constraints import constraint_text, free_vars
from .syntax import (
    ParseError,
    TokenStream,
    parse_constraint_tokens,
    parse_literal,
    parse_term,
    tokenize,
)

DOCUMENT_MAGIC = "cadoc"
DOCUMENT_VERSION = 1


@dataclass(frozen=True)
class CompiledDocument:
    name: str
    automaton: Union[ConstraintAutomaton, CompiledAutomaton]
    provenance: tuple[str, ...] = ()


# ---------------------------------------------------------------------------
# automaton body


def _parse_name_list(ts: TokenStream) -> list[str]:
    names = []
    ts.expect("{")
    while not ts.at("}"):
        names.append(ts.expect_name())
        ts.expect(";")
    ts.expect("}")
    return names


def _parse_sync(ts: TokenStream) -> frozenset[str]:
    ts.expect("{")
    names = set()
    while not ts.at("}"):
        names.add(ts.expect_name())
        if ts.at(","):
            ts.next()
    ts.expect("}")
    return frozenset(names)


def _parse_command(ts: TokenStream) -> DataCommand:
    ts.expect("{")
    stmts: list[DataCommand] = []
    while not ts.at("}"):
        if ts.at("skip"):
            ts.next()
            stmts.append(SKIP)
        elif ts.at("check"):
            ts.next()
            stmts.append(FailUnless(parse_literal(ts), SKIP))
        else:
            from .constraints import Var

            var_term = parse_term(ts)
            if not isinstance(var_term, Var):
                raise ts.error("assignment target must be a data variable")
            ts.expect(":=")
            stmts.append(Assign(var_term.var, parse_term(ts)))
        if ts.at(";"):
            ts.next()
    ts.expect("}")
    return seq_of(stmts)


def _parse_automaton_body(ts: TokenStream):
    """The `automaton NAME { ... }` block.  Returns (name, automaton), where
    the automaton is compiled when any transition carries a command or a
    solver-fallback marker."""
    ts.expect("automaton")
    name = ts.expect_name()
    ts.expect("{")
    inputs, outputs, internal = set(), set(), set()
    memory: list[str] = []
    states: list[str] = []
    initial = None
    raw_transitions = []  # (source, sync, command|None, fallback?, guard, target)

    while not ts.at("}"):
        section = ts.expect_name()
        if section == "ports":
            ts.expect("{")
            while not ts.at("}"):
                direction = None
                if ts.at("in") or ts.at("out"):
                    direction = ts.next().text
                pname = ts.expect_name()
                ts.expect(";")
                if direction == "in":
                    inputs.add(pname)
                elif direction == "out":
                    outputs.add(pname)
                else:
                    internal.add(pname)
            ts.expect("}")
        elif section == "memory":
            memory = _parse_name_list(ts)
        elif section == "states":
            ts.expect("{")
            while not ts.at("}"):
                sname = ts.expect_name()
                if ts.at("init"):
                    ts.next()
                    if initial is not None:
                        raise ts.error("more than one initial state")
                    initial = sname
                states.append(sname)
                ts.expect(";")
            ts.expect("}")
        elif section == "trans":
            source = ts.expect_name()
            ts.expect("->")
            target = ts.expect_name()
            ts.expect("on")
            sync = _parse_sync(ts)
            command = None
            fallback = False
            if ts.at("do"):
                ts.next()
                command = _parse_command(ts)
            elif ts.at("fallback"):
                ts.next()
                fallback = True
            ts.expect("where")
            guard = parse_constraint_tokens(ts)
            ts.expect(";")
            raw_transitions.append((source, sync, command, fallback, guard, target))
        else:
            raise ts.error(f"unknown section {section!r}")
    ts.expect("}")

    if initial is None:
        raise ts.error("no state is marked init")
    ports = PortTriple(
        frozenset(inputs | outputs | internal), frozenset(inputs), frozenset(outputs)
    )
    compiled = any(c is not None or f for _, _, c, f, _, _ in raw_transitions)
    if not compiled:
        automaton = ConstraintAutomaton(
            frozenset(states),
            ports,
            frozenset(memory),
            tuple(Transition(s, sync, g, t) for s, sync, _, _, g, t in raw_transitions),
            initial,
        )
        return name, automaton

    shell = ConstraintAutomaton(
        frozenset(states),
        ports,
        frozenset(memory),
        tuple(Transition(s, sync, g, t) for s, sync, _, _, g, t in raw_transitions),
        initial,
    )
    by_key = {(s, sync, constraint_text(g), t): (c, f) for s, sync, c, f, g, t in raw_transitions}
    compiled_trans = []
    for t in shell.transitions:
        command, fallback = by_key[(t.source, t.sync, constraint_text(t.guard), t.target)]
        x = transition_uncontrollables(shell, t.guard)
        cc = CompiledConstraint(
            t.guard,
            command,
            tuple(sorted(x)),
            tuple(sorted(free_vars(t.guard))),
            "fallback" if fallback or command is None else "compiled",
        )
        compiled_trans.append(CompiledTransition(t.source, t.sync, cc, t.target))
    automaton = CompiledAutomaton(
        frozenset(states), ports, frozenset(memory), tuple(compiled_trans), initial
    )
    return name, automaton


def parse_automaton(text: str) -> ConstraintAutomaton:
    name, automaton = parse_automaton_named(text)
    return automaton


def parse_automaton_named(text: str):
    ts = TokenStream(tokenize(text))
    name, automaton = _parse_automaton_body(ts)
    if ts.peek().kind != "EOF":
        raise ts.error(f"unexpected trailing input {ts.peek().text!r}")
    return name, automaton


def _serialize_ports(ports: PortTriple) -> str:
    entries = []
    for p in sorted(ports.inputs):
        entries.append(f"in {p};")
    for p in sorted(ports.outputs):
        entries.append(f"out {p};")
    for p in sorted(ports.internal):
        entries.append(f"{p};")
    return " ".join(entries)


def _serialize_transition(t) -> str:
    sync = ", ".join(sorted(t.sync))
    if isinstance(t, CompiledTransition):
        cc = t.compiled
        if cc.compiled:
            middle = f"do {{ {command_text(cc.command)} }} "
        else:
            middle = "fallback "
    else:
        middle = ""
    return (
        f"  trans {t.source} -> {t.target} on {{{sync}}} "
        f"{middle}where {constraint_text(t.guard)} ;"
    )


def serialize_automaton(a: Union[ConstraintAutomaton, CompiledAutomaton], name: str = "main") -> str:
    lines = [f"automaton {name} {{"]
    lines.append(f"  ports {{ {_serialize_ports(a.ports)} }}")
    cells = " ".join(f"{m};" for m in sorted(a.memory))
    lines.append(f"  memory {{ {cells} }}" if cells else "  memory { }")
    state_entries = [f"{a.initial} init;"] + [f"{s};" for s in sorted(a.states - {a.initial})]
    lines.append(f"  states {{ {' '.join(state_entries)} }}")
    for t in a.transitions:
        lines.append(_serialize_transition(t))
    lines.append("}")
    return "\n".join(lines) + "\n"


# ---------------------------------------------------------------------------
# composition files


def _parse_primitive(ts: TokenStream) -> Prim:
    name = ts.expect_name()
    extralogical = None
    memory: tuple[str, ...] = ()
    if ts.at("["):
        ts.next()
        extralogical = ts.expect_name()
        ts.expect("]")
    if ts.at("{"):
        ts.next()
        cells = []
        while not ts.at("}"):
            cells.append(ts.expect_name())
            if ts.at(","):
                ts.next()
        ts.expect("}")
        memory = tuple(cells)
    ts.expect("(")
    inputs = []
    while not ts.at(";"):
        inputs.append(ts.expect_name())
        if ts.at(","):
            ts.next()
    ts.expect(";")
    outputs = []
    while not ts.at(")"):
        outputs.append(ts.expect_name())
        if ts.at(","):
            ts.next()
    ts.expect(")")
    return Prim(name, tuple(inputs), tuple(outputs), memory, extralogical)


def _parse_expr(ts: TokenStream):
    head = ts.peek()
    if head.text == "join":
        ts.next()
        ts.expect("(")
        parts = [_parse_expr(ts)]
        while ts.at(","):
            ts.next()
            parts.append(_parse_expr(ts))
        ts.expect(")")
        if len(parts) < 2:
            raise ts.error("join needs at least two operands")
        expr = parts[0]
        for p in parts[1:]:
            expr = Join(expr, p)
        return expr
    if head.text in ("hide", "elim"):
        kind = ts.next().text
        ts.expect("(")
        expr = _parse_expr(ts)
        ports = []
        while ts.at(","):
            ts.next()
            ports.append(ts.expect_name())
        ts.expect(")")
        if not ports:
            raise ts.error(f"{kind} needs at least one port")
        for p in ports:
            expr = Hide(expr, p) if kind == "hide" else Elim(expr, p)
        return expr
    return _parse_primitive(ts)


def parse_composition(text: str):
    """A `compose NAME = EXPR` file.  Returns (name, CompositionExpr)."""
    ts = TokenStream(tokenize(text))
    ts.expect("compose")
    name = ts.expect_name()
    ts.expect("=")
    expr = _parse_expr(ts)
    if ts.peek().kind != "EOF":
        raise ts.error(f"unexpected trailing input {ts.peek().text!r}")
    return name, expr


# ---------------------------------------------------------------------------
# compiled documents


def save_document(doc: CompiledDocument) -> str:
    lines = [f"{DOCUMENT_MAGIC} {DOCUMENT_VERSION}"]
    if doc.provenance:
        lines.append("provenance {")
        for entry in doc.provenance:
            lines.append(f"  {entry}")
        lines.append("}")
    lines.append(serialize_automaton(doc.automaton, doc.name).rstrip("\n"))
    return "\n".join(lines) + "\n"


def load_document(text: str) -> CompiledDocument:
    lines = text.splitlines()
    if not lines or not lines[0].strip().startswith(f"{DOCUMENT_MAGIC} "):
        raise ParseError(f"not a {DOCUMENT_MAGIC} document", 1, 1)
    version = lines[0].strip().split()[1]
    if version != str(DOCUMENT_VERSION):
        raise ParseError(f"unsupported document version {version}", 1, 1)
    provenance = []
    i = 1
    if i < len(lines) and lines[i].strip() == "provenance {":
        i += 1
        while i < len(lines) and lines[i].strip() != "}":
            provenance.append(lines[i].strip())
            i += 1
        if i == len(lines):
            raise ParseError("unterminated provenance block", len(lines), 1)
        i += 1
    body = "\n".join(lines[i:])
    name, automaton = parse_automaton_named(body)
    return CompiledDocument(name, automaton, tuple(provenance))
