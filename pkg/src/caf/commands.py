"""Data commands and their interpreter.

A data command is the compiled form of a data constraint: a sequence of
skips, assignments and failure statements.  A failure statement proceeds
into its body when its guard holds and otherwise aborts the whole execution
with the distinguished Fail state, from which no step leaves.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Iterable, Union

from .constraints import (
    DEFAULT_REGISTRY,
    DataAssignment,
    DataLiteral,
    DataTerm,
    DataVariable,
    ExtralogicalRegistry,
    NIL,
    evaluate,
    literal_holds,
    literal_text,
    term_text,
    var_text,
)


class _Fail:
    _instance = None

    def __new__(cls):
        if cls._instance is None:
            cls._instance = super().__new__(cls)
        return cls._instance

    def __repr__(self):
        return "FAIL"


FAIL = _Fail()


@dataclass(frozen=True)
class Skip:
    pass


@dataclass(frozen=True)
class Empty:
    """The empty command; only ever the terminal marker of a configuration."""


@dataclass(frozen=True)
class Assign:
    var: DataVariable
    term: DataTerm


@dataclass(frozen=True)
class FailUnless:
    guard: DataLiteral
    body: "DataCommand"


@dataclass(frozen=True)
class Seq:
    first: "DataCommand"
    second: "DataCommand"


DataCommand = Union[Skip, Empty, Assign, FailUnless, Seq]

EMPTY = Empty()
SKIP = Skip()


def seq_of(statements: Iterable[DataCommand]) -> DataCommand:
    """Left-associated sequence of statements; empty input collapses to skip."""
    out = None
    for s in statements:
        out = s if out is None else Seq(out, s)
    return out if out is not None else SKIP


def statements(pi: DataCommand) -> list[DataCommand]:
    """Flatten a command's sequence spine into its atomic statements."""
    flat = []
    stack = [pi]
    while stack:
        node = stack.pop()
        if isinstance(node, Seq):
            stack.append(node.second)
            stack.append(node.first)
        elif not isinstance(node, Empty):
            flat.append(node)
    return flat


def exec_command(
    pi: DataCommand,
    sigma: DataAssignment,
    registry: ExtralogicalRegistry = DEFAULT_REGISTRY,
):
    """Run a command to termination on a private copy of the data state.

    Returns the final assignment, or FAIL on abnormal termination.  An
    assignment whose right-hand side evaluates to the empty datum leaves the
    target variable unbound, which is indistinguishable from storing the
    empty datum.
    """
    state = dict(sigma)
    work = [pi]
    while work:
        node = work.pop()
        if isinstance(node, (Skip, Empty)):
            continue
        if isinstance(node, Assign):
            value = evaluate(state, node.term, registry)
            if value is NIL:
                state.pop(node.var, None)
            else:
                state[node.var] = value
            continue
        if isinstance(node, FailUnless):
            if not literal_holds(state, node.guard, registry):
                return FAIL
            work.append(node.body)
            continue
        # Seq: run left before right.
        work.append(node.second)
        work.append(node.first)
    return state


def command_text(pi: DataCommand) -> str:
    parts = []
    for s in statements(pi):
        if isinstance(s, Skip):
            parts.append("skip")
        elif isinstance(s, Assign):
            parts.append(f"{var_text(s.var)} := {term_text(s.term)}")
        elif isinstance(s, FailUnless):
            if not isinstance(s.body, Skip):
                raise ValueError("only skip-bodied failure statements have a text form")
            parts.append(f"check {literal_text(s.guard)}")
        else:
            raise ValueError(f"cannot serialize {s!r}")
    return " ; ".join(parts)
