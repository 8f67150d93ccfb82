"""Command-line front end: compile, check, bench and run.

Exit codes: 0 ok, 1 verification or input-data failure, 2 usage error.
The default finite domain is N=5, overridable with --domain or CAF_DOMAIN.
"""

from __future__ import annotations

import argparse
import os
import sys
from dataclasses import dataclass
from pathlib import Path
from typing import Optional

from .automata import AutomatonError, Hide, Join, Prim, eval_composition, validate
from .commandify import CompiledAutomaton, commandify_automaton
from .constraints import FiniteDomain, RegistryError, equivalent_on_domain, port
from .documents import (
    CompiledDocument,
    load_document,
    parse_automaton_named,
    parse_composition,
    save_document,
)
from .runtime import (
    CSV_HEADER,
    COMMAND,
    SOLVER,
    PortProgram,
    bench_throughput,
    bounded_trace_equivalent,
    command_equivalent_on_domain,
    run_simulation,
)
from .syntax import ParseError

PASSES = ("eliminate", "commandify")


class UsageError(Exception):
    pass


class DataError(Exception):
    pass


@dataclass
class CompileConfig:
    input_path: Path
    passes: tuple[str, ...]
    domain: int
    output_path: Optional[Path]
    name: Optional[str] = None


def _parse_passes(text: Optional[str]) -> tuple[str, ...]:
    if not text:
        return ()
    passes = tuple(p.strip() for p in text.split(",") if p.strip())
    for p in passes:
        if p not in PASSES:
            raise UsageError(f"unknown pass {p!r} (choose from {', '.join(PASSES)})")
    if len(set(passes)) != len(passes):
        raise UsageError("each pass may be applied once")
    if passes == ("commandify", "eliminate"):
        raise UsageError("eliminate must run before commandify")
    return passes


def _default_domain() -> int:
    env = os.environ.get("CAF_DOMAIN")
    if env:
        try:
            n = int(env)
        except ValueError:
            raise UsageError(f"CAF_DOMAIN must be an integer, got {env!r}")
        if n < 1:
            raise UsageError("CAF_DOMAIN must be at least 1")
        return n
    return 5


def _load_source(path: Path):
    """Parse a .ca automaton, .cax composition or compiled document by content."""
    try:
        text = path.read_text()
    except OSError as e:
        raise DataError(str(e))
    head = text.lstrip().split(None, 1)[0] if text.strip() else ""
    if head == "cadoc":
        doc = load_document(text)
        return doc.name, doc.automaton, None
    if head == "compose":
        name, expr = parse_composition(text)
        return name, None, expr
    if head == "automaton":
        name, automaton = parse_automaton_named(text)
        return name, automaton, None
    raise DataError(f"{path}: expected an automaton, compose or cadoc file")


def cmd_compile(config: CompileConfig) -> CompiledDocument:
    name, automaton, expr = _load_source(config.input_path)
    provenance = [f"input {config.input_path.name}"]
    if config.passes:
        provenance.append(f"passes {','.join(config.passes)}")
    log: list = []
    if expr is not None:
        automaton = eval_composition(expr, eliminate_hides="eliminate" in config.passes, elim_log=log)
    elif "eliminate" in config.passes:
        provenance.append("eliminate: plain automaton input, no hidden ports to rewrite")
    if isinstance(automaton, CompiledAutomaton):
        raise DataError("input is already commandified; nothing to compile")
    problems = validate(automaton)
    if problems:
        raise DataError("invalid automaton: " + "; ".join(problems))
    if "commandify" in config.passes:
        automaton = commandify_automaton(automaton, log=log)
    for entry in log:
        if entry["pass"] == "eliminate":
            provenance.append(
                "eliminate port={port} trans={trans} determinant={d} literals={before}->{after}".format(
                    d=entry["determinant"] or "-", **entry
                )
            )
        else:
            provenance.append(
                "commandify trans={trans} mode={mode} statements={statements} arborescence={arborescence}".format(
                    **entry
                )
            )
    doc = CompiledDocument(config.name or name, automaton, tuple(provenance))
    text = save_document(doc)
    if config.output_path:
        config.output_path.write_text(text)
    else:
        sys.stdout.write(text)
    return doc


def _transition_groups(a):
    groups: dict = {}
    for t in a.transitions:
        groups.setdefault((t.source, tuple(sorted(t.sync)), t.target), []).append(t)
    return groups


def _pair_equivalent(ta, tb, dom, registry) -> bool:
    ga = ta.guard
    gb = tb.guard
    if not equivalent_on_domain(ga, gb, dom, registry):
        return False
    for t in (ta, tb):
        compiled = getattr(t, "compiled", None)
        if compiled is not None and not command_equivalent_on_domain(compiled, dom, registry):
            return False
    return True


def cmd_check(doc_a: CompiledDocument, doc_b: CompiledDocument, depth: int, n: int, out=None) -> bool:
    from .constraints import DEFAULT_REGISTRY

    out = out or sys.stdout
    a, b = doc_a.automaton, doc_b.automaton
    if a.ports.inputs != b.ports.inputs or a.ports.outputs != b.ports.outputs:
        raise UsageError("port interfaces differ; nothing to compare")
    dom = FiniteDomain(n)
    registry = DEFAULT_REGISTRY
    ok = True
    groups_a = _transition_groups(a)
    groups_b = _transition_groups(b)
    for key in sorted(set(groups_a) | set(groups_b)):
        source, sync, target = key
        label = f"trans {source}->{target} on {{{','.join(sync)}}}"
        left = groups_a.get(key, [])
        right = list(groups_b.get(key, []))
        if len(left) != len(right):
            out.write(f"{label}: MISMATCH ({len(left)} vs {len(right)} transitions)\n")
            ok = False
            continue
        for ta in left:
            match = next((tb for tb in right if _pair_equivalent(ta, tb, dom, registry)), None)
            if match is None:
                out.write(f"{label}: NOT EQUIVALENT\n")
                ok = False
            else:
                right.remove(match)
                out.write(f"{label}: equivalent\n")
    traces = bounded_trace_equivalent(a, b, depth, dom, registry)
    out.write(f"bounded traces (depth {depth}): {'equal' if traces else 'DIFFER'}\n")
    return ok and traces


def sync_chain_expr(k: int) -> tuple[str, object]:
    """The k-Sync chain with every interior port hidden."""
    if k < 1:
        raise UsageError("chain length must be at least 1")
    expr = Prim("sync", ("p1",), ("p2",))
    for i in range(2, k + 1):
        expr = Join(expr, Prim("sync", (f"p{i}",), (f"p{i + 1}",)))
    for i in range(2, k + 1):
        expr = Hide(expr, f"p{i}")
    return f"sync_{k}", expr


def cmd_bench(args, domain: int, out=None) -> int:
    out = out or sys.stdout
    if args.duration < 1:
        raise UsageError("benchmark duration must be at least one second")
    dom = FiniteDomain(domain)
    modes = [SOLVER, COMMAND] if args.mode == "both" else [args.mode]
    jobs = []
    if args.family:
        if args.family != "sync":
            raise UsageError(f"unknown family {args.family!r}")
        ks = [int(x) for x in args.k.split(",") if x.strip()]
        if not ks:
            raise UsageError("--k needs at least one chain length")
        for k in ks:
            name, expr = sync_chain_expr(k)
            for mode in modes:
                # Solver rows measure the unoptimized (hidden) artifact; command
                # rows measure the eliminated+commandified one.
                automaton = eval_composition(expr, eliminate_hides=(mode == COMMAND))
                if mode == COMMAND:
                    automaton = commandify_automaton(automaton)
                jobs.append((name, mode, automaton))
    else:
        if not args.doc:
            raise UsageError("give a document or --family")
        name, automaton, expr = _load_source(Path(args.doc))
        if expr is not None:
            automaton = eval_composition(expr)
        for mode in modes:
            jobs.append((name, mode, automaton))
    out.write(CSV_HEADER + "\n")
    for name, mode, automaton in jobs:
        report = bench_throughput(automaton, mode, args.duration, dom, name=name)
        out.write(report.csv_row() + "\n")
    return 0


def _parse_script(text: str, a) -> list[PortProgram]:
    programs: dict[str, PortProgram] = {}
    for lineno, raw in enumerate(text.splitlines(), 1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        fields = line.split()
        if fields[0] == "put" and len(fields) == 3:
            name, value = fields[1], fields[2]
            try:
                datum = int(value)
            except ValueError:
                raise UsageError(f"script line {lineno}: put value must be an integer")
            op = ("put", datum)
        elif fields[0] == "get" and len(fields) == 2:
            name = fields[1]
            op = ("get",)
        else:
            raise UsageError(f"script line {lineno}: expected 'put PORT VALUE' or 'get PORT'")
        if name not in a.ports.all:
            raise UsageError(f"script line {lineno}: unknown port {name!r}")
        programs.setdefault(name, PortProgram(name)).ops.append(op)
    return list(programs.values())


def cmd_run(args, domain: int, out=None) -> int:
    out = out or sys.stdout
    name, automaton, expr = _load_source(Path(args.doc))
    if expr is not None:
        automaton = eval_composition(expr)
    try:
        script = Path(args.script).read_text()
    except OSError as e:
        raise DataError(str(e))
    programs = _parse_script(script, automaton)
    dom = FiniteDomain(domain)
    records = run_simulation(automaton, args.mode, programs, args.steps, dom)
    for rec in records:
        t = automaton.transitions[rec.index]
        data = " ".join(f"{x!r}={v}" for x, v in sorted(rec.assignment.items(), key=lambda kv: kv[0].key()))
        out.write(
            f"fired {t.source}->{t.target} on {{{','.join(sorted(rec.sync))}}} {data}\n"
        )
    out.write(f"firings: {len(records)}\n")
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="caf", description=__doc__)
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("compile", help="evaluate, optimize and write a document")
    p.add_argument("input")
    p.add_argument("-o", "--output")
    p.add_argument("--opt", default="", help="comma list: eliminate,commandify")
    p.add_argument("--domain", type=int)
    p.add_argument("--name")

    p = sub.add_parser("check", help="verify two documents equivalent")
    p.add_argument("doc_a")
    p.add_argument("doc_b")
    p.add_argument("--depth", type=int, default=6)
    p.add_argument("--domain", type=int)

    p = sub.add_parser("bench", help="throughput benchmark, CSV output")
    p.add_argument("doc", nargs="?")
    p.add_argument("--family")
    p.add_argument("--k", default="")
    p.add_argument("--mode", default="both", choices=[SOLVER, COMMAND, "both"])
    p.add_argument("--duration", type=float, default=10.0)
    p.add_argument("--domain", type=int)

    p = sub.add_parser("run", help="run a put/get script and print firings")
    p.add_argument("doc")
    p.add_argument("script")
    p.add_argument("--steps", type=int, default=100)
    p.add_argument("--mode", default=SOLVER, choices=[SOLVER, COMMAND])
    p.add_argument("--domain", type=int)

    return parser


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as e:
        return 2 if e.code not in (0, None) else 0
    try:
        domain = args.domain if args.domain is not None else _default_domain()
        if domain < 1:
            raise UsageError("--domain must be at least 1")
        if args.command == "compile":
            config = CompileConfig(
                Path(args.input),
                _parse_passes(args.opt),
                domain,
                Path(args.output) if args.output else None,
                args.name,
            )
            cmd_compile(config)
            return 0
        if args.command == "check":
            def load(path):
                name, automaton, expr = _load_source(Path(path))
                if expr is not None:
                    automaton = eval_composition(expr)
                return CompiledDocument(name, automaton)

            ok = cmd_check(load(args.doc_a), load(args.doc_b), args.depth, domain)
            return 0 if ok else 1
        if args.command == "bench":
            return cmd_bench(args, domain)
        return cmd_run(args, domain)
    except UsageError as e:
        print(f"caf: {e}", file=sys.stderr)
        return 2
    except (DataError, ParseError, AutomatonError, RegistryError) as e:
        print(f"caf: {e}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
