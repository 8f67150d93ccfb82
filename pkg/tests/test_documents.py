"""Format tests: constraint text, automaton files, composition files and
compiled documents round-trip losslessly and deterministically."""

import pytest

from caf.automata import Elim, Hide, Join, Prim, eval_composition
from caf.commandify import commandify_automaton
from caf.constraints import (
    App,
    Const,
    Eq,
    Neg,
    Rel,
    Var,
    constraint,
    constraint_text,
    port,
    post,
    pre,
)
from caf.documents import (
    CompiledDocument,
    load_document,
    parse_automaton,
    parse_automaton_named,
    parse_composition,
    save_document,
    serialize_automaton,
)
from caf.syntax import ParseError, parse_constraint, parse_term_text
from conftest import v

MERGER_LISTING = """
automaton LateAsyncMerg2 {
  ports { in A; in B; out C; }
  memory { x; }
  states { q1 init; q2; }
  trans q1 -> q2 on {A} where A == x' ;
  trans q1 -> q2 on {B} where B == x' ;
  trans q2 -> q1 on {C} where 'x == C ;
}
"""


class TestConstraintSyntax:
    def test_memory_views(self):
        assert parse_constraint("'x == C") == constraint(Eq(Var(pre("x")), v("C")))
        assert parse_constraint("A == x'") == constraint(Eq(v("A"), Var(post("x"))))

    def test_quantifier_conjunction_negation(self):
        phi = parse_constraint("E p . p == A & !Odd(p) & true")
        from caf.constraints import TOP

        assert phi == constraint(
            Eq(v("p"), v("A")), Neg(Rel("Odd", (v("p"),))), TOP, quantified=[port("p")]
        )

    def test_function_vs_relation_position(self):
        phi = parse_constraint("add(B,D) == E & Odd(G)")
        assert phi == constraint(
            Eq(App("add", (v("B"), v("D"))), v("E")), Rel("Odd", (v("G"),))
        )

    def test_port_named_E_not_a_quantifier(self):
        assert parse_constraint("E == F") == constraint(Eq(v("E"), v("F")))

    def test_integers_and_negative(self):
        assert parse_term_text("-3") == Const(-3)

    def test_round_trip(self, phi_eg):
        assert parse_constraint(constraint_text(phi_eg)) == phi_eg

    def test_error_carries_position(self):
        with pytest.raises(ParseError) as err:
            parse_constraint("A == ")
        assert err.value.line == 1


class TestAutomatonFiles:
    def test_merger_listing_parses_to_reference(self, merger_buffer):
        assert parse_automaton(MERGER_LISTING) == merger_buffer

    def test_round_trip_identity(self, merger_buffer):
        text = serialize_automaton(merger_buffer, "LateAsyncMerg2")
        assert parse_automaton(text) == merger_buffer
        assert serialize_automaton(parse_automaton(text), "LateAsyncMerg2") == text

    def test_internal_ports_serialized_bare(self):
        chain = eval_composition(
            Join(Prim("sync", ("a",), ("p",)), Prim("sync", ("p",), ("b",)))
        )
        text = serialize_automaton(chain, "chain")
        assert "p;" in text
        assert parse_automaton(text).ports.internal == {"p"}

    def test_malformed_transition_errors_at_arrow(self):
        with pytest.raises(ParseError):
            parse_automaton("automaton x { states { q init; } trans q -> ; }")

    def test_missing_init_rejected(self):
        with pytest.raises(ParseError):
            parse_automaton("automaton x { ports { } states { q; } }")


class TestCompositionFiles:
    def test_compose_with_hide(self):
        name, expr = parse_composition(
            "compose Two = hide(join(sync(a;p), fifo{x}(p;b)), p)"
        )
        assert name == "Two"
        assert expr == Hide(
            Join(Prim("sync", ("a",), ("p",)), Prim("fifo", ("p",), ("b",), ("x",))), "p"
        )

    def test_compose_with_elim_and_extralogical(self):
        name, expr = parse_composition(
            "compose F = elim(join(filter[Odd](a;p), sync(p;b)), p)"
        )
        assert expr == Elim(
            Join(Prim("filter", ("a",), ("p",), (), "Odd"), Prim("sync", ("p",), ("b",))), "p"
        )

    def test_nary_join_and_multi_hide_fold(self):
        _, expr = parse_composition(
            "compose C = hide(join(sync(a;p), sync(p;q), sync(q;b)), p, q)"
        )
        a = eval_composition(expr)
        assert a.ports.all == {"a", "b"}

    def test_syncdrain_empty_outputs(self):
        _, expr = parse_composition("compose D = syncdrain(a,b;)")
        assert expr == Prim("syncdrain", ("a", "b"), ())


class TestDocuments:
    def test_plain_document_round_trip(self, merger_buffer):
        doc = CompiledDocument("Merg", merger_buffer, ("input merg.ca",))
        text = save_document(doc)
        assert load_document(text) == doc
        assert save_document(load_document(text)) == text

    def test_compiled_document_round_trip(self, merger_buffer):
        compiled = commandify_automaton(merger_buffer)
        doc = CompiledDocument("Merg", compiled, ("passes commandify",))
        text = save_document(doc)
        loaded = load_document(text)
        assert loaded == doc
        assert "do { skip ; x' := A }" in text

    def test_fallback_transition_round_trip(self):
        from caf.automata import ConstraintAutomaton, PortTriple, Transition

        va = Var(port("a"))
        a = ConstraintAutomaton(
            frozenset(["q"]),
            PortTriple(frozenset(["a"]), frozenset(), frozenset(["a"])),
            frozenset(),
            (Transition("q", frozenset(["a"]), constraint(Eq(va, App("mult", (va, va)))), "q"),),
            "q",
        )
        doc = CompiledDocument("R", commandify_automaton(a))
        text = save_document(doc)
        assert "fallback" in text
        assert load_document(text) == doc

    def test_version_checked(self):
        with pytest.raises(ParseError):
            load_document("cadoc 99\nautomaton x { states { q init; } }\n")

    def test_not_a_document(self):
        with pytest.raises(ParseError):
            load_document("automaton x { states { q init; } }\n")
