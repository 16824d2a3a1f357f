import pytest

from app.core.exceptions import ParseError
from app.domain.models import AcceptanceKind, Guard
from app.services import construction_service
from app.utils.automaton_format import parse_automaton, serialize_automaton


HEADER = """\
alphabet a b
counters 1
states q
initial q
accept q
"""


class TestParse:
    def test_fields(self, zero_test):
        assert zero_test.alphabet == ("a", "b")
        assert zero_test.final == frozenset({"f"})
        assert zero_test.blind == (False,)
        zero_move = [
            t for t in zero_test.transitions if t.source == "q" and t.guards == (Guard.ZERO,)
        ]
        assert [(t.letter, t.effects, t.target) for t in zero_move] == [("b", (0,), "f")]

    def test_comments_and_blank_lines(self):
        machine = parse_automaton("# header\n\n" + HEADER + "t q a * + q  # loop\n")
        assert len(machine.transitions) == 1

    def test_muller_families(self, muller_both):
        assert muller_both.acceptance.kind is AcceptanceKind.MULLER
        assert muller_both.acceptance.families == (frozenset({"p", "r"}),)
        assert muller_both.counters == 0
        assert all(t.guards == () for t in muller_both.transitions)

    @pytest.mark.parametrize(
        "text,line,fragment",
        [
            (HEADER + "t q a Z - q\n", 6, "may not decrement"),
            (HEADER + "t q c * 0 q\n", 6, "unknown letter"),
            (HEADER + "t q a * 0\n", 6, "SRC LETTER GUARDS EFFECTS DST"),
            (HEADER + "t q a ** ++ q\n", 6, "1 symbols"),
            (HEADER + "t q a X 0 q\n", 6, "unknown guard"),
            (HEADER + "t q a * + r\n", 6, "unknown state r"),
            (HEADER + "blind 0\nt q a P 0 q\n", 7, "blind"),
            (HEADER + "colour red\n", 6, "unknown directive"),
            (HEADER.replace("states q", "states q q"), 3, "duplicate state"),
            (HEADER + "muller {q}\n", 6, "exclusive"),
            ("alphabet a\ncounters 1\nstates q\n", 4, "missing initial"),
        ],
    )
    def test_errors_name_the_line(self, text, line, fragment):
        with pytest.raises(ParseError) as info:
            parse_automaton(text)
        assert info.value.line == line
        assert fragment in str(info.value)


class TestSerialize:
    def test_reparses_to_the_same_machine(self, zero_test, muller_both):
        for machine in (zero_test, muller_both):
            assert parse_automaton(serialize_automaton(machine)) == machine

    def test_constructed_machine(self):
        escape = construction_service.build_lescape(("a", "b"))
        text = serialize_automaton(escape, comment="escape\nover a b")
        assert text.startswith("# escape\n# over a b\n")
        assert "blind 0" in text
        assert parse_automaton(text) == escape

    def test_assembled_machine_round_trips(self, zero_test):
        pa = construction_service.build_pa(zero_test)
        assert parse_automaton(serialize_automaton(pa)) == pa
