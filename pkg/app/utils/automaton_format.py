"""
Automaton text format

    # comment
    alphabet a b
    counters 1
    blind 0
    states q0 q1
    initial q0
    accept q1                 (or: muller {q0 q1} {q1})
    t q0 a Z + q1

GUARDS is a k-letter string over Z/P/*, EFFECTS over +/-/0; a machine with
no counters writes '.' for both.
"""
from typing import Dict, List, Optional, Tuple
import re

from app.core.exceptions import ParseError
from app.domain.models import Acceptance, AcceptanceKind, CounterMachine, Guard, Transition
from app.services import machine_service

EMPTY = "."
EFFECTS = {"+": 1, "-": -1, "0": 0}
EFFECT_CHARS = {value: char for char, value in EFFECTS.items()}
FAMILY = re.compile(r"\{([^{}]*)\}")
HEADERS = ("alphabet", "counters", "blind", "states", "initial", "accept", "muller")


def _vector(text: str, size: int) -> str:
    return "" if text == EMPTY and size == 0 else text


def parse_automaton(text: str) -> CounterMachine:
    """Parse the line format above; every failure names its line."""
    headers: Dict[str, Tuple[int, str]] = {}
    pending: List[Tuple[int, List[str]]] = []
    for number, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        keyword, *rest = line.split(None, 1)
        rest = rest[0] if rest else ""
        if keyword == "t":
            pending.append((number, rest.split()))
        elif keyword in HEADERS:
            if keyword in headers:
                raise ParseError(f"duplicate {keyword} line", number)
            headers[keyword] = (number, rest.strip())
        else:
            raise ParseError(f"unknown directive {keyword!r}", number)

    last = len(text.splitlines()) + 1
    for required in ("alphabet", "counters", "states", "initial"):
        if required not in headers:
            raise ParseError(f"missing {required} line", last)
    if "accept" in headers and "muller" in headers:
        raise ParseError("accept and muller are exclusive", headers["muller"][0])

    number, value = headers["alphabet"]
    alphabet = tuple(value.split())
    if len(set(alphabet)) != len(alphabet):
        raise ParseError("duplicate letter", number)

    number, value = headers["counters"]
    try:
        counters = int(value)
    except ValueError:
        raise ParseError(f"counter count {value!r} is not an integer", number) from None
    if counters < 0:
        raise ParseError("counter count must be >= 0", number)

    blind = [False] * counters
    if "blind" in headers:
        number, value = headers["blind"]
        for token in value.split():
            if not token.isdigit() or int(token) >= counters:
                raise ParseError(f"blind index {token!r} out of range 0..{counters - 1}", number)
            blind[int(token)] = True

    number, value = headers["states"]
    states = tuple(value.split())
    seen = set()
    for state in states:
        if state in seen:
            raise ParseError(f"duplicate state {state}", number)
        seen.add(state)

    number, initial = headers["initial"]
    if initial not in seen:
        raise ParseError(f"unknown state {initial}", number)

    acceptance = _acceptance(headers, seen)
    transitions = tuple(
        _transition(number, fields, alphabet, counters, blind, seen) for number, fields in pending
    )
    machine = CounterMachine(
        states=states,
        alphabet=alphabet,
        counters=counters,
        blind=tuple(blind),
        initial=initial,
        transitions=transitions,
        acceptance=acceptance,
    )
    diagnostics = machine_service.validate(machine)
    if diagnostics:
        raise ParseError("; ".join(diagnostics), last)
    return machine


def _acceptance(headers, states) -> Acceptance:
    if "muller" in headers:
        number, value = headers["muller"]
        if FAMILY.sub("", value).strip():
            raise ParseError("muller sets must be written as {q ...}", number)
        families = [group.split() for group in FAMILY.findall(value)]
        for family in families:
            for state in family:
                if state not in states:
                    raise ParseError(f"unknown state {state}", number)
        return Acceptance.muller(families)
    number, value = headers.get("accept", (0, ""))
    final = value.split()
    for state in final:
        if state not in states:
            raise ParseError(f"unknown state {state}", number)
    return Acceptance.buchi(final)


def _transition(number, fields, alphabet, counters, blind, states) -> Transition:
    if len(fields) != 5:
        raise ParseError("transition needs SRC LETTER GUARDS EFFECTS DST", number)
    source, letter, guards, effects, target = fields
    for state in (source, target):
        if state not in states:
            raise ParseError(f"unknown state {state}", number)
    if letter not in alphabet:
        raise ParseError(f"unknown letter {letter!r}", number)
    guards, effects = _vector(guards, counters), _vector(effects, counters)
    if len(guards) != counters or len(effects) != counters:
        raise ParseError(f"guards and effects need {counters} symbols", number)
    parsed_guards = []
    parsed_effects = []
    for m, (g, e) in enumerate(zip(guards, effects)):
        try:
            guard = Guard(g)
        except ValueError:
            raise ParseError(f"unknown guard symbol {g!r}", number) from None
        if e not in EFFECTS:
            raise ParseError(f"unknown effect symbol {e!r}", number)
        if guard is Guard.ZERO and e == "-":
            raise ParseError(f"counter {m}: a counter tested zero may not decrement", number)
        if blind[m] and guard is not Guard.ANY:
            raise ParseError(f"counter {m} is blind and must be guarded by '*'", number)
        parsed_guards.append(guard)
        parsed_effects.append(EFFECTS[e])
    return Transition(source, letter, tuple(parsed_guards), tuple(parsed_effects), target)


def serialize_automaton(machine: CounterMachine, comment: Optional[str] = None) -> str:
    lines = []
    if comment:
        lines.extend(f"# {row}" for row in comment.splitlines())
    lines.append("alphabet " + " ".join(machine.alphabet))
    lines.append(f"counters {machine.counters}")
    blind = [str(m) for m, flag in enumerate(machine.blind) if flag]
    if blind:
        lines.append("blind " + " ".join(blind))
    lines.append("states " + " ".join(machine.states))
    lines.append(f"initial {machine.initial}")
    if machine.acceptance.kind is AcceptanceKind.MULLER:
        families = " ".join(
            "{" + " ".join(sorted(family)) + "}" for family in machine.acceptance.families
        )
        lines.append(f"muller {families}".rstrip())
    else:
        ordered = [s for s in machine.states if s in machine.final]
        lines.append(" ".join(["accept"] + ordered))
    for t in machine.transitions:
        guards = "".join(g.value for g in t.guards) or EMPTY
        effects = "".join(EFFECT_CHARS[e] for e in t.effects) or EMPTY
        lines.append(f"t {t.source} {t.letter} {guards} {effects} {t.target}")
    return "\n".join(lines) + "\n"
