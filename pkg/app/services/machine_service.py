"""
Counter machine semantics
Well-formedness, one-step successors, bounded run unfolding, lasso acceptance
checks, and the union / shape-product constructions.
"""
from collections import deque
from typing import Dict, FrozenSet, Iterable, Iterator, List, Optional, Sequence, Tuple
import logging

from app.core.config import settings
from app.core.exceptions import AcceptanceKindError, AlphabetMismatchError, RunError
from app.domain.models import (
    Acceptance,
    AcceptanceKind,
    Configuration,
    CounterMachine,
    Exploration,
    Guard,
    RunPrefix,
    ShapeAutomaton,
    Transition,
)

logger = logging.getLogger(__name__)


def validate(machine: CounterMachine) -> List[str]:
    """Return one diagnostic per violated rule; an empty list means well-formed."""
    diagnostics: List[str] = []
    if not machine.alphabet:
        diagnostics.append("alphabet: must be nonempty")
    if len(set(machine.alphabet)) != len(machine.alphabet):
        diagnostics.append("alphabet: letters must be distinct")
    if len(set(machine.states)) != len(machine.states):
        diagnostics.append("states: state names must be distinct")
    if machine.counters < 0:
        diagnostics.append("counters: count must be >= 0")
    if len(machine.blind) != machine.counters:
        diagnostics.append(
            f"blind: {len(machine.blind)} flags for {machine.counters} counters"
        )
    declared = set(machine.states)
    letters = set(machine.alphabet)
    if machine.initial not in declared:
        diagnostics.append(f"initial: undeclared state {machine.initial}")
    for state in sorted(machine.acceptance.mentioned_states() - declared):
        diagnostics.append(f"acceptance: undeclared state {state}")

    for t in machine.transitions:
        label = t.label()
        if t.source not in declared:
            diagnostics.append(f"{label}: undeclared source state")
        if t.target not in declared:
            diagnostics.append(f"{label}: undeclared target state")
        if t.letter not in letters:
            diagnostics.append(f"{label}: letter not in alphabet")
        if len(t.guards) != machine.counters or len(t.effects) != machine.counters:
            diagnostics.append(f"{label}: guard/effect arity differs from {machine.counters}")
            continue
        for m, (guard, effect) in enumerate(zip(t.guards, t.effects)):
            if effect not in (-1, 0, 1):
                diagnostics.append(f"{label}: counter {m} effect {effect} not in -1/0/+1")
            if guard is Guard.ZERO and effect == -1:
                diagnostics.append(
                    f"{label}: counter {m} tested zero may not decrement (effect must be 0 or +1)"
                )
            if m < len(machine.blind) and machine.blind[m] and guard is not Guard.ANY:
                diagnostics.append(
                    f"{label}: blind counter {m} carries a {guard.name} test"
                )
    return diagnostics


def check_letter(machine: CounterMachine, letter: str) -> None:
    if letter not in machine.alphabet:
        raise AlphabetMismatchError(
            f"letter {letter!r} is not in the alphabet {''.join(machine.alphabet)}"
        )


def moves(
    machine: CounterMachine, state: str, counters: Tuple[int, ...], letter: str
) -> Iterator[Tuple[Transition, Tuple[int, ...]]]:
    """Enabled transitions on `letter` with the counters they lead to."""
    for t in machine.outgoing(state, letter):
        if not all(g.matches(c) for g, c in zip(t.guards, counters)):
            continue
        updated = tuple(c + e for c, e in zip(counters, t.effects))
        if min(updated, default=0) < 0:
            continue
        yield t, updated


def successors(
    machine: CounterMachine, configuration: Configuration, letter: str
) -> FrozenSet[Configuration]:
    """All configurations reachable by one transition on `letter`."""
    check_letter(machine, letter)
    return frozenset(
        Configuration(t.target, counters)
        for t, counters in moves(machine, configuration.state, configuration.counters, letter)
    )


def tracked_states(machine: CounterMachine) -> FrozenSet[str]:
    """States whose visits are counted: F for Büchi, every listed state for Muller."""
    return machine.acceptance.mentioned_states()


def run_prefixes(
    machine: CounterMachine,
    word: str,
    bound: int,
    node_budget: Optional[int] = None,
) -> Exploration:
    """
    Every run prefix on `word` whose counters stay within `bound`.

    When a layer grows beyond the node budget only the first runs in sorted
    order are kept and the result is flagged as truncated.
    """
    if bound < 0:
        raise RunError("counter bound must be >= 0")
    budget = node_budget or settings.node_budget
    for letter in word:
        check_letter(machine, letter)

    tracked = tracked_states(machine)
    start = Configuration(machine.initial, machine.zero_counters())
    layer: List[Tuple[Configuration, ...]] = [(start,)]
    truncated = False
    explored = 1
    for letter in word:
        following = []
        for run in layer:
            last = run[-1]
            for t, counters in moves(machine, last.state, last.counters, letter):
                if max(counters, default=0) > bound:
                    continue
                following.append(run + (Configuration(t.target, counters),))
        explored += len(following)
        following = sorted(set(following))
        if len(following) > budget:
            logger.warning("run unfolding truncated at %d runs", budget)
            following = following[:budget]
            truncated = True
        layer = following

    runs = frozenset(
        RunPrefix(configurations=run, word=word, visits=visit_counts(run, tracked))
        for run in layer
    )
    return Exploration(runs=runs, truncated=truncated, explored=explored)


def visit_counts(
    run: Sequence[Configuration], tracked: FrozenSet[str]
) -> Tuple[Tuple[str, int], ...]:
    counts: Dict[str, int] = {}
    for configuration in run:
        if configuration.state in tracked:
            counts[configuration.state] = counts.get(configuration.state, 0) + 1
    return tuple(sorted(counts.items()))


def buchi_accepts_lasso_run(
    machine: CounterMachine, descriptor: Tuple[Sequence[str], Sequence[str]]
) -> bool:
    """In(r) ∩ F ≠ ∅ for the run stem·cycle^ω."""
    if not machine.is_buchi:
        raise AcceptanceKindError("Büchi check on a Muller machine")
    _, cycle = descriptor
    if not cycle:
        raise RunError("run descriptor needs a nonempty cycle")
    return bool(set(cycle) & machine.final)


def muller_accepts_lasso_run(
    machine: CounterMachine, descriptor: Tuple[Sequence[str], Sequence[str]]
) -> bool:
    """In(r) equals some member of 𝓕 for the run stem·cycle^ω."""
    if machine.acceptance.kind is not AcceptanceKind.MULLER:
        raise AcceptanceKindError("Muller check on a Büchi machine")
    _, cycle = descriptor
    if not cycle:
        raise RunError("run descriptor needs a nonempty cycle")
    return frozenset(cycle) in set(machine.acceptance.families)


def pad_counters(machine: CounterMachine, counters: int) -> CounterMachine:
    """Append blind counters that no transition ever moves."""
    extra = counters - machine.counters
    if extra <= 0:
        return machine
    transitions = tuple(
        Transition(
            t.source,
            t.letter,
            t.guards + (Guard.ANY,) * extra,
            t.effects + (0,) * extra,
            t.target,
        )
        for t in machine.transitions
    )
    return CounterMachine(
        states=machine.states,
        alphabet=machine.alphabet,
        counters=counters,
        blind=machine.blind + (True,) * extra,
        initial=machine.initial,
        transitions=transitions,
        acceptance=machine.acceptance,
    )


def _require_same_alphabet(first: Iterable[str], second: Iterable[str]) -> None:
    if set(first) != set(second):
        raise AlphabetMismatchError(
            f"alphabets differ: {''.join(sorted(first))} vs {''.join(sorted(second))}"
        )


def _rename(t: Transition, prefix: str, source: Optional[str] = None) -> Transition:
    return Transition(
        source if source is not None else prefix + t.source,
        t.letter,
        t.guards,
        t.effects,
        prefix + t.target,
    )


UNION_INITIAL = "init"


def union_machines(first: CounterMachine, second: CounterMachine) -> CounterMachine:
    """A Büchi machine for L(first) ∪ L(second) with a fresh initial state."""
    _require_same_alphabet(first.alphabet, second.alphabet)
    if not (first.is_buchi and second.is_buchi):
        raise AcceptanceKindError("union is defined for Büchi machines")

    counters = max(first.counters, second.counters)
    left = pad_counters(first, counters)
    right = pad_counters(second, counters)
    blind = tuple(a and b for a, b in zip(left.blind, right.blind))

    transitions: List[Transition] = []
    for prefix, machine in (("1.", left), ("2.", right)):
        transitions.extend(_rename(t, prefix) for t in machine.transitions)
    for prefix, machine in (("1.", left), ("2.", right)):
        transitions.extend(
            _rename(t, prefix, source=UNION_INITIAL)
            for t in machine.transitions
            if t.source == machine.initial
        )

    final = {"1." + s for s in left.final} | {"2." + s for s in right.final}
    if left.initial in left.final or right.initial in right.final:
        final.add(UNION_INITIAL)

    states = (UNION_INITIAL,) + tuple("1." + s for s in left.states) + tuple(
        "2." + s for s in right.states
    )
    return CounterMachine(
        states=states,
        alphabet=first.alphabet,
        counters=counters,
        blind=blind,
        initial=UNION_INITIAL,
        transitions=tuple(transitions),
        acceptance=Acceptance.buchi(final),
    )


def accept_all_shape(alphabet: Sequence[str]) -> ShapeAutomaton:
    delta = {("all", letter): "all" for letter in alphabet}
    return ShapeAutomaton(tuple(alphabet), ("all",), "all", delta, frozenset({"all"}))


def reject_all_shape(alphabet: Sequence[str]) -> ShapeAutomaton:
    delta = {("none", letter): "none" for letter in alphabet}
    return ShapeAutomaton(tuple(alphabet), ("none",), "none", delta, frozenset())


def product_state(state: str, shape_state: str, copy: int) -> str:
    return f"{state}|{shape_state}|{copy}"


def product_with_shape(machine: CounterMachine, shape: ShapeAutomaton) -> CounterMachine:
    """
    L(machine) ∩ L(shape) by the two-copy intersection construction.

    Copy 0 waits for an accepting state of the machine, copy 1 for an accepting
    state of the shape; the product accepts in copy 0 on machine-accepting states.
    """
    _require_same_alphabet(machine.alphabet, shape.alphabet)
    if not machine.is_buchi:
        raise AcceptanceKindError("shape product is defined for Büchi machines")

    start = (machine.initial, shape.initial, 0)
    seen = {start}
    queue = deque([start])
    transitions: List[Transition] = []
    while queue:
        state, shape_state, copy = queue.popleft()
        if copy == 0 and state in machine.final:
            next_copy = 1
        elif copy == 1 and shape_state in shape.accepting:
            next_copy = 0
        else:
            next_copy = copy
        for letter in machine.alphabet:
            shape_target = shape.step(shape_state, letter)
            if shape_target is None:
                continue
            for t in machine.outgoing(state, letter):
                target = (t.target, shape_target, next_copy)
                transitions.append(
                    Transition(
                        product_state(state, shape_state, copy),
                        letter,
                        t.guards,
                        t.effects,
                        product_state(*target),
                    )
                )
                if target not in seen:
                    seen.add(target)
                    queue.append(target)

    ordered = sorted(seen, key=lambda s: (s != start, s))
    final = {
        product_state(*s) for s in seen if s[2] == 0 and s[0] in machine.final
    }
    logger.debug("shape product: %d states, %d transitions", len(seen), len(transitions))
    return CounterMachine(
        states=tuple(product_state(*s) for s in ordered),
        alphabet=machine.alphabet,
        counters=machine.counters,
        blind=machine.blind,
        initial=product_state(*start),
        transitions=tuple(transitions),
        acceptance=Acceptance.buchi(final),
    )
