"""
Constructions
The 4-blind-counter machine B with L(A) = h⁻¹(L(B)), the 1-blind-counter
escape machine for 𝓛, the assembly P_A = B ∪ escape, canonical run
certificates and the projection of B-runs back onto A.
"""
from dataclasses import dataclass, replace
from typing import Dict, Iterator, List, Optional, Sequence, Tuple
import enum
import logging

from app.core.exceptions import (
    AcceptanceKindError,
    ConstructionError,
    MalformedMachineError,
    RunError,
)
from app.domain.models import (
    Acceptance,
    BlockRecord,
    Configuration,
    CounterMachine,
    Guard,
    LassoRun,
    LassoWord,
    RunCertificate,
    RunPrefix,
    SEPARATOR_A,
    SEPARATOR_B,
    Transition,
    ZERO,
)
from app.services import coding_service, machine_service

logger = logging.getLogger(__name__)

COUNTERS = 4
START = "begin"

# counter indices (C1..C4 -> 0..3) incremented / decremented in blocks of each parity
INC_PAIR = {SEPARATOR_A: (0, 1), SEPARATOR_B: (2, 3)}
DEC_PAIR = {SEPARATOR_A: (2, 3), SEPARATOR_B: (0, 1)}


class DecPhase(str, enum.Enum):
    FIRST = "d1"
    SECOND = "d2"
    IDLE = "idle"


DEC_ORDER = (DecPhase.FIRST, DecPhase.SECOND, DecPhase.IDLE)


class IncPhase(str, enum.Enum):
    FIRST = "i1"
    SECOND = "i2"


class Stage(str, enum.Enum):
    SEPARATOR = "sep"
    ZEROS = "zeros"
    PAYLOAD = "payload"


@dataclass(frozen=True)
class PhaseState:
    """
    Control of B inside one block.

    stored_state / stored_effect hold the A-transition chosen at the previous
    payload letter; u_empty records whether the first increasing counter has
    been left untouched so far in this block.
    """
    parity: str
    stage: Stage
    dec: DecPhase
    inc: IncPhase
    stored_state: str
    stored_effect: int
    u_empty: bool = True
    accept_mark: bool = False
    opening: bool = False

    @property
    def name(self) -> str:
        parity = self.parity + ("1" if self.opening else "")
        return "/".join(
            (
                parity,
                self.stage.value,
                self.dec.value,
                self.inc.value,
                f"{self.stored_effect:+d}",
                "u0" if self.u_empty else "u+",
                "F" if self.accept_mark else "-",
                self.stored_state,
            )
        )

    @property
    def is_final(self) -> bool:
        return self.stage is Stage.PAYLOAD and self.accept_mark

    @property
    def offset_countdown(self) -> Optional[int]:
        """Zeros still owed between the dec switch and the inc switch; None once both switched."""
        if self.inc is IncPhase.SECOND:
            return None
        if self.dec is DecPhase.FIRST:
            return self.stored_effect
        return 0

    def counter_for(self, phase) -> int:
        if isinstance(phase, DecPhase):
            return DEC_PAIR[self.parity][0 if phase is DecPhase.FIRST else 1]
        return INC_PAIR[self.parity][0 if phase is IncPhase.FIRST else 1]


def other_parity(parity: str) -> str:
    return SEPARATOR_B if parity == SEPARATOR_A else SEPARATOR_A


def decode_state(name: str) -> Optional[PhaseState]:
    """Phase part of a state of B (or of the phase machine); None for the start state."""
    if "|" in name:
        name = name.rsplit("|", 2)[0]
    if name == START:
        return None
    fields = name.split("/", 7)
    if len(fields) != 8:
        raise RunError(f"state {name!r} is not a phase state")
    parity, stage, dec, inc, effect, u, mark, stored = fields
    try:
        return PhaseState(
            parity=parity[0],
            stage=Stage(stage),
            dec=DecPhase(dec),
            inc=IncPhase(inc),
            stored_state=stored,
            stored_effect=int(effect),
            u_empty=u == "u0",
            accept_mark=mark == "F",
            opening=parity.endswith("1"),
        )
    except ValueError as exc:
        raise RunError(f"state {name!r} is not a phase state") from exc


# ============= Phase machine =============

def _block_entry(
    parity: str, stored_state: str, stored_effect: int, opening: bool = False
) -> PhaseState:
    return PhaseState(
        parity=parity,
        stage=Stage.SEPARATOR,
        dec=DecPhase.FIRST,
        inc=IncPhase.FIRST,
        stored_state=stored_state,
        stored_effect=stored_effect,
        opening=opening,
    )


def _inc_allowed(state: PhaseState, dec: DecPhase, inc: IncPhase) -> bool:
    # the inc switch sits stored_effect zeros after the dec switch
    switched = inc is IncPhase.SECOND
    if state.stored_effect == 0:
        return switched == (dec is not DecPhase.FIRST)
    if state.stored_effect == 1:
        return switched == (state.dec is not DecPhase.FIRST)
    if dec is not DecPhase.FIRST:
        return state.inc is IncPhase.SECOND and switched
    # one zero early: a zero of (FIRST, SECOND) must be followed by the dec switch
    return state.inc is IncPhase.FIRST


def zero_phases(state: PhaseState) -> List[Tuple[DecPhase, IncPhase]]:
    """(dec, inc) phases a letter 0 may move to."""
    if state.stage is Stage.PAYLOAD or state.dec is DecPhase.IDLE:
        return []
    if state.opening:
        # block 1: |u1| = 0 and nothing to drain
        return [(DecPhase.IDLE, IncPhase.SECOND)]
    options = []
    for dec in DEC_ORDER[DEC_ORDER.index(state.dec):]:
        for inc in IncPhase:
            if inc is IncPhase.FIRST and state.inc is IncPhase.SECOND:
                continue
            if _inc_allowed(state, dec, inc):
                options.append((dec, inc))
    return options


def _zero_effects(state: PhaseState, dec: DecPhase, inc: IncPhase) -> Tuple[int, ...]:
    effects = [0] * COUNTERS
    if dec is not DecPhase.IDLE:
        effects[state.counter_for(dec)] = -1
    effects[state.counter_for(inc)] = 1
    return tuple(effects)


def _after_zero(state: PhaseState, dec: DecPhase, inc: IncPhase) -> PhaseState:
    return replace(
        state,
        stage=Stage.ZEROS,
        dec=dec,
        inc=inc,
        u_empty=state.u_empty and inc is IncPhase.SECOND,
    )


def _after_payload(state: PhaseState, t: Transition, final) -> PhaseState:
    return PhaseState(
        parity=state.parity,
        stage=Stage.PAYLOAD,
        dec=DecPhase.FIRST,
        inc=IncPhase.FIRST,
        stored_state=t.target,
        stored_effect=t.effects[0],
        accept_mark=t.target in final,
    )


def _payload_transitions(
    a_machine: CounterMachine, state: PhaseState, letter: str
) -> Iterator[Transition]:
    if state.stage is not Stage.ZEROS or state.dec is not DecPhase.IDLE:
        return
    tested = 0 if state.u_empty else 1
    for t in a_machine.outgoing(state.stored_state, letter):
        # A cannot decrement an empty counter
        if t.guards[0].matches(tested) and tested + t.effects[0] >= 0:
            yield t


def _phase_moves(
    a_machine: CounterMachine, state: Optional[PhaseState], letter: str
) -> Iterator[Tuple[Tuple[int, ...], PhaseState]]:
    idle = (0,) * COUNTERS
    if state is None:
        if letter == SEPARATOR_A:
            yield idle, _block_entry(SEPARATOR_A, a_machine.initial, 0, opening=True)
        return
    if letter == ZERO:
        for dec, inc in zero_phases(state):
            yield _zero_effects(state, dec, inc), _after_zero(state, dec, inc)
    elif letter in (SEPARATOR_A, SEPARATOR_B):
        if state.stage is Stage.PAYLOAD and letter == other_parity(state.parity):
            yield idle, _block_entry(letter, state.stored_state, state.stored_effect)
    else:
        for t in _payload_transitions(a_machine, state, letter):
            yield idle, _after_payload(state, t, a_machine.final)


def _check_one_counter(a_machine: CounterMachine) -> None:
    diagnostics = machine_service.validate(a_machine)
    if diagnostics:
        raise MalformedMachineError("machine is malformed", diagnostics)
    if not a_machine.is_buchi:
        raise AcceptanceKindError("construction expects a Büchi machine")
    if a_machine.counters != 1:
        raise ConstructionError(f"construction expects 1 counter, got {a_machine.counters}")
    if a_machine.blind[0]:
        raise ConstructionError("construction expects a counter with zero tests")


def build_phase_machine(a_machine: CounterMachine) -> CounterMachine:
    """Block-phase control of B over Γ, before intersecting with the shape automaton."""
    _check_one_counter(a_machine)
    alphabet = coding_service.gamma(a_machine.alphabet)

    names: Dict[Optional[PhaseState], str] = {None: START}
    pending: List[Optional[PhaseState]] = [None]
    transitions: List[Transition] = []
    guards = (Guard.ANY,) * COUNTERS
    while pending:
        state = pending.pop()
        for letter in alphabet:
            for effects, target in _phase_moves(a_machine, state, letter):
                if target not in names:
                    names[target] = target.name
                    pending.append(target)
                transitions.append(Transition(names[state], letter, guards, effects, names[target]))

    final = {name for state, name in names.items() if state is not None and state.is_final}
    states = (START,) + tuple(sorted(name for name in names.values() if name != START))
    return CounterMachine(
        states=states,
        alphabet=alphabet,
        counters=COUNTERS,
        blind=(True,) * COUNTERS,
        initial=START,
        transitions=tuple(sorted(transitions, key=lambda t: (t.source, t.letter, t.target))),
        acceptance=Acceptance.buchi(final),
    )


def build_b(a_machine: CounterMachine) -> CounterMachine:
    """4-blind-counter Büchi machine B with x ∈ L(A) iff h(x) ∈ L(B)."""
    phase = build_phase_machine(a_machine)
    shape = coding_service.build_r_automaton(a_machine.alphabet)
    machine = machine_service.product_with_shape(phase, shape)
    logger.info(
        "built B: %d states, %d transitions from %d A-states",
        len(machine.states),
        len(machine.transitions),
        len(a_machine.states),
    )
    return machine


# ============= Escape machine =============

def _l1_machine(sigma: Sequence[str]) -> CounterMachine:
    """Words with no prefix in A·0·Σ·B."""
    alphabet = coding_service.gamma(sigma)
    expected = {
        "e0": ({SEPARATOR_A}, "e1"),
        "e1": ({ZERO}, "e2"),
        "e2": (set(sigma), "e3"),
        "e3": ({SEPARATOR_B}, None),
    }
    transitions = []
    for state, (letters, following) in expected.items():
        for letter in alphabet:
            if letter in letters:
                if following is not None:
                    transitions.append(Transition(state, letter, (), (), following))
            else:
                transitions.append(Transition(state, letter, (), (), "sink"))
    transitions.extend(Transition("sink", letter, (), (), "sink") for letter in alphabet)
    return CounterMachine(
        states=("e0", "e1", "e2", "e3", "sink"),
        alphabet=alphabet,
        counters=0,
        blind=(),
        initial="e0",
        transitions=tuple(transitions),
        acceptance=Acceptance.buchi({"sink"}),
    )


def _l2_machine(sigma: Sequence[str]) -> CounterMachine:
    """Words containing X·0^n·a·Y·0^m·b with X ≠ Y separators and 1 ≤ m ≤ n."""
    alphabet = coding_service.gamma(sigma)
    star = (Guard.ANY,)

    def t(source, letter, effect, target):
        return Transition(source, letter, star, (effect,), target)

    transitions = [t("guess", letter, 0, "guess") for letter in alphabet]
    transitions.extend(t("sink", letter, 0, "sink") for letter in alphabet)
    states = ["guess", "sink"]
    for first in (SEPARATOR_A, SEPARATOR_B):
        second = other_parity(first)
        parts = ("sep", "up", "pay", "sep2", "down")
        sep, up, pay, sep2, down = (f"{first}.{part}" for part in parts)
        states.extend((sep, up, pay, sep2, down))
        transitions.append(t("guess", first, 0, sep))
        transitions.append(t(sep, ZERO, 1, up))
        transitions.append(t(up, ZERO, 1, up))
        transitions.extend(t(up, letter, 0, pay) for letter in sigma)
        transitions.append(t(pay, second, 0, sep2))
        transitions.append(t(sep2, ZERO, -1, down))
        transitions.append(t(down, ZERO, -1, down))
        transitions.extend(t(down, letter, 0, "sink") for letter in sigma)
    return CounterMachine(
        states=tuple(states),
        alphabet=alphabet,
        counters=1,
        blind=(True,),
        initial="guess",
        transitions=tuple(transitions),
        acceptance=Acceptance.buchi({"sink"}),
    )


def build_lescape(sigma: Sequence[str]) -> CounterMachine:
    """1-blind-counter Büchi machine for 𝓛 = 𝓛₁ ∪ 𝓛₂ over Γ."""
    coding_service.check_sigma(sigma)
    return machine_service.union_machines(
        machine_service.pad_counters(_l1_machine(sigma), 1), _l2_machine(sigma)
    )


def build_pa(a_machine: CounterMachine) -> CounterMachine:
    """4-blind-counter Büchi machine for h(L(A)) ∪ 𝓛."""
    b_machine = build_b(a_machine)
    escape = machine_service.pad_counters(build_lescape(a_machine.alphabet), COUNTERS)
    return machine_service.union_machines(b_machine, escape)


# ============= Certificates and extraction =============

def _a_step(
    a_machine: CounterMachine, before: Configuration, letter: str, after: Configuration
) -> Transition:
    for t, counters in machine_service.moves(a_machine, before.state, before.counters, letter):
        if t.target == after.state and counters == after.counters:
            return t
    raise RunError(f"no transition of A takes {before} to {after} on {letter!r}")


def build_canonical_certificate(
    a_machine: CounterMachine, a_run: LassoRun, horizon: int
) -> RunCertificate:
    """Block schema of the run of B on h(x) that simulates the given accepting A-run."""
    _check_one_counter(a_machine)
    if a_run.period < 1:
        raise RunError("A-run needs a nonempty repeating segment")
    if any(c < 0 for c in a_run.growth):
        raise RunError("A-run repeating segment decreases a counter")
    if not set(a_run.descriptor()[1]) & a_machine.final:
        raise RunError("A-run does not visit F in its repeating segment")
    if a_run.configurations[0] != Configuration(a_machine.initial, (0,)):
        raise RunError("A-run does not start in the initial configuration")

    records = []
    for n in range(1, horizon + 1):
        before, after = a_run.at(n - 1), a_run.at(n)
        letter = a_run.letter_at(n - 1)
        t = _a_step(a_machine, before, letter, after)
        u_length = before.counters[0]
        records.append(
            BlockRecord(
                u_length=u_length,
                v_length=n - u_length,
                letter=letter,
                source=before.state,
                guard=t.guards[0],
                effect=t.effects[0],
                target=after.state,
                accepting=after.state in a_machine.final,
            )
        )
    return RunCertificate(tuple(records))


def certificate_problems(cert: RunCertificate, x: LassoWord) -> List[str]:
    """Violations of the block-schema arithmetic."""
    problems = []
    previous: Optional[BlockRecord] = None
    for n, record in enumerate(cert.blocks, start=1):
        if record.u_length < 0 or record.v_length < 0:
            problems.append(f"block {n}: negative segment length")
        if record.u_length + record.v_length != n:
            total = record.u_length + record.v_length
            problems.append(f"block {n}: |u|+|v| = {total}, expected {n}")
        if record.letter != x.letter(n - 1):
            problems.append(f"block {n}: letter {record.letter!r} but x({n}) = {x.letter(n - 1)!r}")
        if record.effect not in (-1, 0, 1):
            problems.append(f"block {n}: effect {record.effect} not in -1/0/+1")
        if not record.guard.matches(record.u_length):
            problems.append(f"block {n}: guard {record.guard.value} fails on {record.u_length}")
        if previous is None:
            if record.u_length != 0:
                problems.append("block 1: |u| must be 0")
        else:
            expected = previous.u_length + previous.effect
            if record.u_length != expected:
                problems.append(f"block {n}: |u| = {record.u_length}, expected {expected}")
            if record.source != previous.target:
                problems.append(
                    f"block {n}: source {record.source} but previous target {previous.target}"
                )
        previous = record
    return problems


def expand_certificate(cert: RunCertificate, sigma: Sequence[str]) -> Tuple[str, Tuple[str, ...]]:
    """
    The letters of the coded prefix and the B-state names the certificate
    claims, one per letter plus the start state.
    """
    shape = coding_service.build_r_automaton(sigma)
    phases: List[Optional[PhaseState]] = [None]
    letters: List[str] = []
    previous_effect = 0
    previous_u = 0
    for n, record in enumerate(cert.blocks, start=1):
        parity = coding_service.separator_for(n)
        state = _block_entry(parity, record.source, previous_effect, opening=n == 1)
        letters.append(parity)
        phases.append(state)
        drained = previous_u
        for j in range(n):
            if n == 1:
                dec, inc = DecPhase.IDLE, IncPhase.SECOND
            else:
                if j < drained:
                    dec = DecPhase.FIRST
                elif j < n - 1:
                    dec = DecPhase.SECOND
                else:
                    dec = DecPhase.IDLE
                inc = IncPhase.FIRST if j < record.u_length else IncPhase.SECOND
            state = _after_zero(state, dec, inc)
            letters.append(ZERO)
            phases.append(state)
        letters.append(record.letter)
        phases.append(
            PhaseState(
                parity=parity,
                stage=Stage.PAYLOAD,
                dec=DecPhase.FIRST,
                inc=IncPhase.FIRST,
                stored_state=record.target,
                stored_effect=record.effect,
                accept_mark=record.accepting,
            )
        )
        previous_effect, previous_u = record.effect, record.u_length

    names = []
    shape_state, copy = shape.initial, 0
    for index, phase in enumerate(phases):
        name = START if phase is None else phase.name
        names.append(machine_service.product_state(name, shape_state, copy))
        if index == len(letters):
            break
        if copy == 0 and phase is not None and phase.is_final:
            copy = 1
        elif copy == 1 and shape_state in shape.accepting:
            copy = 0
        shape_state = shape.step(shape_state, letters[index])
        if shape_state is None:
            raise RunError(f"certificate letters leave the block shape at offset {index}")
    return "".join(letters), tuple(names)


def block_boundary(configuration: Configuration) -> PhaseState:
    phase = decode_state(configuration.state)
    if phase is None or phase.stage is not Stage.PAYLOAD:
        raise RunError(f"{configuration} is not at a block boundary")
    return phase


def u_length(configuration: Configuration) -> int:
    """|u_n| read off a B-configuration right after the payload letter of block n."""
    phase = block_boundary(configuration)
    return configuration.counters[INC_PAIR[phase.parity][0]]


def a_configuration(configuration: Configuration) -> Configuration:
    """The A-configuration (q_n, |u_n| + N_n) encoded by a B-configuration after block n."""
    phase = block_boundary(configuration)
    return Configuration(phase.stored_state, (u_length(configuration) + phase.stored_effect,))


def extract_a_run(
    a_machine: CounterMachine, x: str, boundaries: Sequence[Configuration]
) -> RunPrefix:
    """
    Project B-configurations taken after each payload letter of a canonical
    coded prefix onto a run prefix of A on x.
    """
    if len(boundaries) > len(x):
        raise RunError(f"{len(boundaries)} block boundaries for a word of length {len(x)}")
    run = [Configuration(a_machine.initial, (0,))]
    for letter, configuration in zip(x, boundaries):
        following = a_configuration(configuration)
        _a_step(a_machine, run[-1], letter, following)
        run.append(following)
    return RunPrefix(
        configurations=tuple(run),
        word=x[: len(boundaries)],
        visits=machine_service.visit_counts(run, a_machine.final),
    )
