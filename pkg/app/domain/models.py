"""
Domain models
Immutable values shared by every service: machines, configurations, words,
coded prefixes, runs, certificates and verdicts.
"""
from dataclasses import dataclass, field
from typing import Dict, FrozenSet, Iterator, Mapping, Optional, Tuple
import enum

from app.core.exceptions import AutomatonError


SEPARATOR_A = "A"
SEPARATOR_B = "B"
ZERO = "0"
RESERVED_LETTERS = frozenset({SEPARATOR_A, SEPARATOR_B, ZERO})


class Guard(str, enum.Enum):
    """Per-counter test of a transition."""
    ZERO = "Z"
    POSITIVE = "P"
    ANY = "*"

    def matches(self, value: int) -> bool:
        if self is Guard.ZERO:
            return value == 0
        if self is Guard.POSITIVE:
            return value > 0
        return True


class AcceptanceKind(str, enum.Enum):
    """Acceptance condition type."""
    BUCHI = "buchi"
    MULLER = "muller"


class VerdictKind(str, enum.Enum):
    """Outcome of a membership query."""
    ACCEPT = "accept"
    REJECT = "reject"
    UNKNOWN = "unknown"


class UnknownReason(str, enum.Enum):
    """Why a bounded search stayed indecisive."""
    BUDGET = "budget"
    HORIZON = "horizon"


class Answer(str, enum.Enum):
    """Three-valued oracle answer."""
    IN = "in"
    OUT = "out"
    UNKNOWN = "unknown"

    def negate(self) -> "Answer":
        if self is Answer.IN:
            return Answer.OUT
        if self is Answer.OUT:
            return Answer.IN
        return Answer.UNKNOWN

    @classmethod
    def of(cls, value: bool) -> "Answer":
        return cls.IN if value else cls.OUT


class Outcome(str, enum.Enum):
    """Result of a Wadge play."""
    PLAYER_2 = "P2 wins"
    PLAYER_1 = "P1 wins"
    UNKNOWN = "unknown"


# ============= Machines =============

@dataclass(frozen=True)
class Transition:
    """One element of the transition relation."""
    source: str
    letter: str
    guards: Tuple[Guard, ...]
    effects: Tuple[int, ...]
    target: str

    def label(self) -> str:
        guards = "".join(g.value for g in self.guards) or "-"
        effects = "".join(_EFFECT_CHARS[e] for e in self.effects) or "-"
        return f"{self.source} --{self.letter} {guards} {effects}--> {self.target}"


_EFFECT_CHARS = {1: "+", 0: "0", -1: "-"}


@dataclass(frozen=True)
class Acceptance:
    """Büchi set F or Muller family 𝓕."""
    kind: AcceptanceKind
    final: FrozenSet[str] = frozenset()
    families: Tuple[FrozenSet[str], ...] = ()

    @classmethod
    def buchi(cls, states) -> "Acceptance":
        return cls(AcceptanceKind.BUCHI, final=frozenset(states))

    @classmethod
    def muller(cls, families) -> "Acceptance":
        return cls(AcceptanceKind.MULLER, families=tuple(frozenset(f) for f in families))

    def mentioned_states(self) -> FrozenSet[str]:
        if self.kind is AcceptanceKind.BUCHI:
            return self.final
        return frozenset().union(*self.families) if self.families else frozenset()


@dataclass(frozen=True)
class CounterMachine:
    """A real-time k-counter machine with per-counter blindness flags."""
    states: Tuple[str, ...]
    alphabet: Tuple[str, ...]
    counters: int
    blind: Tuple[bool, ...]
    initial: str
    transitions: Tuple[Transition, ...]
    acceptance: Acceptance
    _outgoing: Dict[Tuple[str, str], Tuple[Transition, ...]] = field(
        init=False, repr=False, compare=False, hash=False, default=None
    )

    def __post_init__(self):
        outgoing: Dict[Tuple[str, str], list] = {}
        for t in self.transitions:
            outgoing.setdefault((t.source, t.letter), []).append(t)
        object.__setattr__(
            self, "_outgoing", {key: tuple(ts) for key, ts in outgoing.items()}
        )

    def outgoing(self, state: str, letter: str) -> Tuple[Transition, ...]:
        return self._outgoing.get((state, letter), ())

    @property
    def is_buchi(self) -> bool:
        return self.acceptance.kind is AcceptanceKind.BUCHI

    @property
    def final(self) -> FrozenSet[str]:
        return self.acceptance.final

    @property
    def all_blind(self) -> bool:
        return all(self.blind)

    def zero_counters(self) -> Tuple[int, ...]:
        return (0,) * self.counters


@dataclass(frozen=True, order=True)
class Configuration:
    """Control state plus counter vector."""
    state: str
    counters: Tuple[int, ...]

    def __str__(self) -> str:
        if not self.counters:
            return f"({self.state})"
        return f"({self.state}, {', '.join(map(str, self.counters))})"


@dataclass(frozen=True)
class RunPrefix:
    """A finite run: configurations c_0..c_n on a word of length n."""
    configurations: Tuple[Configuration, ...]
    word: str
    visits: Tuple[Tuple[str, int], ...] = ()

    @property
    def last(self) -> Configuration:
        return self.configurations[-1]

    def visit_count(self, state: str) -> int:
        return dict(self.visits).get(state, 0)


@dataclass(frozen=True)
class Exploration:
    """Result of an exhaustive unfolding; truncated when the node budget ran out."""
    runs: FrozenSet[RunPrefix]
    truncated: bool = False
    explored: int = 0


@dataclass(frozen=True)
class ShapeAutomaton:
    """A deterministic finite-state Büchi automaton used as a word pattern."""
    alphabet: Tuple[str, ...]
    states: Tuple[str, ...]
    initial: str
    delta: Mapping[Tuple[str, str], str]
    accepting: FrozenSet[str]

    def step(self, state: str, letter: str) -> Optional[str]:
        return self.delta.get((state, letter))

    def __hash__(self):
        transitions = frozenset(self.delta.items())
        return hash((self.alphabet, self.states, self.initial, transitions, self.accepting))


# ============= Words =============

@dataclass(frozen=True)
class LassoWord:
    """The ultimately periodic word spoke·cycle^ω."""
    spoke: str
    cycle: str

    def __post_init__(self):
        if not self.cycle:
            raise AutomatonError("lasso cycle must be nonempty")

    def letter(self, position: int) -> str:
        if position < len(self.spoke):
            return self.spoke[position]
        return self.cycle[(position - len(self.spoke)) % len(self.cycle)]

    def prefix(self, length: int) -> str:
        return "".join(self.letter(i) for i in range(length))

    def letters(self) -> FrozenSet[str]:
        return frozenset(self.spoke) | frozenset(self.cycle)

    def canonical(self) -> "LassoWord":
        """Shortest representative: primitive cycle, spoke rolled into it."""
        cycle = self.cycle
        for size in range(1, len(cycle) + 1):
            if len(cycle) % size == 0 and cycle[:size] * (len(cycle) // size) == cycle:
                cycle = cycle[:size]
                break
        spoke = self.spoke
        while spoke and spoke[-1] == cycle[-1]:
            spoke = spoke[:-1]
            cycle = cycle[-1] + cycle[:-1]
        return LassoWord(spoke, cycle)

    def __str__(self) -> str:
        return f"{self.spoke}({self.cycle})^w"


@dataclass(frozen=True)
class Block:
    """One block separator·0^zeros·payload of a coded word."""
    separator: str
    zeros: int
    payload: str

    def flatten(self) -> str:
        return self.separator + ZERO * self.zeros + self.payload


@dataclass(frozen=True)
class CodedPrefix:
    """Parsed prefix A0^{n1}x(1)B0^{n2}x(2)... plus an unparsed remainder."""
    blocks: Tuple[Block, ...] = ()
    trailing: str = ""

    @property
    def zero_runs(self) -> Tuple[int, ...]:
        return tuple(block.zeros for block in self.blocks)

    @property
    def payload(self) -> str:
        return "".join(block.payload for block in self.blocks)

    def flatten(self) -> str:
        return "".join(block.flatten() for block in self.blocks) + self.trailing


@dataclass(frozen=True)
class CodedWord:
    """The ω-word h(source) for a lasso source over Σ."""
    source: LassoWord

    def blocks(self) -> Iterator[Block]:
        index = 1
        while True:
            separator = SEPARATOR_A if index % 2 else SEPARATOR_B
            yield Block(separator, index, self.source.letter(index - 1))
            index += 1

    def prefix(self, length: int) -> str:
        out = []
        size = 0
        for block in self.blocks():
            if size >= length:
                break
            chunk = block.flatten()
            out.append(chunk)
            size += len(chunk)
        return "".join(out)[:length]

    def __str__(self) -> str:
        return f"h({self.source})"


# ============= Runs and verdicts =============

@dataclass(frozen=True)
class LassoRun:
    """
    A run on a lasso word given by configurations c_0..c_m, the letters read
    and the index where the repeating segment starts. For blind machines the
    segment may pump: c_m >= c_loop componentwise.
    """
    configurations: Tuple[Configuration, ...]
    letters: str
    loop_start: int

    @property
    def stem(self) -> Tuple[Configuration, ...]:
        return self.configurations[: self.loop_start + 1]

    @property
    def loop(self) -> Tuple[Configuration, ...]:
        return self.configurations[self.loop_start:]

    @property
    def growth(self) -> Tuple[int, ...]:
        start, end = self.configurations[self.loop_start], self.configurations[-1]
        return tuple(b - a for a, b in zip(start.counters, end.counters))

    @property
    def period(self) -> int:
        return len(self.configurations) - 1 - self.loop_start

    def at(self, index: int) -> Configuration:
        """Configuration after `index` steps of the infinite (pumped) run."""
        if index < len(self.configurations):
            return self.configurations[index]
        repeats, offset = divmod(index - self.loop_start, self.period)
        base = self.configurations[self.loop_start + offset]
        return Configuration(
            base.state,
            tuple(c + repeats * g for c, g in zip(base.counters, self.growth)),
        )

    def letter_at(self, index: int) -> str:
        if index < len(self.letters):
            return self.letters[index]
        return self.letters[self.loop_start + (index - self.loop_start) % self.period]

    def descriptor(self) -> Tuple[Tuple[str, ...], Tuple[str, ...]]:
        """(stem states, cycle states) in the form the acceptance checks take."""
        states = [c.state for c in self.configurations]
        return tuple(states[: self.loop_start]), tuple(states[self.loop_start:-1])


@dataclass(frozen=True)
class Verdict:
    """Accept carries a witness; Reject means the bounded search was exhausted."""
    kind: VerdictKind
    witness: Optional[object] = None
    reason: Optional[UnknownReason] = None
    bounds: Tuple[Tuple[str, int], ...] = ()
    explored: int = 0

    @property
    def decisive(self) -> bool:
        return self.kind is not VerdictKind.UNKNOWN

    def describe(self) -> str:
        bounds = " ".join(f"{name}={value}" for name, value in self.bounds)
        if self.kind is VerdictKind.UNKNOWN:
            return f"UNKNOWN({self.reason.value}) {bounds}".rstrip()
        return f"{self.kind.value.upper()} {bounds}".rstrip()


@dataclass(frozen=True)
class BlockRecord:
    """Schema of one block of a run of the 4-counter machine on h(x)."""
    u_length: int
    v_length: int
    letter: str
    source: str
    guard: Guard
    effect: int
    target: str
    accepting: bool

    def line(self, index: int) -> str:
        return (
            f"block {index} u={self.u_length} v={self.v_length} "
            f"{self.source} --{self.letter} {self.guard.value} {self.effect:+d}--> {self.target}"
            f"{' F' if self.accepting else ''}"
        )


@dataclass(frozen=True)
class RunCertificate:
    """Block-schema run of the 4-counter machine on the first `horizon` blocks."""
    blocks: Tuple[BlockRecord, ...]

    @property
    def horizon(self) -> int:
        return len(self.blocks)

    def lines(self) -> Tuple[str, ...]:
        return tuple(record.line(i) for i, record in enumerate(self.blocks, start=1))


@dataclass(frozen=True)
class FrontierEntry:
    """One element of a block frontier."""
    state: str
    counters: Tuple[int, ...]
    visits: int


@dataclass(frozen=True)
class CodedReport:
    """
    Outcome of the block-synchronized exploration of a machine on h(x).

    `projections` holds A-runs read off at most history_cap boundary
    histories per frontier entry (settings.history_cap unless the caller
    passes one), so it can miss runs that end in an already covered entry.
    """
    blocks: int
    survivors: Tuple[int, ...]
    max_visits: int
    frontier: FrozenSet[FrontierEntry]
    projections: Tuple[RunPrefix, ...] = ()
    accepting_lasso: Optional[LassoRun] = None
    truncated: bool = False

    @property
    def survived(self) -> bool:
        return bool(self.survivors) and self.survivors[-1] > 0


# ============= Games =============

@dataclass(frozen=True)
class Transcript:
    """Alternating moves; Player 2's None entries are skips."""
    player1: Tuple[str, ...]
    player2: Tuple[Optional[str], ...]
    horizon: int
    committed1: object
    committed2: object

    @property
    def player2_word(self) -> str:
        return "".join(move for move in self.player2 if move is not None)

    def lines(self) -> Tuple[str, ...]:
        rows = []
        for round_index, (a, b) in enumerate(zip(self.player1, self.player2), start=1):
            rows.append(f"{round_index} P1 {a} P2 {'SKIP' if b is None else b}")
        return tuple(rows)


@dataclass(frozen=True)
class GameResult:
    transcript: Transcript
    outcome: Outcome
    answer1: Answer
    answer2: Answer
