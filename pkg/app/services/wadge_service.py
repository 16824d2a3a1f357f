"""
Wadge games
Three-valued membership oracles, the sum and split combinators, Player 1 and
Player 2 strategies, and the game loop that evaluates committed plays.
"""
from abc import ABC, abstractmethod
from dataclasses import dataclass
from typing import FrozenSet, Optional, Sequence, Tuple, Union
import logging

from app.core.config import settings
from app.core.exceptions import AlphabetMismatchError, StrategyError
from app.domain.models import (
    Answer,
    CodedReport,
    CodedWord,
    CounterMachine,
    GameResult,
    LassoWord,
    Outcome,
    Transcript,
    Verdict,
    VerdictKind,
)
from app.services import coding_service, construction_service, membership_service

logger = logging.getLogger(__name__)

OmegaWord = Union[LassoWord, CodedWord]

# fresh letters added by each nesting level of a sum: (plus, minus)
ESCAPE_LETTERS = (("+", "-"), ("#", "~"), ("!", "="))


def answer_of(verdict: Verdict) -> Answer:
    if verdict.kind is VerdictKind.ACCEPT:
        return Answer.IN
    if verdict.kind is VerdictKind.REJECT:
        return Answer.OUT
    return Answer.UNKNOWN


def drop(word: LassoWord, count: int) -> LassoWord:
    """The suffix of `word` after its first `count` letters."""
    if count <= len(word.spoke):
        return LassoWord(word.spoke[count:], word.cycle)
    offset = (count - len(word.spoke)) % len(word.cycle)
    return LassoWord(word.cycle[offset:], word.cycle)


# ============= Oracles =============

class Oracle(ABC):
    """Stands for an ω-language over `alphabet`."""

    alphabet: Tuple[str, ...]

    @abstractmethod
    def query(self, word: OmegaWord) -> Answer:
        ...


class EmptyOracle(Oracle):
    def __init__(self, alphabet: Sequence[str]):
        self.alphabet = tuple(alphabet)

    def query(self, word: OmegaWord) -> Answer:
        return Answer.OUT


class FullOracle(Oracle):
    def __init__(self, alphabet: Sequence[str]):
        self.alphabet = tuple(alphabet)

    def query(self, word: OmegaWord) -> Answer:
        return Answer.IN


class MachineOracle(Oracle):
    """L(machine) on lasso words through lasso_member."""

    def __init__(
        self,
        machine: CounterMachine,
        counter_bound: Optional[int] = None,
        cycle_bound: Optional[int] = None,
    ):
        self.machine = machine
        self.alphabet = machine.alphabet
        self.counter_bound = counter_bound
        self.cycle_bound = cycle_bound

    def verdict(self, word: LassoWord) -> Verdict:
        return membership_service.lasso_member(
            self.machine, word, self.counter_bound, self.cycle_bound
        )

    def query(self, word: OmegaWord) -> Answer:
        if isinstance(word, CodedWord):
            # coded words are not ultimately periodic
            return Answer.UNKNOWN
        return answer_of(self.verdict(word))


class PetriOracle(Oracle):
    """
    L(P_A) = h(L(A)) ∪ 𝓛 over Γ, answered by the constructed machines alone.

    Lassos go through lasso_member on build_pa(A). A coded word h(x) goes
    through coded_member on build_b(A): in when an accepting lasso of A is
    read off the surviving runs, out when the horizon was explored without
    truncation and no surviving run can still reach an accepting state.
    """

    def __init__(
        self,
        a_machine: CounterMachine,
        counter_bound: Optional[int] = None,
        cycle_bound: Optional[int] = None,
        blocks: Optional[int] = None,
    ):
        self.a_machine = a_machine
        self.alphabet = coding_service.gamma(a_machine.alphabet)
        self.counter_bound = counter_bound
        self.cycle_bound = cycle_bound
        self.blocks = blocks
        self._pa: Optional[CounterMachine] = None
        self._b: Optional[CounterMachine] = None
        self._b_live: Optional[FrozenSet[str]] = None

    @property
    def pa_machine(self) -> CounterMachine:
        if self._pa is None:
            self._pa = construction_service.build_pa(self.a_machine)
        return self._pa

    @property
    def b_machine(self) -> CounterMachine:
        if self._b is None:
            self._b = construction_service.build_b(self.a_machine)
        return self._b

    def coded_report(self, x: LassoWord) -> CodedReport:
        return membership_service.coded_member(
            self.b_machine, x, self.blocks, a_machine=self.a_machine
        )

    def query(self, word: OmegaWord) -> Answer:
        if isinstance(word, LassoWord):
            return answer_of(
                membership_service.lasso_member(
                    self.pa_machine, word, self.counter_bound, self.cycle_bound
                )
            )
        report = self.coded_report(word.source)
        if report.accepting_lasso is not None:
            return Answer.IN
        if self._b_live is None:
            self._b_live = frozenset(membership_service.live_states(self.b_machine))
        if not report.truncated and not any(e.state in self._b_live for e in report.frontier):
            return Answer.OUT
        return Answer.UNKNOWN


class SumOracle(Oracle):
    """
    inner + outer: a word over the outer alphabet is judged by `outer`; the
    first plus letter hands the rest of the word to `inner`, the first minus
    letter to its complement.
    """

    def __init__(self, inner: Oracle, outer: Oracle, plus: Sequence[str], minus: Sequence[str]):
        plus, minus = frozenset(plus), frozenset(minus)
        base = frozenset(outer.alphabet)
        if not plus or not minus:
            raise AlphabetMismatchError("sum needs nonempty plus and minus letters")
        if plus & minus or (plus | minus) & base:
            raise AlphabetMismatchError("plus, minus and outer letters must be disjoint")
        self.inner = inner
        self.outer = outer
        self.plus = plus
        self.minus = minus
        self.alphabet = tuple(outer.alphabet) + tuple(sorted(plus)) + tuple(sorted(minus))
        if not set(self.alphabet) <= set(inner.alphabet):
            raise AlphabetMismatchError("inner oracle must read the extended alphabet")

    def query(self, word: OmegaWord) -> Answer:
        if isinstance(word, CodedWord):
            return self.outer.query(word)
        base = set(self.outer.alphabet)
        seen = word.spoke + word.cycle
        for position, letter in enumerate(seen):
            if letter in base:
                continue
            if letter not in self.plus and letter not in self.minus:
                raise AlphabetMismatchError(f"letter {letter!r} is not in the sum alphabet")
            answer = self.inner.query(drop(word, position + 1))
            return answer if letter in self.plus else answer.negate()
        return self.outer.query(word)


class SplitOracle(Oracle):
    """Σ₁·L₁ ∪ Σ₂·L₂: the first letter picks the language its tail is tested in."""

    def __init__(
        self, first: Sequence[str], second: Sequence[str], oracle1: Oracle, oracle2: Oracle
    ):
        first, second = tuple(first), tuple(second)
        if not first or not second or set(first) & set(second):
            raise AlphabetMismatchError("split needs two nonempty disjoint letter sets")
        letters = set(first) | set(second)
        if set(oracle1.alphabet) != letters or set(oracle2.alphabet) != letters:
            raise AlphabetMismatchError("split letter sets must partition both oracle alphabets")
        self.first = first
        self.second = second
        self.oracle1 = oracle1
        self.oracle2 = oracle2
        self.alphabet = first + second

    def query(self, word: OmegaWord) -> Answer:
        if not isinstance(word, LassoWord):
            raise AlphabetMismatchError("split oracles read lasso words over Σ")
        head = word.letter(0)
        if head in self.first:
            return self.oracle1.query(drop(word, 1))
        if head in self.second:
            return self.oracle2.query(drop(word, 1))
        raise AlphabetMismatchError(f"letter {head!r} is in neither part of the split")


def empty_sum(oracle: Oracle, level: int) -> SumOracle:
    """∅ + L using the escape letters of `level` (1-based)."""
    plus, minus = ESCAPE_LETTERS[level - 1]
    extended = tuple(oracle.alphabet) + (plus, minus)
    return SumOracle(EmptyOracle(extended), oracle, plus, minus)


def nested_empty_sum(oracle: Oracle) -> SumOracle:
    """∅ + (∅ + L)."""
    return empty_sum(empty_sum(oracle, 1), 2)


# ============= Strategies =============

class Player1Strategy(ABC):
    @abstractmethod
    def move(self, p2_moves: Sequence[Optional[str]]) -> str:
        ...

    @abstractmethod
    def commitment(self) -> OmegaWord:
        ...


class CommittedPlayer(Player1Strategy):
    """Plays a fixed ω-word letter by letter whatever Player 2 does."""

    def __init__(self, word: OmegaWord):
        self.word = word

    def move(self, p2_moves: Sequence[Optional[str]]) -> str:
        return self.word.prefix(len(p2_moves) + 1)[-1]

    def commitment(self) -> OmegaWord:
        return self.word


class Player2Strategy(ABC):
    """
    A Player 2 strategy is given by the word it wants written after seeing
    Player 1's moves; respond() writes that word one letter per round and
    skips when it has caught up.
    """

    @abstractmethod
    def target(self, p1_moves: str) -> str:
        ...

    @abstractmethod
    def limit(self, p1_word: OmegaWord) -> OmegaWord:
        """The ω-word written against Player 1's committed word."""

    def respond(self, p1_moves: str, p2_moves: Sequence[Optional[str]]) -> Optional[str]:
        written = "".join(move for move in p2_moves if move is not None)
        wanted = self.target(p1_moves)
        if not wanted.startswith(written):
            raise StrategyError(f"strategy target {wanted!r} does not extend written {written!r}")
        if len(wanted) == len(written):
            return None
        return wanted[len(written)]


class IdentityStrategy(Player2Strategy):
    """Copies Player 1 verbatim; never plays an escape letter."""

    def target(self, p1_moves: str) -> str:
        return p1_moves

    def limit(self, p1_word: OmegaWord) -> OmegaWord:
        return p1_word


class CopyHStrategy(Player2Strategy):
    """Writes h of Player 1's word, one block per Player 1 letter."""

    def target(self, p1_moves: str) -> str:
        return coding_service.encode_prefix(p1_moves, len(p1_moves)).flatten()

    def limit(self, p1_word: OmegaWord) -> OmegaWord:
        if not isinstance(p1_word, LassoWord):
            raise StrategyError("copy-h expects Player 1 to commit to a lasso over Σ")
        return CodedWord(p1_word)


@dataclass(frozen=True)
class _Reading:
    """How far a Γ-word stays inside h(Σ^ω) and when it enters 𝓛."""
    decoded: str
    exit: Optional[int]
    entry: Optional[int]


def _read(word: str) -> _Reading:
    shape = coding_service.canonical_shape()
    decoded = []
    exit_at = None
    for position, letter in enumerate(word):
        kind = next(shape)
        if kind == "payload" and coding_service.is_payload(letter):
            decoded.append(letter)
        elif kind != letter:
            exit_at = position
            break
    entry = None
    if exit_at is not None:
        for length in range(exit_at + 1, len(word) + 1):
            if coding_service.escape_witness(word[:length]) is not None:
                entry = length
                break
    return _Reading("".join(decoded), exit_at, entry)


class ThreeCaseStrategy(Player2Strategy):
    """
    Player 2 in W(L(P_A), ∅+(∅+L(A))).

    While Player 1 stays a prefix of some h(x) it writes the decoded letters.
    Leaving straight into 𝓛 it escapes to the whole set. Leaving elsewhere it
    escapes to ∅, and escapes to the whole set at the outer level once
    Player 1 enters 𝓛. After an escape it writes the filler letter.
    """

    def __init__(self, sigma: Sequence[str]):
        coding_service.check_sigma(sigma)
        if not sigma:
            raise StrategyError("three-case strategy needs a nonempty Σ")
        self.sigma = tuple(sigma)
        self.filler = self.sigma[0]
        (self.to_empty, self.to_full), (_, self.outer_full) = ESCAPE_LETTERS[:2]

    def target(self, p1_moves: str) -> str:
        reading = _read(p1_moves)
        if reading.exit is None:
            return reading.decoded
        size = len(p1_moves)
        if reading.entry == reading.exit + 1:
            return reading.decoded + self.to_full + self.filler * (size - reading.entry)
        waiting = (size if reading.entry is None else reading.entry - 1) - (reading.exit + 1)
        out = reading.decoded + self.to_empty + self.filler * waiting
        if reading.entry is not None:
            out += self.outer_full + self.filler * (size - reading.entry)
        return out

    def limit(self, p1_word: OmegaWord) -> OmegaWord:
        if isinstance(p1_word, CodedWord):
            return p1_word.source
        length = _exit_bound(p1_word)
        if coding_service.in_l(p1_word):
            length = max(length, coding_service.l2_scan_length(p1_word))
        reading = _read(p1_word.prefix(length))
        if reading.exit is None:
            raise StrategyError(f"{p1_word} did not leave the code within {length} letters")
        return LassoWord(self.target(p1_word.prefix(length)), self.filler)


def _exit_bound(word: LassoWord) -> int:
    # zero runs of a lasso are bounded unless it ends in 0^ω; either way the
    # block lengths of h outgrow them within this many letters
    span = len(word.spoke) + len(word.cycle) + 2
    return span * (span + 3) // 2 + span


class TransferStrategy(Player2Strategy):
    """
    Turns a Player 2 strategy of W(L(P_A), L(P_B)) into one of
    W(L(A), ∅+(∅+L(B))): Player 1's letters reach the inner strategy through
    h and its output is read back through the three-case strategy.
    """

    def __init__(self, inner: Player2Strategy, sigma: Sequence[str]):
        self.inner = inner
        self.reader = ThreeCaseStrategy(sigma)

    def target(self, p1_moves: str) -> str:
        coded = coding_service.encode_prefix(p1_moves, len(p1_moves)).flatten()
        return self.reader.target(self.inner.target(coded))

    def limit(self, p1_word: OmegaWord) -> OmegaWord:
        if not isinstance(p1_word, LassoWord):
            raise StrategyError("transfer expects Player 1 to commit to a lasso over Σ")
        return self.reader.limit(self.inner.limit(CodedWord(p1_word)))


def strategy_copy_h(a_machine: CounterMachine) -> CopyHStrategy:
    coding_service.check_sigma(a_machine.alphabet)
    return CopyHStrategy()


def strategy_three_case(a_machine: CounterMachine) -> ThreeCaseStrategy:
    return ThreeCaseStrategy(a_machine.alphabet)


def identity_strategy() -> IdentityStrategy:
    return IdentityStrategy()


def strategy_transfer(inner: Player2Strategy, sigma: Sequence[str]) -> TransferStrategy:
    return TransferStrategy(inner, sigma)


# ============= Game loop =============

def play_wadge(
    oracle1: Oracle,
    oracle2: Oracle,
    player2: Player2Strategy,
    commit: OmegaWord,
    horizon: Optional[int] = None,
    player1: Optional[Player1Strategy] = None,
) -> GameResult:
    """
    Play `horizon` rounds and judge the committed words: Player 2 wins iff
    both words are in their languages or both are out.
    """
    rounds = horizon if horizon is not None else settings.game_horizon
    player1 = player1 or CommittedPlayer(commit)
    letters1 = set(oracle1.alphabet)
    letters2 = set(oracle2.alphabet)
    p1_moves = []
    p2_moves = []
    for _ in range(rounds):
        a = player1.move(tuple(p2_moves))
        if a not in letters1:
            raise StrategyError(f"Player 1 played {a!r} outside its alphabet")
        p1_moves.append(a)
        b = player2.respond("".join(p1_moves), tuple(p2_moves))
        if b is not None and b not in letters2:
            raise StrategyError(f"Player 2 played {b!r} outside its alphabet")
        p2_moves.append(b)

    committed1 = player1.commitment()
    committed2 = player2.limit(committed1)
    written = "".join(m for m in p2_moves if m is not None)
    if committed2.prefix(len(written)) != written:
        raise StrategyError("Player 2 moves disagree with its committed word")

    answer1 = oracle1.query(committed1)
    answer2 = oracle2.query(committed2)
    if Answer.UNKNOWN in (answer1, answer2):
        outcome = Outcome.UNKNOWN
    elif answer1 is answer2:
        outcome = Outcome.PLAYER_2
    else:
        outcome = Outcome.PLAYER_1
    logger.debug(
        "play over %d rounds: %s (%s / %s)", rounds, outcome.value, answer1.value, answer2.value
    )
    return GameResult(
        transcript=Transcript(
            player1=tuple(p1_moves),
            player2=tuple(p2_moves),
            horizon=rounds,
            committed1=committed1,
            committed2=committed2,
        ),
        outcome=outcome,
        answer1=answer1,
        answer2=answer2,
    )
