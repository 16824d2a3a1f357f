"""
Block coding
The coding x ↦ A0x(1)B0²x(2)A0³x(3)…, its decoder, the block-shape automaton,
the escape languages and the prefix metric.
"""
from dataclasses import dataclass
from fractions import Fraction
from typing import Iterable, Iterator, Optional, Sequence, Tuple, Union
import enum
import itertools

from app.core.exceptions import AlphabetMismatchError, CodingError
from app.domain.models import (
    Block,
    CodedPrefix,
    CodedWord,
    LassoWord,
    RESERVED_LETTERS,
    SEPARATOR_A,
    SEPARATOR_B,
    ShapeAutomaton,
    ZERO,
)

Word = Union[str, LassoWord, CodedWord]


class EscapeKind(str, enum.Enum):
    """Which escape language a prefix witnesses."""
    L1 = "L1"
    L2 = "L2"


class Region(str, enum.Enum):
    """Part of the decomposition Γ^ω = h(Σ^ω) ∪ 𝓛 ∪ 𝓛′ a word lies in."""
    CODE = "code"
    ESCAPE = "escape"
    RESIDUAL = "residual"


def separator_for(index: int) -> str:
    """Separator opening block `index` (1-based): A for odd, B for even."""
    return SEPARATOR_A if index % 2 else SEPARATOR_B


def gamma(sigma: Sequence[str]) -> Tuple[str, ...]:
    """The coded alphabet Σ ∪ {A, B, 0}."""
    check_sigma(sigma)
    return tuple(sigma) + (SEPARATOR_A, SEPARATOR_B, ZERO)


def check_sigma(sigma: Iterable[str]) -> None:
    clash = RESERVED_LETTERS & set(sigma)
    if clash:
        raise AlphabetMismatchError(
            f"letters {''.join(sorted(clash))} are reserved for the block coding"
        )


def is_payload(letter: str) -> bool:
    return letter not in RESERVED_LETTERS


# ============= Encoding =============

def encode_prefix(x: str, blocks: int) -> CodedPrefix:
    """The first `blocks` blocks of h(x)."""
    if blocks < 0:
        raise CodingError("block count must be >= 0", offset=0)
    if blocks > len(x):
        raise CodingError(
            f"{blocks} blocks requested from a word of length {len(x)}", offset=len(x)
        )
    check_sigma(x)
    return CodedPrefix(
        blocks=tuple(
            Block(separator_for(i), i, x[i - 1]) for i in range(1, blocks + 1)
        )
    )


def encode_lasso(x: LassoWord, blocks: int) -> CodedPrefix:
    return encode_prefix(x.prefix(blocks), blocks)


def flatten(prefix: CodedPrefix) -> str:
    return prefix.flatten()


# ============= Decoding =============

def decode_prefix(word: str, sigma: Optional[Iterable[str]] = None) -> CodedPrefix:
    """
    Parse complete blocks of `word`; an unfinished last block is returned as
    the trailing remainder. Shape violations raise CodingError at their offset.
    """
    allowed = set(sigma) if sigma is not None else None
    blocks = []
    position = 0
    size = len(word)
    expected = SEPARATOR_A
    while position < size:
        start = position
        letter = word[position]
        if letter != expected:
            if letter in (SEPARATOR_A, SEPARATOR_B):
                raise CodingError(f"separator {letter} out of order, expected {expected}", position)
            raise CodingError(f"expected separator {expected}, found {letter!r}", position)
        position += 1
        zeros = 0
        while position < size and word[position] == ZERO:
            zeros += 1
            position += 1
        if position == size:
            return CodedPrefix(tuple(blocks), word[start:])
        letter = word[position]
        if zeros == 0:
            raise CodingError("empty run of 0 after separator", position)
        if not is_payload(letter) or (allowed is not None and letter not in allowed):
            raise CodingError(f"expected a payload letter, found {letter!r}", position)
        blocks.append(Block(expected, zeros, letter))
        position += 1
        expected = SEPARATOR_B if expected == SEPARATOR_A else SEPARATOR_A
    return CodedPrefix(tuple(blocks), "")


def first_deviant_block(prefix: CodedPrefix) -> Optional[int]:
    """Least block index i (1-based) with n_i ≠ i, if any."""
    for index, zeros in enumerate(prefix.zero_runs, start=1):
        if zeros != index:
            return index
    return None


def is_code_prefix(word: str) -> bool:
    """Whether `word` is a prefix of some h(x)."""
    expected = canonical_shape()
    for letter in word:
        kind = next(expected)
        if kind == "payload":
            if not is_payload(letter):
                return False
        elif letter != kind:
            return False
    return True


def canonical_shape() -> Iterator[str]:
    for index in itertools.count(1):
        yield separator_for(index)
        for _ in range(index):
            yield ZERO
        yield "payload"


# ============= Shape automaton =============

def build_r_automaton(sigma: Sequence[str]) -> ShapeAutomaton:
    """Deterministic Büchi automaton for A0^{n1}x(1)B0^{n2}x(2)… with every n_i ≥ 1."""
    alphabet = gamma(sigma)
    delta = {("start", SEPARATOR_A): "A.sep"}
    for parity, other in ((SEPARATOR_A, SEPARATOR_B), (SEPARATOR_B, SEPARATOR_A)):
        delta[(f"{parity}.sep", ZERO)] = f"{parity}.zeros"
        delta[(f"{parity}.zeros", ZERO)] = f"{parity}.zeros"
        for letter in sigma:
            delta[(f"{parity}.zeros", letter)] = f"{parity}.payload"
        delta[(f"{parity}.payload", other)] = f"{other}.sep"
    states = ("start", "A.sep", "A.zeros", "A.payload", "B.sep", "B.zeros", "B.payload")
    return ShapeAutomaton(
        alphabet=alphabet,
        states=states,
        initial="start",
        delta=delta,
        accepting=frozenset({"A.payload", "B.payload"}),
    )


# ============= Prefix metric =============

@dataclass(frozen=True)
class Distance:
    """2^{-exponent}, or exactly 0 when the words are equal."""
    exponent: int = 0
    zero: bool = False

    @property
    def value(self) -> Fraction:
        return Fraction(0) if self.zero else Fraction(1, 2 ** self.exponent)

    def __lt__(self, other: "Distance") -> bool:
        return self.value < other.value

    def __str__(self) -> str:
        return "0" if self.zero else f"2^-{self.exponent}"


def letters_of(word: Word) -> Iterator[str]:
    if isinstance(word, str):
        yield from word
    elif isinstance(word, LassoWord):
        yield from word.spoke
        yield from itertools.cycle(word.cycle)
    else:
        for block in word.blocks():
            yield from block.flatten()


def _equal_infinite(u: Word, v: Word) -> Optional[bool]:
    if isinstance(u, LassoWord) and isinstance(v, LassoWord):
        a, b = u.canonical(), v.canonical()
        return a == b
    if isinstance(u, CodedWord) and isinstance(v, CodedWord):
        return u.source.canonical() == v.source.canonical()
    if isinstance(u, str) or isinstance(v, str):
        return None
    # a lasso is never the code of a word: h's zero runs grow without bound
    return False


def prefix_distance(u: Word, v: Word) -> Distance:
    """δ(u, v) = 2^{-n} with n the length of the longest common prefix."""
    if isinstance(u, str) and isinstance(v, str):
        if u == v:
            return Distance(zero=True)
    elif _equal_infinite(u, v):
        return Distance(zero=True)
    common = 0
    for a, b in zip(letters_of(u), letters_of(v)):
        if a != b:
            break
        common += 1
    return Distance(exponent=common)


# ============= Escape languages =============

def escape_witness(word: str) -> Optional[EscapeKind]:
    """The escape language every ω-extension of the finite `word` belongs to, if any."""
    if _deviates_from_opening(word):
        return EscapeKind.L1
    if _has_l2_segment(word):
        return EscapeKind.L2
    return None


def _deviates_from_opening(word: str) -> bool:
    # no extension of the word starts with A·0·Σ·B
    checks = (
        lambda c: c == SEPARATOR_A,
        lambda c: c == ZERO,
        is_payload,
        lambda c: c == SEPARATOR_B,
    )
    return any(not check(letter) for check, letter in zip(checks, word))


def _has_l2_segment(word: str) -> bool:
    size = len(word)
    for start, letter in enumerate(word):
        if letter not in (SEPARATOR_A, SEPARATOR_B):
            continue
        first, position = _zero_run(word, start + 1)
        if first == 0 or position >= size or not is_payload(word[position]):
            continue
        position += 1
        if position >= size or word[position] not in (SEPARATOR_A, SEPARATOR_B):
            continue
        if word[position] == letter:
            continue
        second, position = _zero_run(word, position + 1)
        if second == 0 or position >= size or not is_payload(word[position]):
            continue
        if second <= first:
            return True
    return False


def _zero_run(word: str, position: int) -> Tuple[int, int]:
    count = 0
    while position < len(word) and word[position] == ZERO:
        count += 1
        position += 1
    return count, position


def l2_scan_length(y: LassoWord) -> int:
    # a witnessing segment can be shifted to start inside spoke·cycle and is
    # no longer than two zero runs, each bounded by |spoke| + |cycle|
    span = len(y.spoke) + len(y.cycle)
    return span + 2 * span + 4 + len(y.cycle)


def in_l1(y: LassoWord) -> bool:
    return _deviates_from_opening(y.prefix(4))


def in_l2(y: LassoWord) -> bool:
    return _has_l2_segment(y.prefix(l2_scan_length(y)))


def in_l(y: LassoWord) -> bool:
    return in_l1(y) or in_l2(y)


def classify_lasso(y: LassoWord) -> Region:
    """Region of a Γ-lasso; lassos never lie in h(Σ^ω)."""
    return Region.ESCAPE if in_l(y) else Region.RESIDUAL
