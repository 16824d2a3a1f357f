"""
Random instances and cross-check suites
Every trial draws from its own seed, taken up front from the master seed, so
the report does not depend on how many workers run the trials.
"""
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from typing import Callable, Dict, List, Optional, Sequence, Tuple
import logging
import random
import string

from app.core.config import settings
from app.core.exceptions import RunError
from app.domain.models import (
    Acceptance,
    Block,
    CodedPrefix,
    CodedWord,
    CounterMachine,
    Guard,
    LassoWord,
    Outcome,
    Transition,
    VerdictKind,
)
from app.services import (
    coding_service,
    construction_service,
    machine_service,
    membership_service,
    wadge_service,
)

logger = logging.getLogger(__name__)

LETTERS = string.ascii_lowercase


# ============= Generators =============

def random_machine(
    rng: random.Random,
    states: int,
    letters: int,
    counters: int = 1,
    blind: Optional[Sequence[bool]] = None,
    density: Optional[float] = None,
    accept_probability: Optional[float] = None,
    muller: bool = False,
) -> CounterMachine:
    """A well-formed random machine; guards respect blindness, Z never meets -1."""
    density = settings.fuzz_density if density is None else density
    accept_probability = (
        settings.fuzz_accept_probability if accept_probability is None else accept_probability
    )
    blind = tuple(blind) if blind is not None else (False,) * counters
    names = tuple(f"q{i}" for i in range(states))
    alphabet = tuple(LETTERS[:letters])
    transitions = []
    for source in names:
        for letter in alphabet:
            for target in names:
                if rng.random() >= density:
                    continue
                guards, effects = [], []
                for m in range(counters):
                    guard = Guard.ANY if blind[m] else rng.choice(list(Guard))
                    options = (0, 1) if guard is Guard.ZERO else (-1, 0, 1)
                    guards.append(guard)
                    effects.append(rng.choice(options))
                transitions.append(
                    Transition(source, letter, tuple(guards), tuple(effects), target)
                )

    if muller:
        families = []
        if rng.random() < accept_probability:
            families.append(frozenset(s for s in names if rng.random() < 0.5) or {names[0]})
        acceptance = Acceptance.muller(families)
    else:
        final = set()
        if rng.random() < accept_probability:
            final = {s for s in names if rng.random() < 0.5} or {rng.choice(names)}
        acceptance = Acceptance.buchi(final)
    return CounterMachine(
        states=names,
        alphabet=alphabet,
        counters=counters,
        blind=blind,
        initial=names[0],
        transitions=tuple(transitions),
        acceptance=acceptance,
    )


def random_word(rng: random.Random, alphabet: Sequence[str], length: int) -> str:
    return "".join(rng.choice(alphabet) for _ in range(length))


def random_lasso(rng: random.Random, alphabet: Sequence[str], max_total: int = 5) -> LassoWord:
    """spoke·cycle^ω with |spoke| + |cycle| <= max_total and a nonempty cycle."""
    cycle = rng.randint(1, max_total)
    spoke = rng.randint(0, max_total - cycle)
    return LassoWord(random_word(rng, alphabet, spoke), random_word(rng, alphabet, cycle))


def random_gamma_lasso(rng: random.Random, sigma: Sequence[str], max_total: int = 6) -> LassoWord:
    """A Γ-lasso; half of them start with a well-formed coded prefix."""
    gamma = coding_service.gamma(sigma)
    if rng.random() < 0.5:
        return random_lasso(rng, gamma, max_total)
    blocks = rng.randint(1, 3)
    spoke = coding_service.encode_prefix(random_word(rng, sigma, blocks), blocks).flatten()
    return LassoWord(spoke, random_word(rng, gamma, rng.randint(1, max_total)))


# ============= Suites =============

@dataclass(frozen=True)
class TrialResult:
    """agree / mismatch / unknown, plus a detail line for the report."""
    suite: str
    trial: int
    status: str
    detail: str = ""


@dataclass(frozen=True)
class FuzzOptions:
    states: int
    letters: int
    counter_bound: int
    cycle_bound: int
    blocks: int


Suite = Callable[[random.Random, FuzzOptions], Tuple[str, str]]


def _oracle_trial(rng: random.Random, options: FuzzOptions) -> Tuple[str, str]:
    machine = random_machine(rng, options.states, options.letters, counters=rng.randint(0, 2))
    word = random_word(rng, machine.alphabet, rng.randint(0, 8))
    exploration = machine_service.run_prefixes(machine, word, bound=len(word))
    explored = {(run.last, sum(count for _, count in run.visits)) for run in exploration.runs}
    brute = set(membership_service.brute_force_oracle(machine, word))
    if explored == brute:
        return "agree", ""
    return "mismatch", f"word={word!r} explored={len(explored)} brute={len(brute)}"


def _coding_trial(rng: random.Random, options: FuzzOptions) -> Tuple[str, str]:
    sigma = LETTERS[: options.letters]
    x = random_word(rng, sigma, rng.randint(1, 20))
    blocks = rng.randint(0, len(x))
    prefix = coding_service.encode_prefix(x, blocks)
    decoded = coding_service.decode_prefix(prefix.flatten())
    if decoded.payload != x[:blocks] or coding_service.first_deviant_block(decoded) is not None:
        return "mismatch", f"x={x!r} blocks={blocks}"
    if len(sigma) < 2:
        return "agree", ""
    # words agreeing on n letters have codes agreeing on more than n letters
    n = rng.randrange(len(x))
    y = x[:n] + rng.choice([c for c in sigma if c != x[n]]) + x[n + 1 :]
    distance = coding_service.prefix_distance(
        coding_service.encode_prefix(x, len(x)).flatten(),
        coding_service.encode_prefix(y, len(y)).flatten(),
    )
    if distance.zero or distance.exponent <= n:
        return "mismatch", f"continuity x={x!r} y={y!r} distance={distance}"
    return "agree", ""


def _translation_trial(rng: random.Random, options: FuzzOptions) -> Tuple[str, str]:
    a_machine = random_machine(rng, options.states, options.letters)
    x = random_lasso(rng, a_machine.alphabet)
    verdict = membership_service.lasso_member(
        a_machine, x, options.counter_bound, options.cycle_bound
    )
    if not verdict.decisive:
        return "unknown", f"x={x} {verdict.describe()}"
    b_machine = construction_service.build_b(a_machine)
    try:
        if verdict.kind is VerdictKind.ACCEPT:
            return _translated_member(a_machine, b_machine, x, verdict.witness, options)
        return _translated_non_member(a_machine, b_machine, x, options)
    except RunError as exc:
        return "mismatch", f"x={x} {exc}"


def _translated_member(a_machine, b_machine, x, witness, options) -> Tuple[str, str]:
    cert = construction_service.build_canonical_certificate(a_machine, witness, options.blocks)
    if not membership_service.check_certificate(b_machine, x, cert):
        return "mismatch", f"x={x} canonical certificate rejected"
    # a longer horizon and more kept histories before giving up on the A-cycle
    attempts = ((options.blocks, None), (2 * options.blocks, 4 * settings.history_cap))
    for blocks, history_cap in attempts:
        report = membership_service.coded_member(
            b_machine, x, blocks, a_machine=a_machine, history_cap=history_cap
        )
        if report.accepting_lasso is not None:
            return "agree", ""
    if not report.survived and not report.truncated:
        return "mismatch", f"x={x} member but no run of B survives {blocks} blocks"
    steps = len(witness.configurations) - 1
    if steps > blocks:
        return "unknown", f"x={x} witness of {steps} steps exceeds N={blocks} blocks"
    return "mismatch", f"x={x} member but no A-cycle within N={blocks} blocks"


def _translated_non_member(a_machine, b_machine, x, options) -> Tuple[str, str]:
    report = membership_service.coded_member(b_machine, x, options.blocks, a_machine=a_machine)
    if report.accepting_lasso is not None:
        cycle = report.accepting_lasso.descriptor()
        return "mismatch", f"x={x} rejected but B yields A-cycle {cycle}"
    # counters of A stay below the prefix length, so this bound clips nothing
    prefix = x.prefix(options.blocks)
    a_runs = machine_service.run_prefixes(a_machine, prefix, bound=len(prefix))
    if not a_runs.runs and report.survived:
        return "mismatch", f"x={x} A has no run on {prefix!r} but B survives"
    return "agree", ""


def _escape_trial(rng: random.Random, options: FuzzOptions) -> Tuple[str, str]:
    sigma = LETTERS[: options.letters]
    y = random_gamma_lasso(rng, sigma)
    machine = construction_service.build_lescape(sigma)
    verdict = membership_service.lasso_member(
        machine, y, options.counter_bound, options.cycle_bound
    )
    if not verdict.decisive:
        return "unknown", f"y={y} {verdict.describe()}"
    if (verdict.kind is VerdictKind.ACCEPT) == coding_service.in_l(y):
        return "agree", ""
    return "mismatch", f"y={y} machine={verdict.kind.value} inL={coding_service.in_l(y)}"


def _deviation_trial(rng: random.Random, options: FuzzOptions) -> Tuple[str, str]:
    a_machine = random_machine(rng, options.states, options.letters)
    b_machine = construction_service.build_b(a_machine)
    deviant = rng.randint(2, 4)
    runs = list(range(1, deviant)) + [deviant + rng.randint(1, 2)]
    runs += [rng.randint(1, 5) for _ in range(rng.randint(0, 1))]
    x = random_word(rng, a_machine.alphabet, len(runs))
    prefix = CodedPrefix(
        tuple(
            Block(coding_service.separator_for(i), n, x[i - 1])
            for i, n in enumerate(runs, start=1)
        )
    )
    exploration = membership_service.explore_blocks(b_machine, prefix)
    survivors = len(exploration.frontiers[deviant - 1])
    if survivors == 0:
        return "agree", ""
    return "mismatch", f"runs={runs} survivors={survivors} at block {deviant}"


def _wadge_trial(rng: random.Random, options: FuzzOptions) -> Tuple[str, str]:
    a_machine = random_machine(rng, options.states, options.letters)
    x = random_lasso(rng, a_machine.alphabet)
    oracle1 = wadge_service.MachineOracle(a_machine, options.counter_bound, options.cycle_bound)
    oracle2 = wadge_service.PetriOracle(
        a_machine, options.counter_bound, options.cycle_bound, options.blocks
    )
    result = wadge_service.play_wadge(
        oracle1, oracle2, wadge_service.strategy_copy_h(a_machine), x, settings.game_horizon
    )
    if result.outcome is Outcome.PLAYER_2:
        return "agree", ""
    if result.outcome is Outcome.UNKNOWN:
        return "unknown", f"x={x} C={options.counter_bound} K={options.cycle_bound}"
    return "mismatch", f"x={x} P1 wins: A {result.answer1.value}, B {result.answer2.value}"


def _three_case_trial(rng: random.Random, options: FuzzOptions) -> Tuple[str, str]:
    a_machine = random_machine(rng, options.states, options.letters)
    sigma = a_machine.alphabet
    if rng.random() < 0.5:
        commit = CodedWord(random_lasso(rng, sigma))
    else:
        commit = random_gamma_lasso(rng, sigma)
    oracle1 = wadge_service.PetriOracle(
        a_machine, options.counter_bound, options.cycle_bound, options.blocks
    )
    oracle2 = wadge_service.nested_empty_sum(
        wadge_service.MachineOracle(a_machine, options.counter_bound, options.cycle_bound)
    )
    strategy = wadge_service.strategy_three_case(a_machine)
    result = wadge_service.play_wadge(oracle1, oracle2, strategy, commit, settings.game_horizon)
    if result.outcome is Outcome.PLAYER_2:
        return "agree", ""
    if result.outcome is Outcome.UNKNOWN:
        return "unknown", f"commit={commit} C={options.counter_bound} K={options.cycle_bound}"
    return "mismatch", (
        f"commit={commit} P1 wins: P_A {result.answer1.value}, sum {result.answer2.value}"
    )


SUITES: Dict[str, Suite] = {
    "oracle": _oracle_trial,
    "coding": _coding_trial,
    "translation": _translation_trial,
    "escape": _escape_trial,
    "deviation": _deviation_trial,
    "copy-h": _wadge_trial,
    "three-case": _three_case_trial,
}


def _run_trial(job: Tuple[str, int, int, FuzzOptions]) -> TrialResult:
    suite, trial, seed, options = job
    status, detail = SUITES[suite](random.Random(seed), options)
    return TrialResult(suite, trial, status, detail)


def run_fuzz(
    states: Optional[int] = None,
    letters: Optional[int] = None,
    seed: Optional[int] = None,
    trials: Optional[int] = None,
    workers: Optional[int] = None,
    counter_bound: Optional[int] = None,
    cycle_bound: Optional[int] = None,
    blocks: Optional[int] = None,
    suites: Optional[Sequence[str]] = None,
) -> List[TrialResult]:
    options = FuzzOptions(
        states=states or settings.fuzz_states,
        letters=letters or settings.fuzz_letters,
        counter_bound=counter_bound or settings.counter_bound,
        cycle_bound=cycle_bound or settings.cycle_bound,
        blocks=blocks or settings.coded_blocks,
    )
    master = random.Random(settings.fuzz_seed if seed is None else seed)
    count = settings.fuzz_trials if trials is None else trials
    names = list(suites) if suites else list(SUITES)
    jobs = [
        (name, trial, master.getrandbits(64), options)
        for name in names
        for trial in range(count)
    ]
    pool_size = workers or settings.workers
    logger.info("fuzz: %d jobs on %d workers", len(jobs), pool_size)
    if pool_size <= 1:
        return [_run_trial(job) for job in jobs]
    with ThreadPoolExecutor(max_workers=pool_size) as pool:
        return list(pool.map(_run_trial, jobs))


def format_report(
    results: Sequence[TrialResult],
    seed: int,
    states: int,
    letters: int,
    counter_bound: int,
    cycle_bound: int,
    blocks: int,
) -> str:
    lines = [
        f"fuzz seed={seed} states={states} letters={letters} "
        f"C={counter_bound} K={cycle_bound} N={blocks}"
    ]
    suites = []
    for result in results:
        if result.suite not in suites:
            suites.append(result.suite)
    for suite in suites:
        rows = [r for r in results if r.suite == suite]
        counts = {
            status: sum(1 for r in rows if r.status == status)
            for status in ("agree", "mismatch", "unknown")
        }
        rate = 100.0 * counts["unknown"] / len(rows) if rows else 0.0
        lines.append(
            f"suite {suite}: trials={len(rows)} agree={counts['agree']} "
            f"mismatch={counts['mismatch']} unknown={counts['unknown']} ({rate:.1f}%)"
        )
    for result in results:
        if result.status != "agree":
            lines.append(f"{result.status} {result.suite} #{result.trial}: {result.detail}")
    return "\n".join(lines) + "\n"


def mismatches(results: Sequence[TrialResult]) -> int:
    return sum(1 for r in results if r.status == "mismatch")
