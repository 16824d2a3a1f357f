"""
Command-line front end
Reports go to stdout, logs to stderr. Exit codes: 0 accept / success,
1 reject, 2 unknown, 3 error.
"""
from pathlib import Path
from typing import List, Optional, Sequence
import argparse
import logging
import sys

from app.core.config import settings
from app.core.exceptions import AutomatonError
from app.core.logging import configure_logging
from app.domain.models import (
    CodedWord,
    LassoWord,
    Outcome,
    RESERVED_LETTERS,
    VerdictKind,
)
from app.services import (
    coding_service,
    construction_service,
    fuzz_service,
    membership_service,
    wadge_service,
)
from app.utils.automaton_format import parse_automaton, serialize_automaton

logger = logging.getLogger(__name__)

EXIT_ACCEPT = 0
EXIT_REJECT = 1
EXIT_UNKNOWN = 2
EXIT_ERROR = 3

VERDICT_EXIT = {
    VerdictKind.ACCEPT: EXIT_ACCEPT,
    VerdictKind.REJECT: EXIT_REJECT,
    VerdictKind.UNKNOWN: EXIT_UNKNOWN,
}


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_ERROR, f"{self.prog}: error: {message}\n")


def _load(path: str):
    return parse_automaton(Path(path).read_text(encoding="utf-8"))


def _lasso(args) -> LassoWord:
    return LassoWord(args.u, args.v)


def _out(lines: Sequence[str]) -> None:
    for line in lines:
        print(line)


# ============= Commands =============

def cmd_validate(args) -> int:
    machine = _load(args.file)
    kind = machine.acceptance.kind.value
    blind = sum(machine.blind)
    print(
        f"ok: {len(machine.states)} states, {machine.counters} counters ({blind} blind), "
        f"{len(machine.transitions)} transitions, {kind}"
    )
    return EXIT_ACCEPT


def cmd_translate(args) -> int:
    machine = _load(args.file)
    if args.emit == "b":
        result = construction_service.build_b(machine)
    elif args.emit == "escape":
        result = construction_service.build_lescape(machine.alphabet)
    else:
        result = construction_service.build_pa(machine)
    text = serialize_automaton(result, comment=f"{args.emit} from {Path(args.file).name}")
    if args.output:
        Path(args.output).write_text(text, encoding="utf-8")
        logger.info("wrote %s (%d states)", args.output, len(result.states))
    else:
        sys.stdout.write(text)
    return EXIT_ACCEPT


def cmd_encode(args) -> int:
    print(coding_service.encode_lasso(_lasso(args), args.blocks).flatten())
    return EXIT_ACCEPT


def cmd_decode(args) -> int:
    prefix = coding_service.decode_prefix(args.word)
    for index, block in enumerate(prefix.blocks, start=1):
        print(f"block {index}: {block.separator} zeros={block.zeros} payload={block.payload}")
    print(f"remainder: {prefix.trailing or '-'}")
    deviant = coding_service.first_deviant_block(prefix)
    print(f"first deviant block: {deviant if deviant is not None else 'none'}")
    return EXIT_ACCEPT


def cmd_classify(args) -> int:
    y = _lasso(args)
    print(f"inL1 {str(coding_service.in_l1(y)).lower()}")
    print(f"inL2 {str(coding_service.in_l2(y)).lower()}")
    print(f"inL {str(coding_service.in_l(y)).lower()}")
    print(f"region {coding_service.classify_lasso(y).value}")
    return EXIT_ACCEPT


def cmd_member(args) -> int:
    machine = _load(args.file)
    x = _lasso(args)
    if not args.coded:
        verdict = membership_service.lasso_member(
            machine, x, args.counter_bound, args.cycles, args.budget
        )
        print(f"{verdict.describe()} explored={verdict.explored}")
        if verdict.witness is not None:
            stem, cycle = verdict.witness.descriptor()
            print(f"stem: {' '.join(stem) or '-'}")
            print(f"cycle: {' '.join(cycle)}")
        return VERDICT_EXIT[verdict.kind]

    if RESERVED_LETTERS & set(machine.alphabet):
        report = membership_service.coded_member(machine, x, args.blocks, node_budget=args.budget)
        a_machine = None
    else:
        a_machine = machine
        b_machine = construction_service.build_b(machine)
        report = membership_service.coded_member(
            b_machine, x, args.blocks, a_machine=a_machine, node_budget=args.budget
        )
    for index, survivors in enumerate(report.survivors, start=1):
        print(f"block {index} survivors={survivors}")
    flag = " truncated" if report.truncated else ""
    print(f"max visits {report.max_visits} N={report.blocks}{flag}")
    if a_machine is not None:
        print(f"projections {len(report.projections)}")
    if report.accepting_lasso is not None:
        stem, cycle = report.accepting_lasso.descriptor()
        print(f"ACCEPT A-cycle: {' '.join(cycle)}")
        return EXIT_ACCEPT
    if not report.survived and not report.truncated:
        print("REJECT no run survives")
        return EXIT_REJECT
    print("UNKNOWN")
    return EXIT_UNKNOWN


def cmd_certify(args) -> int:
    a_machine = _load(args.file)
    x = _lasso(args)
    verdict = membership_service.lasso_member(a_machine, x, args.counter_bound, args.cycles)
    if verdict.kind is not VerdictKind.ACCEPT:
        print(f"{verdict.describe()} no accepting A-run to certify")
        return VERDICT_EXIT[verdict.kind]
    cert = construction_service.build_canonical_certificate(a_machine, verdict.witness, args.blocks)
    _out(cert.lines())
    b_machine = construction_service.build_b(a_machine)
    ok = membership_service.check_certificate(b_machine, x, cert)
    print(f"check {'ok' if ok else 'failed'}")
    return EXIT_ACCEPT if ok else EXIT_REJECT


def cmd_play(args) -> int:
    a_machine = _load(args.file)
    counter_bound, cycles = args.counter_bound, args.cycles
    if args.mode == "copy":
        commit = _lasso(args)
        oracle1 = wadge_service.MachineOracle(a_machine, counter_bound, cycles)
        oracle2 = wadge_service.PetriOracle(a_machine, counter_bound, cycles)
        strategy = wadge_service.strategy_copy_h(a_machine)
    else:
        commit = CodedWord(_lasso(args)) if args.coded else _lasso(args)
        oracle1 = wadge_service.PetriOracle(a_machine, counter_bound, cycles)
        oracle2 = wadge_service.nested_empty_sum(
            wadge_service.MachineOracle(a_machine, counter_bound, cycles)
        )
        strategy = wadge_service.strategy_three_case(a_machine)
    result = wadge_service.play_wadge(oracle1, oracle2, strategy, commit, args.horizon)
    _out(result.transcript.lines())
    print(f"P1 committed {result.transcript.committed1} {result.answer1.value}")
    print(f"P2 committed {result.transcript.committed2} {result.answer2.value}")
    print(f"outcome {result.outcome.value}")
    return {
        Outcome.PLAYER_2: EXIT_ACCEPT,
        Outcome.PLAYER_1: EXIT_REJECT,
        Outcome.UNKNOWN: EXIT_UNKNOWN,
    }[result.outcome]


def cmd_fuzz(args) -> int:
    results = fuzz_service.run_fuzz(
        states=args.states,
        letters=args.letters,
        seed=args.seed,
        trials=args.trials,
        workers=args.workers,
        counter_bound=args.counter_bound,
        cycle_bound=args.cycles,
        blocks=args.blocks,
        suites=args.suite,
    )
    sys.stdout.write(
        fuzz_service.format_report(
            results,
            seed=args.seed,
            states=args.states,
            letters=args.letters,
            counter_bound=args.counter_bound,
            cycle_bound=args.cycles,
            blocks=args.blocks,
        )
    )
    return EXIT_REJECT if fuzz_service.mismatches(results) else EXIT_ACCEPT


def cmd_serve(args) -> int:
    import uvicorn

    uvicorn.run("app.main:app", host=args.host, port=args.port, reload=settings.is_development)
    return EXIT_ACCEPT


# ============= Parser =============

def _bounds(parser: argparse.ArgumentParser) -> None:
    parser.add_argument("--counter-bound", type=int, default=settings.counter_bound, help="C")
    parser.add_argument("--cycles", type=int, default=settings.cycle_bound, help="K")


def _word(parser: argparse.ArgumentParser) -> None:
    parser.add_argument("--u", default="", help="spoke of the lasso u·v^ω")
    parser.add_argument("--v", required=True, help="cycle of the lasso u·v^ω")


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="blindcounters", description=__doc__)
    parser.add_argument("--log-level", default=settings.log_level)
    commands = parser.add_subparsers(dest="command", required=True)

    p = commands.add_parser("validate", help="parse and check an automaton file")
    p.add_argument("file")
    p.set_defaults(handler=cmd_validate)

    p = commands.add_parser("translate", help="emit B, the escape machine or P_A")
    p.add_argument("file")
    p.add_argument("--emit", choices=("b", "escape", "pa"), required=True)
    p.add_argument("-o", "--output")
    p.set_defaults(handler=cmd_translate)

    p = commands.add_parser("encode", help="print the coded prefix of u·v^ω")
    _word(p)
    p.add_argument("--blocks", type=int, required=True)
    p.set_defaults(handler=cmd_encode)

    p = commands.add_parser("decode", help="parse a coded prefix")
    p.add_argument("word")
    p.set_defaults(handler=cmd_decode)

    p = commands.add_parser("classify", help="escape-language membership of a Γ-lasso")
    _word(p)
    p.set_defaults(handler=cmd_classify)

    p = commands.add_parser("member", help="membership of u·v^ω or of its code")
    p.add_argument("file")
    _word(p)
    p.add_argument("--coded", action="store_true")
    p.add_argument("--blocks", type=int, default=settings.coded_blocks, help="N")
    p.add_argument("--budget", type=int, default=settings.node_budget)
    _bounds(p)
    p.set_defaults(handler=cmd_member)

    p = commands.add_parser("certify", help="build and check a canonical run certificate")
    p.add_argument("file")
    _word(p)
    p.add_argument("--blocks", type=int, required=True)
    _bounds(p)
    p.set_defaults(handler=cmd_certify)

    p = commands.add_parser("play", help="play a committed Wadge game")
    p.add_argument("file")
    p.add_argument("--mode", choices=("copy", "threecase"), required=True)
    _word(p)
    p.add_argument("--coded", action="store_true", help="Player 1 commits to h(u·v^ω)")
    p.add_argument("--horizon", type=int, default=settings.game_horizon)
    _bounds(p)
    p.set_defaults(handler=cmd_play)

    p = commands.add_parser("fuzz", help="random cross-check suites")
    p.add_argument("--states", type=int, default=settings.fuzz_states)
    p.add_argument("--letters", type=int, default=settings.fuzz_letters)
    p.add_argument("--seed", type=int, default=settings.fuzz_seed)
    p.add_argument("--trials", type=int, default=settings.fuzz_trials)
    p.add_argument("--workers", type=int, default=settings.workers)
    p.add_argument("--blocks", type=int, default=settings.coded_blocks)
    p.add_argument("--suite", action="append", choices=sorted(fuzz_service.SUITES))
    _bounds(p)
    p.set_defaults(handler=cmd_fuzz)

    p = commands.add_parser("serve", help="run the HTTP API")
    p.add_argument("--host", default="127.0.0.1")
    p.add_argument("--port", type=int, default=8000)
    p.set_defaults(handler=cmd_serve)
    return parser


def main(argv: Optional[List[str]] = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    configure_logging(args.log_level)
    try:
        return args.handler(args)
    except (AutomatonError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_ERROR


if __name__ == "__main__":
    sys.exit(main())
