from fastapi import APIRouter

from app.api.deps import domain_errors, load_machine, resolve_bounds
from app.domain.models import LassoWord, RESERVED_LETTERS, VerdictKind
from app.core.config import settings
from app.schemas import (
    CertifyRequest,
    CertifyResponse,
    CodedMemberRequest,
    MemberRequest,
    MemberResponse,
    RunOut,
)
from app.services import construction_service, membership_service

router = APIRouter()


def _run_out(run) -> RunOut:
    stem, cycle = run.descriptor()
    return RunOut(stem=list(stem), cycle=list(cycle))


@router.post("/lasso", response_model=MemberResponse)
async def lasso_member(request: MemberRequest):
    """Bounded membership of u·v^ω; Accept carries a verified lasso run."""
    machine = load_machine(request.automaton)
    counter_bound, cycle_bound, budget = resolve_bounds(request)
    with domain_errors():
        x = LassoWord(request.word.u, request.word.v)
        verdict = membership_service.lasso_member(machine, x, counter_bound, cycle_bound, budget)
    return MemberResponse(
        verdict=verdict.kind.value,
        reason=verdict.reason.value if verdict.reason else None,
        bounds=dict(verdict.bounds),
        explored=verdict.explored,
        witness=_run_out(verdict.witness) if verdict.witness is not None else None,
    )


@router.post("/coded", response_model=MemberResponse)
async def coded_member(request: CodedMemberRequest):
    """
    Block-synchronized membership of h(u·v^ω).

    A machine over Σ is replaced by the 4-counter machine built from it and
    the surviving runs are projected back; Accept means an extracted A-run
    closes an F-cycle.
    """
    machine = load_machine(request.automaton)
    _, _, budget = resolve_bounds(request)
    blocks = request.blocks or settings.coded_blocks
    with domain_errors():
        x = LassoWord(request.word.u, request.word.v)
        if RESERVED_LETTERS & set(machine.alphabet):
            report = membership_service.coded_member(machine, x, blocks, node_budget=budget)
        else:
            report = membership_service.coded_member(
                construction_service.build_b(machine),
                x,
                blocks,
                a_machine=machine,
                node_budget=budget,
            )
    if report.accepting_lasso is not None:
        kind = VerdictKind.ACCEPT
    elif not report.survived and not report.truncated:
        kind = VerdictKind.REJECT
    else:
        kind = VerdictKind.UNKNOWN
    return MemberResponse(
        verdict=kind.value,
        reason="horizon" if kind is VerdictKind.UNKNOWN else None,
        bounds={"N": blocks},
        witness=_run_out(report.accepting_lasso) if report.accepting_lasso else None,
        survivors=list(report.survivors),
        max_visits=report.max_visits,
        truncated=report.truncated,
    )


@router.post("/certify", response_model=CertifyResponse)
async def certify(request: CertifyRequest):
    """Canonical run certificate of the 4-counter machine on h(u·v^ω)."""
    a_machine = load_machine(request.automaton)
    counter_bound, cycle_bound, budget = resolve_bounds(request)
    with domain_errors():
        x = LassoWord(request.word.u, request.word.v)
        verdict = membership_service.lasso_member(a_machine, x, counter_bound, cycle_bound, budget)
        if verdict.kind is not VerdictKind.ACCEPT:
            return CertifyResponse(verdict=verdict.kind.value)
        cert = construction_service.build_canonical_certificate(
            a_machine, verdict.witness, request.blocks
        )
        valid = membership_service.check_certificate(
            construction_service.build_b(a_machine), x, cert
        )
    return CertifyResponse(verdict=verdict.kind.value, blocks=list(cert.lines()), valid=valid)
