from fastapi import APIRouter

from app.api.deps import domain_errors, load_machine, resolve_bounds
from app.core.config import settings
from app.domain.models import CodedWord, LassoWord
from app.schemas import PlayRequest, PlayResponse
from app.services import wadge_service

router = APIRouter()


@router.post("/play", response_model=PlayResponse)
async def play(request: PlayRequest):
    """
    Play a committed Wadge game against one of the reduction strategies.

    - copy: L(A) against P_A, Player 2 copies through h
    - threecase: P_A against the nested sum of L(A) with empty languages
    """
    a_machine = load_machine(request.automaton)
    counter_bound, cycle_bound, _ = resolve_bounds(request)
    with domain_errors():
        word = LassoWord(request.word.u, request.word.v)
        if request.mode == "copy":
            commit = word
            oracle1 = wadge_service.MachineOracle(a_machine, counter_bound, cycle_bound)
            oracle2 = wadge_service.PetriOracle(a_machine, counter_bound, cycle_bound)
            strategy = wadge_service.strategy_copy_h(a_machine)
        else:
            commit = CodedWord(word) if request.coded else word
            oracle1 = wadge_service.PetriOracle(a_machine, counter_bound, cycle_bound)
            oracle2 = wadge_service.nested_empty_sum(
                wadge_service.MachineOracle(a_machine, counter_bound, cycle_bound)
            )
            strategy = wadge_service.strategy_three_case(a_machine)
        result = wadge_service.play_wadge(
            oracle1, oracle2, strategy, commit, request.horizon or settings.game_horizon
        )
    return PlayResponse(
        rounds=list(result.transcript.lines()),
        player1=str(result.transcript.committed1),
        player2=str(result.transcript.committed2),
        answer1=result.answer1.value,
        answer2=result.answer2.value,
        outcome=result.outcome.value,
    )
