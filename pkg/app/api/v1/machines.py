from fastapi import APIRouter

from app.api.deps import domain_errors, load_machine, summarize
from app.schemas import MachineIn, MachineSummary, TranslateRequest, TranslateResponse
from app.services import construction_service
from app.utils.automaton_format import serialize_automaton

router = APIRouter()


@router.post("/validate", response_model=MachineSummary)
async def validate_machine(request: MachineIn):
    """Parse and check an automaton; 422 names the offending line."""
    return summarize(load_machine(request.automaton))


@router.post("/translate", response_model=TranslateResponse)
async def translate_machine(request: TranslateRequest):
    """
    Build one of the derived machines from a 1-counter blind Büchi machine.

    - b: the 4-blind-counter machine for h(L(A))
    - escape: the machine for the escape languages over A's alphabet
    - pa: the union of both
    """
    machine = load_machine(request.automaton)
    with domain_errors():
        if request.emit == "b":
            result = construction_service.build_b(machine)
        elif request.emit == "escape":
            result = construction_service.build_lescape(machine.alphabet)
        else:
            result = construction_service.build_pa(machine)
    return TranslateResponse(summary=summarize(result), automaton=serialize_automaton(result))
