"""
API Dependencies
Automaton parsing and domain-error translation for FastAPI endpoints
"""
from contextlib import contextmanager
import logging

from fastapi import HTTPException, status

from app.core.config import settings
from app.core.exceptions import AutomatonError, ParseError
from app.domain.models import AcceptanceKind, CounterMachine
from app.schemas import Bounds, MachineSummary
from app.utils.automaton_format import parse_automaton

logger = logging.getLogger(__name__)


def load_machine(text: str) -> CounterMachine:
    """Parse a request automaton; parse failures are the client's fault."""
    try:
        return parse_automaton(text)
    except ParseError as exc:
        raise HTTPException(
            status_code=status.HTTP_422_UNPROCESSABLE_ENTITY,
            detail=str(exc),
        ) from None


@contextmanager
def domain_errors(status_code: int = status.HTTP_400_BAD_REQUEST):
    """Map AutomatonError raised inside the block to an HTTP error."""
    try:
        yield
    except AutomatonError as exc:
        logger.info("rejected request: %s", exc)
        raise HTTPException(
            status_code=status_code,
            detail=str(exc),
        ) from None


def resolve_bounds(bounds: Bounds):
    return (
        settings.counter_bound if bounds.counter_bound is None else bounds.counter_bound,
        bounds.cycle_bound or settings.cycle_bound,
        bounds.node_budget or settings.node_budget,
    )


def summarize(machine: CounterMachine) -> MachineSummary:
    return MachineSummary(
        states=len(machine.states),
        alphabet=list(machine.alphabet),
        counters=machine.counters,
        blind=[m for m, flag in enumerate(machine.blind) if flag],
        transitions=len(machine.transitions),
        acceptance=(
            "muller" if machine.acceptance.kind is AcceptanceKind.MULLER else "buchi"
        ),
    )
