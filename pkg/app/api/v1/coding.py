from fastapi import APIRouter, status

from app.api.deps import domain_errors
from app.domain.models import LassoWord
from app.schemas import (
    BlockOut,
    ClassifyResponse,
    DecodeRequest,
    DecodeResponse,
    EncodeRequest,
    EncodeResponse,
    LassoWordIn,
)
from app.services import coding_service

router = APIRouter()


@router.post("/encode", response_model=EncodeResponse)
async def encode(request: EncodeRequest):
    """Coded prefix of h(u·v^ω) with the given number of blocks."""
    with domain_errors():
        prefix = coding_service.encode_lasso(LassoWord(request.u, request.v), request.blocks)
    return EncodeResponse(prefix=prefix.flatten(), zero_runs=list(prefix.zero_runs))


@router.post("/decode", response_model=DecodeResponse)
async def decode(request: DecodeRequest):
    with domain_errors(status.HTTP_422_UNPROCESSABLE_ENTITY):
        prefix = coding_service.decode_prefix(request.word)
    return DecodeResponse(
        blocks=[
            BlockOut(separator=b.separator, zeros=b.zeros, payload=b.payload)
            for b in prefix.blocks
        ],
        trailing=prefix.trailing,
        first_deviant_block=coding_service.first_deviant_block(prefix),
    )


@router.post("/classify", response_model=ClassifyResponse)
async def classify(word: LassoWordIn):
    """Membership of a Γ-lasso in the escape languages."""
    with domain_errors():
        y = LassoWord(word.u, word.v)
        return ClassifyResponse(
            in_l1=coding_service.in_l1(y),
            in_l2=coding_service.in_l2(y),
            in_l=coding_service.in_l(y),
            region=coding_service.classify_lasso(y).value,
        )
