from pydantic import BaseModel, Field, field_validator
from typing import Optional, List


# ============= Word Schemas =============

class LassoWordIn(BaseModel):
    """The ultimately periodic word u·v^ω."""
    u: str = ""
    v: str = Field(..., min_length=1)


class EncodeRequest(LassoWordIn):
    blocks: int = Field(..., ge=0, le=200)


class EncodeResponse(BaseModel):
    prefix: str
    zero_runs: List[int]


class DecodeRequest(BaseModel):
    word: str


class BlockOut(BaseModel):
    separator: str
    zeros: int
    payload: str


class DecodeResponse(BaseModel):
    blocks: List[BlockOut]
    trailing: str
    first_deviant_block: Optional[int] = None


class ClassifyResponse(BaseModel):
    in_l1: bool
    in_l2: bool
    in_l: bool
    region: str


# ============= Machine Schemas =============

class MachineIn(BaseModel):
    """An automaton in the text format accepted by the CLI."""
    automaton: str = Field(..., min_length=1)


class MachineSummary(BaseModel):
    states: int
    alphabet: List[str]
    counters: int
    blind: List[int]
    transitions: int
    acceptance: str


class TranslateRequest(MachineIn):
    emit: str = Field(..., pattern="^(b|escape|pa)$")


class TranslateResponse(BaseModel):
    summary: MachineSummary
    automaton: str


# ============= Membership Schemas =============

class Bounds(BaseModel):
    counter_bound: Optional[int] = Field(None, ge=0)
    cycle_bound: Optional[int] = Field(None, ge=1)
    node_budget: Optional[int] = Field(None, ge=1)


class MemberRequest(MachineIn, Bounds):
    word: LassoWordIn


class CodedMemberRequest(MemberRequest):
    blocks: Optional[int] = Field(None, ge=1, le=200)


class RunOut(BaseModel):
    stem: List[str]
    cycle: List[str]


class MemberResponse(BaseModel):
    verdict: str
    reason: Optional[str] = None
    bounds: dict
    explored: int = 0
    witness: Optional[RunOut] = None
    survivors: Optional[List[int]] = None
    max_visits: Optional[int] = None
    truncated: bool = False


class CertifyRequest(MachineIn, Bounds):
    word: LassoWordIn
    blocks: int = Field(..., ge=0, le=200)


class CertifyResponse(BaseModel):
    verdict: str
    blocks: List[str] = []
    valid: Optional[bool] = None


# ============= Game Schemas =============

class PlayRequest(MachineIn, Bounds):
    mode: str = Field(..., pattern="^(copy|threecase)$")
    word: LassoWordIn
    coded: bool = False
    horizon: Optional[int] = Field(None, ge=1, le=500)

    @field_validator("coded")
    @classmethod
    def coded_only_for_threecase(cls, value, info):
        if value and info.data.get("mode") == "copy":
            raise ValueError("coded commitments are only played in threecase mode")
        return value


class PlayResponse(BaseModel):
    rounds: List[str]
    player1: str
    player2: str
    answer1: str
    answer2: str
    outcome: str
