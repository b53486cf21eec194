"""Pydantic request/response models for the analysis service.

Net documents travel as plain JSON objects (the net schema is validated by
the model layer, which reports precise field paths); rationals are "p/q"
strings in responses.
"""

from __future__ import annotations

from typing import Any, Optional, Union

from pydantic import BaseModel, Field


class NetRequest(BaseModel):
    net: dict
    max_states: Optional[int] = Field(default=None, ge=1)


class PairRequest(BaseModel):
    net_a: dict
    net_b: dict
    max_states: Optional[int] = Field(default=None, ge=1)


class TraceEqRequest(PairRequest):
    depth: int = Field(default=6, ge=0)
    key: str = Field(default="sj", pattern="^(sj|re)$")


class TracesRequest(NetRequest):
    depth: int = Field(default=6, ge=0)
    key: str = Field(default="sj", pattern="^(sj|re)$")


class SfmRequest(NetRequest):
    xmax: float = Field(default=10.0, gt=0)
    points: int = Field(default=101, ge=2)


class QuotientRequest(NetRequest):
    verify: bool = True


class CheckRequest(NetRequest):
    dialect: str = Field(pattern="^(flt|flb)$")
    formula: str
    sojourns: Optional[list[str]] = None
    rates: Optional[list[str]] = None


class MeasureSpec(BaseModel):
    kind: str
    params: dict = Field(default_factory=dict)


class MeasuresRequest(NetRequest):
    requests: list[MeasureSpec]


class SimulateRequest(NetRequest):
    horizon: float = Field(gt=0)
    replications: int = Field(default=20, ge=1)
    warmup_fraction: float = Field(default=0.2, ge=0, lt=1)
    seed: int = 0
    grid: list[float] = Field(default_factory=list)
    dump: bool = False


class ErrorResponse(BaseModel):
    error: str
    message: str
    details: Optional[dict] = None


class ValidationResponse(BaseModel):
    ok: bool
    errors: list[dict]
    warnings: list[dict]


class ReachResponse(BaseModel):
    states: list[list[int]]
    edges: list[list[Any]]


class CtmcResponse(BaseModel):
    states: list[list[int]]
    Q: list[list[str]]
    P: list[list[str]]
    RE: list[str]
    SJ: list[str]
    VAR: list[str]
    phi: list[Union[str, float]]


class SfmGridPoint(BaseModel):
    x: float
    F: list[float]
    f: list[float]


class SfmResponse(BaseModel):
    states: list[list[int]]
    R: list[str]
    phi: list[Union[str, float]]
    mean_drift: Union[str, float]
    stable: bool
    eigenvalues: list[list[float]]
    coefficients: list[list[float]]
    ell: list[float]
    grid: list[SfmGridPoint]


class VerdictResponse(BaseModel):
    equivalent: bool
    kind: str
    depth: Optional[int] = None
    witness: Optional[dict] = None
    classes: Optional[list] = None
    note: Optional[str] = None
    states_left: Optional[list[list[int]]] = None
    states_right: Optional[list[list[int]]] = None


class QuotientResponse(BaseModel):
    states: list[list[int]]
    classes: list[list[int]]
    initial_class: int
    edges: list[list[Any]]
    Q: list[list[str]]
    R: list[str]
    SJ: list[str]
    VAR: list[str]
    V: list[list[str]]
    W: list[list[str]]
    phi_q: Optional[list[Union[str, float]]] = None
    ell_q: Optional[list[float]] = None
    identities: Optional[list[dict]] = None


class CheckResponse(BaseModel):
    dialect: str
    formula: str
    value: Optional[str] = None
    satisfied: Optional[bool] = None


class MeasureReportDoc(BaseModel):
    kind: str
    value: Union[str, float]
    terms: list[dict]


class MeasuresResponse(BaseModel):
    reports: list[MeasureReportDoc]


class SimulateResponse(BaseModel):
    states: list[list[int]]
    phi_hat: list[float]
    phi_halfwidth: list[float]
    ell_hat: list[float]
    ell_halfwidth: list[float]
    F_hat: list[list[float]]
    F_halfwidth: list[list[float]]
    grid: list[float]
    flags: list[str]
    trajectories: Optional[list[list[list[float]]]] = None
