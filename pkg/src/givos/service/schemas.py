"""Request/response models for the session service (wire format v1)."""

from __future__ import annotations

from pydantic import BaseModel, Field


class SyntheticRequest(BaseModel):
    num_frames: int = 20
    height: int = 64
    width: int = 64
    num_objects: int = 2
    seed: int = 0
    jitter: float = 0.7
    color_drift: float = 0.003


class CreateSessionRequest(BaseModel):
    sequence: str | None = None  # dataset sequence under the data root
    synthetic: SyntheticRequest | None = None
    snapshot_id: str | None = None  # resume a finalized session
    config: dict = Field(default_factory=dict)  # EngineConfig overrides


class SessionInfo(BaseModel):
    session_id: str
    num_frames: int
    num_objects: int
    frame_height: int
    frame_width: int
    round: int
    annotated_frames: list[int]
    restored: bool = False


class MarkModel(BaseModel):
    row: int
    col: int
    object_id: int


class AnnotateRequest(BaseModel):
    frame_index: int
    marks: list[MarkModel]


class RoundSummary(BaseModel):
    round: int
    annotated_frame: int
    num_marks: int
    forward: list[int] | None
    backward: list[int] | None
    mean_r: float
    r_scores: list[float]


class RleMask(BaseModel):
    height: int
    width: int
    runs: list[list[int]]


class MaskResponse(BaseModel):
    frame_index: int
    mask: RleMask
    grid_h: int
    grid_w: int
    prob_grids: list[list[list[float]]]  # per object, grid resolution


class GuidanceCandidate(BaseModel):
    frame_index: int
    r_score: float
    thumbnail_url: str


class GuidanceResponse(BaseModel):
    mode: str
    candidates: list[GuidanceCandidate]


class RScoreResponse(BaseModel):
    round: int
    r_scores: list[float]


class ReliabilityResponse(BaseModel):
    frame_index: int
    grid_h: int
    grid_w: int
    values: list[list[float]]


class FinalizeRequest(BaseModel):
    inspection_log: list[dict] = Field(default_factory=list)  # client timings


class FinalizeResponse(BaseModel):
    snapshot_id: str


class ErrorResponse(BaseModel):
    detail: str
