"""HTTP surface of the interactive segmentation engine.

One engine per session; round submissions are serialized per session and a
second concurrent writer is rejected with 409.  Masks travel run-length
encoded; per-object probabilities travel at grid resolution.
"""

from __future__ import annotations

import io
from pathlib import Path

import numpy as np
from fastapi import FastAPI, HTTPException, Response
from fastapi.staticfiles import StaticFiles

from givos.core import (
    AnnotationSet,
    ContractViolation,
    InvalidAnnotationError,
    Mark,
    cell_mean,
)
from givos.dataset import DatasetError, data_root
from givos.service import schemas
from givos.service.state import (
    RoundInProgressError,
    SessionHandle,
    SessionManager,
    UnknownSessionError,
)
from givos.snapshot import rle_encode
from givos.synth import SyntheticSpec

UI_DIST = Path(__file__).resolve().parents[3] / "frontend" / "dist"


def create_app(
    data_dir: str | None = None,
    snapshot_dir: str | Path = "snapshots",
    ui_dist: Path | None = None,
) -> FastAPI:
    app = FastAPI(title="givos session service", version="1")
    manager = SessionManager(data_root(data_dir), Path(snapshot_dir))
    app.state.manager = manager

    def handle_or_404(session_id: str) -> SessionHandle:
        try:
            return manager.get(session_id)
        except UnknownSessionError:
            raise HTTPException(status_code=404, detail=f"unknown session {session_id}")

    def session_info(session_id: str, handle: SessionHandle) -> schemas.SessionInfo:
        s = handle.session
        return schemas.SessionInfo(
            session_id=session_id,
            num_frames=s.num_frames,
            num_objects=s.num_objects,
            frame_height=s.shape.frame_height,
            frame_width=s.shape.frame_width,
            round=s.round,
            annotated_frames=s.annotated_frames(),
            restored=handle.stored_masks is not None,
        )

    @app.post("/sessions", response_model=schemas.SessionInfo)
    def create_session(request: schemas.CreateSessionRequest):
        chosen = [x for x in (request.sequence, request.synthetic, request.snapshot_id) if x]
        if len(chosen) != 1:
            raise HTTPException(
                status_code=422,
                detail="exactly one of sequence, synthetic, snapshot_id is required",
            )
        try:
            if request.snapshot_id:
                session_id, handle = manager.create_from_snapshot(request.snapshot_id)
            elif request.synthetic:
                spec = SyntheticSpec(**request.synthetic.model_dump())
                session_id, handle = manager.create_synthetic(spec, request.config)
            else:
                session_id, handle = manager.create_from_dataset(request.sequence, request.config)
        except UnknownSessionError as exc:
            raise HTTPException(status_code=404, detail=f"unknown snapshot {exc}")
        except (DatasetError, ContractViolation) as exc:
            raise HTTPException(status_code=422, detail=str(exc))
        return session_info(session_id, handle)

    @app.get("/sessions/{session_id}", response_model=schemas.SessionInfo)
    def get_session(session_id: str):
        return session_info(session_id, handle_or_404(session_id))

    @app.get("/sessions/{session_id}/frames/{frame_index}")
    def get_frame(session_id: str, frame_index: int):
        handle = handle_or_404(session_id)
        s = handle.session
        if not 0 <= frame_index < s.num_frames:
            raise HTTPException(status_code=404, detail="frame index out of range")
        from PIL import Image

        arr = np.clip(s.video[frame_index] * 255.0, 0, 255).round().astype(np.uint8)
        buf = io.BytesIO()
        Image.fromarray(arr).save(buf, format="PNG")
        return Response(content=buf.getvalue(), media_type="image/png")

    @app.post("/sessions/{session_id}/annotations", response_model=schemas.RoundSummary)
    def submit_annotations(session_id: str, request: schemas.AnnotateRequest):
        handle_or_404(session_id)
        if not request.marks:
            raise HTTPException(status_code=422, detail="annotation needs at least one mark")
        annotations = AnnotationSet(
            frame_index=request.frame_index,
            marks=tuple(Mark(m.row, m.col, m.object_id) for m in request.marks),
        )
        try:
            entry = manager.run_round(session_id, annotations)
        except RoundInProgressError:
            raise HTTPException(status_code=409, detail="round in progress")
        except InvalidAnnotationError as exc:
            raise HTTPException(status_code=422, detail=str(exc))
        session = manager.get(session_id).session
        return schemas.RoundSummary(
            round=entry.round_index,
            annotated_frame=entry.annotated_frame,
            num_marks=entry.num_marks,
            forward=list(entry.forward) if entry.forward else None,
            backward=list(entry.backward) if entry.backward else None,
            mean_r=entry.mean_r,
            r_scores=list(session.r_scores),
        )

    @app.get("/sessions/{session_id}/masks/{frame_index}", response_model=schemas.MaskResponse)
    def get_masks(session_id: str, frame_index: int):
        handle = handle_or_404(session_id)
        s = handle.session
        if not 0 <= frame_index < s.num_frames:
            raise HTTPException(status_code=404, detail="frame index out of range")
        if s.round < 1:
            raise HTTPException(status_code=409, detail="no completed round yet")
        if handle.stored_masks is not None:
            mask = handle.stored_masks[frame_index]
        else:
            mask = s.labels[frame_index].mask
        field = s.labels[frame_index]
        prob_grids = [
            cell_mean(field.prob_maps[k], s.shape).reshape(s.shape.grid_h, s.shape.grid_w).tolist()
            for k in range(s.num_objects)
        ]
        return schemas.MaskResponse(
            frame_index=frame_index,
            mask=schemas.RleMask(**rle_encode(mask)),
            grid_h=s.shape.grid_h,
            grid_w=s.shape.grid_w,
            prob_grids=prob_grids,
        )

    @app.get("/sessions/{session_id}/guidance", response_model=schemas.GuidanceResponse)
    def get_guidance(session_id: str, mode: str = "rs4"):
        handle = handle_or_404(session_id)
        try:
            result = handle.session.guide(mode)
        except ContractViolation as exc:
            raise HTTPException(status_code=409, detail=str(exc))
        return schemas.GuidanceResponse(
            mode=result.mode,
            candidates=[
                schemas.GuidanceCandidate(
                    frame_index=f,
                    r_score=r,
                    thumbnail_url=f"/sessions/{session_id}/frames/{f}",
                )
                for f, r in result.candidates
            ],
        )

    @app.get("/sessions/{session_id}/r-scores", response_model=schemas.RScoreResponse)
    def get_r_scores(session_id: str):
        handle = handle_or_404(session_id)
        return schemas.RScoreResponse(
            round=handle.session.round, r_scores=list(handle.session.r_scores)
        )

    @app.get(
        "/sessions/{session_id}/reliability/{frame_index}",
        response_model=schemas.ReliabilityResponse,
    )
    def get_reliability(session_id: str, frame_index: int):
        handle = handle_or_404(session_id)
        s = handle.session
        if not 0 <= frame_index < s.num_frames:
            raise HTTPException(status_code=404, detail="frame index out of range")
        overall = s.overall_reliability[frame_index]
        if overall is None:
            raise HTTPException(status_code=409, detail="no completed round yet")
        return schemas.ReliabilityResponse(
            frame_index=frame_index,
            grid_h=s.shape.grid_h,
            grid_w=s.shape.grid_w,
            values=overall.as_grid().tolist(),
        )

    @app.post("/sessions/{session_id}/finalize", response_model=schemas.FinalizeResponse)
    def finalize(session_id: str, request: schemas.FinalizeRequest | None = None):
        handle = handle_or_404(session_id)
        if handle.session.round < 1:
            raise HTTPException(status_code=409, detail="no completed round to finalize")
        if request and request.inspection_log:
            handle.inspection_log.extend(request.inspection_log)
        try:
            snapshot_id = manager.finalize(session_id)
        except ContractViolation as exc:
            raise HTTPException(status_code=409, detail=str(exc))
        return schemas.FinalizeResponse(snapshot_id=snapshot_id)

    @app.get("/sessions/{session_id}/snapshot")
    def download_snapshot(session_id: str):
        handle_or_404(session_id)
        path = manager.snapshot_dir / f"{session_id}.json"
        if not path.is_file():
            raise HTTPException(status_code=404, detail="session not finalized")
        return Response(content=path.read_bytes(), media_type="application/json")

    dist = ui_dist if ui_dist is not None else UI_DIST
    if dist.is_dir():
        app.mount("/ui", StaticFiles(directory=dist, html=True), name="ui")

    return app
