"""Session registry: one engine per session, single-writer per session."""

from __future__ import annotations

import threading
import uuid
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from givos.core import EngineConfig
from givos.dataset import load_sequence
from givos.engine import Session
from givos.snapshot import (
    dump_snapshot,
    load_snapshot,
    resolve_source_video,
    restore_session,
    snapshot_masks,
    snapshot_session,
)
from givos.synth import SyntheticSpec, generate_clip


class UnknownSessionError(KeyError):
    pass


class RoundInProgressError(RuntimeError):
    pass


@dataclass
class SessionHandle:
    session: Session
    source: dict
    lock: threading.Lock = field(default_factory=threading.Lock)
    # masks served verbatim after a restore, until the next round runs
    stored_masks: list[np.ndarray] | None = None
    inspection_log: list[dict] = field(default_factory=list)


class SessionManager:
    def __init__(self, data_root: Path, snapshot_dir: Path):
        self.data_root = Path(data_root)
        self.snapshot_dir = Path(snapshot_dir)
        self._handles: dict[str, SessionHandle] = {}
        self._registry_lock = threading.Lock()

    # -- creation --------------------------------------------------------------

    def create_synthetic(self, spec: SyntheticSpec, config_overrides: dict) -> tuple[str, SessionHandle]:
        video, masks = generate_clip(spec)
        num_objects = spec.num_objects
        config = self._config(config_overrides)
        session = Session(video, num_objects, config)
        return self._register(
            SessionHandle(session=session, source={"kind": "synthetic", "spec": spec.to_dict()})
        )

    def create_from_dataset(self, sequence: str, config_overrides: dict) -> tuple[str, SessionHandle]:
        video, masks = load_sequence(self.data_root / sequence)
        num_objects = int(masks.max()) if masks is not None else 1
        config = self._config(config_overrides)
        session = Session(video, num_objects, config)
        return self._register(
            SessionHandle(session=session, source={"kind": "dataset", "sequence": sequence})
        )

    def create_from_snapshot(self, snapshot_id: str) -> tuple[str, SessionHandle]:
        path = self.snapshot_dir / f"{snapshot_id}.json"
        if not path.is_file():
            raise UnknownSessionError(snapshot_id)
        snapshot = load_snapshot(path)
        video = resolve_source_video(snapshot, data_root=self.data_root)
        session, exact = restore_session(snapshot, video)
        handle = SessionHandle(session=session, source=snapshot["source"])
        if not exact:
            handle.stored_masks = snapshot_masks(snapshot)
        return self._register(handle)

    def _config(self, overrides: dict) -> EngineConfig:
        return EngineConfig.from_dict({**EngineConfig().to_dict(), **overrides})

    def _register(self, handle: SessionHandle) -> tuple[str, SessionHandle]:
        session_id = uuid.uuid4().hex[:12]
        with self._registry_lock:
            self._handles[session_id] = handle
        return session_id, handle

    # -- access ----------------------------------------------------------------

    def get(self, session_id: str) -> SessionHandle:
        try:
            return self._handles[session_id]
        except KeyError:
            raise UnknownSessionError(session_id) from None

    def run_round(self, session_id: str, annotations) -> "RoundResult":
        handle = self.get(session_id)
        if not handle.lock.acquire(blocking=False):
            raise RoundInProgressError(session_id)
        try:
            entry = handle.session.run_round(annotations)
            handle.stored_masks = None
            return entry
        finally:
            handle.lock.release()

    def finalize(self, session_id: str) -> str:
        handle = self.get(session_id)
        snapshot = snapshot_session(handle.session, handle.source)
        if handle.inspection_log:
            snapshot["inspection_log"] = handle.inspection_log
        self.snapshot_dir.mkdir(parents=True, exist_ok=True)
        dump_snapshot(snapshot, self.snapshot_dir / f"{session_id}.json")
        return session_id
