"""Session persistence: run-length-encoded masks in a versioned JSON snapshot.

A snapshot carries everything needed to (a) serve results bit-exactly and
(b) rebuild a live session by replaying its annotations through the
deterministic engine.
"""

from __future__ import annotations

import json
from pathlib import Path

import numpy as np

from givos.core import AnnotationSet, ContractViolation, EngineConfig, Mark
from givos.engine import Session
from givos.synth import SyntheticSpec, generate_clip

FORMAT_VERSION = "givos-snapshot-v1"


def rle_encode(mask: np.ndarray) -> dict:
    """Row-major run-length encoding: {"height", "width", "runs": [[v, n]...]}."""
    arr = np.asarray(mask)
    if arr.ndim != 2:
        raise ContractViolation("RLE expects a 2-D label image")
    flat = arr.ravel()
    boundaries = np.flatnonzero(np.diff(flat)) + 1
    starts = np.concatenate([[0], boundaries])
    ends = np.concatenate([boundaries, [flat.size]])
    runs = [[int(flat[s]), int(e - s)] for s, e in zip(starts, ends)]
    return {"height": int(arr.shape[0]), "width": int(arr.shape[1]), "runs": runs}


def rle_decode(encoded: dict) -> np.ndarray:
    h, w = encoded["height"], encoded["width"]
    total = sum(n for _, n in encoded["runs"])
    if total != h * w:
        raise ContractViolation(f"RLE covers {total} pixels, image has {h * w}")
    flat = np.empty(h * w, dtype=np.int32)
    pos = 0
    for value, count in encoded["runs"]:
        flat[pos : pos + count] = value
        pos += count
    return flat.reshape(h, w)


def snapshot_session(session: Session, source: dict) -> dict:
    """Serializable record of a session's externally visible state."""
    if any(field is None for field in session.labels):
        raise ContractViolation("cannot snapshot before the first completed round")
    return {
        "format_version": FORMAT_VERSION,
        "source": source,
        "num_objects": session.num_objects,
        "config": session.config.to_dict(),
        "round": session.round,
        "annotations": [
            {
                "round": rec.annotations.round_index,
                "frame_index": rec.annotations.frame_index,
                "marks": [[m.row, m.col, m.object_id] for m in rec.annotations.marks],
            }
            for rec in sorted(session.records, key=lambda r: r.annotations.round_index)
        ],
        "masks": [rle_encode(field.mask) for field in session.labels],
        "r_scores": list(session.r_scores),
        "round_log": [entry.to_record() for entry in session.round_log],
    }


def dump_snapshot(snapshot: dict, path: str | Path) -> None:
    Path(path).write_text(
        json.dumps(snapshot, sort_keys=True, separators=(",", ":")) + "\n"
    )


def load_snapshot(path: str | Path) -> dict:
    snapshot = json.loads(Path(path).read_text())
    version = snapshot.get("format_version")
    if version != FORMAT_VERSION:
        raise ContractViolation(f"unsupported snapshot version {version!r}")
    return snapshot


def snapshot_masks(snapshot: dict) -> list[np.ndarray]:
    return [rle_decode(entry) for entry in snapshot["masks"]]


def resolve_source_video(snapshot: dict, data_root: Path | None = None) -> np.ndarray:
    """Reconstruct the video a snapshot was produced from."""
    source = snapshot["source"]
    kind = source.get("kind")
    if kind == "synthetic":
        video, _ = generate_clip(SyntheticSpec.from_dict(source["spec"]))
        return video
    if kind == "dataset":
        from givos.dataset import load_sequence

        base = (data_root or Path(".")) / source["sequence"]
        video, _ = load_sequence(base)
        return video
    raise ContractViolation(f"cannot reconstruct video for source kind {kind!r}")


def restore_session(snapshot: dict, video: np.ndarray) -> tuple[Session, bool]:
    """Rebuild a live session by replaying annotations through the engine.

    Returns (session, exact): the engine is deterministic, so replaying the
    surviving annotation sets reproduces the stored masks bit-exactly unless
    the history replaced annotations mid-way (re-annotated frames drop their
    earlier marks, and intermediate rounds can leave traces outside later
    propagation ranges).  Callers that must serve stored results verbatim
    should keep using the snapshot's masks when ``exact`` is False.
    """
    config = EngineConfig.from_dict(snapshot["config"])
    session = Session(video, snapshot["num_objects"], config)
    for entry in snapshot["annotations"]:
        marks = tuple(Mark(r, c, k) for r, c, k in entry["marks"])
        session.run_round(AnnotationSet(frame_index=entry["frame_index"], marks=marks))
    stored = snapshot_masks(snapshot)
    exact = all(
        np.array_equal(field.mask, mask) for field, mask in zip(session.labels, stored)
    )
    return session, exact
