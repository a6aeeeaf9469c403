"""Dataset loading: numbered frame images with optional indexed label masks.

Layout per sequence:

    <root>/<sequence>/frames/00000.ppm   (zero-padded; lexicographic = time)
    <root>/<sequence>/masks/00000.png    (optional; value k = object k)

PPM/PGM and PNG are accepted.  Mask object ids must be contiguous from 1.
"""

from __future__ import annotations

import os
from pathlib import Path

import numpy as np
from PIL import Image

FRAME_SUFFIXES = (".ppm", ".pgm", ".png")
DATA_ROOT_ENV = "GIVOS_DATA_ROOT"


class DatasetError(ValueError):
    """Base class for dataset layout problems."""


class MissingFramesError(DatasetError):
    pass


class DimensionMismatchError(DatasetError):
    pass


class NonContiguousObjectIdsError(DatasetError):
    pass


def data_root(override: str | None = None) -> Path:
    root = override or os.environ.get(DATA_ROOT_ENV, "data")
    return Path(root)


def _numbered_images(directory: Path) -> list[Path]:
    if not directory.is_dir():
        return []
    return sorted(p for p in directory.iterdir() if p.suffix.lower() in FRAME_SUFFIXES)


def load_sequence(path: str | Path) -> tuple[np.ndarray, np.ndarray | None]:
    """Load (video (T, H, W, 3) floats in [0, 1], masks (T, H, W) or None)."""
    base = Path(path)
    frame_paths = _numbered_images(base / "frames")
    if not frame_paths:
        raise MissingFramesError(f"no frame images under {base / 'frames'}")

    frames = []
    for p in frame_paths:
        arr = np.asarray(Image.open(p).convert("RGB"), dtype=np.float64) / 255.0
        frames.append(arr)
    shapes = {f.shape for f in frames}
    if len(shapes) != 1:
        raise DimensionMismatchError(f"frames differ in size: {sorted(shapes)}")
    video = np.stack(frames)

    mask_paths = _numbered_images(base / "masks")
    if not mask_paths:
        return video, None
    if len(mask_paths) != len(frame_paths):
        raise DimensionMismatchError(
            f"{len(mask_paths)} masks for {len(frame_paths)} frames"
        )
    masks = []
    for p in mask_paths:
        img = Image.open(p)
        if img.mode not in ("L", "P", "I", "I;16"):
            img = img.convert("L")
        masks.append(np.asarray(img, dtype=np.int32))
    gt = np.stack(masks)
    if gt.shape[1:] != video.shape[1:3]:
        raise DimensionMismatchError(
            f"mask resolution {gt.shape[1:]} != frame resolution {video.shape[1:3]}"
        )
    ids = np.unique(gt)
    objects = ids[ids > 0]
    expected = np.arange(1, len(objects) + 1)
    if not np.array_equal(objects, expected):
        raise NonContiguousObjectIdsError(
            f"object ids {objects.tolist()} are not contiguous from 1"
        )
    return video, gt


def save_frame_image(frame: np.ndarray, path: str | Path) -> None:
    """Write one float RGB frame as an 8-bit image (format from suffix)."""
    arr = np.clip(np.asarray(frame) * 255.0, 0, 255).round().astype(np.uint8)
    Image.fromarray(arr).save(path)


def save_mask_image(mask: np.ndarray, path: str | Path) -> None:
    """Write a label mask as 8-bit grayscale; value k = object k."""
    arr = np.asarray(mask)
    if arr.max(initial=0) > 255:
        raise DatasetError("mask ids beyond 255 are not representable")
    Image.fromarray(arr.astype(np.uint8)).save(path)


def load_mask_image(path: str | Path) -> np.ndarray:
    return np.asarray(Image.open(path), dtype=np.int32)


def save_sequence(
    video: np.ndarray, masks: np.ndarray | None, path: str | Path, image_format: str = "ppm"
) -> None:
    """Materialize a clip in the dataset layout (used by fixtures and tools)."""
    base = Path(path)
    (base / "frames").mkdir(parents=True, exist_ok=True)
    digits = max(5, len(str(len(video) - 1)))
    for t, frame in enumerate(video):
        save_frame_image(frame, base / "frames" / f"{t:0{digits}d}.{image_format}")
    if masks is not None:
        (base / "masks").mkdir(parents=True, exist_ok=True)
        for t, mask in enumerate(masks):
            save_mask_image(mask, base / "masks" / f"{t:0{digits}d}.png")
