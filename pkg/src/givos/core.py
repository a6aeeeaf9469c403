"""Core numeric and domain types shared by every engine module.

All per-pixel matrices use one fixed raster convention: a frame is divided
into stride x stride cells, cell (r, c) maps to row p = r * grid_w + c, and
every matrix whose rows index cells uses that order.  Randomness comes from
the Philox 4x64 counter-based generator (numpy implementation) so that any
two runs with the same seed produce bit-identical numbers.
"""

from __future__ import annotations

import hashlib
import math
from dataclasses import dataclass, field, fields

import numpy as np


class ContractViolation(ValueError):
    """An operation was called with arguments that break its contract."""


class InvalidAnnotationError(ValueError):
    """An annotation set is unusable (empty, out of bounds, bad object id)."""


# ---------------------------------------------------------------------------
# Grid geometry
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class GridShape:
    """Geometry of the cell grid laid over a frame.

    ``grid_h``/``grid_w`` are ceil(frame/stride); edge cells absorb the
    remainder pixels, so every pixel belongs to exactly one cell.
    """

    frame_height: int
    frame_width: int
    stride: int

    def __post_init__(self) -> None:
        if self.stride < 1:
            raise ContractViolation(f"stride must be >= 1, got {self.stride}")
        if self.frame_height < 1 or self.frame_width < 1:
            raise ContractViolation("frame dimensions must be positive")
        if self.frame_height < self.stride or self.frame_width < self.stride:
            raise ContractViolation(
                f"frame {self.frame_height}x{self.frame_width} is smaller than "
                f"one {self.stride}px cell"
            )

    @property
    def grid_h(self) -> int:
        return -(-self.frame_height // self.stride)

    @property
    def grid_w(self) -> int:
        return -(-self.frame_width // self.stride)

    @property
    def hw(self) -> int:
        return self.grid_h * self.grid_w

    @property
    def diagonal(self) -> float:
        return math.hypot(self.frame_height, self.frame_width)

    def cell_of(self, p: int) -> tuple[int, int]:
        """Raster row/col of flat cell index ``p``."""
        return divmod(p, self.grid_w)

    def index_of(self, row: int, col: int) -> int:
        return row * self.grid_w + col

    def cell_id_map(self) -> np.ndarray:
        """(H, W) int array mapping each pixel to its flat cell index."""
        rows = np.arange(self.frame_height) // self.stride
        cols = np.arange(self.frame_width) // self.stride
        return (rows[:, None] * self.grid_w + cols[None, :]).astype(np.int64)


def cell_mean(field_hw: np.ndarray, shape: GridShape) -> np.ndarray:
    """Reduce a full-resolution scalar field to per-cell means, raster order."""
    if field_hw.shape != (shape.frame_height, shape.frame_width):
        raise ContractViolation(
            f"field shape {field_hw.shape} != frame "
            f"{(shape.frame_height, shape.frame_width)}"
        )
    ids = shape.cell_id_map().ravel()
    sums = np.bincount(ids, weights=field_hw.ravel().astype(np.float64), minlength=shape.hw)
    counts = np.bincount(ids, minlength=shape.hw)
    return sums / counts


def cell_majority(labels: np.ndarray, shape: GridShape, num_labels: int) -> np.ndarray:
    """Majority label per cell; ties resolve to the lowest label value."""
    if labels.shape != (shape.frame_height, shape.frame_width):
        raise ContractViolation("label image shape does not match frame")
    ids = shape.cell_id_map().ravel()
    flat = labels.ravel().astype(np.int64)
    counts = np.zeros((shape.hw, num_labels), dtype=np.int64)
    np.add.at(counts, (ids, flat), 1)
    return counts.argmax(axis=1)


def upsample_bilinear(grid_values: np.ndarray, shape: GridShape) -> np.ndarray:
    """Bilinearly interpolate a (grid_h, grid_w) field to full frame resolution.

    Cell p is anchored at its nominal center ((r + .5) * stride, (c + .5) * stride);
    pixels beyond the outermost centers clamp to the edge value.
    """
    gh, gw = shape.grid_h, shape.grid_w
    if grid_values.shape != (gh, gw):
        raise ContractViolation(f"expected ({gh}, {gw}), got {grid_values.shape}")
    ys = (np.arange(shape.frame_height) + 0.5) / shape.stride - 0.5
    xs = (np.arange(shape.frame_width) + 0.5) / shape.stride - 0.5
    ys = np.clip(ys, 0.0, gh - 1.0)
    xs = np.clip(xs, 0.0, gw - 1.0)
    y0 = np.floor(ys).astype(np.int64)
    x0 = np.floor(xs).astype(np.int64)
    y1 = np.minimum(y0 + 1, gh - 1)
    x1 = np.minimum(x0 + 1, gw - 1)
    wy = (ys - y0)[:, None]
    wx = (xs - x0)[None, :]
    top = grid_values[y0][:, x0] * (1 - wx) + grid_values[y0][:, x1] * wx
    bot = grid_values[y1][:, x0] * (1 - wx) + grid_values[y1][:, x1] * wx
    return top * (1 - wy) + bot * wy


# ---------------------------------------------------------------------------
# Value types
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class FeatureGrid:
    """hw x C matrix of per-cell feature vectors over one frame."""

    shape: GridShape
    data: np.ndarray

    def __post_init__(self) -> None:
        if self.data.ndim != 2 or self.data.shape[0] != self.shape.hw:
            raise ContractViolation(
                f"feature data must be ({self.shape.hw}, C), got {self.data.shape}"
            )
        if not np.all(np.isfinite(self.data)):
            raise ContractViolation("feature grid contains non-finite entries")

    @property
    def channels(self) -> int:
        return self.data.shape[1]


@dataclass(frozen=True)
class ReliabilityMap:
    """Per-cell scalar field on the grid."""

    shape: GridShape
    values: np.ndarray

    def __post_init__(self) -> None:
        if self.values.shape != (self.shape.hw,):
            raise ContractViolation(
                f"reliability values must be ({self.shape.hw},), got {self.values.shape}"
            )
        if not np.all(np.isfinite(self.values)):
            raise ContractViolation("reliability map contains non-finite entries")

    def as_grid(self) -> np.ndarray:
        return self.values.reshape(self.shape.grid_h, self.shape.grid_w)


@dataclass(frozen=True)
class Mark:
    """One user/robot click at pixel (row, col), labelled with an object id.

    Object id 0 means background.
    """

    row: int
    col: int
    object_id: int


@dataclass(frozen=True)
class AnnotationSet:
    """Sparse marks placed on a single frame in one round."""

    frame_index: int
    marks: tuple[Mark, ...]
    round_index: int = 0

    def __post_init__(self) -> None:
        if not self.marks:
            raise InvalidAnnotationError("annotation set has no marks")

    def validate(self, frame_height: int, frame_width: int, num_objects: int) -> None:
        for m in self.marks:
            if not (0 <= m.row < frame_height and 0 <= m.col < frame_width):
                raise InvalidAnnotationError(
                    f"mark ({m.row}, {m.col}) outside {frame_height}x{frame_width} frame"
                )
            if not (0 <= m.object_id <= num_objects):
                raise InvalidAnnotationError(
                    f"mark object id {m.object_id} exceeds K={num_objects}"
                )

    def marks_for(self, object_id: int) -> list[Mark]:
        return [m for m in self.marks if m.object_id == object_id]


@dataclass(frozen=True)
class LabelField:
    """Per-frame output: aggregated per-object probabilities and argmax mask.

    ``prob_maps`` holds the K aggregated object probabilities (background is
    the complement); ``mask`` is the full-resolution argmax label image.
    """

    frame_index: int
    prob_maps: np.ndarray  # (K, H, W) in [0, 1]
    mask: np.ndarray  # (H, W) ints in 0..K

    def __post_init__(self) -> None:
        if self.prob_maps.ndim != 3:
            raise ContractViolation("prob_maps must be (K, H, W)")
        if self.mask.shape != self.prob_maps.shape[1:]:
            raise ContractViolation("mask resolution does not match prob_maps")


# ---------------------------------------------------------------------------
# Configuration
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class EngineConfig:
    """Session-wide knobs; every derived weight is a pure function of rng_seed.

    Dimension defaults are desk-scale; the large configuration (stride 8,
    c1=1024, c2=128, c3=256) is reachable through the same fields.
    """

    stride: int = 8
    c1: int = 64
    c2: int = 16
    c3: int = 32
    epsilon: float = 0.1
    alpha: float = 0.5
    rs4_count: int = 4
    rs4_min_gap_divisor: int = 10
    head_lambda: float | None = None  # None -> 0.01 * head input dimension
    saliency_threshold: float = 0.6
    saliency_negative_threshold: float = 0.4  # cells between the two are unlabeled
    logit_temperature_scaling: bool = True
    attention_gain: float = 16.0  # phi_A scale; keeps Eq-style softmax informative
    rng_seed: int = 0
    # Descriptor / encoder parameters
    gradient_bins: int = 8
    posenc_freqs: int = 2
    # Sparse-to-dense saliency parameters
    saliency_beta_scale: float = 4.0  # beta = scale / image diagonal
    geodesic_color_weight: float | None = None  # None -> 4 * image diagonal
    geodesic_contrast_floor: float = 0.08  # color steps below this are free
    # Segmentation head
    head_sharpness: float = 8.0
    prob_clamp_delta: float = 1e-6
    # Caching
    transition_cache_size: int = 256
    # Robot user
    robot_initial_clicks: int = 10
    robot_fp_clicks: int = 5
    robot_fn_clicks: int = 5
    # Ablation toggles
    use_r_attention: bool = True
    use_intersection_aware: bool = True

    def __post_init__(self) -> None:
        if self.epsilon <= 0:
            raise ContractViolation("epsilon must be > 0")
        if not 0.0 <= self.alpha <= 1.0:
            raise ContractViolation("alpha must lie in [0, 1]")
        for name in ("stride", "c1", "c2", "c3", "rs4_count", "rs4_min_gap_divisor"):
            if getattr(self, name) < 1:
                raise ContractViolation(f"{name} must be >= 1")

    def to_dict(self) -> dict:
        return {f.name: getattr(self, f.name) for f in fields(self)}

    @classmethod
    def from_dict(cls, data: dict) -> "EngineConfig":
        known = {f.name for f in fields(cls)}
        unknown = set(data) - known
        if unknown:
            raise ContractViolation(f"unknown config keys: {sorted(unknown)}")
        return cls(**data)


@dataclass
class SessionState:
    """Mutable record of one interactive session (single writer).

    ``annotated`` lists (round, frame) pairs in annotation order; the heavy
    per-round artifacts (features, saliency, heads) live on the Session that
    owns this record.
    """

    num_frames: int
    num_objects: int
    config: EngineConfig
    round: int = 0
    annotated: list[AnnotationSet] = field(default_factory=list)
    labels: list[LabelField | None] = field(default_factory=list)
    r_scores: list[float] = field(default_factory=list)

    def annotated_frames(self) -> list[int]:
        return [a.frame_index for a in self.annotated]


# ---------------------------------------------------------------------------
# Numeric primitives
# ---------------------------------------------------------------------------


def matmul(a: np.ndarray, b: np.ndarray) -> np.ndarray:
    """Exact dense matrix product with contract checks."""
    if a.ndim != 2 or b.ndim != 2:
        raise ContractViolation("matmul operands must be 2-D")
    if a.shape[1] != b.shape[0]:
        raise ContractViolation(f"inner dimensions differ: {a.shape} x {b.shape}")
    if not (np.all(np.isfinite(a)) and np.all(np.isfinite(b))):
        raise ContractViolation("matmul operands must be finite")
    return a @ b


def column_softmax(m: np.ndarray) -> np.ndarray:
    """Softmax over each column, stabilized by subtracting the column max."""
    if not np.all(np.isfinite(m)):
        raise ContractViolation("softmax input must be finite")
    shifted = m - m.max(axis=0, keepdims=True)
    e = np.exp(shifted)
    return e / e.sum(axis=0, keepdims=True)


def derive_key(seed: int, label: str) -> int:
    """Stable 128-bit stream key for (seed, label), fed to Philox."""
    h = hashlib.blake2b(digest_size=16)
    h.update(int(seed).to_bytes(16, "little", signed=True))
    h.update(label.encode("utf-8"))
    return int.from_bytes(h.digest(), "little")


def philox_rng(seed: int, label: str = "") -> np.random.Generator:
    """Philox 4x64 generator keyed by (seed, label)."""
    return np.random.Generator(np.random.Philox(key=derive_key(seed, label)))


def seeded_matrix(rows: int, cols: int, seed: int) -> np.ndarray:
    """Reproducible rows x cols matrix from the Philox stream for ``seed``.

    Entries are standard normal; when rows >= cols the columns are
    orthonormalized (two Gram-Schmidt passes, signs fixed by the first
    nonzero entry of each column staying positive).
    """
    rng = np.random.Generator(np.random.Philox(key=int(seed) % (1 << 128)))
    m = rng.standard_normal((rows, cols))
    if rows >= cols:
        m = _orthonormalize_columns(m)
    return m


def _orthonormalize_columns(m: np.ndarray) -> np.ndarray:
    q = m.astype(np.float64).copy()
    for _ in range(2):  # second pass restores orthogonality to machine precision
        for j in range(q.shape[1]):
            for i in range(j):
                q[:, j] -= (q[:, i] @ q[:, j]) * q[:, i]
            norm = np.linalg.norm(q[:, j])
            if norm == 0.0:
                raise ContractViolation("degenerate column during orthonormalization")
            q[:, j] /= norm
    for j in range(q.shape[1]):
        lead = np.flatnonzero(q[:, j])[0]
        if q[lead, j] < 0:
            q[:, j] = -q[:, j]
    return q
