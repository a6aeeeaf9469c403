"""Frame features and the per-purpose feature transforms.

The encoder replaces a trained backbone with a deterministic hand-crafted
descriptor: per cell we take mean color in Lab space (cell and 3x3 cell
neighborhood), a gradient-orientation histogram, and a sinusoidal positional
encoding, then project with a seeded matrix and L2-normalize each row.
Everything is a pure function of (frame pixels, config), so identical frames
always produce identical feature grids.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.ndimage import uniform_filter

from givos.core import (
    ContractViolation,
    EngineConfig,
    FeatureGrid,
    GridShape,
    cell_mean,
    derive_key,
    matmul,
    seeded_matrix,
)

TRANSFORM_NAMES = ("A", "R", "S", "Y")


def srgb_to_lab(image: np.ndarray) -> np.ndarray:
    """Convert (H, W, 3) sRGB in [0, 1] to a rescaled CIE Lab.

    L is divided by 100 and a/b by 110 so all channels sit in roughly [-1, 1].
    """
    rgb = np.clip(image.astype(np.float64), 0.0, 1.0)
    linear = np.where(rgb <= 0.04045, rgb / 12.92, ((rgb + 0.055) / 1.055) ** 2.4)
    m = np.array(
        [
            [0.4124564, 0.3575761, 0.1804375],
            [0.2126729, 0.7151522, 0.0721750],
            [0.0193339, 0.1191920, 0.9503041],
        ]
    )
    xyz = linear @ m.T
    white = np.array([0.95047, 1.0, 1.08883])
    ratio = xyz / white
    f = np.where(ratio > (6 / 29) ** 3, np.cbrt(ratio), ratio / (3 * (6 / 29) ** 2) + 4 / 29)
    lab = np.empty_like(xyz)
    lab[..., 0] = 116 * f[..., 1] - 16
    lab[..., 1] = 500 * (f[..., 0] - f[..., 1])
    lab[..., 2] = 200 * (f[..., 1] - f[..., 2])
    lab[..., 0] /= 100.0
    lab[..., 1] /= 110.0
    lab[..., 2] /= 110.0
    return lab


def as_rgb(image: np.ndarray) -> np.ndarray:
    """Accept (H, W) or (H, W, 3) arrays, uint8 or float, return float RGB."""
    arr = np.asarray(image)
    if arr.dtype == np.uint8:
        arr = arr.astype(np.float64) / 255.0
    else:
        arr = arr.astype(np.float64)
    if arr.ndim == 2:
        arr = np.repeat(arr[:, :, None], 3, axis=2)
    if arr.ndim != 3 or arr.shape[2] != 3:
        raise ContractViolation(f"expected (H, W[, 3]) image, got {arr.shape}")
    return arr


@dataclass(frozen=True)
class DescriptorLayout:
    """Column layout of the raw per-cell descriptor."""

    gradient_bins: int
    posenc_freqs: int

    @property
    def color_dims(self) -> int:
        return 6  # cell mean Lab + neighborhood mean Lab

    @property
    def posenc_dims(self) -> int:
        return 4 * self.posenc_freqs

    @property
    def raw_dims(self) -> int:
        return self.color_dims + self.gradient_bins + self.posenc_dims

    @property
    def posenc_slice(self) -> slice:
        return slice(self.color_dims + self.gradient_bins, self.raw_dims)


def cell_descriptors(image: np.ndarray, shape: GridShape, layout: DescriptorLayout) -> np.ndarray:
    """Raw (hw, raw_dims) descriptor matrix, before projection.

    On a uniform frame every row is identical outside the positional-encoding
    columns: color means are constant and all gradients vanish.
    """
    rgb = as_rgb(image)
    if rgb.shape[:2] != (shape.frame_height, shape.frame_width):
        raise ContractViolation(
            f"image {rgb.shape[:2]} does not match grid frame "
            f"{(shape.frame_height, shape.frame_width)}"
        )
    lab = srgb_to_lab(rgb)
    gh, gw, hw = shape.grid_h, shape.grid_w, shape.hw

    color = np.stack([cell_mean(lab[:, :, c], shape) for c in range(3)], axis=1)
    color_grid = color.reshape(gh, gw, 3)
    neighborhood = np.stack(
        [uniform_filter(color_grid[:, :, c], size=3, mode="nearest") for c in range(3)],
        axis=2,
    ).reshape(hw, 3)

    hist = _gradient_histograms(lab[:, :, 0], shape, layout.gradient_bins)
    posenc = _positional_encoding(shape, layout.posenc_freqs)
    return np.concatenate([color, neighborhood, hist, posenc], axis=1)


def _gradient_histograms(luma: np.ndarray, shape: GridShape, bins: int) -> np.ndarray:
    gy, gx = np.gradient(luma)
    mag = np.hypot(gx, gy)
    ang = np.arctan2(gy, gx)  # (-pi, pi]
    bin_idx = np.clip(((ang + np.pi) / (2 * np.pi) * bins).astype(np.int64), 0, bins - 1)
    ids = shape.cell_id_map().ravel()
    hist = np.zeros((shape.hw, bins))
    np.add.at(hist, (ids, bin_idx.ravel()), mag.ravel())
    total = hist.sum(axis=1, keepdims=True)
    return hist / (total + 1e-8)


def _positional_encoding(shape: GridShape, freqs: int) -> np.ndarray:
    rows = (np.arange(shape.grid_h) + 0.5) / shape.grid_h
    cols = (np.arange(shape.grid_w) + 0.5) / shape.grid_w
    r = np.repeat(rows, shape.grid_w)
    c = np.tile(cols, shape.grid_h)
    parts = []
    for k in range(freqs):
        f = 2.0**k
        parts.extend(
            [
                np.sin(2 * np.pi * f * r),
                np.cos(2 * np.pi * f * r),
                np.sin(2 * np.pi * f * c),
                np.cos(2 * np.pi * f * c),
            ]
        )
    return np.stack(parts, axis=1)


class FrameEncoder:
    """Maps a frame to its (hw, C1) feature grid."""

    def __init__(self, config: EngineConfig):
        self.config = config
        self.layout = DescriptorLayout(config.gradient_bins, config.posenc_freqs)
        self.projection = seeded_matrix(
            self.layout.raw_dims, config.c1, derive_key(config.rng_seed, "frame_encoder")
        )

    def encode(self, image: np.ndarray) -> FeatureGrid:
        rgb = as_rgb(image)
        shape = GridShape(rgb.shape[0], rgb.shape[1], self.config.stride)
        raw = cell_descriptors(rgb, shape, self.layout)
        projected = matmul(raw, self.projection)
        norms = np.linalg.norm(projected, axis=1, keepdims=True)
        norms[norms == 0.0] = 1.0  # all-zero descriptor rows stay zero
        return FeatureGrid(shape=shape, data=projected / norms)


def encode_frame(image: np.ndarray, config: EngineConfig) -> FeatureGrid:
    return FrameEncoder(config).encode(image)


@dataclass(frozen=True)
class FeatureTransform:
    """Affine per-cell map from C1 to C2, one instance per purpose."""

    name: str
    weight: np.ndarray  # (C1, C2)
    bias: np.ndarray  # (C2,)

    def __post_init__(self) -> None:
        if self.name not in TRANSFORM_NAMES:
            raise ContractViolation(f"unknown transform name {self.name!r}")
        if self.weight.ndim != 2 or self.bias.shape != (self.weight.shape[1],):
            raise ContractViolation("transform weight/bias shapes disagree")


def make_transform(name: str, config: EngineConfig) -> FeatureTransform:
    """Seeded transform for one purpose; seed depends on (session seed, name).

    The correspondence transform carries a gain: unit-norm frame features
    give bounded dot products, and without amplification the transition
    softmax collapses to near-uniform columns.
    """
    weight = seeded_matrix(
        config.c1, config.c2, derive_key(config.rng_seed, f"transform:{name}:weight")
    )
    rng = np.random.Generator(
        np.random.Philox(key=derive_key(config.rng_seed, f"transform:{name}:bias"))
    )
    bias = rng.standard_normal(config.c2) * 0.1
    if name == "A":
        weight = weight * config.attention_gain
        bias = bias * config.attention_gain
    return FeatureTransform(name=name, weight=weight, bias=bias)


def make_transforms(config: EngineConfig) -> dict[str, FeatureTransform]:
    return {name: make_transform(name, config) for name in TRANSFORM_NAMES}


def apply_transform(features: FeatureGrid, transform: FeatureTransform) -> FeatureGrid:
    """Row-wise affine map: out[p] = features[p] @ weight + bias."""
    if features.channels != transform.weight.shape[0]:
        raise ContractViolation(
            f"feature channels {features.channels} != transform input "
            f"{transform.weight.shape[0]}"
        )
    out = matmul(features.data, transform.weight) + transform.bias
    return FeatureGrid(shape=features.shape, data=out)
