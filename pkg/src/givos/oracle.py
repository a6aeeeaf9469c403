"""Scalar-loop reference for the attention fusion pipeline.

Everything here works on plain Python lists with explicit loops: an
independent second route used to cross-check the vectorized implementation.
Keep it free of numpy arithmetic on purpose.
"""

from __future__ import annotations

import math

import numpy as np

from givos import attention
from givos.core import EngineConfig, FeatureGrid, GridShape
from givos.features import FeatureTransform

Matrix = list[list[float]]


def sl_matmul(a: Matrix, b: Matrix) -> Matrix:
    rows, inner, cols = len(a), len(b), len(b[0])
    out = [[0.0] * cols for _ in range(rows)]
    for i in range(rows):
        for j in range(cols):
            acc = 0.0
            for k in range(inner):
                acc += a[i][k] * b[k][j]
            out[i][j] = acc
    return out


def sl_transpose(m: Matrix) -> Matrix:
    return [[m[i][j] for i in range(len(m))] for j in range(len(m[0]))]


def sl_affine(x: Matrix, weight: Matrix, bias: list[float]) -> Matrix:
    out = sl_matmul(x, weight)
    for row in out:
        for j in range(len(bias)):
            row[j] += bias[j]
    return out


def sl_column_softmax(m: Matrix) -> Matrix:
    rows, cols = len(m), len(m[0])
    out = [[0.0] * cols for _ in range(rows)]
    for j in range(cols):
        top = max(m[i][j] for i in range(rows))
        exps = [math.exp(m[i][j] - top) for i in range(rows)]
        total = sum(exps)
        for i in range(rows):
            out[i][j] = exps[i] / total
    return out


def sl_pipeline(
    f_target: Matrix,
    f_sources: list[Matrix],
    e_sources: list[Matrix],
    phi_a: tuple[Matrix, list[float]],
    phi_r: tuple[Matrix, list[float]],
    epsilon: float,
    temperature_scaling: bool,
) -> dict:
    """Full fusion chain with scalar loops; returns every intermediate."""
    hw = len(f_target)
    c2 = len(phi_a[0][0])

    def transition(f_src: Matrix) -> Matrix:
        t = sl_affine(f_target, *phi_a)
        s = sl_affine(f_src, *phi_a)
        logits = sl_matmul(t, sl_transpose(s))
        if temperature_scaling:
            scale = math.sqrt(c2)
            logits = [[v / scale for v in row] for row in logits]
        return sl_column_softmax(logits)

    a_self = transition(f_target)
    f_self = sl_matmul(a_self, sl_affine(f_target, *phi_r))

    transitions, transferred_e, rels = [], [], []
    for f_src, e_src in zip(f_sources, e_sources):
        a = transition(f_src)
        transitions.append(a)
        transferred_e.append(sl_matmul(a, e_src))
        f_tr = sl_matmul(a, sl_affine(f_src, *phi_r))
        rel_row = []
        for p in range(hw):
            worst = max(
                (f_tr[p][c] - f_self[p][c]) ** 2 for c in range(len(f_tr[p]))
            )
            rel_row.append(1.0 / (worst + epsilon))
        rels.append(rel_row)

    n = len(f_sources)
    attention_maps = [[0.0] * hw for _ in range(n)]
    for p in range(hw):
        top = max(rels[i][p] for i in range(n))
        exps = [math.exp(rels[i][p] - top) for i in range(n)]
        total = sum(exps)
        for i in range(n):
            attention_maps[i][p] = exps[i] / total

    c3 = len(e_sources[0][0])
    fused = [[0.0] * c3 for _ in range(hw)]
    for i in range(n):
        for p in range(hw):
            w = attention_maps[i][p]
            for c in range(c3):
                fused[p][c] += w * transferred_e[i][p][c]

    overall = [
        math.exp(max(rels[i][p] for i in range(n)) - 1.0 / epsilon) for p in range(hw)
    ]
    return {
        "transitions": transitions,
        "transferred": transferred_e,
        "reliabilities": rels,
        "attention": attention_maps,
        "interfused": fused,
        "overall": overall,
    }


def vectorized_pipeline(
    f_target: np.ndarray,
    f_sources: list[np.ndarray],
    e_sources: list[np.ndarray],
    phi_a: FeatureTransform,
    phi_r: FeatureTransform,
    epsilon: float,
    temperature_scaling: bool,
    shape: GridShape,
) -> dict:
    """Same chain through the production operations."""
    target = FeatureGrid(shape=shape, data=f_target)
    a_self = attention.transition_matrix(target, target, phi_a, temperature_scaling)
    f_self = attention.transfer(
        a_self, (f_target @ phi_r.weight) + phi_r.bias
    )
    transitions, transferred, rels = [], [], []
    for f_src, e_src in zip(f_sources, e_sources):
        source = FeatureGrid(shape=shape, data=f_src)
        a = attention.transition_matrix(target, source, phi_a, temperature_scaling)
        transitions.append(a.data)
        transferred.append(attention.transfer(a, e_src))
        f_tr = attention.transfer(a, (f_src @ phi_r.weight) + phi_r.bias)
        rels.append(attention.reliability(f_tr, f_self, epsilon))
    fusion = attention.fuse(transferred, rels, epsilon, shape)
    return {
        "transitions": transitions,
        "transferred": transferred,
        "reliabilities": rels,
        "attention": [m.values for m in fusion.attention],
        "interfused": fusion.interfused,
        "overall": fusion.overall.values,
    }


def compare_pipelines(seed: int = 0, hw_side: int = 2, c1: int = 5, c2: int = 3, c3: int = 2,
                      n_sources: int = 2, epsilon: float = 0.1) -> float:
    """Max absolute deviation between scalar and vectorized routes."""
    stride = 4
    shape = GridShape(hw_side * stride, hw_side * stride, stride)
    rng = np.random.Generator(np.random.Philox(key=seed))
    f_target = rng.standard_normal((shape.hw, c1))
    f_sources = [rng.standard_normal((shape.hw, c1)) for _ in range(n_sources)]
    e_sources = [rng.standard_normal((shape.hw, c3)) for _ in range(n_sources)]
    w_a = rng.standard_normal((c1, c2))
    b_a = rng.standard_normal(c2) * 0.1
    w_r = rng.standard_normal((c1, c2))
    b_r = rng.standard_normal(c2) * 0.1

    scalar = sl_pipeline(
        f_target.tolist(),
        [f.tolist() for f in f_sources],
        [e.tolist() for e in e_sources],
        (w_a.tolist(), b_a.tolist()),
        (w_r.tolist(), b_r.tolist()),
        epsilon,
        True,
    )
    vec = vectorized_pipeline(
        f_target,
        f_sources,
        e_sources,
        FeatureTransform("A", w_a, b_a),
        FeatureTransform("R", w_r, b_r),
        epsilon,
        True,
        shape,
    )

    worst = 0.0
    for key in ("transitions", "transferred", "reliabilities", "attention"):
        for s_item, v_item in zip(scalar[key], vec[key]):
            worst = max(worst, float(np.max(np.abs(np.asarray(s_item) - np.asarray(v_item)))))
    worst = max(worst, float(np.max(np.abs(np.asarray(scalar["interfused"]) - vec["interfused"]))))
    worst = max(worst, float(np.max(np.abs(np.asarray(scalar["overall"]) - vec["overall"]))))
    return worst


def run_oracle_report(trials: int = 5, tolerance: float = 1e-9) -> tuple[bool, list[str]]:
    """Run several seeded comparisons; returns (ok, report lines)."""
    lines = []
    ok = True
    for seed in range(trials):
        dev = compare_pipelines(seed=seed)
        status = "ok" if dev <= tolerance else "FAIL"
        ok = ok and dev <= tolerance
        lines.append(f"seed {seed}: max deviation {dev:.3e} [{status}]")
    lines.append(f"tolerance {tolerance:.1e}: {'PASS' if ok else 'FAIL'}")
    return ok, lines
