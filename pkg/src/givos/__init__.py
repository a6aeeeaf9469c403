"""Guided interactive video object segmentation engine.

Reliability-weighted fusion of multiple annotated frames, intersection-aware
neighbor propagation, and score-guided round-based interaction, with a robot
user for reproducible benchmarking and an HTTP service for live annotation.
"""

from givos.core import (
    AnnotationSet,
    ContractViolation,
    EngineConfig,
    FeatureGrid,
    GridShape,
    LabelField,
    Mark,
    ReliabilityMap,
    column_softmax,
    matmul,
    seeded_matrix,
)
from givos.engine import GuidanceResult, RoundLogEntry, Session
from givos.robot import MetricReport, RobotUser, run_simulation
from givos.synth import SyntheticSpec, generate_clip

__all__ = [
    "AnnotationSet",
    "ContractViolation",
    "EngineConfig",
    "FeatureGrid",
    "GridShape",
    "GuidanceResult",
    "LabelField",
    "Mark",
    "MetricReport",
    "ReliabilityMap",
    "RobotUser",
    "RoundLogEntry",
    "Session",
    "SyntheticSpec",
    "column_softmax",
    "generate_clip",
    "matmul",
    "run_simulation",
    "seeded_matrix",
]

__version__ = "0.1.0"
