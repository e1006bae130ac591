"""Non-backtracking spectral community detection on sparse uniform
hypergraph stochastic block models."""

from .detection import DetectOptions, detect_alg1, detect_alg2, kmeans, overlap
from .eigensolver import dense_spectrum, topk
from .hypergraph import Hypergraph, parse_hypergraph, read_hypergraph, write_hypergraph
from .ihara_bass import bethe_hessian, build_tilde_B, ihara_bass_residual
from .model import ModelParams, ProbabilityTensor, assign_labels, sample, symmetric_tensor
from .nonbacktracking import NBOperator, build_B, verify_identities
from .signal import signal_spectrum, theoretical_overlap

__version__ = "0.1.0"

__all__ = [
    "DetectOptions", "Hypergraph", "ModelParams", "NBOperator", "ProbabilityTensor",
    "assign_labels", "bethe_hessian", "build_B", "build_tilde_B", "dense_spectrum",
    "detect_alg1", "detect_alg2", "ihara_bass_residual", "kmeans", "overlap",
    "parse_hypergraph", "read_hypergraph", "sample", "signal_spectrum",
    "symmetric_tensor", "theoretical_overlap", "topk", "verify_identities",
    "write_hypergraph",
]
