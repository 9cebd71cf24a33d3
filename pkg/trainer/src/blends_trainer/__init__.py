"""Transformer correction trainer for the navsmooth fusion stage.

Consumes the fusion-trace and truth CSV interfaces, trains the bounded
correction network, and exports correction-record files the smoother
pipeline can replay.
"""

from .config import ModelConfig
from .data import FusionTrace, TruthData, load_fusion_trace, load_truth
from .export import compute_records, export_records
from .loss import bcl_terms, huber
from .model import CorrectionTransformer, build_model, parameter_count
from .train import TrainingDiverged, train

__version__ = "0.1.0"
