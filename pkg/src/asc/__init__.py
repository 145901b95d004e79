"""Layer-similarity analysis and structured layer pruning for small encoder stacks."""

from .data import TokenDataset, load_dataset, save_dataset
from .errors import AscError, FormatError, ShapeError, ValidationError
from .forward import final_hidden_state, forward_hidden_states, forward_with_taps
from .model import ModelConfig, ModelWeights, load_model, save_model
from .planner import PrunePlan, load_plan, plan, plan_random, write_plan
from .similarity import (
    SimilarityMatrix,
    analyze,
    load_matrix_csv,
    new_accumulator,
    write_matrix_csv,
)
from .surgery import DivergenceReport, apply_plan, compare_models
from .synth import gen_dataset, gen_model

__all__ = [
    "AscError",
    "DivergenceReport",
    "FormatError",
    "ModelConfig",
    "ModelWeights",
    "PrunePlan",
    "ShapeError",
    "SimilarityMatrix",
    "TokenDataset",
    "ValidationError",
    "analyze",
    "apply_plan",
    "compare_models",
    "final_hidden_state",
    "forward_hidden_states",
    "forward_with_taps",
    "gen_dataset",
    "gen_model",
    "load_dataset",
    "load_matrix_csv",
    "load_model",
    "load_plan",
    "new_accumulator",
    "plan",
    "plan_random",
    "save_dataset",
    "save_model",
    "write_matrix_csv",
    "write_plan",
]
