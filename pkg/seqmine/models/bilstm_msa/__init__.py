from .args import ModelArgs
from .attention import (
    AttentionScaleParams,
    AttentionTrace,
    ContextVector,
    MultiScaleParams,
    energies,
    half_width_of,
    multi_scale_context,
    scale_context,
    windowed_weights,
)
from .model import (
    ClassifierHead,
    ModelParams,
    Prediction,
    batch_loss,
    cross_entropy,
    forward,
    forward_batch,
    predict,
)
from .recurrent import (
    BiLstmParams,
    HiddenSequence,
    LstmParams,
    bilstm_encode,
    lstm_cell_step,
)

__all__ = [
    "ModelArgs",
    "AttentionScaleParams",
    "AttentionTrace",
    "ContextVector",
    "MultiScaleParams",
    "energies",
    "half_width_of",
    "multi_scale_context",
    "scale_context",
    "windowed_weights",
    "ClassifierHead",
    "ModelParams",
    "Prediction",
    "batch_loss",
    "cross_entropy",
    "forward",
    "forward_batch",
    "predict",
    "BiLstmParams",
    "HiddenSequence",
    "LstmParams",
    "bilstm_encode",
    "lstm_cell_step",
]
