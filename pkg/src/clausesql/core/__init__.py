from .gradcheck import grad_check
from .nn import (
    LstmState,
    bilstm_encode,
    dropout_mask,
    init_embedding,
    init_matrix,
    lstm_bias,
    lstm_run,
    lstm_step,
    lstm_zero_state,
)
from .optim import (
    Matrix,
    ParamStore,
    adam_step,
    check_finite,
    clip_global_norm,
)
from .params_io import ParamFormatError, config_hash, load_params, save_params
from .tape import DimensionError, Node, NumericError, Tape

__all__ = [
    "DimensionError",
    "LstmState",
    "Matrix",
    "Node",
    "NumericError",
    "ParamFormatError",
    "ParamStore",
    "Tape",
    "adam_step",
    "bilstm_encode",
    "check_finite",
    "clip_global_norm",
    "config_hash",
    "dropout_mask",
    "grad_check",
    "init_embedding",
    "init_matrix",
    "lstm_bias",
    "lstm_run",
    "lstm_step",
    "lstm_zero_state",
    "load_params",
    "save_params",
]
