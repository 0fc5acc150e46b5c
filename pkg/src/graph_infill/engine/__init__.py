"""Dense float64 tensors with tape-based reverse-mode differentiation."""
from .autodiff import (
    GradientError,
    NumericalError,
    ShapeError,
    Tape,
    Tensor,
    as_tensor,
    backward,
    no_record,
    set_debug,
)
from .layers import gcn_layer, glorot, linear
from .ops import (
    add,
    concat_cols,
    const_matmul,
    cosine_rowwise,
    dropout,
    matmul,
    mean,
    mse,
    relu,
    row_l2_normalize,
    scale,
    softmax_cross_entropy,
    spmm,
    take_rows,
)
from .optim import ParamSet, adam_step

__all__ = [
    "GradientError", "NumericalError", "ShapeError", "Tape", "Tensor", "as_tensor",
    "backward", "no_record", "set_debug", "gcn_layer", "glorot", "linear", "add",
    "concat_cols", "const_matmul", "cosine_rowwise", "dropout", "matmul", "mean", "mse", "relu",
    "row_l2_normalize", "scale", "softmax_cross_entropy", "spmm", "take_rows",
    "ParamSet", "adam_step",
]
