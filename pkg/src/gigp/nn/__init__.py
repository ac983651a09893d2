from .checkpoint import CheckpointError, load_checkpoint, save_checkpoint
from .gradcheck import GradCheckReport, grad_check, numeric_grad, relative_error
from .modules import MLP, Linear, Module, cross_entropy, mse_loss, param
from .optim import Adam, AdamState, adam_step
from .tensor import (
    Tensor,
    add,
    as_tensor,
    concat,
    div,
    exp,
    gather,
    log_softmax,
    matmul,
    mean,
    mul,
    reshape,
    segment_sum,
    sigmoid,
    softmax,
    square,
    sub,
    swish,
    transpose,
    tsum,
)

__all__ = [
    "Adam", "AdamState", "CheckpointError", "GradCheckReport", "Linear", "MLP", "Module", "Tensor",
    "adam_step", "add", "as_tensor", "concat", "cross_entropy", "div", "exp", "gather", "grad_check",
    "load_checkpoint", "log_softmax", "matmul", "mean", "mse_loss", "mul", "numeric_grad", "param",
    "relative_error", "reshape", "save_checkpoint", "segment_sum", "sigmoid", "softmax", "square",
    "sub", "swish", "transpose", "tsum",
]
