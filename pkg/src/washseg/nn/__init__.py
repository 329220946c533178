from .layers import (
    AvgPool1d,
    BatchNorm1d,
    Conv1d,
    Layer,
    LeakyReLU,
    Linear,
    MaxPool1d,
    Param,
    PPMBlock,
    SEBlock,
    Sigmoid,
    Upsample1d,
)
from .loss import softmax, softmax_cross_entropy
from .adam import Adam
from .gradcheck import GradCheckReport, grad_check
from . import checkpoint

__all__ = [
    "Adam",
    "AvgPool1d",
    "BatchNorm1d",
    "Conv1d",
    "GradCheckReport",
    "Layer",
    "LeakyReLU",
    "Linear",
    "MaxPool1d",
    "Param",
    "PPMBlock",
    "SEBlock",
    "Sigmoid",
    "Upsample1d",
    "checkpoint",
    "grad_check",
    "softmax",
    "softmax_cross_entropy",
]
