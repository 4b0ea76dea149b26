from fastnn.nets.optim import AdamState, TrainConfig, adam_step, apply_input_dropout
from fastnn.nets.relu_net import (
    DenseReLUNet,
    StackedReLUNets,
    backprop,
    backward,
    forward,
    forward_with_cache,
    init_net,
    init_stacked,
    truncate,
)

__all__ = [
    "AdamState",
    "DenseReLUNet",
    "StackedReLUNets",
    "TrainConfig",
    "adam_step",
    "apply_input_dropout",
    "backprop",
    "backward",
    "forward",
    "forward_with_cache",
    "init_net",
    "init_stacked",
    "truncate",
]
