"""
Mini-batch Adam with best-validation checkpointing, shared by every neural estimator.

An estimator supplies its parameters as a flat list of arrays, an objective
returning (loss, gradients) on a batch of training indices, and a validation
criterion. The criterion is evaluated before the first epoch and after every
epoch; the best checkpoint is returned.
"""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass, field
from typing import Callable, List, Optional, Sequence, Tuple

import numpy as np

from fastnn.errors import NumericError, ShapeError
from fastnn.nets.optim import AdamState, TrainConfig, adam_step, is_finite_params
from fastnn.nets.relu_net import clamp_parameters

logger = logging.getLogger(__name__)

Objective = Callable[[List[np.ndarray], np.ndarray, np.random.Generator], Tuple[float, List[np.ndarray]]]
Criterion = Callable[[List[np.ndarray]], float]


@dataclass
class TrainStreams:
    """Independent generators for initialisation, batch order and dropout masks."""

    init: np.random.Generator
    shuffle: np.random.Generator
    dropout: np.random.Generator

    @classmethod
    def from_seed(cls, seed: int) -> "TrainStreams":
        init, shuffle, dropout = np.random.SeedSequence(seed).spawn(3)
        return cls(np.random.default_rng(init), np.random.default_rng(shuffle), np.random.default_rng(dropout))


@dataclass
class TrainResult:
    params: List[np.ndarray]
    best_epoch: int
    best_valid: float
    initial_valid: float
    history: List[float] = field(default_factory=list)


def fit_parameters(
    params: Sequence[np.ndarray],
    objective: Objective,
    criterion: Criterion,
    n_train: int,
    config: TrainConfig,
    streams: TrainStreams,
    clamp_bound: float = math.inf,
    frozen: Optional[Sequence[int]] = None,
) -> TrainResult:
    """Run config.epochs epochs of shuffled mini-batch Adam.

    frozen lists parameter positions that never move (their gradients are zeroed).
    """
    if n_train < 1:
        raise ShapeError("training set is empty")
    params = [np.array(p, dtype=float, copy=True) for p in params]
    state = AdamState.from_config(params, config)
    frozen_set = set(frozen or ())
    bound = clamp_bound if config.clamp_weights else math.inf

    initial = float(criterion(params))
    best_valid, best_epoch, best_params = initial, 0, [p.copy() for p in params]
    history = [initial]

    for epoch in range(1, config.epochs + 1):
        order = streams.shuffle.permutation(n_train)
        for start in range(0, n_train, config.batch_size):
            idx = order[start:start + config.batch_size]
            loss, grads = objective(params, idx, streams.dropout)
            if not math.isfinite(loss):
                raise NumericError(f"training loss became non-finite at epoch {epoch}")
            if frozen_set:
                grads = [np.zeros_like(g) if i in frozen_set else g for i, g in enumerate(grads)]
            params, state = adam_step(params, grads, state)
            params = clamp_parameters(params, bound)
        if not is_finite_params(params):
            raise NumericError(f"parameters became non-finite at epoch {epoch}")
        valid = float(criterion(params))
        history.append(valid)
        if config.early_stopping and valid < best_valid:
            best_valid, best_epoch, best_params = valid, epoch, [p.copy() for p in params]

    if not config.early_stopping:
        best_params, best_epoch, best_valid = params, config.epochs, history[-1]
    logger.debug("training finished: best epoch %d, valid %.5g (initial %.5g)", best_epoch, best_valid, initial)
    return TrainResult(best_params, best_epoch, best_valid, initial, history)
