"""Losses, the Adam optimizer, and the training loop.

The loop is deterministic given its seed: batch shuffling and dropout
draw from separate counter-based streams, so two runs with the same seed
produce bitwise-identical parameter trajectories and histories.  Early
stopping tracks the best validation loss (ties and sub-1e-12 wiggles do
not count as improvement), keeps a snapshot of the best parameters, and
restores them when training ends.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from scipy import special as _sp

from . import tensor as tc
from .data import WindowBatch
from .errors import ConfigurationError, NumericError, ParameterError
from .models import Forecaster
from .rng import STREAM_DROPOUT, STREAM_SHUFFLE, make_rng
from .tensor import Tape, Tensor

OBJECTIVES = ("mse", "nb_nll")

# Validation improvements smaller than this are treated as ties.
IMPROVEMENT_ATOL = 1e-12


# ---------------------------------------------------------------------------
# losses


def mse_loss(pred, target) -> Tensor:
    """Mean squared error over all elements; differentiable."""
    pred = pred if isinstance(pred, Tensor) else Tensor(pred)
    diff = tc.sub(pred, target if isinstance(target, Tensor) else Tensor(target))
    return tc.mean(tc.mul(diff, diff))


def mae_metric(pred, target) -> float:
    """Mean absolute error as a plain float (evaluation only)."""
    p = pred.data if isinstance(pred, Tensor) else np.asarray(pred)
    t = target.data if isinstance(target, Tensor) else np.asarray(target)
    return float(np.mean(np.abs(p - t)))


def nb_nll_loss(mean, dispersion, counts) -> Tensor:
    """Mean negative log-likelihood of counts under a negative binomial.

    Parameterized by mean mu > 0 and dispersion alpha > 0 with variance
    mu + alpha * mu^2; alpha -> 0 recovers the Poisson limit.  ``counts``
    must be non-negative (integer-valued in the usual use).
    """
    mu = mean if isinstance(mean, Tensor) else Tensor(mean)
    alpha = dispersion if isinstance(dispersion, Tensor) else Tensor(dispersion)
    y = np.asarray(counts.data if isinstance(counts, Tensor) else counts, dtype=np.float64)
    if np.any(y < 0):
        raise ParameterError("nb_nll_loss: counts must be non-negative")
    if np.any(mu.data <= 0) or np.any(alpha.data <= 0):
        raise ParameterError("nb_nll_loss: mean and dispersion must be strictly positive")
    r = tc.div(1.0, alpha)  # number of failures; Poisson limit as r -> inf
    log_sum = tc.log(tc.add(r, mu))
    ll = tc.sub(tc.lgamma(tc.add(y, r)), tc.lgamma(r))
    ll = tc.sub(ll, Tensor(_sp.gammaln(y + 1.0)))
    ll = tc.add(ll, tc.mul(r, tc.sub(tc.log(r), log_sum)))
    ll = tc.add(ll, tc.mul(y, tc.sub(tc.log(mu), log_sum)))
    return tc.neg(tc.mean(ll))


# ---------------------------------------------------------------------------
# optimizer


@dataclass
class AdamState:
    """First/second moment estimates per parameter plus the step count."""

    m: dict[str, np.ndarray]
    v: dict[str, np.ndarray]
    step: int = 0


def adam_init(params: dict[str, np.ndarray]) -> AdamState:
    return AdamState(
        m={k: np.zeros_like(p) for k, p in params.items()},
        v={k: np.zeros_like(p) for k, p in params.items()},
    )


def adam_step(params: dict[str, np.ndarray], grads: dict[str, np.ndarray],
              state: AdamState, lr: float, beta1: float = 0.9, beta2: float = 0.999,
              eps: float = 1e-8) -> None:
    """One bias-corrected Adam update, in place."""
    if set(grads) != set(params):
        raise ParameterError("adam_step: gradient names do not match parameter names")
    state.step += 1
    t = state.step
    bc1 = 1.0 - beta1 ** t
    bc2 = 1.0 - beta2 ** t
    for name, p in params.items():
        g = grads[name]
        m = state.m[name]
        v = state.v[name]
        m *= beta1
        m += (1.0 - beta1) * g
        v *= beta2
        v += (1.0 - beta2) * g * g
        p -= lr * (m / bc1) / (np.sqrt(v / bc2) + eps)


# ---------------------------------------------------------------------------
# training loop


@dataclass
class TrainConfig:
    learning_rate: float = 1e-3
    max_epochs: int = 100
    patience: int = 5
    batch_size: int = 32
    objective: str = "mse"
    seed: int = 0

    def validate(self) -> None:
        if self.learning_rate <= 0:
            raise ConfigurationError(f"learning_rate must be positive, got {self.learning_rate}")
        for name in ("max_epochs", "patience", "batch_size"):
            v = getattr(self, name)
            if not isinstance(v, int) or v < 1:
                raise ConfigurationError(f"{name} must be a positive integer, got {v!r}")
        if self.objective not in OBJECTIVES:
            raise ConfigurationError(f"objective must be one of {OBJECTIVES}, got {self.objective!r}")


@dataclass
class EpochRecord:
    epoch: int
    train_loss: float
    val_loss: float


@dataclass
class TrainHistory:
    records: list[EpochRecord] = field(default_factory=list)
    best_epoch: int = 0
    best_val_loss: float = math.inf
    stop_reason: str = ""


def _loss_for(model: Forecaster, batch: WindowBatch, objective: str, mode: str,
              rng, params) -> Tensor:
    cfg = model.config
    out = model.forward(batch.history,
                        batch.future if cfg.future_covariates else None,
                        batch.static if cfg.static_features else None,
                        mode=mode, rng=rng, params=params)
    if objective == "mse":
        return mse_loss(out.point, batch.target)
    return nb_nll_loss(out.mean, out.dispersion, batch.target)


def dataset_loss(model: Forecaster, windows: WindowBatch, objective: str = "mse",
                 batch_size: int = 256) -> float:
    """Eval-mode loss over a whole window set, size-weighted over chunks."""
    if len(windows) == 0:
        raise ParameterError("dataset_loss: empty window set")
    total = 0.0
    for lo in range(0, len(windows), batch_size):
        chunk = windows.subset(slice(lo, lo + batch_size))
        loss = _loss_for(model, chunk, objective, "eval", None, None)
        total += loss.item() * len(chunk)
    return total / len(windows)


def _batch_slices(n: int, batch_size: int, avoid_singleton: bool) -> list[slice]:
    slices = [slice(lo, min(lo + batch_size, n)) for lo in range(0, n, batch_size)]
    # A trailing single-sample batch cannot feed batch statistics; fold it
    # into its neighbor.
    if avoid_singleton and len(slices) > 1 and slices[-1].stop - slices[-1].start == 1:
        last = slices.pop()
        prev = slices.pop()
        slices.append(slice(prev.start, last.stop))
    return slices


def train(model: Forecaster, train_windows: WindowBatch, val_windows: WindowBatch,
          config: TrainConfig) -> tuple[dict[str, np.ndarray], TrainHistory]:
    """Fit ``model`` in place; returns its parameters and the epoch history.

    Aborts with a NumericError naming the epoch and batch if the training
    loss ever goes non-finite.
    """
    config.validate()
    if len(train_windows) == 0 or len(val_windows) == 0:
        raise ParameterError("train: empty train or validation window set")
    if config.objective == "nb_nll" and model.config.head != "negative_binomial":
        raise ConfigurationError("objective nb_nll requires a negative_binomial head")
    if config.objective == "mse" and model.config.head != "point":
        raise ConfigurationError("objective mse requires a point head")

    shuffle_rng = make_rng(config.seed, STREAM_SHUFFLE)
    dropout_rng = make_rng(config.seed, STREAM_DROPOUT)
    opt = adam_init(model.params)
    history = TrainHistory()
    best_params = {k: p.copy() for k, p in model.params.items()}
    best_buffers = {k: b.copy() for k, b in model.buffers.items()}
    bad_epochs = 0
    uses_batch_stats = model.config.norm == "batch2d"

    for epoch in range(1, config.max_epochs + 1):
        order = shuffle_rng.permutation(len(train_windows))
        epoch_loss = 0.0
        for bi, sl in enumerate(_batch_slices(len(order), config.batch_size, uses_batch_stats)):
            batch = train_windows.subset(order[sl])
            tape = Tape()
            bound = model.bind(tape)
            loss = _loss_for(model, batch, config.objective, "train", dropout_rng, bound)
            value = loss.item()
            if not np.isfinite(value):
                raise NumericError(f"training loss went non-finite at epoch {epoch}, batch {bi}")
            grads = tc.backward(tape, loss)
            adam_step(model.params, {k: np.array(grads[t.nid].data) for k, t in bound.items()},
                      opt, config.learning_rate)
            epoch_loss += value * len(batch)
        epoch_loss /= len(train_windows)
        val_loss = dataset_loss(model, val_windows, config.objective)
        history.records.append(EpochRecord(epoch, epoch_loss, val_loss))

        if val_loss < history.best_val_loss - IMPROVEMENT_ATOL:
            history.best_val_loss = val_loss
            history.best_epoch = epoch
            best_params = {k: p.copy() for k, p in model.params.items()}
            best_buffers = {k: b.copy() for k, b in model.buffers.items()}
            bad_epochs = 0
        else:
            bad_epochs += 1
            if bad_epochs >= config.patience:
                history.stop_reason = "early_stopping"
                break
    if not history.stop_reason:
        history.stop_reason = "max_epochs"

    # Restore the best snapshot in place so external references stay valid.
    for k, p in model.params.items():
        p[...] = best_params[k]
    for k, b in model.buffers.items():
        b[...] = best_buffers[k]
    return model.params, history
