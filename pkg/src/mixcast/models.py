"""Forecasting model families built from mixer blocks.

Four families share one interface:

* ``linear``      — a single temporal projection of the lookback window;
* ``tmix_only``   — stacked time-mixing blocks, then a temporal projection;
* ``tsmixer``     — stacked time + feature mixing blocks, then a temporal
                    projection;
* ``tsmixer_ext`` — covariate-aware: the lookback window is first aligned
                    onto the horizon, mixed with known-future and static
                    inputs through conditional blocks, and read out by a
                    per-step linear head (point or negative-binomial).

A ``Forecaster`` owns a flat name -> array parameter dict plus running
normalization statistics; ``forward`` assembles layer structs from those
arrays (or from tape-bound leaves during training) so the same code path
serves inference and differentiation.

Also here: closed-form weight constructions that solve periodic and
affine-periodic signals exactly and track periodic signals under a
Lipschitz trend with bounded error, plus exact parameter counting.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from . import layers as ly
from . import tensor as tc
from .errors import ConfigurationError, DimensionError, ParameterError
from .rng import STREAM_INIT, make_rng
from .tensor import Tape, Tensor

FAMILIES = ("linear", "tmix_only", "tsmixer", "tsmixer_ext")
HEADS = ("point", "negative_binomial")

# Strictly positive floor added to softplus outputs of the distribution head.
HEAD_FLOOR = 1e-6


@dataclass
class ModelConfig:
    """Architecture description; every field is plain data."""

    family: str
    lookback: int
    horizon: int
    targets: int
    hist_covariates: int = 0
    future_covariates: int = 0
    static_features: int = 0
    hidden: int = 8
    blocks: int = 1
    dropout: float = 0.0
    norm: str = "batch2d"
    norm_placement: str = ""  # "" = family default
    batch_stats: str = "joint"
    head: str = "point"
    rev_in: bool = False

    def validate(self) -> None:
        if self.family not in FAMILIES:
            raise ConfigurationError(f"family must be one of {FAMILIES}, got {self.family!r}")
        for name in ("lookback", "horizon", "targets", "hidden", "blocks"):
            v = getattr(self, name)
            if not isinstance(v, int) or v < 1:
                raise ConfigurationError(f"{name} must be a positive integer, got {v!r}")
        for name in ("hist_covariates", "future_covariates", "static_features"):
            v = getattr(self, name)
            if not isinstance(v, int) or v < 0:
                raise ConfigurationError(f"{name} must be a non-negative integer, got {v!r}")
        if not 0.0 <= self.dropout < 1.0:
            raise ConfigurationError(f"dropout must be in [0, 1), got {self.dropout}")
        if self.norm not in ly.NORM_KINDS:
            raise ConfigurationError(f"norm must be one of {ly.NORM_KINDS}, got {self.norm!r}")
        if self.norm_placement not in ("", "pre", "post"):
            raise ConfigurationError(
                f"norm_placement must be '', 'pre' or 'post', got {self.norm_placement!r}"
            )
        if self.batch_stats not in ("joint", "per_feature"):
            raise ConfigurationError(
                f"batch_stats must be 'joint' or 'per_feature', got {self.batch_stats!r}"
            )
        if self.head not in HEADS:
            raise ConfigurationError(f"head must be one of {HEADS}, got {self.head!r}")
        has_covariates = self.hist_covariates or self.future_covariates or self.static_features
        if has_covariates and self.family != "tsmixer_ext":
            raise ConfigurationError(
                f"family {self.family!r} takes targets only; covariates need family 'tsmixer_ext'"
            )
        if self.head == "negative_binomial":
            if self.family != "tsmixer_ext":
                raise ConfigurationError("head 'negative_binomial' requires family 'tsmixer_ext'")
            if self.rev_in:
                raise ConfigurationError(
                    "rev_in shifts the output scale and cannot guarantee the strictly positive "
                    "parameters a negative-binomial head requires"
                )

    @property
    def placement(self) -> str:
        """Norm placement: residual-sum norm for the covariate-aware family,
        input norm for the long-horizon families."""
        if self.norm_placement:
            return self.norm_placement
        return "post" if self.family == "tsmixer_ext" else "pre"

    @property
    def input_channels(self) -> int:
        return self.targets + self.hist_covariates


@dataclass
class ForecastOutput:
    """Point forecast, or distribution parameters for the sampling head."""

    point: Tensor | None = None
    mean: Tensor | None = None
    dispersion: Tensor | None = None


def forward_linear(history, weight, bias) -> Tensor:
    """One temporal projection: forecast = weight @ window (+ bias per step)."""
    return ly.temporal_projection(history, ly.LinearParams(weight, bias))


# ---------------------------------------------------------------------------
# closed-form solutions


def construct_periodic_solution(period: int, lookback: int, horizon: int,
                                scale: float = 1.0, offset: float = 0.0):
    """Weights that forecast x(t) = scale * x(t - period) + offset exactly.

    Each horizon row is one-hot on the lookback position exactly one
    period behind it (within the final period of the window), times
    ``scale``; the bias carries ``offset``.  With scale=1, offset=0 this
    solves purely periodic signals.
    """
    if period < 1:
        raise ParameterError(f"period must be >= 1, got {period}")
    if lookback <= period:
        raise ParameterError(f"lookback must exceed the period, got {lookback} <= {period}")
    if horizon < 1:
        raise ParameterError(f"horizon must be >= 1, got {horizon}")
    weight = np.zeros((horizon, lookback))
    for row in range(horizon):
        step = row + 1  # 1-based horizon position
        # Most recent lag congruent to the step: period steps back maps to the
        # final window position, not one further period behind it.  For pure
        # periodic signals any congruent lag works; the affine recursion is
        # only exact one application deep, so the minimal lag is required.
        col = lookback - period + ((step - 1) % period) + 1  # 1-based position
        weight[row, col - 1] = scale
    bias = np.full(horizon, float(offset))
    return weight, bias


def construct_periodic_plus_trend_solution(period: int, lookback: int, horizon: int):
    """Weights that track a periodic signal riding on a slowly moving trend.

    Reads the final ``period + 1`` lookback positions w[0..period] (w[period]
    being the most recent observation) and forecasts horizon step i as

        w[i mod period] - w[0] + w[period]

    i.e. the periodic shape one period back, re-anchored at the latest
    trend level.  For a signal g(t) + f(t) with g period-periodic and
    |f(t+1) - f(t)| <= K, the error at horizon step i is bounded by
    K * (i + min(i, period)).  Contributions landing on the same
    position add, so step multiples of the period reduce to the pure
    trend-carry forecast w[period].
    """
    if period < 1:
        raise ParameterError(f"period must be >= 1, got {period}")
    if lookback < period + 1:
        raise ParameterError(
            f"lookback must cover period + 1 observations, got {lookback} < {period + 1}"
        )
    if horizon < 1:
        raise ParameterError(f"horizon must be >= 1, got {horizon}")
    weight = np.zeros((horizon, lookback))
    base = lookback - (period + 1)  # window offset of w[0]
    for row in range(horizon):
        step = row + 1
        weight[row, base + period] += 1.0
        weight[row, base + (step % period)] += 1.0
        weight[row, base] -= 1.0
    bias = np.zeros(horizon)
    return weight, bias


# ---------------------------------------------------------------------------
# the forecaster


class Forecaster:
    """A configured model family with its learnable state.

    ``params`` maps dotted names to float64 arrays; ``buffers`` holds the
    non-learnable running statistics of batch normalizers.  ``forward``
    accepts an optional name -> Tensor dict so training can substitute
    tape-bound leaves; otherwise the stored arrays are used as constants.
    Input arrays are always consumed as constants.
    """

    def __init__(self, config: ModelConfig, seed: int = 0):
        config.validate()
        self.config = config
        self.params: dict[str, np.ndarray] = {}
        self.buffers: dict[str, np.ndarray] = {}
        self._build(make_rng(seed, STREAM_INIT))

    # -- construction ------------------------------------------------------

    def _add_linear(self, name: str, out_dim: int, in_dim: int, rng) -> None:
        w, b = ly.linear_init(out_dim, in_dim, rng)
        self.params[f"{name}.weight"] = w
        self.params[f"{name}.bias"] = b

    def _add_norm(self, name: str, rows: int, cols: int) -> None:
        self.params[f"{name}.scale"] = np.ones((rows, cols))
        self.params[f"{name}.shift"] = np.zeros((rows, cols))
        if self.config.norm == "batch2d":
            per_feature = self.config.batch_stats == "per_feature"
            rm, rv = ly.norm_stats_init(cols, per_feature)
            self.buffers[f"{name}.mean"] = rm
            self.buffers[f"{name}.var"] = rv

    def _add_fm(self, name: str, in_dim: int, out_dim: int, rng) -> None:
        h = self.config.hidden
        self._add_linear(f"{name}.hidden", h, in_dim, rng)
        self._add_linear(f"{name}.out", out_dim, h, rng)
        if out_dim != in_dim:
            self._add_linear(f"{name}.residual", out_dim, in_dim, rng)

    def _add_cfm(self, name: str, in_dim: int, rows: int, rng) -> None:
        cfg = self.config
        h = cfg.hidden
        joint_in = in_dim
        if cfg.static_features:
            self._add_fm(f"{name}.static", cfg.static_features, h, rng)
            self._add_norm(f"{name}.static_norm", rows, h)
            joint_in += h
        self._add_fm(f"{name}.joint", joint_in, h, rng)
        self._add_norm(f"{name}.joint_norm", rows, h)

    def _build(self, rng) -> None:
        cfg = self.config
        L, T, C = cfg.lookback, cfg.horizon, cfg.targets
        if cfg.family == "linear":
            self._add_linear("proj", T, L, rng)
            return
        if cfg.family == "tmix_only":
            for k in range(cfg.blocks):
                self._add_linear(f"block{k}.time", L, L, rng)
                self._add_norm(f"block{k}.time_norm", L, C)
            self._add_linear("proj", T, L, rng)
            return
        if cfg.family == "tsmixer":
            for k in range(cfg.blocks):
                self._add_linear(f"block{k}.time", L, L, rng)
                self._add_norm(f"block{k}.time_norm", L, C)
                self._add_fm(f"block{k}.feat", C, C, rng)
                self._add_norm(f"block{k}.feat_norm", L, C)
            self._add_linear("proj", T, L, rng)
            return
        # tsmixer_ext
        H = cfg.hidden
        self._add_linear("align_time", T, L, rng)
        self._add_cfm("hist", cfg.input_channels, T, rng)
        width = H
        if cfg.future_covariates:
            self._add_cfm("future", cfg.future_covariates, T, rng)
            width = 2 * H
        for k in range(cfg.blocks):
            self._add_linear(f"block{k}.time", T, T, rng)
            self._add_norm(f"block{k}.time_norm", T, width)
            self._add_cfm(f"block{k}.cfm", width, T, rng)
            width = H
        self._add_linear("head", C, H, rng)
        if cfg.head == "negative_binomial":
            self._add_linear("dispersion", C, H, rng)

    # -- assembly ----------------------------------------------------------

    def bind(self, tape: Tape) -> dict[str, Tensor]:
        """Bind every learnable array as a leaf of ``tape``."""
        return {name: tape.leaf(arr) for name, arr in self.params.items()}

    def _tensors(self, params) -> dict[str, Tensor]:
        if params is None:
            return {name: Tensor(arr) for name, arr in self.params.items()}
        missing = set(self.params) - set(params)
        if missing:
            raise ConfigurationError(f"forward: missing parameters {sorted(missing)[:3]}...")
        return params

    def _linear(self, P, name) -> ly.LinearParams:
        return ly.LinearParams(P[f"{name}.weight"], P[f"{name}.bias"])

    def _norm(self, P, name) -> ly.NormParams:
        cfg = self.config
        return ly.NormParams(
            kind=cfg.norm,
            scale=P[f"{name}.scale"],
            shift=P[f"{name}.shift"],
            running_mean=self.buffers.get(f"{name}.mean"),
            running_var=self.buffers.get(f"{name}.var"),
            per_feature=cfg.batch_stats == "per_feature",
        )

    def _fm(self, P, name) -> ly.FeatureMixParams:
        residual = None
        if f"{name}.residual.weight" in self.params:
            residual = self._linear(P, f"{name}.residual")
        return ly.FeatureMixParams(
            hidden=self._linear(P, f"{name}.hidden"),
            out=self._linear(P, f"{name}.out"),
            residual=residual,
        )

    def _cfm(self, P, name) -> ly.CondFeatureMixParams:
        has_static = self.config.static_features > 0
        return ly.CondFeatureMixParams(
            joint=self._fm(P, f"{name}.joint"),
            joint_norm=self._norm(P, f"{name}.joint_norm"),
            static_mix=self._fm(P, f"{name}.static") if has_static else None,
            static_norm=self._norm(P, f"{name}.static_norm") if has_static else None,
        )

    # -- forward -----------------------------------------------------------

    def _check_inputs(self, history, future, static):
        cfg = self.config
        hist = np.asarray(history.data if isinstance(history, Tensor) else history, dtype=np.float64)
        if hist.ndim != 3 or hist.shape[1] != cfg.lookback or hist.shape[2] != cfg.input_channels:
            raise DimensionError(
                f"history must be batch x {cfg.lookback} x {cfg.input_channels}, got {hist.shape}"
            )
        batch = hist.shape[0]
        fut = None
        if cfg.future_covariates:
            if future is None:
                raise DimensionError("this configuration requires future covariates")
            fut = np.asarray(future.data if isinstance(future, Tensor) else future, dtype=np.float64)
            if fut.shape != (batch, cfg.horizon, cfg.future_covariates):
                raise DimensionError(
                    f"future covariates must be {batch} x {cfg.horizon} x "
                    f"{cfg.future_covariates}, got {fut.shape}"
                )
        stat = None
        if cfg.static_features:
            if static is None:
                raise DimensionError("this configuration requires static features")
            stat = np.asarray(static.data if isinstance(static, Tensor) else static, dtype=np.float64)
            if stat.shape != (batch, 1, cfg.static_features):
                raise DimensionError(
                    f"static features must be {batch} x 1 x {cfg.static_features}, got {stat.shape}"
                )
        return hist, fut, stat

    def forward(self, history, future=None, static=None, *, mode: str = "eval",
                rng=None, params: dict[str, Tensor] | None = None) -> ForecastOutput:
        cfg = self.config
        if mode not in ("train", "eval"):
            raise ParameterError(f"forward: mode must be 'train' or 'eval', got {mode!r}")
        hist, fut, stat = self._check_inputs(history, future, static)
        P = self._tensors(params)
        rate, placement = cfg.dropout, cfg.placement

        rev_state = None
        if cfg.rev_in:
            targets = hist[:, :, : cfg.targets]
            normalized, rev_state = ly.rev_in_normalize(targets)
            if cfg.hist_covariates:
                x = tc.concat(normalized, Tensor(hist[:, :, cfg.targets:]), axis=-1)
            else:
                x = normalized
        else:
            x = Tensor(hist)

        if cfg.family == "linear":
            out = ly.temporal_projection(x, self._linear(P, "proj"))
        elif cfg.family in ("tmix_only", "tsmixer"):
            h = x
            for k in range(cfg.blocks):
                h = ly.time_mixing(h, self._linear(P, f"block{k}.time"),
                                   self._norm(P, f"block{k}.time_norm"),
                                   rate, mode, rng, placement)
                if cfg.family == "tsmixer":
                    h = ly.feature_mixing(h, self._fm(P, f"block{k}.feat"),
                                          self._norm(P, f"block{k}.feat_norm"),
                                          rate, mode, rng, placement)
            out = ly.temporal_projection(h, self._linear(P, "proj"))
        else:  # tsmixer_ext
            s = Tensor(stat) if stat is not None else None
            aligned = ly.temporal_projection(x, self._linear(P, "align_time"))
            h = ly.conditional_feature_mixing(aligned, s, self._cfm(P, "hist"),
                                              rate, mode, rng, placement)
            if cfg.future_covariates:
                z = ly.conditional_feature_mixing(Tensor(fut), s, self._cfm(P, "future"),
                                                  rate, mode, rng, placement)
                h = tc.concat(h, z, axis=-1)
            for k in range(cfg.blocks):
                h = ly.conditional_mixer_layer(
                    h, s,
                    ly.CondMixerLayerParams(
                        time=self._linear(P, f"block{k}.time"),
                        time_norm=self._norm(P, f"block{k}.time_norm"),
                        cfm=self._cfm(P, f"block{k}.cfm"),
                    ),
                    rate, mode, rng, placement)
            if cfg.head == "negative_binomial":
                mean = tc.add(tc.softplus(ly.feature_linear(h, self._linear(P, "head"))), HEAD_FLOOR)
                disp = tc.add(tc.softplus(ly.feature_linear(h, self._linear(P, "dispersion"))), HEAD_FLOOR)
                return ForecastOutput(mean=mean, dispersion=disp)
            out = ly.feature_linear(h, self._linear(P, "head"))

        if rev_state is not None:
            out = ly.rev_in_denormalize(out, rev_state)
        return ForecastOutput(point=out)


# ---------------------------------------------------------------------------
# bookkeeping


def param_count(config: ModelConfig, include_norm_affine: bool = True) -> int:
    """Exact number of learnable scalars, as a closed-form sum over layers.

    Norm affine parameters (scale/shift per normalized cell) can be
    excluded to expose the additive lookback/channel growth of the
    mixing weights themselves.
    """
    config.validate()
    L, T, C = config.lookback, config.horizon, config.targets
    H, K = config.hidden, config.blocks

    def lin(out_dim: int, in_dim: int) -> int:
        return out_dim * in_dim + out_dim

    def fm(in_dim: int, out_dim: int) -> int:
        n = lin(H, in_dim) + lin(out_dim, H)
        return n + (lin(out_dim, in_dim) if out_dim != in_dim else 0)

    if config.family == "linear":
        return lin(T, L)
    if config.family == "tmix_only":
        n = K * lin(L, L) + lin(T, L)
        affine = K * 2 * L * C
    elif config.family == "tsmixer":
        n = K * (lin(L, L) + fm(C, C)) + lin(T, L)
        affine = K * 2 * (2 * L * C)
    else:  # tsmixer_ext
        Cs, Cz = config.static_features, config.future_covariates

        def cfm(in_dim: int) -> tuple[int, int]:
            weights = fm(in_dim + (H if Cs else 0), H)
            aff = 2 * T * H
            if Cs:
                weights += fm(Cs, H)
                aff += 2 * T * H
            return weights, aff

        n = lin(T, L)
        affine = 0
        w, a = cfm(config.input_channels)
        n, affine = n + w, affine + a
        width = H
        if Cz:
            w, a = cfm(Cz)
            n, affine = n + w, affine + a
            width = 2 * H
        for _ in range(K):
            n += lin(T, T)
            affine += 2 * T * width
            w, a = cfm(width)
            n, affine = n + w, affine + a
            width = H
        n += lin(C, H)
        if config.head == "negative_binomial":
            n += lin(C, H)
    return n + (affine if include_norm_affine else 0)
