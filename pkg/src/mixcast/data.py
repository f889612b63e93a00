"""Data handling: CSV ingest, column roles, scaling, windowing, splits,
and synthetic series generators.

A SeriesFrame is a dense (steps x columns) float64 table plus a role per
column: ``target`` (forecast these), ``historical`` (observed over the
lookback only), ``future`` (known over the horizon too), ``static``
(constant per series).  Windowing turns a frame into aligned arrays:

    history  N x lookback x (targets + historicals)
    future   N x horizon  x futures
    static   N x 1        x statics
    target   N x horizon  x targets

Splits are chronological.  Windowing a split lets validation and test
windows reach back across the partition boundary for lookback context —
targets never cross a boundary, so no evaluated value leaks forward.
All scaling statistics come from training rows only.
"""

from __future__ import annotations

import configparser
import csv
import warnings
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .errors import ConfigurationError, DataError, ParameterError, SchemaError
from .rng import make_rng

ROLES = ("target", "historical", "future", "static")

# Standard deviations below this floor count as "no variation".
SCALE_FLOOR = 1e-8


@dataclass
class SeriesFrame:
    """Dense multivariate series with one role per column."""

    values: np.ndarray
    columns: list[str]
    roles: dict[str, str]

    def __post_init__(self):
        self.values = np.asarray(self.values, dtype=np.float64)
        if self.values.ndim != 2:
            raise DataError(f"frame values must be steps x columns, got shape {self.values.shape}")
        if self.values.shape[1] != len(self.columns):
            raise DataError(
                f"{len(self.columns)} column names for {self.values.shape[1]} value columns"
            )
        if len(set(self.columns)) != len(self.columns):
            raise SchemaError("duplicate column names")
        for col in self.columns:
            role = self.roles.get(col)
            if role not in ROLES:
                raise SchemaError(f"column {col!r} has invalid role {role!r}; expected one of {ROLES}")
        for col in self.columns_for("static"):
            series = self.values[:, self.columns.index(col)]
            if series.size and not np.all(series == series[0]):
                raise SchemaError(f"static column {col!r} is not constant over time")
        if not np.all(np.isfinite(self.values)):
            raise DataError("frame contains non-finite values")

    @property
    def n_steps(self) -> int:
        return self.values.shape[0]

    def columns_for(self, role: str) -> list[str]:
        return [c for c in self.columns if self.roles[c] == role]

    def indices_for(self, role: str) -> list[int]:
        return [self.columns.index(c) for c in self.columns_for(role)]

    def slice_rows(self, start: int, stop: int) -> "SeriesFrame":
        return SeriesFrame(self.values[start:stop].copy(), list(self.columns), dict(self.roles))


def load_schema(path) -> dict[str, str]:
    """Read a column-role schema from an INI file with a [roles] section."""
    parser = configparser.ConfigParser()
    parser.optionxform = str  # column names are case sensitive
    read = parser.read(path)
    if not read:
        raise SchemaError(f"schema file {path} not found")
    if not parser.has_section("roles"):
        raise SchemaError(f"schema file {path} has no [roles] section")
    schema = {}
    for col, role in parser.items("roles"):
        if role not in ROLES:
            raise SchemaError(f"schema column {col!r}: invalid role {role!r}")
        schema[col] = role
    return schema


def load_csv(path, schema: dict[str, str] | None = None) -> SeriesFrame:
    """Read a numeric CSV (header row, '#' comment lines) into a frame.

    ``schema`` maps column names to roles; omitted columns default to
    ``target``.  Ragged rows, unparseable or non-finite cells, and schema
    columns missing from the header are rejected with the offending
    location named.
    """
    header: list[str] | None = None
    rows: list[list[float]] = []
    with open(path, newline="") as fh:
        reader = csv.reader(fh)
        for row in reader:
            if not row or (row[0].lstrip().startswith("#")):
                continue
            if header is None:
                header = [c.strip() for c in row]
                continue
            if len(row) != len(header):
                raise DataError(
                    f"{path}: line {reader.line_num}: expected {len(header)} fields, got {len(row)}"
                )
            parsed = []
            for col, cell in zip(header, row):
                text = cell.strip()
                if not text:
                    raise DataError(f"{path}: line {reader.line_num}: column {col!r} is empty")
                try:
                    value = float(text)
                except ValueError:
                    raise DataError(
                        f"{path}: line {reader.line_num}: column {col!r} has non-numeric "
                        f"value {text!r}"
                    ) from None
                if not np.isfinite(value):
                    raise DataError(
                        f"{path}: line {reader.line_num}: column {col!r} is not finite ({text})"
                    )
                parsed.append(value)
            rows.append(parsed)
    if header is None:
        raise DataError(f"{path}: no header row found")
    if not rows:
        raise DataError(f"{path}: no data rows found")
    schema = dict(schema or {})
    unknown = set(schema) - set(header)
    if unknown:
        raise SchemaError(f"{path}: schema declares missing columns {sorted(unknown)}")
    roles = {col: schema.get(col, "target") for col in header}
    return SeriesFrame(np.asarray(rows, dtype=np.float64), header, roles)


def save_csv(frame: SeriesFrame, path, header_lines: tuple[str, ...] = ()) -> None:
    """Write a frame as CSV; ``header_lines`` become '#' comments on top."""
    with open(path, "w", newline="") as fh:
        for line in header_lines:
            fh.write(f"# {line}\n")
        writer = csv.writer(fh)
        writer.writerow(frame.columns)
        for row in frame.values:
            writer.writerow([repr(float(v)) for v in row])


# ---------------------------------------------------------------------------
# scaling


@dataclass
class Standardizer:
    """Per-column (x - mean) / std, fit on training rows only."""

    columns: list[str]
    mean: np.ndarray
    std: np.ndarray

    def apply(self, frame: SeriesFrame) -> SeriesFrame:
        values = frame.values.copy()
        for i, col in enumerate(self.columns):
            if col not in frame.columns:
                raise SchemaError(f"standardizer column {col!r} missing from frame")
            j = frame.columns.index(col)
            values[:, j] = (values[:, j] - self.mean[i]) / self.std[i]
        return SeriesFrame(values, list(frame.columns), dict(frame.roles))

    def invert(self, values: np.ndarray, columns: list[str]) -> np.ndarray:
        """Map standardized values (..., len(columns)) back to raw units."""
        out = np.asarray(values, dtype=np.float64).copy()
        for k, col in enumerate(columns):
            if col not in self.columns:
                raise SchemaError(f"column {col!r} was not standardized")
            i = self.columns.index(col)
            out[..., k] = out[..., k] * self.std[i] + self.mean[i]
        return out


def global_standardize(frame: SeriesFrame, train_rows: int) -> tuple[SeriesFrame, Standardizer]:
    """Standardize every non-static column using the first ``train_rows`` rows.

    Columns with (near-)zero variance over the training rows get a floored
    deviation and a warning; they standardize to zeros rather than blowing up.
    """
    if not 1 <= train_rows <= frame.n_steps:
        raise ParameterError(f"train_rows must be in [1, {frame.n_steps}], got {train_rows}")
    cols = [c for c in frame.columns if frame.roles[c] != "static"]
    idx = [frame.columns.index(c) for c in cols]
    train = frame.values[:train_rows, idx]
    mean = train.mean(axis=0)
    std = train.std(axis=0)
    flat = std < SCALE_FLOOR
    if np.any(flat):
        names = [c for c, f in zip(cols, flat) if f]
        warnings.warn(f"columns {names} are constant over the training rows; "
                      "standardizing with a floored deviation")
        std = np.where(flat, 1.0, std)
    scaler = Standardizer(cols, mean, std)
    return scaler.apply(frame), scaler


def mean_scale_local(history: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Divide each window's channels by their per-window mean level.

    Windows whose mean is not strictly positive keep scale 1 (with a
    warning), so the transform is always invertible.  Returns the scaled
    copy and the scales, shaped (windows, 1, channels).
    """
    history = np.asarray(history, dtype=np.float64)
    if history.ndim != 3:
        raise ParameterError(f"mean_scale_local expects windows x steps x channels, got {history.shape}")
    scales = history.mean(axis=1, keepdims=True)
    bad = scales <= 0.0
    if np.any(bad):
        warnings.warn(f"{int(bad.sum())} window channel(s) have non-positive mean level; "
                      "left unscaled")
        scales = np.where(bad, 1.0, scales)
    return history / scales, scales


def rescale_forecast(values: np.ndarray, scales: np.ndarray) -> np.ndarray:
    """Undo :func:`mean_scale_local` on aligned forecast values."""
    values = np.asarray(values, dtype=np.float64)
    if values.shape[0] != scales.shape[0] or values.shape[-1] != scales.shape[-1]:
        raise ParameterError(
            f"forecast shape {values.shape} does not align with scales {scales.shape}"
        )
    return values * scales


# ---------------------------------------------------------------------------
# windowing and splits


@dataclass
class WindowSpec:
    lookback: int
    horizon: int
    stride: int = 1

    def validate(self) -> None:
        for name in ("lookback", "horizon", "stride"):
            v = getattr(self, name)
            if not isinstance(v, int) or v < 1:
                raise ConfigurationError(f"{name} must be a positive integer, got {v!r}")


@dataclass
class WindowBatch:
    """Aligned window arrays; empty batches keep their trailing shape."""

    history: np.ndarray
    future: np.ndarray
    static: np.ndarray
    target: np.ndarray
    starts: np.ndarray = field(default_factory=lambda: np.zeros(0, dtype=np.int64))

    def __len__(self) -> int:
        return self.history.shape[0]

    def subset(self, idx) -> "WindowBatch":
        return WindowBatch(self.history[idx], self.future[idx], self.static[idx],
                           self.target[idx], self.starts[idx])


def _windows_between(frame: SeriesFrame, spec: WindowSpec, lo: int, hi: int) -> WindowBatch:
    """Windows whose target block lies inside rows [lo, hi); history may
    extend left of ``lo`` but not before row 0."""
    L, T, stride = spec.lookback, spec.horizon, spec.stride
    hist_idx = frame.indices_for("target") + frame.indices_for("historical")
    fut_idx = frame.indices_for("future")
    stat_idx = frame.indices_for("static")
    targ_idx = frame.indices_for("target")

    first = max(lo - L, 0)
    starts = np.arange(first, hi - L - T + 1, stride, dtype=np.int64)
    if starts.size == 0:
        warnings.warn(
            f"no windows fit: rows [{lo}, {hi}) cannot host lookback {L} + horizon {T}"
        )
    history = np.stack([frame.values[s : s + L][:, hist_idx] for s in starts]) \
        if starts.size else np.zeros((0, L, len(hist_idx)))
    future = np.stack([frame.values[s + L : s + L + T][:, fut_idx] for s in starts]) \
        if starts.size else np.zeros((0, T, len(fut_idx)))
    target = np.stack([frame.values[s + L : s + L + T][:, targ_idx] for s in starts]) \
        if starts.size else np.zeros((0, T, len(targ_idx)))
    if starts.size:
        static_row = frame.values[0, stat_idx][None, :]
        static = np.tile(static_row, (starts.size, 1, 1))
    else:
        static = np.zeros((0, 1, len(stat_idx)))
    return WindowBatch(history, future, static, target, starts)


def make_windows(frame: SeriesFrame, spec: WindowSpec) -> WindowBatch:
    """Slide a lookback+horizon window over the whole frame.

    Yields floor((steps - lookback - horizon) / stride) + 1 windows; a
    frame too short for a single window gives an empty batch and a warning.
    """
    spec.validate()
    return _windows_between(frame, spec, 0, frame.n_steps)


@dataclass
class SplitSpec:
    """Chronological three-way split: fractions of rows, or explicit
    [start, stop) row ranges."""

    fractions: tuple[float, float, float] | None = None
    ranges: tuple[tuple[int, int], tuple[int, int], tuple[int, int]] | None = None

    def validate(self) -> None:
        if (self.fractions is None) == (self.ranges is None):
            raise ConfigurationError("split needs exactly one of fractions or ranges")
        if self.fractions is not None:
            if len(self.fractions) != 3 or any(f < 0 for f in self.fractions):
                raise ConfigurationError(f"fractions must be three non-negative values, got {self.fractions}")
            if abs(sum(self.fractions) - 1.0) > 1e-9:
                raise ConfigurationError(f"fractions must sum to 1, got {self.fractions}")
        else:
            for lo, hi in self.ranges:
                if lo > hi:
                    raise ConfigurationError(f"range ({lo}, {hi}) is reversed")
            for (a, b), (c, d) in zip(self.ranges, self.ranges[1:]):
                if b > c:
                    raise ConfigurationError("split ranges must be ordered and non-overlapping")

    def bounds(self, steps: int) -> tuple[tuple[int, int], tuple[int, int], tuple[int, int]]:
        self.validate()
        if self.fractions is not None:
            n1 = int(steps * self.fractions[0])
            n2 = int(steps * self.fractions[1])
            return (0, n1), (n1, n1 + n2), (n1 + n2, steps)
        for lo, hi in self.ranges:
            if hi > steps:
                raise ConfigurationError(f"split range ({lo}, {hi}) exceeds {steps} rows")
        return self.ranges


DEFAULT_SPLIT = SplitSpec(fractions=(0.7, 0.2, 0.1))


def split(frame: SeriesFrame, spec: SplitSpec = DEFAULT_SPLIT) -> tuple[SeriesFrame, SeriesFrame, SeriesFrame]:
    """Cut a frame into chronological train/val/test frames."""
    b = spec.bounds(frame.n_steps)
    return tuple(frame.slice_rows(lo, hi) for lo, hi in b)


def split_windows(frame: SeriesFrame, split_spec: SplitSpec,
                  window_spec: WindowSpec) -> tuple[WindowBatch, WindowBatch, WindowBatch]:
    """Window each partition, letting lookback context cross boundaries
    backwards (targets stay inside their partition)."""
    window_spec.validate()
    b = split_spec.bounds(frame.n_steps)
    return tuple(_windows_between(frame, window_spec, lo, hi) for lo, hi in b)


# ---------------------------------------------------------------------------
# synthetic generators


def _frame_of(values: np.ndarray, prefix: str = "y") -> SeriesFrame:
    cols = [f"{prefix}{i}" for i in range(values.shape[1])]
    return SeriesFrame(values, cols, {c: "target" for c in cols})


def synth_periodic(period: int, steps: int, variates: int = 1, amplitude: float = 1.0,
                   seed: int = 0, kind: str = "sine") -> SeriesFrame:
    """Exactly period-periodic signal: random-phase sinusoid or a repeated
    random template."""
    if period < 1 or steps < 1 or variates < 1:
        raise ParameterError("period, steps, and variates must be positive")
    rng = make_rng(seed)
    t = np.arange(steps)
    if kind == "sine":
        phase = rng.uniform(0.0, period, size=variates)
        values = amplitude * np.sin(2.0 * np.pi * ((t[:, None] % period) + phase) / period)
    elif kind == "template":
        template = amplitude * rng.normal(size=(period, variates))
        values = template[t % period]
    else:
        raise ParameterError(f"kind must be 'sine' or 'template', got {kind!r}")
    return _frame_of(values)


def synth_affine_periodic(period: int, steps: int, scale: float, offset: float,
                          variates: int = 1, seed: int = 0) -> SeriesFrame:
    """Recursion x(t) = scale * x(t - period) + offset from a random start."""
    if period < 1 or steps < 1 or variates < 1:
        raise ParameterError("period, steps, and variates must be positive")
    rng = make_rng(seed)
    values = np.empty((steps, variates))
    head = min(period, steps)
    values[:head] = rng.normal(size=(head, variates))
    for t in range(period, steps):
        values[t] = scale * values[t - period] + offset
    return _frame_of(values)


def synth_periodic_plus_trend(period: int, steps: int, slope_limit: float,
                              variates: int = 1, seed: int = 0) -> SeriesFrame:
    """Periodic template plus a random walk with per-step increments
    clipped to [-slope_limit, slope_limit] (a slope_limit-Lipschitz trend)."""
    if slope_limit < 0:
        raise ParameterError(f"slope_limit must be non-negative, got {slope_limit}")
    base = synth_periodic(period, steps, variates, seed=seed, kind="template").values
    rng = make_rng(seed, 1)
    drift = rng.uniform(-slope_limit, slope_limit, size=(steps - 1, variates))
    trend = np.vstack([np.zeros((1, variates)), np.cumsum(drift, axis=0)])
    return _frame_of(base + trend)


def synth_crossvariate(steps: int, lag: int, noise: float = 0.05, seed: int = 0) -> SeriesFrame:
    """Two targets where y1 copies y0 from ``lag`` steps earlier plus noise.

    Forecasting y1 within `lag` steps is deterministic given y0's history —
    but only for a model that mixes information across variates.
    """
    if lag < 1 or lag >= steps:
        raise ParameterError(f"lag must be in [1, steps), got {lag}")
    rng = make_rng(seed)
    driver = rng.normal(size=steps)
    follower = noise * rng.normal(size=steps)
    follower[lag:] += driver[:-lag]
    return _frame_of(np.column_stack([driver, follower]))
