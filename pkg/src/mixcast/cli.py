"""Command-line interface.

Subcommands: ``train``, ``evaluate``, ``forecast``, ``synth``, and
``verify-theory``.  Experiments are described by an INI file (see
``mixcast train --print-config`` for the full default).  Every artifact
starts with a provenance comment naming the tool version and seed, and
contains no timestamps, so reruns of the same configuration produce
byte-identical outputs.

Exit codes: 0 success, 1 usage/configuration/data errors, 2 numeric
failures and internal errors.
"""

from __future__ import annotations

import argparse
import configparser
import sys
import traceback
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from . import __version__
from . import data as dt
from . import metrics as mt
from . import models as md
from . import training as tr
from .errors import ConfigurationError, DataError, MixcastError, NumericError
from .params_io import load_params, save_params

_BUFFER_PREFIX = "buffer:"


def provenance(seed: int | None = None) -> str:
    if seed is None:
        return f"mixcast {__version__}"
    return f"mixcast {__version__} seed={seed}"


# ---------------------------------------------------------------------------
# experiment configuration


_DEFAULTS: dict[str, dict[str, str]] = {
    "run": {"seed": "0", "out": "runs/experiment"},
    "data": {"csv": "", "schema": "", "standardize": "true"},
    "split": {"fractions": "0.7 0.2 0.1", "ranges": ""},
    "window": {"lookback": "48", "horizon": "12", "stride": "1"},
    "model": {
        "family": "tsmixer",
        "hidden": "16",
        "blocks": "2",
        "dropout": "0.0",
        "norm": "batch2d",
        "norm_placement": "",
        "batch_stats": "joint",
        "head": "point",
        "rev_in": "false",
    },
    "train": {
        "learning_rate": "0.001",
        "max_epochs": "100",
        "patience": "5",
        "batch_size": "32",
        "objective": "mse",
    },
}


@dataclass
class Experiment:
    """Fully resolved experiment settings (strings parsed and validated)."""

    seed: int
    out: Path
    csv: Path
    schema: Path | None
    standardize: bool
    split: dt.SplitSpec
    window: dt.WindowSpec
    model: dict  # family + hyperparameters; channel counts come from the data
    train: tr.TrainConfig
    resolved: dict[str, dict[str, str]]  # for the config snapshot


def _merge_config(path: Path | None) -> dict[str, dict[str, str]]:
    merged = {section: dict(keys) for section, keys in _DEFAULTS.items()}
    if path is None:
        return merged
    parser = configparser.ConfigParser()
    parser.optionxform = str
    if not parser.read(path):
        raise ConfigurationError(f"config file {path} not found")
    for section in parser.sections():
        if section not in merged:
            raise ConfigurationError(f"unknown config section [{section}]")
        for key, value in parser.items(section):
            if key not in merged[section]:
                raise ConfigurationError(f"unknown config key {key!r} in section [{section}]")
            merged[section][key] = value
    return merged


def _parse_int(raw: str, where: str) -> int:
    try:
        return int(raw)
    except ValueError:
        raise ConfigurationError(f"{where} must be an integer, got {raw!r}") from None


def _parse_float(raw: str, where: str) -> float:
    try:
        return float(raw)
    except ValueError:
        raise ConfigurationError(f"{where} must be a number, got {raw!r}") from None


def _parse_bool(raw: str, where: str) -> bool:
    low = raw.strip().lower()
    if low in ("true", "yes", "1", "on"):
        return True
    if low in ("false", "no", "0", "off"):
        return False
    raise ConfigurationError(f"{where} must be a boolean, got {raw!r}")


def _parse_split(section: dict[str, str]) -> dt.SplitSpec:
    ranges_raw = section["ranges"].strip()
    if ranges_raw:
        parts = ranges_raw.split()
        if len(parts) != 3:
            raise ConfigurationError(f"split.ranges needs three start:stop pairs, got {ranges_raw!r}")
        ranges = []
        for part in parts:
            lo, _, hi = part.partition(":")
            ranges.append((_parse_int(lo, "split.ranges"), _parse_int(hi, "split.ranges")))
        spec = dt.SplitSpec(ranges=tuple(ranges))
    else:
        fracs = [_parse_float(f, "split.fractions") for f in section["fractions"].split()]
        if len(fracs) != 3:
            raise ConfigurationError("split.fractions needs three values")
        spec = dt.SplitSpec(fractions=tuple(fracs))
    spec.validate()
    return spec


def load_experiment(path: Path | None, out_override: str | None = None) -> Experiment:
    raw = _merge_config(path)
    if out_override:
        raw["run"]["out"] = out_override
    seed = _parse_int(raw["run"]["seed"], "run.seed")
    csv = raw["data"]["csv"].strip()
    window = dt.WindowSpec(
        lookback=_parse_int(raw["window"]["lookback"], "window.lookback"),
        horizon=_parse_int(raw["window"]["horizon"], "window.horizon"),
        stride=_parse_int(raw["window"]["stride"], "window.stride"),
    )
    window.validate()
    train_cfg = tr.TrainConfig(
        learning_rate=_parse_float(raw["train"]["learning_rate"], "train.learning_rate"),
        max_epochs=_parse_int(raw["train"]["max_epochs"], "train.max_epochs"),
        patience=_parse_int(raw["train"]["patience"], "train.patience"),
        batch_size=_parse_int(raw["train"]["batch_size"], "train.batch_size"),
        objective=raw["train"]["objective"].strip(),
        seed=seed,
    )
    train_cfg.validate()
    model = dict(raw["model"])
    model["hidden"] = _parse_int(model["hidden"], "model.hidden")
    model["blocks"] = _parse_int(model["blocks"], "model.blocks")
    model["dropout"] = _parse_float(model["dropout"], "model.dropout")
    model["rev_in"] = _parse_bool(model["rev_in"], "model.rev_in")
    return Experiment(
        seed=seed,
        out=Path(raw["run"]["out"]),
        csv=Path(csv) if csv else Path(""),
        schema=Path(raw["data"]["schema"]) if raw["data"]["schema"].strip() else None,
        standardize=_parse_bool(raw["data"]["standardize"], "data.standardize"),
        split=_parse_split(raw["split"]),
        window=window,
        model=model,
        train=train_cfg,
        resolved=raw,
    )


def _config_text(raw: dict[str, dict[str, str]], seed: int) -> str:
    lines = [f"# {provenance(seed)}"]
    for section in _DEFAULTS:  # fixed section order
        lines.append(f"[{section}]")
        for key in _DEFAULTS[section]:
            lines.append(f"{key} = {raw[section][key]}")
        lines.append("")
    return "\n".join(lines)


def _model_config_for(frame: dt.SeriesFrame, exp: Experiment) -> md.ModelConfig:
    cfg = md.ModelConfig(
        family=exp.model["family"].strip(),
        lookback=exp.window.lookback,
        horizon=exp.window.horizon,
        targets=len(frame.columns_for("target")),
        hist_covariates=len(frame.columns_for("historical")),
        future_covariates=len(frame.columns_for("future")),
        static_features=len(frame.columns_for("static")),
        hidden=exp.model["hidden"],
        blocks=exp.model["blocks"],
        dropout=exp.model["dropout"],
        norm=exp.model["norm"].strip(),
        norm_placement=exp.model["norm_placement"].strip(),
        batch_stats=exp.model["batch_stats"].strip(),
        head=exp.model["head"].strip(),
        rev_in=exp.model["rev_in"],
    )
    cfg.validate()
    return cfg


# ---------------------------------------------------------------------------
# checkpoints


_MODEL_FIELDS = ("family", "lookback", "horizon", "targets", "hist_covariates",
                 "future_covariates", "static_features", "hidden", "blocks", "dropout",
                 "norm", "norm_placement", "batch_stats", "head", "rev_in")


def save_checkpoint(out: Path, model: md.Forecaster, scaler: dt.Standardizer | None,
                    seed: int) -> None:
    lines = [f"# {provenance(seed)}", "[model]"]
    for name in _MODEL_FIELDS:
        lines.append(f"{name} = {getattr(model.config, name)!r}")
    lines.append("")
    lines.append("[preprocess]")
    lines.append(f"standardize = {scaler is not None}")
    if scaler is not None:
        lines.append(f"columns = {' '.join(scaler.columns)}")
        lines.append(f"mean = {' '.join(repr(float(v)) for v in scaler.mean)}")
        lines.append(f"std = {' '.join(repr(float(v)) for v in scaler.std)}")
    lines.append("")
    (out / "model.ini").write_text("\n".join(lines))
    blob = dict(model.params)
    for name, buf in model.buffers.items():
        blob[_BUFFER_PREFIX + name] = buf
    save_params(out / "params.bin", blob)


def load_checkpoint(path: Path) -> tuple[md.Forecaster, dt.Standardizer | None]:
    path = Path(path)
    ini = path / "model.ini" if path.is_dir() else path
    if not ini.exists():
        raise ConfigurationError(f"checkpoint {path} has no model.ini")
    parser = configparser.ConfigParser()
    parser.optionxform = str
    parser.read(ini)
    sec = parser["model"]
    cfg = md.ModelConfig(
        family=sec["family"].strip("'\""),
        lookback=int(sec["lookback"]),
        horizon=int(sec["horizon"]),
        targets=int(sec["targets"]),
        hist_covariates=int(sec["hist_covariates"]),
        future_covariates=int(sec["future_covariates"]),
        static_features=int(sec["static_features"]),
        hidden=int(sec["hidden"]),
        blocks=int(sec["blocks"]),
        dropout=float(sec["dropout"]),
        norm=sec["norm"].strip("'\""),
        norm_placement=sec["norm_placement"].strip("'\""),
        batch_stats=sec["batch_stats"].strip("'\""),
        head=sec["head"].strip("'\""),
        rev_in=sec["rev_in"] == "True",
    )
    model = md.Forecaster(cfg, seed=0)
    blob = load_params(ini.parent / "params.bin")
    for name in model.params:
        if name not in blob:
            raise ConfigurationError(f"checkpoint is missing parameter {name!r}")
        if blob[name].shape != model.params[name].shape:
            raise ConfigurationError(
                f"checkpoint parameter {name!r} has shape {blob[name].shape}, "
                f"expected {model.params[name].shape}"
            )
        model.params[name][...] = blob[name]
    for name in model.buffers:
        key = _BUFFER_PREFIX + name
        if key in blob:
            model.buffers[name][...] = blob[key]
    scaler = None
    if parser.has_section("preprocess") and parser["preprocess"].get("standardize") == "True":
        pre = parser["preprocess"]
        scaler = dt.Standardizer(
            columns=pre["columns"].split(),
            mean=np.array([float(v) for v in pre["mean"].split()]),
            std=np.array([float(v) for v in pre["std"].split()]),
        )
    return model, scaler


# ---------------------------------------------------------------------------
# subcommands


def cmd_train(args) -> int:
    exp = load_experiment(args.config, args.out)
    args.out = str(exp.out)  # resolved dir, so failures can leave error.log there
    if args.print_config:
        print(_config_text(exp.resolved, exp.seed))
        return 0
    if not str(exp.csv):
        raise ConfigurationError("data.csv must point at a training CSV")
    if exp.train.objective == "nb_nll" and exp.standardize:
        raise ConfigurationError(
            "objective nb_nll models non-negative counts; set data.standardize = false"
        )
    schema = dt.load_schema(exp.schema) if exp.schema else None
    frame = dt.load_csv(exp.csv, schema)
    bounds = exp.split.bounds(frame.n_steps)
    scaler = None
    if exp.standardize:
        frame, scaler = dt.global_standardize(frame, train_rows=bounds[0][1])
    train_w, val_w, _ = dt.split_windows(frame, exp.split, exp.window)
    model = md.Forecaster(_model_config_for(frame, exp), seed=exp.seed)
    _, history = tr.train(model, train_w, val_w, exp.train)

    out = exp.out
    out.mkdir(parents=True, exist_ok=True)
    (out / "config.ini").write_text(_config_text(exp.resolved, exp.seed))
    save_checkpoint(out, model, scaler, exp.seed)
    hist_lines = [f"# {provenance(exp.seed)}", "epoch,train_loss,val_loss"]
    for rec in history.records:
        hist_lines.append(f"{rec.epoch},{rec.train_loss!r},{rec.val_loss!r}")
    (out / "history.csv").write_text("\n".join(hist_lines) + "\n")
    print(f"trained {model.config.family}: best epoch {history.best_epoch}, "
          f"val loss {history.best_val_loss:.6g} ({history.stop_reason}); artifacts in {out}")
    return 0


def _eval_forecasts(model: md.Forecaster, windows: dt.WindowBatch, batch: int = 256):
    outputs = []
    cfg = model.config
    for lo in range(0, len(windows), batch):
        chunk = windows.subset(slice(lo, lo + batch))
        out = model.forward(chunk.history,
                            chunk.future if cfg.future_covariates else None,
                            chunk.static if cfg.static_features else None)
        outputs.append((out.point if out.point is not None else out.mean).data)
    return np.concatenate(outputs, axis=0)


def cmd_evaluate(args) -> int:
    model, scaler = load_checkpoint(args.checkpoint)
    schema = dt.load_schema(args.schema) if args.schema else None
    frame = dt.load_csv(args.csv, schema)
    raw_frame = frame
    if scaler is not None:
        frame = scaler.apply(frame)
    cfg = model.config
    windows = dt.make_windows(frame, dt.WindowSpec(cfg.lookback, cfg.horizon))
    if len(windows) == 0:
        raise DataError(f"{args.csv}: needs at least {cfg.lookback + cfg.horizon} rows to evaluate")
    pred = _eval_forecasts(model, windows)
    target_cols = frame.columns_for("target")
    if scaler is not None:
        pred = scaler.invert(pred, target_cols)
    truth = np.stack([raw_frame.values[s + cfg.lookback : s + cfg.lookback + cfg.horizon,
                                       raw_frame.indices_for("target")]
                      for s in windows.starts])
    mse = float(np.mean((pred - truth) ** 2))
    mae = tr.mae_metric(pred, truth)
    lines = [f"# {provenance()}", f"windows: {len(windows)}",
             f"mse: {mse!r}", f"mae: {mae!r}"]

    if args.hierarchy:
        spec = mt.load_hierarchy(args.hierarchy)
        # Single holdout: forecast the final horizon from the window before it.
        last = len(raw_frame.values) - cfg.horizon - cfg.lookback
        final = windows.subset(np.nonzero(windows.starts == last)[0])
        if len(final) != 1:
            raise DataError("hierarchy evaluation needs the final window intact")
        fpred = _eval_forecasts(model, final)[0]
        if scaler is not None:
            fpred = scaler.invert(fpred, target_cols)
        idx = raw_frame.indices_for("target")
        forecasts = {c: fpred[:, k] for k, c in enumerate(target_cols)}
        actuals = {c: raw_frame.values[last + cfg.lookback :, j]
                   for c, j in zip(target_cols, idx)}
        histories = {c: raw_frame.values[: last + cfg.lookback, j]
                     for c, j in zip(target_cols, idx)}
        score, per_level = mt.wrmsse(forecasts, actuals, histories, spec)
        lines.append(f"wrmsse: {score!r}")
        for name, value in per_level.items():
            lines.append(f"level {name}: {value!r}")
        per_series = sorted(((mt.rmsse(forecasts[c], actuals[c], histories[c]), c)
                             for c in target_cols), reverse=True)
        worst = " ".join(f"{c}={v:.4f}" for v, c in per_series[:5])
        lines.append(f"worst series: {worst}")

    report = "\n".join(lines) + "\n"
    if args.out:
        Path(args.out).write_text(report)
    print(report, end="")
    return 0


def cmd_forecast(args) -> int:
    model, scaler = load_checkpoint(args.checkpoint)
    schema = dt.load_schema(args.schema) if args.schema else None
    frame = dt.load_csv(args.csv, schema)
    cfg = model.config
    if frame.n_steps < cfg.lookback:
        raise DataError(
            f"{args.csv}: forecasting needs at least lookback = {cfg.lookback} rows, "
            f"got {frame.n_steps}"
        )
    if scaler is not None:
        frame = scaler.apply(frame)
    hist_idx = frame.indices_for("target") + frame.indices_for("historical")
    history = frame.values[-cfg.lookback:, hist_idx][None, :, :]
    future = None
    if cfg.future_covariates:
        raise ConfigurationError(
            "forecasting with future covariates needs horizon rows that do not exist yet; "
            "provide them via evaluate on an extended CSV instead"
        )
    static = None
    if cfg.static_features:
        static = frame.values[0, frame.indices_for("static")][None, None, :]
    out = model.forward(history, future, static)
    target_cols = frame.columns_for("target")
    if out.point is not None:
        pred = out.point.data[0]
        if scaler is not None:
            pred = scaler.invert(pred, target_cols)
        result = dt.SeriesFrame(pred, target_cols, {c: "target" for c in target_cols})
    else:
        mu, alpha = out.mean.data[0], out.dispersion.data[0]
        cols = [f"{c}_mean" for c in target_cols] + [f"{c}_dispersion" for c in target_cols]
        result = dt.SeriesFrame(np.hstack([mu, alpha]), cols, {c: "target" for c in cols})
    dt.save_csv(result, args.out, header_lines=(provenance(),))
    print(f"wrote {cfg.horizon} forecast rows to {args.out}")
    return 0


def cmd_synth(args) -> int:
    kind = args.kind
    if kind == "periodic":
        frame = dt.synth_periodic(args.period, args.steps, variates=args.variates,
                                  amplitude=args.amplitude, seed=args.seed, kind=args.waveform)
    elif kind == "affine":
        frame = dt.synth_affine_periodic(args.period, args.steps, scale=args.scale,
                                         offset=args.offset, variates=args.variates,
                                         seed=args.seed)
    elif kind == "trend":
        frame = dt.synth_periodic_plus_trend(args.period, args.steps,
                                             slope_limit=args.slope_limit,
                                             variates=args.variates, seed=args.seed)
    else:  # crossvariate
        frame = dt.synth_crossvariate(args.steps, lag=args.lag, noise=args.noise,
                                      seed=args.seed)
    dt.save_csv(frame, args.out, header_lines=(provenance(args.seed),))
    print(f"wrote {frame.n_steps} x {len(frame.columns)} {kind} series to {args.out}")
    return 0


def cmd_verify_theory(args) -> int:
    rng_master = np.random.Generator(np.random.Philox([args.seed, 17]))
    violations: list[str] = []
    worst_periodic = 0.0
    for trial in range(args.trials):
        period = int(rng_master.integers(2, 9))
        lookback = period + 1 + int(rng_master.integers(0, 8))
        horizon = int(rng_master.integers(1, 2 * period + 1))
        sub_seed = int(rng_master.integers(1 << 30))

        # exact solution on a purely periodic signal
        frame = dt.synth_periodic(period, lookback + horizon + 40, seed=sub_seed,
                                  kind="template")
        w, b = md.construct_periodic_solution(period, lookback, horizon)
        if args.corrupt:
            w = w.copy()
            w[0, 0] += 0.01
        series = frame.values
        start = series.shape[0] - lookback - horizon
        hist = series[start : start + lookback][None, :, :]
        targ = series[start + lookback :][:, 0]
        pred = md.forward_linear(hist, w, b).data[0, :, 0]
        err = float(np.max(np.abs(pred - targ)))
        worst_periodic = max(worst_periodic, err)
        if err > 1e-9:
            violations.append(f"trial {trial}: periodic solution error {err:.3e} > 1e-9 "
                              f"(period={period}, lookback={lookback}, horizon={horizon})")

        # bounded error under a Lipschitz trend
        K = float(rng_master.uniform(0.0, 1.5))
        tframe = dt.synth_periodic_plus_trend(period, lookback + horizon + 40,
                                              slope_limit=K, seed=sub_seed)
        w2, b2 = md.construct_periodic_plus_trend_solution(period, lookback, horizon)
        tseries = tframe.values
        hist2 = tseries[start : start + lookback][None, :, :]
        targ2 = tseries[start + lookback :][:, 0]
        pred2 = md.forward_linear(hist2, w2, b2).data[0, :, 0]
        steps = np.arange(1, horizon + 1)
        bound = K * (steps + np.minimum(steps, period))
        excess = np.abs(pred2 - targ2) - bound
        if np.any(excess > 1e-9):
            i = int(np.argmax(excess))
            violations.append(
                f"trial {trial}: trend-tracking error {abs(pred2[i] - targ2[i]):.3e} exceeds "
                f"bound {bound[i]:.3e} at step {i + 1} (period={period}, K={K:.3f})"
            )

    print(f"# {provenance(args.seed)}")
    print(f"periodic construction: {args.trials} trials, max error {worst_periodic:.3e} "
          f"(gate 1e-9)")
    print(f"trend-tracking construction: {args.trials} trials against the "
          f"K*(step + min(step, period)) bound")
    if violations:
        for v in violations:
            print(f"VIOLATION: {v}")
        print(f"{len(violations)} violation(s) found")
        return 1
    print("all checks passed")
    return 0


# ---------------------------------------------------------------------------
# entry point


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="mixcast",
                                     description="Mixer-style time-series forecasting")
    parser.add_argument("--version", action="version", version=f"mixcast {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    p_train = sub.add_parser("train", help="train a model from an experiment INI")
    p_train.add_argument("--config", type=Path, default=None, help="experiment INI file")
    p_train.add_argument("--out", default=None, help="override the output directory")
    p_train.add_argument("--print-config", action="store_true",
                         help="print the fully resolved configuration and exit")
    p_train.set_defaults(fn=cmd_train)

    p_eval = sub.add_parser("evaluate", help="score a checkpoint on a CSV")
    p_eval.add_argument("--checkpoint", type=Path, required=True)
    p_eval.add_argument("--csv", type=Path, required=True)
    p_eval.add_argument("--schema", type=Path, default=None)
    p_eval.add_argument("--hierarchy", type=Path, default=None,
                        help="JSON hierarchy spec enabling the weighted scaled score")
    p_eval.add_argument("--out", type=Path, default=None, help="also write the report here")
    p_eval.set_defaults(fn=cmd_evaluate)

    p_fc = sub.add_parser("forecast", help="forecast past the end of a CSV")
    p_fc.add_argument("--checkpoint", type=Path, required=True)
    p_fc.add_argument("--csv", type=Path, required=True)
    p_fc.add_argument("--schema", type=Path, default=None)
    p_fc.add_argument("--out", type=Path, required=True)
    p_fc.set_defaults(fn=cmd_forecast)

    p_synth = sub.add_parser("synth", help="generate synthetic series")
    p_synth.add_argument("--kind", choices=("periodic", "affine", "trend", "crossvariate"),
                         required=True)
    p_synth.add_argument("--steps", type=int, required=True)
    p_synth.add_argument("--period", type=int, default=7)
    p_synth.add_argument("--variates", type=int, default=1)
    p_synth.add_argument("--amplitude", type=float, default=1.0)
    p_synth.add_argument("--waveform", choices=("sine", "template"), default="sine")
    p_synth.add_argument("--scale", type=float, default=1.0)
    p_synth.add_argument("--offset", type=float, default=0.0)
    p_synth.add_argument("--slope-limit", type=float, default=0.1)
    p_synth.add_argument("--lag", type=int, default=8)
    p_synth.add_argument("--noise", type=float, default=0.05)
    p_synth.add_argument("--seed", type=int, default=0)
    p_synth.add_argument("--out", type=Path, required=True)
    p_synth.set_defaults(fn=cmd_synth)

    p_vt = sub.add_parser("verify-theory",
                          help="check the closed-form solutions against fresh signals")
    p_vt.add_argument("--trials", type=int, default=100)
    p_vt.add_argument("--seed", type=int, default=0)
    p_vt.add_argument("--corrupt", action="store_true",
                      help="perturb the periodic solution to prove the gate trips")
    p_vt.set_defaults(fn=cmd_verify_theory)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.fn(args)
    except NumericError as exc:
        print(f"numeric failure: {exc}", file=sys.stderr)
        _write_error_log(args, exc)
        return 2
    except MixcastError as exc:
        print(f"error: {exc}", file=sys.stderr)
        _write_error_log(args, exc)
        return 1
    except Exception as exc:  # noqa: BLE001 - last-resort internal error
        print(f"internal error: {exc}", file=sys.stderr)
        _write_error_log(args, exc)
        return 2


def _write_error_log(args, exc: Exception) -> None:
    out = getattr(args, "out", None)
    try:
        if out:
            out = Path(out)
            log_dir = out if out.suffix == "" else out.parent
            log_dir.mkdir(parents=True, exist_ok=True)
            (log_dir / "error.log").write_text(
                "".join(traceback.format_exception(type(exc), exc, exc.__traceback__))
            )
    except OSError:
        pass  # the diagnostic already went to stderr


def console_main() -> None:
    sys.exit(main())


if __name__ == "__main__":
    console_main()
