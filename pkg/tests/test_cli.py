"""End-to-end tests for the command-line interface.

Everything runs in-process through ``cli.main`` so exit codes and output
files can be asserted directly; training runs are kept tiny.
"""

import json

import numpy as np
import pytest

from mixcast import __version__
from mixcast import cli
from mixcast import data as dt
from mixcast import models as md


def run_cli(*argv):
    return cli.main(list(argv))


@pytest.fixture
def workdir(tmp_path, monkeypatch):
    monkeypatch.chdir(tmp_path)
    return tmp_path


def write_series(path, steps=200, period=7, variates=2, seed=3):
    run_cli("synth", "--kind", "periodic", "--steps", str(steps), "--period",
            str(period), "--variates", str(variates), "--seed", str(seed),
            "--out", str(path))


LINEAR_INI = """\
[run]
seed = 7
out = {out}

[data]
csv = series.csv

[window]
lookback = 14
horizon = 7

[model]
family = linear
norm = identity

[train]
learning_rate = 0.01
max_epochs = 25
patience = 5
"""


def train_linear(workdir, out="run1"):
    write_series(workdir / "series.csv")
    (workdir / "exp.ini").write_text(LINEAR_INI.format(out=out))
    assert run_cli("train", "--config", "exp.ini") == 0
    return workdir / out


# ---------------------------------------------------------------------------
# synth


def test_synth_writes_provenance_and_loadable_csv(workdir):
    assert run_cli("synth", "--kind", "periodic", "--steps", "50", "--period", "5",
                   "--variates", "3", "--seed", "9", "--out", "s.csv") == 0
    text = (workdir / "s.csv").read_text()
    assert text.splitlines()[0] == f"# mixcast {__version__} seed=9"
    frame = dt.load_csv(workdir / "s.csv")
    assert frame.values.shape == (50, 3)
    # exactly periodic
    assert np.allclose(frame.values[5:], frame.values[:-5])


def test_synth_crossvariate_kind(workdir):
    assert run_cli("synth", "--kind", "crossvariate", "--steps", "60", "--lag", "4",
                   "--noise", "0.0", "--seed", "1", "--out", "x.csv") == 0
    frame = dt.load_csv(workdir / "x.csv")
    assert np.allclose(frame.values[4:, 1], frame.values[:-4, 0])


# ---------------------------------------------------------------------------
# train


def test_train_produces_all_artifacts(workdir, capsys):
    out = train_linear(workdir)
    for name in ("config.ini", "model.ini", "params.bin", "history.csv"):
        assert (out / name).exists(), name
    assert "trained linear" in capsys.readouterr().out
    header = (out / "history.csv").read_text().splitlines()
    assert header[0] == f"# mixcast {__version__} seed=7"
    assert header[1] == "epoch,train_loss,val_loss"
    # losses parse back to floats and decrease overall
    first = float(header[2].split(",")[1])
    last = float(header[-1].split(",")[1])
    assert last < first


def test_rerun_is_byte_identical(workdir):
    out1 = train_linear(workdir, out="run1")
    (workdir / "exp.ini").write_text(LINEAR_INI.format(out="run2"))
    assert run_cli("train", "--config", "exp.ini") == 0
    out2 = workdir / "run2"
    for name in ("model.ini", "params.bin", "history.csv"):
        assert (out1 / name).read_bytes() == (out2 / name).read_bytes(), name


def test_print_config_shows_resolved_defaults(workdir, capsys):
    assert run_cli("train", "--print-config") == 0
    text = capsys.readouterr().out
    assert "[train]" in text
    assert "learning_rate = 0.001" in text
    assert text.splitlines()[0] == f"# mixcast {__version__} seed=0"


def test_unknown_config_key_rejected(workdir, capsys):
    (workdir / "bad.ini").write_text("[model]\nfamly = linear\n")
    assert run_cli("train", "--config", "bad.ini") == 1
    assert "famly" in capsys.readouterr().err


def test_unknown_config_section_rejected(workdir, capsys):
    (workdir / "bad.ini").write_text("[models]\nfamily = linear\n")
    assert run_cli("train", "--config", "bad.ini") == 1
    assert "[models]" in capsys.readouterr().err


def test_nb_objective_with_standardize_rejected(workdir, capsys):
    write_series(workdir / "series.csv")
    (workdir / "bad.ini").write_text(
        "[data]\ncsv = series.csv\n[train]\nobjective = nb_nll\n"
    )
    assert run_cli("train", "--config", "bad.ini") == 1
    assert "standardize" in capsys.readouterr().err


@pytest.mark.filterwarnings("ignore::RuntimeWarning")  # overflow is the point
def test_divergent_training_exits_2_and_logs(workdir, capsys):
    write_series(workdir / "series.csv", steps=80)
    (workdir / "exp.ini").write_text(
        "[run]\nout = boom\n[data]\ncsv = series.csv\n"
        "[window]\nlookback = 14\nhorizon = 7\n"
        "[model]\nfamily = linear\nnorm = identity\n"
        "[train]\nlearning_rate = 1e160\nmax_epochs = 5\n"
    )
    assert run_cli("train", "--config", "exp.ini") == 2
    assert "non-finite" in capsys.readouterr().err
    assert "non-finite" in (workdir / "boom" / "error.log").read_text()


# ---------------------------------------------------------------------------
# checkpoints


def test_checkpoint_roundtrip_exact(workdir):
    cfg = md.ModelConfig(family="tsmixer", lookback=10, horizon=4, targets=2,
                         hidden=6, blocks=2)
    model = md.Forecaster(cfg, seed=5)
    for buf in model.buffers.values():
        buf += 0.25  # make running stats distinguishable from their init
    scaler = dt.Standardizer(["a", "b"], np.array([1.5, -2.0]),
                             np.array([0.31459265358979, 2.0]))
    cli.save_checkpoint(workdir, model, scaler, seed=7)
    loaded, loaded_scaler = cli.load_checkpoint(workdir)
    assert loaded.config == cfg
    for name, value in model.params.items():
        assert np.array_equal(loaded.params[name], value), name
    for name, value in model.buffers.items():
        assert np.array_equal(loaded.buffers[name], value), name
    assert loaded_scaler.columns == scaler.columns
    assert np.array_equal(loaded_scaler.mean, scaler.mean)
    assert np.array_equal(loaded_scaler.std, scaler.std)


def test_checkpoint_without_scaler(workdir):
    cfg = md.ModelConfig(family="linear", lookback=8, horizon=2, targets=1)
    cli.save_checkpoint(workdir, md.Forecaster(cfg, seed=0), None, seed=0)
    _, scaler = cli.load_checkpoint(workdir)
    assert scaler is None


def test_checkpoint_missing_model_ini(workdir, capsys):
    assert run_cli("evaluate", "--checkpoint", str(workdir / "nope"),
                   "--csv", "x.csv") == 1
    assert "model.ini" in capsys.readouterr().err


# ---------------------------------------------------------------------------
# evaluate / forecast


def test_evaluate_reports_low_error_on_training_series(workdir, capsys):
    out = train_linear(workdir)
    assert run_cli("evaluate", "--checkpoint", str(out), "--csv", "series.csv") == 0
    text = capsys.readouterr().out
    mse = float(next(l for l in text.splitlines() if l.startswith("mse:")).split()[1])
    assert mse < 1e-3  # periodic series, linear model: near-exact


def test_evaluate_with_hierarchy(workdir, capsys):
    out = train_linear(workdir)
    hier = {"levels": [
        {"name": "total", "groups": {"all": ["y0", "y1"]}, "weights": {"all": 1.0}},
        {"name": "series", "groups": {"y0": ["y0"], "y1": ["y1"]},
         "weights": {"y0": 0.5, "y1": 0.5}},
    ]}
    (workdir / "hier.json").write_text(json.dumps(hier))
    capsys.readouterr()  # drop the training output
    assert run_cli("evaluate", "--checkpoint", str(out), "--csv", "series.csv",
                   "--hierarchy", "hier.json", "--out", "report.txt") == 0
    text = (workdir / "report.txt").read_text()
    assert "wrmsse:" in text
    assert "level total:" in text
    assert "worst series:" in text
    assert text == capsys.readouterr().out


def test_forecast_writes_horizon_rows(workdir):
    out = train_linear(workdir)
    assert run_cli("forecast", "--checkpoint", str(out), "--csv", "series.csv",
                   "--out", "fc.csv") == 0
    fc = dt.load_csv(workdir / "fc.csv")
    assert fc.values.shape == (7, 2)
    # the series is 7-periodic, so the forecast should repeat the last cycle
    actual = dt.load_csv(workdir / "series.csv").values[-7:]
    assert np.allclose(fc.values, actual, atol=0.05)


def test_forecast_rejects_short_history(workdir, capsys):
    out = train_linear(workdir)
    short = dt.load_csv(workdir / "series.csv").slice_rows(0, 10)
    dt.save_csv(short, workdir / "short.csv")
    assert run_cli("forecast", "--checkpoint", str(out), "--csv", "short.csv",
                   "--out", "fc.csv") == 1
    assert "lookback" in capsys.readouterr().err


def test_nb_forecast_emits_mean_and_dispersion(workdir):
    rng = np.random.default_rng(0)
    counts = rng.poisson(4.0, size=(120, 1)).astype(float)
    frame = dt.SeriesFrame(counts, ["sales"], {"sales": "target"})
    dt.save_csv(frame, workdir / "counts.csv")
    (workdir / "nb.ini").write_text(
        "[run]\nseed = 2\nout = nbrun\n"
        "[data]\ncsv = counts.csv\nstandardize = false\n"
        "[window]\nlookback = 14\nhorizon = 5\n"
        "[model]\nfamily = tsmixer_ext\nhidden = 4\nblocks = 1\n"
        "head = negative_binomial\n"
        "[train]\nobjective = nb_nll\nlearning_rate = 0.01\nmax_epochs = 4\npatience = 2\n"
    )
    assert run_cli("train", "--config", "nb.ini") == 0
    assert run_cli("forecast", "--checkpoint", "nbrun", "--csv", "counts.csv",
                   "--out", "fc.csv") == 0
    fc = dt.load_csv(workdir / "fc.csv")
    assert fc.columns == ["sales_mean", "sales_dispersion"]
    assert fc.values.shape == (5, 2)
    assert np.all(fc.values > 0.0)


# ---------------------------------------------------------------------------
# verify-theory


def test_verify_theory_passes(capsys):
    assert run_cli("verify-theory", "--trials", "20", "--seed", "4") == 0
    out = capsys.readouterr().out
    assert "all checks passed" in out
    assert "VIOLATION" not in out


def test_verify_theory_corrupt_negative_control(capsys):
    assert run_cli("verify-theory", "--trials", "5", "--corrupt") == 1
    assert "VIOLATION" in capsys.readouterr().out
