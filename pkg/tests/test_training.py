"""Losses, optimizer, and the training loop."""

import numpy as np
import pytest
from scipy import optimize, stats

from mixcast import data as dt
from mixcast import errors
from mixcast import models as md
from mixcast import tensor as tc
from mixcast import training as tr
from mixcast.rng import make_rng
from mixcast.tensor import Tensor


class TestLosses:
    def test_mse_known_value(self):
        pred = np.array([[1.0, 2.0], [3.0, 4.0]])
        target = np.array([[1.0, 0.0], [3.0, 8.0]])
        assert tr.mse_loss(pred, target).item() == pytest.approx((4.0 + 16.0) / 4.0)

    def test_mae_known_value(self):
        assert tr.mae_metric(np.array([1.0, -2.0]), np.array([0.0, 2.0])) == pytest.approx(2.5)

    def test_mse_gradient(self):
        rng = make_rng(80)
        pred = rng.normal(size=(3, 4))
        target = rng.normal(size=(3, 4))

        def f(ps):
            return tr.mse_loss(ps[0], Tensor(target))

        assert tc.grad_check(f, [pred]) < 1e-4


class TestNegativeBinomial:
    def test_matches_scipy_logpmf(self):
        rng = make_rng(81)
        y = rng.integers(0, 40, size=(4, 5)).astype(np.float64)
        mu = rng.uniform(0.5, 20.0, size=(4, 5))
        alpha = rng.uniform(0.05, 2.0, size=(4, 5))
        ours = tr.nb_nll_loss(mu, alpha, y).item()
        r = 1.0 / alpha
        p = r / (r + mu)
        want = float(np.mean(-stats.nbinom.logpmf(y, r, p)))
        assert ours == pytest.approx(want, abs=1e-10)

    def test_poisson_limit_at_small_dispersion(self):
        mu = np.array([[40.0]])
        y = np.array([[40.0]])
        ours = tr.nb_nll_loss(mu, np.array([[1e-6]]), y).item()
        poisson = -(40.0 * np.log(40.0) - 40.0 - np.log(np.arange(1, 41)).sum())
        want = float(-stats.poisson.logpmf(40, 40.0))
        assert ours == pytest.approx(want, abs=1e-3)
        assert ours == pytest.approx(poisson, abs=1e-3)

    def test_variance_identity_by_simulation(self):
        # Sampling with matching parameters reproduces mu + alpha * mu^2.
        mu, alpha = 6.0, 0.4
        r = 1.0 / alpha
        p = r / (r + mu)
        draws = stats.nbinom.rvs(r, p, size=200_000, random_state=7)
        assert draws.mean() == pytest.approx(mu, rel=0.02)
        assert draws.var() == pytest.approx(mu + alpha * mu * mu, rel=0.05)

    def test_gradients(self):
        rng = make_rng(82)
        y = rng.integers(0, 15, size=(3, 3)).astype(np.float64)
        mu = rng.uniform(1.0, 10.0, size=(3, 3))
        alpha = rng.uniform(0.2, 1.5, size=(3, 3))

        def f(ps):
            return tr.nb_nll_loss(ps[0], ps[1], y)

        assert tc.grad_check(f, [mu, alpha]) < 1e-4

    def test_mean_recovery_by_scalar_minimization(self):
        counts = np.array([3.0, 7.0, 4.0, 5.0, 0.0, 9.0, 2.0, 6.0])
        alpha = np.full_like(counts, 0.5)

        def nll(mu_scalar):
            return tr.nb_nll_loss(np.full_like(counts, mu_scalar), alpha, counts).item()

        res = optimize.minimize_scalar(nll, bounds=(0.1, 30.0), method="bounded",
                                       options={"xatol": 1e-8})
        assert res.x == pytest.approx(counts.mean(), abs=1e-3)

    def test_domain_checks(self):
        with pytest.raises(errors.ParameterError, match="non-negative"):
            tr.nb_nll_loss(np.ones(2), np.ones(2), np.array([1.0, -1.0]))
        with pytest.raises(errors.ParameterError, match="positive"):
            tr.nb_nll_loss(np.array([1.0, 0.0]), np.ones(2), np.ones(2))


class TestAdam:
    def reference_adam(self, grads_seq, lr, beta1=0.9, beta2=0.999, eps=1e-8):
        """Textbook loop implementation used as the oracle."""
        p = np.zeros_like(grads_seq[0])
        m = np.zeros_like(p)
        v = np.zeros_like(p)
        for t, g in enumerate(grads_seq, start=1):
            m = beta1 * m + (1 - beta1) * g
            v = beta2 * v + (1 - beta2) * g * g
            mhat = m / (1 - beta1 ** t)
            vhat = v / (1 - beta2 ** t)
            p = p - lr * mhat / (np.sqrt(vhat) + eps)
        return p

    def test_zero_gradient_leaves_parameters(self):
        params = {"w": np.array([1.0, -2.0])}
        state = tr.adam_init(params)
        tr.adam_step(params, {"w": np.zeros(2)}, state, lr=0.1)
        np.testing.assert_array_equal(params["w"], [1.0, -2.0])

    def test_first_step_magnitude(self):
        params = {"w": np.array([0.0])}
        state = tr.adam_init(params)
        tr.adam_step(params, {"w": np.array([1.0])}, state, lr=0.01)
        assert params["w"][0] == pytest.approx(-0.01, rel=1e-6)

    def test_matches_reference_sequence(self):
        rng = make_rng(83)
        grads = [rng.normal(size=(3, 2)) for _ in range(7)]
        params = {"w": np.zeros((3, 2))}
        state = tr.adam_init(params)
        for g in grads:
            tr.adam_step(params, {"w": g}, state, lr=0.05)
        np.testing.assert_allclose(params["w"], self.reference_adam(grads, 0.05), rtol=1e-12)

    def test_name_mismatch_rejected(self):
        params = {"w": np.zeros(2)}
        with pytest.raises(errors.ParameterError):
            tr.adam_step(params, {"x": np.zeros(2)}, tr.adam_init(params), lr=0.1)


def periodic_windows(steps=400, lookback=12, horizon=4, seed=1):
    frame = dt.synth_periodic(6, steps, seed=seed)
    return dt.split_windows(frame, dt.DEFAULT_SPLIT, dt.WindowSpec(lookback, horizon))


class TestTrainLoop:
    def test_loss_decreases_and_best_restored(self):
        train_w, val_w, _ = periodic_windows()
        cfg = md.ModelConfig(family="linear", lookback=12, horizon=4, targets=1)
        model = md.Forecaster(cfg, seed=2)
        tcfg = tr.TrainConfig(learning_rate=0.01, max_epochs=30, patience=30, batch_size=32, seed=3)
        _, history = tr.train(model, train_w, val_w, tcfg)
        assert history.records[-1].train_loss < history.records[0].train_loss
        restored_val = tr.dataset_loss(model, val_w)
        assert restored_val == pytest.approx(history.best_val_loss, abs=1e-12)

    def test_bitwise_deterministic_across_runs(self):
        def run():
            train_w, val_w, _ = periodic_windows()
            cfg = md.ModelConfig(family="tsmixer", lookback=12, horizon=4, targets=1,
                                 hidden=4, blocks=1, norm="layer", dropout=0.2)
            model = md.Forecaster(cfg, seed=4)
            tcfg = tr.TrainConfig(learning_rate=0.005, max_epochs=5, patience=5,
                                  batch_size=16, seed=5)
            _, history = tr.train(model, train_w, val_w, tcfg)
            return history, model.params

        h1, p1 = run()
        h2, p2 = run()
        assert [(r.epoch, r.train_loss, r.val_loss) for r in h1.records] == \
               [(r.epoch, r.train_loss, r.val_loss) for r in h2.records]
        for k in p1:
            np.testing.assert_array_equal(p1[k], p2[k])

    def test_tied_validation_counts_against_patience(self):
        train_w, val_w, _ = periodic_windows()
        cfg = md.ModelConfig(family="linear", lookback=12, horizon=4, targets=1)
        model = md.Forecaster(cfg, seed=6)
        # lr=0 never changes parameters: epoch 2's val loss ties epoch 1's.
        tcfg = tr.TrainConfig(learning_rate=1e-30, max_epochs=10, patience=1,
                              batch_size=32, seed=7)
        _, history = tr.train(model, train_w, val_w, tcfg)
        assert history.stop_reason == "early_stopping"
        assert history.best_epoch == 1
        assert len(history.records) == 2

    @pytest.mark.filterwarnings("ignore::RuntimeWarning")  # overflow is the point
    def test_divergence_aborts_with_location(self):
        train_w, val_w, _ = periodic_windows()
        cfg = md.ModelConfig(family="linear", lookback=12, horizon=4, targets=1)
        model = md.Forecaster(cfg, seed=8)
        tcfg = tr.TrainConfig(learning_rate=1e155, max_epochs=5, patience=5,
                              batch_size=64, seed=9)
        with pytest.raises(errors.NumericError, match=r"epoch \d+, batch \d+"):
            tr.train(model, train_w, val_w, tcfg)

    def test_batch_stats_survive_trailing_singleton(self):
        frame = dt.synth_periodic(5, 80, seed=10)
        spec = dt.SplitSpec(ranges=((0, 48), (48, 64), (64, 80)))  # 48-16+1 = 33 train windows
        train_w, val_w, _ = dt.split_windows(frame, spec, dt.WindowSpec(12, 4))
        assert len(train_w) == 33
        cfg = md.ModelConfig(family="tsmixer", lookback=12, horizon=4, targets=1,
                             hidden=4, blocks=1, norm="batch2d")
        model = md.Forecaster(cfg, seed=11)
        tcfg = tr.TrainConfig(learning_rate=0.001, max_epochs=2, patience=5,
                              batch_size=32, seed=12)
        _, history = tr.train(model, train_w, val_w, tcfg)
        assert len(history.records) == 2

    def test_objective_head_mismatch(self):
        train_w, val_w, _ = periodic_windows()
        cfg = md.ModelConfig(family="linear", lookback=12, horizon=4, targets=1)
        model = md.Forecaster(cfg, seed=13)
        tcfg = tr.TrainConfig(objective="nb_nll")
        with pytest.raises(errors.ConfigurationError, match="nb_nll"):
            tr.train(model, train_w, val_w, tcfg)
