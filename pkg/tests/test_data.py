"""CSV ingest, scaling, windowing, splits, and synthetic generators."""

import numpy as np
import pytest

from mixcast import data as dt
from mixcast import errors
from mixcast.rng import make_rng


def write(tmp_path, text, name="data.csv"):
    path = tmp_path / name
    path.write_text(text)
    return path


class TestLoadCsv:
    def test_basic_with_comments_and_schema(self, tmp_path):
        path = write(tmp_path, "# provenance line\nsales,price,store\n1.0,2.5,7\n2.0,2.5,7\n")
        frame = dt.load_csv(path, {"price": "historical", "store": "static"})
        assert frame.columns == ["sales", "price", "store"]
        assert frame.roles == {"sales": "target", "price": "historical", "store": "static"}
        np.testing.assert_array_equal(frame.values[:, 0], [1.0, 2.0])

    def test_ragged_row_names_line(self, tmp_path):
        path = write(tmp_path, "a,b\n1.0,2.0\n3.0\n")
        with pytest.raises(errors.DataError, match="line 3"):
            dt.load_csv(path)

    def test_non_numeric_cell_names_line_and_column(self, tmp_path):
        path = write(tmp_path, "a,b\n1.0,oops\n")
        with pytest.raises(errors.DataError, match="line 2.*'b'"):
            dt.load_csv(path)

    def test_empty_cell_rejected(self, tmp_path):
        path = write(tmp_path, "a,b\n1.0,\n")
        with pytest.raises(errors.DataError, match="empty"):
            dt.load_csv(path)

    def test_nan_literal_rejected(self, tmp_path):
        path = write(tmp_path, "a\nnan\n")
        with pytest.raises(errors.DataError, match="finite"):
            dt.load_csv(path)

    def test_schema_missing_column(self, tmp_path):
        path = write(tmp_path, "a,b\n1.0,2.0\n")
        with pytest.raises(errors.SchemaError, match="ghost"):
            dt.load_csv(path, {"ghost": "future"})

    def test_static_column_must_be_constant(self, tmp_path):
        path = write(tmp_path, "a,s\n1.0,1.0\n2.0,3.0\n")
        with pytest.raises(errors.SchemaError, match="constant"):
            dt.load_csv(path, {"s": "static"})

    def test_save_load_roundtrip_exact(self, tmp_path):
        values = make_rng(1).normal(size=(20, 3)) * 1e3
        frame = dt.SeriesFrame(values, ["a", "b", "c"],
                               {"a": "target", "b": "target", "c": "future"})
        path = tmp_path / "round.csv"
        dt.save_csv(frame, path, header_lines=("tool test",))
        back = dt.load_csv(path, {"c": "future"})
        np.testing.assert_array_equal(back.values, values)
        assert back.roles == frame.roles

    def test_schema_file_parsing(self, tmp_path):
        spath = tmp_path / "schema.ini"
        spath.write_text("[roles]\nsales = target\nprice = historical\n")
        assert dt.load_schema(spath) == {"sales": "target", "price": "historical"}
        bad = tmp_path / "bad.ini"
        bad.write_text("[roles]\nx = sideways\n")
        with pytest.raises(errors.SchemaError, match="sideways"):
            dt.load_schema(bad)


class TestStandardize:
    def frame(self, steps=100, seed=2):
        values = make_rng(seed).normal(loc=5.0, scale=3.0, size=(steps, 2))
        return dt.SeriesFrame(values, ["a", "b"], {"a": "target", "b": "target"})

    def test_moments_on_training_rows(self):
        frame = self.frame()
        out, scaler = dt.global_standardize(frame, 70)
        np.testing.assert_allclose(out.values[:70].mean(axis=0), 0.0, atol=1e-12)
        np.testing.assert_allclose(out.values[:70].std(axis=0), 1.0, atol=1e-12)

    def test_statistics_ignore_validation_rows(self):
        frame = self.frame()
        tampered = dt.SeriesFrame(frame.values.copy(), list(frame.columns), dict(frame.roles))
        tampered.values[70:] += 1e6  # future rows must not leak into the scaler
        _, s1 = dt.global_standardize(frame, 70)
        _, s2 = dt.global_standardize(tampered, 70)
        np.testing.assert_array_equal(s1.mean, s2.mean)
        np.testing.assert_array_equal(s1.std, s2.std)

    def test_constant_column_warns_and_zeroes(self):
        values = np.column_stack([np.ones(50), np.arange(50.0)])
        frame = dt.SeriesFrame(values, ["flat", "ramp"], {"flat": "target", "ramp": "target"})
        with pytest.warns(UserWarning, match="flat"):
            out, _ = dt.global_standardize(frame, 40)
        np.testing.assert_array_equal(out.values[:, 0], np.zeros(50))

    def test_static_columns_left_alone(self):
        values = np.column_stack([np.arange(10.0), np.full(10, 9.0)])
        frame = dt.SeriesFrame(values, ["a", "s"], {"a": "target", "s": "static"})
        out, scaler = dt.global_standardize(frame, 8)
        np.testing.assert_array_equal(out.values[:, 1], values[:, 1])
        assert scaler.columns == ["a"]

    def test_invert_roundtrip(self):
        frame = self.frame()
        out, scaler = dt.global_standardize(frame, 70)
        back = scaler.invert(out.values, ["a", "b"])
        np.testing.assert_allclose(back, frame.values, atol=1e-9)


class TestMeanScale:
    def test_roundtrip(self):
        hist = np.abs(make_rng(3).normal(loc=10.0, size=(6, 8, 2))) + 1.0
        scaled, scales = dt.mean_scale_local(hist)
        np.testing.assert_allclose(scaled.mean(axis=1), 1.0, atol=1e-12)
        np.testing.assert_allclose(dt.rescale_forecast(scaled, scales), hist, atol=1e-12)

    def test_nonpositive_mean_keeps_scale_one(self):
        hist = np.zeros((2, 4, 1))
        hist[1] = 5.0
        with pytest.warns(UserWarning, match="non-positive"):
            scaled, scales = dt.mean_scale_local(hist)
        np.testing.assert_array_equal(scaled[0], hist[0])
        assert scales[0, 0, 0] == 1.0
        assert scales[1, 0, 0] == 5.0


class TestWindows:
    def frame(self, steps, seed=4):
        rng = make_rng(seed)
        values = np.column_stack([
            rng.normal(size=steps),           # target
            rng.normal(size=steps),           # historical
            rng.normal(size=steps),           # future
            np.full(steps, 3.0),              # static
        ])
        return dt.SeriesFrame(values, ["y", "h", "z", "s"],
                              {"y": "target", "h": "historical", "z": "future", "s": "static"})

    def test_count_formula(self):
        rng = make_rng(5)
        for _ in range(30):
            steps = int(rng.integers(5, 80))
            L = int(rng.integers(1, 10))
            T = int(rng.integers(1, 6))
            stride = int(rng.integers(1, 5))
            frame = self.frame(max(steps, 1))
            spec = dt.WindowSpec(L, T, stride)
            if steps < L + T:
                with pytest.warns(UserWarning):
                    batch = dt.make_windows(frame.slice_rows(0, steps), spec)
                assert len(batch) == 0
            else:
                batch = dt.make_windows(frame.slice_rows(0, steps), spec)
                assert len(batch) == (steps - L - T) // stride + 1

    def test_window_contents_align(self):
        frame = self.frame(30)
        batch = dt.make_windows(frame, dt.WindowSpec(6, 3, stride=2))
        k = 2  # third window starts at row 4
        s = batch.starts[k]
        np.testing.assert_array_equal(batch.history[k][:, 0], frame.values[s : s + 6, 0])
        np.testing.assert_array_equal(batch.history[k][:, 1], frame.values[s : s + 6, 1])
        np.testing.assert_array_equal(batch.future[k][:, 0], frame.values[s + 6 : s + 9, 2])
        np.testing.assert_array_equal(batch.target[k][:, 0], frame.values[s + 6 : s + 9, 0])
        np.testing.assert_array_equal(batch.static[k], [[3.0]])

    def test_spec_validation(self):
        with pytest.raises(errors.ConfigurationError, match="stride"):
            dt.make_windows(self.frame(20), dt.WindowSpec(4, 2, stride=0))


class TestSplit:
    def test_default_fractions(self):
        frame = TestWindows().frame(100)
        train, val, test = dt.split(frame)
        assert (train.n_steps, val.n_steps, test.n_steps) == (70, 20, 10)

    def test_explicit_ranges(self):
        frame = TestWindows().frame(50)
        spec = dt.SplitSpec(ranges=((0, 30), (30, 42), (42, 50)))
        train, val, test = dt.split(frame, spec)
        assert (train.n_steps, val.n_steps, test.n_steps) == (30, 12, 8)

    def test_bad_specs(self):
        with pytest.raises(errors.ConfigurationError, match="sum"):
            dt.SplitSpec(fractions=(0.5, 0.2, 0.2)).validate()
        with pytest.raises(errors.ConfigurationError, match="overlap"):
            dt.SplitSpec(ranges=((0, 30), (20, 40), (40, 50))).validate()
        with pytest.raises(errors.ConfigurationError, match="exactly one"):
            dt.SplitSpec().validate()

    def test_split_windows_boundary_context(self):
        frame = TestWindows().frame(100)
        wspec = dt.WindowSpec(12, 4)
        train_w, val_w, test_w = dt.split_windows(frame, dt.DEFAULT_SPLIT, wspec)
        # train windows match plain windowing of the train frame
        train_frame = frame.slice_rows(0, 70)
        assert len(train_w) == len(dt.make_windows(train_frame, wspec))
        # validation histories may start before the boundary ...
        assert val_w.starts.min() == 70 - 12
        # ... but every target stays inside its partition
        assert np.all(val_w.starts + 12 >= 70)
        assert np.all(val_w.starts + 12 + 4 <= 90)
        assert np.all(test_w.starts + 12 >= 90)
        # boundary-adjacent validation window sees true train-partition values
        k = int(np.argmin(val_w.starts))
        np.testing.assert_array_equal(val_w.history[k][:, 0], frame.values[58:70, 0])

    def test_too_short_partition_warns_empty(self):
        frame = TestWindows().frame(40)
        spec = dt.SplitSpec(ranges=((0, 36), (36, 38), (38, 40)))
        with pytest.warns(UserWarning, match="no windows"):
            _, val_w, _ = dt.split_windows(frame, spec, dt.WindowSpec(30, 4))
        assert len(val_w) == 0


class TestGenerators:
    def test_periodic_sine_is_exactly_periodic(self):
        frame = dt.synth_periodic(7, 100, variates=3, seed=6)
        v = frame.values
        np.testing.assert_array_equal(v[7:], v[:-7])

    def test_periodic_template_is_exactly_periodic(self):
        frame = dt.synth_periodic(5, 83, variates=2, seed=7, kind="template")
        v = frame.values
        np.testing.assert_array_equal(v[5:], v[:-5])

    def test_affine_periodic_recursion(self):
        frame = dt.synth_affine_periodic(4, 60, scale=1.05, offset=-0.2, seed=8)
        v = frame.values
        np.testing.assert_allclose(v[4:], 1.05 * v[:-4] - 0.2, rtol=1e-12)

    def test_trend_increments_respect_slope_limit(self):
        K = 0.4
        frame = dt.synth_periodic_plus_trend(6, 200, slope_limit=K, seed=9)
        base = dt.synth_periodic(6, 200, seed=9, kind="template")
        trend = frame.values - base.values
        inc = np.diff(trend, axis=0)
        assert np.max(np.abs(inc)) <= K + 1e-12

    def test_crossvariate_exact_when_noiseless(self):
        frame = dt.synth_crossvariate(200, lag=10, noise=0.0, seed=10)
        v = frame.values
        np.testing.assert_array_equal(v[10:, 1], v[:-10, 0])
        np.testing.assert_array_equal(v[:10, 1], np.zeros(10))

    def test_generators_deterministic(self):
        a = dt.synth_periodic_plus_trend(5, 50, 0.3, seed=11).values
        b = dt.synth_periodic_plus_trend(5, 50, 0.3, seed=11).values
        np.testing.assert_array_equal(a, b)
