"""Synthetic generator, stream cycling, CSV ingestion and export."""

import numpy as np
import pytest

from streammtl.datasets import (
    FEATURE_DIM,
    SyntheticConfig,
    TaskStream,
    derive_seed,
    generate_synthetic,
    load_csv,
    monomial_features,
    next_round,
    reseed_streams,
    save_csv,
)
from streammtl.errors import (
    ConfigError,
    DataFormatError,
    DimensionError,
    EmptyStreamError,
)


class TestDeriveSeed:
    def test_deterministic(self):
        assert derive_seed(3, 1) == derive_seed(3, 1)

    def test_sensitive_to_parts_and_order(self):
        assert derive_seed(3, 1) != derive_seed(1, 3)
        assert derive_seed(7) != derive_seed(7, 1)

    def test_fits_uint64(self):
        assert 0 <= derive_seed(123456, 789) < 2**64


class TestSyntheticConfig:
    def test_frozen_defaults(self):
        cfg = SyntheticConfig(K=5)
        assert cfg.n_per_task == 2000
        assert cfg.rotation_step == 0.45
        assert cfg.noise == 0.1
        assert cfg.seed == 0

    @pytest.mark.parametrize(
        "kwargs", [{"K": 0}, {"n_per_task": 0}, {"noise": -0.1}, {"noise": 0.5}]
    )
    def test_validation(self, kwargs):
        base = {"K": 2, "n_per_task": 10}
        base.update(kwargs)
        with pytest.raises(ConfigError):
            SyntheticConfig(**base)


class TestMonomialFeatures:
    def test_hand_lift(self):
        got = monomial_features(np.array([[2.0, 3.0]]))
        np.testing.assert_array_equal(
            got, [[1.0, 2.0, 3.0, 4.0, 6.0, 9.0, 8.0, 12.0, 18.0]]
        )

    def test_width_is_feature_dim(self):
        assert monomial_features(np.zeros((5, 2))).shape == (5, FEATURE_DIM)


class TestGenerateSynthetic:
    def test_shapes_and_labels(self):
        streams, manifest = generate_synthetic(SyntheticConfig(K=3, n_per_task=40))
        assert manifest.K == 3 and manifest.d == FEATURE_DIM
        assert manifest.counts == (40, 40, 40)
        for s in streams:
            assert s.features.shape == (40, FEATURE_DIM)
            assert set(np.unique(s.labels)) <= {-1, 1}

    def test_deterministic_in_seed(self):
        a, _ = generate_synthetic(SyntheticConfig(K=2, n_per_task=30, seed=9))
        b, _ = generate_synthetic(SyntheticConfig(K=2, n_per_task=30, seed=9))
        c, _ = generate_synthetic(SyntheticConfig(K=2, n_per_task=30, seed=10))
        for x, y in zip(a, b):
            np.testing.assert_array_equal(x.features, y.features)
            np.testing.assert_array_equal(x.labels, y.labels)
        assert not np.array_equal(a[0].features, c[0].features)

    def test_task_prefix_unaffected_by_adding_tasks(self):
        small, _ = generate_synthetic(SyntheticConfig(K=2, n_per_task=25, seed=4))
        large, _ = generate_synthetic(SyntheticConfig(K=5, n_per_task=25, seed=4))
        for k in range(2):
            np.testing.assert_array_equal(small[k].features, large[k].features)
            np.testing.assert_array_equal(small[k].labels, large[k].labels)

    def test_boundary_rule_without_noise(self):
        streams, _ = generate_synthetic(
            SyntheticConfig(K=2, n_per_task=200, rotation_step=0.45, noise=0.0, seed=6)
        )
        for k, s in enumerate(streams):
            a, b = s.features[:, 1], s.features[:, 2]
            theta = k * 0.45
            a_rot = a * np.cos(theta) - b * np.sin(theta)
            b_rot = a * np.sin(theta) + b * np.cos(theta)
            want = np.where(b_rot - np.sin(3.0 * a_rot) >= 0.0, 1, -1)
            np.testing.assert_array_equal(s.labels, want)

    def test_features_come_from_unrotated_points(self):
        streams, _ = generate_synthetic(
            SyntheticConfig(K=3, n_per_task=50, noise=0.0, seed=6)
        )
        for s in streams:
            pts = s.features[:, 1:3]
            np.testing.assert_array_equal(s.features, monomial_features(pts))
            assert np.all(np.abs(pts) <= 1.0)

    def test_noise_flips_labels(self):
        clean, _ = generate_synthetic(
            SyntheticConfig(K=1, n_per_task=2000, noise=0.0, seed=3)
        )
        noisy, _ = generate_synthetic(
            SyntheticConfig(K=1, n_per_task=2000, noise=0.2, seed=3)
        )
        flipped = np.mean(clean[0].labels != noisy[0].labels)
        assert 0.15 < flipped < 0.25

    def test_classes_stay_balanced(self):
        _, manifest = generate_synthetic(
            SyntheticConfig(K=5, n_per_task=10000, noise=0.0, seed=0)
        )
        for ratio in manifest.positive_ratios:
            assert abs(ratio - 0.5) <= 0.02


class TestTaskStream:
    def make(self, n=3, **kwargs):
        feats = np.arange(float(n)).reshape(n, 1)
        labels = np.ones(n, dtype=np.int64)
        return TaskStream(task_index=0, features=feats, labels=labels, **kwargs)

    def test_first_epoch_is_storage_order(self):
        s = self.make()
        assert [s.draw().features[0] for _ in range(3)] == [0.0, 1.0, 2.0]

    def test_wrap_reshuffles_deterministically(self):
        s = self.make(n=5, seed=42)
        for _ in range(5):
            s.draw()
        want = np.random.default_rng([42, 1]).permutation(5)
        got = [int(s.draw().features[0]) for _ in range(5)]
        assert got == list(want)
        assert s.epoch == 2

    def test_wrap_without_reshuffle_repeats_storage_order(self):
        s = self.make(n=3, epoch_reshuffle=False)
        seq = [int(s.draw().features[0]) for _ in range(7)]
        assert seq == [0, 1, 2, 0, 1, 2, 0]

    def test_reset_restores_initial_order(self):
        s = self.make(n=4, seed=5)
        first = [int(s.draw().features[0]) for _ in range(6)]
        s.reset()
        again = [int(s.draw().features[0]) for _ in range(6)]
        assert first == again

    def test_reseed_controls_cycle_order(self):
        a = self.make(n=6, seed=1)
        b = self.make(n=6, seed=2)
        reseed_streams([a], 7)
        reseed_streams([b], 7)
        assert a.seed == b.seed == derive_seed(7, 0)
        for _ in range(6):
            a.draw()
            b.draw()
        seq_a = [int(a.draw().features[0]) for _ in range(6)]
        seq_b = [int(b.draw().features[0]) for _ in range(6)]
        assert seq_a == seq_b

    def test_positive_ratio(self):
        s = TaskStream(
            task_index=0,
            features=np.zeros((4, 1)),
            labels=np.array([1, 1, 1, -1]),
        )
        assert s.positive_ratio() == 0.75

    def test_validation(self):
        with pytest.raises(EmptyStreamError):
            TaskStream(task_index=0, features=np.zeros((0, 2)), labels=np.zeros(0))
        with pytest.raises(DimensionError):
            TaskStream(task_index=0, features=np.zeros(3), labels=np.ones(3))
        with pytest.raises(DimensionError):
            TaskStream(task_index=0, features=np.zeros((3, 1)), labels=np.ones(2))
        with pytest.raises(DataFormatError):
            TaskStream(
                task_index=0,
                features=np.zeros((2, 1)),
                labels=np.array([1, 0]),
            )

    def test_next_round_draws_one_per_task(self):
        streams, _ = generate_synthetic(SyntheticConfig(K=3, n_per_task=10, seed=1))
        samples = next_round(streams)
        assert len(samples) == 3
        for k, sample in enumerate(samples):
            np.testing.assert_array_equal(sample.features, streams[k].features[0])


class TestCsvRoundTrip:
    def make_streams(self):
        streams, _ = generate_synthetic(SyntheticConfig(K=3, n_per_task=15, seed=8))
        return streams

    def test_single_file_round_trip_is_exact(self, tmp_path):
        streams = self.make_streams()
        out = tmp_path / "toy.csv"
        save_csv(streams, out)
        loaded, manifest = load_csv(out)
        assert manifest.name == "toy"
        assert manifest.K == 3
        assert manifest.counts == (15, 15, 15)
        for a, b in zip(streams, loaded):
            np.testing.assert_array_equal(a.features, b.features)
            np.testing.assert_array_equal(a.labels, b.labels)

    def test_save_load_save_is_byte_stable(self, tmp_path):
        streams = self.make_streams()
        first = tmp_path / "a.csv"
        second = tmp_path / "b.csv"
        save_csv(streams, first)
        loaded, _ = load_csv(first)
        save_csv(loaded, second)
        assert first.read_bytes() == second.read_bytes()

    def test_per_task_directory_round_trip(self, tmp_path):
        streams = self.make_streams()
        out = tmp_path / "tasks"
        save_csv(streams, out, per_task_dir=True)
        files = sorted(p.name for p in out.glob("*.csv"))
        assert files == ["task_0.csv", "task_1.csv", "task_2.csv"]
        loaded, manifest = load_csv(out, "file-per-task")
        assert manifest.name == "tasks"
        for a, b in zip(streams, loaded):
            np.testing.assert_array_equal(a.features, b.features)
            np.testing.assert_array_equal(a.labels, b.labels)

    def test_zero_labels_normalize_to_negative(self, tmp_path):
        fp = tmp_path / "zl.csv"
        fp.write_text("task_id,label,f0\n0,0,1.5\n0,1,2.5\n")
        streams, _ = load_csv(fp)
        np.testing.assert_array_equal(streams[0].labels, [-1, 1])

    def test_task_ids_renumbered_densely(self, tmp_path):
        fp = tmp_path / "sparse.csv"
        fp.write_text("task_id,label,f0\n7,1,1.0\n3,-1,2.0\n7,1,3.0\n")
        streams, manifest = load_csv(fp)
        assert manifest.K == 2
        assert [s.task_index for s in streams] == [0, 1]
        np.testing.assert_array_equal(streams[0].features[:, 0], [2.0])
        np.testing.assert_array_equal(streams[1].features[:, 0], [1.0, 3.0])

    def test_header_may_reorder_columns(self, tmp_path):
        fp = tmp_path / "shuffled.csv"
        fp.write_text("f1,label,f0,task_id\n5.0,1,4.0,0\n")
        streams, _ = load_csv(fp)
        np.testing.assert_array_equal(streams[0].features, [[4.0, 5.0]])


class TestCsvErrors:
    def test_missing_path(self, tmp_path):
        with pytest.raises(DataFormatError, match="does not exist"):
            load_csv(tmp_path / "nope.csv")

    def test_unknown_schema(self, tmp_path):
        fp = tmp_path / "x.csv"
        fp.write_text("task_id,label,f0\n0,1,1.0\n")
        with pytest.raises(ConfigError, match="schema"):
            load_csv(fp, "wide")

    def test_empty_file(self, tmp_path):
        fp = tmp_path / "empty.csv"
        fp.write_text("")
        with pytest.raises(DataFormatError, match="missing header"):
            load_csv(fp)

    def test_header_only(self, tmp_path):
        fp = tmp_path / "h.csv"
        fp.write_text("task_id,label,f0\n")
        with pytest.raises(EmptyStreamError, match="no data rows"):
            load_csv(fp)

    def test_missing_label_column(self, tmp_path):
        fp = tmp_path / "nl.csv"
        fp.write_text("task_id,f0\n0,1.0\n")
        with pytest.raises(DataFormatError, match="no 'label' column"):
            load_csv(fp)

    def test_missing_task_column(self, tmp_path):
        fp = tmp_path / "nt.csv"
        fp.write_text("label,f0\n1,1.0\n")
        with pytest.raises(DataFormatError, match="no 'task_id' column"):
            load_csv(fp)

    def test_ragged_row_names_line(self, tmp_path):
        fp = tmp_path / "ragged.csv"
        fp.write_text("task_id,label,f0\n0,1,1.0\n0,1\n")
        with pytest.raises(DataFormatError, match="line 3"):
            load_csv(fp)

    def test_bad_feature_names_line_and_column(self, tmp_path):
        fp = tmp_path / "badf.csv"
        fp.write_text("task_id,label,f0,f1\n0,1,1.0,2.0\n0,1,oops,2.0\n")
        with pytest.raises(DataFormatError, match=r"line 3, column f0"):
            load_csv(fp)

    def test_bad_label_value(self, tmp_path):
        fp = tmp_path / "badl.csv"
        fp.write_text("task_id,label,f0\n0,2,1.0\n")
        with pytest.raises(DataFormatError, match="label must be one of"):
            load_csv(fp)

    def test_non_integer_task_id(self, tmp_path):
        fp = tmp_path / "badt.csv"
        fp.write_text("task_id,label,f0\nx,1,1.0\n")
        with pytest.raises(DataFormatError, match="task_id"):
            load_csv(fp)

    def test_gap_in_feature_columns(self, tmp_path):
        fp = tmp_path / "gap.csv"
        fp.write_text("task_id,label,f0,f2\n0,1,1.0,2.0\n")
        with pytest.raises(DataFormatError, match="f0..f"):
            load_csv(fp)

    def test_task_column_mode_rejects_directory(self, tmp_path):
        with pytest.raises(DataFormatError, match="directory"):
            load_csv(tmp_path)

    def test_file_per_task_mode_rejects_file(self, tmp_path):
        fp = tmp_path / "one.csv"
        fp.write_text("label,f0\n1,1.0\n")
        with pytest.raises(DataFormatError, match="not a directory"):
            load_csv(fp, "file_per_task")

    def test_file_per_task_rejects_task_column(self, tmp_path):
        d = tmp_path / "dir"
        d.mkdir()
        (d / "t.csv").write_text("task_id,label,f0\n0,1,1.0\n")
        with pytest.raises(DataFormatError, match="unexpected 'task_id'"):
            load_csv(d, "file_per_task")

    def test_empty_directory(self, tmp_path):
        d = tmp_path / "dir"
        d.mkdir()
        with pytest.raises(EmptyStreamError, match="no \\*.csv"):
            load_csv(d, "file_per_task")

    def test_tasks_must_agree_on_dimension(self, tmp_path):
        d = tmp_path / "dir"
        d.mkdir()
        (d / "a.csv").write_text("label,f0\n1,1.0\n")
        (d / "b.csv").write_text("label,f0,f1\n1,1.0,2.0\n")
        with pytest.raises(DataFormatError, match="disagree"):
            load_csv(d, "file_per_task")
