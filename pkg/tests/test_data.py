import numpy as np
import pytest

from pnndt import (
    DataError,
    LabeledDataset,
    NormStats,
    EEG_FEATURE_NAMES,
    all_descriptors,
    load_csv,
    normalize_apply,
    normalize_fit,
    split,
    synth_generate,
    write_csv,
)
from pnndt.data import load_features_csv

from helpers import one_nn_oracle


def write(tmp_path, text, name="d.csv"):
    path = tmp_path / name
    path.write_text(text, encoding="utf-8")
    return path


class TestLoadCsv:
    def test_basic_parse(self, tmp_path):
        path = write(tmp_path, "a,b,label\n1.5,2.0,0\n3.0,4.0,1\n5.0,6.0,0\n")
        ds = load_csv(path)
        assert ds.n == 3 and ds.m == 2
        assert ds.feature_names == ("a", "b")
        assert list(ds.labels) == [0, 1, 0]
        assert ds.features[0, 0] == 1.5  # rows keep file order

    def test_bad_label_names_row(self, tmp_path):
        path = write(tmp_path, "a,b,label\n1,2,0\n3,4,2\n")
        with pytest.raises(DataError, match="row 2"):
            load_csv(path)

    def test_non_numeric_cell_names_row_and_column(self, tmp_path):
        path = write(tmp_path, "a,b,label\n1,x,0\n")
        with pytest.raises(DataError, match=r"row 1, column 'b'"):
            load_csv(path)

    def test_ragged_row(self, tmp_path):
        path = write(tmp_path, "a,b,label\n1,2,0\n1,2\n")
        with pytest.raises(DataError, match="row 2"):
            load_csv(path)

    def test_missing_file(self, tmp_path):
        with pytest.raises(DataError, match="no such file"):
            load_csv(tmp_path / "absent.csv")

    def test_missing_label_header(self, tmp_path):
        path = write(tmp_path, "a,b,c\n1,2,3\n")
        with pytest.raises(DataError, match="label"):
            load_csv(path)

    def test_round_trip_is_byte_identical(self, tmp_path):
        rng = np.random.default_rng(42)
        ds = LabeledDataset(
            rng.standard_normal((17, 3)),
            (rng.random(17) < 0.5).astype(int),
            ("x1", "x2", "x3"),
        )
        p1 = tmp_path / "one.csv"
        p2 = tmp_path / "two.csv"
        write_csv(ds, p1)
        write_csv(load_csv(p1), p2)
        assert p1.read_bytes() == p2.read_bytes()

    def test_features_only_loader_accepts_both_forms(self, tmp_path):
        labeled = write(tmp_path, "a,b,label\n1,2,0\n", "l.csv")
        bare = write(tmp_path, "a,b\n1,2\n", "b.csv")
        for path in (labeled, bare):
            rows, names = load_features_csv(path)
            assert names == ("a", "b")
            assert rows.shape == (1, 2)


class TestDatasetInvariants:
    def test_row_label_mismatch(self):
        with pytest.raises(DataError):
            LabeledDataset(np.zeros((3, 2)), np.zeros(2), ("a", "b"))

    def test_labels_must_be_binary(self):
        with pytest.raises(DataError):
            LabeledDataset(np.zeros((2, 2)), np.array([0, 2]), ("a", "b"))

    def test_needs_two_columns(self):
        with pytest.raises(DataError):
            LabeledDataset(np.zeros((2, 1)), np.zeros(2), ("a",))

    def test_immutable(self):
        ds = LabeledDataset(np.zeros((2, 2)), np.zeros(2), ("a", "b"))
        with pytest.raises(ValueError):
            ds.features[0, 0] = 1.0


class TestNormalize:
    def test_two_point_column(self):
        ds = LabeledDataset([[1.0, 0.0], [3.0, 0.5]], [0, 1], ("a", "b"))
        stats = normalize_fit(ds)
        assert stats.means[0] == pytest.approx(2.0)
        assert stats.stddevs[0] == pytest.approx(np.sqrt(2.0))

    def test_constant_column_flagged_degenerate(self):
        ds = LabeledDataset([[5.0, 1.0], [5.0, 2.0], [5.0, 3.0]], [0, 1, 0],
                            ("a", "b"))
        stats = normalize_fit(ds)
        assert stats.means[0] == 5.0
        assert stats.stddevs[0] == 0.0
        assert stats.degenerate[0] and not stats.degenerate[1]

    def test_fit_apply_standardizes(self):
        rng = np.random.default_rng(7)
        ds = LabeledDataset(3.0 + 2.5 * rng.standard_normal((100, 4)),
                            (rng.random(100) < 0.5).astype(int),
                            ("a", "b", "c", "d"))
        out = normalize_apply(normalize_fit(ds), ds)
        # Recompute the moments from the transformed matrix directly.
        assert np.abs(out.features.mean(axis=0)).max() < 1e-10
        assert np.abs(out.features.std(axis=0, ddof=1) - 1.0).max() < 1e-10

    def test_apply_formula_and_degenerate_rule(self):
        stats = NormStats(np.array([2.0, 5.0]), np.array([2.0, 0.0]))
        ds = LabeledDataset([[4.0, 5.0], [0.0, 5.0]], [0, 1], ("a", "b"))
        out = normalize_apply(stats, ds)
        assert out.features[0, 0] == 1.0  # (4 - 2) / 2
        assert out.features[0, 1] == 0.0  # degenerate: (5 - 5) / 1

    def test_train_stats_differ_from_self_normalization(self):
        rng = np.random.default_rng(3)
        train = LabeledDataset(rng.standard_normal((50, 2)),
                               (rng.random(50) < 0.5).astype(int), ("a", "b"))
        shifted = LabeledDataset(train.features + 5.0, train.labels, ("a", "b"))
        with_train_stats = normalize_apply(normalize_fit(train), shifted)
        self_normalized = normalize_apply(normalize_fit(shifted), shifted)
        assert not np.allclose(with_train_stats.features,
                               self_normalized.features)

    def test_needs_two_rows(self):
        ds = LabeledDataset([[1.0, 2.0]], [0], ("a", "b"))
        with pytest.raises(DataError):
            normalize_fit(ds)

    def test_dimension_mismatch(self):
        stats = NormStats(np.zeros(3), np.ones(3))
        ds = LabeledDataset(np.zeros((2, 2)), [0, 1], ("a", "b"))
        with pytest.raises(DataError):
            normalize_apply(stats, ds)


def balanced_dataset(n_per_class, seed=0):
    rng = np.random.default_rng(seed)
    x = rng.standard_normal((2 * n_per_class, 2))
    y = np.repeat([0, 1], n_per_class)
    return LabeledDataset(x, y, ("a", "b"))


class TestSplit:
    def test_half_split_counts(self):
        ds = balanced_dataset(5)
        a = split(ds, 0.5, seed=1)
        assert len(a.validation_indices) == 5
        assert len(a.train_indices) == 5
        for side in (a.train_indices, a.validation_indices):
            per_class = np.bincount(ds.labels[side], minlength=2)
            assert 2 <= per_class[0] <= 3 and 2 <= per_class[1] <= 3

    def test_deterministic(self):
        ds = balanced_dataset(10)
        a = split(ds, 0.3, seed=9)
        b = split(ds, 0.3, seed=9)
        assert np.array_equal(a.train_indices, b.train_indices)
        assert np.array_equal(a.validation_indices, b.validation_indices)

    def test_partition(self):
        ds = balanced_dataset(8)
        a = split(ds, 0.4, seed=2)
        merged = np.sort(np.concatenate([a.train_indices, a.validation_indices]))
        assert np.array_equal(merged, np.arange(ds.n))

    def test_stratification_over_1000_seeds(self):
        rng = np.random.default_rng(0)
        x = rng.standard_normal((100, 2))
        y = np.array([0] * 80 + [1] * 20)
        ds = LabeledDataset(x, y, ("a", "b"))
        frac = 0.25
        for seed in range(1000):
            a = split(ds, frac, seed=seed)
            counts = np.bincount(ds.labels[a.validation_indices], minlength=2)
            assert abs(counts[0] - frac * 80) <= 1
            assert abs(counts[1] - frac * 20) <= 1

    def test_class_absent(self):
        ds = LabeledDataset(np.zeros((4, 2)), [0, 0, 0, 0], ("a", "b"))
        with pytest.raises(DataError, match="class 1"):
            split(ds, 0.5, seed=0)


class TestSynthGenerate:
    def test_one_nn_on_clean_separable_data(self):
        ds = synth_generate(100, 36, 0.0, seed=5)
        held = split(ds, 0.3, seed=1)
        tr, va = held.train_indices, held.validation_indices
        correct = 0
        for i in va:
            pred = one_nn_oracle(ds.features[tr], ds.labels[tr], ds.features[i])
            correct += pred == ds.labels[i]
        assert correct / len(va) > 0.95

    def test_relevant_count_range(self):
        with pytest.raises(DataError):
            synth_generate(10, 0, 0.0, seed=0)
        with pytest.raises(DataError):
            synth_generate(10, 37, 0.0, seed=0)

    def test_irrelevant_columns_have_matched_means(self):
        ds = synth_generate(2000, 8, 0.0, seed=11)
        class0 = ds.features[ds.labels == 0]
        class1 = ds.features[ds.labels == 1]
        gaps = np.abs(class1.mean(axis=0) - class0.mean(axis=0))
        assert gaps[8:].max() < 0.2
        assert gaps[:8].min() > 1.5  # the shifted block really is shifted

    def test_bitwise_deterministic(self):
        a = synth_generate(50, 8, 0.25, seed=3)
        b = synth_generate(50, 8, 0.25, seed=3)
        assert np.array_equal(a.features, b.features)
        assert np.array_equal(a.labels, b.labels)

    def test_noise_flips_exact_fraction(self):
        clean = synth_generate(100, 8, 0.0, seed=3)
        noisy = synth_generate(100, 8, 0.1, seed=3)
        assert int(np.sum(clean.labels != noisy.labels)) == 20


class TestFeatureScheme:
    def test_exactly_36_unique_names(self):
        descriptors = all_descriptors()
        assert len(descriptors) == 36
        assert len(set(EEG_FEATURE_NAMES)) == 36

    def test_known_canonical_names(self):
        for name in ("AbsPowSubdeltaC3", "RelPowThetaC4", "AbsPowBeta1C3",
                     "AbsPowBeta2", "RelPowTheta", "AbsPowAlpha",
                     "AbsPowSubdelta"):
            assert name in EEG_FEATURE_NAMES
