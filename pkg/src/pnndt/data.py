"""Datasets: CSV ingestion, normalization, splitting, synthetic generation.

A dataset is a feature matrix with binary labels (0 = normal segment,
1 = artifact).  The canonical 36-feature naming scheme covers six EEG
frequency bands times three channels (C3, C4 and their sum) times
absolute/relative spectral power.
"""

import csv
import math
import os
from dataclasses import dataclass, field

import numpy as np

from pnndt.seeding import derive_seed, STREAM_SPLIT


class DataError(ValueError):
    """Raised for malformed input data or dataset contract violations."""


BANDS = ("subdelta", "delta", "theta", "alpha", "beta1", "beta2")
CHANNELS = ("C3", "C4", "C3+C4")
KINDS = ("absolute", "relative")


@dataclass(frozen=True)
class FeatureDescriptor:
    """One spectral feature: band power of a channel, absolute or relative."""

    band: str
    channel: str
    kind: str

    def __post_init__(self):
        if self.band not in BANDS:
            raise DataError(f"unknown band {self.band!r}")
        if self.channel not in CHANNELS:
            raise DataError(f"unknown channel {self.channel!r}")
        if self.kind not in KINDS:
            raise DataError(f"unknown kind {self.kind!r}")

    @property
    def canonical_name(self):
        prefix = "AbsPow" if self.kind == "absolute" else "RelPow"
        # The summed channel carries no suffix (AbsPowSubdelta, RelPowTheta).
        suffix = "" if self.channel == "C3+C4" else self.channel
        return prefix + self.band.capitalize() + suffix


def all_descriptors():
    """The 36 canonical descriptors, in stable feature order."""
    return tuple(
        FeatureDescriptor(band, channel, kind)
        for band in BANDS
        for channel in CHANNELS
        for kind in KINDS
    )


EEG_FEATURE_NAMES = tuple(d.canonical_name for d in all_descriptors())


def _readonly(a):
    a = np.ascontiguousarray(a)
    a.flags.writeable = False
    return a


@dataclass(frozen=True)
class LabeledDataset:
    """Feature matrix (n rows x m columns) with binary labels."""

    features: np.ndarray
    labels: np.ndarray
    feature_names: tuple

    def __post_init__(self):
        feats = _readonly(np.asarray(self.features, dtype=np.float64))
        labels = np.asarray(self.labels)
        if feats.ndim != 2:
            raise DataError("features must be a 2-d matrix")
        if feats.shape[0] != labels.shape[0]:
            raise DataError(
                f"{feats.shape[0]} feature rows but {labels.shape[0]} labels"
            )
        if feats.shape[1] < 2:
            raise DataError("need at least 2 feature columns")
        if labels.size and not np.isin(labels, (0, 1)).all():
            raise DataError("labels must be 0 or 1")
        names = tuple(str(n) for n in self.feature_names)
        if len(names) != feats.shape[1]:
            raise DataError(
                f"{len(names)} feature names for {feats.shape[1]} columns"
            )
        labels = _readonly(labels.astype(np.int64))
        object.__setattr__(self, "features", feats)
        object.__setattr__(self, "labels", labels)
        object.__setattr__(self, "feature_names", names)

    @property
    def n(self):
        return self.features.shape[0]

    @property
    def m(self):
        return self.features.shape[1]

    def take_rows(self, indices):
        return LabeledDataset(
            self.features[indices], self.labels[indices], self.feature_names
        )


@dataclass(frozen=True)
class NormStats:
    """Per-column mean/stddev; zero-variance columns are flagged degenerate."""

    means: np.ndarray
    stddevs: np.ndarray
    degenerate: np.ndarray = field(default=None)

    def __post_init__(self):
        means = _readonly(np.asarray(self.means, dtype=np.float64))
        stds = _readonly(np.asarray(self.stddevs, dtype=np.float64))
        if means.shape != stds.shape or means.ndim != 1:
            raise DataError("means/stddevs must be equal-length vectors")
        if (stds < 0).any():
            raise DataError("stddevs must be non-negative")
        degen = self.degenerate
        if degen is None:
            degen = stds == 0.0
        degen = _readonly(np.asarray(degen, dtype=bool))
        object.__setattr__(self, "means", means)
        object.__setattr__(self, "stddevs", stds)
        object.__setattr__(self, "degenerate", degen)

    @property
    def m(self):
        return self.means.shape[0]


@dataclass(frozen=True)
class SplitAssignment:
    """Disjoint train/validation row indices covering a dataset."""

    train_indices: np.ndarray
    validation_indices: np.ndarray
    seed: int

    def __post_init__(self):
        tr = _readonly(np.asarray(self.train_indices, dtype=np.int64))
        va = _readonly(np.asarray(self.validation_indices, dtype=np.int64))
        if np.intersect1d(tr, va).size:
            raise DataError("train and validation indices overlap")
        object.__setattr__(self, "train_indices", tr)
        object.__setattr__(self, "validation_indices", va)


def load_csv(path):
    """Parse a dataset CSV: header of feature names plus a final `label` column."""
    if not os.path.exists(path):
        raise DataError(f"no such file: {path}")
    with open(path, newline="", encoding="utf-8") as fh:
        reader = csv.reader(fh)
        try:
            header = next(reader)
        except StopIteration:
            raise DataError(f"{path}: empty file") from None
        if len(header) < 3 or header[-1] != "label":
            raise DataError(
                f"{path}: header must name at least 2 features plus a final"
                " 'label' column"
            )
        names = header[:-1]
        rows, labels = [], []
        for i, row in enumerate(reader, start=1):
            if len(row) != len(header):
                raise DataError(
                    f"{path}: row {i} has {len(row)} cells, expected {len(header)}"
                )
            vals = []
            for name, cell in zip(names, row):
                try:
                    vals.append(float(cell))
                except ValueError:
                    raise DataError(
                        f"{path}: row {i}, column {name!r}: not a number: {cell!r}"
                    ) from None
            try:
                lab = float(row[-1])
            except ValueError:
                raise DataError(
                    f"{path}: row {i}, column 'label': not a number: {row[-1]!r}"
                ) from None
            if lab not in (0.0, 1.0):
                raise DataError(f"{path}: row {i}: label must be 0 or 1, got {row[-1]}")
            rows.append(vals)
            labels.append(int(lab))
    if not rows:
        raise DataError(f"{path}: no data rows")
    return LabeledDataset(np.array(rows), np.array(labels), tuple(names))


def load_features_csv(path):
    """Parse a CSV of features only; a trailing `label` column is ignored.

    Returns (matrix, feature_names).  Used for prediction inputs, where
    labels may be absent.
    """
    if not os.path.exists(path):
        raise DataError(f"no such file: {path}")
    with open(path, newline="", encoding="utf-8") as fh:
        reader = csv.reader(fh)
        try:
            header = next(reader)
        except StopIteration:
            raise DataError(f"{path}: empty file") from None
        has_label = header and header[-1] == "label"
        names = header[:-1] if has_label else header
        if len(names) < 2:
            raise DataError(f"{path}: need at least 2 feature columns")
        rows = []
        for i, row in enumerate(reader, start=1):
            if len(row) != len(header):
                raise DataError(
                    f"{path}: row {i} has {len(row)} cells, expected {len(header)}"
                )
            vals = []
            for name, cell in zip(names, row):
                try:
                    vals.append(float(cell))
                except ValueError:
                    raise DataError(
                        f"{path}: row {i}, column {name!r}: not a number: {cell!r}"
                    ) from None
            rows.append(vals)
    if not rows:
        raise DataError(f"{path}: no data rows")
    return np.array(rows), tuple(names)


def write_csv(ds, path):
    """Write a dataset in the canonical CSV form that load_csv round-trips."""
    with open(path, "w", newline="\n", encoding="utf-8") as fh:
        fh.write(",".join(ds.feature_names) + ",label\n")
        for row, lab in zip(ds.features, ds.labels):
            fh.write(",".join(repr(float(x)) for x in row))
            fh.write(f",{int(lab)}\n")


def normalize_fit(ds):
    """Per-column sample mean and stddev (divisor n-1) of a dataset."""
    if ds.n < 2:
        raise DataError("need at least 2 rows to fit normalization")
    means = ds.features.mean(axis=0)
    stds = ds.features.std(axis=0, ddof=1)
    return NormStats(means, stds)


def normalize_apply(stats, ds):
    """Center and scale a dataset; degenerate columns are only centered."""
    if stats.m != ds.m:
        raise DataError(f"stats have {stats.m} columns, dataset has {ds.m}")
    divisors = np.where(stats.degenerate, 1.0, stats.stddevs)
    feats = (ds.features - stats.means) / divisors
    return LabeledDataset(feats, ds.labels, ds.feature_names)


def split(ds, validation_fraction, seed):
    """Seeded stratified split into training and validation rows.

    Per-class validation counts follow the fraction by largest remainder,
    so class proportions on each side are within one example of exact.
    """
    if not 0.0 < validation_fraction < 1.0:
        raise DataError("validation_fraction must be in (0, 1)")
    classes = [np.flatnonzero(ds.labels == c) for c in (0, 1)]
    for c, idx in enumerate(classes):
        if idx.size == 0:
            raise DataError(f"class {c} absent from dataset")
    total = math.floor(validation_fraction * ds.n + 0.5)
    targets = [validation_fraction * idx.size for idx in classes]
    alloc = [math.floor(t) for t in targets]
    extra = total - sum(alloc)
    order = sorted(range(2), key=lambda c: (alloc[c] - targets[c], c))
    for c in order[:extra]:
        alloc[c] += 1
    rng = np.random.default_rng(derive_seed(seed, STREAM_SPLIT))
    val = []
    for idx, k in zip(classes, alloc):
        val.append(rng.permutation(idx)[:k])
    val = np.sort(np.concatenate(val))
    train = np.setdiff1d(np.arange(ds.n), val)
    return SplitAssignment(train, val, seed)


def synth_generate(n_per_class, relevant_count, noise_rate, seed):
    """Seeded synthetic 36-feature dataset.

    The two classes differ only on the first relevant_count features
    (class 1 mean-shifted by 2, unit variance everywhere); a noise_rate
    fraction of labels is then flipped at random.
    """
    if not 1 <= relevant_count <= 36:
        raise DataError(f"relevant_count must be in 1..36, got {relevant_count}")
    if not 0.0 <= noise_rate < 1.0:
        raise DataError("noise_rate must be in [0, 1)")
    if n_per_class < 1:
        raise DataError("n_per_class must be positive")
    rng = np.random.default_rng(seed)
    n = 2 * n_per_class
    feats = rng.standard_normal((n, 36))
    feats[n_per_class:, :relevant_count] += 2.0
    labels = np.repeat([0, 1], n_per_class)
    n_flip = math.floor(noise_rate * n + 0.5)
    if n_flip:
        flip = rng.choice(n, size=n_flip, replace=False)
        labels[flip] = 1 - labels[flip]
    return LabeledDataset(feats, labels, EEG_FEATURE_NAMES)
