"""Combined network-and-tree training, baselines, metrics, repeated runs.

The combined procedure trains a polynomial network, drops the training
rows it misclassifies together with the features it does not use, and
induces a decision tree on what remains.  Evaluation reports
sensitivity, specificity and performance (artifact = positive class);
repeated runs are summarized as mean with a 95% half-width taken as
1.96 times the sample standard deviation across runs.
"""

from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, replace

import numpy as np

from pnndt.data import LabeledDataset
from pnndt import network as net_mod
from pnndt import tree as tree_mod


class PipelineError(RuntimeError):
    """Raised when cleaning leaves no usable training data."""


@dataclass(frozen=True)
class ConfusionMetrics:
    """Confusion counts with the three derived rates."""

    tp: int
    tn: int
    fp: int
    fn: int

    def __post_init__(self):
        for name in ("tp", "tn", "fp", "fn"):
            if getattr(self, name) < 0:
                raise ValueError(f"{name} must be non-negative")

    @property
    def total(self):
        return self.tp + self.tn + self.fp + self.fn

    @property
    def sensitivity(self):
        denom = self.tp + self.fn
        return self.tp / denom if denom else 0.0

    @property
    def specificity(self):
        denom = self.tn + self.fp
        return self.tn / denom if denom else 0.0

    @property
    def performance(self):
        return (self.tp + self.tn) / self.total if self.total else 0.0

    def as_dict(self):
        return {
            "sensitivity": self.sensitivity,
            "specificity": self.specificity,
            "performance": self.performance,
        }


@dataclass(frozen=True)
class RunSummary:
    """Mean and 95% half-width (1.96 * sample stddev) of per-run values."""

    runs: int
    mean: float
    half_width: float
    per_run: tuple

    def __post_init__(self):
        if self.runs != len(self.per_run):
            raise ValueError("per_run must hold one value per run")
        if self.half_width < 0:
            raise ValueError("half_width must be non-negative")


@dataclass(frozen=True)
class CleanReport:
    """What cleaning removed: row indices dropped, feature indices kept."""

    removed_indices: tuple
    kept_features: tuple
    original_n: int
    original_m: int

    @property
    def removed_count(self):
        return len(self.removed_indices)


def clean_training_data(net, ds, threshold=0.5):
    """Drop rows the network misclassifies and features it does not use."""
    preds = net_mod.classify_rows(net, ds.features, threshold)
    keep_rows = preds == ds.labels
    kept_features = tuple(sorted(net.input_feature_ids))
    removed = tuple(int(i) for i in np.flatnonzero(~keep_rows))
    report = CleanReport(removed, kept_features, ds.n, ds.m)
    if not keep_rows.any():
        raise PipelineError("cleaning removed every training example")
    labels = ds.labels[keep_rows]
    if np.all(labels == labels[0]):
        raise PipelineError("cleaned training data contains a single class")
    if len(kept_features) < 2:
        raise PipelineError(
            f"network uses {len(kept_features)} feature(s); tree induction "
            "needs at least 2"
        )
    feats = ds.features[np.ix_(keep_rows, np.array(kept_features))]
    names = tuple(ds.feature_names[j] for j in kept_features)
    return LabeledDataset(feats, labels, names), report


def train_pnn_dt(ds, grow_cfg, dt_cfg, variant="random", fail_limit=7,
                 threshold=0.5, jobs=1):
    """Train the combined classifier: network, cleaning, then tree.

    variant selects the network trainer: "random" (random pairing) or
    "layered" (exhaustive layer growth).  The returned tree's feature
    indices refer to the original feature space.
    """
    if variant == "random":
        net = net_mod.train_gmdh_random(ds, grow_cfg, fail_limit=fail_limit,
                                        jobs=jobs)
    elif variant == "layered":
        net, _ = net_mod.train_gmdh(ds, grow_cfg, jobs=jobs)
    else:
        raise ValueError(f"unknown variant {variant!r}")
    cleaned, report = clean_training_data(net, ds, threshold)
    x0 = cleaned.features[cleaned.labels == 0]
    x1 = cleaned.features[cleaned.labels == 1]
    tree = tree_mod.find_node(x0, x1, dt_cfg)
    tree = tree_mod.remap_features(tree, dict(enumerate(report.kept_features)))
    return net, tree, report


def evaluate(classify, test):
    """Confusion metrics of a classifier over a labeled dataset.

    classify maps an (n, m) matrix to n predicted labels; the adapters
    below wrap networks, trees and the k-nn baseline into that shape.
    """
    preds = np.asarray(classify(test.features))
    if preds.shape != (test.n,):
        raise ValueError("classifier must return one label per row")
    actual = test.labels
    tp = int(np.sum((preds == 1) & (actual == 1)))
    tn = int(np.sum((preds == 0) & (actual == 0)))
    fp = int(np.sum((preds == 1) & (actual == 0)))
    fn = int(np.sum((preds == 0) & (actual == 1)))
    return ConfusionMetrics(tp, tn, fp, fn)


def network_classifier(net, threshold=0.5):
    return lambda rows: net_mod.classify_rows(net, rows, threshold)


def tree_classifier(tree):
    return lambda rows: tree_mod.classify_rows(tree, rows)


def knn_classifier(train, k):
    if k < 1 or k > train.n:
        raise ValueError(f"k must be in 1..{train.n}")
    return lambda rows: _knn_rows(train, rows, k)


def knn_predict(train, x, k):
    """Majority label among the k nearest training rows (Euclidean).

    Vote ties go to label 1; distance ties prefer the lower row index.
    """
    if train.n == 0:
        raise ValueError("empty training set")
    if k < 1 or k > train.n:
        raise ValueError(f"k must be in 1..{train.n}")
    x = np.asarray(x, dtype=np.float64)
    if x.shape != (train.m,):
        raise ValueError(f"expected {train.m} features, got {x.shape}")
    return int(_knn_rows(train, x[None, :], k)[0])


def _knn_rows(train, rows, k, chunk=256):
    rows = np.asarray(rows, dtype=np.float64)
    if rows.ndim != 2 or rows.shape[1] != train.m:
        raise ValueError(f"rows must be (n, {train.m})")
    xt = train.features
    sq_train = np.einsum("ij,ij->i", xt, xt)
    out = np.empty(rows.shape[0], dtype=np.int64)
    for start in range(0, rows.shape[0], chunk):
        block = rows[start:start + chunk]
        d2 = sq_train[None, :] - 2.0 * (block @ xt.T)
        # Stable sort keeps the lower training index on distance ties.
        nearest = np.argsort(d2, axis=1, kind="stable")[:, :k]
        ones = train.labels[nearest].sum(axis=1)
        out[start:start + chunk] = (2 * ones >= k).astype(np.int64)
    return out


def repeated_runs(experiment, runs, base_seed, jobs=1):
    """Run experiment(seed) for seeds base_seed..base_seed+runs-1.

    experiment returns a mapping of metric name to value; the result
    maps each metric to a RunSummary over the runs.
    """
    if runs < 2:
        raise ValueError("need at least 2 runs to summarize")
    seeds = [base_seed + i for i in range(runs)]
    if jobs and jobs > 1:
        with ThreadPoolExecutor(max_workers=jobs) as pool:
            results = list(pool.map(experiment, seeds))
    else:
        results = [experiment(s) for s in seeds]
    metrics = list(results[0])
    summaries = {}
    for name in metrics:
        vals = np.array([r[name] for r in results], dtype=np.float64)
        summaries[name] = RunSummary(
            runs=runs,
            mean=float(vals.mean()),
            half_width=float(1.96 * vals.std(ddof=1)),
            per_run=tuple(float(v) for v in vals),
        )
    return summaries


METRIC_COLUMNS = ("sensitivity", "specificity", "performance")
REPORT_HEADER = "Classifier | Sensitivity % | Specificity % | Performance %"


def format_metrics_row(name, metrics):
    """One report row of plain percentages for a single evaluation."""
    cells = [f"{100.0 * metrics.as_dict()[c]:.1f}" for c in METRIC_COLUMNS]
    return f"{name} | " + " | ".join(cells)


def format_summary_row(name, summaries):
    """One report row of mean±half_width percentages over repeated runs."""
    cells = [
        f"{100.0 * summaries[c].mean:.1f}±{100.0 * summaries[c].half_width:.1f}"
        for c in METRIC_COLUMNS
    ]
    return f"{name} | " + " | ".join(cells)
