"""Compact decision-tree induction with randomized threshold search.

Each splitting node tests one feature against a threshold q (left:
value < q, right: value >= q).  Thresholds are searched by drawing a
fixed number of uniform candidates between the feature's extremes and
scoring each by misclassification count with majority labels per side.
A side is grown further only while it holds more than a configured
minimum of examples of both classes; otherwise it becomes a leaf whose
value is the artifact frequency probability n1/(n1+n2).
"""

import math
from dataclasses import dataclass

import numpy as np

from pnndt._backend import kernels
from pnndt.seeding import derive_seed, STREAM_TREE


@dataclass(frozen=True)
class Leaf:
    """Terminal node: artifact probability plus the class counts behind it."""

    p: float
    n1: int
    n2: int

    def __post_init__(self):
        if self.n1 < 0 or self.n2 < 0:
            raise ValueError("leaf counts must be non-negative")
        if not 0.0 <= self.p <= 1.0:
            raise ValueError("leaf probability must be in [0, 1]")
        if self.n1 + self.n2 > 0 and self.p != self.n1 / (self.n1 + self.n2):
            raise ValueError("leaf probability must equal n1/(n1+n2)")

    @classmethod
    def from_counts(cls, n1, n2):
        return cls(n1 / (n1 + n2), n1, n2)


@dataclass(frozen=True)
class Split:
    """Internal node: rows with feature < q go left, others right."""

    feature: int
    q: float
    left: object
    right: object

    def __post_init__(self):
        if self.feature < 0:
            raise ValueError("feature index must be non-negative")
        if not math.isfinite(self.q):
            raise ValueError("threshold must be finite")


@dataclass(frozen=True)
class DTConfig:
    """Tree induction settings.

    The effective node minimum is max(min_examples,
    ceil(min_fraction * n_train)); a side is split further only while it
    holds more than that many examples of both classes.  lam is the
    number of random threshold candidates drawn per feature.
    """

    min_examples: int = 5
    min_fraction: float = 0.004
    lam: int = 300
    seed: int = 0

    def __post_init__(self):
        if self.min_examples < 0:
            raise ValueError("min_examples must be non-negative")
        if not 0.0 <= self.min_fraction < 1.0:
            raise ValueError("min_fraction must be in [0, 1)")
        if self.lam < 1:
            raise ValueError("lam must be at least 1")

    def effective_minimum(self, n_train):
        return max(self.min_examples, math.ceil(self.min_fraction * n_train))


def best_threshold(values, labels, lam, rng):
    """Best of lam uniform threshold draws for one feature.

    Each candidate q is scored by the misclassified count when both
    sides take their majority label; ties prefer the smaller q.
    Returns (q, error).
    """
    values = np.asarray(values, dtype=np.float64)
    labels = np.asarray(labels, dtype=np.int64)
    if values.size == 0:
        raise ValueError("cannot search a threshold over no values")
    if lam < 1:
        raise ValueError("lam must be at least 1")
    qs = np.ascontiguousarray(rng.uniform(values.min(), values.max(), size=lam))
    order = np.argsort(values, kind="stable")
    sorted_values = np.ascontiguousarray(values[order])
    cum_ones = np.zeros(values.size + 1, dtype=np.int64)
    np.cumsum(labels[order], out=cum_ones[1:])
    errors = kernels.threshold_errors(sorted_values, cum_ones, qs)
    best = np.lexsort((qs, errors))[0]
    return float(qs[best]), int(errors[best])


def find_node(x0, x1, cfg, threshold_search=None):
    """Induce a tree over class-0 rows x0 and class-1 rows x1.

    threshold_search(values, labels, rng) -> (q, error) may replace the
    randomized search (used by tests to substitute an exhaustive scan).
    """
    x0 = _rows(x0)
    x1 = _rows(x1)
    if len(x0) + len(x1) == 0:
        raise ValueError("cannot induce a tree over no examples")
    if len(x0) and len(x1) and x0.shape[1] != x1.shape[1]:
        raise ValueError("class matrices disagree in feature count")
    if threshold_search is None:
        def threshold_search(values, labels, rng):
            return best_threshold(values, labels, cfg.lam, rng)
    min_eff = cfg.effective_minimum(len(x0) + len(x1))
    return _grow(x0, x1, cfg, min_eff, 1, threshold_search)


def _rows(x):
    x = np.asarray(x, dtype=np.float64)
    if x.ndim == 1:
        x = x.reshape(0, 0) if x.size == 0 else x.reshape(1, -1)
    return x


def _search_node(x0, x1, cfg, path, search):
    """Best (error, feature, q) over usable features, or None."""
    n0 = len(x0)
    labels = np.zeros(n0 + len(x1), dtype=np.int64)
    labels[n0:] = 1
    best = None  # ties keep the lowest feature index
    for j in range(x0.shape[1]):
        col = np.concatenate((x0[:, j], x1[:, j]))
        if col.min() == col.max():
            continue
        rng = np.random.default_rng(derive_seed(cfg.seed, STREAM_TREE, path, j))
        q, err = search(col, labels, rng)
        if best is None or err < best[0]:
            best = (err, j, q)
    return best


def _grow(x0, x1, cfg, min_eff, root_path, search):
    # Iterative build: trees on noisy data can nest deeper than the
    # Python recursion limit.  Parents are created before children, so a
    # reverse pass can assemble the immutable nodes bottom-up.
    shells = []
    stack = [(x0, x1, root_path, None, None)]
    while stack:
        x0_n, x1_n, path, parent, side = stack.pop()
        n0, n1 = len(x0_n), len(x1_n)
        idx = len(shells)
        if n0 == 0 or n1 == 0:
            shells.append({"leaf": Leaf.from_counts(n1, n0), "parent": parent,
                           "side": side})
            continue
        best = _search_node(x0_n, x1_n, cfg, path, search)
        split_ok = False
        if best is not None:
            _, j, q = best
            l0, r0 = x0_n[x0_n[:, j] < q], x0_n[x0_n[:, j] >= q]
            l1, r1 = x1_n[x1_n[:, j] < q], x1_n[x1_n[:, j] >= q]
            split_ok = len(l0) + len(l1) > 0 and len(r0) + len(r1) > 0
        if not split_ok:
            shells.append({"leaf": Leaf.from_counts(n1, n0), "parent": parent,
                           "side": side})
            continue
        shells.append({"feature": j, "q": float(q), "parent": parent,
                       "side": side, "children": [None, None]})
        for side_ix, (c0, c1) in enumerate(((l0, l1), (r0, r1))):
            if len(c0) > min_eff and len(c1) > min_eff:
                stack.append((c0, c1, 2 * path + side_ix, idx, side_ix))
            else:
                shells.append({"leaf": Leaf.from_counts(len(c1), len(c0)),
                               "parent": idx, "side": side_ix})
    # Children appear after their parent; assemble in reverse.
    nodes = [None] * len(shells)
    for idx in range(len(shells) - 1, -1, -1):
        shell = shells[idx]
        if "leaf" in shell:
            nodes[idx] = shell["leaf"]
        else:
            left, right = shell["children"]
            nodes[idx] = Split(shell["feature"], shell["q"], left, right)
        if shell["parent"] is not None:
            shells[shell["parent"]]["children"][shell["side"]] = nodes[idx]
    return nodes[0]


def predict_dt(tree, x):
    """Descend to a leaf; returns (label, artifact probability)."""
    x = np.asarray(x, dtype=np.float64)
    node = tree
    while isinstance(node, Split):
        if node.feature >= x.shape[0]:
            raise ValueError(
                f"tree tests feature {node.feature} but input has {x.shape[0]}"
            )
        node = node.left if x[node.feature] < node.q else node.right
    return int(node.p >= 0.5), node.p


def classify_rows(tree, rows):
    rows = np.asarray(rows, dtype=np.float64)
    return np.array([predict_dt(tree, row)[0] for row in rows], dtype=np.int64)


def node_count(tree):
    """Number of splitting nodes (leaves are not counted)."""
    count = 0
    stack = [tree]
    while stack:
        node = stack.pop()
        if isinstance(node, Split):
            count += 1
            stack.extend((node.left, node.right))
    return count


def tree_features(tree):
    """Set of feature indices tested anywhere in the tree."""
    feats = set()
    stack = [tree]
    while stack:
        node = stack.pop()
        if isinstance(node, Split):
            feats.add(node.feature)
            stack.extend((node.left, node.right))
    return feats


def remap_features(tree, mapping):
    """Rewrite split feature indices through mapping[old] -> new."""
    order = []
    stack = [tree]
    while stack:
        node = stack.pop()
        order.append(node)
        if isinstance(node, Split):
            stack.extend((node.left, node.right))
    rebuilt = {}
    for node in reversed(order):
        if isinstance(node, Split):
            rebuilt[id(node)] = Split(
                mapping[node.feature],
                node.q,
                rebuilt[id(node.left)],
                rebuilt[id(node.right)],
            )
        else:
            rebuilt[id(node)] = node
    return rebuilt[id(tree)]


def _format_p(p):
    s = f"{p:.4f}".rstrip("0")
    return s + "0" if s.endswith(".") else s


def render_tree(tree, feature_names):
    """Indented diagram; leaves print artifact(p)."""
    if isinstance(tree, Leaf):
        return f"artifact({_format_p(tree.p)})\n"
    lines = []
    # Work items render one branch line each; splits expand lazily so
    # arbitrarily deep trees render without recursion.
    stack = [(tree, 0)]
    while stack:
        item = stack.pop()
        if isinstance(item, str):
            lines.append(item)
            continue
        node, depth = item
        pad = "    " * depth
        q = f"{node.q:.4f}"
        name = feature_names[node.feature]
        branches = []
        for op, child in (("<", node.left), (">=", node.right)):
            if isinstance(child, Leaf):
                branches.append(f"{pad}{name} {op} {q}: artifact({_format_p(child.p)})")
            else:
                branches.append(f"{pad}{name} {op} {q}:")
                branches.append((child, depth + 1))
        stack.extend(reversed(branches))
    return "\n".join(lines) + "\n"
