"""Shared test utilities: independent oracles and dataset builders.

Oracles here deliberately avoid the library's own code paths so the
checks stay two-sided: brute-force loops, closed forms, or hand
evaluation only.
"""

import re

import numpy as np

from pnndt import LabeledDataset


def poly(v1, v2, w):
    """Hand evaluation of the neuron polynomial (test-side oracle)."""
    return w[0] + w[1] * v1 + w[2] * v2 + w[3] * v1 * v2


def sse_oracle(u, y, w):
    """Brute-force sum of squared residuals via an explicit row loop."""
    total = 0.0
    for (v1, v2), target in zip(u, y):
        total += (poly(v1, v2, w) - target) ** 2
    return total


def normal_equations(u, y):
    """Closed-form least squares on the 4-term basis."""
    g = np.column_stack([np.ones(len(u)), u[:, 0], u[:, 1], u[:, 0] * u[:, 1]])
    return np.linalg.solve(g.T @ g, g.T @ y)


def split_error_oracle(values, labels, q):
    """Misclassified count when each side takes its majority label."""
    left = [l for v, l in zip(values, labels) if v < q]
    right = [l for v, l in zip(values, labels) if v >= q]
    err = 0
    for side in (left, right):
        ones = sum(side)
        err += min(ones, len(side) - ones)
    return err


def exhaustive_threshold(values, labels):
    """Scan all midpoints between consecutive distinct values.

    Returns (q, error) with ties broken toward the smaller q, matching
    the library's tie rule.
    """
    distinct = sorted(set(float(v) for v in values))
    candidates = [(a + b) / 2.0 for a, b in zip(distinct, distinct[1:])]
    if not candidates:
        candidates = [distinct[0]]
    best_q, best_err = None, None
    for q in candidates:
        err = split_error_oracle(values, labels, q)
        if best_err is None or err < best_err:
            best_q, best_err = q, err
    return best_q, best_err


def one_nn_oracle(train_x, train_y, x):
    """Plain nearest-neighbor by explicit distance loop."""
    best, best_d = None, None
    for row, label in zip(train_x, train_y):
        d = float(np.sum((row - x) ** 2))
        if best_d is None or d < best_d:
            best, best_d = label, d
    return best


def xor_dataset(seed, n=400, m=10, noisy_copies=()):
    """Binary features; labels are XOR of features 3 and 7 (zero noise).

    Columns listed in noisy_copies become corrupted copies of the label,
    everything else is an independent coin flip.
    """
    rng = np.random.default_rng(seed)
    x = (rng.random((n, m)) < 0.5).astype(float)
    y = x[:, 3].astype(int) ^ x[:, 7].astype(int)
    for j in noisy_copies:
        flip = rng.random(n) < 0.35
        x[:, j] = np.where(flip, 1 - y, y).astype(float)
    return LabeledDataset(x, y, tuple(f"f{k}" for k in range(m)))


def tiny_dataset():
    """Four separable rows over two features."""
    x = np.array([[0.0, 1.0], [0.1, 0.8], [0.9, 0.2], [1.0, 0.1]])
    y = np.array([0, 0, 1, 1])
    return LabeledDataset(x, y, ("a", "b"))


_POLY_LINE = re.compile(
    r"^y(\d+) = P\(([^,]+), ([^;]+); \[(\S+) (\S+) (\S+) (\S+)\]\)$"
)


def parse_polynomials(text, feature_names):
    """Parse a rendered polynomial listing back into structure.

    Returns a list of (input_a, input_b, weights) where inputs are
    ('feature', index) or ('neuron', index).
    """
    name_ix = {n: i for i, n in enumerate(feature_names)}
    parsed = []
    for lineno, line in enumerate(text.strip().split("\n"), start=1):
        m = _POLY_LINE.match(line)
        assert m, f"unparseable line {lineno}: {line!r}"
        assert int(m.group(1)) == lineno
        refs = []
        for token in (m.group(2), m.group(3)):
            if token in name_ix:
                refs.append(("feature", name_ix[token]))
            else:
                assert token.startswith("y")
                refs.append(("neuron", int(token[1:]) - 1))
        weights = [float(m.group(k)) for k in (4, 5, 6, 7)]
        parsed.append((refs[0], refs[1], weights))
    return parsed
