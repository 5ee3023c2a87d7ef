"""Self-organizing polynomial network induction.

Networks grow layer by layer: every pair of available inputs spawns a
candidate neuron, candidates are fitted on the training rows and ranked
by an exterior criterion (sum of squared residuals), and the best F
survive to feed the next layer.  Growth stops when the per-layer
criterion minimum stagnates.  A random-pairing variant grows a network
by accepting randomly drawn pairs only when the child improves on both
parents.
"""

import itertools
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, replace

import numpy as np

from pnndt.data import split
from pnndt.neuron import (
    FitConfig,
    InputRef,
    PolynomialNeuron,
    design_matrix,
    fit_weights,
)
from pnndt.seeding import derive_seed, STREAM_FIT, STREAM_RANDOM_PAIR


class GrowthError(RuntimeError):
    """Raised when network growth cannot proceed on the given data."""


CRITERION_SCOPES = ("whole", "validation")


@dataclass(frozen=True)
class GrowConfig:
    """Settings for layered network growth.

    F is the number of surviving neurons per layer; None selects
    0.4 * C(m, 2) for m input features.  Delta is the stagnation
    threshold on the per-layer criterion minimum.  criterion_scope
    chooses whether candidates are scored on all rows or only on the
    validation rows.
    """

    F: int = None
    Delta: float = 1.5e-2
    fit: FitConfig = FitConfig()
    max_layers: int = 10
    seed: int = 0
    val_fraction: float = 0.5
    criterion_scope: str = "whole"

    def __post_init__(self):
        if self.F is not None and self.F < 1:
            raise ValueError("F must be at least 1")
        if self.Delta <= 0:
            raise ValueError("Delta must be positive")
        if self.max_layers < 1:
            raise ValueError("max_layers must be at least 1")
        if not 0.0 < self.val_fraction < 1.0:
            raise ValueError("val_fraction must be in (0, 1)")
        if self.criterion_scope not in CRITERION_SCOPES:
            raise ValueError(f"criterion_scope must be one of {CRITERION_SCOPES}")

    def survivors(self, m):
        """Effective F given m first-layer inputs."""
        if self.F is not None:
            return self.F
        return max(1, round(0.4 * math.comb(m, 2)))


@dataclass(frozen=True)
class LayerReport:
    """Criterion values of one grown layer, sorted ascending."""

    layer_index: int
    candidate_count: int
    criteria: np.ndarray

    def __post_init__(self):
        crit = np.ascontiguousarray(np.asarray(self.criteria, dtype=np.float64))
        if crit.shape != (self.candidate_count,):
            raise ValueError("one criterion value per candidate is required")
        if np.any(np.diff(crit) < 0):
            raise ValueError("criteria must be sorted ascending")
        crit.flags.writeable = False
        object.__setattr__(self, "criteria", crit)

    @property
    def cr_min(self):
        return float(self.criteria[0])


@dataclass(frozen=True)
class PNNetwork:
    """A layered acyclic network of polynomial neurons.

    Neurons are stored in topological order (inputs reference features
    or strictly earlier list positions); `output` is the index of the
    designated output neuron.
    """

    neurons: tuple
    layers: tuple
    output: int
    feature_names: tuple

    def __post_init__(self):
        neurons = tuple(self.neurons)
        layers = tuple(int(l) for l in self.layers)
        names = tuple(str(n) for n in self.feature_names)
        if len(neurons) != len(layers) or not neurons:
            raise ValueError("need one layer tag per neuron")
        if not 0 <= self.output < len(neurons):
            raise ValueError("output index out of range")
        for pos, nrn in enumerate(neurons):
            for ref in (nrn.input_a, nrn.input_b):
                if ref.is_feature:
                    if ref.index >= len(names):
                        raise ValueError(f"neuron {pos} references feature {ref.index}")
                elif ref.index >= pos:
                    raise ValueError(f"neuron {pos} references neuron {ref.index}")
        object.__setattr__(self, "neurons", neurons)
        object.__setattr__(self, "layers", layers)
        object.__setattr__(self, "feature_names", names)
        object.__setattr__(self, "input_feature_ids", self._reachable_features())

    def _reachable_features(self):
        feats = set()
        seen = set()
        stack = [self.output]
        while stack:
            pos = stack.pop()
            if pos in seen:
                continue
            seen.add(pos)
            nrn = self.neurons[pos]
            for ref in (nrn.input_a, nrn.input_b):
                if ref.is_feature:
                    feats.add(ref.index)
                else:
                    stack.append(ref.index)
        return frozenset(feats)

    @property
    def m(self):
        return len(self.feature_names)


def generate_candidates(available_inputs):
    """All unordered pairs of inputs, in deterministic lexicographic order."""
    inputs = list(available_inputs)
    if len(inputs) < 2:
        raise GrowthError("need at least 2 inputs to form candidate pairs")
    return list(itertools.combinations(inputs, 2))


def exterior_criterion(neuron, inputs, targets):
    """Sum of squared residuals of a fitted neuron over the given rows."""
    g = design_matrix(inputs)
    resid = g @ neuron.weights - np.asarray(targets, dtype=np.float64)
    return float(resid @ resid)


def _map_jobs(fn, items, jobs):
    if jobs and jobs > 1:
        with ThreadPoolExecutor(max_workers=jobs) as pool:
            return list(pool.map(fn, items))
    return list(map(fn, items))


def grow_layer(input_refs, input_values, labels, assignment, cfg, r, jobs=1):
    """Fit all candidate pairs of one layer and select the F best.

    input_values holds one column per entry of input_refs, over all
    dataset rows.  Candidates are fitted on the assignment's training
    rows, scored by the exterior criterion over the configured scope,
    and returned sorted ascending (ties keep generation order).
    """
    input_values = np.asarray(input_values, dtype=np.float64)
    pairs = generate_candidates(range(len(input_refs)))
    labels = np.asarray(labels, dtype=np.float64)
    tr, va = assignment.train_indices, assignment.validation_indices
    if cfg.criterion_scope == "whole":
        scope = np.arange(input_values.shape[0])
    else:
        scope = va
    y_scope = labels[scope]

    def fit_pair(pair):
        ia, ib = pair
        u = input_values[:, (ia, ib)]
        fit_cfg = replace(cfg.fit, seed=derive_seed(cfg.seed, STREAM_FIT, r, ia, ib))
        w, _ = fit_weights(u[tr], labels[tr], u[va], labels[va], fit_cfg)
        nrn = PolynomialNeuron(input_refs[ia], input_refs[ib], w)
        cr = exterior_criterion(nrn, u[scope], y_scope)
        return nrn, cr

    fitted = _map_jobs(fit_pair, pairs, jobs)
    order = sorted(range(len(fitted)), key=lambda i: (fitted[i][1], i))
    f_eff = min(cfg.survivors(len(input_refs)), len(fitted))
    selected = [fitted[i][0] for i in order[:f_eff]]
    report = LayerReport(
        layer_index=r,
        candidate_count=len(fitted),
        criteria=np.array([fitted[i][1] for i in order]),
    )
    return selected, report


def _neuron_outputs(nrn, values):
    a = values[nrn.input_a]
    b = values[nrn.input_b]
    w = nrn.weights
    return w[0] + w[1] * a + w[2] * b + w[3] * a * b


def _finalize(entries, output_gid, feature_names):
    """Prune to the output's ancestor closure and renumber by (layer, id).

    entries maps global id -> (neuron with global refs, layer tag).
    """
    keep = set()
    stack = [output_gid]
    while stack:
        gid = stack.pop()
        if gid in keep:
            continue
        keep.add(gid)
        nrn, _ = entries[gid]
        for ref in (nrn.input_a, nrn.input_b):
            if not ref.is_feature:
                stack.append(ref.index)
    ordered = sorted(keep, key=lambda gid: (entries[gid][1], gid))
    new_pos = {gid: pos for pos, gid in enumerate(ordered)}

    def remap(ref):
        return ref if ref.is_feature else InputRef.neuron(new_pos[ref.index])

    neurons = []
    layers = []
    for gid in ordered:
        nrn, layer = entries[gid]
        neurons.append(
            PolynomialNeuron(remap(nrn.input_a), remap(nrn.input_b), nrn.weights)
        )
        layers.append(layer)
    return PNNetwork(
        tuple(neurons), tuple(layers), new_pos[output_gid], feature_names
    )


def _check_trainable(ds):
    if np.all(ds.labels == ds.labels[0]):
        raise GrowthError("dataset contains a single class; nothing to separate")


def train_gmdh(ds, cfg, jobs=1):
    """Grow a layered polynomial network on a labeled dataset.

    Layers are added while the per-layer criterion minimum keeps moving
    by at least cfg.Delta; on stagnation at layer r the network is taken
    from layer r-1, rooted at that layer's best neuron.  Returns the
    pruned network and the per-layer reports.
    """
    _check_trainable(ds)
    assignment = split(ds, cfg.val_fraction, cfg.seed)
    labels = ds.labels.astype(np.float64)

    entries = {}
    next_gid = 0
    refs = [InputRef.feature(j) for j in range(ds.m)]
    values = ds.features
    reports = []
    best_per_layer = []  # (gid, criterion) of each layer's best neuron
    stopped_early = False

    for r in range(1, cfg.max_layers + 1):
        if len(refs) < 2:
            break
        selected, report = grow_layer(refs, values, labels, assignment, cfg, r, jobs)
        reports.append(report)
        gids = []
        for nrn in selected:
            entries[next_gid] = (nrn, r)
            gids.append(next_gid)
            next_gid += 1
        best_per_layer.append((gids[0], report.cr_min))
        if r >= 2 and abs(reports[-1].cr_min - reports[-2].cr_min) < cfg.Delta:
            stopped_early = True
            break
        lookup = {ref: values[:, i] for i, ref in enumerate(refs)}
        out_cols = []
        new_refs = []
        for gid, nrn in zip(gids, selected):
            out_cols.append(_neuron_outputs(nrn, lookup))
            new_refs.append(InputRef.neuron(gid))
        refs = new_refs
        values = np.column_stack(out_cols)

    if stopped_early and len(best_per_layer) >= 2:
        output_gid = best_per_layer[-2][0]
    else:
        output_gid = best_per_layer[-1][0]
    return _finalize(entries, output_gid, ds.feature_names), reports


def train_gmdh_random(ds, cfg, fail_limit=7, max_accepts=1000, jobs=1,
                      return_trace=False):
    """Grow a network by randomly pairing pool members.

    The pool starts with the input features and gains every accepted
    neuron.  A drawn pair is fitted and accepted only when its criterion
    lies strictly below both parents' (a feature's stands for the best
    accepted neuron directly involving it, starting at +inf).  Growth
    ends after fail_limit consecutive rejections.  The result is rooted
    at the accepted neuron with the smallest criterion.
    """
    if fail_limit < 1:
        raise ValueError("fail_limit must be at least 1")
    _check_trainable(ds)
    if ds.m < 2:
        raise GrowthError("need at least 2 features")
    assignment = split(ds, cfg.val_fraction, cfg.seed)
    labels = ds.labels.astype(np.float64)
    tr, va = assignment.train_indices, assignment.validation_indices
    if cfg.criterion_scope == "whole":
        scope = np.arange(ds.n)
    else:
        scope = va
    y_scope = labels[scope]

    pool_refs = [InputRef.feature(j) for j in range(ds.m)]
    pool_values = [ds.features[:, j] for j in range(ds.m)]
    pool_mu = [math.inf] * ds.m
    pool_layer = [0] * ds.m

    entries = {}
    accepted = []  # (gid, criterion)
    trace = []
    best_fitted = None  # fallback if nothing is ever accepted
    rng = np.random.default_rng(derive_seed(cfg.seed, STREAM_RANDOM_PAIR))
    failures = 0
    draw = 0

    while failures < fail_limit and len(accepted) < max_accepts:
        i, j = (int(v) for v in rng.choice(len(pool_refs), size=2, replace=False))
        fit_cfg = replace(cfg.fit, seed=derive_seed(cfg.seed, STREAM_FIT, 0, draw))
        draw += 1
        u = np.column_stack((pool_values[i], pool_values[j]))
        w, _ = fit_weights(u[tr], labels[tr], u[va], labels[va], fit_cfg)
        nrn = PolynomialNeuron(pool_refs[i], pool_refs[j], w)
        cr = exterior_criterion(nrn, u[scope], y_scope)
        if best_fitted is None or cr < best_fitted[1]:
            best_fitted = (nrn, cr, 1 + max(pool_layer[i], pool_layer[j]))
        parents_mu = (pool_mu[i], pool_mu[j])
        if cr < min(parents_mu):
            gid = len(entries)
            layer = 1 + max(pool_layer[i], pool_layer[j])
            entries[gid] = (nrn, layer)
            accepted.append((gid, cr))
            pool_refs.append(InputRef.neuron(gid))
            pool_values.append(_neuron_outputs(nrn, _PoolLookup(pool_values, ds)))
            pool_mu.append(cr)
            pool_layer.append(layer)
            # An accepted neuron refreshes the proxy score of feature parents.
            for k in (i, j):
                if pool_refs[k].is_feature:
                    pool_mu[k] = min(pool_mu[k], cr)
            failures = 0
            trace.append((cr, parents_mu, True))
        else:
            failures += 1
            trace.append((cr, parents_mu, False))

    if accepted:
        output_gid = min(accepted, key=lambda t: (t[1], t[0]))[0]
    else:
        nrn, cr, layer = best_fitted
        entries[0] = (nrn, layer)
        output_gid = 0
    net = _finalize(entries, output_gid, ds.feature_names)
    return (net, trace) if return_trace else net


class _PoolLookup:
    """Adapter so _neuron_outputs can read pool columns by InputRef."""

    def __init__(self, pool_values, ds):
        self._pool = pool_values
        self._m = ds.m

    def __getitem__(self, ref):
        if ref.is_feature:
            return self._pool[ref.index]
        return self._pool[self._m + ref.index]


def network_outputs(net, rows):
    """Output-neuron values for every row of an (n, m) matrix."""
    rows = np.asarray(rows, dtype=np.float64)
    if rows.ndim != 2 or rows.shape[1] != net.m:
        raise ValueError(f"rows must be (n, {net.m})")
    values = {}
    for pos, nrn in enumerate(net.neurons):
        lookup = _NetLookup(rows, values)
        values[pos] = _neuron_outputs(nrn, lookup)
    return values[net.output]


class _NetLookup:
    def __init__(self, rows, values):
        self._rows = rows
        self._values = values

    def __getitem__(self, ref):
        if ref.is_feature:
            return self._rows[:, ref.index]
        return self._values[ref.index]


def predict_network(net, x):
    """Evaluate the network at one m-vector."""
    x = np.asarray(x, dtype=np.float64)
    if x.shape != (net.m,):
        raise ValueError(f"expected {net.m} features, got {x.shape}")
    return float(network_outputs(net, x[None, :])[0])


def classify_network(net, x, threshold=0.5):
    """1 when the network output reaches the threshold, else 0."""
    return int(predict_network(net, x) >= threshold)


def classify_rows(net, rows, threshold=0.5):
    return (network_outputs(net, rows) >= threshold).astype(np.int64)


def _input_name(net, ref):
    if ref.is_feature:
        return net.feature_names[ref.index]
    return f"y{ref.index + 1}"


def render_polynomials(net):
    """Human-readable listing, one `y_k = P(a, b; [w...])` line per neuron."""
    lines = []
    for pos, nrn in enumerate(net.neurons):
        coeffs = " ".join(f"{w:.4f}" for w in nrn.weights)
        lines.append(
            f"y{pos + 1} = P({_input_name(net, nrn.input_a)}, "
            f"{_input_name(net, nrn.input_b)}; [{coeffs}])"
        )
    return "\n".join(lines) + "\n"
