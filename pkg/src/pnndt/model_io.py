"""Model persistence: JSON documents for networks, trees and baselines.

Network files list neurons as {id, layer, input_a, input_b, weights};
tree files nest {feature, q, left, right} splits with {p, n1, n2}
leaves.  Files fitted on normalized data carry the normalization stats
so predictions can be replayed on raw CSVs.
"""

import json
import sys
from contextlib import contextmanager

import numpy as np

from pnndt.data import LabeledDataset, NormStats
from pnndt.neuron import InputRef, PolynomialNeuron
from pnndt.network import PNNetwork
from pnndt.tree import Leaf, Split


class ModelError(ValueError):
    """Raised for unreadable or malformed model files."""


def _ref_to_json(ref):
    return {"feature": ref.index} if ref.is_feature else {"neuron": ref.index + 1}


def _ref_from_json(obj):
    if not isinstance(obj, dict) or len(obj) != 1:
        raise ModelError(f"bad input reference: {obj!r}")
    if "feature" in obj:
        return InputRef.feature(int(obj["feature"]))
    if "neuron" in obj:
        return InputRef.neuron(int(obj["neuron"]) - 1)
    raise ModelError(f"bad input reference: {obj!r}")


def network_to_dict(net):
    neurons = []
    for pos, (nrn, layer) in enumerate(zip(net.neurons, net.layers)):
        neurons.append(
            {
                "id": pos + 1,
                "layer": layer,
                "input_a": _ref_to_json(nrn.input_a),
                "input_b": _ref_to_json(nrn.input_b),
                "weights": [float(w) for w in nrn.weights],
            }
        )
    return {"neurons": neurons, "output": net.output + 1}


def network_from_dict(obj, feature_names):
    try:
        entries = sorted(obj["neurons"], key=lambda e: int(e["id"]))
        neurons = []
        layers = []
        for pos, e in enumerate(entries):
            if int(e["id"]) != pos + 1:
                raise ModelError("neuron ids must be 1..K without gaps")
            neurons.append(
                PolynomialNeuron(
                    _ref_from_json(e["input_a"]),
                    _ref_from_json(e["input_b"]),
                    np.array(e["weights"], dtype=np.float64),
                )
            )
            layers.append(int(e["layer"]))
        return PNNetwork(
            tuple(neurons), tuple(layers), int(obj["output"]) - 1, feature_names
        )
    except (KeyError, TypeError, ValueError) as exc:
        raise ModelError(f"malformed network: {exc}") from exc


def tree_to_dict(node):
    # Iterative: induced trees can nest past the recursion limit.
    order = []
    stack = [node]
    while stack:
        n = stack.pop()
        order.append(n)
        if isinstance(n, Split):
            stack.extend((n.left, n.right))
    built = {}
    for n in reversed(order):
        if isinstance(n, Leaf):
            built[id(n)] = {"p": float(n.p), "n1": n.n1, "n2": n.n2}
        elif isinstance(n, Split):
            built[id(n)] = {
                "feature": n.feature,
                "q": float(n.q),
                "left": built[id(n.left)],
                "right": built[id(n.right)],
            }
        else:
            raise ModelError(f"bad tree node: {n!r}")
    return built[id(node)]


def tree_from_dict(obj):
    order = []
    stack = [obj]
    while stack:
        o = stack.pop()
        if not isinstance(o, dict):
            raise ModelError(f"bad tree node: {o!r}")
        order.append(o)
        if "p" not in o:
            try:
                stack.extend((o["left"], o["right"]))
            except KeyError as exc:
                raise ModelError(f"malformed tree node: missing {exc}") from exc
    built = {}
    for o in reversed(order):
        try:
            if "p" in o:
                built[id(o)] = Leaf(
                    float(o["p"]), int(o.get("n1", 0)), int(o.get("n2", 0))
                )
            else:
                built[id(o)] = Split(
                    int(o["feature"]),
                    float(o["q"]),
                    built[id(o["left"])],
                    built[id(o["right"])],
                )
        except (TypeError, ValueError) as exc:
            raise ModelError(f"malformed tree node: {exc}") from exc
    return built[id(obj)]


def _norm_to_json(stats):
    if stats is None:
        return None
    return {
        "means": [float(v) for v in stats.means],
        "stddevs": [float(v) for v in stats.stddevs],
        "degenerate": [bool(v) for v in stats.degenerate],
    }


def _norm_from_json(obj):
    if obj is None:
        return None
    return NormStats(
        np.array(obj["means"], dtype=np.float64),
        np.array(obj["stddevs"], dtype=np.float64),
        np.array(obj["degenerate"], dtype=bool),
    )


class SavedModel:
    """A loaded model file: one of pnn, decision_tree, pnn_dt or knn."""

    def __init__(self, kind, feature_names, network=None, tree=None,
                 knn_train=None, k=None, normalization=None, config=None,
                 clean_report=None):
        self.kind = kind
        self.feature_names = tuple(feature_names)
        self.network = network
        self.tree = tree
        self.knn_train = knn_train
        self.k = k
        self.normalization = normalization
        self.config = config
        self.clean_report = clean_report

    def to_dict(self):
        doc = {"model": self.kind, "feature_names": list(self.feature_names)}
        if self.kind == "pnn":
            doc["network"] = network_to_dict(self.network)
        elif self.kind == "decision_tree":
            doc["tree"] = tree_to_dict(self.tree)
        elif self.kind == "pnn_dt":
            doc["network"] = network_to_dict(self.network)
            doc["tree"] = tree_to_dict(self.tree)
            doc["clean_report"] = self.clean_report
        elif self.kind == "knn":
            doc["k"] = self.k
            doc["train_features"] = [
                [float(v) for v in row] for row in self.knn_train.features
            ]
            doc["train_labels"] = [int(v) for v in self.knn_train.labels]
        else:
            raise ModelError(f"unknown model kind {self.kind!r}")
        doc["normalization"] = _norm_to_json(self.normalization)
        doc["config"] = self.config
        return doc


@contextmanager
def _deep_json_limit():
    # The nested tree schema can exceed the default recursion limit in
    # the json encoder/decoder for very deep trees.
    old = sys.getrecursionlimit()
    sys.setrecursionlimit(max(old, 30_000))
    try:
        yield
    finally:
        sys.setrecursionlimit(old)


def save_model(model, path):
    with _deep_json_limit():
        text = json.dumps(model.to_dict(), indent=2, ensure_ascii=False)
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write(text + "\n")


def load_model(path):
    try:
        with open(path, encoding="utf-8") as fh, _deep_json_limit():
            doc = json.load(fh)
    except OSError as exc:
        raise ModelError(f"cannot read model file: {exc}") from exc
    except json.JSONDecodeError as exc:
        raise ModelError(f"{path}: not valid JSON: {exc}") from exc
    return model_from_dict(doc, where=str(path))


def model_from_json(text, where="<string>"):
    try:
        with _deep_json_limit():
            doc = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ModelError(f"{where}: not valid JSON: {exc}") from exc
    return model_from_dict(doc, where=where)


def model_from_dict(doc, where="<dict>"):
    path = where
    if not isinstance(doc, dict) or "model" not in doc:
        raise ModelError(f"{path}: missing 'model' field")
    kind = doc["model"]
    names = tuple(doc.get("feature_names", ()))
    norm = _norm_from_json(doc.get("normalization"))
    config = doc.get("config")
    if kind == "pnn":
        return SavedModel(kind, names, network=network_from_dict(doc["network"], names),
                          normalization=norm, config=config)
    if kind == "decision_tree":
        return SavedModel(kind, names, tree=tree_from_dict(doc["tree"]),
                          normalization=norm, config=config)
    if kind == "pnn_dt":
        return SavedModel(
            kind, names,
            network=network_from_dict(doc["network"], names),
            tree=tree_from_dict(doc["tree"]),
            normalization=norm, config=config,
            clean_report=doc.get("clean_report"),
        )
    if kind == "knn":
        train = LabeledDataset(
            np.array(doc["train_features"], dtype=np.float64),
            np.array(doc["train_labels"], dtype=np.int64),
            names,
        )
        return SavedModel(kind, names, knn_train=train, k=int(doc["k"]),
                          normalization=norm, config=config)
    raise ModelError(f"{path}: unknown model kind {kind!r}")
