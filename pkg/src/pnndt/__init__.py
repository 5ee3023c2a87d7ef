"""Polynomial-network and decision-tree induction for EEG artifact recognition.

The package grows self-organizing polynomial networks from labeled
spectral-feature data, induces compact decision trees, combines the two
(clean the training data with the network, then grow the tree), and
evaluates classifiers by sensitivity, specificity and performance.
"""

from pnndt._backend import HAVE_SPEEDUPS, backend_name
from pnndt.data import (
    DataError,
    FeatureDescriptor,
    LabeledDataset,
    NormStats,
    SplitAssignment,
    EEG_FEATURE_NAMES,
    all_descriptors,
    load_csv,
    normalize_apply,
    normalize_fit,
    split,
    synth_generate,
    write_csv,
)
from pnndt.neuron import (
    FitConfig,
    FitError,
    FitTrace,
    InputRef,
    PolynomialNeuron,
    design_row,
    fit_weights,
    transfer,
)
from pnndt.network import (
    GrowConfig,
    GrowthError,
    LayerReport,
    PNNetwork,
    classify_network,
    exterior_criterion,
    generate_candidates,
    grow_layer,
    predict_network,
    render_polynomials,
    train_gmdh,
    train_gmdh_random,
)
from pnndt.tree import (
    DTConfig,
    Leaf,
    Split,
    best_threshold,
    find_node,
    node_count,
    predict_dt,
    render_tree,
)
from pnndt.pipeline import (
    CleanReport,
    ConfusionMetrics,
    PipelineError,
    RunSummary,
    clean_training_data,
    evaluate,
    knn_predict,
    repeated_runs,
    train_pnn_dt,
)

__version__ = "0.1.0"

__all__ = [name for name in dir() if not name.startswith("_")]
