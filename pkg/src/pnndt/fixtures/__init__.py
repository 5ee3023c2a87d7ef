"""Bundled demonstration models and their golden rule renderings.

Four ready-made models ship with the package so the export and replay
paths can be exercised without a training run: a seven-neuron
polynomial network over the 36 EEG spectral features plus three compact
decision trees.  Each <name>.json model is paired with a <name>.txt
golden rendering.
"""

from importlib import resources

from pnndt import model_io

MODEL_NAMES = (
    "pnn_exp1_best",
    "dt_exp1_best",
    "dt_exp2_first",
    "dt_exp2_second",
)


def read_text(filename):
    return resources.files(__package__).joinpath(filename).read_text("utf-8")


def load(name):
    """Load a bundled model by name (see MODEL_NAMES)."""
    return model_io.model_from_json(read_text(name + ".json"), where=name)


def golden_rendering(name):
    """The expected rule rendering of a bundled model."""
    return read_text(name + ".txt")
