"""Two-input polynomial neurons and distribution-free iterative weight fitting.

A neuron computes w0 + w1*v1 + w2*v2 + w3*v1*v2 over its two inputs.
Weights are fitted by repeated projection steps on the training rows,
stopping once the held-out validation MSE stops improving; no
distributional assumptions about the inputs are needed.
"""

from dataclasses import dataclass

import numpy as np

from pnndt._backend import kernels


class FitError(RuntimeError):
    """Raised when weight fitting cannot proceed (degenerate or divergent)."""


@dataclass(frozen=True)
class InputRef:
    """Reference to a neuron input: an original feature or an earlier neuron."""

    kind: str
    index: int

    def __post_init__(self):
        if self.kind not in ("feature", "neuron"):
            raise ValueError(f"bad input kind {self.kind!r}")
        if self.index < 0:
            raise ValueError("input index must be non-negative")

    @classmethod
    def feature(cls, index):
        return cls("feature", index)

    @classmethod
    def neuron(cls, index):
        return cls("neuron", index)

    @property
    def is_feature(self):
        return self.kind == "feature"


@dataclass(frozen=True)
class PolynomialNeuron:
    """A fitted two-input neuron: input references plus 4 weights."""

    input_a: InputRef
    input_b: InputRef
    weights: np.ndarray

    def __post_init__(self):
        if self.input_a == self.input_b:
            raise ValueError("neuron inputs must differ")
        w = np.asarray(self.weights, dtype=np.float64)
        if w.shape != (4,):
            raise ValueError("weights must be a 4-vector")
        if not np.all(np.isfinite(w)):
            raise ValueError("weights must be finite")
        w = np.ascontiguousarray(w)
        w.flags.writeable = False
        object.__setattr__(self, "weights", w)


@dataclass(frozen=True)
class FitConfig:
    """Settings for iterative weight fitting.

    chi is the learning rate (must lie strictly between 1 and 2 for the
    projection step to converge), delta the validation-MSE improvement
    below which fitting stops.
    """

    chi: float = 1.9
    delta: float = 1.5e-2
    max_steps: int = 200
    seed: int = 0

    def __post_init__(self):
        if not 1.0 < self.chi < 2.0:
            raise ValueError(f"chi must be in (1, 2), got {self.chi}")
        if self.delta <= 0:
            raise ValueError("delta must be positive")
        if self.max_steps < 1:
            raise ValueError("max_steps must be at least 1")


@dataclass(frozen=True)
class FitTrace:
    """Per-step validation MSE record of one fit."""

    steps_taken: int
    validation_errors: np.ndarray

    def __post_init__(self):
        errs = np.asarray(self.validation_errors, dtype=np.float64)
        if errs.shape != (self.steps_taken,):
            raise ValueError("one validation error per step is required")
        errs = np.ascontiguousarray(errs)
        errs.flags.writeable = False
        object.__setattr__(self, "validation_errors", errs)


def design_row(v1, v2):
    """Basis row (1, v1, v2, v1*v2); a neuron's output is weights @ design_row."""
    return np.array([1.0, v1, v2, v1 * v2])


def design_matrix(u):
    """Stack design rows for an (n, 2) input matrix."""
    u = np.asarray(u, dtype=np.float64)
    n = u.shape[0]
    g = np.empty((n, 4))
    g[:, 0] = 1.0
    g[:, 1] = u[:, 0]
    g[:, 2] = u[:, 1]
    g[:, 3] = u[:, 0] * u[:, 1]
    return g


def transfer(neuron, v1, v2):
    """Evaluate a neuron at inputs (v1, v2)."""
    w = neuron.weights
    return float(w[0] + w[1] * v1 + w[2] * v2 + w[3] * v1 * v2)


def fit_weights(u_a, y_a, u_b, y_b, cfg):
    """Fit neuron weights on training pairs, stopping on validation MSE.

    Weights start from standard-normal draws seeded by cfg.seed.  Each
    step moves them against the training-residual gradient, scaled by
    chi over the squared Frobenius norm of the design matrix, until the
    validation-MSE improvement falls below cfg.delta or max_steps is
    reached.  Returns (weights, FitTrace).
    """
    g_a = design_matrix(u_a)
    g_b = design_matrix(u_b)
    y_a = np.ascontiguousarray(y_a, dtype=np.float64)
    y_b = np.ascontiguousarray(y_b, dtype=np.float64)
    if g_a.shape[0] < 4:
        raise FitError(f"need at least 4 training rows, got {g_a.shape[0]}")
    if g_a.shape[0] != y_a.shape[0] or g_b.shape[0] != y_b.shape[0]:
        raise FitError("inputs and targets disagree in length")
    rng = np.random.default_rng(cfg.seed)
    w0 = rng.standard_normal(4)
    w, eb, steps, status = kernels.fit_weights_kernel(
        g_a, y_a, g_b, y_b, w0, cfg.chi, cfg.delta, cfg.max_steps
    )
    if status == kernels.STOP_ZERO_NORM:
        raise FitError("design matrix is identically zero")
    if status == kernels.STOP_DIVERGED:
        raise FitError("weight fitting diverged (non-finite or runaway weights)")
    return w, FitTrace(steps, eb)
