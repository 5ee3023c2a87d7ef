"""NumPy implementations of the hot kernels.

These are the fallback used when the compiled extension is unavailable;
``pnndt._speedups`` provides the same two functions with identical
contracts.  Integer outputs are bit-identical across backends; float
outputs may differ by accumulation order at the last few ulps.
"""

import numpy as np

# Fit loop exit codes, shared by both backends.
STOP_CONVERGED = 0  # validation-error improvement fell below delta
STOP_MAX_STEPS = 1
STOP_ZERO_NORM = 2  # design matrix identically zero
STOP_DIVERGED = 3  # non-finite or runaway weights

WEIGHT_LIMIT = 1e12


def fit_weights_kernel(ga, ya, gb, yb, w0, chi, delta, max_steps):
    """Iterative projection fit of a 4-weight neuron.

    ga/gb are the (n, 4) training/validation design matrices, ya/yb the
    targets.  Each step subtracts chi/||ga||_F^2 * ga.T @ residual from
    the weights, then evaluates the validation MSE; iteration stops once
    the MSE improvement drops below delta or max_steps is hit.

    Returns (weights, validation_errors, steps_taken, status).
    """
    fro2 = float(np.einsum("ij,ij->", ga, ga))
    if fro2 == 0.0:
        return w0.copy(), np.empty(0), 0, STOP_ZERO_NORM
    scale = chi / fro2
    w = w0.astype(np.float64, copy=True)
    eb = np.empty(max_steps)
    eb_prev = float(np.mean((gb @ w - yb) ** 2))
    steps = 0
    status = STOP_MAX_STEPS
    for k in range(max_steps):
        resid = ga @ w - ya
        w -= scale * (ga.T @ resid)
        steps = k + 1
        if not np.all(np.isfinite(w)) or float(np.max(np.abs(w))) > WEIGHT_LIMIT:
            status = STOP_DIVERGED
            break
        eb_k = float(np.mean((gb @ w - yb) ** 2))
        eb[k] = eb_k
        if eb_prev - eb_k < delta:
            status = STOP_CONVERGED
            break
        eb_prev = eb_k
    n_logged = steps if status != STOP_DIVERGED else steps - 1
    return w, eb[:n_logged].copy(), steps, status


def threshold_errors(sorted_values, cum_ones, qs):
    """Misclassification count for each candidate threshold.

    sorted_values is ascending; cum_ones[i] counts label-1 examples among
    the first i sorted values.  A threshold q sends values < q left and
    values >= q right; each side is scored by its minority-class count.
    """
    n = sorted_values.shape[0]
    n1 = int(cum_ones[n])
    n0 = n - n1
    left = np.searchsorted(sorted_values, qs, side="left")
    ones_left = cum_ones[left]
    zeros_left = left - ones_left
    err_left = np.minimum(ones_left, zeros_left)
    err_right = np.minimum(n1 - ones_left, n0 - zeros_left)
    return (err_left + err_right).astype(np.int64)
