"""Backend equivalence: compiled kernels against the NumPy fallback."""

import numpy as np
import pytest

from pnndt import _kernels_py
from pnndt._backend import HAVE_SPEEDUPS

if HAVE_SPEEDUPS:
    from pnndt import _speedups
else:  # pragma: no cover - build-dependent
    _speedups = None

needs_ext = pytest.mark.skipif(not HAVE_SPEEDUPS,
                               reason="compiled extension not built")


def fit_problem(seed, na=80, nb=60):
    rng = np.random.default_rng(seed)
    ga = np.ascontiguousarray(rng.standard_normal((na, 4)))
    gb = np.ascontiguousarray(rng.standard_normal((nb, 4)))
    w_true = rng.standard_normal(4)
    ya = ga @ w_true + 0.05 * rng.standard_normal(na)
    yb = gb @ w_true + 0.05 * rng.standard_normal(nb)
    w0 = rng.standard_normal(4)
    return ga, ya, gb, yb, w0


def threshold_problem(seed, n=200, lam=500):
    rng = np.random.default_rng(seed)
    values = rng.standard_normal(n)
    labels = (rng.random(n) < 0.4).astype(np.int64)
    order = np.argsort(values, kind="stable")
    sorted_values = np.ascontiguousarray(values[order])
    cum_ones = np.zeros(n + 1, dtype=np.int64)
    np.cumsum(labels[order], out=cum_ones[1:])
    qs = np.ascontiguousarray(rng.uniform(values.min(), values.max(), lam))
    return values, labels, sorted_values, cum_ones, qs


@needs_ext
@pytest.mark.parametrize("seed", range(10))
def test_fit_kernel_parity(seed):
    args = fit_problem(seed)
    w1, eb1, s1, st1 = _kernels_py.fit_weights_kernel(*args, 1.9, 1e-3, 300)
    w2, eb2, s2, st2 = _speedups.fit_weights_kernel(*args, 1.9, 1e-3, 300)
    assert (s1, st1) == (s2, st2)
    assert np.allclose(w1, w2, rtol=0, atol=1e-10)
    assert np.allclose(eb1, eb2, rtol=0, atol=1e-10)


@needs_ext
def test_fit_kernel_zero_norm_status(seed=0):
    z = np.zeros((8, 4))
    y = np.zeros(8)
    w0 = np.ones(4)
    for mod in (_kernels_py, _speedups):
        _, _, steps, status = mod.fit_weights_kernel(z, y, z, y, w0, 1.9, 1e-3, 10)
        assert steps == 0 and status == mod.STOP_ZERO_NORM


@needs_ext
@pytest.mark.parametrize("seed", range(10))
def test_threshold_kernel_parity(seed):
    _, _, sorted_values, cum_ones, qs = threshold_problem(seed)
    e1 = _kernels_py.threshold_errors(sorted_values, cum_ones, qs)
    e2 = _speedups.threshold_errors(sorted_values, cum_ones, qs)
    assert np.array_equal(e1, e2)


@pytest.mark.parametrize("seed", range(5))
def test_threshold_kernel_against_brute_force(seed):
    from pnndt._backend import kernels

    values, labels, sorted_values, cum_ones, qs = threshold_problem(
        seed, n=60, lam=40
    )
    errors = kernels.threshold_errors(sorted_values, cum_ones, qs)
    for q, err in zip(qs, errors):
        left = labels[values < q]
        right = labels[values >= q]
        expected = min(left.sum(), len(left) - left.sum()) + min(
            right.sum(), len(right) - right.sum()
        )
        assert err == expected


def test_max_steps_status():
    from pnndt._backend import kernels

    args = fit_problem(3)
    _, eb, steps, status = kernels.fit_weights_kernel(*args, 1.9, 1e-300, 25)
    assert steps == 25
    assert status == kernels.STOP_MAX_STEPS
    assert len(eb) == 25
