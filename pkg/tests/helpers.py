"""Shared test oracles, kept independent of the library code paths they check."""

import numpy as np


def finite_difference_grads(f, arrays, h=1e-3):
    """Central finite differences of the scalar ``f()`` w.r.t. each array.

    ``f`` must close over the arrays; they are perturbed in place and
    restored. Returns float64 gradients with the arrays' shapes.
    """
    grads = []
    for a in arrays:
        flat = a.reshape(-1)
        g = np.zeros(flat.size, dtype=np.float64)
        for i in range(flat.size):
            orig = flat[i]
            flat[i] = orig + h
            fp = f()
            flat[i] = orig - h
            fm = f()
            flat[i] = orig
            g[i] = (fp - fm) / (2.0 * h)
        grads.append(g.reshape(a.shape))
    return grads


def relative_error(g_ad, g_fd):
    """max-norm relative error, the acceptance metric for gradient checks."""
    g_ad = np.asarray(g_ad, dtype=np.float64)
    g_fd = np.asarray(g_fd, dtype=np.float64)
    return np.abs(g_ad - g_fd).max() / (np.abs(g_fd).max() + 1e-8)


def power_iteration_stationary(transition, iters=200):
    """Stationary distribution of a row-stochastic matrix by power iteration."""
    v = np.full(transition.shape[0], 1.0 / transition.shape[0])
    for _ in range(iters):
        v = v @ transition
        v = v / v.sum()
    return v
