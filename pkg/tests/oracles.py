"""Independent reference computations. Nothing here calls the code paths it checks."""

import numpy as np


def triple_loop_second_order(a: np.ndarray):
    """Direct evaluation of both shared-neighbor sums over a dense matrix."""
    n = a.shape[0]
    row = a.sum(axis=1)
    col = a.sum(axis=0)
    s_in = np.zeros((n, n))
    s_out = np.zeros((n, n))
    for i in range(n):
        for j in range(n):
            acc_in = 0.0
            acc_out = 0.0
            for k in range(n):
                if a[k, i] > 0 and a[k, j] > 0:
                    acc_in += a[k, i] * a[k, j] / row[k]
                if a[i, k] > 0 and a[j, k] > 0:
                    acc_out += a[i, k] * a[j, k] / col[k]
            s_in[i, j] = acc_in
            s_out[i, j] = acc_out
    return s_in, s_out


def dense_renormalize(m: np.ndarray) -> np.ndarray:
    d = m.sum(axis=1)
    return m / np.sqrt(np.outer(d, d))


def random_digraph(rng, n, density, wmax=5.0):
    """Dense weight matrix with ~density nonzeros, weights in (0, wmax]."""
    mask = rng.random((n, n)) < density
    w = wmax * (1.0 - rng.random((n, n)))  # (0, wmax]
    return np.where(mask, w, 0.0)


def central_differences(f, params, h=1e-6):
    """Gradient of scalar f(params) by central differences, perturbing one entry at a time."""
    grads = []
    for k, p in enumerate(params):
        g = np.zeros_like(p)
        for idx in np.ndindex(p.shape):
            old = p[idx]
            p[idx] = old + h
            fp = f(params)
            p[idx] = old - h
            fm = f(params)
            p[idx] = old
            g[idx] = (fp - fm) / (2 * h)
        grads.append(g)
    return grads


def rel_error(analytic: np.ndarray, numeric: np.ndarray) -> float:
    """Max-norm relative error of one parameter matrix."""
    scale = max(np.abs(analytic).max(), np.abs(numeric).max())
    if scale == 0:
        return 0.0
    return float(np.abs(analytic - numeric).max() / scale)


def entrywise_rel_error(analytic, numeric, floor=1e-8):
    return float(np.max(np.abs(analytic - numeric) / np.maximum(np.maximum(np.abs(analytic), np.abs(numeric)), floor)))
