"""Directed stochastic block model datasets for tests and demos."""

from __future__ import annotations

import numpy as np

from dgcn.errors import DomainError
from dgcn.graph import DirectedGraph, LabelVector, SparseMatrix


def directed_sbm(n_per_class: int, classes: int, p_in: float, p_out: float, feat_dim: int = 16,
                 noise: float = 1.0, seed: int = 0) -> tuple[DirectedGraph, np.ndarray, LabelVector]:
    """Sample every ordered pair (i, j), i != j, independently: ``p_in`` within a class,
    ``p_out`` across classes.

    Feature dimension d carries signal for class ``d % classes``: a node gets 1.0 on its
    class's dimensions plus ``noise * U(0, 1)`` everywhere. Dense n x n sampling; meant
    for fixtures of a few thousand nodes at most.
    """
    for name, v in (("p_in", p_in), ("p_out", p_out)):
        if not 0.0 <= v <= 1.0:
            raise DomainError(f"{name}={v} is not a probability")
    if n_per_class <= 0 or classes <= 0 or feat_dim <= 0:
        raise DomainError("n_per_class, classes and feat_dim must be positive")
    if noise < 0:
        raise DomainError("noise must be nonnegative")
    rng = np.random.default_rng(seed)
    n = n_per_class * classes
    labels = np.repeat(np.arange(classes), n_per_class)
    same = labels[:, None] == labels[None, :]
    prob = np.where(same, p_in, p_out)
    adj = rng.random((n, n)) < prob
    np.fill_diagonal(adj, False)
    rows, cols = np.nonzero(adj)
    g = DirectedGraph(n, SparseMatrix.from_coo(n, n, rows, cols, np.ones(rows.size)))

    signal = (np.arange(feat_dim)[None, :] % classes) == labels[:, None]
    x = signal.astype(np.float64) + noise * rng.random((n, feat_dim))
    return g, x, LabelVector(labels, classes)
