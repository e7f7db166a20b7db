"""Feature- and label-smoothness diagnostics over first- and second-order edge sets."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
import scipy.sparse as sp

from dgcn.errors import DomainError, ShapeError
from dgcn.graph import UNLABELED, DirectedGraph, LabelVector


@dataclass(frozen=True, eq=False)
class EdgeSetPrime:
    """Ordered node pairs (i, j), i != j, sorted lexicographically and unique."""

    n_nodes: int
    pairs: np.ndarray  # (m, 2) int64

    @property
    def count(self) -> int:
        return int(self.pairs.shape[0])

    def as_set(self) -> set[tuple[int, int]]:
        return {(int(i), int(j)) for i, j in self.pairs}


def _pattern(m) -> sp.csr_matrix:
    m = sp.csr_matrix(m, copy=True)
    m.eliminate_zeros()
    m.data[:] = 1.0
    return m


def _to_edge_set(n: int, m) -> EdgeSetPrime:
    m = sp.coo_matrix(m)
    keep = (m.row != m.col) & (m.data != 0)
    pairs = np.stack([m.row[keep], m.col[keep]], axis=1).astype(np.int64)
    order = np.lexsort((pairs[:, 1], pairs[:, 0]))
    return EdgeSetPrime(n, pairs[order])


def first_order_edge_set(g: DirectedGraph) -> EdgeSetPrime:
    """Directed edges of the original graph, self-loops dropped."""
    return _to_edge_set(g.n_nodes, _pattern(g.adjacency.to_scipy()))


def build_edge_set_prime(g: DirectedGraph) -> EdgeSetPrime:
    """First-order edges plus both orientations of every shared-neighbor pair.

    A shared predecessor k (k->i, k->j) or shared successor k (i->k, j->k) makes
    (i, j) a second-order edge. Self-loops in the input count as edges of E.
    """
    a = _pattern(g.adjacency.to_scipy())
    shared_pred = a.T @ a
    shared_succ = a @ a.T
    union = _pattern(a + shared_pred + shared_succ)
    return _to_edge_set(g.n_nodes, union)


def normalize_features(x: np.ndarray) -> np.ndarray:
    """Min-max scale each column into [0, 1]; constant columns become 0."""
    x = np.asarray(x, dtype=np.float64)
    lo = x.min(axis=0, initial=np.inf) if x.shape[0] else np.zeros(x.shape[1])
    hi = x.max(axis=0, initial=-np.inf) if x.shape[0] else np.zeros(x.shape[1])
    span = hi - lo
    out = np.zeros_like(x)
    ok = span > 0
    out[:, ok] = (x[:, ok] - lo[ok]) / span[ok]
    return out


def feature_smoothness(x: np.ndarray, ep: EdgeSetPrime) -> float:
    """Manhattan norm of the summed squared feature differences, over |E'| * d."""
    x = np.asarray(x, dtype=np.float64)
    if x.shape[0] != ep.n_nodes:
        raise ShapeError(f"features have {x.shape[0]} rows, edge set covers {ep.n_nodes} nodes")
    if ep.count == 0:
        raise DomainError("feature smoothness is undefined on an empty edge set")
    d = x.shape[1]
    if d == 0:
        raise DomainError("feature smoothness is undefined for zero-dimensional features")
    diff = x[ep.pairs[:, 0]] - x[ep.pairs[:, 1]]
    per_dim = np.sum(diff * diff, axis=0)
    return float(np.sum(np.abs(per_dim)) / (ep.count * d))


def label_smoothness(y: LabelVector, ep: EdgeSetPrime) -> float:
    """Fraction of pairs whose endpoints carry the same label."""
    if y.n_nodes != ep.n_nodes:
        raise ShapeError(f"labels cover {y.n_nodes} nodes, edge set covers {ep.n_nodes}")
    if ep.count == 0:
        raise DomainError("label smoothness is undefined on an empty edge set")
    li = y.labels[ep.pairs[:, 0]]
    lj = y.labels[ep.pairs[:, 1]]
    missing = np.unique(np.concatenate([ep.pairs[li == UNLABELED, 0], ep.pairs[lj == UNLABELED, 1]]))
    if missing.size:
        raise DomainError(
            f"{missing.size} node(s) in the edge set are unlabeled, e.g. {missing[:10].tolist()}"
        )
    return float(np.count_nonzero(li == lj) / ep.count)


def smoothness_table(g: DirectedGraph, x: np.ndarray, y: LabelVector) -> dict[str, float]:
    """The four diagnostics: lambda_f and lambda_l on first-order and on combined edge sets."""
    xn = normalize_features(x)
    e1 = first_order_edge_set(g)
    e12 = build_edge_set_prime(g)
    return {
        "lambda_f/1st": feature_smoothness(xn, e1),
        "lambda_f/1st&2nd": feature_smoothness(xn, e12),
        "lambda_l/1st": label_smoothness(y, e1),
        "lambda_l/1st&2nd": label_smoothness(y, e12),
    }
