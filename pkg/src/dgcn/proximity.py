"""First- and second-order proximity operators of a directed graph.

All three proximities are computed from the self-looped adjacency A + I and then
symmetrically renormalized, D^{-1/2} M D^{-1/2} with D the row sums of M.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
import scipy.sparse as sp

from dgcn.errors import DomainError, InvariantError, ShapeError
from dgcn.graph import DirectedGraph, SparseMatrix, add_self_loops


@dataclass(frozen=True, eq=False)
class ProximitySet:
    a_f_hat: SparseMatrix
    a_sin_hat: SparseMatrix
    a_sout_hat: SparseMatrix
    raw_f: SparseMatrix
    raw_sin: SparseMatrix
    raw_sout: SparseMatrix

    @property
    def n_nodes(self) -> int:
        return self.a_f_hat.n_rows

    @property
    def normalized(self) -> tuple[SparseMatrix, SparseMatrix, SparseMatrix]:
        return (self.a_f_hat, self.a_sin_hat, self.a_sout_hat)

    @property
    def raw(self) -> tuple[SparseMatrix, SparseMatrix, SparseMatrix]:
        return (self.raw_f, self.raw_sin, self.raw_sout)

    def named(self) -> dict[str, SparseMatrix]:
        return {
            "a_f": self.a_f_hat,
            "a_sin": self.a_sin_hat,
            "a_sout": self.a_sout_hat,
            "a_f_raw": self.raw_f,
            "a_sin_raw": self.raw_sin,
            "a_sout_raw": self.raw_sout,
        }

    @classmethod
    def identity(cls, n: int) -> "ProximitySet":
        i = SparseMatrix.identity(n)
        return cls(i, i, i, i, i, i)


def _square(m: SparseMatrix) -> None:
    if m.n_rows != m.n_cols:
        raise ShapeError(f"expected a square matrix, got {m.shape}")


def first_order(a_tilde: SparseMatrix) -> SparseMatrix:
    """Symmetrize by averaging both directions: (A + A^T) / 2."""
    _square(a_tilde)
    m = a_tilde.to_scipy()
    return SparseMatrix.from_scipy((m + m.T) * 0.5)


def _shared_neighbor_product(a: sp.csr_matrix, weights: np.ndarray) -> SparseMatrix:
    # B = diag(w)^{-1/2} A, result B^T B: entry (i,j) = sum_k A_ki A_kj / w_k.
    # Rows with w_k = 0 hold no entries (nonnegativity), so scaling them by 0 is exact.
    if np.any((weights <= 0) & (np.diff(a.indptr) > 0)):
        raise InvariantError("row with stored entries has nonpositive weight sum")
    scale = np.zeros_like(weights)
    pos = weights > 0
    scale[pos] = 1.0 / np.sqrt(weights[pos])
    b = sp.diags(scale) @ a
    return SparseMatrix.from_scipy(b.T @ b)


def second_order_in(a_tilde: SparseMatrix) -> SparseMatrix:
    """Shared-predecessor proximity: sum_k A[k,i] A[k,j] / sum_v A[k,v]."""
    _square(a_tilde)
    return _shared_neighbor_product(a_tilde.to_scipy(), a_tilde.row_sums())


def second_order_out(a_tilde: SparseMatrix) -> SparseMatrix:
    """Shared-successor proximity: sum_k A[i,k] A[j,k] / sum_v A[v,k]."""
    _square(a_tilde)
    at = a_tilde.to_scipy().T.tocsr()
    return _shared_neighbor_product(at, a_tilde.col_sums())


def sym_normalize(m: SparseMatrix) -> SparseMatrix:
    _square(m)
    d = m.row_sums()
    zero = np.flatnonzero(d <= 0)
    if zero.size:
        raise DomainError(f"isolated node(s) with zero proximity row sum: {zero[:10].tolist()}")
    s = sp.diags(1.0 / np.sqrt(d))
    return SparseMatrix.from_scipy(s @ m.to_scipy() @ s)


def build_proximity_set(g: DirectedGraph | SparseMatrix, prox_eps: float = 0.0) -> ProximitySet:
    """Self-loops, the three raw proximities, then renormalization.

    ``prox_eps > 0`` drops normalized entries below it; the raw matrices are kept whole.
    """
    a_tilde = add_self_loops(g)
    raw = (first_order(a_tilde), second_order_in(a_tilde), second_order_out(a_tilde))
    norm = [sym_normalize(r) for r in raw]
    if prox_eps > 0:
        norm = [m.prune(prox_eps) for m in norm]
    return ProximitySet(*norm, *raw)
