"""Directed weighted graphs, the text file formats, and the sparse/dense matrix substrate.

Dense matrices are plain float64 ``numpy.ndarray`` objects. Sparse matrices are
immutable CSR triples kept in canonical form (sorted column indices, no duplicates,
no explicit zeros).
"""

from __future__ import annotations

from dataclasses import dataclass
from pathlib import Path
from typing import Iterator, Optional, Sequence

import numpy as np
import scipy.sparse as sp

from dgcn.errors import BoundsError, DomainError, ParseError, ShapeError

UNLABELED = -1


def _frozen(a, dtype) -> np.ndarray:
    a = np.array(a, dtype=dtype, copy=True)
    a.setflags(write=False)
    return a


@dataclass(frozen=True, eq=False)
class SparseMatrix:
    """Canonical CSR matrix with nonnegative values.

    Build through :meth:`from_coo`, :meth:`from_dense` or :meth:`from_scipy`; the raw
    constructor only validates.
    """

    n_rows: int
    n_cols: int
    row_offsets: np.ndarray
    col_indices: np.ndarray
    values: np.ndarray

    def __post_init__(self):
        ro = _frozen(self.row_offsets, np.int64)
        ci = _frozen(self.col_indices, np.int64)
        va = _frozen(self.values, np.float64)
        object.__setattr__(self, "row_offsets", ro)
        object.__setattr__(self, "col_indices", ci)
        object.__setattr__(self, "values", va)
        if ro.shape != (self.n_rows + 1,) or ro[0] != 0 or np.any(np.diff(ro) < 0):
            raise ShapeError("row_offsets must be a nondecreasing array of length n_rows+1 starting at 0")
        if ro[-1] != ci.size or ci.size != va.size:
            raise ShapeError("row_offsets, col_indices and values disagree on nnz")
        if ci.size and (ci.min() < 0 or ci.max() >= self.n_cols):
            raise BoundsError("column index out of range")
        if not np.all(np.isfinite(va)):
            raise DomainError("sparse values must be finite")
        if np.any(va < 0):
            raise DomainError("sparse values must be nonnegative")
        # strictly increasing columns within each row
        if ci.size > 1:
            rid = self.row_ids()
            same_row = rid[1:] == rid[:-1]
            if np.any(same_row & (np.diff(ci) <= 0)):
                raise ShapeError("column indices must be strictly increasing within each row")

    # construction -------------------------------------------------------------

    @classmethod
    def from_coo(cls, n_rows: int, n_cols: int, rows, cols, vals) -> "SparseMatrix":
        """Canonicalize triplets: duplicates are summed and zeros dropped."""
        rows = np.asarray(rows, dtype=np.int64)
        cols = np.asarray(cols, dtype=np.int64)
        vals = np.asarray(vals, dtype=np.float64)
        if rows.size and (rows.min() < 0 or rows.max() >= n_rows or cols.min() < 0 or cols.max() >= n_cols):
            raise BoundsError(f"triplet index outside {n_rows}x{n_cols}")
        if np.any(vals < 0):
            raise DomainError("sparse values must be nonnegative")
        m = sp.coo_matrix((vals, (rows, cols)), shape=(n_rows, n_cols))
        return cls.from_scipy(m)

    @classmethod
    def from_scipy(cls, m) -> "SparseMatrix":
        m = sp.csr_matrix(m, dtype=np.float64, copy=True)
        m.sum_duplicates()
        m.eliminate_zeros()
        m.sort_indices()
        n_rows, n_cols = m.shape
        return cls(n_rows, n_cols, m.indptr, m.indices, m.data)

    @classmethod
    def from_dense(cls, a) -> "SparseMatrix":
        a = np.asarray(a, dtype=np.float64)
        if a.ndim != 2:
            raise ShapeError("expected a 2-d array")
        return cls.from_scipy(sp.csr_matrix(a))

    @classmethod
    def identity(cls, n: int) -> "SparseMatrix":
        return cls(n, n, np.arange(n + 1), np.arange(n), np.ones(n))

    @classmethod
    def zeros(cls, n_rows: int, n_cols: int) -> "SparseMatrix":
        return cls(n_rows, n_cols, np.zeros(n_rows + 1), np.zeros(0), np.zeros(0))

    # views --------------------------------------------------------------------

    @property
    def shape(self) -> tuple[int, int]:
        return (self.n_rows, self.n_cols)

    @property
    def nnz(self) -> int:
        return int(self.values.size)

    def to_scipy(self) -> sp.csr_matrix:
        return sp.csr_matrix((self.values, self.col_indices, self.row_offsets), shape=self.shape)

    def to_dense(self) -> np.ndarray:
        return self.to_scipy().toarray()

    def transpose(self) -> "SparseMatrix":
        return SparseMatrix.from_scipy(self.to_scipy().T)

    @property
    def T(self) -> "SparseMatrix":
        return self.transpose()

    def row_ids(self) -> np.ndarray:
        """Row index of every stored entry."""
        return np.repeat(np.arange(self.n_rows), np.diff(self.row_offsets))

    def row_sums(self) -> np.ndarray:
        return np.bincount(self.row_ids(), weights=self.values, minlength=self.n_rows).astype(np.float64)

    def col_sums(self) -> np.ndarray:
        return np.bincount(self.col_indices, weights=self.values, minlength=self.n_cols).astype(np.float64)

    def diagonal(self) -> np.ndarray:
        return self.to_scipy().diagonal()

    def triplets(self) -> Iterator[tuple[int, int, float]]:
        """Yield (row, col, value) in row-major, ascending-column order."""
        for i in range(self.n_rows):
            for k in range(self.row_offsets[i], self.row_offsets[i + 1]):
                yield i, int(self.col_indices[k]), float(self.values[k])

    def canonicalize(self) -> "SparseMatrix":
        return SparseMatrix.from_scipy(self.to_scipy())

    def prune(self, eps: float) -> "SparseMatrix":
        """Drop stored entries strictly below ``eps``."""
        m = self.to_scipy().copy()
        m.data[m.data < eps] = 0.0
        return SparseMatrix.from_scipy(m)

    def max_asymmetry(self) -> float:
        """Largest |M - M^T| entry relative to the largest |M| entry."""
        if self.n_rows != self.n_cols:
            raise ShapeError("asymmetry is only defined for square matrices")
        if self.nnz == 0:
            return 0.0
        m = self.to_scipy()
        diff = abs(m - m.T)
        return float(diff.max()) / float(self.values.max())

    def __eq__(self, other):
        if not isinstance(other, SparseMatrix):
            return NotImplemented
        return (
            self.shape == other.shape
            and np.array_equal(self.row_offsets, other.row_offsets)
            and np.array_equal(self.col_indices, other.col_indices)
            and np.array_equal(self.values, other.values)
        )

    __hash__ = None


@dataclass(frozen=True, eq=False)
class DirectedGraph:
    n_nodes: int
    adjacency: SparseMatrix
    node_ids: Optional[tuple[str, ...]] = None

    def __post_init__(self):
        if self.adjacency.shape != (self.n_nodes, self.n_nodes):
            raise ShapeError("adjacency must be n_nodes x n_nodes")
        if self.node_ids is not None and len(self.node_ids) != self.n_nodes:
            raise ShapeError("node_ids must name every node")

    @classmethod
    def from_edges(cls, n_nodes: int, edges: Sequence, weights=None) -> "DirectedGraph":
        edges = np.asarray(edges, dtype=np.int64).reshape(-1, 2)
        if weights is None:
            weights = np.ones(len(edges))
        return cls(n_nodes, SparseMatrix.from_coo(n_nodes, n_nodes, edges[:, 0], edges[:, 1], weights))

    @property
    def n_edges(self) -> int:
        return self.adjacency.nnz


@dataclass(frozen=True, eq=False)
class LabelVector:
    labels: np.ndarray
    n_classes: int

    def __post_init__(self):
        lab = _frozen(self.labels, np.int64)
        object.__setattr__(self, "labels", lab)
        if np.any((lab != UNLABELED) & ((lab < 0) | (lab >= self.n_classes))):
            raise BoundsError(f"labels must lie in [0, {self.n_classes}) or be unlabeled")

    @property
    def n_nodes(self) -> int:
        return int(self.labels.size)

    def labeled_nodes(self) -> np.ndarray:
        return np.flatnonzero(self.labels != UNLABELED)

    def class_nodes(self, c: int) -> np.ndarray:
        return np.flatnonzero(self.labels == c)


# arithmetic -----------------------------------------------------------------


def add_self_loops(g: DirectedGraph | SparseMatrix) -> SparseMatrix:
    """Return A + I. Pre-existing self-loop weight w becomes w + 1."""
    a = g.adjacency if isinstance(g, DirectedGraph) else g
    if a.n_rows != a.n_cols:
        raise ShapeError("self-loops need a square matrix")
    return SparseMatrix.from_scipy(a.to_scipy() + sp.identity(a.n_rows, format="csr"))


def spmm(s: SparseMatrix, d: np.ndarray) -> np.ndarray:
    """Sparse-dense product. Each output row accumulates its stored entries in
    ascending column order, so the result does not depend on threading."""
    d = np.asarray(d, dtype=np.float64)
    if d.ndim != 2 or s.n_cols != d.shape[0]:
        raise ShapeError(f"cannot multiply {s.shape} sparse by {d.shape} dense")
    return np.asarray(s.to_scipy() @ d)


# file formats ---------------------------------------------------------------


def _parse_header(line: str, path, required: Sequence[str]) -> dict[str, int]:
    if not line.startswith("#"):
        raise ParseError(f"expected header line '# {'='.join([required[0], 'N'])} ...'", path, 1)
    out = {}
    for tok in line[1:].split():
        if "=" in tok:
            k, v = tok.split("=", 1)
            out[k] = v
    try:
        parsed = {k: int(out[k]) for k in required}
    except (KeyError, ValueError):
        raise ParseError(f"header must declare {', '.join(k + '=<int>' for k in required)}", path, 1) from None
    if any(v < 0 for v in parsed.values()):
        raise ParseError("header counts must be nonnegative", path, 1)
    return parsed


def _body(path) -> Iterator[tuple[int, list[str]]]:
    with open(path, encoding="utf-8") as fh:
        for lineno, raw in enumerate(fh, start=1):
            line = raw.rstrip("\r\n")
            if lineno == 1 or not line.strip() or line.startswith("#"):
                continue
            yield lineno, line.split("\t")


def _first_line(path) -> str:
    with open(path, encoding="utf-8") as fh:
        return fh.readline().rstrip("\r\n")


def _node(tok: str, n: int, path, lineno) -> int:
    try:
        v = int(tok)
    except ValueError:
        raise ParseError(f"bad node id {tok!r}", path, lineno) from None
    if v < 0 or v >= n:
        raise BoundsError(f"{path}:{lineno}: node id {v} outside [0, {n})")
    return v


def _real(tok: str, path, lineno) -> float:
    try:
        v = float(tok)
    except ValueError:
        raise ParseError(f"bad number {tok!r}", path, lineno) from None
    if not np.isfinite(v):
        raise DomainError(f"{path}:{lineno}: non-finite value {tok!r}")
    return v


def load_graph(path, vocab_path=None) -> DirectedGraph:
    """Read ``# nodes=N`` followed by ``src<TAB>dst[<TAB>weight]`` lines."""
    n = _parse_header(_first_line(path), path, ["nodes"])["nodes"]
    rows, cols, vals = [], [], []
    for lineno, parts in _body(path):
        if len(parts) not in (2, 3):
            raise ParseError(f"expected 2 or 3 tab-separated fields, got {len(parts)}", path, lineno)
        i = _node(parts[0], n, path, lineno)
        j = _node(parts[1], n, path, lineno)
        w = _real(parts[2], path, lineno) if len(parts) == 3 else 1.0
        if w < 0:
            raise DomainError(f"{path}:{lineno}: negative edge weight {w}")
        rows.append(i)
        cols.append(j)
        vals.append(w)
    ids = load_vocabulary(vocab_path, n) if vocab_path is not None else None
    return DirectedGraph(n, SparseMatrix.from_coo(n, n, rows, cols, vals), ids)


def format_graph(a: DirectedGraph | SparseMatrix, header_extra: Sequence[str] = ()) -> str:
    m = a.adjacency if isinstance(a, DirectedGraph) else a
    lines = [f"# nodes={m.n_rows}"]
    lines += [f"# {h}" for h in header_extra]
    lines += [f"{i}\t{j}\t{w!r}" for i, j, w in m.triplets()]
    return "\n".join(lines) + "\n"


def save_graph(a: DirectedGraph | SparseMatrix, path, header_extra: Sequence[str] = ()) -> None:
    Path(path).write_text(format_graph(a, header_extra), encoding="utf-8")


def load_vocabulary(path, n_nodes: int) -> tuple[str, ...]:
    """Sidecar mapping ``index<TAB>external_id``; every index must appear once."""
    ids: list[Optional[str]] = [None] * n_nodes
    with open(path, encoding="utf-8") as fh:
        for lineno, raw in enumerate(fh, start=1):
            line = raw.rstrip("\r\n")
            if not line or line.startswith("#"):
                continue
            parts = line.split("\t")
            if len(parts) != 2:
                raise ParseError("expected index<TAB>id", path, lineno)
            i = _node(parts[0], n_nodes, path, lineno)
            if ids[i] is not None:
                raise ParseError(f"duplicate index {i}", path, lineno)
            ids[i] = parts[1]
    missing = [i for i, v in enumerate(ids) if v is None]
    if missing:
        raise ParseError(f"vocabulary misses nodes {missing[:10]}", path)
    return tuple(ids)


def load_features(path, n_nodes: int) -> np.ndarray:
    """Read ``# nodes=N dims=C`` then ``node<TAB>dim<TAB>value`` triplets into a dense N x C array."""
    hdr = _parse_header(_first_line(path), path, ["nodes", "dims"])
    if hdr["nodes"] != n_nodes:
        raise BoundsError(f"{path}: header declares {hdr['nodes']} nodes, graph has {n_nodes}")
    c = hdr["dims"]
    x = np.zeros((n_nodes, c))
    seen = set()
    for lineno, parts in _body(path):
        if len(parts) != 3:
            raise ParseError(f"expected 3 tab-separated fields, got {len(parts)}", path, lineno)
        i = _node(parts[0], n_nodes, path, lineno)
        try:
            d = int(parts[1])
        except ValueError:
            raise ParseError(f"bad dimension index {parts[1]!r}", path, lineno) from None
        if d < 0 or d >= c:
            raise BoundsError(f"{path}:{lineno}: dimension {d} outside [0, {c})")
        if (i, d) in seen:
            raise ParseError(f"duplicate entry for node {i} dim {d}", path, lineno)
        seen.add((i, d))
        x[i, d] = _real(parts[2], path, lineno)
    return x


def save_features(x: np.ndarray, path, header_extra: Sequence[str] = ()) -> None:
    x = np.asarray(x, dtype=np.float64)
    lines = [f"# nodes={x.shape[0]} dims={x.shape[1]}"]
    lines += [f"# {h}" for h in header_extra]
    for i, d in zip(*np.nonzero(x)):
        lines.append(f"{i}\t{d}\t{float(x[i, d])!r}")
    Path(path).write_text("\n".join(lines) + "\n", encoding="utf-8")


def load_labels(path, n_nodes: int) -> LabelVector:
    """Read ``node<TAB>class_id`` lines; absent nodes are unlabeled."""
    labels = np.full(n_nodes, UNLABELED, dtype=np.int64)
    with open(path, encoding="utf-8") as fh:
        for lineno, raw in enumerate(fh, start=1):
            line = raw.rstrip("\r\n")
            if not line.strip() or line.startswith("#"):
                continue
            parts = line.split("\t")
            if len(parts) != 2:
                raise ParseError(f"expected node<TAB>class_id, got {len(parts)} fields", path, lineno)
            i = _node(parts[0], n_nodes, path, lineno)
            try:
                c = int(parts[1])
            except ValueError:
                raise ParseError(f"bad class id {parts[1]!r}", path, lineno) from None
            if c < 0:
                raise DomainError(f"{path}:{lineno}: negative class id")
            if labels[i] != UNLABELED:
                raise ParseError(f"duplicate label line for node {i}", path, lineno)
            labels[i] = c
    n_classes = int(labels.max()) + 1 if np.any(labels != UNLABELED) else 0
    return LabelVector(labels, n_classes)


def save_labels(y: LabelVector, path, header_extra: Sequence[str] = ()) -> None:
    lines = [f"# {h}" for h in header_extra]
    lines += [f"{i}\t{int(y.labels[i])}" for i in y.labeled_nodes()]
    Path(path).write_text("\n".join(lines) + "\n", encoding="utf-8")


def format_dense(a: np.ndarray, header_extra: Sequence[str] = ()) -> str:
    a = np.asarray(a, dtype=np.float64)
    lines = [f"# rows={a.shape[0]} cols={a.shape[1]}"]
    lines += [f"# {h}" for h in header_extra]
    lines += ["\t".join(f"{v:.17g}" for v in row) for row in a]
    return "\n".join(lines) + "\n"


def save_dense(a: np.ndarray, path, header_extra: Sequence[str] = ()) -> None:
    Path(path).write_text(format_dense(a, header_extra), encoding="utf-8")


def parse_dense_block(lines: Sequence[str], rows: int, cols: int, path=None, first_lineno=1) -> np.ndarray:
    out = np.zeros((rows, cols))
    if len(lines) != rows:
        raise ParseError(f"expected {rows} rows, found {len(lines)}", path)
    for r, line in enumerate(lines):
        parts = line.split("\t") if line else []
        if len(parts) != cols:
            raise ParseError(f"expected {cols} columns, got {len(parts)}", path, first_lineno + r)
        out[r] = [_real(t, path, first_lineno + r) for t in parts]
    return out


def load_dense(path) -> np.ndarray:
    hdr = _parse_header(_first_line(path), path, ["rows", "cols"])
    with open(path, encoding="utf-8") as fh:
        body = [ln.rstrip("\r\n") for ln in fh.readlines()[1:]]
    body = [ln for ln in body if not ln.startswith("#")]
    while body and body[-1] == "":
        body.pop()
    return parse_dense_block(body, hdr["rows"], hdr["cols"], path, 2)
