"""The directed graph convolution network: forward pass, loss, exact gradients, Adam.

Each conv layer applies one shared weight matrix to three proximity branches,

    Z = [ReLU(A_f H W) | alpha ReLU(A_in H W) | beta ReLU(A_out H W)],

and a dense head maps the last concat to class logits. Gradients are derived by hand;
the graph of operations is small and fixed.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Optional, Sequence

import numpy as np

from dgcn.errors import DomainError, ParseError, ShapeError
from dgcn.graph import UNLABELED, LabelVector, parse_dense_block, spmm
from dgcn.proximity import ProximitySet

MODEL_KINDS = ("dgcn", "sgc")


def glorot_init(rows: int, cols: int, rng_seed) -> np.ndarray:
    """Uniform on [-sqrt(6/(rows+cols)), +sqrt(6/(rows+cols))].

    ``rng_seed`` may be an int seed or a ``numpy.random.Generator`` (consumed in place).
    """
    if rows <= 0 or cols <= 0:
        raise ShapeError("glorot_init needs positive dimensions")
    rng = np.random.default_rng(rng_seed)
    limit = np.sqrt(6.0 / (rows + cols))
    return rng.uniform(-limit, limit, size=(rows, cols))


@dataclass
class DgcnModel:
    conv_thetas: list[np.ndarray]
    head_theta: np.ndarray
    alpha: float = 1.0
    beta: float = 1.0
    kind: str = "dgcn"

    def __post_init__(self):
        if self.kind not in MODEL_KINDS:
            raise DomainError(f"unknown model kind {self.kind!r}")
        if self.alpha < 0 or self.beta < 0:
            raise DomainError("alpha and beta must be nonnegative")
        if self.kind == "sgc" and self.conv_thetas:
            raise ShapeError("the sgc head has no conv layers")
        if self.kind == "dgcn":
            if not self.conv_thetas:
                raise ShapeError("a dgcn model needs at least one conv layer")
            h = self.conv_thetas[0].shape[1]
            for th in self.conv_thetas[1:]:
                if th.shape != (3 * h, h):
                    raise ShapeError(f"deeper conv layers must be {3 * h}x{h}, got {th.shape}")
            if self.head_theta.shape[0] != 3 * h:
                raise ShapeError(f"head must have {3 * h} rows, got {self.head_theta.shape[0]}")

    @classmethod
    def init(cls, n_features: int, hidden: int, n_classes: int, layers: int = 1, seed=0,
             alpha: float = 1.0, beta: float = 1.0, kind: str = "dgcn") -> "DgcnModel":
        rng = np.random.default_rng(seed)
        if kind == "sgc":
            return cls([], glorot_init(3 * n_features, n_classes, rng), alpha, beta, kind)
        if layers < 1:
            raise ShapeError("need at least one conv layer")
        thetas = [glorot_init(n_features, hidden, rng)]
        thetas += [glorot_init(3 * hidden, hidden, rng) for _ in range(layers - 1)]
        return cls(thetas, glorot_init(3 * hidden, n_classes, rng), alpha, beta, kind)

    @property
    def dims(self) -> tuple[int, int, int, int]:
        """(C, H, F, L); for the sgc head H is 0 and C is a third of the head rows."""
        f = self.head_theta.shape[1]
        if self.kind == "sgc":
            return (self.head_theta.shape[0] // 3, 0, f, 0)
        return (self.conv_thetas[0].shape[0], self.conv_thetas[0].shape[1], f, len(self.conv_thetas))

    def params(self) -> list[np.ndarray]:
        return [*self.conv_thetas, self.head_theta]

    def with_params(self, params: Sequence[np.ndarray]) -> "DgcnModel":
        params = list(params)
        return DgcnModel(params[:-1], params[-1], self.alpha, self.beta, self.kind)

    def copy(self) -> "DgcnModel":
        return self.with_params([p.copy() for p in self.params()])

    @property
    def n_parameters(self) -> int:
        return sum(p.size for p in self.params())


@dataclass
class ConvTrace:
    h_in: np.ndarray  # layer input after dropout
    mask: Optional[np.ndarray]
    pre: list[np.ndarray]  # A_b H W for the three branches
    out: np.ndarray


@dataclass
class ForwardTrace:
    layers: list[ConvTrace] = field(default_factory=list)
    head_in: Optional[np.ndarray] = None
    head_mask: Optional[np.ndarray] = None
    logits: Optional[np.ndarray] = None
    probs: Optional[np.ndarray] = None


def relu(z: np.ndarray) -> np.ndarray:
    return np.maximum(z, 0.0)


def softmax(logits: np.ndarray) -> np.ndarray:
    z = logits - logits.max(axis=1, keepdims=True)
    e = np.exp(z)
    return e / e.sum(axis=1, keepdims=True)


def log_softmax(logits: np.ndarray) -> np.ndarray:
    z = logits - logits.max(axis=1, keepdims=True)
    return z - np.log(np.exp(z).sum(axis=1, keepdims=True))


def dropout_mask(shape, rate: float, rng: np.random.Generator) -> Optional[np.ndarray]:
    """Inverted dropout: kept units carry 1/(1-rate), so evaluation needs no rescale."""
    if rate <= 0:
        return None
    if rate >= 1:
        raise DomainError("dropout rate must be < 1")
    keep = rng.random(shape) >= rate
    return keep / (1.0 - rate)


def _branches(p: ProximitySet, alpha: float, beta: float):
    return ((p.a_f_hat, 1.0), (p.a_sin_hat, alpha), (p.a_sout_hat, beta))


def conv_layer_forward(p: ProximitySet, h: np.ndarray, theta: np.ndarray, alpha: float, beta: float,
                       dropout_mask: Optional[np.ndarray] = None) -> tuple[np.ndarray, ConvTrace]:
    """One directed convolution. The fusion weight is applied after ReLU, which equals
    ReLU of the scaled branch for nonnegative weights."""
    if alpha < 0 or beta < 0:
        raise DomainError("alpha and beta must be nonnegative")
    if h.shape[1] != theta.shape[0] or h.shape[0] != p.n_nodes:
        raise ShapeError(f"layer input {h.shape} does not fit weights {theta.shape} on {p.n_nodes} nodes")
    h_in = h * dropout_mask if dropout_mask is not None else h
    hw = h_in @ theta
    pre = []
    blocks = []
    for a, scale in _branches(p, alpha, beta):
        z = spmm(a, hw)
        pre.append(z)
        blocks.append(scale * relu(z))
    out = np.concatenate(blocks, axis=1)
    return out, ConvTrace(h_in, dropout_mask, pre, out)


def sgc_features(p: ProximitySet, x: np.ndarray, alpha: float, beta: float) -> np.ndarray:
    """[A_f X | alpha A_in X | beta A_out X]; no weights, no nonlinearity."""
    if x.shape[0] != p.n_nodes:
        raise ShapeError(f"features have {x.shape[0]} rows, graph has {p.n_nodes} nodes")
    return np.concatenate([s * spmm(a, x) for a, s in _branches(p, alpha, beta)], axis=1)


def sgc_dgcn_forward(p: ProximitySet, x: np.ndarray, theta: np.ndarray, alpha: float, beta: float) -> np.ndarray:
    feats = sgc_features(p, x, alpha, beta)
    if feats.shape[1] != theta.shape[0]:
        raise ShapeError(f"sgc weights must have {feats.shape[1]} rows, got {theta.shape[0]}")
    return softmax(feats @ theta)


def model_forward(p: ProximitySet, x: np.ndarray, m: DgcnModel, train_mode: bool = False,
                  rng: Optional[np.random.Generator] = None, dropout: float = 0.0,
                  sgc_input: Optional[np.ndarray] = None) -> tuple[np.ndarray, ForwardTrace]:
    """Full forward pass to row-stochastic predictions.

    In train mode, dropout is applied to the input of every conv layer and to the
    concat feeding the head. ``sgc_input`` lets callers reuse precomputed propagated
    features for the sgc head.
    """
    drop = train_mode and dropout > 0
    if drop and rng is None:
        raise ValueError("train-mode dropout needs an rng")
    tr = ForwardTrace()
    if m.kind == "sgc":
        h = sgc_input if sgc_input is not None else sgc_features(p, x, m.alpha, m.beta)
    else:
        h = x
        for theta in m.conv_thetas:
            mask = dropout_mask(h.shape, dropout, rng) if drop else None
            h, layer = conv_layer_forward(p, h, theta, m.alpha, m.beta, mask)
            tr.layers.append(layer)
        if drop:
            tr.head_mask = dropout_mask(h.shape, dropout, rng)
            h = h * tr.head_mask
    if h.shape[1] != m.head_theta.shape[0]:
        raise ShapeError(f"head expects {m.head_theta.shape[0]} inputs, got {h.shape[1]}")
    tr.head_in = h
    tr.logits = h @ m.head_theta
    tr.probs = softmax(tr.logits)
    return tr.probs, tr


def _check_mask(y: LabelVector, mask) -> np.ndarray:
    mask = np.asarray(mask, dtype=np.int64)
    bad = mask[y.labels[mask] == UNLABELED]
    if bad.size:
        raise DomainError(f"loss mask contains unlabeled nodes {bad[:10].tolist()}")
    return mask


def masked_cross_entropy(y_hat: np.ndarray, y: LabelVector, mask) -> float:
    """Summed negative log-likelihood of the true class over the masked nodes."""
    mask = _check_mask(y, mask)
    with np.errstate(divide="ignore"):
        return float(-np.sum(np.log(y_hat[mask, y.labels[mask]])))


def cross_entropy_from_logits(logits: np.ndarray, y: LabelVector, mask) -> float:
    """Same quantity as :func:`masked_cross_entropy`, via log-sum-exp."""
    mask = _check_mask(y, mask)
    return float(-np.sum(log_softmax(logits[mask])[np.arange(mask.size), y.labels[mask]]))


def l2_penalty(m: DgcnModel, l2_factor: float) -> float:
    return l2_factor * sum(float(np.sum(th * th)) for th in _regularized(m))


def _regularized(m: DgcnModel) -> list[np.ndarray]:
    # conv weights only; the sgc head is its own propagation weight, so it is regularized
    return [m.head_theta] if m.kind == "sgc" else list(m.conv_thetas)


def model_loss(trace: ForwardTrace, y: LabelVector, mask, m: DgcnModel, l2_factor: float = 0.0) -> float:
    return cross_entropy_from_logits(trace.logits, y, mask) + l2_penalty(m, l2_factor)


def model_backward(trace: ForwardTrace, y: LabelVector, mask, m: DgcnModel, p: ProximitySet,
                   l2_factor: float = 0.0) -> list[np.ndarray]:
    """Gradients of summed cross-entropy plus ``l2_factor * sum ||W||_F^2``, ordered as
    ``m.params()``. Dropout masks are replayed from the trace."""
    mask = _check_mask(y, mask)
    if m.kind == "dgcn" and len(trace.layers) != len(m.conv_thetas):
        raise ShapeError("trace depth does not match the model")
    n, f = trace.probs.shape
    d_logits = np.zeros((n, f))
    np.add.at(d_logits, mask, trace.probs[mask])
    np.add.at(d_logits, (mask, y.labels[mask]), -1.0)

    g_head = trace.head_in.T @ d_logits
    if m.kind == "sgc":
        return [g_head + 2.0 * l2_factor * m.head_theta]

    d_h = d_logits @ m.head_theta.T
    if trace.head_mask is not None:
        d_h = d_h * trace.head_mask
    scales = (1.0, m.alpha, m.beta)
    grads: list[np.ndarray] = [None] * len(m.conv_thetas)
    for li in range(len(m.conv_thetas) - 1, -1, -1):
        layer = trace.layers[li]
        theta = m.conv_thetas[li]
        hdim = theta.shape[1]
        d_hw = np.zeros((n, hdim))
        for b, (a, _) in enumerate(_branches(p, m.alpha, m.beta)):
            d_pre = scales[b] * d_h[:, b * hdim:(b + 1) * hdim] * (layer.pre[b] > 0)
            d_hw += spmm(a.T, d_pre)
        grads[li] = layer.h_in.T @ d_hw + 2.0 * l2_factor * theta
        if li > 0:
            d_h = d_hw @ theta.T
            if layer.mask is not None:
                d_h = d_h * layer.mask
    return grads + [g_head]


def first_layer_embeddings(m: DgcnModel, p: ProximitySet, x: np.ndarray) -> np.ndarray:
    """Eval-mode output of the first conv layer (N x 3H); propagated features for sgc."""
    if m.kind == "sgc":
        return sgc_features(p, x, m.alpha, m.beta)
    out, _ = conv_layer_forward(p, x, m.conv_thetas[0], m.alpha, m.beta)
    return out


# optimizer -------------------------------------------------------------------


@dataclass
class AdamState:
    m: list[np.ndarray]
    v: list[np.ndarray]
    step: int = 0
    lr: float = 0.01
    beta1: float = 0.9
    beta2: float = 0.999
    eps: float = 1e-8

    @classmethod
    def for_params(cls, params: Sequence[np.ndarray], **hyper) -> "AdamState":
        return cls([np.zeros_like(p) for p in params], [np.zeros_like(p) for p in params], **hyper)


def adam_step(state: AdamState, params: Sequence[np.ndarray], grads: Sequence[np.ndarray]) -> list[np.ndarray]:
    """Bias-corrected Adam. Advances ``state`` in place and returns new parameter arrays."""
    if len(params) != len(grads) or len(params) != len(state.m):
        raise ShapeError("params, grads and optimizer state disagree in length")
    state.step += 1
    t = state.step
    c1 = 1.0 - state.beta1 ** t
    c2 = 1.0 - state.beta2 ** t
    out = []
    for i, (p, g) in enumerate(zip(params, grads)):
        if p.shape != g.shape or p.shape != state.m[i].shape:
            raise ShapeError(f"shape mismatch for parameter {i}: {p.shape} vs {g.shape}")
        state.m[i] = state.beta1 * state.m[i] + (1.0 - state.beta1) * g
        state.v[i] = state.beta2 * state.v[i] + (1.0 - state.beta2) * (g * g)
        m_hat = state.m[i] / c1
        v_hat = state.v[i] / c2
        out.append(p - state.lr * m_hat / (np.sqrt(v_hat) + state.eps))
    return out


# checkpoints -----------------------------------------------------------------


def format_checkpoint(m: DgcnModel, header_extra: Sequence[str] = ()) -> str:
    c, h, f, layers = m.dims
    lines = [f"# {hx}" for hx in header_extra]
    lines.append(f"# meta kind={m.kind} alpha={float(m.alpha)!r} beta={float(m.beta)!r} C={c} H={h} F={f} L={layers}")
    names = [f"conv{i}" for i in range(len(m.conv_thetas))] + ["head"]
    for name, theta in zip(names, m.params()):
        lines.append(f"# layer={name} rows={theta.shape[0]} cols={theta.shape[1]}")
        lines += ["\t".join(f"{v:.17g}" for v in row) for row in theta]
    return "\n".join(lines) + "\n"


def save_checkpoint(m: DgcnModel, path, header_extra: Sequence[str] = ()) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        fh.write(format_checkpoint(m, header_extra))


def _kv(line: str) -> dict[str, str]:
    return dict(tok.split("=", 1) for tok in line[1:].split() if "=" in tok)


def load_checkpoint(path) -> DgcnModel:
    with open(path, encoding="utf-8") as fh:
        lines = [ln.rstrip("\r\n") for ln in fh]
    meta = None
    blocks: dict[str, np.ndarray] = {}
    i = 0
    while i < len(lines):
        line = lines[i]
        if line.startswith("# meta"):
            meta = _kv(line[len("# meta"):])
            i += 1
        elif line.startswith("# layer="):
            kv = _kv(line)
            rows, cols = int(kv["rows"]), int(kv["cols"])
            blocks[kv["layer"]] = parse_dense_block(lines[i + 1:i + 1 + rows], rows, cols, path, i + 2)
            i += 1 + rows
        else:
            i += 1
    if meta is None or "head" not in blocks:
        raise ParseError("checkpoint lacks a meta line or head block", path)
    n_conv = int(meta["L"])
    try:
        thetas = [blocks[f"conv{k}"] for k in range(n_conv)]
    except KeyError as e:
        raise ParseError(f"checkpoint misses block {e}", path) from None
    return DgcnModel(thetas, blocks["head"], float(meta["alpha"]), float(meta["beta"]), meta["kind"])
