"""Experimental protocol: stratified splits, full-batch training with early stopping,
repeated runs, and the alpha/beta and depth sweeps."""

from __future__ import annotations

import logging
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import asdict, dataclass, field, replace
from pathlib import Path
from typing import Optional, Sequence

import numpy as np

from dgcn.errors import DomainError, ParseError, ProtocolError, TrainingError
from dgcn.graph import LabelVector, load_features, load_graph, load_labels
from dgcn.nn import (
    AdamState,
    DgcnModel,
    adam_step,
    model_backward,
    model_forward,
    model_loss,
    sgc_features,
)
from dgcn.proximity import ProximitySet, build_proximity_set

log = logging.getLogger(__name__)


@dataclass(frozen=True)
class TrainConfig:
    lr: float = 0.01
    max_epochs: int = 500
    patience: int = 50
    dropout: float = 0.5
    l2: float = 5e-4
    hidden: int = 64
    alpha: float = 1.0
    beta: float = 1.0
    layers: int = 1
    per_class: int = 20
    val_size: int = 500
    n_splits: int = 10
    n_inits: int = 5
    seed: int = 0
    model: str = "dgcn"
    restore_best: bool = True
    prox_eps: float = 0.0
    jobs: int = 1

    def __post_init__(self):
        positive = ("lr", "max_epochs", "patience", "hidden", "layers", "per_class", "n_splits", "n_inits", "jobs")
        for name in positive:
            if getattr(self, name) <= 0:
                raise DomainError(f"{name} must be positive")
        if self.patience > self.max_epochs:
            raise DomainError("patience cannot exceed max_epochs")
        if not 0 <= self.dropout < 1:
            raise DomainError("dropout must lie in [0, 1)")
        if self.l2 < 0 or self.val_size < 0 or self.prox_eps < 0:
            raise DomainError("l2, val_size and prox_eps must be nonnegative")
        if self.alpha < 0 or self.beta < 0:
            raise DomainError("alpha and beta must be nonnegative")
        if self.model not in ("dgcn", "sgc"):
            raise DomainError(f"unknown model {self.model!r}")

    def split_seed(self, i: int) -> int:
        return self.seed + 1000 * i

    def init_seed(self, j: int) -> int:
        return self.seed + 2000 * j

    def as_dict(self) -> dict:
        return asdict(self)


@dataclass(frozen=True, eq=False)
class SplitAssignment:
    train: np.ndarray
    val: np.ndarray
    test: np.ndarray
    seed: Optional[int] = None


@dataclass(frozen=True)
class RunResult:
    run_id: int
    split_seed: int
    init_seed: int
    stop_epoch: int
    best_epoch: int
    val_acc: float
    test_acc: float
    wall_time: float = field(default=0.0, compare=False)
    val_history: tuple[float, ...] = field(default=(), repr=False)


@dataclass
class RunReport:
    runs: list[RunResult]
    last_model: Optional[DgcnModel] = field(default=None, repr=False, compare=False)

    @property
    def test_accuracies(self) -> np.ndarray:
        return np.array([r.test_acc for r in sorted(self.runs, key=lambda r: r.run_id)])

    @property
    def val_accuracies(self) -> np.ndarray:
        return np.array([r.val_acc for r in sorted(self.runs, key=lambda r: r.run_id)])

    @property
    def mean(self) -> float:
        return float(np.mean(self.test_accuracies))

    @property
    def std(self) -> float:
        return float(np.std(self.test_accuracies))

    @property
    def wall_time(self) -> float:
        return sum(r.wall_time for r in self.runs)


# splits -----------------------------------------------------------------------


def make_split(y: LabelVector, cfg: TrainConfig, seed: int) -> SplitAssignment:
    """``per_class`` training nodes from every class, then ``val_size`` validation nodes
    drawn uniformly from the remaining labeled nodes; the rest is the test set."""
    if y.n_classes == 0:
        raise ProtocolError("no labeled nodes")
    for c in range(y.n_classes):
        have = y.class_nodes(c).size
        if have < cfg.per_class:
            raise ProtocolError(f"class {c} has {have} labeled nodes, {cfg.per_class} needed for training")
    labeled = y.labeled_nodes()
    need = cfg.per_class * y.n_classes + cfg.val_size + 1
    if labeled.size < need:
        raise ProtocolError(f"{labeled.size} labeled nodes, the split needs at least {need}")
    rng = np.random.default_rng(seed)
    train = np.concatenate([rng.choice(y.class_nodes(c), cfg.per_class, replace=False) for c in range(y.n_classes)])
    rest = rng.permutation(np.setdiff1d(labeled, train))
    return SplitAssignment(np.sort(train), np.sort(rest[:cfg.val_size]), np.sort(rest[cfg.val_size:]), seed)


def save_split(split: SplitAssignment, path, header_extra: Sequence[str] = ()) -> None:
    tag = {}
    for name in ("train", "val", "test"):
        for i in getattr(split, name):
            tag[int(i)] = name
    lines = [f"# {h}" for h in header_extra]
    lines += [f"{i}\t{tag[i]}" for i in sorted(tag)]
    Path(path).write_text("\n".join(lines) + "\n", encoding="utf-8")


def load_split(path, n_nodes: int) -> SplitAssignment:
    sets: dict[str, list[int]] = {"train": [], "val": [], "test": []}
    seen = set()
    with open(path, encoding="utf-8") as fh:
        for lineno, raw in enumerate(fh, start=1):
            line = raw.rstrip("\r\n")
            if not line.strip() or line.startswith("#"):
                continue
            parts = line.split("\t")
            if len(parts) != 2 or parts[1] not in sets:
                raise ParseError("expected node<TAB>{train|val|test}", path, lineno)
            try:
                i = int(parts[0])
            except ValueError:
                raise ParseError(f"bad node id {parts[0]!r}", path, lineno) from None
            if not 0 <= i < n_nodes:
                raise ParseError(f"node {i} outside [0, {n_nodes})", path, lineno)
            if i in seen:
                raise ParseError(f"node {i} assigned twice", path, lineno)
            seen.add(i)
            sets[parts[1]].append(i)
    return SplitAssignment(*(np.array(sorted(sets[k]), dtype=np.int64) for k in ("train", "val", "test")))


# training ---------------------------------------------------------------------


def predict(model: DgcnModel, p: ProximitySet, x: np.ndarray, sgc_input=None) -> np.ndarray:
    y_hat, _ = model_forward(p, x, model, train_mode=False, sgc_input=sgc_input)
    return y_hat


def accuracy(y_hat: np.ndarray, y: LabelVector, nodes) -> float:
    """Argmax accuracy; ties resolve to the lowest class id."""
    nodes = np.asarray(nodes, dtype=np.int64)
    if nodes.size == 0:
        raise DomainError("accuracy over an empty node set")
    truth = y.labels[nodes]
    if np.any(truth < 0):
        raise DomainError("accuracy requested on unlabeled nodes")
    return float(np.mean(np.argmax(y_hat[nodes], axis=1) == truth))


def evaluate(model: DgcnModel, p: ProximitySet, x: np.ndarray, y: LabelVector, node_set) -> float:
    return accuracy(predict(model, p, x), y, node_set)


def train_once(p: ProximitySet, x: np.ndarray, y: LabelVector, split: SplitAssignment, cfg: TrainConfig,
               init_seed: int, run_id: int = 0) -> tuple[DgcnModel, RunResult]:
    """Full-batch training with early stopping on validation accuracy.

    A strictly better validation accuracy resets the patience counter; training ends
    after ``patience`` epochs without one, or at ``max_epochs``.
    """
    t0 = time.perf_counter()
    init_ss, drop_ss = np.random.SeedSequence(init_seed).spawn(2)
    model = DgcnModel.init(x.shape[1], cfg.hidden, y.n_classes, cfg.layers, np.random.default_rng(init_ss),
                           cfg.alpha, cfg.beta, cfg.model)
    drop_rng = np.random.default_rng(drop_ss)
    sgc_input = sgc_features(p, x, cfg.alpha, cfg.beta) if cfg.model == "sgc" else None
    adam = AdamState.for_params(model.params(), lr=cfg.lr)

    best_val = -1.0
    best_epoch = 0
    best_params = [th.copy() for th in model.params()]
    stall = 0
    epoch = 0
    history = []
    for epoch in range(1, cfg.max_epochs + 1):
        _, trace = model_forward(p, x, model, train_mode=True, rng=drop_rng, dropout=cfg.dropout,
                                 sgc_input=sgc_input)
        loss = model_loss(trace, y, split.train, model, cfg.l2)
        if not np.isfinite(loss):
            raise TrainingError(f"non-finite loss at epoch {epoch}")
        grads = model_backward(trace, y, split.train, model, p, cfg.l2)
        model = model.with_params(adam_step(adam, model.params(), grads))

        val_acc = accuracy(predict(model, p, x, sgc_input), y, split.val) if split.val.size else 0.0
        history.append(val_acc)
        if log.isEnabledFor(logging.DEBUG):
            log.debug("run %d epoch %d loss=%.6g (per labeled node %.6g) val_acc=%.4f",
                      run_id, epoch, loss, loss / max(split.train.size, 1), val_acc)
        if val_acc > best_val:
            best_val, best_epoch, stall = val_acc, epoch, 0
            best_params = [th.copy() for th in model.params()]
        else:
            stall += 1
            if stall >= cfg.patience:
                break

    if cfg.restore_best:
        model = model.with_params(best_params)
    final_val = best_val if cfg.restore_best else (
        accuracy(predict(model, p, x, sgc_input), y, split.val) if split.val.size else 0.0)
    test_acc = accuracy(predict(model, p, x, sgc_input), y, split.test)
    result = RunResult(run_id, int(split.seed) if split.seed is not None else -1, init_seed, epoch, best_epoch,
                       final_val, test_acc, time.perf_counter() - t0, tuple(history))
    log.info("run %d split_seed=%s init_seed=%d stop_epoch=%d best_epoch=%d val_acc=%.4f test_acc=%.4f",
             run_id, result.split_seed, init_seed, epoch, best_epoch, final_val, test_acc)
    return model, result


def load_dataset(graph, features, labels, prox_eps: float = 0.0):
    """Read the three dataset files and build the proximity operators."""
    g = load_graph(graph)
    x = load_features(features, g.n_nodes)
    y = load_labels(labels, g.n_nodes)
    return g, build_proximity_set(g, prox_eps), x, y


def run_experiment(p: ProximitySet, x: np.ndarray, y: LabelVector, cfg: TrainConfig) -> RunReport:
    """``n_splits * n_inits`` independent runs; ``run_id = split_index * n_inits + init_index``."""
    specs = []
    for i in range(cfg.n_splits):
        split = make_split(y, cfg, cfg.split_seed(i))
        for j in range(cfg.n_inits):
            specs.append((i * cfg.n_inits + j, split, cfg.init_seed(j)))

    def one(spec):
        run_id, split, init_seed = spec
        return train_once(p, x, y, split, cfg, init_seed, run_id)

    if cfg.jobs > 1:
        with ThreadPoolExecutor(max_workers=cfg.jobs) as pool:
            outcomes = list(pool.map(one, specs))
    else:
        outcomes = [one(s) for s in specs]
    runs = [res for _, res in outcomes]
    report = RunReport(runs, last_model=outcomes[-1][0])
    log.info("mean test accuracy %.4f +- %.4f over %d runs", report.mean, report.std, len(runs))
    return report


def format_report(report: RunReport, header_extra: Sequence[str] = ()) -> str:
    lines = [f"# {h}" for h in header_extra]
    lines.append("# run_id\tsplit_seed\tinit_seed\tstop_epoch\ttest_acc")
    for r in sorted(report.runs, key=lambda r: r.run_id):
        lines.append(f"{r.run_id}\t{r.split_seed}\t{r.init_seed}\t{r.stop_epoch}\t{r.test_acc!r}")
    lines.append(f"# mean={report.mean!r} std={report.std!r}")
    return "\n".join(lines) + "\n"


# sweeps -----------------------------------------------------------------------


def sweep_alpha_beta(p: ProximitySet, x: np.ndarray, y: LabelVector, cfg: TrainConfig,
                     alphas: Sequence[float], betas: Sequence[float]) -> list[tuple[float, float, float, float]]:
    """Rows of (alpha, beta, mean val acc, mean test acc), sorted by (alpha, beta)."""
    grid = sorted({(float(a), float(b)) for a in alphas for b in betas})
    for a, b in grid:
        if not (0 < a <= 2 and 0 < b <= 2):
            raise DomainError(f"grid point ({a}, {b}) outside (0, 2]")
    rows = []
    for a, b in grid:
        rep = run_experiment(p, x, y, replace(cfg, alpha=a, beta=b))
        rows.append((a, b, float(np.mean(rep.val_accuracies)), rep.mean))
    return rows


def sweep_depth(p: ProximitySet, x: np.ndarray, y: LabelVector, cfg: TrainConfig,
                depths: Sequence[int]) -> list[tuple[int, float, float, float]]:
    """Rows of (layers, mean val acc, mean test acc, test std)."""
    rows = []
    for d in sorted(set(int(d) for d in depths)):
        rep = run_experiment(p, x, y, replace(cfg, layers=d))
        rows.append((d, float(np.mean(rep.val_accuracies)), rep.mean, rep.std))
    return rows


def format_table(header: Sequence[str], rows, header_extra: Sequence[str] = ()) -> str:
    lines = [f"# {h}" for h in header_extra]
    lines.append("\t".join(header))
    lines += ["\t".join(repr(v) for v in row) for row in rows]
    return "\n".join(lines) + "\n"
