"""Command-line entry point: ``dgcn <subcommand> ...``.

Exit codes: 0 success, 1 usage, 2 data/domain error, 3 internal invariant violation.
"""

from __future__ import annotations

import argparse
import json
import logging
import sys
from pathlib import Path

from dgcn import __version__
from dgcn.errors import DgcnError, InvariantError
from dgcn.graph import (
    load_features,
    load_graph,
    load_labels,
    save_dense,
    save_features,
    save_graph,
    save_labels,
)
from dgcn.nn import first_layer_embeddings, load_checkpoint, save_checkpoint
from dgcn.proximity import build_proximity_set
from dgcn.sbm import directed_sbm
from dgcn.smoothness import smoothness_table
from dgcn.train import (
    TrainConfig,
    accuracy,
    format_report,
    format_table,
    load_dataset,
    load_split,
    make_split,
    predict,
    run_experiment,
    save_split,
    sweep_alpha_beta,
    sweep_depth,
)

log = logging.getLogger("dgcn")

EXIT_USAGE = 1
EXIT_DATA = 2
EXIT_INTERNAL = 3


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_USAGE, f"{self.prog}: error: {message}\n")


def _provenance(cmd: str, seed=None) -> str:
    return f"dgcn version={__version__} cmd={cmd} seed={'none' if seed is None else seed}"


def _existing(path: str) -> str:
    if not Path(path).is_file():
        raise UsageError(f"input file not found: {path}")
    return path


def _floats(text: str) -> list[float]:
    try:
        return [float(t) for t in text.split(",") if t.strip()]
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma-separated numbers, got {text!r}") from None


def _ints(text: str) -> list[int]:
    try:
        return [int(t) for t in text.split(",") if t.strip()]
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma-separated integers, got {text!r}") from None


def _add_dataset(p: argparse.ArgumentParser, features=True, labels=True) -> None:
    p.add_argument("--graph", required=True)
    if features:
        p.add_argument("--features", required=True)
    if labels:
        p.add_argument("--labels", required=True)


def _add_training(p: argparse.ArgumentParser) -> None:
    d = TrainConfig()
    p.add_argument("--hidden", type=int, default=d.hidden)
    p.add_argument("--layers", type=int, default=d.layers)
    p.add_argument("--alpha", type=float, default=d.alpha)
    p.add_argument("--beta", type=float, default=d.beta)
    p.add_argument("--lr", type=float, default=d.lr)
    p.add_argument("--dropout", type=float, default=d.dropout)
    p.add_argument("--l2", type=float, default=d.l2)
    p.add_argument("--max-epochs", type=int, default=d.max_epochs)
    p.add_argument("--patience", type=int, default=d.patience)
    p.add_argument("--per-class", type=int, default=d.per_class)
    p.add_argument("--val-size", type=int, default=d.val_size)
    p.add_argument("--splits", type=int, default=d.n_splits)
    p.add_argument("--inits", type=int, default=d.n_inits)
    p.add_argument("--seed", type=int, default=d.seed)
    p.add_argument("--model", choices=["dgcn", "sgc"], default=d.model)
    p.add_argument("--restore-best", choices=["on", "off"], default="on")
    p.add_argument("--prox-eps", type=float, default=d.prox_eps)
    p.add_argument("--jobs", type=int, default=d.jobs)


def _config(args) -> TrainConfig:
    cfg = TrainConfig(
        lr=args.lr, max_epochs=args.max_epochs, patience=args.patience, dropout=args.dropout, l2=args.l2,
        hidden=args.hidden, alpha=args.alpha, beta=args.beta, layers=args.layers, per_class=args.per_class,
        val_size=args.val_size, n_splits=args.splits, n_inits=args.inits, seed=args.seed, model=args.model,
        restore_best=args.restore_best == "on", prox_eps=args.prox_eps, jobs=args.jobs,
    )
    return cfg


def _log_config(cmd: str, args, cfg: TrainConfig | None = None) -> None:
    resolved = {k: v for k, v in vars(args).items() if k not in ("func", "verbose", "quiet")}
    if cfg is not None:
        resolved["train_config"] = cfg.as_dict()
    log.info("%s config: %s", cmd, json.dumps(resolved, sort_keys=True))


def _dataset(args, prox_eps: float):
    return load_dataset(_existing(args.graph), _existing(args.features), _existing(args.labels), prox_eps)


# subcommands ------------------------------------------------------------------


def cmd_prox(args) -> int:
    g = load_graph(_existing(args.graph))
    _log_config("prox", args)
    ps = build_proximity_set(g, args.prox_eps)
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    for name, m in ps.named().items():
        save_graph(m, out / f"{name}.txt", [_provenance("prox"), f"matrix={name}"])
    log.info("wrote six proximity matrices to %s", out)
    return 0


def cmd_smooth(args) -> int:
    g = load_graph(_existing(args.graph))
    x = load_features(_existing(args.features), g.n_nodes)
    y = load_labels(_existing(args.labels), g.n_nodes)
    _log_config("smooth", args)
    t = smoothness_table(g, x, y)
    out = sys.stdout
    out.write("metric\tedges\tvalue\n")
    for key, v in t.items():
        metric, edges = key.split("/")
        out.write(f"{metric}\t{edges}\t{v!r}\n")
    return 0


def cmd_train(args) -> int:
    cfg = _config(args)
    g, p, x, y = _dataset(args, cfg.prox_eps)
    _log_config("train", args, cfg)
    report = run_experiment(p, x, y, cfg)
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    hdr = [_provenance("train", cfg.seed), f"model={cfg.model}"]
    (out / "report.tsv").write_text(format_report(report, hdr), encoding="utf-8")
    save_checkpoint(report.last_model, out / "checkpoint.txt", hdr)
    if args.emit_embeddings:
        save_dense(first_layer_embeddings(report.last_model, p, x), out / "embeddings.txt", hdr)
    sys.stdout.write(f"mean={report.mean!r}\tstd={report.std!r}\truns={len(report.runs)}\n")
    log.info("total training time %.2fs", report.wall_time)
    return 0


def cmd_sweep(args) -> int:
    cfg = _config(args)
    _, p, x, y = _dataset(args, cfg.prox_eps)
    _log_config("sweep", args, cfg)
    rows = sweep_alpha_beta(p, x, y, cfg, args.alphas, args.betas)
    text = format_table(["alpha", "beta", "val_acc", "test_acc"], rows, [_provenance("sweep", cfg.seed)])
    _emit(text, args.out)
    return 0


def cmd_depth(args) -> int:
    cfg = _config(args)
    _, p, x, y = _dataset(args, cfg.prox_eps)
    _log_config("depth", args, cfg)
    rows = sweep_depth(p, x, y, cfg, args.depths)
    text = format_table(["layers", "val_acc", "test_acc", "test_std"], rows, [_provenance("depth", cfg.seed)])
    _emit(text, args.out)
    return 0


def cmd_split(args) -> int:
    g = load_graph(_existing(args.graph))
    y = load_labels(_existing(args.labels), g.n_nodes)
    cfg = TrainConfig(per_class=args.per_class, val_size=args.val_size, seed=args.seed)
    _log_config("split", args)
    split = make_split(y, cfg, args.seed)
    save_split(split, args.out, [_provenance("split", args.seed)])
    return 0


def cmd_evaluate(args) -> int:
    _, p, x, y = _dataset(args, args.prox_eps)
    model = load_checkpoint(_existing(args.checkpoint))
    split = load_split(_existing(args.split), p.n_nodes)
    _log_config("evaluate", args)
    y_hat = predict(model, p, x)
    for name in ("train", "val", "test"):
        nodes = getattr(split, name)
        if nodes.size:
            sys.stdout.write(f"{name}\t{nodes.size}\t{accuracy(y_hat, y, nodes)!r}\n")
    return 0


def cmd_gen_sbm(args) -> int:
    _log_config("gen-sbm", args)
    g, x, y = directed_sbm(args.n_per_class, args.classes, args.p_in, args.p_out, args.feat_dim, args.noise,
                           args.seed)
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    hdr = [_provenance("gen-sbm", args.seed)]
    save_graph(g, out / "graph.txt", hdr)
    save_features(x, out / "features.txt", hdr)
    save_labels(y, out / "labels.txt", hdr)
    log.info("wrote %d nodes, %d edges to %s", g.n_nodes, g.n_edges, out)
    return 0


def _emit(text: str, out) -> None:
    if out:
        Path(out).write_text(text, encoding="utf-8")
    else:
        sys.stdout.write(text)


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="dgcn", description="Directed graph convolutional networks.")
    parser.add_argument("--version", action="version", version=f"dgcn {__version__}")
    parser.add_argument("-v", "--verbose", action="store_true", help="per-epoch debug logging")
    parser.add_argument("-q", "--quiet", action="store_true", help="warnings only")
    sub = parser.add_subparsers(dest="command", parser_class=_Parser, required=True)

    p = sub.add_parser("prox", help="export raw and normalized proximity matrices")
    _add_dataset(p, features=False, labels=False)
    p.add_argument("--out", required=True, help="output directory")
    p.add_argument("--prox-eps", type=float, default=0.0)
    p.set_defaults(func=cmd_prox)

    p = sub.add_parser("smooth", help="feature and label smoothness diagnostics")
    _add_dataset(p)
    p.set_defaults(func=cmd_smooth)

    p = sub.add_parser("train", help="repeated-split training and report")
    _add_dataset(p)
    _add_training(p)
    p.add_argument("--emit-embeddings", action="store_true")
    p.add_argument("--out", default="dgcn_out", help="output directory")
    p.set_defaults(func=cmd_train)

    p = sub.add_parser("sweep", help="alpha/beta grid study")
    _add_dataset(p)
    _add_training(p)
    p.add_argument("--alphas", type=_floats, default=[0.5, 1.0, 1.5, 2.0])
    p.add_argument("--betas", type=_floats, default=[0.5, 1.0, 1.5, 2.0])
    p.add_argument("--out", default=None, help="TSV file (stdout if omitted)")
    p.set_defaults(func=cmd_sweep)

    p = sub.add_parser("depth", help="model depth study")
    _add_dataset(p)
    _add_training(p)
    p.add_argument("--depths", type=_ints, default=[1, 2, 3, 4])
    p.add_argument("--out", default=None, help="TSV file (stdout if omitted)")
    p.set_defaults(func=cmd_depth)

    p = sub.add_parser("split", help="write one train/val/test split")
    _add_dataset(p, features=False)
    p.add_argument("--per-class", type=int, default=20)
    p.add_argument("--val-size", type=int, default=500)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out", required=True, help="split file")
    p.set_defaults(func=cmd_split)

    p = sub.add_parser("evaluate", help="accuracy of a checkpoint on a split file")
    _add_dataset(p)
    p.add_argument("--checkpoint", required=True)
    p.add_argument("--split", required=True)
    p.add_argument("--prox-eps", type=float, default=0.0)
    p.set_defaults(func=cmd_evaluate)

    p = sub.add_parser("gen-sbm", help="generate a directed SBM dataset")
    p.add_argument("--n-per-class", type=int, default=100)
    p.add_argument("--classes", type=int, default=3)
    p.add_argument("--p-in", type=float, default=0.2)
    p.add_argument("--p-out", type=float, default=0.02)
    p.add_argument("--feat-dim", type=int, default=16)
    p.add_argument("--noise", type=float, default=1.0)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out", required=True, help="output directory")
    p.set_defaults(func=cmd_gen_sbm)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    level = logging.DEBUG if args.verbose else logging.WARNING if args.quiet else logging.INFO
    logging.basicConfig(level=level, format="%(levelname)s %(name)s: %(message)s", stream=sys.stderr, force=True)
    try:
        return args.func(args)
    except UsageError as e:
        sys.stderr.write(f"dgcn: usage error: {e}\n")
        return EXIT_USAGE
    except InvariantError as e:
        sys.stderr.write(f"dgcn: internal error: {e}\n")
        return EXIT_INTERNAL
    except (DgcnError, OSError) as e:
        sys.stderr.write(f"dgcn: error: {e}\n")
        return EXIT_DATA


if __name__ == "__main__":
    sys.exit(main())
