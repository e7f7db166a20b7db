"""Validation and test accuracy over a grid of second-order weights alpha and beta."""

from _common import dataset_parser, load

from dgcn.train import TrainConfig, format_table, sweep_alpha_beta


def main():
    ap = dataset_parser(__doc__)
    ap.add_argument("--grid", type=float, nargs="+", default=[0.5, 1.0, 1.5, 2.0])
    args = ap.parse_args()
    _, p, x, y = load(args)
    cfg = TrainConfig(n_splits=args.splits, n_inits=args.inits, val_size=args.val_size, jobs=args.jobs)
    rows = sweep_alpha_beta(p, x, y, cfg, args.grid, args.grid)
    print(format_table(["alpha", "beta", "val_acc", "test_acc"], rows), end="")
    best = max(rows, key=lambda r: r[2])
    print(f"# best by validation: alpha={best[0]} beta={best[1]} test_acc={best[3]:.4f}")


if __name__ == "__main__":
    main()
