"""Test accuracy as a function of the number of convolution layers."""

from _common import dataset_parser, load

from dgcn.train import TrainConfig, format_table, sweep_depth


def main():
    ap = dataset_parser(__doc__)
    ap.add_argument("--depths", type=int, nargs="+", default=[1, 2, 3, 4, 5])
    args = ap.parse_args()
    _, p, x, y = load(args)
    cfg = TrainConfig(n_splits=args.splits, n_inits=args.inits, val_size=args.val_size, jobs=args.jobs)
    print(format_table(["layers", "val_acc", "test_acc", "test_std"], sweep_depth(p, x, y, cfg, args.depths)), end="")


if __name__ == "__main__":
    main()
