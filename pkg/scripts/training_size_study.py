"""Test accuracy against the number of labeled training nodes per class."""

from _common import dataset_parser, load

from dgcn.train import TrainConfig, run_experiment


def main():
    ap = dataset_parser(__doc__)
    ap.add_argument("--per-class", type=int, nargs="+", default=[2, 5, 10, 20, 40])
    args = ap.parse_args()
    _, p, x, y = load(args)
    print("per_class\tmodel\tmean\tstd")
    for k in args.per_class:
        for kind in ("dgcn", "sgc"):
            cfg = TrainConfig(per_class=k, model=kind, n_splits=args.splits, n_inits=args.inits,
                              val_size=args.val_size, jobs=args.jobs)
            rep = run_experiment(p, x, y, cfg)
            print(f"{k}\t{kind}\t{rep.mean:.4f}\t{rep.std:.4f}")


if __name__ == "__main__":
    main()
