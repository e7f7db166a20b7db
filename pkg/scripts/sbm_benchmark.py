"""Accuracy and wall time of both heads on a directed SBM (or a converted dataset)."""

from _common import dataset_parser, load

from dgcn.train import TrainConfig, run_experiment


def main():
    args = dataset_parser(__doc__).parse_args()
    _, p, x, y = load(args)
    print(f"nodes={p.n_nodes} classes={y.n_classes}")
    print("model\tmean\tstd\truns\tseconds")
    for kind in ("dgcn", "sgc"):
        cfg = TrainConfig(model=kind, n_splits=args.splits, n_inits=args.inits, val_size=args.val_size,
                          jobs=args.jobs)
        rep = run_experiment(p, x, y, cfg)
        print(f"{kind}\t{rep.mean:.4f}\t{rep.std:.4f}\t{len(rep.runs)}\t{rep.wall_time:.2f}")


if __name__ == "__main__":
    main()
