"""Feature and label smoothness on first-order and first-plus-second-order edge sets,
swept over the cross-class edge probability of the SBM."""

from _common import dataset_parser, load

from dgcn.smoothness import smoothness_table


def main():
    ap = dataset_parser(__doc__)
    ap.add_argument("--p-outs", type=float, nargs="+", default=[0.0, 0.01, 0.02, 0.05, 0.1])
    args = ap.parse_args()
    print("p_out\tlambda_f/1st\tlambda_f/1st&2nd\tlambda_l/1st\tlambda_l/1st&2nd")
    for p_out in ([None] if args.data else args.p_outs):
        args.p_out = p_out
        g, _, x, y = load(args)
        t = smoothness_table(g, x, y)
        print("\t".join([str(p_out if p_out is not None else "-")] + [f"{v:.4f}" for v in t.values()]))


if __name__ == "__main__":
    main()
