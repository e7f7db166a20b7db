"""Shared argument handling for the experiment scripts."""

import argparse

from dgcn.proximity import build_proximity_set
from dgcn.sbm import directed_sbm
from dgcn.train import load_dataset


def dataset_parser(description: str) -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(description=description)
    ap.add_argument("--data", help="directory with graph.txt, features.txt, labels.txt (default: synthetic SBM)")
    ap.add_argument("--n-per-class", type=int, default=100)
    ap.add_argument("--classes", type=int, default=3)
    ap.add_argument("--p-in", type=float, default=0.2)
    ap.add_argument("--p-out", type=float, default=0.02)
    ap.add_argument("--sbm-seed", type=int, default=0)
    ap.add_argument("--splits", type=int, default=3)
    ap.add_argument("--inits", type=int, default=2)
    ap.add_argument("--val-size", type=int, default=100)
    ap.add_argument("--jobs", type=int, default=1)
    return ap


def load(args):
    """Return (graph, proximity set, features, labels)."""
    if args.data:
        return load_dataset(f"{args.data}/graph.txt", f"{args.data}/features.txt", f"{args.data}/labels.txt")
    g, x, y = directed_sbm(args.n_per_class, args.classes, args.p_in, args.p_out, seed=args.sbm_seed)
    return g, build_proximity_set(g), x, y
