#!/usr/bin/env python3
"""Convert a dense 3-way array (.mat or .npy) to lft COO text.

Zero and NaN cells are treated as missing readings and dropped.

Guangzhou speed tensor (tensor.mat, road x day x interval) to the
road x interval x day layout:

    python3 scripts/to_coo.py tensor.mat guangzhou.coo --var tensor --axes 0,2,1
"""

import argparse
import sys

import numpy as np


def load(path, var):
    if path.endswith(".npy"):
        return np.load(path)
    from scipy.io import loadmat

    mat = loadmat(path)
    if var is None:
        names = [k for k in mat if not k.startswith("__")]
        if len(names) != 1:
            sys.exit(f"{path}: pass --var, candidates are {names}")
        var = names[0]
    return mat[var]


def main():
    ap = argparse.ArgumentParser(description=__doc__, formatter_class=argparse.RawDescriptionHelpFormatter)
    ap.add_argument("src")
    ap.add_argument("dst")
    ap.add_argument("--var", help="variable name inside a .mat file")
    ap.add_argument("--axes", default="0,1,2", help="output axis order, e.g. 0,2,1")
    args = ap.parse_args()

    arr = np.asarray(load(args.src, args.var), dtype=np.float64)
    if arr.ndim != 3:
        sys.exit(f"{args.src}: expected a 3-way array, got shape {arr.shape}")
    arr = np.transpose(arr, [int(a) for a in args.axes.split(",")])
    keep = np.isfinite(arr) & (arr != 0)
    idx = np.argwhere(keep)
    vals = arr[keep]

    with open(args.dst, "w") as f:
        f.write("dims {} {} {}\n".format(*arr.shape))
        for (i, j, k), v in zip(idx, vals):
            f.write(f"{i} {j} {k} {float(v)!r}\n")
    print(f"{args.dst}: dims {arr.shape}, {len(vals)} observed, {arr.size - len(vals)} dropped", file=sys.stderr)


if __name__ == "__main__":
    main()
