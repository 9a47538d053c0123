"""
Joint feature matching from corrupted pairwise correspondences
===============================================================
Each of n items carries m features in an unknown order; for every pair of
items we observe a correspondence matrix that is either the true one or,
with some probability, an unrelated random permutation.  Jointly matching
all items at once lets consistent pairs outvote corrupted ones: the solver
factorizes the stacked correspondence matrix, reads off initial assignments,
and refines them with power iterations rounded through a linear assignment
step per item.

Features:
- corruption grid showing input error vs post-solve error
- per-level seeds, every row independently reproducible
- mismatch rates counted modulo one global relabeling of features

Usage:
    python3 demos/matching_features.py [--n 40] [--m 8]
"""

import argparse

import numpy as np

from ppmalign import input_mismatch_rate, match_solve, sample_match_observations


def main():
    ap = argparse.ArgumentParser()
    ap.add_argument("--n", type=int, default=40)
    ap.add_argument("--m", type=int, default=8)
    ap.add_argument("--seeds", type=int, default=5)
    args = ap.parse_args()

    print(f"n = {args.n} items, m = {args.m} features per item\n")
    print(f"{'corrupt':>8} {'input err':>10} {'final err':>10} {'iterations':>11}")
    for level, corrupt in enumerate((0.1, 0.3, 0.5, 0.7)):
        before, after, iters = [], [], []
        for s in range(args.seeds):
            seed = 100 * level + s
            obs, truth = sample_match_observations(args.n, args.m, corrupt,
                                                   seed=seed)
            rep = match_solve(obs, T=50, seed=seed, truth=truth)
            before.append(input_mismatch_rate(obs, truth))
            after.append(rep.final_mismatch)
            iters.append(rep.iterations_run)
        print(f"{corrupt:>8.1f} {np.mean(before):>10.3f} {np.mean(after):>10.3f} "
              f"{np.mean(iters):>11.1f}")
    print("\njoint voting repairs even majority-corrupted inputs at this size; "
          "residual\nerror only creeps in once corrupted blocks dominate heavily")


if __name__ == "__main__":
    main()
