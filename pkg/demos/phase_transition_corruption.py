"""
Exact-recovery phase transition under random corruption
========================================================
Sweeps the non-corruption rate pi0 across the predicted recovery threshold
for the random corruption model: every observed pairwise difference is
correct with probability pi0 and uniform noise otherwise.  Above the
threshold the projected power method recovers every label exactly in almost
every trial; below it, recovery collapses.  The threshold scales like
sqrt(log n / (m n p_obs)), so doubling n sharpens and shifts the transition.

Features:
- seeded Monte Carlo sweep over a pi0 grid via the experiment harness
- predicted sufficient/necessary thresholds printed alongside the data
- ASCII transition curve (fraction of trials with zero misclassification)

Usage:
    python3 demos/phase_transition_corruption.py [--n 300] [--trials 8]
"""

import argparse

from ppmalign import (
    ExperimentConfig,
    run_sweep,
    threshold_random_corruption,
)


def bar(frac, width=30):
    filled = round(frac * width)
    return "#" * filled + "." * (width - filled)


def main():
    ap = argparse.ArgumentParser()
    ap.add_argument("--n", type=int, default=300)
    ap.add_argument("--trials", type=int, default=8)
    ap.add_argument("--m", type=int, default=2)
    args = ap.parse_args()

    thr_hi = threshold_random_corruption(args.n, args.m, 1.0, constant=1.01)
    thr_lo = threshold_random_corruption(args.n, args.m, 1.0, constant=0.99)
    print(f"n = {args.n}, m = {args.m}, complete graph")
    print(f"sufficient threshold pi0 >= {thr_hi:.4f}")
    print(f"necessary  threshold pi0 >= {thr_lo:.4f}\n")

    # grid straddling the threshold: 0.4x .. 2.0x
    grid = tuple(round(f * thr_hi, 4) for f in (0.4, 0.7, 0.9, 1.1, 1.4, 2.0))
    cfg = ExperimentConfig(
        n_grid=(args.n,), param_grid=grid, m=args.m,
        trials=args.trials, seed=1,
    )
    rows = run_sweep(cfg)

    print(f"{'pi0':>8} {'pi0/thr':>8} {'exact':>6} {'mean MCR':>9}   transition")
    for r in rows:
        ratio = r["param"] / thr_hi
        print(f"{r['param']:>8.4f} {ratio:>8.2f} {r['exact_recovery_frac']:>6.2f} "
              f"{r['mean_mcr']:>9.4f}   |{bar(r['exact_recovery_frac'])}|")
    print("\nthe jump from never-exact to always-exact brackets the predicted "
          "threshold;\ntighten it with more trials or a finer grid")


if __name__ == "__main__":
    main()
