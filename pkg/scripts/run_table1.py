"""Single-antenna multicast rate versus group size (K=50 users on the unit disk)."""
import argparse

import numpy as np

from cachesim.experiments import table1_estimate


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--trials", type=int, default=20_000)
    ap.add_argument("--seed", type=int, default=0)
    ap.add_argument("--p-max", type=float, default=0.1)
    args = ap.parse_args()
    sizes = [2, 3, 4]
    print("semantics,s,R_s_bits,R_s_nats,stderr_bits")
    for semantics in ("random", "all_subsets_mean"):
        res = table1_estimate(args.trials, sizes, np.random.default_rng(args.seed), p_max=args.p_max,
                              semantics=semantics)
        for s in sizes:
            print(f"{semantics},{s},{res.rates['2'][s]:.4f},{res.rates['e'][s]:.4f},{res.stderr['2'][s]:.4f}")


if __name__ == "__main__":
    main()
