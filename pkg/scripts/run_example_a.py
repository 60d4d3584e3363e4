"""Max-min, complex-field and finite-field delivery on the K=3, N=3, L=2, M=1 setup."""
import argparse

from cachesim.experiments import load_scenario, run_scenario


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--trials", type=int, default=1000)
    ap.add_argument("--seed", type=int, default=0)
    ap.add_argument("--out", default="example_a.csv")
    ap.add_argument("--workers", type=int, default=1)
    args = ap.parse_args()
    cfg = load_scenario("example_a").replace(trials=args.trials, seed=args.seed)
    for r in run_scenario(cfg, args.out, workers=args.workers):
        print(f"{r.scheme:>8} {r.placement:>13} {r.snr_db:5.1f} dB  {r.r_sym_mean:8.4f} +- {r.r_sym_stderr:.4f}")


if __name__ == "__main__":
    main()
