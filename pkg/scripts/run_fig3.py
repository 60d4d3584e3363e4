"""Cyclic exchanges against two-user, all-user and uncoded delivery (K=5, PPP users)."""
import argparse

from cachesim.experiments import load_scenario, run_scenario


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--trials", type=int, default=1000)
    ap.add_argument("--seed", type=int, default=0)
    ap.add_argument("--workers", type=int, default=1)
    ap.add_argument("--prefix", default="")
    args = ap.parse_args()
    for name in ("fig3_homo", "fig3_hetero"):
        cfg = load_scenario(name).replace(trials=args.trials, seed=args.seed)
        out = f"{args.prefix}{name}.csv"
        reports = run_scenario(cfg, out, workers=args.workers)
        print(f"# {name} -> {out}")
        for r in reports:
            print(f"{r.scheme:>14} {r.snr_db:5.1f} dB  {r.r_sym_mean:8.4f} +- {r.r_sym_stderr:.4f}")


if __name__ == "__main__":
    main()
