"""Rejection rate of the MC mean-monthly test over planted excess returns.

    python3 scripts/power_study.py --seeds 100 --sims 2000 --excess 0 0.005 0.01
"""

import argparse
import time

import numpy as np

from sigval.mc import McConfig, run_mc
from sigval.synth import SynthSpec, generate_synthetic_cohort


def rejection_rate(excess: float, seeds: int, sims: int, alpha: float, spec_kwargs: dict, seed_offset: int = 0):
    ps = []
    for s in range(seed_offset, seed_offset + seeds):
        spec = SynthSpec(planted_excess_monthly=excess, embed_dim=4, seed=s, **spec_kwargs)
        ps.append(run_mc(generate_synthetic_cohort(spec).panel, McConfig(num_sims=sims, seed=s)).mean_monthly["p_value"])
    ps = np.array(ps)
    return float(np.mean(ps < alpha)), ps


def main():
    ap = argparse.ArgumentParser(description=__doc__, formatter_class=argparse.RawDescriptionHelpFormatter)
    ap.add_argument("--excess", type=float, nargs="+", default=[0.0, 0.0025, 0.005, 0.0075, 0.01])
    ap.add_argument("--seeds", type=int, default=100)
    ap.add_argument("--sims", type=int, default=2000)
    ap.add_argument("--alpha", type=float, default=0.05)
    ap.add_argument("--n-stocks", type=int, default=467)
    ap.add_argument("--n-dates", type=int, default=19)
    ap.add_argument("--picks", type=int, default=35)
    ap.add_argument("--vol", type=float, default=0.06)
    args = ap.parse_args()

    kw = {"n_stocks": args.n_stocks, "n_dates": args.n_dates, "picks_per_date": args.picks, "return_vol": args.vol}
    print(f"{'excess/month':>12}  {'reject':>7}  {'median p':>8}  {'secs':>6}")
    for ex in args.excess:
        t0 = time.perf_counter()
        rate, ps = rejection_rate(ex, args.seeds, args.sims, args.alpha, kw)
        print(f"{100 * ex:>11.2f}%  {100 * rate:>6.1f}%  {np.median(ps):>8.4f}  {time.perf_counter() - t0:>6.1f}")


if __name__ == "__main__":
    main()
