"""Time the MC null on a cohort-sized panel and check worker invariance.

    python3 scripts/mc_benchmark.py --sims 10000 --workers 1 2 4
"""

import argparse
import time

from sigval.mc import McConfig, run_mc
from sigval.synth import SynthSpec, generate_synthetic_cohort


def main():
    ap = argparse.ArgumentParser()
    ap.add_argument("--sims", type=int, default=10_000)
    ap.add_argument("--workers", type=int, nargs="+", default=[1, 2, 4])
    ap.add_argument("--repeats", type=int, default=3)
    ap.add_argument("--n-stocks", type=int, default=467)
    ap.add_argument("--n-dates", type=int, default=19)
    ap.add_argument("--picks", type=int, default=35)
    args = ap.parse_args()

    panel = generate_synthetic_cohort(SynthSpec(n_stocks=args.n_stocks, n_dates=args.n_dates,
                                                picks_per_date=args.picks, embed_dim=4, seed=0)).panel
    run_mc(panel, McConfig(num_sims=100))
    reference = None
    for w in args.workers:
        best = float("inf")
        for _ in range(args.repeats):
            t0 = time.perf_counter()
            res = run_mc(panel, McConfig(num_sims=args.sims, seed=1, workers=w))
            best = min(best, time.perf_counter() - t0)
        digest = res.null_returns.tobytes()
        reference = reference or digest
        print(f"workers={w}: best of {args.repeats} = {best:.3f}s, identical to first = {digest == reference}")


if __name__ == "__main__":
    main()
