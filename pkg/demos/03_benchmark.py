#!/usr/bin/env python3
"""Replicated benchmark comparing factor-adjusted and generic methods.

Runs the synthetic benchmark for a few method/k-hat combinations and prints
one table row per run: beta error, model selection rate, sure screening
rate, average model size.  Defaults keep the runtime small; pass
--replicates 100 for table-quality numbers (the two lasso rows dominate the
cost).
"""
import argparse

from fasreg import RngStream, basic_config, run_benchmark


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--replicates", type=int, default=20)
    ap.add_argument("--seed", type=int, default=0)
    ap.add_argument("--threads", type=int, default=1)
    ap.add_argument("--with-lasso", action="store_true",
                    help="also run the slower lasso rows")
    args = ap.parse_args()

    rows = [("fa_bayes", 3), ("fa_bayes", 6), ("generic_bayes", 0)]
    if args.with_lasso:
        rows += [("fa_lasso", 3), ("generic_lasso", 0)]

    print(f"basic case, {args.replicates} replicates, seed {args.seed}")
    print(f"{'method':>14} {'khat':>5} {'beta err':>9} {'select':>7} "
          f"{'screen':>7} {'size':>6}")
    for method, khat in rows:
        cfg = basic_config(method=method, khat_used=khat,
                           replicates=args.replicates)
        rep = run_benchmark(cfg, RngStream(args.seed), threads=args.threads)
        print(f"{method:>14} {khat:>5} {rep.beta_l2_error:>9.4f} "
              f"{rep.model_selection_rate:>7.3f} "
              f"{rep.sure_screening_rate:>7.3f} {rep.avg_model_size:>6.2f}")


if __name__ == "__main__":
    main()
