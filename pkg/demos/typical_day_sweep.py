"""Cost share error against the number of typical days.

Sweeps the toy seasonal system over a few numbers of typical days for the
independent and linked formulations and prints the comparison report.
The full-horizon row is the reference for the error column.

    python3 demos/typical_day_sweep.py [--periods 28] [--solver embedded]
"""

import argparse

from tsa_storage.analysis import run_sweep
from tsa_storage.cases import toy_seasonal_system


def main():
    ap = argparse.ArgumentParser()
    ap.add_argument("--periods", type=int, default=28)
    ap.add_argument("--steps", type=int, default=12)
    ap.add_argument("--days", default="2,4,7,14")
    ap.add_argument("--solver", default="embedded")
    ap.add_argument("--csv", help="optional path for the report CSV")
    args = ap.parse_args()

    spec, prof = toy_seasonal_system(0, args.periods, args.steps)
    days = [int(d) for d in args.days.split(",")]
    report = run_sweep(spec, prof, days, ("independent", "linked"), solver=args.solver,
                       steps_per_period=args.steps)
    print(f"{'kind':12s} {'N_k':>4s} {'objective':>11s} {'error':>8s} {'seconds':>8s}")
    for r in report.rows:
        print(f"{r.kind:12s} {r.n_typical_days:4d} {r.objective:11.2f} "
              f"{r.cost_share_error:8.4f} {r.solve_seconds:8.2f}")
    if args.csv:
        report.write_csv(args.csv)


if __name__ == "__main__":
    main()
