#!/usr/bin/env python3
"""Admissibility-loss construction: sweep the CFL-like parameter theta and
shrink the background density/pressure toward the closed-form limit.

Writes one CSV row per (theta, epsilon) pair.
"""

import argparse

from pcpfv import CounterexampleConfig, IdealEos, Report, run_counterexample


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--thetas", type=float, nargs="+",
                    default=[0.05, 0.10, 0.15, 0.20, 0.25, 0.30, 0.35,
                             0.40, 0.45])
    ap.add_argument("--epsilons", type=float, nargs="+",
                    default=[1e-4, 1e-5, 1e-6, 1e-7, 1e-8])
    ap.add_argument("--gamma", type=float, default=5.0 / 3.0)
    ap.add_argument("--output", default="counterexample_sweep.csv")
    args = ap.parse_args()

    eos = IdealEos(args.gamma)
    rows = []
    all_negative = True
    for theta in args.thetas:
        for eps in args.epsilons:
            cfg = CounterexampleConfig(epsilon=eps, tau=eps, theta=theta)
            rep = run_counterexample(cfg, eos)
            rows.extend(rep.rows)
            all_negative &= rep.passed
    report = Report(name="counterexample-sweep", passed=all_negative,
                    rows=rows)
    report.to_csv(args.output)
    print(f"{len(rows)} rows -> {args.output}; "
          f"all updates inadmissible: {all_negative}")
    return 0 if all_negative else 1


if __name__ == "__main__":
    raise SystemExit(main())
