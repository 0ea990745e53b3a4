"""Linear networks: stationary norm against the closed-form saddle radius.

Runs the packaged end-to-end experiment that sweeps the weight variance,
draws an ensemble at each point, and compares the late-layer window mean of
the norm r against r* = sqrt(N sigma_b^2 / (1 - sigma_w^2)). Artifacts
(raw trajectories, theory tables, SVG figure, report, manifest) land in the
output directory; the quick mode shrinks the ensembles so the whole sweep
finishes in under a minute.
"""

import argparse

from netlattice import EnsembleConfig, make_plan, run_experiment


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--out", default="runs/demo_stationary_norm")
    ap.add_argument("--full", action="store_true", help="acceptance-test scale")
    ap.add_argument("--workers", type=int, default=1)
    args = ap.parse_args()

    base = None
    if not args.full:
        base = EnsembleConfig(
            width=120,
            depth=384,
            num_samples=40,
            window_start=128,
            window_len=256,
            master_seed=21_000,
        )
    plan = make_plan("fig3_linear_saddle", args.out, base=base, workers=args.workers)
    report = run_experiment(plan)
    for row in report.rows:
        flag = "ok  " if row.passed else "FAIL"
        print(
            f"[{flag}] sw2={row.sweep_value:4.2f}  r* {row.predicted:8.4f}"
            f"  measured {row.measured:8.4f}  rel dev {row.rel_dev:.4f}"
        )
    print(f"\nverdict: {report.verdict}; artifacts in {args.out}/")


if __name__ == "__main__":
    main()
