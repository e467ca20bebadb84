"""Scaled sparse PCA comparison of IPDS-ADMM against RADMM, SPGM and SubGrad.

Objectives are measured at the raw iterate under a per-solver wall-clock budget.

    PYTHONPATH=tests python scripts/compare_sparse_pca.py --budget 30 --seeds 5
"""

import argparse

from benchmark import SOLVERS, BenchSetting, run_seed


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--budget", type=float, default=30.0, help="seconds per solver")
    ap.add_argument("--seeds", type=int, default=5)
    ap.add_argument("--rows", type=int, default=200)
    ap.add_argument("--cols", type=int, default=50)
    ap.add_argument("--r", type=int, default=5)
    ap.add_argument("--rho", type=float, default=100.0)
    args = ap.parse_args()
    setting = BenchSetting(args.rows, args.cols, args.r, args.rho, budget=args.budget)
    print("seed,solver,objective,feasibility,iterations")
    wins = {name: 0 for name in SOLVERS[1:]}
    for seed in range(args.seeds):
        res = run_seed(seed, setting)
        for name, (obj, feas, iters) in res.items():
            print(f"{seed},{name},{obj:.10g},{feas:.3e},{iters}", flush=True)
        for name in wins:
            wins[name] += res["ipds"][0] <= res[name][0]
    print("# seeds where ipds is at least as good: " + ", ".join(f"{k}={v}" for k, v in wins.items()))


if __name__ == "__main__":
    main()
