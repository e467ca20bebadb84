"""Run IPDS on sparse PCA for several last-block proximal weights and report divergence.

    PYTHONPATH=tests python scripts/theta2_probe.py [--iters 3000] [--seeds 3]
"""

import argparse
import dataclasses
import warnings

import numpy as np

from ipds_admm.problems import SparsePcaSpec, build_sparse_pca, sparse_pca_start, synth_data
from ipds_admm.schedule import IpdsSchedule, experiment_defaults
from ipds_admm.solver import DivergenceError, StoppingRule, objective_value, solve


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--iters", type=int, default=3000)
    ap.add_argument("--seeds", type=int, default=3)
    ap.add_argument("--theta2", default="0.6,0.9,1.0,1.01,1.2")
    args = ap.parse_args()
    warnings.simplefilter("ignore")
    np.seterr(all="ignore")
    rho = 100.0
    for theta2 in map(float, args.theta2.split(",")):
        for seed in range(args.seeds):
            prob = build_sparse_pca(SparsePcaSpec(synth_data("randn", 200, 50, seed), 5, rho))
            v0 = sparse_pca_start(50, 5, seed)
            params = dataclasses.replace(experiment_defaults(), theta2=theta2)
            sched = IpdsSchedule(50 * rho, params.xi, params.p, params.delta, 1.0, prob.lipschitz_last)
            try:
                res = solve(prob, params, sched, StoppingRule(0.0, max_iter=args.iters), record_every=args.iters, x0=(v0, v0.copy()))
            except (DivergenceError, ValueError) as exc:
                print(f"theta2={theta2:<5g} seed={seed} diverged: {exc}")
                continue
            x = res.final.x
            obj = objective_value(prob, x)
            feas = np.linalg.norm(x[0] - x[1])
            status = "ok" if np.isfinite(obj) and feas < 1e-3 else "unstable"
            print(f"theta2={theta2:<5g} seed={seed} {status} objective={obj:.6f} ||V-Y||={feas:.2e}")


if __name__ == "__main__":
    main()
