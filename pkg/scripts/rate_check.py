"""Average criticality slope and rescaled-dual growth on the toy problems.

    PYTHONPATH=tests python scripts/rate_check.py [--iters 5000] [--seeds 5]
"""

import argparse

import numpy as np

from ipds_admm.schedule import select_params
from ipds_admm.solver import StoppingRule, solve
from ipds_admm.toys import bijective_toy, surjective_toy, toy_schedule

HORIZONS = (250, 500, 1000, 2000)


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--iters", type=int, default=5000)
    ap.add_argument("--seeds", type=int, default=5)
    args = ap.parse_args()
    families = {
        "bi-l1": (lambda s: bijective_toy(s), "bi"),
        "bi-card": (lambda s: bijective_toy(s, first_block="cardinality"), "bi"),
        "su": (lambda s: surjective_toy(s), "su"),
    }
    print("family,seed,slope,dual_ratio")
    for family, (make, regime) in families.items():
        for seed in range(args.seeds):
            prob = make(seed)
            params = select_params(regime, prob.spectral.kappa if regime == "su" else 1.0)
            res = solve(prob, params, toy_schedule(prob, params), StoppingRule(0.0, max_iter=args.iters), keep_states=True)
            c = np.array([r.crit_bound for r in res.trace])
            slope = np.polyfit(np.log(HORIZONS), np.log([c[:T].mean() for T in HORIZONS]), 1)[0]
            zh = np.array([np.linalg.norm(s.z_hat) for s in res.states])
            print(f"{family},{seed},{slope:.4f},{zh.max() / zh[100]:.3f}", flush=True)


if __name__ == "__main__":
    main()
