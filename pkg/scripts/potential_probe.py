"""Per-iteration potential decrease margins on the toy problems.

    python scripts/potential_probe.py [--iters 500] [--seed 0]
"""

import argparse

from ipds_admm.schedule import select_params
from ipds_admm.solver import StoppingRule, potential_value, solve
from ipds_admm.toys import bijective_toy, surjective_toy, toy_schedule


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--iters", type=int, default=500)
    ap.add_argument("--seed", type=int, default=0)
    ap.add_argument("--every", type=int, default=50)
    args = ap.parse_args()
    for name, prob, regime in (("bijective", bijective_toy(args.seed), "bi"), ("surjective", surjective_toy(args.seed), "su")):
        params = select_params(regime, prob.spectral.kappa if regime == "su" else 1.0)
        sched = toy_schedule(prob, params)
        res = solve(prob, params, sched, StoppingRule(0.0, max_iter=args.iters + 1), keep_states=True)
        pots = [potential_value(prob, a, b, params, sched) for a, b in zip(res.states, res.states[1:])]
        worst = max(n.energy - (c.theta - n.theta + n.tail) for c, n in zip(pots, pots[1:]))
        print(f"{name}: worst excess {worst:.3e}")
        print("t,theta,energy,tail")
        for p in pots[:: args.every]:
            print(f"{p.t},{p.theta:.10g},{p.energy:.3e},{p.tail:.3e}")


if __name__ == "__main__":
    main()
