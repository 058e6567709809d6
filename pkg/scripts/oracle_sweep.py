"""Compare branch-and-bound against brute force on a seeded corpus, with and without cuts."""
import argparse
import time

from quaddelivery.fixtures import corpus
from quaddelivery.planner import plan_instance
from quaddelivery.routes import Infeasible, brute_force_solve


def main():
    ap = argparse.ArgumentParser()
    ap.add_argument("--count", type=int, default=50)
    ap.add_argument("--seed", type=int, default=0)
    args = ap.parse_args()

    totals = {True: [0, 0, 0.0], False: [0, 0, 0.0]}
    disagree = 0
    for k, inst in enumerate(corpus(args.count, seed=args.seed)):
        try:
            ref = brute_force_solve(inst).makespan
        except Infeasible:
            ref = None
        for cuts in (True, False):
            t0 = time.perf_counter()
            res = plan_instance(inst, with_cuts=cuts)
            tot = totals[cuts]
            tot[0] += res.mip.stats.nodes
            tot[1] += res.mip.stats.pivots
            tot[2] += time.perf_counter() - t0
            if (ref is None) != (res.plan is None) or (ref is not None and abs(ref - res.makespan) > 1e-6):
                disagree += 1
                print(f"instance {k} cuts={cuts}: oracle {ref}, solver {res.makespan}")
    for cuts, (nodes, pivots, secs) in totals.items():
        print(f"cuts {'on ' if cuts else 'off'}: {nodes} nodes, {pivots} pivots, {secs:.2f}s")
    print(f"{disagree} disagreements over {args.count} instances")


if __name__ == "__main__":
    main()
