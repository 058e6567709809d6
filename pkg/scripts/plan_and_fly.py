"""Plan an instance exactly, then fly every quadcopter's route in simulation.

    python3 scripts/plan_and_fly.py instance.json --out runs/example
Without an instance the one-request example is used.
"""
import argparse
import os

import numpy as np

from quaddelivery.control import fly_route, load_flight_config, write_trajectory_csv
from quaddelivery.pdp import load_instance, worked_example
from quaddelivery.planner import plan_instance
from quaddelivery.routes import plan_to_dict, waypoints_from_doc, write_plan


def main():
    ap = argparse.ArgumentParser()
    ap.add_argument("instance", nargs="?")
    ap.add_argument("--out", default="runs/plan_and_fly")
    ap.add_argument("--config")
    args = ap.parse_args()

    inst = load_instance(args.instance) if args.instance else worked_example()
    res = plan_instance(inst)
    if res.plan is None:
        print(f"no plan: {res.status}")
        return
    os.makedirs(args.out, exist_ok=True)
    write_plan(os.path.join(args.out, "plan.json"), inst, res.plan)
    print(f"makespan {res.makespan:.4f} ({res.mip.stats.nodes} nodes, {res.mip.stats.pivots} pivots)")
    doc = plan_to_dict(inst, res.plan)
    cfg = load_flight_config(args.config)
    for qid in doc["routes"]:
        start, wps = waypoints_from_doc(doc, qid)
        traj = fly_route(start, wps, cfg)
        path = os.path.join(args.out, f"{qid}.csv")
        write_trajectory_csv(path, traj)
        miss = np.linalg.norm(traj.final_position[:2] - np.array(wps[-1])) if wps else 0.0
        print(f"{qid}: {len(wps)} legs, {traj.times[-1]:.2f}s simulated, final miss {miss:.3f} m -> {path}")


if __name__ == "__main__":
    main()
