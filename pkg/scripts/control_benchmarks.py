"""Integrator and closed-loop benchmarks with the shipped (or a given) flight config."""
import argparse

from quaddelivery import benchmarks
from quaddelivery.control import load_flight_config


def main():
    ap = argparse.ArgumentParser()
    ap.add_argument("--config")
    ap.add_argument("--hover-seconds", type=float, default=60.0)
    args = ap.parse_args()
    cfg = load_flight_config(args.config)

    d = benchmarks.tumble_drift()
    print(f"tumble drift: |Iw| {d.momentum:.2e}, energy {d.energy:.2e}")
    print(f"RK4 error ratio at dt, dt/2: {benchmarks.rk4_convergence_ratio():.2f} (16 ideal)")
    print(f"hover error over {args.hover_seconds:g}s: {benchmarks.hover_error(args.hover_seconds, cfg):.2e} m")
    cap = benchmarks.lateral_capture_time(config=cfg)
    print("1 m lateral step captured " + ("never" if cap is None else f"after {cap:.2f}s"))
    for step in (0.05, 0.2, 0.3):
        r = benchmarks.roll_step(step, config=cfg)
        print(f"roll step {step:.2f} rad: overshoot {100 * r.overshoot:.1f}%, settles {r.settling_time:.2f}s")


if __name__ == "__main__":
    main()
