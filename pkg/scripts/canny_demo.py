"""Run the edge detector on the synthetic fixtures and dump every stage as PGM."""
import argparse
import os

from quaddelivery.canny import canny_stages, stage_images
from quaddelivery.fixtures import canny_fixtures
from quaddelivery.pgm import write_pgm


def main():
    ap = argparse.ArgumentParser()
    ap.add_argument("--out", default="runs/canny")
    ap.add_argument("--sigma", type=float, default=1.4)
    args = ap.parse_args()
    os.makedirs(args.out, exist_ok=True)
    for name, img in canny_fixtures().items():
        res = canny_stages(img, args.sigma)
        write_pgm(os.path.join(args.out, f"{name}.pgm"), img)
        for stage, grid in stage_images(res).items():
            write_pgm(os.path.join(args.out, f"{name}_{stage}.pgm"), grid)
        print(f"{name:15s} {int((res.edges > 0).sum()):5d} edge pixels (t_high {res.t_high:.1f})")


if __name__ == "__main__":
    main()
