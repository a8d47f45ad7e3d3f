"""Finite-time bias of the surface and count laws.

Runs the rectangle process on a grid of horizons and reports the replicate
means of <Z_t,h>/t^2 and <Z_t,1>/t^2 together with t times the gap to the
limits.  A roughly constant t*gap column means an O(1/t) bias.
"""

import argparse
import math

import numpy as np

from rectnet import analytics, series
from rectnet import rectangles as rp


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--times", default="25,50,100,200")
    ap.add_argument("--reps", type=int, default=20)
    ap.add_argument("--seed", type=int, default=0)
    args = ap.parse_args()

    count_limit = series.pi_one() / 2
    print(f"{'t':>6} {'surface':>9} {'t*gap':>7} {'count':>9} {'t*gap':>7} {'min deficit':>12}")
    for t in (float(x) for x in args.times.split(",")):
        surf, cnt, gaps = [], [], []
        for s in analytics.replicate_seeds(args.seed, args.reps):
            z = rp.snapshot(rp.simulate(t, s), t)
            hs = math.fsum((z.L * z.ell).tolist())
            surf.append(hs / t ** 2)
            cnt.append(len(z) / t ** 2)
            gaps.append(t * t / 2 - hs)
        ms, mc = np.mean(surf), np.mean(cnt)
        print(f"{t:6.0f} {ms:9.4f} {t * (0.5 - ms):7.2f} {mc:9.4f} {t * (count_limit - mc):7.2f} "
              f"{min(gaps):12.3f}")


if __name__ == "__main__":
    main()
