"""Draw the network at time t under every branching policy."""

import argparse
from pathlib import Path

from rectnet import planar
from rectnet.svg import render_svg


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--t", type=float, default=8.0)
    ap.add_argument("--seed", type=int, default=1)
    ap.add_argument("--out", default="figures")
    args = ap.parse_args()

    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    for policy in planar.BranchPolicy:
        st = planar.advance(planar.init(args.seed, policy), t_max=args.t + 1)
        path = out / f"network_{policy.value}.svg"
        render_svg(st, args.t, path, viewport=args.t)
        extra = f", crossings {st.n_crossings}" if hasattr(st, "n_crossings") else ""
        print(f"{path}: {len(st.records)} branches{extra}")


if __name__ == "__main__":
    main()
