"""Run the acceptance suite and write a JSON report."""

import argparse
import json
import time

from rectnet import acceptance


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--quick", action="store_true")
    ap.add_argument("--out", default="acceptance.json")
    args = ap.parse_args()

    rows = []
    for i, fn in enumerate(acceptance.ALL, start=1):
        if args.quick and i not in acceptance.QUICK:
            continue
        t0 = time.time()
        r = fn(quick=args.quick)
        print(r.line(), f"({time.time() - t0:.1f}s)", flush=True)
        rows.append({"criterion": r.number, "title": r.title, "passed": r.passed, "summary": r.summary,
                     "seconds": round(time.time() - t0, 2)})
    with open(args.out, "w", encoding="utf-8") as fh:
        json.dump(rows, fh, indent=2)
    print(f"{sum(r['passed'] for r in rows)}/{len(rows)} passed; report in {args.out}")


if __name__ == "__main__":
    main()
