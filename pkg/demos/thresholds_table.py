"""Decoding thresholds of the AR3A and AR4JA families over Nakagami-m relay links.

Prints one table per family: rows are code rates, columns are
fading depths m.  Q = 10^4 keeps it to a few minutes;
pass --q 100000 for full-scale numbers.
"""
import argparse
import time

from protorelay.pexit import threshold_search
from protorelay.protograph import build, code_rate


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--q", type=int, default=10_000)
    ap.add_argument("--max-n", type=int, default=6)
    ap.add_argument("--seed", type=int, default=0)
    args = ap.parse_args()

    depths = (1.0, 2.0, 3.0, 4.0)
    t0 = time.time()
    for fam in ("ar3a", "ar4ja"):
        print(f"\n{fam.upper()}  (threshold Eb/N0 in dB, d = 0.4, Q = {args.q})")
        print("rate    " + "".join(f"{f'm={m:g}':>8s}  " for m in depths))
        for n in range(args.max_n + 1):
            base = build(fam, n)
            row = [threshold_search(base, m, q=args.q, seed=args.seed).threshold_db for m in depths]
            print(f"{str(code_rate(base)):6s}  " + "".join(f"{v:+8.3f}  " for v in row), flush=True)
    print(f"\n{time.time() - t0:.0f} s")


if __name__ == "__main__":
    main()
