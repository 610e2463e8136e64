"""p(n) for a grid of kites and directions, one CSV row per (kite, direction, n).

    python3 scripts/complexity_sweep.py --n-max 60 --out sweep.csv
"""
import argparse
import csv
import sys
import time

from kitecomplexity.calibration import INDEPENDENT_KITES, corpus_directions
from kitecomplexity.complexity import directional_complexity
from kitecomplexity.geometry import build_kite

DEFAULT_KITES = [("0.7", "0.9"), ("0.6", "0.75"), ("pi/4", "pi/4"), ("pi/5", "pi/3")] + list(INDEPENDENT_KITES)


def main():
    ap = argparse.ArgumentParser()
    ap.add_argument("--n-max", type=int, default=40)
    ap.add_argument("--kite", nargs=2, action="append", metavar=("ALPHA", "BETA"),
                    help="repeatable; defaults to a fixed list")
    ap.add_argument("--out", default="-")
    args = ap.parse_args()
    kites = args.kite or DEFAULT_KITES

    fh = sys.stdout if args.out == "-" else open(args.out, "w", newline="")
    w = csv.writer(fh, lineterminator="\n")
    w.writerow(["alpha", "beta", "theta", "n", "p", "touches"])
    for a, b in kites:
        k = build_kite(a, b)
        for th in corpus_directions(a, b):
            t = time.perf_counter()
            prof = directional_complexity(k, th, args.n_max)
            for n, p in enumerate(prof.as_list(), 1):
                w.writerow([a, b, th, n, p, prof.touches])
            print(f"{a:>18} {b:>12} theta={th}: p({args.n_max})={prof[args.n_max]} "
                  f"({time.perf_counter() - t:.2f}s)", file=sys.stderr)
    if fh is not sys.stdout:
        fh.close()


if __name__ == "__main__":
    main()
