"""Fit the bound constants on the independent-kite corpus and write them as JSON.

    python3 scripts/calibrate_constants.py [--out constants.json] [--horizon 10000]

The printed dict is what goes into ``kitecomplexity.config.CALIBRATED``.
"""
import argparse
import json
import time

from kitecomplexity.calibration import CALIBRATION_MS, HORIZON, run_calibration, constants_literal


def main():
    ap = argparse.ArgumentParser()
    ap.add_argument("--out", default="constants.json")
    ap.add_argument("--horizon", type=int, default=HORIZON)
    ap.add_argument("--ms", type=int, nargs="+", default=list(CALIBRATION_MS))
    args = ap.parse_args()

    t = time.perf_counter()
    consts = run_calibration(ms=tuple(args.ms), horizon=args.horizon)
    lit = constants_literal(consts)
    doc = dict(lit, provenance=consts.provenance)
    with open(args.out, "w") as fh:
        json.dump(doc, fh, indent=1, sort_keys=True)
        fh.write("\n")
    print(json.dumps(lit, indent=1))
    print(f"wrote {args.out} in {time.perf_counter() - t:.1f}s")


if __name__ == "__main__":
    main()
