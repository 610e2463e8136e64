"""Estimate F(eps) for one angle pair over an eps grid and write the TSV table.

    python3 scripts/net_function_table.py "sqrt(2)/2" "sqrt(3)/3" --eps 0.5 0.25 0.1
"""
import argparse
import sys

from kitecomplexity.diophantine import NetBudget, estimate_net_function, write_f_table


def main():
    ap = argparse.ArgumentParser()
    ap.add_argument("alpha")
    ap.add_argument("beta")
    ap.add_argument("--eps", type=float, nargs="+", default=[0.5, 0.25, 0.1, 0.05])
    ap.add_argument("--max-size", type=int, default=10)
    ap.add_argument("--max-animals", type=int, default=200_000)
    ap.add_argument("--out", default="-")
    args = ap.parse_args()

    budget = NetBudget(max_size=args.max_size, max_animals=args.max_animals)
    ests = []
    for e in args.eps:
        est = estimate_net_function(args.alpha, args.beta, e, budget, raise_on_budget=False)
        hi = est.upper_bound if est.upper_bound is not None else "?"
        print(f"eps={e}: {est.lower_bound} <= F <= {hi} ({est.explored} sets explored)", file=sys.stderr)
        ests.append(est)
    text = write_f_table(ests, args.alpha, args.beta)
    if args.out == "-":
        sys.stdout.write(text)
    else:
        with open(args.out, "w") as fh:
            fh.write(text)


if __name__ == "__main__":
    main()
