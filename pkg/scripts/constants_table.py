"""Tabulate c0, c2..c6 and kappa1..3 for a range of dimensions, with oracle errors."""
import argparse
import csv
import sys

from bubblekit.constants import closed_form, compute_constants


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--n-min", type=int, default=5)
    ap.add_argument("--n-max", type=int, default=10)
    ap.add_argument("--tol", type=float, default=1e-10)
    args = ap.parse_args()

    w = csv.writer(sys.stdout, lineterminator="\n")
    w.writerow(["n", "name", "value", "error_estimate", "oracle_rel_err"])
    for n in range(args.n_min, args.n_max + 1):
        T = compute_constants(n, args.tol)
        ref = closed_form(n)
        for name, value, err in T.rows():
            rel = abs(value / ref[name] - 1) if name in ref else ""
            w.writerow([n, name, format(value, ".17g"), format(err, ".3e"), rel if rel == "" else format(rel, ".2e")])


if __name__ == "__main__":
    main()
