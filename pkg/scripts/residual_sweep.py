"""Balancing residual ratios and their decay per decade of eps for the shipped scenarios."""
import argparse
from importlib import resources

from bubblekit.predictor import BlowupScenario, decay_factors, sweep

SHIPPED = ("interior.json", "boundary_simple.json", "cluster.json")


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("configs", nargs="*", help="scenario JSON files (default: the shipped ones)")
    ap.add_argument("--eps-list", default="1e-2,1e-3,1e-4,1e-5,1e-6")
    args = ap.parse_args()
    eps = [float(t) for t in args.eps_list.split(",")]
    paths = args.configs or [str(resources.files("bubblekit") / "data" / s) for s in SHIPPED]

    for path in paths:
        S = BlowupScenario.from_json(path)
        reports = sweep(S, eps)
        print(f"== {S.name} (n = {S.n})")
        print("eps,index,type,ratio_E,ratio_F,residual_over_remainder")
        for R in reports:
            for r in R.rows:
                rem = r.residual_E / r.theoretical_remainder if r.theoretical_remainder else float("nan")
                print(f"{R.eps:g},{r.index},{r.kind},{r.ratio_E:.4e},{r.ratio_F:.4e},{rem:.4e}")
            for b in R.barycentric:
                print(f"{R.eps:g},cluster {b.cluster},barycentric,{b.value:.4e},,{b.value / b.remainder_scale:.4e}")
        factors = decay_factors([R.max_ratio for R in reports])
        print("decay factors per decade:", " ".join(f"{f:.3f}" for f in factors))


if __name__ == "__main__":
    main()
