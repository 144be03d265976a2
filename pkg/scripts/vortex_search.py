"""Multistart search for critical points of the Kirchhoff-Routh functional.

Prints one row per critical point orbit for a few model Hessians Q:
isotropic, anisotropic, indefinite and negative definite.
"""
import argparse

import numpy as np

from bubblekit.vortex import collinear_gamma, find_critical_points, pair_radius


def models(n):
    k = n - 1
    return {
        "isotropic": np.eye(k),
        "anisotropic": np.diag(np.linspace(1.0, 2.5, k)),
        "indefinite": np.diag(np.r_[-1.0, np.linspace(1.0, 2.0, k - 1)]),
        "negative": -np.diag(np.linspace(1.0, 2.0, k)),
    }


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--n", type=int, default=5)
    ap.add_argument("--m-max", type=int, default=4)
    ap.add_argument("--starts", type=int, default=200)
    ap.add_argument("--seed", type=int, default=0)
    args = ap.parse_args()
    n = args.n

    print(f"closed forms (sigma = 1): pair |b|^n = {pair_radius(n, 1.0) ** n:.12g}, collinear gamma^n = {collinear_gamma(n, 1.0) ** n:.12g}")
    print("Q,m,energy,virial_residual,morse_index,nullity,radii")
    for label, Q in models(n).items():
        for m in range(2, args.m_max + 1):
            res = find_critical_points(Q, m, n, starts=args.starts, seed=args.seed)
            if not res:
                print(f"{label},{m},none,,,,{dict(res.diagnostics)}")
            for p in res:
                radii = " ".join(f"{r:.6f}" for r in np.sort(np.linalg.norm(p.config.xi, axis=1)))
                print(f"{label},{m},{p.energy:.12g},{p.virial_residual:.1e},{p.morse_index},{p.nullity},{radii}")


if __name__ == "__main__":
    main()
