"""Decay rate of the cluster balancing residual as a function of the dimension.

Builds the model field K = 1 + 4 x_{n+1} + sum_k q_k x_k^2 with a collinear
three-point cluster at e_1 and measures the max residual ratio over an eps
sweep.  The per-decade factor approaches 10^{-(n-4)/n}: slower than 1/2
for n = 5 and faster for n >= 7.
"""
import argparse

import numpy as np

from bubblekit.curvature import CurvatureField, refine_critical_point
from bubblekit.predictor import BlowupScenario, Cluster, decay_factors, sweep
from bubblekit.vortex import VortexConfiguration, find_critical_points


def scenario(n):
    zero = (0,) * (n + 1)
    terms = [(1.0, zero), (4.0, zero[:-1] + (1,))]
    for k, q in zip(range(1, n), np.linspace(0.5, 1.0, n - 1)):
        p = list(zero)
        p[k] = 2
        terms.append((float(q), tuple(p)))
    K = CurvatureField(n, tuple(terms), 0.5)
    z = refine_critical_point(K, np.eye(n + 1)[0], "boundary")
    Q = z.hessian_tangential
    res = find_critical_points(Q, 3, n, starts=200, seed=0)
    collinear = [p for p in res if np.sort(np.linalg.norm(p.config.xi, axis=1))[0] < 1e-8]
    xi = (collinear or list(res))[0].config.xi
    bbar = VortexConfiguration(z.location, xi, Q)
    return BlowupScenario(K, clusters=(Cluster(z, 3, bbar),), name=f"cluster_n{n}")


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--dims", default="5,6,7,8")
    ap.add_argument("--eps-list", default="1e-2,1e-3,1e-4,1e-5,1e-6")
    args = ap.parse_args()
    eps = [float(t) for t in args.eps_list.split(",")]
    print("n,predicted_factor,measured_factors")
    for n in (int(t) for t in args.dims.split(",")):
        ratios = [R.max_ratio for R in sweep(scenario(n), eps)]
        f = decay_factors(ratios)
        print(f"{n},{10 ** (-(n - 4) / n):.3f},{' '.join(f'{x:.3f}' for x in f)}")


if __name__ == "__main__":
    main()
