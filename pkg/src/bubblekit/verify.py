"""Property checks behind ``bubblekit verify``."""
from __future__ import annotations

import itertools
import math
from dataclasses import dataclass

import numpy as np

from .bubbles import BubbleParam, far_field_ratio
from .constants import closed_form, compute_constants
from .geometry import SpherePoint, geodesic_distance
from .predictor import (
    BlowupScenario,
    balancing_residual,
    chart_correction,
    decay_factors,
    predict,
    predict_cluster_positions,
    recover_bbar,
)
from .vortex import collinear_gamma, find_critical_points, pair_radius

SWEEP = (1e-2, 1e-3, 1e-4, 1e-5)


@dataclass(frozen=True)
class Check:
    name: str
    value: float
    threshold: float
    ok: bool


def _le(name: str, value: float, threshold: float) -> Check:
    return Check(name, float(value), threshold, bool(value <= threshold))


def constants_checks() -> list[Check]:
    worst, kmin = 0.0, math.inf
    for n in range(5, 11):
        T = compute_constants(n)
        ref = closed_form(n)
        for k in ("c2", "c3", "c4", "c6"):
            worst = max(worst, abs(getattr(T, k) / ref[k] - 1))
        kmin = min(kmin, T.kappa1, T.kappa2, T.kappa3)
    return [_le("constants_beta_oracle_rel_err", worst, 1e-8), Check("constants_kappa_min", kmin, 0.0, kmin > 0)]


def vortex_checks(seed: int, starts: int) -> list[Check]:
    n, sigma = 5, 1.0
    Q = sigma * np.eye(n - 1)
    pair = find_critical_points(Q, 2, n, starts, seed)
    r = pair_radius(n, sigma)
    err_pair = min((abs(np.linalg.norm(p.config.xi[0]) - r) for p in pair), default=math.inf)
    triple = find_critical_points(Q, 3, n, starts, seed)
    g = collinear_gamma(n, sigma)
    err_tri = math.inf
    for p in triple:
        norms = np.sort(np.linalg.norm(p.config.xi, axis=1))
        if norms[0] < 1e-8:
            err_tri = min(err_tri, abs(norms[2] ** n - g**n))
    vir = max((abs(p.virial_residual) for p in itertools.chain(pair, triple)), default=math.inf)
    rng = np.random.default_rng(seed)
    found = 0
    for m in (2, 3):
        A = rng.normal(size=(n - 1, n - 1))
        found += len(find_critical_points(-(A @ A.T + 0.1 * np.eye(n - 1)), m, n, min(starts, 50), seed))
    return [
        _le("vortex_pair_radius_err", err_pair, 1e-10),
        _le("vortex_collinear_gamma_n_err", err_tri, 1e-10),
        _le("vortex_virial_max", vir, 1e-9),
        _le("vortex_negative_definite_count", found, 0),
    ]


def interaction_checks() -> list[Check]:
    n = 5
    worst = 0.0
    for lam, d in ((1e4, 0.2), (1e5, 0.05), (3e5, 0.01)):
        a = SpherePoint(np.eye(n + 1)[0], on_boundary=True)
        b = SpherePoint(np.r_[math.cos(d), math.sin(d), np.zeros(n - 1)], on_boundary=True)
        worst = max(worst, abs(far_field_ratio(BubbleParam(a, lam), BubbleParam(b, lam)) - 1))
    return [_le("far_field_ratio_err", worst, 1e-2)]


def scenario_checks(path: str) -> list[Check]:
    S = BlowupScenario.from_json(path)
    tag = S.name
    reports = [balancing_residual(S, predict(S, e)) for e in SWEEP]
    out = [_le(f"{tag}_residual_decay_factor", max(decay_factors([R.max_ratio for R in reports])), 0.5)]
    for ci, c in enumerate(S.clusters):
        n = S.n
        scaled, roundtrip, height = [], 0.0, 0.0
        for e in SWEEP:
            pts = predict_cluster_positions(c, e)
            scaled.append([geodesic_distance(p, q) / e ** ((n - 2) / n) for p, q in itertools.combinations(pts, 2)])
            b = recover_bbar(c, pts, e)
            roundtrip = max(roundtrip, float(np.abs(b - (c.bbar.xi + chart_correction(c, e))).max()))
            height = max(height, max(abs(p.height) for p in pts))
        scaled = np.array(scaled)
        spread = float((np.abs(scaled / scaled[0] - 1)).max())
        bary = max(r.barycentric[ci].value / r.barycentric[ci].remainder_scale for r in reports)
        out += [
            _le(f"{tag}_c{ci}_distance_scaling", spread, 1e-3),
            _le(f"{tag}_c{ci}_bbar_roundtrip", roundtrip, 1e-10),
            _le(f"{tag}_c{ci}_boundary_height", height, 1e-10),
            _le(f"{tag}_c{ci}_barycentric_over_remainder", bary, 1.0),
        ]
    return out


def run_checks(configs: list[str], seed: int = 0, starts: int = 200) -> list[Check]:
    checks = constants_checks() + vortex_checks(seed, starts) + interaction_checks()
    for c in configs:
        checks += scenario_checks(c)
    return checks
