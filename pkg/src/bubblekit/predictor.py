"""Predicted blow-up parameters and their balancing-equation residuals.

A scenario lists interior critical points y of K (with Delta K(y) < 0),
simple boundary critical points z of K_1 (with d_nu K(z) > 0) and boundary
clusters (z, m, bbar) with bbar a critical point of the Kirchhoff-Routh
functional at z.  For each eps the leading-order rate laws

    interior:  lambda^2 = -kappa1 Delta K / (K eps)
    boundary:  lambda   =  kappa2 d_nu K / (K eps)

fix the rates, the cluster offsets are rescaled copies of bbar, and the
gluing coefficients solve lambda^{-eps(n-2)/2} alpha^{4/(n-2)} K(a) = 1.
``balancing_residual`` then evaluates the full left-hand sides of the rate
equations (E) and the position equations (F) at the predicted parameters.
"""
from __future__ import annotations

import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path
from typing import Sequence

import numpy as np

from .bubbles import (
    DEFAULT_TAU,
    BubbleParam,
    d_eps_d_a,
    d_eps_d_lambda,
    green_regular_part,
    interaction_eps,
)
from .config import ConfigError, as_int, as_real, as_vector, check_keys, load_json
from .constants import ConstantsTable, compute_constants
from .curvature import CriticalPointRecord, CurvatureField, refine_critical_point
from .geometry import (
    GeometryError,
    SpherePoint,
    boundary_frame,
    cluster_barycenter,
    coords,
    exp_map,
)
from .vortex import ACCEPT_GRAD, VortexConfiguration, _gradient, newton
from .vortex import _workers as worker_count

DEFAULT_COMPARABLE_RATIO = 1e3
RATIO_FLOOR = 1e-12


# --- scenario ---------------------------------------------------------------


@dataclass(frozen=True, eq=False)
class Cluster:
    z: CriticalPointRecord
    m: int
    bbar: VortexConfiguration

    def __post_init__(self):
        if self.m < 2 or self.bbar.m != self.m:
            raise ValueError(f"cluster needs m >= 2 points matching bbar (m = {self.m}, bbar has {self.bbar.m})")
        g = np.linalg.norm(_gradient(self.bbar.xi, self.bbar.Q, self.bbar.n))
        if not g < ACCEPT_GRAD:
            raise ValueError(f"bbar is not a critical point of the vortex functional (|grad| = {g:.3e})")


@dataclass(frozen=True, eq=False)
class BlowupScenario:
    field: CurvatureField
    interior_points: tuple[CriticalPointRecord, ...] = ()
    simple_boundary_points: tuple[CriticalPointRecord, ...] = ()
    clusters: tuple[Cluster, ...] = ()
    name: str = "scenario"
    tau: float = DEFAULT_TAU
    comparable_ratio: float = DEFAULT_COMPARABLE_RATIO

    def __post_init__(self):
        for r in self.interior_points:
            if r.kind != "interior" or not r.laplacian < 0:
                raise ValueError(f"interior blow-up point needs Delta K < 0, got {r.laplacian!r}")
        for r in list(self.simple_boundary_points) + [c.z for c in self.clusters]:
            if r.kind != "boundary" or not r.normal_derivative > 0:
                raise ValueError(f"boundary blow-up point needs d_nu K > 0, got {r.normal_derivative!r}")
        if not (self.interior_points or self.simple_boundary_points or self.clusters):
            raise ValueError("scenario declares no blow-up points")

    @property
    def n(self) -> int:
        return self.field.n

    @classmethod
    def from_config(cls, doc, *, where: str = "scenario") -> "BlowupScenario":
        check_keys(doc, ["field"], ["name", "interior", "boundary_simple", "clusters", "tau", "comparable_ratio"], where=where)
        field_ = CurvatureField.from_config(doc["field"], where=f"{where}.field")
        n = field_.n

        def point_list(key):
            pts = doc.get(key, [])
            if not isinstance(pts, list):
                raise ConfigError("expected a list of points", path=where, key=key)
            return [as_vector(p, where=where, key=f"{key}[{i}]", length=n + 1) for i, p in enumerate(pts)]

        def refine(x, kind, key):
            try:
                return refine_critical_point(field_, x, kind)
            except (ValueError, GeometryError) as exc:
                raise ConfigError(str(exc), path=where, key=key) from exc

        interior = [refine(x, "interior", f"interior[{i}]") for i, x in enumerate(point_list("interior"))]
        simple = [refine(x, "boundary", f"boundary_simple[{i}]") for i, x in enumerate(point_list("boundary_simple"))]

        clusters = []
        raw = doc.get("clusters", [])
        if not isinstance(raw, list):
            raise ConfigError("expected a list of clusters", path=where, key="clusters")
        for ci, c in enumerate(raw):
            w = f"{where}.clusters[{ci}]"
            check_keys(c, ["z", "m", "bbar"], where=w)
            zrec = refine(as_vector(c["z"], where=w, key="z", length=n + 1), "boundary", f"clusters[{ci}].z")
            m = as_int(c["m"], where=w, key="m")
            if not isinstance(c["bbar"], list) or len(c["bbar"]) != m:
                raise ConfigError(f"bbar must list m = {m} points", path=w, key="bbar")
            frame = boundary_frame(zrec.location)
            rows = []
            for i, b in enumerate(c["bbar"]):
                v = np.array(as_vector(b, where=w, key=f"bbar[{i}]"))
                if v.size == n + 1:
                    v = frame.T @ v  # ambient tangent vector -> intrinsic coordinates
                elif v.size != n - 1:
                    raise ConfigError(f"bbar rows need n-1 = {n - 1} (intrinsic) or n+1 (ambient) entries", path=w, key=f"bbar[{i}]")
                rows.append(v)
            Q = zrec.hessian_tangential
            run = newton(np.array(rows), Q, n)
            if run.outcome != "converged" or np.abs(run.xi - np.array(rows)).max() > 1e-6:
                raise ConfigError("bbar is not (close to) a critical point of the vortex functional", path=w, key="bbar")
            clusters.append(Cluster(zrec, m, VortexConfiguration(zrec.location, run.xi, Q, frame)))

        kw = {}
        if "name" in doc:
            if not isinstance(doc["name"], str):
                raise ConfigError("expected a string", path=where, key="name")
            kw["name"] = doc["name"]
        if "tau" in doc:
            kw["tau"] = as_real(doc["tau"], where=where, key="tau")
        if "comparable_ratio" in doc:
            kw["comparable_ratio"] = as_real(doc["comparable_ratio"], where=where, key="comparable_ratio")
        try:
            return cls(field_, tuple(interior), tuple(simple), tuple(clusters), **kw)
        except ValueError as exc:
            raise ConfigError(str(exc), path=where) from exc

    @classmethod
    def from_json(cls, path: str | Path) -> "BlowupScenario":
        return cls.from_config(load_json(path), where=str(path))


# --- rate laws ----------------------------------------------------------------


def _table(n: int, constants: ConstantsTable | None) -> ConstantsTable:
    return constants if constants is not None else compute_constants(n)


def predict_interior_lambda(record: CriticalPointRecord, eps: float, constants: ConstantsTable | None = None) -> float:
    if record.laplacian is None or not record.laplacian < 0:
        raise ValueError(f"interior rate law needs Delta K < 0, got {record.laplacian!r}")
    if not eps > 0:
        raise ValueError("eps must be > 0")
    k1 = _table(record.location.dim, constants).kappa1
    return math.sqrt(-k1 * record.laplacian / (record.value * eps))


def predict_boundary_lambda(record: CriticalPointRecord, eps: float, constants: ConstantsTable | None = None) -> float:
    if record.normal_derivative is None or not record.normal_derivative > 0:
        raise ValueError(f"boundary rate law needs d_nu K > 0, got {record.normal_derivative!r}")
    if not eps > 0:
        raise ValueError("eps must be > 0")
    k2 = _table(record.location.dim, constants).kappa2
    return k2 * record.normal_derivative / (record.value * eps)


def predict_alpha(param: BubbleParam, field: CurvatureField, eps: float) -> float:
    """Exact zero of 1 - lambda^{-eps(n-2)/2} alpha^{4/(n-2)} K(a)."""
    n = field.n
    return (param.lam ** (eps * (n - 2) / 2) / field.value(param.a)) ** ((n - 2) / 4)


def cluster_length(record: CriticalPointRecord, eps: float, constants: ConstantsTable | None = None) -> float:
    """Physical length of one unit of bbar at this eps.

    a_i - z ~ ell * bbar_i with ell = kappa3 eps^{(n-2)/n} K^{(n-1)/n} / (d_nu K)^{(n-2)/n}.
    """
    n = record.location.dim
    s = _table(n, constants).cluster_scale
    return s * eps ** ((n - 2) / n) * record.value ** ((n - 1) / n) / record.normal_derivative ** ((n - 2) / n)


def predict_cluster_offsets(cluster: Cluster, eps: float, constants: ConstantsTable | None = None) -> np.ndarray:
    """Ambient tangent offsets v_i at z, shape (m, n+1)."""
    ell = cluster_length(cluster.z, eps, constants)
    return (cluster.bbar.frame @ cluster.bbar.xi.T).T * ell


def predict_cluster_positions(cluster: Cluster, eps: float, constants: ConstantsTable | None = None) -> list[SpherePoint]:
    z = cluster.z.location
    out = []
    for v in predict_cluster_offsets(cluster, eps, constants):
        if np.linalg.norm(v) >= math.pi:
            raise GeometryError(f"cluster offset |v| = {np.linalg.norm(v):.3g} >= pi at eps = {eps:g}")
        out.append(exp_map(z, v))
    return out


def recover_bbar(cluster: Cluster, points: Sequence[SpherePoint], eps: float, constants: ConstantsTable | None = None) -> np.ndarray:
    """Forward rescaling b_i = (a_i - <a_i, z> z) / ell in intrinsic coordinates."""
    z = cluster.z.location.coords
    ell = cluster_length(cluster.z, eps, constants)
    P = np.array([coords(p) for p in points])
    T = P - np.outer(P @ z, z)
    return (T @ cluster.bbar.frame) / ell


def chart_correction(cluster: Cluster, eps: float, constants: ConstantsTable | None = None) -> np.ndarray:
    """Exact difference recover_bbar - bbar caused by the exponential chart.

    The projection of exp_z(v) is sin|v| v/|v|, so b_i = bbar_i sin|v_i|/|v_i|,
    a relative change of order |v|^2 = O(eps^{2(n-2)/n}).
    """
    V = predict_cluster_offsets(cluster, eps, constants)
    t = np.linalg.norm(V, axis=1)
    sinc = np.where(t > 0, np.sin(t) / np.where(t > 0, t, 1.0), 1.0)
    return cluster.bbar.xi * (sinc - 1.0)[:, None]


# --- predictions ----------------------------------------------------------------


@dataclass(frozen=True, eq=False)
class Prediction:
    eps: float
    bubbles: tuple[BubbleParam, ...]
    kinds: tuple[str, ...]  # interior | boundary | cluster
    cluster_of: tuple[int | None, ...]
    mu: tuple[float, ...]
    cluster_offsets: tuple[np.ndarray, ...]
    chart_corrections: tuple[float, ...]
    tau: float = DEFAULT_TAU

    def neighborhood_flags(self) -> dict[str, bool]:
        """Conditions of the neighborhood at infinity, reported not enforced."""
        lam_ok = all(b.lam > 1 / self.tau for b in self.bubbles)
        log_ok = all(self.eps * math.log(b.lam) <= self.tau for b in self.bubbles)
        N = len(self.bubbles)
        inter = [interaction_eps(self.bubbles[i], self.bubbles[j]) for i in range(N) for j in range(i + 1, N)]
        return {"lambda_large": lam_ok, "eps_log_lambda_small": log_ok, "interactions_small": all(e < self.tau for e in inter)}


def predict(scenario: BlowupScenario, eps: float, constants: ConstantsTable | None = None) -> Prediction:
    n = scenario.n
    T = _table(n, constants)
    bubbles, kinds, owner, offsets, corr = [], [], [], [], []

    def add(a, lam, kind, ci=None):
        p = BubbleParam(a, lam)
        bubbles.append(BubbleParam(a, lam, predict_alpha(p, scenario.field, eps)))
        kinds.append(kind)
        owner.append(ci)

    # boundary bubbles first so that indices 0..q-1 are the boundary ones
    for r in scenario.simple_boundary_points:
        add(r.location, predict_boundary_lambda(r, eps, T), "boundary")
    for ci, c in enumerate(scenario.clusters):
        lam = predict_boundary_lambda(c.z, eps, T)
        for a in predict_cluster_positions(c, eps, T):
            add(a, lam, "cluster", ci)
        offsets.append(predict_cluster_offsets(c, eps, T))
        corr.append(float(np.abs(chart_correction(c, eps, T)).max()))
    for r in scenario.interior_points:
        add(r.location, predict_interior_lambda(r, eps, T), "interior")
    mu = tuple(b.lam if b.boundary_flag else b.lam**2 for b in bubbles)
    return Prediction(eps, tuple(bubbles), tuple(kinds), tuple(owner), mu, tuple(offsets), tuple(corr), scenario.tau)


# --- mu ordering ------------------------------------------------------------------


@dataclass(frozen=True)
class MuPartition:
    mu: tuple[float, ...]  # ascending
    order: tuple[int, ...]  # bubble index of each entry of mu
    I_b: tuple[int, ...]
    I_in: tuple[int, ...]
    classes: tuple[tuple[int, ...], ...]
    ratio: float


def mu_partition(bubbles: Sequence[BubbleParam], ratio: float = DEFAULT_COMPARABLE_RATIO) -> MuPartition:
    """mu = lambda (boundary) or lambda^2 (interior); comparable classes by ratio.

    A class starts at its smallest mu and absorbs every following mu within
    ``ratio`` of it.
    """
    if not bubbles:
        raise ValueError("mu_partition needs at least one bubble")
    mu = [b.lam if b.boundary_flag else b.lam**2 for b in bubbles]
    order = sorted(range(len(mu)), key=lambda i: (mu[i], i))
    classes, cur, base = [], [], None
    for i in order:
        if base is None or mu[i] / base <= ratio:
            base = mu[i] if base is None else base
            cur.append(i)
        else:
            classes.append(tuple(cur))
            cur, base = [i], mu[i]
    classes.append(tuple(cur))
    return MuPartition(
        mu=tuple(mu[i] for i in order),
        order=tuple(order),
        I_b=tuple(i for i, b in enumerate(bubbles) if b.boundary_flag),
        I_in=tuple(i for i, b in enumerate(bubbles) if not b.boundary_flag),
        classes=tuple(classes),
        ratio=ratio,
    )


# --- residuals --------------------------------------------------------------------


@dataclass(frozen=True)
class IndexResidual:
    index: int
    kind: str
    leading_E: float
    residual_E: float
    leading_F: float
    residual_F: float
    theoretical_remainder: float

    @property
    def ratio_E(self) -> float:
        return self.residual_E / self.leading_E if self.leading_E > 0 else 0.0

    @property
    def ratio_F(self) -> float:
        return self.residual_F / self.leading_F if self.leading_F > 0 else 0.0

    @property
    def ratio(self) -> float:
        return max(self.ratio_E, self.ratio_F)

    @property
    def leading_term(self) -> float:
        return max(self.leading_E, self.leading_F)


@dataclass(frozen=True)
class BarycentricResidual:
    cluster: int
    value: float
    remainder_scale: float


@dataclass(frozen=True)
class ResidualReport:
    eps: float
    rows: tuple[IndexResidual, ...]
    barycentric: tuple[BarycentricResidual, ...] = ()

    @property
    def ratios(self) -> list[float]:
        return [r.ratio for r in self.rows]

    @property
    def max_ratio(self) -> float:
        return max(self.ratios) if self.rows else 0.0


def _log_inv(e: float) -> float:
    return math.log(1.0 / e) if e > 0 else 0.0


def balancing_residual(
    scenario: BlowupScenario, prediction: Prediction, constants: ConstantsTable | None = None
) -> ResidualReport:
    """Evaluate the left-hand sides of (E_i), (F_i) at the predicted parameters.

    Boundary i:
        E = -c2/2 sum_{j in B, j != i} alpha_j lam_i d eps_ij/d lam_i
            - alpha_i/K(a_i) [c3/lam_i d_nu K(a_i) - c5 K(a_i) eps]
        F = -c2/2 sum_{j in B, j != i} alpha_j (1/lam_i) d eps_ij/d a_i
            - alpha_i/K(a_i) c6/lam_i grad K_1(a_i)
    Interior i:
        E = -c2 sum_{j != i} alpha_j lam_i d eps_ij/d lam_i
            + c2 (n-2)/2 sum_{j interior} alpha_j H(a_i, a_j)/(lam_i lam_j)^{(n-2)/2}
            + alpha_i (c4 Delta K(a_i)/(lam_i^2 K(a_i)) + 2 c5 eps)
        F = |grad K(a_i)| / lam_i
    The interior H sum includes j = i: the self term is the boundary
    correction of an isolated interior bubble.  ``leading`` is the largest
    magnitude among the individual terms of the equation.
    """
    n = scenario.n
    K = scenario.field
    T = _table(n, constants)
    c2, c3, c4, c5, c6 = T.c2, T.c3, T.c4, T.c5, T.c6
    eps = prediction.eps
    B = prediction.bubbles
    N = len(B)
    bnd = [i for i in range(N) if B[i].boundary_flag]
    inn = [i for i in range(N) if not B[i].boundary_flag]
    E = np.zeros((N, N))
    for i in range(N):
        for j in range(i + 1, N):
            E[i, j] = E[j, i] = interaction_eps(B[i], B[j])
    pairs = [E[k, j] for k in range(N) for j in range(N) if k != j]
    R1 = sum(e ** (n / (n - 2)) * _log_inv(e) for e in pairs)
    R2 = R1 + sum(
        math.log(B[k].lam * B[k].dist_to_boundary) / (B[k].lam * B[k].dist_to_boundary) ** n
        for k in inn
        if B[k].lam * B[k].dist_to_boundary > 1
    )

    rows = []
    for i in range(N):
        p = B[i]
        a = p.a
        if p.boundary_flag:
            t_int = [-c2 / 2 * B[j].alpha * d_eps_d_lambda(p, B[j]) for j in bnd if j != i]
            Ka = K.value(a)
            t_nu = -p.alpha / Ka * c3 / p.lam * K.normal_derivative(a)
            t_eps = p.alpha * c5 * eps
            terms = t_int + [t_nu, t_eps]
            res_E = abs(sum(terms))
            f_int = [-c2 / 2 * B[j].alpha * d_eps_d_a(p, B[j]).vec / p.lam for j in bnd if j != i]
            f_grad = -p.alpha / Ka * c6 / p.lam * K.boundary_grad(a)
            f_terms = f_int + [f_grad]
            res_F = float(np.linalg.norm(np.sum(f_terms, axis=0)))
            lead_F = max(float(np.linalg.norm(t)) for t in f_terms)
            Ra = R1 + sum(E[i, j] ** ((n + 1) / (n - 2)) * B[j].lam * math.acos(min(1.0, a.coords @ B[j].a.coords)) for j in bnd if j != i)
            rem = 1 / p.lam**2 + sum(E[i, j] for j in inn) + max(R1, Ra)
        else:
            t_int = [-c2 * B[j].alpha * d_eps_d_lambda(p, B[j]) for j in range(N) if j != i]
            t_H = [
                c2 * (n - 2) / 2 * B[j].alpha * green_regular_part(a, B[j].a) / (p.lam * B[j].lam) ** ((n - 2) / 2)
                for j in inn
            ]
            t_K = p.alpha * c4 * K.laplacian(a) / (p.lam**2 * K.value(a))
            t_eps = p.alpha * 2 * c5 * eps
            terms = t_int + t_H + [t_K, t_eps]
            res_E = abs(sum(terms))
            res_F = float(np.linalg.norm(K.grad(a))) / p.lam
            lead_F = res_F
            rem = R2
        rows.append(
            IndexResidual(
                index=i,
                kind=prediction.kinds[i],
                leading_E=max(abs(t) for t in terms),
                residual_E=float(res_E),
                leading_F=lead_F,
                residual_F=res_F,
                theoretical_remainder=float(rem),
            )
        )

    bary = []
    for ci in range(len(scenario.clusters)):
        idx = [i for i in range(N) if prediction.cluster_of[i] == ci]
        bary.append(_barycentric(ci, K, T, B, idx))
    return ResidualReport(eps, tuple(rows), tuple(bary))


def _barycentric(ci: int, K: CurvatureField, T: ConstantsTable, B, idx: list[int]) -> BarycentricResidual:
    """|sum_i alpha_i lam_i F_i . (abar - <a_i, abar> a_i)| over one cluster.

    The identity holds up to two neglected approximations, relative to the
    size of its individual terms: the flat-chart error O(d(a_i, abar)) and
    the far-field error of d eps_ij / d a_i, which carries X^{-n/2} with
    X = s (1 + t), s = lam_i lam_j (1 - cos d_ij) / 2, t = (lam_i/lam_j +
    lam_j/lam_i) / s, so its relative deviation is (1 + t)^{n/2} - 1.
    ``remainder_scale`` is their sum times the sum of the absolute paired
    terms.
    """
    abar = cluster_barycenter([B[i].a for i in idx]).coords
    n = K.n
    total, size, rel = 0.0, 0.0, 0.0
    for i in idx:
        p = B[i]
        w = abar - (p.a.coords @ abar) * p.a.coords
        terms = [-p.alpha / K.value(p.a) * T.c6 * K.boundary_grad(p.a)]
        far = 0.0
        for j in idx:
            if j != i:
                q = B[j]
                terms.append(-T.c2 / 2 * q.alpha * d_eps_d_a(p, q).vec)
                s = 0.5 * p.lam * q.lam * (1.0 - float(p.a.coords @ q.a.coords))
                far = max(far, (1.0 + (p.lam / q.lam + q.lam / p.lam) / s) ** (n / 2) - 1.0)
        paired = [p.alpha * float(t @ w) for t in terms]
        total += sum(paired)
        size += sum(abs(x) for x in paired)
        rel = max(rel, math.acos(min(1.0, float(p.a.coords @ abar))) + far)
    return BarycentricResidual(ci, abs(total), size * rel)


def sweep(scenario: BlowupScenario, eps_list: Sequence[float], constants: ConstantsTable | None = None) -> list[ResidualReport]:
    """Residual reports for each eps, in input order."""
    T = _table(scenario.n, constants)

    def one(e):
        return balancing_residual(scenario, predict(scenario, e, T), T)

    with ThreadPoolExecutor(max_workers=max(1, min(worker_count(), len(eps_list)))) as ex:
        return list(ex.map(one, eps_list))


def decay_factors(ratios: Sequence[float], floor: float = RATIO_FLOOR) -> list[float]:
    """Successive ratio quotients r_{k+1}/r_k; pairs already at the rounding floor count as 0."""
    out = []
    for a, b in zip(ratios, ratios[1:]):
        if b <= floor:
            out.append(0.0)
        elif a <= 0:
            out.append(math.inf)
        else:
            out.append(b / a)
    return out
