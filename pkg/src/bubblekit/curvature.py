"""Prescribed curvature K as an ambient polynomial restricted to S^n_+.

All derivatives are intrinsic to the round sphere and exact: the polynomial
is differentiated term by term in R^{n+1} and then projected.

Conventions
-----------
* ``grad`` / ``hess`` are the Riemannian gradient and Hessian of K on S^n,
  returned as ambient objects (a vector tangent at x, and a symmetric
  (n+1)x(n+1) matrix acting on T_x S^n).
* K_1 is the restriction of K to the boundary sphere {x_{n+1} = 0}.
* The normal derivative uses the *inward* unit normal e_{n+1} (direction of
  increasing height), so blow-up points of boundary type have
  ``normal_derivative > 0``.
"""
from __future__ import annotations

import logging
from dataclasses import dataclass, field
from pathlib import Path
from typing import Literal

import numpy as np

from .config import ConfigError, as_int, as_real, as_vector, check_keys, load_json
from .geometry import (
    BOUNDARY_TOL,
    GeometryError,
    SpherePoint,
    boundary_frame,
    coords,
    geodesic_distance,
    interior_frame,
    sample_half_sphere,
)

log = logging.getLogger(__name__)

GRAD_TOL = 1e-9
SINGULAR_TOL = 1e-8
DEDUP_TOL = 1e-6


class _Poly:
    """Sparse polynomial sum_t c_t prod_k x_k^{m_tk}."""

    __slots__ = ("coef", "powers")

    def __init__(self, coef, powers, dim: int | None = None):
        self.coef = np.asarray(coef, dtype=float)
        p = np.asarray(powers, dtype=np.int64)
        self.powers = p.reshape(len(self.coef), dim if dim is not None else p.shape[-1])

    def __call__(self, x: np.ndarray) -> float:
        if self.coef.size == 0:
            return 0.0
        return float(self.coef @ np.prod(x[None, :] ** self.powers, axis=1))

    def derivative(self, k: int) -> "_Poly":
        m = self.powers[:, k]
        keep = m > 0
        p = self.powers[keep].copy()
        p[:, k] -= 1
        return _Poly(self.coef[keep] * m[keep], p, self.powers.shape[1])


@dataclass(frozen=True, eq=False)
class CurvatureField:
    """K(x) = sum coeff * prod x_k^{m_k} on the closed half-sphere S^n_+."""

    n: int
    terms: tuple[tuple[float, tuple[int, ...]], ...]
    positivity_floor: float = 1e-3
    _poly: _Poly = field(init=False, repr=False)
    _grad: tuple = field(init=False, repr=False)
    _hess: tuple = field(init=False, repr=False)

    def __post_init__(self):
        if self.n < 5:
            raise ValueError(f"dimension n = {self.n} must be >= 5")
        if not self.positivity_floor > 0:
            raise ValueError("positivity_floor must be > 0")
        terms = tuple((float(c), tuple(int(m) for m in p)) for c, p in self.terms)
        for _, p in terms:
            if len(p) != self.n + 1:
                raise ValueError(f"multi-index {p} must have length n+1 = {self.n + 1}")
            if any(m < 0 for m in p):
                raise ValueError(f"multi-index {p} has a negative power")
        object.__setattr__(self, "terms", terms)
        coef = [c for c, _ in terms]
        powers = [p for _, p in terms] or np.zeros((0, self.n + 1), dtype=np.int64)
        poly = _Poly(coef, powers)
        d = self.n + 1
        grad = tuple(poly.derivative(k) for k in range(d))
        hess = tuple(tuple(grad[i].derivative(j) for j in range(d)) for i in range(d))
        object.__setattr__(self, "_poly", poly)
        object.__setattr__(self, "_grad", grad)
        object.__setattr__(self, "_hess", hess)

    # --- construction -----------------------------------------------------

    @classmethod
    def from_config(cls, doc, *, where: str = "field", validate: bool = True) -> "CurvatureField":
        check_keys(doc, ["n", "terms"], ["positivity_floor"], where=where)
        n = as_int(doc["n"], where=where, key="n")
        if n < 5:
            raise ConfigError(f"n = {n} must be >= 5", path=where, key="n")
        if not isinstance(doc["terms"], list) or not doc["terms"]:
            raise ConfigError("terms must be a nonempty list", path=where, key="terms")
        terms = []
        for i, t in enumerate(doc["terms"]):
            w = f"{where}.terms[{i}]"
            check_keys(t, ["coeff", "powers"], where=w)
            c = as_real(t["coeff"], where=w, key="coeff")
            if not isinstance(t["powers"], list) or len(t["powers"]) != n + 1:
                raise ConfigError(f"powers must be a list of n+1 = {n + 1} integers", path=w, key="powers")
            p = [as_int(m, where=w, key=f"powers[{j}]") for j, m in enumerate(t["powers"])]
            if any(m < 0 for m in p):
                raise ConfigError("powers must be nonnegative", path=w, key="powers")
            terms.append((c, tuple(p)))
        floor = as_real(doc.get("positivity_floor", 1e-3), where=where, key="positivity_floor")
        if floor <= 0:
            raise ConfigError("positivity_floor must be > 0", path=where, key="positivity_floor")
        K = cls(n, tuple(terms), floor)
        if validate:
            ok, kmin = K.check_positivity()
            if not ok:
                raise ConfigError(
                    f"K falls to {kmin:.6g} below positivity_floor {floor:.6g} on the half-sphere",
                    path=where,
                    key="terms",
                )
        return K

    @classmethod
    def from_json(cls, path: str | Path, validate: bool = True) -> "CurvatureField":
        return cls.from_config(load_json(path), where=str(path), validate=validate)

    def to_config(self) -> dict:
        return {
            "n": self.n,
            "terms": [{"coeff": c, "powers": list(p)} for c, p in self.terms],
            "positivity_floor": self.positivity_floor,
        }

    def check_positivity(self, samples: int = 16384, seed: int = 0) -> tuple[bool, float]:
        """K >= positivity_floor on a scrambled-Sobol sample of the closed half-sphere."""
        pts = sample_half_sphere(self.n, samples, seed=seed)
        # boundary points are where half-sphere minima often sit
        pts = np.vstack([pts, sample_half_sphere(self.n, samples // 4, seed=seed + 1, boundary=True)])
        vals = np.prod(pts[:, None, :] ** self._poly.powers[None, :, :], axis=2) @ self._poly.coef
        kmin = float(vals.min())
        return kmin >= self.positivity_floor, kmin

    # --- ambient derivatives ----------------------------------------------

    def value(self, x) -> float:
        return self._poly(coords(x))

    def ambient_grad(self, x) -> np.ndarray:
        xv = coords(x)
        return np.array([g(xv) for g in self._grad])

    def ambient_hess(self, x) -> np.ndarray:
        xv = coords(x)
        d = self.n + 1
        H = np.empty((d, d))
        for i in range(d):
            for j in range(i, d):
                H[i, j] = H[j, i] = self._hess[i][j](xv)
        return H

    # --- intrinsic derivatives on S^n -------------------------------------

    def grad(self, x) -> np.ndarray:
        xv = coords(x)
        g = self.ambient_grad(xv)
        return g - (g @ xv) * xv

    def hess(self, x) -> np.ndarray:
        """Riemannian Hessian P D^2F P - <x, DF> P with P = I - x x^T."""
        xv = coords(x)
        P = np.eye(xv.size) - np.outer(xv, xv)
        H = P @ self.ambient_hess(xv) @ P - (self.ambient_grad(xv) @ xv) * P
        return 0.5 * (H + H.T)

    def laplacian(self, x) -> float:
        """Laplace-Beltrami: Delta U - d_rr U - n d_r U at r = 1."""
        xv = coords(x)
        H = self.ambient_hess(xv)
        return float(np.trace(H) - xv @ H @ xv - self.n * (self.ambient_grad(xv) @ xv))

    # --- boundary quantities ----------------------------------------------

    def _require_boundary(self, z) -> np.ndarray:
        zv = coords(z)
        if abs(zv[-1]) > BOUNDARY_TOL:
            raise GeometryError(f"point with height {zv[-1]!r} is not on the boundary")
        return zv

    def boundary_grad(self, z) -> np.ndarray:
        """grad K_1(z), tangent to the boundary sphere."""
        zv = self._require_boundary(z)
        g = self.ambient_grad(zv)
        g = g - (g @ zv) * zv
        g[-1] = 0.0
        return g

    def boundary_hess(self, z) -> np.ndarray:
        """D^2 K_1(z) as an ambient matrix acting on T_z(boundary sphere)."""
        zv = self._require_boundary(z)
        d = zv.size
        P = np.eye(d) - np.outer(zv, zv)
        P[-1, :] = 0.0
        P[:, -1] = 0.0
        H = P @ self.ambient_hess(zv) @ P - (self.ambient_grad(zv) @ zv) * P
        return 0.5 * (H + H.T)

    def boundary_hess_frame(self, z, frame: np.ndarray | None = None) -> np.ndarray:
        """D^2 K_1(z) in the intrinsic coordinates of ``frame`` (default boundary_frame(z))."""
        F = boundary_frame(z) if frame is None else frame
        Q = F.T @ self.boundary_hess(z) @ F
        return 0.5 * (Q + Q.T)

    def normal_derivative(self, z) -> float:
        """Derivative of K along the inward normal e_{n+1} at a boundary point."""
        zv = self._require_boundary(z)
        return float(self.ambient_grad(zv)[-1])


# spec-facing aliases
def eval_K(field: CurvatureField, x) -> float:
    return field.value(x)


def grad_K(field: CurvatureField, x) -> np.ndarray:
    return field.grad(x)


def hess_K(field: CurvatureField, x) -> np.ndarray:
    return field.hess(x)


def laplace_beltrami_K(field: CurvatureField, x) -> float:
    return field.laplacian(x)


def normal_derivative(field: CurvatureField, z) -> float:
    return field.normal_derivative(z)


# --- critical points -------------------------------------------------------

Kind = Literal["interior", "boundary"]


@dataclass(frozen=True, eq=False)
class CriticalPointRecord:
    location: SpherePoint
    kind: Kind
    value: float
    laplacian: float | None
    normal_derivative: float | None
    hessian_tangential: np.ndarray
    grad_norm: float

    @property
    def min_singular(self) -> float:
        return float(np.min(np.abs(np.linalg.eigvalsh(self.hessian_tangential))))

    def check(self, grad_tol: float = GRAD_TOL, singular_tol: float = SINGULAR_TOL) -> None:
        if self.grad_norm >= grad_tol:
            raise ValueError(f"gradient norm {self.grad_norm:.3e} at critical point exceeds {grad_tol:g}")
        if self.min_singular <= singular_tol:
            raise ValueError(f"Hessian is degenerate (min singular value {self.min_singular:.3e})")


def critical_record(field: CurvatureField, x, kind: Kind) -> CriticalPointRecord:
    """Evaluate the record data at a (putative) critical point."""
    if kind == "boundary":
        z = x if isinstance(x, SpherePoint) and x.on_boundary else SpherePoint.from_vector(coords(x), on_boundary=True)
        H = field.boundary_hess_frame(z)
        return CriticalPointRecord(
            location=z,
            kind="boundary",
            value=field.value(z),
            laplacian=None,
            normal_derivative=field.normal_derivative(z),
            hessian_tangential=H,
            grad_norm=float(np.linalg.norm(field.boundary_grad(z))),
        )
    y = x if isinstance(x, SpherePoint) else SpherePoint(coords(x))
    F = interior_frame(y)
    H = F.T @ field.hess(y) @ F
    return CriticalPointRecord(
        location=y,
        kind="interior",
        value=field.value(y),
        laplacian=field.laplacian(y),
        normal_derivative=None,
        hessian_tangential=0.5 * (H + H.T),
        grad_norm=float(np.linalg.norm(field.grad(y))),
    )


def _newton_on_sphere(grad, hess, frame, x0, *, boundary: bool, maxiter: int = 100, tol: float = 1e-13):
    """Damped Riemannian Newton for grad = 0 on a unit sphere.

    Returns (x, grad_norm, converged).
    """
    x = np.array(x0, dtype=float)
    g = grad(x)
    gn = np.linalg.norm(g)
    for _ in range(maxiter):
        if gn < tol:
            break
        F = frame(x)
        H = F.T @ hess(x) @ F
        step = F @ np.linalg.lstsq(H, -F.T @ g, rcond=None)[0]
        t = 1.0
        while True:
            s = t * step
            ns = np.linalg.norm(s)
            if ns > 0.5:
                s *= 0.5 / ns
                ns = 0.5
            xn = np.cos(ns) * x + (np.sin(ns) / ns) * s if ns > 0 else x.copy()
            if boundary:
                xn[-1] = 0.0
            xn /= np.linalg.norm(xn)
            gnew = grad(xn)
            gnn = np.linalg.norm(gnew)
            if gnn < (1.0 - 1e-4 * t) * gn or t < 1e-10:
                break
            t *= 0.5
        if t < 1e-10 and gnn >= gn:
            break
        x, g, gn = xn, gnew, gnn
    return x, float(gn), bool(gn < GRAD_TOL)


class CriticalPointList(list):
    """List of CriticalPointRecord plus the degenerate points met along the way."""

    def __init__(self, records=(), degenerate=(), failed: int = 0):
        super().__init__(records)
        self.degenerate: list[tuple[SpherePoint, float]] = list(degenerate)
        self.failed = failed


def _dedup(points: list[np.ndarray]) -> list[np.ndarray]:
    out: list[np.ndarray] = []
    for p in points:
        if all(geodesic_distance(p, q) > DEDUP_TOL for q in out):
            out.append(p)
    return out


def _sort_points(points: list[np.ndarray]) -> list[np.ndarray]:
    if not points:
        return points
    arr = np.round(np.array(points), 8)
    order = np.lexsort(arr.T[::-1])
    return [points[i] for i in order]


def refine_critical_point(field: CurvatureField, x, kind: Kind, max_move: float = 1e-6) -> CriticalPointRecord:
    """Polish a declared critical point by Newton and return its record.

    Raises ValueError when Newton fails, moves the point by more than
    ``max_move``, or the record violates its invariants.
    """
    boundary = kind == "boundary"
    x0 = np.array(coords(x), dtype=float)
    if boundary:
        if abs(x0[-1]) > BOUNDARY_TOL:
            raise ValueError(f"declared boundary point has height {x0[-1]!r}")
        x1, _, ok = _newton_on_sphere(field.boundary_grad, field.boundary_hess, boundary_frame, x0, boundary=True)
    else:
        x1, _, ok = _newton_on_sphere(field.grad, field.hess, interior_frame, x0, boundary=False)
    if not ok:
        raise ValueError(f"Newton did not converge to a critical point near {x0.tolist()}")
    moved = geodesic_distance(x0, x1)
    if moved > max_move:
        raise ValueError(f"declared point {x0.tolist()} is {moved:.3e} away from the nearest critical point")
    rec = critical_record(field, x1, kind)
    rec.check()
    return rec


def find_critical_points(
    field: CurvatureField,
    kind: Kind,
    starts: int | None = None,
    seed: int = 0,
    *,
    singular_tol: float = SINGULAR_TOL,
) -> CriticalPointList:
    """Critical points of K (interior) or K_1 (boundary) by multistart Newton.

    Nondegenerate points become records; degenerate ones are listed in
    ``result.degenerate`` and logged, never silently dropped.  The default
    start count is 64 (n + 1).
    """
    if kind not in ("interior", "boundary"):
        raise ValueError(f"kind must be 'interior' or 'boundary', got {kind!r}")
    boundary = kind == "boundary"
    if starts is None:
        starts = 64 * (field.n + 1)
    x0s = sample_half_sphere(field.n, starts, seed=seed, boundary=boundary)
    if boundary:
        grad, hess, frame = field.boundary_grad, field.boundary_hess, boundary_frame
    else:
        grad, hess, frame = field.grad, field.hess, interior_frame

    found, failed = [], 0
    for x0 in x0s:
        x, gn, ok = _newton_on_sphere(grad, hess, frame, x0, boundary=boundary)
        if not ok:
            failed += 1
            continue
        if not boundary and x[-1] <= BOUNDARY_TOL:
            # left the open half-sphere
            continue
        found.append(x)

    good, degenerate = [], []
    for x in _sort_points(_dedup(found)):
        rec = critical_record(field, x, kind)
        if rec.min_singular <= singular_tol:
            degenerate.append((rec.location, rec.min_singular))
        else:
            good.append(rec)
    if degenerate:
        log.warning("find_critical_points: %d start(s) converged to degenerate critical points", len(degenerate))
    return CriticalPointList(good, degenerate, failed)


# --- appendix identities ----------------------------------------------------


def symmetry_defect_derK(field: CurvatureField, a, h) -> float:
    """|K_1(a)^{-n/2} dK_1(a)(h - <a,h>a) + K_1(h)^{-n/2} dK_1(h)(a - <a,h>h)|.

    Vanishes to second order in |a - h|.
    """
    av, hv = coords(a), coords(h)
    n = field.n
    c = av @ hv
    ta = field.boundary_grad(av) @ (hv - c * av) / field.value(av) ** (n / 2)
    th = field.boundary_grad(hv) @ (av - c * hv) / field.value(hv) ** (n / 2)
    return float(abs(ta + th))


def hessian_identity_defect(field: CurvatureField, a, z, e) -> float:
    """|K_1(a)^{-1} dK_1(a)(e - <a,e>a) - K_1(z)^{-1} D^2K_1(z)(a - <a,z>z, e - <e,z>z)|.

    For z a critical point of K_1 this is O(|a - z|^2).
    """
    av, zv, ev = coords(a), coords(z), coords(e)
    lhs = field.boundary_grad(av) @ (ev - (av @ ev) * av) / field.value(av)
    rhs = (av - (av @ zv) * zv) @ field.boundary_hess(zv) @ (ev - (ev @ zv) * zv) / field.value(zv)
    return float(abs(lhs - rhs))
