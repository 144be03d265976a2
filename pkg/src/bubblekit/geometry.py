"""Exact geometry of the closed upper half-sphere S^n_+ in R^{n+1}.

Points are stored as ambient unit vectors; the boundary is the equator
{x_{n+1} = 0}.  Boundary membership is decided once, at construction.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

UNIT_TOL = 1e-12
HALF_TOL = 1e-12
BOUNDARY_TOL = 1e-9
TANGENT_TOL = 1e-10


class GeometryError(ValueError):
    pass


def _frozen(a) -> np.ndarray:
    arr = np.array(a, dtype=float)
    arr.setflags(write=False)
    return arr


@dataclass(frozen=True, eq=False)
class SpherePoint:
    """A point of the closed upper half-sphere, as a unit vector of R^{n+1}."""

    coords: np.ndarray
    on_boundary: bool = field(default=False)

    def __init__(self, coords, on_boundary: bool | None = None, *, tol: float = UNIT_TOL):
        c = _frozen(coords)
        if c.ndim != 1 or c.size < 2:
            raise GeometryError(f"coords must be a 1-D vector, got shape {c.shape}")
        if abs(np.linalg.norm(c) - 1.0) > tol:
            raise GeometryError(f"|coords| = {np.linalg.norm(c)!r} is not 1")
        if c[-1] < -HALF_TOL:
            raise GeometryError(f"last coordinate {c[-1]!r} < 0: not in the upper half-sphere")
        if on_boundary is None:
            on_boundary = bool(abs(c[-1]) <= BOUNDARY_TOL)
        elif on_boundary and abs(c[-1]) > BOUNDARY_TOL:
            raise GeometryError(f"point declared on the boundary has last coordinate {c[-1]!r}")
        object.__setattr__(self, "coords", c)
        object.__setattr__(self, "on_boundary", bool(on_boundary))

    @classmethod
    def from_vector(cls, v, on_boundary: bool | None = None) -> "SpherePoint":
        """Normalise an arbitrary nonzero vector onto the sphere."""
        v = np.asarray(v, dtype=float)
        r = np.linalg.norm(v)
        if r == 0.0:
            raise GeometryError("cannot normalise the zero vector")
        v = v / r
        if on_boundary:
            v = v.copy()
            v[-1] = 0.0
            v /= np.linalg.norm(v)
        return cls(v, on_boundary)

    @property
    def dim(self) -> int:
        """Intrinsic dimension n of the sphere S^n containing the point."""
        return self.coords.size - 1

    @property
    def height(self) -> float:
        return float(self.coords[-1])

    def __array__(self, dtype=None, copy=None):
        return np.asarray(self.coords, dtype=dtype)

    def __repr__(self) -> str:
        tag = "boundary" if self.on_boundary else "interior"
        return f"SpherePoint({np.array2string(self.coords, precision=6)}, {tag})"


@dataclass(frozen=True, eq=False)
class TangentVector:
    base: SpherePoint
    vec: np.ndarray

    def __post_init__(self):
        v = _frozen(self.vec)
        if v.shape != self.base.coords.shape:
            raise GeometryError("tangent vector and base point have different lengths")
        scale = max(1.0, float(np.linalg.norm(v)))
        if abs(v @ self.base.coords) > TANGENT_TOL * scale:
            raise GeometryError("vector is not tangent to the sphere at its base")
        object.__setattr__(self, "vec", v)

    @property
    def norm(self) -> float:
        return float(np.linalg.norm(self.vec))

    def is_boundary_tangent(self, tol: float = TANGENT_TOL) -> bool:
        return self.base.on_boundary and abs(self.vec[-1]) <= tol * max(1.0, self.norm)


def coords(x) -> np.ndarray:
    """Ambient coordinates of a SpherePoint or a raw array."""
    if isinstance(x, SpherePoint):
        return x.coords
    return np.asarray(x, dtype=float)


def geodesic_distance(a, b) -> float:
    """Great-circle distance arccos<a, b>, clamped against rounding."""
    c = float(np.dot(coords(a), coords(b)))
    return float(np.arccos(min(1.0, max(-1.0, c))))


def tangent_project(x, z) -> TangentVector:
    """x - <x, z> z, attached at z."""
    xv, zv = coords(x), coords(z)
    base = z if isinstance(z, SpherePoint) else SpherePoint(zv)
    v = xv - (xv @ zv) * zv
    # one extra projection removes the O(eps) normal component left by rounding
    v = v - (v @ zv) * zv
    if base.on_boundary and abs(xv[-1]) <= BOUNDARY_TOL:
        v[-1] = 0.0
    return TangentVector(base, v)


def exp_map(z, v) -> SpherePoint:
    """Riemannian exponential map of the round sphere at z.

    Rejects |v| >= pi, outside the normal chart.  A boundary base point with
    a boundary-tangent vector yields a boundary point.
    """
    base = z if isinstance(z, SpherePoint) else SpherePoint(coords(z))
    vec = v.vec if isinstance(v, TangentVector) else np.asarray(v, dtype=float)
    zv = base.coords
    if abs(vec @ zv) > TANGENT_TOL * max(1.0, float(np.linalg.norm(vec))):
        raise GeometryError("exp_map: vector is not tangent at z")
    t = float(np.linalg.norm(vec))
    if t >= np.pi:
        raise GeometryError(f"exp_map: |v| = {t!r} >= pi is outside the normal chart")
    if t == 0.0:
        return base
    out = np.cos(t) * zv + (np.sin(t) / t) * vec
    boundary = base.on_boundary and abs(vec[-1]) <= TANGENT_TOL * max(1.0, t)
    if boundary:
        out[-1] = 0.0
    out /= np.linalg.norm(out)
    return SpherePoint(out, on_boundary=True if boundary else None)


def log_map(z, x) -> np.ndarray:
    """Inverse of exp_map for d(z, x) < pi."""
    zv, xv = coords(z), coords(x)
    w = xv - (xv @ zv) * zv
    s = np.linalg.norm(w)
    if s == 0.0:
        return np.zeros_like(zv)
    return geodesic_distance(zv, xv) * w / s


def cluster_barycenter(points: Sequence) -> SpherePoint:
    """Normalised Euclidean mean b/|b| of a cluster of sphere points.

    Satisfies sum_i (a_i - <a_i, abar> abar) = 0.
    """
    if len(points) == 0:
        raise GeometryError("cluster_barycenter needs at least one point")
    pts = np.array([coords(p) for p in points])
    # sort rows so the floating-point sum does not depend on input order
    order = np.lexsort(pts.T[::-1])
    b = pts[order].sum(axis=0) / len(pts)
    r = np.linalg.norm(b)
    if r < 1e-8:
        raise GeometryError(f"cluster is antipodally balanced (|mean| = {r:.3e})")
    all_boundary = all(isinstance(p, SpherePoint) and p.on_boundary for p in points) or bool(
        np.all(np.abs(pts[:, -1]) <= BOUNDARY_TOL)
    )
    out = b / r
    if all_boundary:
        out[-1] = 0.0
        out /= np.linalg.norm(out)
    return SpherePoint(out, on_boundary=True if all_boundary else None)


def barycenter_residual(points: Sequence, abar) -> float:
    """|sum_i (a_i - <a_i, abar> abar)|."""
    av = coords(abar)
    pts = np.array([coords(p) for p in points])
    return float(np.linalg.norm((pts - np.outer(pts @ av, av)).sum(axis=0)))


def boundary_frame(z) -> np.ndarray:
    """Orthonormal frame of T_z(boundary sphere), shape (n+1, n-1).

    Deterministic Gram-Schmidt over e_1, ..., e_n; columns are the frame
    vectors, all with zero last coordinate.
    """
    zv = coords(z)
    if abs(zv[-1]) > BOUNDARY_TOL:
        raise GeometryError("boundary_frame needs a boundary point")
    dim = zv.size
    basis = [zv.copy(), np.eye(dim)[-1]]
    frame = []
    for k in range(dim - 1):
        e = np.zeros(dim)
        e[k] = 1.0
        for b in basis + frame:
            e -= (e @ b) * b
        r = np.linalg.norm(e)
        if r > 1e-6:
            frame.append(e / r)
        if len(frame) == dim - 2:
            break
    F = np.array(frame).T
    F[-1, :] = 0.0
    return F


def interior_frame(x) -> np.ndarray:
    """Orthonormal frame of T_x S^n, shape (n+1, n)."""
    xv = coords(x)
    dim = xv.size
    frame = []
    for k in range(dim):
        e = np.zeros(dim)
        e[k] = 1.0
        for b in [xv] + frame:
            e -= (e @ b) * b
        r = np.linalg.norm(e)
        if r > 1e-6:
            frame.append(e / r)
        if len(frame) == dim - 1:
            break
    return np.array(frame).T


def sample_half_sphere(n: int, count: int, seed: int = 0, boundary: bool = False) -> np.ndarray:
    """Quasi-random points on the closed upper half-sphere S^n_+ (or its boundary).

    Scrambled Sobol points pushed through the inverse normal CDF, then
    normalised; the last coordinate is folded to be >= 0 (or zeroed).
    """
    from scipy.stats import norm, qmc

    dim = n if boundary else n + 1
    sob = qmc.Sobol(d=dim, scramble=True, seed=seed)
    # draw a full power-of-two block (keeps the Sobol balance) and keep a prefix
    u = sob.random_base2(max(0, math.ceil(math.log2(max(count, 1)))))[:count]
    g = norm.ppf(np.clip(u, 1e-12, 1 - 1e-12))
    g /= np.linalg.norm(g, axis=1, keepdims=True)
    if boundary:
        g = np.hstack([g, np.zeros((count, 1))])
    else:
        g[:, -1] = np.abs(g[:, -1])
    return g
