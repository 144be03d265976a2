"""Kirchhoff-Routh functional on m distinct tangent vectors at a boundary point.

    F(xi) = 1/2 sum_i <Q xi_i, xi_i> + sum_{i<j} |xi_i - xi_j|^{2-n}

with xi_i in R^{n-1} (intrinsic coordinates of T_z of the boundary sphere)
and Q = D^2 K_1(z) in the same frame.  Differentiating F(t xi) at t = 1
gives the virial identity

    <grad F(xi), xi> = sum_i <Q xi_i, xi_i> - (n-2) sum_{i<j} |xi_i - xi_j|^{2-n},

so at any critical point the quadratic part is (n-2) times the positive
interaction part; when Q <= 0 no critical point exists.
"""
from __future__ import annotations

import itertools
import logging
import math
import os
from collections import Counter
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from functools import lru_cache

import numpy as np

from .geometry import GeometryError, SpherePoint, TangentVector, boundary_frame

log = logging.getLogger(__name__)

COINCIDENT_TOL = 1e-10
ACCEPT_GRAD = 1e-10
ACCEPT_SEP = 1e-6
VIRIAL_ACCEPT = 1e-9
VIRIAL_REJECT = 1e-6
MIN_STEP = 1e-12
SEP_GUARD = 1e-8
SYMMETRY_TOL = 1e-10


def _default_z(n: int) -> SpherePoint:
    e = np.zeros(n + 1)
    e[0] = 1.0
    return SpherePoint(e, on_boundary=True)


@dataclass(frozen=True, eq=False)
class VortexConfiguration:
    """m points xi_i of T_z(boundary sphere), in the intrinsic frame at z."""

    z: SpherePoint
    xi: np.ndarray  # (m, n-1)
    Q: np.ndarray  # (n-1, n-1)
    frame: np.ndarray | None = None  # (n+1, n-1); boundary_frame(z) when omitted

    def __post_init__(self):
        if not self.z.on_boundary:
            raise GeometryError("vortex configurations live at a boundary point")
        n = self.z.dim
        xi = np.array(self.xi, dtype=float)
        if xi.ndim == 1:
            xi = xi.reshape(1, -1)
        Q = np.array(self.Q, dtype=float)
        if xi.shape[1] != n - 1 or Q.shape != (n - 1, n - 1):
            raise ValueError(f"expected xi of shape (m, {n - 1}) and Q of shape ({n - 1}, {n - 1})")
        if np.max(np.abs(Q - Q.T)) > 1e-12:
            raise ValueError("Q is not symmetric")
        frame = boundary_frame(self.z) if self.frame is None else np.asarray(self.frame, dtype=float)
        for name, arr in (("xi", xi), ("Q", Q), ("frame", frame)):
            arr.setflags(write=False)
            object.__setattr__(self, name, arr)

    @classmethod
    def from_array(cls, xi, Q, z: SpherePoint | None = None) -> "VortexConfiguration":
        Q = np.asarray(Q, dtype=float)
        return cls(z or _default_z(Q.shape[0] + 1), xi, Q)

    @property
    def n(self) -> int:
        return self.z.dim

    @property
    def m(self) -> int:
        return self.xi.shape[0]

    def min_separation(self) -> float:
        return _min_sep(self.xi)

    def tangent_vectors(self) -> list[TangentVector]:
        return [TangentVector(self.z, self.frame @ x) for x in self.xi]

    def with_xi(self, xi) -> "VortexConfiguration":
        return VortexConfiguration(self.z, xi, self.Q, self.frame)


@lru_cache(maxsize=None)
def _pair_index(m: int) -> tuple[np.ndarray, np.ndarray]:
    return np.triu_indices(m, 1)


@lru_cache(maxsize=None)
def _incidence(m: int) -> np.ndarray:
    """(m, pairs) matrix with +1 at i and -1 at j for each pair i < j."""
    i, j = _pair_index(m)
    D = np.zeros((m, len(i)))
    D[i, np.arange(len(i))] = 1.0
    D[j, np.arange(len(i))] = -1.0
    return D


def _pair_diffs(xi: np.ndarray):
    i, j = _pair_index(xi.shape[0])
    r = xi[i] - xi[j]
    return i, j, r, np.sqrt(np.einsum("pk,pk->p", r, r))


def _min_sep(xi: np.ndarray) -> float:
    if xi.shape[0] < 2:
        return math.inf
    return float(_pair_diffs(xi)[3].min())


def _check(xi: np.ndarray) -> None:
    s = _min_sep(xi)
    if s < COINCIDENT_TOL:
        raise ValueError(f"coincident vortices (min separation {s:.3e})")


# --- array kernels ------------------------------------------------------------


def _parts(xi: np.ndarray, Q: np.ndarray, n: int) -> tuple[float, float]:
    quad = float(np.einsum("ik,kl,il->", xi, Q, xi))
    s = _pair_diffs(xi)[3]
    return quad, float(np.sum(s ** (2 - n)))


def _energy(xi, Q, n) -> float:
    quad, inter = _parts(xi, Q, n)
    return 0.5 * quad + inter


def _gradient(xi, Q, n) -> np.ndarray:
    g = xi @ Q.T
    i, j, r, s = _pair_diffs(xi)
    return g - (n - 2) * _incidence(xi.shape[0]) @ (r / (s**n)[:, None])


def _hessian(xi, Q, n) -> np.ndarray:
    m, k = xi.shape
    H = np.kron(np.eye(m), Q).reshape(m, k, m, k)
    i, j, r, s = _pair_diffs(xi)
    I = np.eye(k)
    B = -(n - 2) * (I[None] / (s**n)[:, None, None] - n * r[:, :, None] * r[:, None, :] / (s ** (n + 2))[:, None, None])
    for p in range(len(i)):
        a, b = i[p], j[p]
        H[a, :, a, :] += B[p]
        H[b, :, b, :] += B[p]
        H[a, :, b, :] -= B[p]
        H[b, :, a, :] -= B[p]
    H = H.reshape(m * k, m * k)
    return 0.5 * (H + H.T)


def _virial(xi, Q, n) -> float:
    quad, inter = _parts(xi, Q, n)
    return quad - (n - 2) * inter


# --- public API on configurations -----------------------------------------


def energy(config: VortexConfiguration) -> float:
    _check(config.xi)
    return _energy(config.xi, config.Q, config.n)


def gradient(config: VortexConfiguration) -> np.ndarray:
    """Rows are grad_{xi_i} F in the intrinsic frame."""
    _check(config.xi)
    return _gradient(config.xi, config.Q, config.n)


def hessian(config: VortexConfiguration) -> np.ndarray:
    """Symmetric m(n-1) x m(n-1) Hessian, blocks ordered by point index."""
    _check(config.xi)
    return _hessian(config.xi, config.Q, config.n)


def virial_residual(config: VortexConfiguration) -> float:
    _check(config.xi)
    return _virial(config.xi, config.Q, config.n)


def virial_parts(config: VortexConfiguration) -> tuple[float, float]:
    """(sum_i Q xi_i . xi_i, sum_{i<j} |xi_i - xi_j|^{2-n})."""
    _check(config.xi)
    return _parts(config.xi, config.Q, config.n)


def virial_obstruction(Q) -> bool:
    """True when Q <= 0, so the virial identity rules out every critical point."""
    return float(np.linalg.eigvalsh(np.asarray(Q, dtype=float)).max()) <= 0.0


# --- closed forms -----------------------------------------------------------


def pair_radius(n: int, sigma: float) -> float:
    """|b| of the critical pair (b, -b) for Q = sigma I."""
    return ((n - 2) / (2 ** (n - 1) * sigma)) ** (1 / n)


def collinear_gamma(n: int, sigma: float) -> float:
    """|bbar| of the collinear critical triple (bbar, 0, -bbar) for Q = sigma I."""
    return ((n - 2) * (1 + 2.0 ** (1 - n)) / sigma) ** (1 / n)


# --- Newton -----------------------------------------------------------------


@dataclass
class NewtonRun:
    xi: np.ndarray
    grad_norm: float
    outcome: str  # converged | collapsed | diverged | stalled | maxiter
    iterations: int
    history: list[np.ndarray] = field(default_factory=list)


def newton(xi0, Q, n: int, *, maxiter: int = 200, scale: float = 1.0, keep_history: bool = False) -> NewtonRun:
    """Damped Newton on grad F = 0 with backtracking on |grad F|."""
    Q = np.asarray(Q, dtype=float)
    xi = np.array(xi0, dtype=float)
    m, k = xi.shape
    hist = [xi.copy()] if keep_history else []
    g = _gradient(xi, Q, n)
    gn = float(np.linalg.norm(g))
    for it in range(maxiter):
        if gn < ACCEPT_GRAD:
            return NewtonRun(xi, gn, "converged", it, hist)
        H = _hessian(xi, Q, n)
        step = np.linalg.lstsq(H, -g.ravel(), rcond=None)[0].reshape(m, k)
        t = 1.0
        guarded = False
        while t >= MIN_STEP:
            cand = xi + t * step
            if _min_sep(cand) < SEP_GUARD:
                guarded = True
                t *= 0.5
                continue
            gc = _gradient(cand, Q, n)
            gcn = float(np.linalg.norm(gc))
            if gcn < (1 - 1e-4 * t) * gn:
                break
            t *= 0.5
        else:
            return NewtonRun(xi, gn, "collapsed" if guarded else "stalled", it, hist)
        xi, g, gn = cand, gc, gcn
        if keep_history:
            hist.append(xi.copy())
        if np.abs(xi).max() > 1e6 * scale:
            return NewtonRun(xi, gn, "diverged", it + 1, hist)
    return NewtonRun(xi, gn, "converged" if gn < ACCEPT_GRAD else "maxiter", maxiter, hist)


# --- multistart search ------------------------------------------------------


@dataclass(frozen=True, eq=False)
class VortexCriticalPoint:
    config: VortexConfiguration
    energy: float
    virial_residual: float
    grad_norm: float
    morse_index: int
    nullity: int

    @property
    def signature(self) -> tuple[int, int, int]:
        """(negative, zero, positive) eigenvalue counts of the Hessian."""
        dim = self.config.xi.size
        return self.morse_index, self.nullity, dim - self.morse_index - self.nullity


class VortexSearchResult(list):
    """Critical points plus run diagnostics (outcome counts)."""

    def __init__(self, points=(), diagnostics=None):
        super().__init__(points)
        self.diagnostics: dict[str, int] = dict(diagnostics or {})


def natural_scale(Q, m: int, n: int) -> float:
    """rho = (m (n-2) / |Q|)^{1/n}, the length fixed by the virial balance."""
    return (m * (n - 2) / max(np.linalg.norm(np.asarray(Q, dtype=float), 2), 1e-300)) ** (1 / n)


def initial_configurations(Q, m: int, n: int, starts: int, seed: int) -> np.ndarray:
    """Quasi-random starts with every |xi_i| in [0.3 rho, 3 rho]; shape (starts, m, n-1)."""
    from scipy.stats import norm, qmc

    k = n - 1
    rho = natural_scale(Q, m, n)
    u = qmc.Halton(d=m * (k + 1), scramble=True, seed=seed).random(starts).reshape(starts, m, k + 1)
    g = norm.ppf(np.clip(u[..., :k], 1e-12, 1 - 1e-12))
    g /= np.linalg.norm(g, axis=-1, keepdims=True)
    r = rho * (0.3 + 2.7 * u[..., k:])
    return g * r


def _eigen_blocks(Q: np.ndarray, tol: float = 1e-8) -> tuple[np.ndarray, list[np.ndarray]]:
    w, V = np.linalg.eigh(Q)
    scale = max(1.0, float(np.abs(w).max()))
    groups, cur = [], [0]
    for i in range(1, len(w)):
        if w[i] - w[cur[-1]] <= tol * scale:
            cur.append(i)
        else:
            groups.append(np.array(cur))
            cur = [i]
    groups.append(np.array(cur))
    return V, groups


def _symmetry_distance(A: np.ndarray, B: np.ndarray, Q: np.ndarray) -> float:
    """min over permutations p and orthogonal R with QR = RQ of |A - B[p] R^T|.

    R is found by orthogonal Procrustes inside each eigenspace of Q, so it
    commutes with Q by construction; the commutator is still checked.
    """
    m = A.shape[0]
    V, groups = _eigen_blocks(Q)
    Av = A @ V
    best = math.inf
    perms = itertools.permutations(range(m)) if m <= 6 else [tuple(range(m))]
    for p in perms:
        Bv = B[list(p)] @ V
        R = np.zeros_like(Q)
        for idx in groups:
            M = Bv[:, idx].T @ Av[:, idx]
            U, _, Wt = np.linalg.svd(M)
            R[np.ix_(idx, idx)] = (U @ Wt).T
        Ramb = V @ R @ V.T
        if np.linalg.norm(Q @ Ramb - Ramb @ Q) >= SYMMETRY_TOL * max(1.0, np.linalg.norm(Q)):
            continue
        best = min(best, float(np.linalg.norm(A - B[list(p)] @ Ramb.T)))
    return best


def _workers() -> int:
    env = os.environ.get("BUBBLEKIT_THREADS")
    if env:
        try:
            return max(1, int(env))
        except ValueError:
            log.warning("ignoring non-integer BUBBLEKIT_THREADS=%r", env)
    return os.cpu_count() or 1


def find_critical_points(
    Q,
    m: int,
    n: int,
    starts: int = 200,
    seed: int = 0,
    *,
    z: SpherePoint | None = None,
    maxiter: int = 200,
    dedup_tol: float = 1e-6,
) -> VortexSearchResult:
    """Multistart damped Newton for critical points of F.

    Accepted points have |grad F| < 1e-10, min separation > 1e-6 and pass
    the virial filter; they are reported once per orbit of the symmetry
    group (relabelings, and rotations commuting with Q).
    """
    Q = np.asarray(Q, dtype=float)
    if Q.shape != (n - 1, n - 1):
        raise ValueError(f"Q must be ({n - 1}, {n - 1})")
    if np.max(np.abs(Q - Q.T)) > 1e-12:
        raise ValueError("Q is not symmetric")
    if np.abs(np.linalg.eigvalsh(Q)).min() <= 1e-12:
        raise ValueError("Q is degenerate")
    z = z or _default_z(n)
    diag: Counter[str] = Counter()

    if m == 1:
        # pure quadratic: the unique critical point is the origin
        starts_arr = np.zeros((1, 1, n - 1))
    else:
        starts_arr = initial_configurations(Q, m, n, starts, seed)
    rho = natural_scale(Q, m, n)

    with ThreadPoolExecutor(max_workers=min(_workers(), len(starts_arr))) as ex:
        runs = list(ex.map(lambda x0: newton(x0, Q, n, maxiter=maxiter, scale=rho), starts_arr))

    accepted: list[np.ndarray] = []
    for run in runs:
        diag[run.outcome] += 1
        if run.outcome != "converged":
            continue
        if _min_sep(run.xi) <= ACCEPT_SEP:
            diag["rejected_separation"] += 1
            continue
        vr = abs(_virial(run.xi, Q, n))
        if vr > VIRIAL_REJECT:
            diag["rejected_virial"] += 1
            continue
        if vr > VIRIAL_ACCEPT:
            diag["rejected_virial_tight"] += 1
            continue
        if all(_symmetry_distance(q, run.xi, Q) > dedup_tol * max(1.0, rho) for q in accepted):
            accepted.append(run.xi)

    points = []
    for xi in accepted:
        H = _hessian(xi, Q, n)
        w = np.linalg.eigvalsh(H)
        ztol = 1e-8 * max(1.0, float(np.abs(w).max()))
        points.append(
            VortexCriticalPoint(
                config=VortexConfiguration(z, xi, Q),
                energy=_energy(xi, Q, n),
                virial_residual=_virial(xi, Q, n),
                grad_norm=float(np.linalg.norm(_gradient(xi, Q, n))),
                morse_index=int((w < -ztol).sum()),
                nullity=int((np.abs(w) <= ztol).sum()),
            )
        )
    points.sort(key=lambda p: (round(p.energy, 9), tuple(np.round(p.config.xi.ravel(), 9))))
    diag["accepted"] = len(points)
    if not points:
        log.info("vortex search found no critical points: %s", dict(diag))
    return VortexSearchResult(points, diag)
