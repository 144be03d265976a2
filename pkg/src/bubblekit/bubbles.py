"""Standard bubbles, interaction coefficients eps_ij and their derivatives.

The interaction of two bubbles (a_i, l_i), (a_j, l_j) is

    eps_ij = (l_i/l_j + l_j/l_i + l_i l_j (1 - cos d(a_i, a_j)) / 2) ** ((2 - n)/2)

and every derivative below is the analytic derivative of this expression,
with cos d = <a_i, a_j> in ambient coordinates.
"""
from __future__ import annotations

from dataclasses import dataclass
from typing import NamedTuple, Sequence

import numpy as np

from .geometry import SpherePoint, TangentVector, coords, geodesic_distance

DEFAULT_TAU = 0.1


def c0(n: int) -> float:
    return (n * (n - 2)) ** ((n - 2) / 4)


@dataclass(frozen=True, eq=False)
class BubbleParam:
    """One concentration triple (a, lambda, alpha)."""

    a: SpherePoint
    lam: float
    alpha: float = 1.0

    def __post_init__(self):
        if not isinstance(self.a, SpherePoint):
            object.__setattr__(self, "a", SpherePoint(self.a))
        if not self.lam > 0:
            raise ValueError(f"lambda must be > 0, got {self.lam!r}")
        if not self.alpha > 0:
            raise ValueError(f"alpha must be > 0, got {self.alpha!r}")

    @property
    def boundary_flag(self) -> bool:
        return self.a.on_boundary

    @property
    def n(self) -> int:
        return self.a.dim

    @property
    def dist_to_boundary(self) -> float:
        """d_a = d(a, boundary) = arcsin(a_{n+1})."""
        return float(np.arcsin(min(1.0, max(0.0, self.a.height))))

    def in_neighborhood(self, tau: float = DEFAULT_TAU, eps: float = 0.0) -> bool:
        """lambda > 1/tau and eps ln(lambda) <= tau."""
        return self.lam > 1.0 / tau and eps * np.log(self.lam) <= tau


def bubble_value(a, lam: float, x) -> float:
    """delta_{a,lam}(x) = c0 lam^{(n-2)/2} / (lam^2 + 1 + (1 - lam^2) cos d(a,x))^{(n-2)/2}."""
    av, xv = coords(a), coords(x)
    n = av.size - 1
    c = float(np.clip(av @ xv, -1.0, 1.0))
    # lam^2 + 1 + (1 - lam^2) c written as 2 + (lam^2 - 1)(1 - c) to avoid cancellation
    den = 2.0 + (lam * lam - 1.0) * (1.0 - c)
    k = (n - 2) / 2
    return c0(n) * lam**k / den**k


def _base(pi: BubbleParam, pj: BubbleParam) -> tuple[float, float, float, int]:
    n = pi.n
    one_minus_cos = 1.0 - float(np.clip(pi.a.coords @ pj.a.coords, -1.0, 1.0))
    X = pi.lam / pj.lam + pj.lam / pi.lam + 0.5 * pi.lam * pj.lam * one_minus_cos
    return X, one_minus_cos, float(X ** ((2 - n) / 2)), n


def interaction_eps(pi: BubbleParam, pj: BubbleParam) -> float:
    return _base(pi, pj)[2]


def d_eps_d_lambda(pi: BubbleParam, pj: BubbleParam) -> float:
    """lambda_i * d eps_ij / d lambda_i."""
    X, omc, eps, n = _base(pi, pj)
    r = pi.lam / pj.lam
    lam_dX = r - 1.0 / r + 0.5 * pi.lam * pj.lam * omc
    return float((2 - n) / 2 * eps / X * lam_dX)


def d_eps_d_a(pi: BubbleParam, pj: BubbleParam) -> TangentVector:
    """d eps_ij / d a_i as a tangent vector at a_i.

    Ambient gradient (n-2)/4 l_i l_j eps^{n/(n-2)} a_j, projected onto T_{a_i}.
    """
    X, _, eps, n = _base(pi, pj)
    ai, aj = pi.a.coords, pj.a.coords
    t = aj - (aj @ ai) * ai
    if pi.boundary_flag and pj.boundary_flag:
        t[-1] = 0.0
    return TangentVector(pi.a, (n - 2) / 4 * pi.lam * pj.lam * eps / X * t)


@dataclass(frozen=True, eq=False)
class InteractionMatrix:
    eps: np.ndarray
    dlam: np.ndarray
    da: np.ndarray  # (N, N, n+1): (1/lambda_i) d eps_ij / d a_i

    def check(self, tau: float = DEFAULT_TAU) -> list[str]:
        """Return the list of violated invariants (empty when all hold)."""
        problems = []
        N = self.eps.shape[0]
        if not np.array_equal(self.eps, self.eps.T):
            problems.append("eps is not symmetric")
        off = self.eps[~np.eye(N, dtype=bool)]
        if off.size and not (np.all(off > 0) and np.all(off < tau)):
            problems.append(f"off-diagonal eps outside (0, {tau})")
        return problems


def interaction_matrix(bubbles: Sequence[BubbleParam]) -> InteractionMatrix:
    N = len(bubbles)
    d = bubbles[0].n + 1 if N else 0
    eps = np.zeros((N, N))
    dlam = np.zeros((N, N))
    da = np.zeros((N, N, d))
    for i in range(N):
        for j in range(N):
            if i == j:
                continue
            if j > i:
                eps[i, j] = eps[j, i] = interaction_eps(bubbles[i], bubbles[j])
            dlam[i, j] = d_eps_d_lambda(bubbles[i], bubbles[j])
            da[i, j] = d_eps_d_a(bubbles[i], bubbles[j]).vec / bubbles[i].lam
    return InteractionMatrix(eps, dlam, da)


def barycentric_pairing(pi: BubbleParam, pj: BubbleParam, h) -> float:
    """e_ij = d_{a_i} eps_ij (h - <a_i,h> a_i) + d_{a_j} eps_ij (h - <a_j,h> a_j)."""
    hv = coords(h)
    ai, aj = pi.a.coords, pj.a.coords
    gi = d_eps_d_a(pi, pj).vec
    gj = d_eps_d_a(pj, pi).vec
    return float(gi @ (hv - (ai @ hv) * ai) + gj @ (hv - (aj @ hv) * aj))


# --- Neumann Green function --------------------------------------------------


def reflect(x) -> np.ndarray:
    """Mirror image through the equatorial hyperplane."""
    r = np.array(coords(x), dtype=float)
    r[-1] = -r[-1]
    return r


def green_regular_part(a, b) -> float:
    """Regular part H(a, b) = (1 - <a*, b>)^{(2-n)/2}, a* the mirror image of a.

    Stereographic projection from a boundary point maps S^n_+ onto the
    half-space and the equatorial reflection onto the half-space reflection,
    so the Neumann Green function of the conformal Laplacian is the free one
    plus its image; H is the image term, normalised like the bubble tail
    delta_{a,lam} ~ c0 lam^{(2-n)/2} (1 - cos d)^{(2-n)/2}.
    """
    av, bv = coords(a), coords(b)
    if av[-1] <= 0 or bv[-1] <= 0:
        raise ValueError("green_regular_part needs points in the open half-sphere")
    n = av.size - 1
    return float((1.0 - reflect(av) @ bv) ** ((2 - n) / 2))


def green_regular_part_chart(a, b, pole=None) -> float:
    """H(a, b) recomputed in the stereographic half-space chart.

    Projects from a boundary pole onto R^n_+, applies the half-space image
    formula |u - v*|^{2-n}, and pulls back with the conformal factors of the
    chart.  Independent route to ``green_regular_part``.
    """
    av, bv = coords(a), coords(b)
    n = av.size - 1
    p = np.zeros(n + 1)
    p[0] = -1.0
    if pole is not None:
        p = np.asarray(coords(pole), dtype=float)
    # orthonormal frame (e_1..e_n) of the hyperplane orthogonal to the pole, keeping e_{n+1}
    basis = []
    for k in range(n + 1):
        e = np.zeros(n + 1)
        e[k] = 1.0
        for q in [p] + basis:
            e -= (e @ q) * q
        if np.linalg.norm(e) > 1e-6:
            basis.append(e / np.linalg.norm(e))
    # put e_{n+1} last so the chart's last coordinate is the height
    basis.sort(key=lambda e: abs(e[-1]))
    E = np.array(basis)

    def proj(x):
        return E @ x / (1.0 - p @ x)

    u, v = proj(av), proj(bv)
    v_img = v.copy()
    v_img[-1] = -v_img[-1]
    # |x - y| = 2 |u - v| / sqrt((1+|u|^2)(1+|v|^2)); the image has |v*| = |v|
    chordal = 2.0 * np.linalg.norm(u - v_img) / np.sqrt((1 + u @ u) * (1 + v @ v))
    return float((chordal**2 / 2.0) ** ((2 - n) / 2))


class Envelope(NamedTuple):
    lower: float
    upper: float
    approx: float
    allowance: float

    def contains_approx(self) -> bool:
        return self.lower <= self.approx <= self.upper + self.allowance


def projected_bubble_envelope(a, lam: float, x) -> Envelope:
    """Bounds delta <= phi <= 2 delta for the projected bubble at x.

    ``approx`` is the two-term expansion delta + c0 H(a, x) lam^{(2-n)/2}.
    ``allowance`` bounds how far that expansion may overshoot 2 delta: the
    neglected remainder is O((lam d_a)^{-2}) relative to the H term, made
    explicit as H_term * (1 - (1 + 2/(lam^2 (1 - cos d_a)))^{-(n-2)/2}).
    For a boundary point the envelope collapses to phi = delta.
    """
    av, xv = coords(a), coords(x)
    n = av.size - 1
    delta = bubble_value(av, lam, xv)
    if abs(av[-1]) <= 1e-9:
        return Envelope(delta, delta, delta, 0.0)
    k = (n - 2) / 2
    h_term = c0(n) * (1.0 - reflect(av) @ xv) ** (-k) / lam**k
    one_minus_cos_da = 1.0 - np.sqrt(max(0.0, 1.0 - av[-1] ** 2))
    allowance = h_term * (1.0 - (1.0 + 2.0 / (lam * lam * one_minus_cos_da)) ** (-k))
    return Envelope(delta, 2.0 * delta, delta + h_term, float(allowance))


def subcritical_expansion_check(a, lam: float, eps: float, x) -> float:
    """|delta^{-eps} - c0^{-eps} lam^{-eps(n-2)/2} (1 + (n-2)/2 eps ln L)|,
    L = 2 + (lam^2 - 1)(1 - cos d(a, x)).  O(eps^2 ln^2 L)."""
    if eps * np.log(lam) >= 0.1:
        raise ValueError(f"eps ln(lambda) = {eps * np.log(lam):.3g} is not small (needs < 0.1)")
    av, xv = coords(a), coords(x)
    n = av.size - 1
    c = float(np.clip(av @ xv, -1.0, 1.0))
    L = 2.0 + (lam * lam - 1.0) * (1.0 - c)
    k = (n - 2) / 2
    lhs = bubble_value(av, lam, xv) ** (-eps)
    pref = c0(n) ** (-eps) * lam ** (-eps * k)
    return float(abs(lhs - pref * (1.0 + k * eps * np.log(L))))


def far_field_ratio(pi: BubbleParam, pj: BubbleParam) -> float:
    """eps_ij / (lam_i lam_j d^2 / 4)^{(2-n)/2}; tends to 1 as lam d -> oo with d -> 0."""
    n = pi.n
    d = geodesic_distance(pi.a, pj.a)
    return interaction_eps(pi, pj) / (pi.lam * pj.lam * d * d / 4.0) ** ((2 - n) / 2)
