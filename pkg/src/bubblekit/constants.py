"""Dimensional constants c0, c2..c6 and the rate constants kappa1..3.

Each constant is an n-dimensional integral over R^n or the half-space
R^n_+ with a radial integrand.  Integrating out the angles leaves

    int_{R^n} f(|x|) dx          = |S^{n-1}|     int_0^oo r^{n-1} f(r) dr
    int_{R^n_+} f(|x|) dx        = |S^{n-1}|/2   int_0^oo r^{n-1} f(r) dr
    int_{R^n_+} x_n f(|x|) dx    = M_n           int_0^oo r^n     f(r) dr

with M_n = pi^{(n-1)/2} / Gamma((n+1)/2) the first moment of the unit
half-sphere.  The radial integrals are evaluated by composite
Gauss-Legendre in theta after r = tan(theta), doubling the panel count
until two successive rules agree.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from functools import lru_cache
from typing import Callable

import numpy as np
from scipy.special import beta, digamma, gammaln

DEFAULT_TOL = 1e-10
GL_ORDER = 20
MAX_PANELS = 1 << 14


class QuadratureError(RuntimeError):
    def __init__(self, message: str, estimate: float, error: float):
        super().__init__(message)
        self.estimate = estimate
        self.error = error


@dataclass(frozen=True)
class QuadResult:
    value: float
    error: float
    panels: int


_GL_X, _GL_W = np.polynomial.legendre.leggauss(GL_ORDER)


def _composite_gl(g: Callable[[np.ndarray], np.ndarray], a: float, b: float, panels: int) -> tuple[float, float]:
    """Composite Gauss-Legendre; also returns the integral of |g| for a rounding floor."""
    edges = np.linspace(a, b, panels + 1)
    mid = 0.5 * (edges[:-1] + edges[1:])
    half = 0.5 * (edges[1:] - edges[:-1])
    t = mid[:, None] + half[:, None] * _GL_X[None, :]
    vals = g(t) * half[:, None] * _GL_W[None, :]
    return float(vals.sum()), float(np.abs(vals).sum())


def radial_integral(f: Callable[[np.ndarray], np.ndarray], tol: float = DEFAULT_TOL, panels: int = 4) -> QuadResult:
    """int_0^oo f(r) dr via r = tan(theta) on [0, pi/2).

    The error estimate is |Q_2N - Q_N| (floored at the rounding level of
    the sum), and the returned value is Q_2N.
    """

    def g(theta):
        c = np.cos(theta)
        return f(np.tan(theta)) / (c * c)

    prev, _ = _composite_gl(g, 0.0, math.pi / 2, panels)
    while True:
        panels *= 2
        cur, absint = _composite_gl(g, 0.0, math.pi / 2, panels)
        err = max(abs(cur - prev), 64 * np.finfo(float).eps * absint)
        if err <= tol:
            return QuadResult(cur, err, panels)
        if panels >= MAX_PANELS:
            raise QuadratureError(
                f"radial quadrature did not reach tol {tol:g} (estimate {cur!r}, error {err:.3e})", cur, err
            )
        prev = cur


def sphere_area(n: int) -> float:
    """|S^{n-1}|, the area of the unit sphere in R^n."""
    return 2.0 * math.pi ** (n / 2) / math.gamma(n / 2)


def half_sphere_xn_moment(n: int) -> float:
    """int over the unit upper half-sphere of S^{n-1} of x_n."""
    return math.pi ** ((n - 1) / 2) / math.gamma((n + 1) / 2)


def c0(n: int) -> float:
    return (n * (n - 2)) ** ((n - 2) / 4)


def _c0_pow(n: int) -> float:
    # c0^{p+1} = c0^{2n/(n-2)}
    return c0(n) ** (2 * n / (n - 2))


# --- integrands and prefactors -------------------------------------------
# Each entry: (prefactor * angular factor, radial integrand).


def _specs(n: int) -> dict[str, tuple[float, Callable[[np.ndarray], np.ndarray]]]:
    S = sphere_area(n)
    M = half_sphere_xn_moment(n)
    C = _c0_pow(n)
    return {
        "c2": (C * S, lambda r: r ** (n - 1) * (1 + r * r) ** (-(n + 2) / 2)),
        "c3": ((n - 2) * C * M, lambda r: r**n * (r * r - 1) * (1 + r * r) ** (-(n + 1))),
        "c4": ((n - 2) / (2 * n) * C * S, lambda r: r ** (n + 1) * (r * r - 1) * (1 + r * r) ** (-(n + 1))),
        "c5": (
            (n - 2) ** 2 / 4 * C * S / 2,
            lambda r: r ** (n - 1) * (r * r - 1) * np.log1p(r * r) * (1 + r * r) ** (-(n + 1)),
        ),
        "c6": ((n - 2) / n * C * S / 2, lambda r: r ** (n + 1) * (1 + r * r) ** (-(n + 1))),
    }


# --- closed-form oracles --------------------------------------------------


def _beta_moment(a: float, b: float) -> float:
    """int_0^oo r^{a-1} (1 + r^2)^{-b} dr = B(a/2, b - a/2) / 2."""
    return 0.5 * beta(a / 2, b - a / 2)


def _beta_log_moment(a: float, b: float) -> float:
    """int_0^oo r^{a-1} (1 + r^2)^{-b} ln(1 + r^2) dr, as -d/db of the Beta moment."""
    return 0.5 * beta(a / 2, b - a / 2) * (digamma(b) - digamma(b - a / 2))


def closed_form(n: int) -> dict[str, float]:
    """Special-function values of c2..c6, independent of the quadrature."""
    S = sphere_area(n)
    M = half_sphere_xn_moment(n)
    C = _c0_pow(n)
    m = _beta_moment
    return {
        "c2": C * S * m(n, (n + 2) / 2),
        "c3": (n - 2) * C * M * (m(n + 3, n + 1) - m(n + 1, n + 1)),
        "c4": (n - 2) / (2 * n) * C * S * (m(n + 4, n + 1) - m(n + 2, n + 1)),
        "c5": (n - 2) ** 2 / 4 * C * S / 2 * (_beta_log_moment(n + 2, n + 1) - _beta_log_moment(n, n + 1)),
        "c6": (n - 2) / n * C * S / 2 * m(n + 2, n + 1),
    }


def c2_closed_form(n: int) -> float:
    """c2 = c0^{2n/(n-2)} pi^{n/2} / Gamma(n/2 + 1)."""
    return _c0_pow(n) * math.exp(n / 2 * math.log(math.pi) - gammaln(n / 2 + 1))


# --- table ------------------------------------------------------------------


def kappa3_formula(c2: float, c3: float, c5: float, c6: float, n: int) -> float:
    """2^{(n-3)/n} (c2/c6)^{1/n} (c5/c3)^{(n-2)/n}."""
    return 2 ** ((n - 3) / n) * (c2 / c6) ** (1 / n) * (c5 / c3) ** ((n - 2) / n)


@dataclass(frozen=True)
class ConstantsTable:
    n: int
    c0: float
    c2: float
    c3: float
    c4: float
    c5: float
    c6: float
    kappa1: float
    kappa2: float
    kappa3: float
    quadrature_error_estimates: dict[str, float] = field(default_factory=dict)
    tol: float = DEFAULT_TOL

    NAMES = ("c0", "c2", "c3", "c4", "c5", "c6", "kappa1", "kappa2", "kappa3")

    @property
    def cluster_scale(self) -> float:
        """Length scale factor s with a_i - z ~ s * bbar_i * eps^{(n-2)/n} K^{(n-1)/n} / d_nu K^{(n-2)/n}.

        Balancing the interaction against the Hessian term of the boundary
        position equation gives s^n = 2^{n-3} (c2/c6) (c5/c3)^{n-2}, that
        is s = kappa3.
        """
        return self.kappa3

    def rows(self) -> list[tuple[str, float, float]]:
        return [(k, getattr(self, k), self.quadrature_error_estimates.get(k, 0.0)) for k in self.NAMES]


@lru_cache(maxsize=64)
def compute_constants(n: int, tol: float = DEFAULT_TOL) -> ConstantsTable:
    if n < 5:
        raise ValueError(f"n = {n} must be >= 5")
    vals, errs = {}, {}
    for name, (pref, f) in _specs(n).items():
        q = radial_integral(f, tol)
        vals[name] = pref * q.value
        errs[name] = abs(pref) * q.error
    k1, k2, k3 = _kappas(n, vals)
    rel = {k: errs[k] / abs(vals[k]) for k in vals}
    errs["c0"] = 0.0
    errs["kappa1"] = abs(k1) * (rel["c4"] + rel["c5"])
    errs["kappa2"] = abs(k2) * (rel["c3"] + rel["c5"])
    errs["kappa3"] = abs(k3) * ((rel["c2"] + rel["c6"]) / n + (n - 2) / n * (rel["c3"] + rel["c5"]))
    return ConstantsTable(n, c0(n), kappa1=k1, kappa2=k2, kappa3=k3, quadrature_error_estimates=errs, tol=tol, **vals)


def _kappas(n: int, v: dict[str, float]) -> tuple[float, float, float]:
    k1 = v["c4"] / (2 * v["c5"])
    k2 = v["c3"] / v["c5"]
    if v["c3"] <= 0 or v["c5"] <= 0:
        raise ArithmeticError(f"c3 = {v['c3']!r}, c5 = {v['c5']!r}: kappa3 needs both positive")
    k3 = kappa3_formula(v["c2"], v["c3"], v["c5"], v["c6"], n)
    for name, k in (("kappa1", k1), ("kappa2", k2), ("kappa3", k3)):
        if not k > 0:
            raise ArithmeticError(f"{name}({n}) = {k!r} is not positive")
    return k1, k2, k3


def kappa_table(n: int, tol: float = DEFAULT_TOL) -> tuple[float, float, float]:
    t = compute_constants(n, tol)
    return t.kappa1, t.kappa2, t.kappa3
