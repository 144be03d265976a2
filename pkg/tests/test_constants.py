import math

import numpy as np
import pytest
from scipy.special import gamma

from bubblekit.constants import (
    ConstantsTable,
    QuadratureError,
    _specs,
    c2_closed_form,
    closed_form,
    compute_constants,
    half_sphere_xn_moment,
    kappa3_formula,
    kappa_table,
    radial_integral,
    sphere_area,
)

DIMS = range(5, 11)


@pytest.mark.parametrize("n", DIMS)
def test_beta_oracles(n):
    T = compute_constants(n)
    ref = closed_form(n)
    for k in ("c2", "c3", "c4", "c6"):
        assert getattr(T, k) == pytest.approx(ref[k], rel=1e-8), k


@pytest.mark.parametrize("n", DIMS)
def test_c5_digamma_oracle(n):
    # extra oracle beyond node doubling: -d/db of the Beta moment
    assert compute_constants(n).c5 == pytest.approx(closed_form(n)["c5"], rel=1e-8)


@pytest.mark.parametrize("n", DIMS)
def test_c2_gamma_form(n):
    T = compute_constants(n)
    assert T.c2 == pytest.approx(c2_closed_form(n), rel=1e-10)
    assert T.c2 == pytest.approx(T.c0 ** (2 * n / (n - 2)) * math.pi ** (n / 2) / gamma(n / 2 + 1), rel=1e-10)


def test_c0_five():
    assert compute_constants(5).c0 == 15**0.75


def test_angular_factors():
    # |S^2| = 4 pi and the upper half of S^2 has x_3 moment pi
    assert sphere_area(3) == pytest.approx(4 * math.pi)
    assert half_sphere_xn_moment(3) == pytest.approx(math.pi)


@pytest.mark.parametrize("n", DIMS)
def test_node_doubling(n):
    T = compute_constants(n)
    for name, (pref, f) in _specs(n).items():
        q = radial_integral(f, T.tol)
        doubled = radial_integral(f, T.tol, panels=q.panels)
        assert abs(pref * doubled.value - getattr(T, name)) <= max(10 * T.quadrature_error_estimates[name], 1e-8 * abs(getattr(T, name)))


@pytest.mark.parametrize("n", DIMS)
def test_tolerance_refinement(n):
    coarse, fine = compute_constants(n), compute_constants(n, 1e-12)
    for k in ("kappa1", "kappa2", "kappa3"):
        assert abs(getattr(fine, k) - getattr(coarse, k)) < 1e-8
    assert np.sign(fine.c3) == np.sign(coarse.c3)


@pytest.mark.parametrize("n", DIMS)
def test_table_invariants(n):
    T = compute_constants(n)
    assert T.c0 == (n * (n - 2)) ** ((n - 2) / 4)
    assert T.kappa1 == T.c4 / (2 * T.c5)
    assert T.kappa2 == T.c3 / T.c5
    assert T.kappa3 == kappa3_formula(T.c2, T.c3, T.c5, T.c6, n)
    assert T.c2 > 0 and T.c6 > 0
    assert min(kappa_table(n)) > 0


def test_c3_sign_recorded():
    # the c3 integrand changes sign; the computed value is positive in every dimension
    assert all(compute_constants(n).c3 > 0 for n in DIMS)


def test_kappa1_closed_form():
    # Beta algebra gives c4/(2 c5) = 4/(n-2)^2
    for n in DIMS:
        assert compute_constants(n).kappa1 == pytest.approx(4 / (n - 2) ** 2, rel=1e-9)


def test_rows_and_errors():
    T = compute_constants(6)
    rows = T.rows()
    assert [r[0] for r in rows] == list(ConstantsTable.NAMES)
    assert all(r[2] >= 0 for r in rows)
    assert all(T.quadrature_error_estimates[k] <= 1e-10 * max(1.0, abs(getattr(T, k))) for k in ("c2", "c3", "c4", "c5", "c6"))


def test_rejects_small_dimension():
    with pytest.raises(ValueError):
        compute_constants(4)


def test_quadrature_nonconvergence_reported():
    with pytest.raises(QuadratureError) as err:
        radial_integral(lambda r: 1 / np.sqrt(np.abs(r - 1.0) + 1e-300) * np.exp(-r), tol=1e-15)
    assert math.isfinite(err.value.estimate)
    assert err.value.error > 1e-15
