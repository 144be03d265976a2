import json
import math

import numpy as np
import pytest
from hypothesis import given

from bubblekit.config import ConfigError
from bubblekit.curvature import (
    CurvatureField,
    find_critical_points,
    hessian_identity_defect,
    laplace_beltrami_K,
    normal_derivative,
    refine_critical_point,
    symmetry_defect_derK,
)
from bubblekit.geometry import SpherePoint, boundary_frame, exp_map, interior_frame, sample_half_sphere
from conftest import half_sphere_vectors, random_tangent, scenario_path

N = 5
E = np.eye(N + 1)
H_STEP = 1e-5


def mono(n, **powers):
    """Multi-index with x_k^p for keys like x1=2 (1-based, x{n+1} is the height)."""
    p = [0] * (n + 1)
    for k, v in powers.items():
        p[int(k[1:]) - 1] = v
    return tuple(p)


def field(n, *terms, floor=1e-3):
    return CurvatureField(n, tuple(terms), floor)


ONE = field(N, (1.0, mono(N)))
HEIGHT = field(N, (1.0, mono(N)), (1.0, mono(N, x6=1)))
# a generic field: mixed degrees, couples every coordinate
RICH = field(
    N,
    (2.0, mono(N)),
    (0.3, mono(N, x1=1, x2=2)),
    (-0.4, mono(N, x3=3)),
    (0.5, mono(N, x4=1, x5=1, x6=1)),
    (0.7, mono(N, x6=2)),
    (0.2, mono(N, x1=2, x6=2)),
    (-0.25, mono(N, x2=1, x5=1)),
)


def geodesic(x, e, t):
    return math.cos(t) * x + math.sin(t) * e


def shipped_field(name):
    with open(scenario_path(name)) as fh:
        return CurvatureField.from_config(json.load(fh)["field"])


# --- examples --------------------------------------------------------------


def test_constant_field():
    for x in sample_half_sphere(N, 20, seed=2):
        assert np.all(ONE.grad(x) == 0)
        assert laplace_beltrami_K(ONE, x) == 0


def test_height_extremal_at_pole():
    assert np.allclose(HEIGHT.grad(E[-1]), 0, atol=1e-15)


def test_height_laplacian_is_first_eigenfunction():
    # x_{n+1} is a first spherical harmonic: Delta x_{n+1} = -n x_{n+1}
    for x in sample_half_sphere(N, 20, seed=5):
        assert HEIGHT.laplacian(x) == pytest.approx(-N * x[-1], abs=1e-13)


def test_normal_derivative_examples():
    for z in sample_half_sphere(N, 20, seed=3, boundary=True):
        assert normal_derivative(ONE, z) == 0
        assert normal_derivative(HEIGHT, z) == pytest.approx(1.0, abs=1e-15)


def test_normal_derivative_rejects_interior():
    with pytest.raises(ValueError):
        normal_derivative(HEIGHT, SpherePoint(E[-1]))


# --- finite-difference oracles ----------------------------------------------


def _points(count, seed):
    return sample_half_sphere(N, count, seed=seed)


def test_gradient_fd_200_points():
    rng = np.random.default_rng(0)
    worst = 0.0
    for x in _points(200, 11):
        dirs = [random_tangent(rng, x) for _ in range(5)]
        fd = np.array([(RICH.value(geodesic(x, e, H_STEP)) - RICH.value(geodesic(x, e, -H_STEP))) / (2 * H_STEP) for e in dirs])
        an = np.array([RICH.grad(x) @ e for e in dirs])
        worst = max(worst, np.linalg.norm(fd - an) / np.linalg.norm(an))
    assert worst < 1e-6


def _hess_fd(f, x, e):
    """P_x d/dt grad K(gamma(t)) at t = 0: the covariant derivative along the geodesic."""
    d = (f.grad(geodesic(x, e, H_STEP)) - f.grad(geodesic(x, e, -H_STEP))) / (2 * H_STEP)
    return d - (d @ x) * x


def test_hessian_fd_200_points():
    rng = np.random.default_rng(1)
    worst = 0.0
    for x in _points(200, 12):
        H = RICH.hess(x)
        for _ in range(5):
            e = random_tangent(rng, x)
            an = H @ e
            an = an - (an @ x) * x
            fd = _hess_fd(RICH, x, e)
            worst = max(worst, np.linalg.norm(fd - an) / max(np.linalg.norm(an), 1e-3))
    assert worst < 1e-6


def test_laplacian_fd_200_points():
    worst = 0.0
    for x in _points(200, 13):
        F = interior_frame(x)
        fd = sum(F[:, k] @ _hess_fd(RICH, x, F[:, k]) for k in range(N))
        worst = max(worst, abs(fd - RICH.laplacian(x)) / max(abs(fd), 1e-3))
    assert worst < 1e-6


def test_laplacian_matches_hessian_trace():
    # ambient restriction identity vs intrinsic trace: two independent routes
    for x in _points(50, 14):
        F = interior_frame(x)
        assert np.trace(F.T @ RICH.hess(x) @ F) == pytest.approx(RICH.laplacian(x), abs=1e-12)


def test_normal_derivative_fd():
    for z in sample_half_sphere(N, 20, seed=4, boundary=True):
        fd = (RICH.value(geodesic(z, E[-1], H_STEP)) - RICH.value(geodesic(z, E[-1], -H_STEP))) / (2 * H_STEP)
        an = normal_derivative(RICH, z)
        assert abs(fd - an) < 1e-6 * max(abs(an), 1e-3)


@given(half_sphere_vectors(N, boundary=True))
def test_boundary_decomposition(z):
    g = RICH.grad(z)
    split = RICH.boundary_grad(z) + RICH.normal_derivative(z) * E[-1]
    assert np.allclose(g, split, atol=1e-10)
    assert RICH.boundary_grad(z)[-1] == 0


def test_boundary_hessian_frame_fd():
    rng = np.random.default_rng(7)
    for z in sample_half_sphere(N, 10, seed=8, boundary=True):
        F = boundary_frame(z)
        Hf = RICH.boundary_hess_frame(z, F)
        e = F @ rng.standard_normal(N - 1)
        e /= np.linalg.norm(e)
        d = (RICH.boundary_grad(geodesic(z, e, H_STEP)) - RICH.boundary_grad(geodesic(z, e, -H_STEP))) / (2 * H_STEP)
        fd = F.T @ d
        assert np.allclose(Hf @ (F.T @ e), fd, atol=1e-7)


# --- critical points ----------------------------------------------------------


def test_north_pole_unique_interior_critical_point():
    res = find_critical_points(HEIGHT, "interior")
    assert len(res) == 1
    assert np.allclose(res[0].location.coords, E[-1], atol=1e-12)
    assert res[0].laplacian == pytest.approx(-N)


def test_boundary_critical_points_of_x1_squared():
    f = field(N, (1.0, mono(N)), (1.0, mono(N, x1=2)))
    res = find_critical_points(f, "boundary")
    locs = sorted(r.location.coords[0] for r in res)
    assert len(res) == 2
    assert locs == pytest.approx([-1.0, 1.0], abs=1e-12)
    for r in res:
        r.check()
    # the subsphere x1 = 0 is a critical manifold: reported, not dropped
    assert res.degenerate
    assert all(abs(p.coords[0]) < 1e-9 for p, _ in res.degenerate)


def test_no_interior_critical_points_for_linear_field():
    f = field(N, (1.0, mono(N)), (1.0, mono(N, x1=1)))
    assert len(find_critical_points(f, "interior")) == 0


@pytest.mark.parametrize("name", ["interior.json", "boundary_simple.json", "cluster.json"])
@pytest.mark.parametrize("kind", ["interior", "boundary"])
def test_critical_points_seed_invariant(name, kind):
    f = shipped_field(name)
    a = find_critical_points(f, kind, seed=0)
    b = find_critical_points(f, kind, seed=1)
    assert len(a) == len(b) > 0
    for r in a:
        assert min(np.linalg.norm(r.location.coords - q.location.coords) for q in b) < 1e-8


def test_refine_rejects_far_point():
    with pytest.raises(ValueError):
        refine_critical_point(HEIGHT, SpherePoint.from_vector([0.1, 0, 0, 0, 0, 1]), "interior")


# --- appendix identities ------------------------------------------------------


def _cluster_setup():
    f = shipped_field("cluster.json")
    n = f.n
    z = SpherePoint(np.eye(n + 1)[0])
    return f, z, boundary_frame(z)


def test_symmetry_defect_zero_on_diagonal():
    f, z, F = _cluster_setup()
    a = exp_map(z, 0.05 * F[:, 0])
    assert symmetry_defect_derK(f, a, a) == 0.0


def test_symmetry_defect_quadratic():
    f, z, F = _cluster_setup()
    a = exp_map(z, 0.05 * (F[:, 0] + F[:, 1]) / math.sqrt(2))
    Fa = boundary_frame(a)
    w = (Fa[:, 2] + 0.5 * Fa[:, 0]) / math.hypot(1, 0.5)
    ratios = []
    for s in (1e-1, 1e-2, 1e-3):
        h = exp_map(a, s * w)
        ratios.append(symmetry_defect_derK(f, a, h) / np.sum((a.coords - h.coords) ** 2))
    assert max(ratios) < 10.0
    assert max(ratios) / min(ratios) < 1.5


def test_hessian_identity_quadratic():
    f, z, F = _cluster_setup()
    e = np.eye(f.n + 1)[2]
    u = (F[:, 0] + F[:, 1]) / math.sqrt(2)
    ratios = []
    for s in (1e-1, 1e-2, 1e-3):
        a = exp_map(z, s * u)
        ratios.append(hessian_identity_defect(f, a, z, e) / np.sum((a.coords - z.coords) ** 2))
    assert max(ratios) < 10.0
    assert ratios[-1] <= ratios[0]


# --- configuration ----------------------------------------------------------------


def test_config_rejects_nonpositive_field():
    doc = {"n": 5, "terms": [{"coeff": 1.0, "powers": [1, 0, 0, 0, 0, 0]}], "positivity_floor": 0.1}
    with pytest.raises(ConfigError) as err:
        CurvatureField.from_config(doc)
    assert "positivity" in str(err.value) or "floor" in str(err.value)


def test_config_rejects_bad_powers():
    doc = {"n": 5, "terms": [{"coeff": 1.0, "powers": [1, 0, 0]}]}
    with pytest.raises(ConfigError):
        CurvatureField.from_config(doc)


def test_config_roundtrip():
    f = shipped_field("cluster.json")
    g = CurvatureField.from_config(f.to_config())
    x = sample_half_sphere(f.n, 1, seed=0)[0]
    assert g.value(x) == f.value(x)
