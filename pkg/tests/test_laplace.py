import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from scipy.special import erf

from geocomplexity.errors import AccuracyError, DomainError, InvalidInputError, NoInteriorMaximumError
from geocomplexity.fishergeom import euclidean_field, sphere_field, sphere_normal_field
from geocomplexity.laplace import (
    CASES,
    IntegrableManifold,
    LaplaceInput,
    builtin_case,
    integrate_manifold,
    laplace_approx,
    laplace_ladder,
    laplace_log_expansion,
    laplace_rn,
    loglog_slope,
    normal_expansion_check,
    normal_expansion_residuals,
)

from oracles import bessel_i0, sphere_gaussian_integral


def test_one_dimensional_gaussian():
    inp = LaplaceInput(1, 0.0, [[-1.0]], [[1.0]], [[0.0]], 100)
    assert laplace_approx(inp) == pytest.approx(math.sqrt(2 * math.pi / 100), rel=1e-14)


def test_sphere_value_at_50():
    _, inp = builtin_case("sphere", 50)
    assert laplace_approx(inp) == pytest.approx(2 * math.pi / 50 * (1 - 1 / 150), rel=1e-14)
    assert laplace_approx(inp, curvature=False) == pytest.approx(2 * math.pi / 50, rel=1e-14)


def test_p1_value():
    _, inp = builtin_case("p1", 40)
    assert laplace_approx(inp) == pytest.approx(math.sqrt(math.pi / 40), rel=1e-14)


@pytest.mark.parametrize("case", CASES)
@pytest.mark.parametrize("N", [30, 300])
def test_log_expansion_consistent(case, N):
    _, inp = builtin_case(case, N)
    for curv in (False, True):
        val = laplace_log_expansion(inp, curvature=curv)
        assert val == pytest.approx(-math.log(laplace_approx(inp, curvature=curv)), abs=1.0 / N**2)


def test_laplace_input_validation():
    with pytest.raises(NoInteriorMaximumError):
        LaplaceInput(1, 0.0, [[1.0]], [[1.0]], [[0.0]], 10)
    with pytest.raises(InvalidInputError):
        LaplaceInput(2, 0.0, -np.eye(3), np.eye(2), np.eye(2), 10)
    with pytest.raises(InvalidInputError):
        LaplaceInput(1, 0.0, [[-1.0]], [[1.0]], [[0.0]], 0)
    with pytest.raises(InvalidInputError):
        LaplaceInput(1, 0.0, [[-1.0]], [[-1.0]], [[0.0]], 10)


def test_laplace_rn_examples():
    assert laplace_rn(0.0, [[-1.0]], 4) == pytest.approx(math.sqrt(math.pi / 2))
    assert laplace_rn(1.0, -np.eye(2), 10) == pytest.approx(math.exp(10) * 2 * math.pi / 10)
    assert laplace_rn(0.0, [[-1.0]], 4, h0=0.0) == 0.0
    with pytest.raises(NoInteriorMaximumError):
        laplace_rn(0.0, [[0.0]], 4)
    with pytest.raises(InvalidInputError):
        laplace_rn(0.0, -np.eye(2), 4, n=3)


@settings(max_examples=40, deadline=None)
@given(st.integers(1, 4), st.integers(0, 2**31), st.floats(1, 1e3), st.floats(-3, 3))
def test_flat_reduction(n, seed, N, fmax):
    rng = np.random.default_rng(seed)
    a = rng.standard_normal((n, n))
    A = a @ a.T + 0.5 * np.eye(n)
    inp = LaplaceInput(n, fmax, -A, np.eye(n), np.zeros((n, n)), N)
    assert laplace_approx(inp) == pytest.approx(laplace_rn(fmax, -A, N), rel=1e-10)


@settings(max_examples=40, deadline=None)
@given(st.integers(1, 3), st.integers(0, 2**31), st.floats(5, 500))
def test_chart_change_invariance(n, seed, N):
    # under x = K y the matrices transform as K^T . K; the value must not move
    rng = np.random.default_rng(seed)

    def spd():
        a = rng.standard_normal((n, n))
        return a @ a.T + 0.5 * np.eye(n)

    A, g, R = spd(), spd(), spd() - 0.25 * np.eye(n)
    K = rng.standard_normal((n, n)) + 2 * np.eye(n)
    while abs(np.linalg.det(K)) < 0.1:
        K = rng.standard_normal((n, n)) + 2 * np.eye(n)
    base = LaplaceInput(n, 0.3, -A, g, R, N)
    moved = LaplaceInput(n, 0.3, -(K.T @ A @ K), K.T @ g @ K, K.T @ R @ K, N)
    assert laplace_approx(moved) == pytest.approx(laplace_approx(base), rel=1e-9)
    assert moved.curvature_trace() == pytest.approx(base.curvature_trace(), rel=1e-9, abs=1e-12)


# --- quadrature oracle ------------------------------------------------------


@pytest.mark.parametrize("N", [10, 30, 100])
def test_circle_oracle(N):
    im, _ = builtin_case("circle", N)
    assert integrate_manifold(im, tol=1e-12) == pytest.approx(2 * math.pi * bessel_i0(N), rel=1e-8)


def test_sphere_area():
    im = IntegrableManifold(sphere_field(), lambda x: np.zeros(x.shape[:-1]))
    assert integrate_manifold(im) == pytest.approx(4 * math.pi, abs=1e-6)


@pytest.mark.parametrize("N", [25, 200])
def test_sphere_gaussian_oracle(N):
    im, _ = builtin_case("sphere", N)
    assert integrate_manifold(im, tol=1e-12) == pytest.approx(sphere_gaussian_integral(N), rel=1e-10)


def test_flat_oracle():
    im, _ = builtin_case("flat", 25)
    exact = (math.sqrt(2 * math.pi / 25) * erf(6 * math.sqrt(12.5))) ** 2
    assert integrate_manifold(im, tol=1e-12) == pytest.approx(exact, rel=1e-12)


def test_quadrature_budget():
    im = IntegrableManifold(euclidean_field(3), lambda x: 1e4 * np.sin(50 * x[..., 0]))
    with pytest.raises(AccuracyError) as info:
        integrate_manifold(im, max_evals=10**5)
    assert info.value.estimate is not None
    with pytest.raises(InvalidInputError):
        integrate_manifold(IntegrableManifold(euclidean_field(4), lambda x: np.zeros(x.shape[:-1])))


# --- normal coordinates -----------------------------------------------------


def test_sphere_normal_expansion():
    radii = [0.05, 0.1, 0.2, 0.3, 0.4, 0.5]
    res = normal_expansion_residuals(sphere_normal_field(), [0.0, 0.0], radii)
    assert np.all(res <= 0.05)
    # next term is r^4 / 120, so the r^3-scaled residual shrinks linearly
    np.testing.assert_allclose(res[1:], np.array(radii[1:]) / 120, rtol=0.1)


def test_flat_normal_expansion_is_exact():
    assert normal_expansion_check(euclidean_field(2, -1.0, 1.0), [0.0, 0.0], [0.1, 0.5]) < 1e-9


def test_scaled_sphere_normal_expansion():
    assert normal_expansion_check(sphere_normal_field(radius=2.0), [0.0, 0.0], [0.1, 0.3, 0.5]) <= 0.05 / 16


def test_normal_expansion_outside_chart():
    with pytest.raises(DomainError):
        normal_expansion_check(sphere_normal_field(extent=0.5), [0.0, 0.0], [0.8])


# --- ladders ----------------------------------------------------------------


def test_loglog_slope():
    N = np.array([10.0, 20, 40])
    assert loglog_slope(N, 3 / N**2) == pytest.approx(-2.0)


def test_sphere_ladder():
    out = laplace_ladder("sphere")
    assert out["slope_flat"] == pytest.approx(-1.0, abs=0.3)
    assert out["slope_curved"] == pytest.approx(-2.0, abs=0.3)
    assert abs(out["rows"][-1]["rel_err_curved"]) <= 5e-5
    for row in out["rows"]:
        assert abs(row["rel_err_curved"]) < abs(row["rel_err_flat"])


def test_circle_ladder():
    out = laplace_ladder("circle")
    assert out["slope_flat"] == pytest.approx(-1.0, abs=0.3)
    errs = [abs(r["rel_err_flat"]) for r in out["rows"]]
    assert errs == sorted(errs, reverse=True)


@pytest.mark.parametrize("case", ["flat", "p1"])
def test_gaussian_cases_are_exact(case):
    out = laplace_ladder(case)
    for row in out["rows"]:
        assert abs(row["rel_err_curved"]) < 1e-12
    assert out["slope_curved"] is None


def test_unknown_case():
    with pytest.raises(InvalidInputError):
        builtin_case("torus", 10)
