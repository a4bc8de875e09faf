"""Laplace approximation on Riemannian manifolds, with a quadrature oracle.

For a function f with a non-degenerate maximum at p0 and A = -Hess f(p0)
(both matrices in the same chart as g)::

    int_M exp(N f) dV_g ~ (2 pi / N)^(n/2) exp(N f(p0)) sqrt(det g / det A)
                          * [1 - tr(A^-1 Ric) / (6 N)]

The bracket is the curvature correction; with Ric = 0 and g = I this is the
flat-space result.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable

import numpy as np
from scipy.special import logsumexp

from .errors import AccuracyError, DomainError, InvalidInputError, NoInteriorMaximumError
from .fishergeom import (
    MetricField,
    circle_field,
    euclidean_field,
    pm_field,
    ricci_numeric,
    sphere_field,
)
from .quadrature import gauss_legendre, tensor_rule, trapezoid_periodic


def _safe_exp(x: float) -> float:
    with np.errstate(over="ignore"):
        return float(np.exp(x))


@dataclass(frozen=True)
class LaplaceInput:
    n: int
    f_max: float
    hess: np.ndarray
    g_p0: np.ndarray
    ricci_p0: np.ndarray
    N: float

    def __post_init__(self):
        for name in ("hess", "g_p0", "ricci_p0"):
            arr = np.atleast_2d(np.asarray(getattr(self, name), dtype=float))
            if arr.shape != (self.n, self.n):
                raise InvalidInputError(f"{name} must be {self.n}x{self.n}, got {arr.shape}")
            object.__setattr__(self, name, 0.5 * (arr + arr.T))
        if self.N <= 0:
            raise InvalidInputError("N must be positive")
        if np.linalg.eigvalsh(-self.hess)[0] <= 0:
            raise NoInteriorMaximumError("-Hess f(p0) is not positive definite")
        if np.linalg.eigvalsh(self.g_p0)[0] <= 0:
            raise InvalidInputError("g_p0 is not positive definite")

    @property
    def A(self) -> np.ndarray:
        return -self.hess

    def curvature_trace(self) -> float:
        """tr(A^-1 Ric); equals -tr(Hess^-1 Ric)."""
        return float(np.trace(np.linalg.solve(self.A, self.ricci_p0)))

    def _log_leading(self) -> float:
        _, ld_g = np.linalg.slogdet(self.g_p0)
        _, ld_a = np.linalg.slogdet(self.A)
        return self.N * self.f_max + self.n / 2 * math.log(2 * math.pi / self.N) + 0.5 * (ld_g - ld_a)


def laplace_approx(inp: LaplaceInput, curvature: bool = True) -> float:
    """Approximate int exp(N f) dV_g; ``curvature=False`` drops the Ricci bracket."""
    val = _safe_exp(inp._log_leading())
    if curvature:
        val *= 1.0 - inp.curvature_trace() / (6 * inp.N)
    return val


def laplace_log_expansion(inp: LaplaceInput, curvature: bool = True) -> float:
    """-log int exp(N f) dV_g to O(1/N^2), with the bracket expanded as log(1+x) ~ x."""
    out = -inp._log_leading()
    if curvature:
        out += inp.curvature_trace() / (6 * inp.N)
    return out


def laplace_rn(f_max: float, hess, N: float, n: int | None = None, h0: float = 1.0) -> float:
    """Flat-space Laplace value h0 exp(N f_max) sqrt(det(2 pi (-N Hess)^-1))."""
    A = -np.atleast_2d(np.asarray(hess, dtype=float))
    if A.shape[0] != A.shape[1] or (n is not None and A.shape[0] != n):
        raise InvalidInputError(f"hess must be {n or A.shape[0]}x{n or A.shape[0]}, got {A.shape}")
    if N <= 0:
        raise InvalidInputError("N must be positive")
    if np.linalg.eigvalsh(0.5 * (A + A.T))[0] <= 0:
        raise NoInteriorMaximumError("-Hess f(x0) is not positive definite")
    n = A.shape[0]
    _, ld = np.linalg.slogdet(N * A)
    return h0 * _safe_exp(N * f_max + 0.5 * (n * math.log(2 * math.pi) - ld))


@dataclass(frozen=True)
class IntegrableManifold:
    """exp(integrand_log(theta)) integrated against sqrt(det g) d theta.

    ``integrand_log`` is vectorized: (..., n) -> (...).
    """

    field: MetricField
    integrand_log: Callable[[np.ndarray], np.ndarray]


def _axis_rule(field: MetricField, axis: int, n: int):
    lo, hi = field.lower[axis], field.upper[axis]
    if field.periodic[axis]:
        return trapezoid_periodic(lo, hi, n)
    return gauss_legendre(lo, hi, n)


def _log_estimate(im: IntegrableManifold, n: int) -> float:
    f = im.field
    pts, wts = tensor_rule([_axis_rule(f, a, n) for a in range(f.n)])
    with np.errstate(divide="ignore"):
        L = im.integrand_log(pts) + np.log(f.sqrt_det(pts)) + np.log(wts)
    return float(logsumexp(L))


def log_integrate_manifold(
    im: IntegrableManifold, tol: float = 1e-10, max_evals: int = 10**7, start: int = 16
) -> float:
    """log of int exp(integrand_log) dV_g by tensor quadrature with node doubling.

    Gauss-Legendre on bounded axes (nodes avoid the faces, so integrable chart
    singularities such as sphere poles are harmless), trapezoid on periodic
    axes. Converged when two successive doublings change the result by at
    most ``tol`` relative.
    """
    if im.field.n > 3:
        raise InvalidInputError("tensor quadrature supports at most 3 axes")
    n = start
    prev = _log_estimate(im, n)
    streak = 0
    while True:
        n *= 2
        if n**im.field.n > max_evals:
            raise AccuracyError(
                f"quadrature did not reach rtol={tol} within {max_evals} evaluations", estimate=_safe_exp(prev)
            )
        cur = _log_estimate(im, n)
        streak = streak + 1 if abs(_safe_exp(cur - prev) - 1.0) <= tol else 0
        if streak >= 2:
            return cur
        prev = cur


def integrate_manifold(im: IntegrableManifold, tol: float = 1e-10, max_evals: int = 10**7) -> float:
    """exp of :func:`log_integrate_manifold`; inf if that overflows a double."""
    return _safe_exp(log_integrate_manifold(im, tol, max_evals))


def normal_expansion_residuals(field: MetricField, p, radii, directions: int = 8) -> np.ndarray:
    """Per-radius max |sqrt det g - (1 - x^T Ric x / 6)| / r^3.

    ``field`` must be expressed in Riemann normal coordinates centred at ``p``.
    """
    p = np.atleast_1d(np.asarray(p, dtype=float))
    radii = np.atleast_1d(np.asarray(radii, dtype=float))
    n = field.n
    if n == 1:
        dirs = np.array([[1.0], [-1.0]])
    elif n == 2:
        ang = np.linspace(0, 2 * np.pi, directions, endpoint=False)
        dirs = np.stack([np.cos(ang), np.sin(ang)], axis=-1)
    else:
        rng = np.random.default_rng(0)
        dirs = rng.standard_normal((directions, n))
        dirs /= np.linalg.norm(dirs, axis=1, keepdims=True)
    ric = ricci_numeric(field, p).ricci
    out = []
    for r in radii:
        x = r * dirs
        pts = p + x
        if np.any(pts < field.lower) or np.any(pts > field.upper):
            raise DomainError(f"radius {r} leaves the chart of {field.name}")
        pred = 1.0 - np.einsum("ki,ij,kj->k", x, ric, x) / 6.0
        out.append(np.max(np.abs(field.sqrt_det(pts) - pred)) / r**3)
    return np.array(out)


def normal_expansion_check(field: MetricField, p, radii) -> float:
    return float(np.max(normal_expansion_residuals(field, p, radii)))


# ---------------------------------------------------------------------------
# built-in validation cases

CASES = ("sphere", "circle", "flat", "p1")


def builtin_case(name: str, N: float) -> tuple[IntegrableManifold, LaplaceInput]:
    """(oracle integrand, Laplace input) for one of :data:`CASES`.

    sphere: unit 2-sphere, f = -d(north pole, .)^2 / 2 (Ric = g).
    circle: f = cos(theta) on the unit circle.
    flat:   the square [-6, 6]^2, f = -|x|^2 / 2.
    p1:     P_1 with g = 1/(2 q^2), f = -(log q)^2 / 2, truncated to |log q| <= 3.
    """
    if name == "sphere":
        im = IntegrableManifold(sphere_field(), lambda x: -0.5 * N * x[..., 0] ** 2)
        inp = LaplaceInput(2, 0.0, -np.eye(2), np.eye(2), np.eye(2), N)
    elif name == "circle":
        im = IntegrableManifold(circle_field(), lambda x: N * np.cos(x[..., 0]))
        inp = LaplaceInput(1, 1.0, [[-1.0]], [[1.0]], [[0.0]], N)
    elif name == "flat":
        im = IntegrableManifold(euclidean_field(2, -6.0, 6.0), lambda x: -0.5 * N * np.sum(x**2, axis=-1))
        inp = LaplaceInput(2, 0.0, -np.eye(2), np.eye(2), np.zeros((2, 2)), N)
    elif name == "p1":
        field = pm_field(1, lower=[math.exp(-3.0)], upper=[math.exp(3.0)])
        im = IntegrableManifold(field, lambda x: -0.5 * N * np.log(x[..., 0]) ** 2)
        inp = LaplaceInput(1, 0.0, [[-1.0]], [[0.5]], [[0.0]], N)
    else:
        raise InvalidInputError(f"unknown case {name!r}; expected one of {CASES}")
    return im, inp


def loglog_slope(N, err) -> float:
    """Least-squares slope of log|err| against log N."""
    return float(np.polyfit(np.log(np.asarray(N, float)), np.log(np.abs(np.asarray(err, float))), 1)[0])


def laplace_ladder(name: str, ladder=(25, 50, 100, 200), tol: float = 1e-12) -> dict:
    """Oracle vs approximation table over an N ladder, with fitted error slopes."""
    rows = []
    for N in ladder:
        im, inp = builtin_case(name, N)
        oracle = integrate_manifold(im, tol=tol)
        plain = laplace_approx(inp, curvature=False)
        curved = laplace_approx(inp, curvature=True)
        rows.append(
            {
                "N": N,
                "oracle": oracle,
                "approx_flat": plain,
                "approx_curved": curved,
                "rel_err_flat": plain / oracle - 1.0,
                "rel_err_curved": curved / oracle - 1.0,
            }
        )

    def slope(key):
        errs = [r[key] for r in rows]
        # slopes are meaningless once the error sits at round-off level
        if min(abs(e) for e in errs) < 1e-13:
            return None
        return loglog_slope(ladder, errs)

    return {"case": name, "rows": rows, "slope_flat": slope("rel_err_flat"), "slope_curved": slope("rel_err_curved")}
