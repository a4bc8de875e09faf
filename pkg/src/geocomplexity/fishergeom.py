"""Fisher information metric, curvature oracles and built-in metric fields.

Two families of objects live here:

* :class:`DiscreteModel` -- a smooth family of distributions over ``K``
  outcomes. Its Fisher matrix is obtained by finite differences, either as
  the expected outer product of the score or as minus the expected Hessian.
* :class:`MetricField` -- a chart box plus a vectorized metric function
  ``theta -> g(theta)``; :func:`ricci_numeric` differentiates it to obtain
  Christoffel symbols, Riemann, Ricci and scalar curvature.

Curvature convention (unit 2-sphere has scalar curvature +2)::

    R^r_{smn} = d_m G^r_{ns} - d_n G^r_{ms} + G^r_{ml} G^l_{ns} - G^r_{nl} G^l_{ms}
    Ric_{sn}  = R^m_{smn}
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass, field
from typing import Callable

import numpy as np

from .errors import DegenerateModelError, DomainError, InvalidInputError, ResourceLimitError
from .symspace import as_spd, from_sym_coords, sym_basis, sym_dim


@dataclass(frozen=True)
class MetricField:
    """Riemannian metric on an axis-aligned chart box.

    ``components`` must accept an array of shape ``(..., n)`` and return
    ``(..., n, n)``. Periodic axes are integrated with the trapezoid rule
    and are exempt from the boundary-distance check of the curvature oracle.
    """

    n: int
    lower: np.ndarray
    upper: np.ndarray
    components: Callable[[np.ndarray], np.ndarray]
    periodic: tuple = ()
    name: str = "metric"

    def __post_init__(self):
        object.__setattr__(self, "lower", np.broadcast_to(np.asarray(self.lower, float), (self.n,)).copy())
        object.__setattr__(self, "upper", np.broadcast_to(np.asarray(self.upper, float), (self.n,)).copy())
        periodic = tuple(bool(p) for p in self.periodic) or (False,) * self.n
        if len(periodic) != self.n:
            raise InvalidInputError("periodic flags must have one entry per axis")
        object.__setattr__(self, "periodic", periodic)

    def __call__(self, theta) -> np.ndarray:
        return self.components(np.asarray(theta, dtype=float))

    def sqrt_det(self, theta) -> np.ndarray:
        return np.sqrt(np.linalg.det(self(theta)))

    def check_spd(self, points: int = 5) -> None:
        """Spot-check positive definiteness on an interior grid."""
        axes = [np.linspace(lo, hi, points + 2)[1:-1] for lo, hi in zip(self.lower, self.upper)]
        grid = np.stack(np.meshgrid(*axes, indexing="ij"), axis=-1).reshape(-1, self.n)
        lam = np.linalg.eigvalsh(self(grid))
        if np.any(lam <= 0):
            raise DomainError(f"{self.name}: metric not positive definite on the domain")


@dataclass(frozen=True)
class DiscreteModel:
    """Smooth family of distributions on ``K`` outcomes.

    ``prob(theta)`` maps a length-``n`` parameter to a length-``K``
    probability vector. ``mle`` (counts -> theta) and ``metric`` (closed-form
    Fisher matrix) are optional shortcuts used by the regret oracles.

    Components run along the first axis: ``prob`` may receive ``theta`` of
    shape ``(n, M)`` and then returns ``(K, M)``; ``mle`` likewise maps
    counts ``(K, M)`` to ``(n, M)``.
    """

    n: int
    K: int
    prob: Callable[[np.ndarray], np.ndarray]
    lower: np.ndarray
    upper: np.ndarray
    mle: Callable | None = None
    metric: Callable | None = None
    name: str = "model"

    def __call__(self, theta) -> np.ndarray:
        return np.asarray(self.prob(np.atleast_1d(np.asarray(theta, dtype=float))), dtype=float)


@dataclass(frozen=True)
class CurvatureData:
    point: np.ndarray
    metric: np.ndarray
    ricci: np.ndarray
    scalar: float
    riemann: np.ndarray = field(repr=False, default=None)


# ---------------------------------------------------------------------------
# built-in discrete models


def bernoulli() -> DiscreteModel:
    return DiscreteModel(
        n=1,
        K=2,
        prob=lambda t: np.array([t[0], 1.0 - t[0]]),
        lower=np.array([0.0]),
        upper=np.array([1.0]),
        mle=lambda c: np.array([c[0] / (c[0] + c[1])]),
        metric=lambda t: np.array([[1.0 / (t[0] * (1.0 - t[0]))]]),
        name="bernoulli",
    )


def trinomial() -> DiscreteModel:
    def metric(t):
        p3 = 1.0 - t[0] - t[1]
        return np.array([[1 / t[0] + 1 / p3, 1 / p3], [1 / p3, 1 / t[1] + 1 / p3]])

    return DiscreteModel(
        n=2,
        K=3,
        prob=lambda t: np.array([t[0], t[1], 1.0 - t[0] - t[1]]),
        lower=np.array([0.0, 0.0]),
        upper=np.array([1.0, 1.0]),
        mle=lambda c: np.asarray(c[:2], float) / np.sum(c, axis=0),
        metric=metric,
        name="trinomial",
    )


def constant_model(p=(0.2, 0.3, 0.5)) -> DiscreteModel:
    """A family that ignores its parameter (zero Fisher information)."""
    p = np.asarray(p, dtype=float)
    return DiscreteModel(
        n=1, K=p.size, prob=lambda t: p.copy(), lower=np.array([0.0]), upper=np.array([1.0]), name="constant"
    )


# ---------------------------------------------------------------------------
# finite differences


def _steps(theta: np.ndarray, rel: float) -> np.ndarray:
    return rel * np.maximum(np.abs(theta), 1.0)


def _prob_checked(model: DiscreteModel, theta) -> np.ndarray:
    p = model(theta)
    if np.any(p <= 1e-12):
        raise DegenerateModelError(f"{model.name}: probability vanishes at theta={np.asarray(theta).tolist()}")
    return p


def _prob_jacobian(fn, theta: np.ndarray, h: np.ndarray) -> np.ndarray:
    cols = []
    for mu in range(theta.size):
        e = np.zeros_like(theta)
        e[mu] = h[mu]
        cols.append((fn(theta + e) - fn(theta - e)) / (2 * h[mu]))
    return np.stack(cols, axis=-1)


def fisher_outer(model: DiscreteModel, theta, rel_step: float = 1e-5) -> np.ndarray:
    """sum_i (1/p_i) dp_i/dtheta^mu dp_i/dtheta^nu, derivatives by central differences."""
    theta = np.atleast_1d(np.asarray(theta, dtype=float))
    p = _prob_checked(model, theta)
    J = _prob_jacobian(model, theta, _steps(theta, rel_step))
    g = (J / p[:, None]).T @ J
    return 0.5 * (g + g.T)


def fisher_hessian(model: DiscreteModel, theta, rel_step: float = 1e-4) -> np.ndarray:
    """-E[d^2 log p], second derivatives of log p_i by central differences."""
    theta = np.atleast_1d(np.asarray(theta, dtype=float))
    p = _prob_checked(model, theta)
    h = _steps(theta, rel_step)
    n = theta.size

    def logp(t):
        return np.log(_prob_checked(model, t))

    H = np.zeros((p.size, n, n))
    f0 = logp(theta)
    for mu in range(n):
        e = np.zeros(n)
        e[mu] = h[mu]
        H[:, mu, mu] = (logp(theta + e) - 2 * f0 + logp(theta - e)) / h[mu] ** 2
        for nu in range(mu + 1, n):
            f = np.zeros(n)
            f[nu] = h[nu]
            mixed = (logp(theta + e + f) - logp(theta + e - f) - logp(theta - e + f) + logp(theta - e - f)) / (
                4 * h[mu] * h[nu]
            )
            H[:, mu, nu] = H[:, nu, mu] = mixed
    return -np.einsum("i,imn->mn", p, H)


def product_model(model: DiscreteModel, N: int, max_outcomes: int = 10**5) -> DiscreteModel:
    """The N-fold i.i.d. product over K**N outcome sequences."""
    if model.K**N > max_outcomes:
        raise ResourceLimitError(f"K^N = {model.K ** N} exceeds {max_outcomes}")

    def prob(t):
        p = model(t)
        out = p
        for _ in range(N - 1):
            out = np.multiply.outer(out, p)
        return np.asarray(out).ravel()

    return DiscreteModel(
        n=model.n, K=model.K**N, prob=prob, lower=model.lower, upper=model.upper, name=f"{model.name}^{N}"
    )


def extensive_check(model: DiscreteModel, theta, N: int) -> tuple[np.ndarray, np.ndarray]:
    """Fisher matrices of the N-fold product model and of the base model."""
    return fisher_outer(product_model(model, N), theta), fisher_outer(model, theta)


def simplex_sphere_factor(model: DiscreteModel, theta, rel_step: float = 1e-5):
    """Ratio of the Fisher metric to the pull-back of the round sphere metric.

    The pull-back is taken along ``p -> sqrt(p)``. Returns ``h^-1 g`` as a
    matrix, or a float for one-parameter models.
    """
    theta = np.atleast_1d(np.asarray(theta, dtype=float))
    g = fisher_outer(model, theta, rel_step)
    J = _prob_jacobian(lambda t: np.sqrt(_prob_checked(model, t)), theta, _steps(theta, rel_step))
    h = J.T @ J
    ratio = np.linalg.solve(h, g)
    return float(ratio[0, 0]) if model.n == 1 else ratio


def model_metric(model: DiscreteModel, theta) -> np.ndarray:
    if model.metric is not None:
        return np.asarray(model.metric(np.atleast_1d(theta)), dtype=float)
    return fisher_outer(model, theta)


# ---------------------------------------------------------------------------
# the SPD manifold P_m


def pm_metric(q, U, V) -> float:
    """Fisher inner product 1/2 tr(q^-1 U q^-1 V) on symmetric matrices."""
    q = as_spd(q)
    U = np.asarray(U, dtype=float)
    V = np.asarray(V, dtype=float)
    if U.shape != (q.dim, q.dim) or V.shape != (q.dim, q.dim):
        raise InvalidInputError("tangent vectors must match the dimension of q")
    qi = q.inv()
    return 0.5 * float(np.trace(qi @ U @ qi @ V))


def _pm_gram(qinv: np.ndarray, m: int) -> np.ndarray:
    E = sym_basis(m)
    M = np.einsum("...ab,kbc->...kac", qinv, E)
    return 0.5 * np.einsum("...kab,...lba->...kl", M, M)


def pm_metric_matrix(q) -> np.ndarray:
    """Gram matrix of :func:`pm_metric` in the q_ij coordinates of :func:`sym_basis`."""
    q = as_spd(q)
    return _pm_gram(q.inv(), q.dim)


def pm_scalar_curvature(m: int) -> float:
    if int(m) != m or m < 1:
        raise InvalidInputError(f"m must be a positive integer, got {m!r}")
    return -(m + 2) * m * (m - 1) / 4.0


# ---------------------------------------------------------------------------
# built-in metric fields


def euclidean_field(n: int, lower=0.0, upper=1.0) -> MetricField:
    def comp(x):
        x = np.asarray(x, float)
        return np.broadcast_to(np.eye(n), x.shape[:-1] + (n, n)).copy()

    return MetricField(n, lower, upper, comp, name="euclidean")


def circle_field() -> MetricField:
    return MetricField(1, 0.0, 2 * np.pi, lambda x: np.ones(np.shape(x)[:-1] + (1, 1)), (True,), name="circle")


def sphere_field() -> MetricField:
    """Unit 2-sphere in (colatitude, longitude); g = diag(1, sin^2 colatitude)."""

    def comp(x):
        x = np.asarray(x, float)
        out = np.zeros(x.shape[:-1] + (2, 2))
        out[..., 0, 0] = 1.0
        out[..., 1, 1] = np.sin(x[..., 0]) ** 2
        return out

    return MetricField(2, [0.0, 0.0], [np.pi, 2 * np.pi], comp, (False, True), name="sphere")


def _one_minus_sinc2_over_u2(u: np.ndarray) -> np.ndarray:
    # (1 - sin^2 u / u^2) / u^2, series below u = 1e-2 to avoid cancellation
    u = np.asarray(u, float)
    u2 = u * u
    small = u < 1e-2
    safe = np.where(small, 1.0, u)
    direct = (1.0 - (np.sin(safe) / safe) ** 2) / (safe * safe)
    series = 1 / 3 - 2 * u2 / 45 + u2 * u2 / 315 - 2 * u2**3 / 14175
    return np.where(small, series, direct)


def sphere_normal_field(radius: float = 1.0, n: int = 2, extent: float = 1.0) -> MetricField:
    """Round n-sphere of given radius in Riemann normal coordinates at a pole.

    g(x) = s^2 I + (1 - s^2) x x^T / |x|^2, s = radius sin(|x|/radius) / |x|.
    The Ricci tensor at the origin is (n - 1) / radius^2 times the identity.
    """

    def comp(x):
        x = np.asarray(x, float)
        r = np.linalg.norm(x, axis=-1)
        u = r / radius
        c = _one_minus_sinc2_over_u2(u) / radius**2  # (1 - s^2) / r^2
        s2 = 1.0 - c * r * r
        eye = np.eye(n)
        return s2[..., None, None] * eye + c[..., None, None] * np.einsum("...i,...j->...ij", x, x)

    return MetricField(n, -extent, extent, comp, name=f"sphere_normal(r={radius})")


def bernoulli_field() -> MetricField:
    return MetricField(1, 0.0, 1.0, lambda x: (1.0 / (x * (1.0 - x)))[..., None], name="bernoulli")


def pm_field(m: int, center=None, halfwidth: float = 0.5, lower=None, upper=None) -> MetricField:
    """P_m with metric 1/2 tr(q^-1 dq q^-1 dq) in q_ij coordinates.

    The chart box defaults to ``center +/- halfwidth`` around ``center``
    (identity coordinates when omitted); explicit ``lower``/``upper`` win.
    """
    k = sym_dim(m)
    if center is None:
        center = np.eye(m)[np.triu_indices(m)]
    center = np.asarray(center, float)
    lower = center - halfwidth if lower is None else lower
    upper = center + halfwidth if upper is None else upper

    def comp(x):
        q = from_sym_coords(x, m)
        return _pm_gram(np.linalg.inv(q), m)

    return MetricField(k, lower, upper, comp, name=f"P_{m}")


# ---------------------------------------------------------------------------
# curvature by finite differences


def _metric_at(field: MetricField, pts: np.ndarray) -> np.ndarray:
    g = field(pts)
    if np.any(np.linalg.eigvalsh(g) <= 0):
        raise DomainError(f"{field.name}: metric not positive definite at stencil points")
    return g


def _christoffel(field: MetricField, pts: np.ndarray, h: np.ndarray) -> np.ndarray:
    """Gamma^r_{mn} at each row of ``pts`` (shape (P, n)) -> (P, n, n, n)."""
    n = field.n
    P = pts.shape[0]
    shifts = np.zeros((2 * n, n))
    for mu in range(n):
        shifts[2 * mu, mu] = h[mu]
        shifts[2 * mu + 1, mu] = -h[mu]
    stencil = pts[:, None, :] + shifts[None, :, :]
    gs = _metric_at(field, stencil.reshape(-1, n)).reshape(P, 2 * n, n, n)
    dg = (gs[:, 0::2] - gs[:, 1::2]) / (2 * h[None, :, None, None])  # dg[p, l, a, b] = d_l g_ab
    g = _metric_at(field, pts)
    ginv = np.linalg.inv(g)
    # Gamma_{s,mn} = 1/2 (d_m g_sn + d_n g_sm - d_s g_mn)
    low = 0.5 * (np.einsum("pmsn->psmn", dg) + np.einsum("pnsm->psmn", dg) - dg)
    return np.einsum("prs,psmn->prmn", ginv, low)


def _riemann(field: MetricField, theta: np.ndarray, h: np.ndarray) -> np.ndarray:
    n = field.n
    pts = [theta]
    for mu in range(n):
        e = np.zeros(n)
        e[mu] = h[mu]
        pts += [theta + e, theta - e]
    G = _christoffel(field, np.array(pts), h)
    G0 = G[0]
    dG = (G[1::2] - G[2::2]) / (2 * h[:, None, None, None])  # dG[m, r, a, b] = d_m Gamma^r_ab
    t1 = np.einsum("mrns->rsmn", dG)  # d_m Gamma^r_{ns}
    t2 = np.einsum("nrms->rsmn", dG)  # d_n Gamma^r_{ms}
    t3 = np.einsum("rml,lns->rsmn", G0, G0)
    t4 = np.einsum("rnl,lms->rsmn", G0, G0)
    return t1 - t2 + t3 - t4


def ricci_numeric(field: MetricField, theta, rel_step: float = 1e-3, richardson: bool = True) -> CurvatureData:
    """Riemann, Ricci and scalar curvature of ``field`` at ``theta``.

    Christoffel symbols come from central differences of g, the Riemann
    tensor from central differences of the Christoffels; two step sizes
    (ratio 2) are combined by Richardson extrapolation.
    """
    theta = np.atleast_1d(np.asarray(theta, dtype=float))
    if theta.shape != (field.n,):
        raise InvalidInputError(f"point must have {field.n} coordinates")
    h = _steps(theta, rel_step)
    margin = 10 * h
    for mu in range(field.n):
        if field.periodic[mu]:
            continue
        if theta[mu] - margin[mu] < field.lower[mu] or theta[mu] + margin[mu] > field.upper[mu]:
            raise DomainError(f"point too close to the boundary of {field.name} on axis {mu}")
    riem = _riemann(field, theta, h)
    if richardson:
        riem = (4 * _riemann(field, theta, h / 2) - riem) / 3
    ricci = np.einsum("msmn->sn", riem)
    ricci = 0.5 * (ricci + ricci.T)
    g = field(theta)
    scalar = float(np.sum(np.linalg.inv(g) * ricci))
    return CurvatureData(point=theta, metric=g, ricci=ricci, scalar=scalar, riemann=riem)


def jeffreys_density(field: MetricField, theta, log_volume: float) -> float:
    """sqrt(det g(theta)) / vol_g(M), with the volume given as its log."""
    if not np.isfinite(log_volume):
        raise InvalidInputError("log_volume must be finite")
    theta = np.atleast_1d(np.asarray(theta, dtype=float))
    return float(field.sqrt_det(theta) * np.exp(-log_volume))


def grid_points(lower, upper, points: int) -> np.ndarray:
    """Interior tensor grid (excluding the box faces), shape (points**n, n)."""
    axes = [np.linspace(lo, hi, points + 2)[1:-1] for lo, hi in zip(lower, upper)]
    return np.array(list(itertools.product(*axes)))
