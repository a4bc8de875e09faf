"""Geometric complexity, minmax regret and exact oracles on small discrete models.

The complexity of data x^N under an n-parameter model at the estimate theta is

    -log p(x^N | theta) + n/2 log(N / 2 pi) + log vol_g(M)
        - log(sqrt det g(theta) / sqrt det I(x^N, theta)) - R(theta) / (6 N)

and the exact counterparts (brute-force NML, Bayes mixtures, KL identities)
are enumerated over sufficient-statistic count classes.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable

import numpy as np
from scipy import integrate
from scipy.special import betaln, gammaln, logsumexp, rel_entr, xlogy

from .errors import (
    AccuracyError,
    InfiniteLossError,
    InvalidInputError,
    ResourceLimitError,
)
from .fishergeom import DiscreteModel, model_metric, pm_metric_matrix, pm_scalar_curvature, product_model
from .gaussmodel import (
    Dataset,
    assemble_Q,
    empirical_cov,
    gauss_loglik,
    mle_is_clipped,
    mle_q,
    pca_split,
    scale_exponent,
)
from .quadrature import gauss_legendre
from .symspace import from_sym_coords, sym_coords
from .volume import DEFAULT_SEED, log_vol_Ms

TERMS = ("neg_loglik", "dim_term", "log_vol", "ratio_term", "curvature_term")


@dataclass(frozen=True)
class ComplexityReport:
    neg_loglik: float
    dim_term: float
    log_vol: float
    ratio_term: float
    curvature_term: float
    n: int
    N: int
    metadata: dict = field(default_factory=dict)

    @property
    def total(self) -> float:
        return self.neg_loglik + self.dim_term + self.log_vol + self.ratio_term + self.curvature_term

    @property
    def warnings(self) -> list:
        return list(self.metadata.get("warnings", []))

    def terms(self) -> dict:
        out = {k: getattr(self, k) for k in TERMS}
        out["total"] = self.total
        return out

    def to_dict(self) -> dict:
        return {"n": self.n, "N": self.N, "terms": self.terms(), "metadata": dict(self.metadata)}


@dataclass(frozen=True)
class ObservedInfo:
    matrix: np.ndarray
    point: np.ndarray


def _check_nN(n, N):
    if int(n) != n or n < 1 or int(N) != N or N < 1:
        raise InvalidInputError(f"n and N must be positive integers, got n={n!r}, N={N!r}")


def geometric_complexity(
    neg_loglik: float,
    n: int,
    N: int,
    log_vol: float,
    logdet_g: float = 0.0,
    logdet_I: float = 0.0,
    scalar_curvature: float = 0.0,
    metadata: dict | None = None,
) -> ComplexityReport:
    """Assemble the five-term report; the log dets are those of g and I at the estimate."""
    _check_nN(n, N)
    vals = (neg_loglik, log_vol, logdet_g, logdet_I, scalar_curvature)
    if not all(math.isfinite(v) for v in vals):
        raise InvalidInputError("complexity inputs must be finite")
    return ComplexityReport(
        neg_loglik=float(neg_loglik),
        dim_term=n / 2 * math.log(N / (2 * math.pi)),
        log_vol=float(log_vol),
        ratio_term=0.5 * (logdet_I - logdet_g),
        curvature_term=0.0 - scalar_curvature / (6 * N),
        n=int(n),
        N=int(N),
        metadata=dict(metadata or {}),
    )


def rissanen_complexity(neg_loglik: float, n: int, N: int, log_vol: float) -> float:
    """Stochastic complexity without the ratio and curvature corrections."""
    _check_nN(n, N)
    return neg_loglik + n / 2 * math.log(N / (2 * math.pi)) + log_vol


# ---------------------------------------------------------------------------
# discrete models


def _log_probs(model: DiscreteModel, theta: np.ndarray) -> np.ndarray:
    with np.errstate(divide="ignore"):
        return np.log(model(theta))


def observed_info_discrete(model: DiscreteModel, counts, theta, rel_step: float = 1e-4) -> ObservedInfo:
    """-(1/N) Hess log p(x^N | theta) from sufficient counts, by central differences."""
    counts = np.asarray(counts, dtype=float)
    if counts.shape != (model.K,) or np.any(counts < 0) or counts.sum() < 1:
        raise InvalidInputError(f"counts must be {model.K} non-negative numbers summing to N >= 1")
    theta = np.atleast_1d(np.asarray(theta, dtype=float))
    N = counts.sum()
    w = counts / N
    used = counts > 0
    n = theta.size
    # shrink the step near the parameter boundary, where log p bends sharply
    room = np.minimum(theta - model.lower, model.upper - theta)
    h = rel_step * np.minimum(np.maximum(np.abs(theta), 1.0), np.maximum(room, 1e-8))

    def ell(t):
        lp = _log_probs(model, t)[used]
        if not np.all(np.isfinite(lp)):
            raise InfiniteLossError(f"an observed outcome has zero probability near theta={t.tolist()}")
        return float(np.dot(w[used], lp))

    f0 = ell(theta)
    H = np.zeros((n, n))
    for a in range(n):
        ea = np.zeros(n)
        ea[a] = h[a]
        H[a, a] = (ell(theta + ea) - 2 * f0 + ell(theta - ea)) / h[a] ** 2
        for b in range(a + 1, n):
            eb = np.zeros(n)
            eb[b] = h[b]
            H[a, b] = H[b, a] = (
                ell(theta + ea + eb) - ell(theta + ea - eb) - ell(theta - ea + eb) + ell(theta - ea - eb)
            ) / (4 * h[a] * h[b])
    return ObservedInfo(matrix=-H, point=theta)


def count_classes(K: int, N: int, max_classes: int = 5 * 10**7) -> np.ndarray:
    """All count vectors of length K summing to N, shape (C, K)."""
    if int(N) != N or N < 0:
        raise InvalidInputError("N must be a non-negative integer")
    total = math.comb(N + K - 1, K - 1)
    if total > max_classes:
        raise ResourceLimitError(f"{total} count classes exceed the limit {max_classes}")
    if K == 1:
        return np.array([[N]])
    if K == 2:
        k = np.arange(N + 1)
        return np.column_stack([k, N - k])
    blocks = []
    for c in range(N + 1):
        rest = count_classes(K - 1, N - c, max_classes)
        blocks.append(np.column_stack([np.full(rest.shape[0], c), rest]))
    return np.concatenate(blocks, axis=0)


def log_multinomial(classes: np.ndarray) -> np.ndarray:
    N = classes.sum(axis=1)
    return gammaln(N + 1) - gammaln(classes + 1).sum(axis=1)


def nml_bruteforce(model: DiscreteModel, N: int, max_classes: int = 5 * 10**7) -> float:
    """log sum_{x^N} p(x^N | theta_hat(x^N)), summed exactly over count classes."""
    if model.mle is None:
        raise InvalidInputError(f"{model.name} has no closed-form MLE")
    if int(N) != N or N < 1:
        raise InvalidInputError("N must be a positive integer")
    N = int(N)
    if math.comb(N + model.K - 1, model.K - 1) > max_classes:
        raise ResourceLimitError(f"too many count classes for K={model.K}, N={N}")

    def block(C):
        C = C.astype(float)
        p_hat = np.asarray(model.prob(model.mle(C.T)), dtype=float)
        return logsumexp(log_multinomial(C) + np.sum(xlogy(C.T, p_hat), axis=0))

    if model.K <= 2:
        return float(block(count_classes(model.K, N)))
    # one block per leading count keeps memory linear in N
    parts = []
    for c0 in range(N + 1):
        rest = count_classes(model.K - 1, N - c0)
        parts.append(block(np.column_stack([np.full(rest.shape[0], c0), rest])))
    return float(logsumexp(parts))


def _require_1d(model: DiscreteModel):
    if model.n != 1:
        raise InvalidInputError("mixture oracles are implemented for one-parameter models")


def _sqrt_det_metric(model: DiscreteModel, x: np.ndarray) -> np.ndarray:
    try:
        g = np.asarray(model.metric(x[None, :]), dtype=float).reshape(-1) if model.metric else None
    except Exception:
        g = None
    if g is None or g.shape != x.shape:
        g = np.array([model_metric(model, [t])[0, 0] for t in x])
    return np.sqrt(g)


def model_log_volume(model: DiscreteModel) -> float:
    """log of the Fisher volume int sqrt(g) d theta of a one-parameter model."""
    _require_1d(model)
    f = lambda t: float(_sqrt_det_metric(model, np.array([t]))[0])  # noqa: E731
    val, err = integrate.quad(f, model.lower[0], model.upper[0], epsabs=0, epsrel=1e-13, limit=200)
    if not np.isfinite(val) or val <= 0:
        raise AccuracyError("Fisher volume integral failed", estimate=val)
    return math.log(val)


@dataclass(frozen=True)
class Prior:
    """Density (w.r.t. d theta) on the parameter interval of a one-parameter model."""

    name: str
    logpdf: Callable[[np.ndarray], np.ndarray]


def jeffreys_prior(model: DiscreteModel) -> Prior:
    _require_1d(model)
    log_vol = model_log_volume(model)
    return Prior("jeffreys", lambda x: np.log(_sqrt_det_metric(model, np.asarray(x, float))) - log_vol)


def beta_prior(model: DiscreteModel, a: float, b: float, name: str | None = None) -> Prior:
    """Beta(a, b) stretched over the model's parameter interval."""
    _require_1d(model)
    if a <= 0 or b <= 0:
        raise InvalidInputError("Beta parameters must be positive")
    lo, hi = float(model.lower[0]), float(model.upper[0])
    width = hi - lo

    def logpdf(x):
        u = (np.asarray(x, float) - lo) / width
        return xlogy(a - 1, u) + xlogy(b - 1, 1 - u) - betaln(a, b) - math.log(width)

    return Prior(name or f"beta({a:g},{b:g})", logpdf)


def uniform_prior(model: DiscreteModel) -> Prior:
    return beta_prior(model, 1.0, 1.0, name="uniform")


@dataclass(frozen=True)
class _Rule:
    x: np.ndarray
    log_jw: np.ndarray  # log(quadrature weight * Jacobian)
    log_prior: np.ndarray
    log_p: np.ndarray  # (K, M) outcome log probabilities at the nodes

    @property
    def log_w(self) -> np.ndarray:
        return self.log_jw + self.log_prior


def _rule(model: DiscreteModel, prior: Prior, nodes: int) -> _Rule:
    """Gauss-Legendre in phi with theta = lo + (hi - lo) sin^2(phi).

    The Jacobian vanishes like sqrt(theta - lo) and sqrt(hi - theta), which
    absorbs the inverse square-root endpoint behaviour of Fisher volume
    densities and keeps the integrand smooth.
    """
    lo, hi = float(model.lower[0]), float(model.upper[0])
    phi, w = gauss_legendre(0.0, 0.5 * math.pi, nodes)
    x = lo + (hi - lo) * np.sin(phi) ** 2
    jac = (hi - lo) * np.sin(2 * phi)
    P = np.asarray(model.prob(x[None, :]), dtype=float)
    if P.shape != (model.K, x.size):
        P = np.stack([model([t]) for t in x], axis=1)
    with np.errstate(divide="ignore"):
        return _Rule(x, np.log(w * jac), prior.logpdf(x), np.log(P))


def _log_marginals(rule: _Rule, classes: np.ndarray, chunk: int = 4096) -> np.ndarray:
    """log m(c) = log int w(theta) prod_i p_i(theta)^c_i d theta for each class row."""
    out = np.empty(classes.shape[0])
    for i in range(0, classes.shape[0], chunk):
        C = classes[i : i + chunk].astype(float)
        with np.errstate(invalid="ignore"):
            L = C @ np.where(np.isfinite(rule.log_p), rule.log_p, 0.0)
            # zero-probability outcomes that were actually observed
            bad = (C > 0) @ (~np.isfinite(rule.log_p)).astype(float) > 0
        L = np.where(bad, -np.inf, L)
        out[i : i + chunk] = logsumexp(L + rule.log_w, axis=1)
    return out


def log_marginal(
    model: DiscreteModel, prior: Prior, counts, tol: float = 1e-10, max_nodes: int = 8192
) -> float:
    """log of the Bayes mixture probability of one sequence with the given counts."""
    _require_1d(model)
    C = np.asarray(counts, dtype=float)[None, :]
    if C.shape[1] != model.K or np.any(C < 0):
        raise InvalidInputError(f"counts must be {model.K} non-negative numbers")
    nodes = 32
    prev = _log_marginals(_rule(model, prior, nodes), C)[0]
    while nodes < max_nodes:
        nodes *= 2
        cur = _log_marginals(_rule(model, prior, nodes), C)[0]
        if abs(cur - prev) <= tol * max(1.0, abs(cur)):
            return float(cur)
        prev = cur
    raise AccuracyError(f"mixture quadrature did not converge to {tol}", estimate=float(prev))


def jeffreys_mixture_length(model: DiscreteModel, counts) -> float:
    """Code length -log m_N(x^N) of the Jeffreys mixture, in nats."""
    return -log_marginal(model, jeffreys_prior(model), counts)


def prior_mass(model: DiscreteModel, prior: Prior, nodes: int = 512) -> float:
    r = _rule(model, prior, nodes)
    return float(np.exp(logsumexp(r.log_w)))


@dataclass(frozen=True)
class KLDecomposition:
    lhs: float
    rhs_part1: float
    rhs_part2: float

    @property
    def infinite(self) -> bool:
        return math.isinf(self.lhs)

    @property
    def residual(self) -> float:
        if self.infinite:
            return 0.0 if math.isinf(self.rhs_part1 + self.rhs_part2) else math.inf
        return self.lhs - self.rhs_part1 - self.rhs_part2


def kl_decomposition_check(
    model: DiscreteModel, prior: Prior, q=None, N: int = 2, nodes: int = 64, max_outcomes: int = 10**4
) -> KLDecomposition:
    """Both sides of int w D(p_theta || q) = int w D(p_theta || m_N) + D(m_N || q).

    Sequences are enumerated exactly; theta is integrated on a fixed rule
    whose prior weights are normalized to one, so the identity is exact up to
    rounding. ``q=None`` uses the mixture itself.
    """
    _require_1d(model)
    prod = product_model(model, N, max_outcomes=max_outcomes)
    r = _rule(model, prior, nodes)
    w = np.exp(r.log_w - logsumexp(r.log_w))
    P = np.stack([prod([t]) for t in r.x])
    m = w @ P
    q = m if q is None else np.asarray(q, dtype=float)
    if q.shape != m.shape or np.any(q < 0) or not math.isclose(q.sum(), 1.0, rel_tol=1e-9):
        raise InvalidInputError(f"q must be a probability vector over {m.size} sequences")
    lhs = float(w @ rel_entr(P, q).sum(axis=1))
    part1 = float(w @ rel_entr(P, m).sum(axis=1))
    part2 = float(rel_entr(m, q).sum())
    return KLDecomposition(lhs, part1, part2)


@dataclass(frozen=True)
class BayesRegretCheck:
    N: int
    exact: float
    expansion: float
    kl_to_jeffreys: float
    log_volume: float

    @property
    def gap(self) -> float:
        return self.exact - self.expansion

    @property
    def expansion_without_constant(self) -> float:
        """-D(w || w_J) + n/2 log(N / 2 pi), the form with the volume and -n/2 terms omitted."""
        return self.expansion - self.log_volume + 0.5


def kl_divergence_priors(model: DiscreteModel, w: Prior, v: Prior, nodes: int = 512) -> float:
    """D(w || v) between two priors on the same one-parameter model."""
    r = _rule(model, w, nodes)
    return float(np.sum(np.exp(r.log_w) * (r.log_prior - v.logpdf(r.x))))


def bayes_regret_expansion_check(
    model: DiscreteModel, prior: Prior, N: int, nodes: int = 1024, max_classes: int = 10**6
) -> BayesRegretCheck:
    """Exact mutual information between theta ~ w and x^N against its large-N expansion.

    exact     = int w sum_x p log(p / m_N)
    expansion = -D(w || w_J) + n/2 log(N / 2 pi) + log vol_g - n/2
    """
    _require_1d(model)
    if int(N) != N or N < 1:
        raise InvalidInputError("N must be a positive integer")
    N = int(N)
    r = _rule(model, prior, nodes)
    P = np.exp(r.log_p)
    w = np.exp(r.log_w)
    neg_entropy = np.sum(xlogy(P, P), axis=0)
    classes = count_classes(model.K, N, max_classes=max_classes)
    log_m = _log_marginals(r, classes)
    mult = log_multinomial(classes)
    with np.errstate(invalid="ignore"):
        term = np.where(np.isfinite(log_m), np.exp(mult + log_m) * log_m, 0.0)
    exact = float(N * np.dot(w, neg_entropy) - np.sum(term))
    log_vol = model_log_volume(model)
    kl = kl_divergence_priors(model, prior, jeffreys_prior(model), nodes)
    expansion = -kl + 0.5 * math.log(N / (2 * math.pi)) + log_vol - 0.5
    return BayesRegretCheck(N, exact, expansion, kl, log_vol)


def bernoulli_regret_table(model: DiscreteModel, N: int, nodes: int = 1024) -> dict:
    """NML complexity, its asymptotic value and Jeffreys-mixture regrets at one N."""
    _require_1d(model)
    log_vol = model_log_volume(model)
    nml = nml_bruteforce(model, N)
    formula = 0.5 * math.log(N / (2 * math.pi)) + log_vol
    classes = count_classes(model.K, N)
    r = _rule(model, jeffreys_prior(model), nodes)
    log_m = _log_marginals(r, classes)
    p_hat = np.asarray(model.prob(model.mle(classes.T.astype(float))), dtype=float)
    max_ll = np.sum(xlogy(classes.T, p_hat), axis=0)
    regrets = max_ll - log_m
    mid = int(np.argmin(np.abs(classes[:, 0] - N / 2)))
    return {
        "N": int(N),
        "nml_complexity": nml,
        "formula": formula,
        "difference": nml - formula,
        "jeffreys_regret_balanced": float(regrets[mid]),
        "jeffreys_regret_max": float(np.max(regrets)),
        "jeffreys_regret_min": float(np.min(regrets)),
    }


# ---------------------------------------------------------------------------
# Gaussian PCA models


def gaussian_observed_info(data: Dataset, split, q, sigma=None, rel_step: float = 1e-4) -> ObservedInfo:
    """Observed information in the q_ij coordinates by central differences of log p / N."""
    q = np.asarray(q.matrix if hasattr(q, "matrix") else q, dtype=float)
    m = q.shape[0]
    if sigma is None:
        sigma = empirical_cov(data)
    x0 = sym_coords(q)
    k = x0.size
    h = rel_step * np.maximum(np.abs(x0), 1.0)

    def ell(x):
        return gauss_loglik(data, assemble_Q(split, from_sym_coords(x, m)), sigma) / data.N

    f0 = ell(x0)
    H = np.zeros((k, k))
    for a in range(k):
        ea = np.zeros(k)
        ea[a] = h[a]
        H[a, a] = (ell(x0 + ea) - 2 * f0 + ell(x0 - ea)) / h[a] ** 2
        for b in range(a + 1, k):
            eb = np.zeros(k)
            eb[b] = h[b]
            H[a, b] = H[b, a] = (
                ell(x0 + ea + eb) - ell(x0 + ea - eb) - ell(x0 - ea + eb) + ell(x0 - ea - eb)
            ) / (4 * h[a] * h[b])
    return ObservedInfo(matrix=-H, point=x0)


def small_sample(N: int, m: int) -> bool:
    """Heuristic: fewer than ten observations per free parameter."""
    return N < 10 * (m * (m + 1) // 2)


def gaussian_geometric_complexity(
    data: Dataset,
    m: int,
    s: int | None = None,
    vol_mode: str = "mc",
    samples: int = 10**5,
    seed: int = DEFAULT_SEED,
    sigma=None,
    check_ratio: bool = False,
) -> ComplexityReport:
    """Complexity of the PCA-reduced Gaussian model with m free principal directions.

    ``data`` must already be centered and expressed in precision units. The
    ratio term is zero at the unclipped estimate; ``check_ratio`` also records
    a finite-difference value of it in the metadata.
    """
    if sigma is None:
        sigma = empirical_cov(data)
    if s is None:
        s = scale_exponent(sigma)
    split = pca_split(sigma, m)
    m = split.m
    n = m * (m + 1) // 2
    N = data.N
    q_hat = mle_q(split, s)
    neg_ll = -gauss_loglik(data, assemble_Q(split, q_hat), sigma)
    warn = []
    if split.lambda_bar is not None and split.lambda_bar < 1:
        warn.append(f"lambda_bar: trailing mean eigenvalue {split.lambda_bar:.6g} < 1")
    clipped = mle_is_clipped(split, s)
    if clipped:
        warn.append(f"clipped_mle: leading eigenvalues clipped into [1, {4.0**s:g}]")
    if small_sample(N, m):
        warn.append(f"small_N: N={N} < 10 x {n} parameters; asymptotic terms unreliable")
    if split.lambdas[-1] < 1:
        warn.append(f"sigma_min: smallest eigenvalue {split.lambdas[-1]:.6g} < 1")
    meta = {"model": "gaussian-pca", "m": m, "d": split.d, "s": int(s), "vol_mode": vol_mode, "theta0": "mle"}
    if s == 0:
        warn.append("point_manifold: s = 0 leaves no free parameters")
        meta["warnings"] = warn
        return ComplexityReport(neg_ll, 0.0, 0.0, 0.0, 0.0, 0, N, meta)
    vol = log_vol_Ms(m, s, mode=vol_mode, samples=samples, seed=seed)
    meta.update(
        {
            "samples": int(samples) if vol_mode == "mc" else None,
            "seed": int(seed) if vol_mode == "mc" else None,
            "log_I": vol.log_I,
            "log_I_stderr": vol.log_I_stderr,
            "log_I_bracket": list(vol.bracket),
        }
    )
    if check_ratio and not clipped:
        I = gaussian_observed_info(data, split, q_hat, sigma).matrix
        g = pm_metric_matrix(q_hat)
        meta["ratio_max_entry_diff"] = float(np.max(np.abs(I - g)))
        meta["ratio_term_numeric"] = -0.5 * (np.linalg.slogdet(g)[1] - np.linalg.slogdet(I)[1])
    meta["warnings"] = warn
    return geometric_complexity(
        neg_ll, n, N, vol.log_vol, scalar_curvature=pm_scalar_curvature(m), metadata=meta
    )


def select_pca_dim(
    data: Dataset,
    m_range=None,
    vol_mode: str = "mc",
    samples: int = 10**5,
    seed: int = DEFAULT_SEED,
) -> tuple[int, list[ComplexityReport]]:
    """Smallest m minimizing the Gaussian geometric complexity over ``m_range``."""
    sigma = empirical_cov(data)
    ms = list(range(1, data.d + 1)) if m_range is None else [int(m) for m in m_range]
    if not ms:
        raise InvalidInputError("m_range is empty")
    if min(ms) < 1 or max(ms) > data.d:
        raise InvalidInputError(f"m_range must lie in [1, {data.d}]")
    s = scale_exponent(sigma)
    reports = [
        gaussian_geometric_complexity(data, m, s, vol_mode, samples, seed, sigma=sigma) for m in sorted(set(ms))
    ]
    best = min(range(len(reports)), key=lambda i: (reports[i].total, i))
    return reports[best].metadata["m"], reports
