"""Riemannian volume of the truncated SPD manifold M(s) = {I <= q <= 4**s I}.

With q = K diag(a) K^T and a_i = exp(r_i), the Fisher volume factorizes as

    vol_g(M(s)) = 2^(-3m/2) / m! * vol(O(m)) * I(s)
    I(s)        = (2 s log 2)^m 2^(m(m-1)/2) E_u[ prod_{i<j} sinh(s log 2 |u_i - u_j|) ]

where u is uniform on the unit cube. Everything is accumulated in log space.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from scipy.special import gammaln

from .errors import DegenerateModelError, InvalidInputError, ResourceLimitError
from .quadrature import gauss_legendre, tensor_rule

#: log of Glaisher's constant A = 1.2824271291...
LOG_GLAISHER = 0.2487544770337843
#: zeta'(-1) = 1/12 - log A
ZETA_PRIME_M1 = 1.0 / 12.0 - LOG_GLAISHER

DEFAULT_SEED = 0xC0FFEE
MC_CHUNK = 1 << 16

MODES = ("mc", "quad", "upper_bound", "lower_bound")

# B_{2k+2} / (4k(k+1)), k = 1..6, for the large-argument series of log G
_BARNES_SERIES = [
    (-1 / 30) / 8,
    (1 / 42) / 24,
    (-1 / 30) / 48,
    (5 / 66) / 80,
    (-691 / 2730) / 120,
    (7 / 6) / 168,
]


def _check_m(m) -> int:
    if int(m) != m or m < 1:
        raise InvalidInputError(f"m must be a positive integer, got {m!r}")
    return int(m)


def _check_s(s) -> int:
    if int(s) != s or s < 0:
        raise InvalidInputError(f"s must be a non-negative integer, got {s!r}")
    return int(s)


def log_gamma_half_sum(m: int) -> float:
    """sum_{j=1}^m log Gamma(j/2)."""
    m = _check_m(m)
    return float(np.sum(gammaln(np.arange(1, m + 1) / 2.0)))


def log_barnes_g(z: float) -> float:
    """log G(z) for real z > 0.

    Shifts the argument to >= 20 with log G(z+1) = log Gamma(z) + log G(z)
    and evaluates the asymptotic series there.
    """
    if z <= 0:
        raise InvalidInputError("log_barnes_g needs z > 0")
    shift = max(0, math.ceil(20.0 - z))
    x = z + shift - 1.0
    lx = math.log(x)
    val = 0.5 * x * x * lx - 0.75 * x * x + 0.5 * x * math.log(2 * math.pi) - lx / 12.0 + ZETA_PRIME_M1
    xp = x * x
    for c in _BARNES_SERIES:
        val += c / xp
        xp *= x * x
    if shift:
        val -= float(np.sum(gammaln(z + np.arange(shift))))
    return val


def log_gamma_half_sum_closed(m: int) -> float:
    """sum_j log Gamma(j/2) through Barnes G and Glaisher's constant.

    The odd j contribute G(ceil(m/2) + 1/2) / G(1/2), the even j G(floor(m/2) + 1),
    and -log G(1/2) = log(pi^(1/4) A^(3/2) / (2^(1/24) e^(1/8))).
    """
    m = _check_m(m)
    neg_log_g_half = 0.25 * math.log(math.pi) + 1.5 * LOG_GLAISHER - math.log(2) / 24 - 0.125
    half_arg = m / 2 + 0.75 + 0.25 * (-1) ** (m + 1)
    return neg_log_g_half + log_barnes_g(half_arg) + log_barnes_g(m // 2 + 1)


def log_vol_orthogonal(m: int) -> float:
    """log vol(O(m)) = log(2^m pi^(m(m+1)/4) / prod_j Gamma(j/2))."""
    m = _check_m(m)
    return m * math.log(2) + m * (m + 1) / 4 * math.log(math.pi) - log_gamma_half_sum(m)


def _log_I_prefactor(m: int, s: int) -> float:
    return m * math.log(2 * s * math.log(2)) + m * (m - 1) / 2 * math.log(2)


def log_pair_sinh(u: np.ndarray, c: float) -> np.ndarray:
    """sum_{i<j} log sinh(c |u_i - u_j|) over the last axis of ``u``."""
    m = u.shape[-1]
    out = np.zeros(u.shape[:-1])
    with np.errstate(divide="ignore"):
        for i in range(m):
            for j in range(i + 1, m):
                x = c * np.abs(u[..., i] - u[..., j])
                out += x + np.log(-np.expm1(-2 * x)) - math.log(2)
    return out


def log_I_mc(m: int, s: int, samples: int = 10**5, seed: int = DEFAULT_SEED) -> tuple[float, float]:
    """Monte Carlo estimate of log I(s) with a delta-method standard error.

    Samples are drawn in fixed chunks of ``MC_CHUNK``; chunk k uses
    ``SeedSequence([seed, k])`` so the result does not depend on how the
    chunks are scheduled.
    """
    m, s = _check_m(m), _check_s(s)
    if samples < 1000:
        raise InvalidInputError("need at least 1000 Monte Carlo samples")
    if s == 0:
        return -math.inf, 0.0
    if m == 1:
        return math.log(2 * s * math.log(2)), 0.0
    c = s * math.log(2)
    parts = []
    done = 0
    k = 0
    while done < samples:
        n = min(MC_CHUNK, samples - done)
        rng = np.random.default_rng(np.random.SeedSequence([seed, k]))
        L = log_pair_sinh(rng.random((n, m)), c)
        top = float(np.max(L))
        e = np.exp(L - top)
        parts.append((top, float(np.sum(e)), float(np.sum(e * e))))
        done += n
        k += 1
    top = max(p[0] for p in parts)
    s1 = sum(p[1] * math.exp(p[0] - top) for p in parts)
    s2 = sum(p[2] * math.exp(2 * (p[0] - top)) for p in parts)
    mean = s1 / samples
    var = max(s2 / samples - mean * mean, 0.0) * samples / (samples - 1)
    stderr = math.sqrt(var / samples) / mean
    return _log_I_prefactor(m, s) + top + math.log(mean), stderr


def _simplex_expectation(m: int, c: float, n: int) -> float:
    """E_u[prod sinh] as m! times the integral over ordered points.

    The m - 1 consecutive gaps live on the simplex {g >= 0, sum g <= 1}; the
    Duffy map g_i = x_i prod_{j<i} (1 - x_j) pulls that back to the unit cube,
    and the leftover length 1 - sum g is the freedom of the first point.
    """
    k = m - 1
    x, wts = tensor_rule([gauss_legendre(0.0, 1.0, n)] * k)
    gaps = np.empty_like(x)
    jac = np.ones(x.shape[0])
    r = np.ones(x.shape[0])
    for i in range(k):
        gaps[:, i] = r * x[:, i]
        jac *= r
        r = r * (1 - x[:, i])
    pos = np.concatenate([np.zeros((x.shape[0], 1)), np.cumsum(gaps, axis=1)], axis=1)
    val = np.exp(log_pair_sinh(pos, c)) * (1.0 - pos[:, -1])
    return math.factorial(m) * float(np.sum(wts * jac * val))


def log_I_quad(m: int, s: int, rtol: float = 1e-10, max_nodes: int = 1024) -> float:
    """Deterministic log I(s) for m <= 3 by refined Gauss-Legendre on the ordered simplex."""
    m, s = _check_m(m), _check_s(s)
    if m > 3:
        raise ResourceLimitError("quadrature of I(s) is only supported for m <= 3")
    if s == 0:
        return -math.inf
    if m == 1:
        return math.log(2 * s * math.log(2))
    c = s * math.log(2)
    n = 8
    prev = _simplex_expectation(m, c, n)
    while True:
        n *= 2
        cur = _simplex_expectation(m, c, n)
        if abs(cur - prev) <= rtol * abs(cur):
            return _log_I_prefactor(m, s) + math.log(cur)
        if n >= max_nodes:
            raise ResourceLimitError(f"I(s) quadrature did not converge for m={m}, s={s}")
        prev = cur


def i_bounds(m: int, s: int) -> tuple[float, float]:
    """Bracket on log I(s).

    The upper value is rigorous (sinh x <= e^x / 2 and |u_i - u_j| <= 1). The
    lower value is the Jensen bound of the exponential surrogate, which I(s)
    approaches only for large s.
    """
    m, s = _check_m(m), _check_s(s)
    if s == 0:
        return -math.inf, -math.inf
    base = m * math.log(2 * s * math.log(2))
    if m == 1:
        return base, base
    pairs = m * (m - 1)
    return base + s * math.log(2) * pairs / 6, base + s * math.log(2) * pairs / 2


@dataclass(frozen=True)
class VolumeResult:
    m: int
    s: int
    log_I: float
    log_I_stderr: float
    mode: str
    log_vol: float
    terms: dict = field(default_factory=dict)
    bracket: tuple = ()

    @property
    def log_I_uncorrected(self) -> float:
        """log I(s) under the alternative constants (s log 2)^m 8^(m(m-1)/4).

        Kept for comparison only; these constants do not reproduce the
        volume element det(q)^(-(m+1)/2).
        """
        m = self.m
        return self.log_I - m * math.log(2) + (3 * m * (m - 1) / 4 - m * (m - 1) / 2) * math.log(2)

    def to_dict(self) -> dict:
        return {
            "m": self.m,
            "s": self.s,
            "mode": self.mode,
            "log_vol": self.log_vol,
            "log_I": self.log_I,
            "log_I_stderr": self.log_I_stderr,
            "log_I_bracket": list(self.bracket),
            "log_I_uncorrected": self.log_I_uncorrected,
            "terms": dict(self.terms),
        }


def log_vol_Ms(
    m: int, s: int, mode: str = "mc", samples: int = 10**5, seed: int = DEFAULT_SEED
) -> VolumeResult:
    """log vol_g(M(s)) with log I(s) taken from ``mode``."""
    m, s = _check_m(m), _check_s(s)
    if s == 0:
        raise DegenerateModelError("M(0) is the single point q = I; its volume vanishes")
    if mode not in MODES:
        raise InvalidInputError(f"unknown volume mode {mode!r}; expected one of {MODES}")
    stderr = 0.0
    bracket = i_bounds(m, s)
    if mode == "mc":
        log_I, stderr = log_I_mc(m, s, samples, seed)
    elif mode == "quad":
        log_I = log_I_quad(m, s)
    elif mode == "upper_bound":
        log_I = bracket[1]
    else:
        log_I = bracket[0]
    terms = {
        "scale": -1.5 * m * math.log(2),
        "neg_log_m_factorial": 0.0 - float(gammaln(m + 1)),
        "log_vol_orthogonal": log_vol_orthogonal(m),
        "log_I": log_I,
    }
    log_vol = terms["scale"] + terms["neg_log_m_factorial"] + terms["log_vol_orthogonal"] + log_I
    return VolumeResult(m, s, log_I, stderr, mode, log_vol, terms, bracket)
