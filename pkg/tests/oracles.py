"""Reference values computed without the package under test."""

import math

import mpmath
import numpy as np
from scipy import integrate


def ambient_volume_m2(s: int = 1) -> float:
    """Fisher volume of {I <= q <= 4^s I} for 2x2 q, integrated in the entries of q.

    In (q11, q12, q22) the volume element is 1/2 det(q)^(-3/2). Substituting
    q11 = t + u, q22 = t - u (Jacobian 2) the eigenvalues are t +/- sqrt(u^2 + b^2),
    so the region is the disk u^2 + b^2 <= R(t)^2 with R(t) = min(t - 1, 4^s - t).
    """
    top = 4.0**s

    def R(t):
        return min(t - 1.0, top - t)

    def dens(b, u, t):
        return (t * t - u * u - b * b) ** -1.5

    val, _ = integrate.tplquad(
        dens,
        1.0,
        top,
        lambda t: -R(t),
        lambda t: R(t),
        lambda t, u: -math.sqrt(max(R(t) ** 2 - u * u, 0.0)),
        lambda t, u: math.sqrt(max(R(t) ** 2 - u * u, 0.0)),
        epsabs=1e-11,
        epsrel=1e-10,
    )
    return val


def ambient_volume_m2_radial(s: int = 1) -> float:
    """Same volume with the disk integral done in closed form."""
    top = 4.0**s

    def f(t):
        R = min(t - 1.0, top - t)
        return 2 * math.pi * ((t * t - R * R) ** -0.5 - 1.0 / t)

    val, _ = integrate.quad(f, 1.0, top, points=[(1.0 + top) / 2], epsabs=0, epsrel=1e-13)
    return val


def log_I_m2(s: int) -> float:
    """log I(s) for m = 2: E sinh(c|u - v|) = 2 (sinh c - c) / c^2 in closed form."""
    c = s * math.log(2)
    mean = 2 * (math.sinh(c) - c) / c**2
    return 2 * math.log(2 * c) + math.log(2) + math.log(mean)


def bessel_i0(x: float) -> float:
    """I_0 by its power series, summed in mpmath at 40 digits."""
    with mpmath.workdps(40):
        x = mpmath.mpf(x)
        total = mpmath.mpf(0)
        term = mpmath.mpf(1)
        k = 0
        while True:
            total += term
            k += 1
            term *= (x / 2) ** 2 / k**2
            if term < total * mpmath.mpf(10) ** -35:
                return float(total)


def sphere_gaussian_integral(N: float) -> float:
    """2 pi int_0^pi exp(-N r^2 / 2) sin r dr."""
    val, _ = integrate.quad(lambda r: math.exp(-N * r * r / 2) * math.sin(r), 0, math.pi, epsabs=0, epsrel=1e-13)
    return 2 * math.pi * val


def log_gamma_half_sum_mp(m: int) -> float:
    with mpmath.workdps(30):
        return float(sum(mpmath.loggamma(mpmath.mpf(j) / 2) for j in range(1, m + 1)))


def bernoulli_nml_exact(N: int) -> float:
    """log sum_k C(N,k) (k/N)^k (1-k/N)^(N-k) in 50-digit arithmetic."""
    with mpmath.workdps(50):
        total = mpmath.mpf(0)
        for k in range(N + 1):
            p = mpmath.mpf(k) / N
            total += mpmath.binomial(N, k) * (p**k if k else 1) * ((1 - p) ** (N - k) if k < N else 1)
        return float(mpmath.log(total))


def jeffreys_log_marginal_bernoulli(k: int, n_minus_k: int) -> float:
    """log int theta^k (1-theta)^(N-k) / (pi sqrt(theta (1-theta))) d theta = log B(k+1/2, N-k+1/2) - log pi."""
    return math.lgamma(k + 0.5) + math.lgamma(n_minus_k + 0.5) - math.lgamma(k + n_minus_k + 1) - math.log(math.pi)


def bernoulli_mutual_information(N: int, a: float, b: float) -> float:
    """I(theta; x^N) for theta ~ Beta(a, b), in closed form per count class.

    Marginals are Beta-function ratios; the conditional entropy uses
    E[theta log theta] under a Beta prior (digamma identity).
    """
    from scipy.special import betaln, digamma, gammaln

    k = np.arange(N + 1)
    log_m = betaln(k + a, N - k + b) - betaln(a, b)
    log_mult = gammaln(N + 1) - gammaln(k + 1) - gammaln(N - k + 1)
    h_marg = -np.sum(np.exp(log_mult + log_m) * log_m)
    # E[theta log theta] for Beta(a, b) = a/(a+b) (psi(a+1) - psi(a+b+1))
    e1 = a / (a + b) * (digamma(a + 1) - digamma(a + b + 1))
    e2 = b / (a + b) * (digamma(b + 1) - digamma(a + b + 1))
    return float(h_marg + N * (e1 + e2))
