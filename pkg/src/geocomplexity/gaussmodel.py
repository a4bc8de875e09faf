"""Zero-mean Gaussian model with a PCA-reduced covariance.

Data are stored as a ``d x N`` matrix (one column per observation). The
reduced family keeps the leading ``m`` principal directions free and an
isotropic tail fixed at the average trailing eigenvalue::

    Q(q) = A q A^T + lambda_bar B B^T,    I <= q <= 4**s I
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass, field

import numpy as np

from .errors import (
    ConstraintViolationError,
    InsufficientDataError,
    InvalidInputError,
    NotPositiveDefiniteError,
    RankDeficientError,
)
from .symspace import SpdMatrix, as_spd


class CovarianceConventionWarning(UserWarning):
    """Sigma does not satisfy I <= Sigma in precision units."""


@dataclass(frozen=True)
class Dataset:
    values: np.ndarray
    precision: np.ndarray = None

    def __post_init__(self):
        values = np.array(self.values, dtype=float)
        if values.ndim == 1:
            values = values[None, :]
        if values.ndim != 2 or values.size == 0:
            raise InvalidInputError(f"expected a d x N matrix, got shape {values.shape}")
        if not np.all(np.isfinite(values)):
            raise InvalidInputError("dataset contains non-finite values")
        d = values.shape[0]
        if self.precision is None:
            precision = np.ones(d)
        else:
            precision = np.broadcast_to(np.asarray(self.precision, dtype=float), (d,)).copy()
        if np.any(~np.isfinite(precision)) or np.any(precision <= 0):
            raise InvalidInputError("precision must be positive and finite")
        values.setflags(write=False)
        precision.setflags(write=False)
        object.__setattr__(self, "values", values)
        object.__setattr__(self, "precision", precision)

    @classmethod
    def from_rows(cls, rows, precision=None) -> "Dataset":
        """Build from an ``N x d`` array (one row per observation)."""
        return cls(np.asarray(rows, dtype=float).T, precision)

    @property
    def d(self) -> int:
        return self.values.shape[0]

    @property
    def N(self) -> int:
        return self.values.shape[1]


def center(data: Dataset) -> Dataset:
    if data.N < 2:
        raise InsufficientDataError(f"need at least 2 observations, got {data.N}")
    x = data.values - data.values.mean(axis=1, keepdims=True)
    return Dataset(x, data.precision)


def normalize(data: Dataset) -> Dataset:
    """Express every coordinate in units of its precision (precision becomes 1)."""
    x = data.values / data.precision[:, None]
    out = Dataset(x, np.ones(data.d))
    lam_min = np.linalg.eigvalsh(x @ x.T / data.N)[0]
    if lam_min < 1:
        warnings.warn(
            f"smallest covariance eigenvalue {lam_min:.4g} < 1 in precision units",
            CovarianceConventionWarning,
            stacklevel=2,
        )
    return out


def empirical_cov(data: Dataset) -> SpdMatrix:
    """Sigma = x x^T / N for centered data."""
    sigma = data.values @ data.values.T / data.N
    try:
        return SpdMatrix.from_array(sigma)
    except NotPositiveDefiniteError:
        raise RankDeficientError(
            f"empirical covariance is rank deficient (d={data.d}, N={data.N}); "
            "reduce the number of coordinates or supply more samples"
        ) from None


def scale_exponent(sigma) -> int:
    """Smallest s >= 0 with Sigma <= 4**s I."""
    lam_max = float(as_spd(sigma).eigenvalues[0])
    if lam_max < 1:
        warnings.warn(
            f"largest covariance eigenvalue {lam_max:.4g} < 1", CovarianceConventionWarning, stacklevel=2
        )
    s = 0
    # an eigenvalue on 4**s up to rounding stays at that scale
    while 4.0**s * (1 + 1e-12) < lam_max:
        s += 1
    return s


@dataclass(frozen=True)
class PcaSplit:
    sigma: SpdMatrix
    m: int
    lambdas: np.ndarray
    S: np.ndarray
    A_block: np.ndarray
    B_block: np.ndarray
    lambda_bar: float | None
    sigma_r: SpdMatrix
    Lambda: float

    @property
    def d(self) -> int:
        return self.sigma.dim


def pca_split(sigma, m: int) -> PcaSplit:
    sigma = as_spd(sigma)
    d = sigma.dim
    if int(m) != m or not 1 <= m <= d:
        raise InvalidInputError(f"m must be an integer in [1, {d}], got {m!r}")
    m = int(m)
    lam, S = sigma.eigenvalues, sigma.eigenvectors
    Lambda = float(np.trace(sigma.matrix))
    A, B = S[:, :m], S[:, m:]
    if m < d:
        lambda_bar = (Lambda - float(lam[:m].sum())) / (d - m)
        sigma_r = (A * lam[:m]) @ A.T + lambda_bar * (B @ B.T)
    else:
        lambda_bar = None
        sigma_r = sigma.matrix
    return PcaSplit(
        sigma=sigma,
        m=m,
        lambdas=lam,
        S=S,
        A_block=A,
        B_block=B,
        lambda_bar=lambda_bar,
        sigma_r=SpdMatrix.from_array(sigma_r),
        Lambda=Lambda,
    )


@dataclass(frozen=True)
class ReducedModel:
    split: PcaSplit
    q: SpdMatrix
    s: int
    Q: SpdMatrix
    warnings: tuple = field(default=())


def assemble_Q(split: PcaSplit, q) -> np.ndarray:
    """Q = A q A^T + lambda_bar B B^T, without constraint checks."""
    A = split.A_block
    q = np.asarray(q.matrix if isinstance(q, SpdMatrix) else q, dtype=float)
    Q = A @ q @ A.T
    if split.lambda_bar is not None:
        Q = Q + split.lambda_bar * (split.B_block @ split.B_block.T)
    return Q


def reduced_cov(split: PcaSplit, q, s: int, tol: float = 1e-9) -> ReducedModel:
    q = as_spd(q)
    if q.dim != split.m:
        raise InvalidInputError(f"q must be {split.m}x{split.m}, got {q.dim}x{q.dim}")
    lo, hi = 1.0, 4.0**s
    bad = q.eigenvalues[(q.eigenvalues < lo - tol * lo) | (q.eigenvalues > hi + tol * hi)]
    if bad.size:
        raise ConstraintViolationError(
            f"q outside M(s={s}) = {{I <= q <= {hi:g} I}}: offending eigenvalues {bad.tolist()}"
        )
    notes = ()
    if split.lambda_bar is not None and split.lambda_bar < 1:
        notes = (f"lambda_bar = {split.lambda_bar:.4g} < 1",)
    return ReducedModel(split, q, s, SpdMatrix.from_array(assemble_Q(split, q)), notes)


def gauss_loglik(data: Dataset, Q, sigma=None) -> float:
    """log p(x^N | Q) for zero-mean Gaussian data.

    Uses the sufficient statistic: -N/2 [d log 2pi + log det Q + tr(Q^-1 Sigma)].
    ``sigma`` may be passed to skip recomputing the empirical covariance.
    """
    Q = as_spd(Q)
    if Q.dim != data.d:
        raise InvalidInputError(f"Q is {Q.dim}x{Q.dim} but data has d={data.d}")
    if sigma is None:
        sigma = data.values @ data.values.T / data.N
    elif isinstance(sigma, SpdMatrix):
        sigma = sigma.matrix
    quad = float(np.sum(Q.inv() * sigma))
    return -0.5 * data.N * (data.d * math.log(2 * math.pi) + Q.logdet() + quad)


def mle_q(split: PcaSplit, s: int) -> SpdMatrix:
    """Constrained MLE of q: the leading eigenvalues clipped into [1, 4**s]."""
    lam = np.clip(split.lambdas[: split.m], 1.0, 4.0**s)
    return SpdMatrix.from_array(np.diag(lam))


def mle_is_clipped(split: PcaSplit, s: int) -> bool:
    lam = split.lambdas[: split.m]
    return bool(np.any(lam < 1.0) or np.any(lam > 4.0**s))


__all__ = [
    "CovarianceConventionWarning",
    "Dataset",
    "PcaSplit",
    "ReducedModel",
    "assemble_Q",
    "center",
    "empirical_cov",
    "gauss_loglik",
    "mle_is_clipped",
    "mle_q",
    "normalize",
    "pca_split",
    "reduced_cov",
    "scale_exponent",
]
