"""Symmetric and SPD matrix primitives.

Symmetric matrices are plain ``numpy`` arrays; :class:`SpdMatrix` wraps a
validated positive-definite matrix together with its eigendecomposition
(eigenvalues in descending order).
"""

from __future__ import annotations

from dataclasses import dataclass, field
from functools import lru_cache

import numpy as np

from .errors import InvalidInputError, NotPositiveDefiniteError

#: relative eigenvalue floor below which a matrix is not treated as PD
SPD_RTOL = 1e-12


def as_sym(a) -> np.ndarray:
    """Return a symmetric copy of ``a`` built from its upper triangle."""
    a = np.array(a, dtype=float)
    if a.ndim != 2 or a.shape[0] != a.shape[1]:
        raise InvalidInputError(f"expected a square matrix, got shape {a.shape}")
    if not np.all(np.isfinite(a)):
        raise InvalidInputError("matrix has non-finite entries")
    upper = np.triu(a)
    return upper + np.triu(a, 1).T


def eigh(a) -> tuple[np.ndarray, np.ndarray]:
    """Eigendecomposition of a symmetric matrix, eigenvalues descending.

    Returns ``(lam, v)`` with ``a == v @ diag(lam) @ v.T``.
    """
    a = as_sym(a)
    lam, v = np.linalg.eigh(a)
    return lam[::-1].copy(), v[:, ::-1].copy()


@lru_cache(maxsize=None)
def _basis(m: int) -> np.ndarray:
    out = []
    for i in range(m):
        for j in range(i, m):
            e = np.zeros((m, m))
            e[i, j] = e[j, i] = 1.0
            out.append(e)
    arr = np.array(out)
    arr.setflags(write=False)
    return arr


def sym_basis(m: int) -> np.ndarray:
    """Coordinate basis E_(ij), i <= j, of the symmetric m x m matrices.

    Row-major over the upper triangle; E_(ij) has ones at (i, j) and (j, i).
    Returned as a read-only array of shape ``(m(m+1)/2, m, m)``.
    """
    if int(m) != m or m < 1:
        raise InvalidInputError(f"m must be a positive integer, got {m!r}")
    return _basis(int(m))


def sym_dim(m: int) -> int:
    return m * (m + 1) // 2


def sym_coords(a) -> np.ndarray:
    """Coefficients of ``a`` in :func:`sym_basis` (the upper triangle, row-major)."""
    a = as_sym(a)
    return a[np.triu_indices(a.shape[0])]


def from_sym_coords(x, m: int | None = None) -> np.ndarray:
    """Inverse of :func:`sym_coords`; vectorized over leading axes of ``x``."""
    x = np.asarray(x, dtype=float)
    k = x.shape[-1]
    if m is None:
        m = int(round((np.sqrt(8 * k + 1) - 1) / 2))
    if sym_dim(m) != k:
        raise InvalidInputError(f"{k} coordinates do not describe a symmetric matrix")
    out = np.zeros(x.shape[:-1] + (m, m))
    iu = np.triu_indices(m)
    out[..., iu[0], iu[1]] = x
    out[..., iu[1], iu[0]] = x
    return out


@dataclass(frozen=True)
class SpdMatrix:
    """Validated symmetric positive-definite matrix.

    Build with :meth:`from_array`; the eigendecomposition is computed once.
    """

    matrix: np.ndarray
    eigenvalues: np.ndarray
    eigenvectors: np.ndarray = field(repr=False)

    @classmethod
    def from_array(cls, a, rtol: float = SPD_RTOL) -> "SpdMatrix":
        a = as_sym(a)
        lam, v = eigh(a)
        if lam[-1] <= 0 or lam[-1] <= rtol * lam[0]:
            raise NotPositiveDefiniteError(
                f"matrix is not positive definite (eigenvalues {lam[-1]:.3g} .. {lam[0]:.3g})"
            )
        for arr in (a, lam, v):
            arr.setflags(write=False)
        return cls(a, lam, v)

    @property
    def dim(self) -> int:
        return self.matrix.shape[0]

    def logdet(self) -> float:
        return float(np.sum(np.log(self.eigenvalues)))

    def inv(self) -> np.ndarray:
        v, lam = self.eigenvectors, self.eigenvalues
        return (v / lam) @ v.T


def as_spd(a) -> SpdMatrix:
    return a if isinstance(a, SpdMatrix) else SpdMatrix.from_array(a)


def logdet(a) -> float:
    """Log-determinant of an SPD matrix as a sum of log-eigenvalues."""
    return as_spd(a).logdet()


def random_orthogonal(m: int, rng: np.random.Generator) -> np.ndarray:
    """Haar-distributed orthogonal matrix (QR of a Gaussian matrix, sign fixed)."""
    z = rng.standard_normal((m, m))
    q, r = np.linalg.qr(z)
    return q * np.sign(np.diag(r))
