"""Fixed quadrature rules shared by the oracles."""

from __future__ import annotations

from functools import lru_cache

import numpy as np


@lru_cache(maxsize=64)
def _leggauss(n: int):
    x, w = np.polynomial.legendre.leggauss(n)
    x.setflags(write=False)
    w.setflags(write=False)
    return x, w


def gauss_legendre(a: float, b: float, n: int) -> tuple[np.ndarray, np.ndarray]:
    x, w = _leggauss(n)
    half = 0.5 * (b - a)
    return a + half * (x + 1.0), half * w


def trapezoid_periodic(a: float, b: float, n: int) -> tuple[np.ndarray, np.ndarray]:
    h = (b - a) / n
    return a + h * np.arange(n), np.full(n, h)


def tensor_rule(rules) -> tuple[np.ndarray, np.ndarray]:
    """Tensor product of 1-D rules -> (points (P, n), weights (P,))."""
    xs = np.meshgrid(*[r[0] for r in rules], indexing="ij")
    ws = np.meshgrid(*[r[1] for r in rules], indexing="ij")
    pts = np.stack([x.ravel() for x in xs], axis=-1)
    wts = np.prod(np.stack([w.ravel() for w in ws], axis=-1), axis=-1)
    return pts, wts
