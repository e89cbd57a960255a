"""Random fixture generators shared by the batch runner and the tests."""
from __future__ import annotations

import numpy as np

from .multilinear import PointwiseMap, sym_sqrt

__all__ = ["MAP_KINDS", "random_map", "random_orthogonal", "random_spd"]

MAP_KINDS = ("generic", "homothetic", "rank_deficient", "near_homothetic", "identity_metrics")


def random_spd(rng: np.random.Generator, n: int, floor: float = 0.5) -> np.ndarray:
    A = rng.standard_normal((n, n))
    S = A @ A.T / n + floor * np.eye(n)
    return 0.5 * (S + S.T)


def random_orthogonal(rng: np.random.Generator, n: int) -> np.ndarray:
    """Haar-distributed orthogonal matrix (QR with sign fix)."""
    Q, R = np.linalg.qr(rng.standard_normal((n, n)))
    return Q * np.sign(np.diag(R))


def _from_orthonormal(Ft: np.ndarray, G: np.ndarray, G0: np.ndarray) -> PointwiseMap:
    """Coordinate map whose orthonormal-frame matrix is ``Ft``."""
    F = sym_sqrt(G0, inverse=True) @ Ft @ sym_sqrt(G)
    return PointwiseMap(F, G, G0)


def random_map(rng: np.random.Generator, n: int, m: int, kind: str = "generic") -> PointwiseMap:
    """Random ``f_*: (R^n, G) -> (R^m, G0)`` of the requested kind.

    ``homothetic`` maps are ``sqrt(c)`` times a partial isometry of full rank, so
    they are homothetic surjections whenever ``n >= m``.
    """
    if kind not in MAP_KINDS:
        raise ValueError(f"unknown map kind {kind!r}")
    if kind == "identity_metrics":
        return PointwiseMap(rng.standard_normal((m, n)))
    G, G0 = random_spd(rng, n), random_spd(rng, m)
    if kind == "generic":
        return PointwiseMap(rng.standard_normal((m, n)), G, G0)
    P, Q = random_orthogonal(rng, m), random_orthogonal(rng, n)
    r = min(n, m)
    if kind == "homothetic":
        sv = np.full(r, np.sqrt(rng.uniform(0.3, 2.0)))
    elif kind == "rank_deficient":
        sv = rng.uniform(0.3, 1.5, r)
        sv[rng.integers(r)] = 0.0
    else:
        sv = np.sqrt(rng.uniform(0.5, 1.5)) * (1.0 + 0.05 * rng.uniform(-1, 1, r))
    D = np.zeros((m, n))
    D[np.arange(r), np.arange(r)] = sv
    return _from_orthonormal(P @ D @ Q, G, G0)
