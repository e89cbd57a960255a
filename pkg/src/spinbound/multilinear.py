"""Pointwise model of a differential ``f_*`` between two inner-product spaces.

Everything reduces to the orthonormal-frame matrix ``Ft = G0^{1/2} F G^{-1/2}``,
in which ``B = Ft^T Ft`` (source side) and ``Bbreve = Ft Ft^T`` (target side).
"""
from __future__ import annotations

from dataclasses import dataclass
from enum import Enum
from functools import cached_property
from typing import Optional

import numpy as np

from .exterior import ExteriorForm, compound_matrix

__all__ = [
    "HomothetyVerdict",
    "PointwiseMap",
    "PullbackOperator",
    "area_scaling",
    "breve_operator",
    "dist_scaling",
    "exterior_power",
    "is_homothetic",
    "lemma1_spectral_gap",
    "pointwise_inequality_checks",
    "pullback_B",
    "sharp",
    "trace_inequality_margin",
    "trace_scalings",
]


def sym_sqrt(A: np.ndarray, inverse: bool = False) -> np.ndarray:
    """Symmetric (inverse) square root of an SPD matrix via its eigendecomposition."""
    w, V = np.linalg.eigh(A)
    if w.min() <= 0:
        raise ValueError("matrix is not positive definite")
    s = w ** (-0.5 if inverse else 0.5)
    return (V * s) @ V.T


def _check_spd(name, M, size):
    if M.shape != (size, size):
        raise ValueError(f"{name} must be {size}x{size}, got {M.shape}")
    if np.abs(M - M.T).max() > 1e-12 * max(1.0, np.abs(M).max()):
        raise ValueError(f"{name} is not symmetric")
    if np.linalg.eigvalsh(M).min() <= 0:
        raise ValueError(f"{name} is not positive definite")


@dataclass(frozen=True, eq=False)
class PointwiseMap:
    """``F`` is m x n; ``G`` (n x n) and ``G0`` (m x m) are the two metrics."""

    F: np.ndarray
    G: Optional[np.ndarray] = None
    G0: Optional[np.ndarray] = None

    def __post_init__(self):
        F = np.atleast_2d(np.asarray(self.F, dtype=float))
        m, n = F.shape
        G = np.eye(n) if self.G is None else np.asarray(self.G, dtype=float)
        G0 = np.eye(m) if self.G0 is None else np.asarray(self.G0, dtype=float)
        _check_spd("G", G, n)
        _check_spd("G0", G0, m)
        for name, arr in (("F", F), ("G", G), ("G0", G0)):
            arr = arr.copy()
            arr.setflags(write=False)
            object.__setattr__(self, name, arr)

    @property
    def n(self) -> int:
        return self.F.shape[1]

    @property
    def m(self) -> int:
        return self.F.shape[0]

    @cached_property
    def frame(self) -> np.ndarray:
        """Columns form a G-orthonormal basis of the source."""
        return sym_sqrt(self.G, inverse=True)

    @cached_property
    def frame0(self) -> np.ndarray:
        """Columns form a G0-orthonormal basis of the target."""
        return sym_sqrt(self.G0, inverse=True)

    @cached_property
    def orthonormal(self) -> np.ndarray:
        """Matrix of ``f_*`` between the G- and G0-orthonormal frames."""
        return sym_sqrt(self.G0) @ self.F @ self.frame

    @cached_property
    def B(self) -> np.ndarray:
        Ft = self.orthonormal
        B = Ft.T @ Ft
        return 0.5 * (B + B.T)

    @cached_property
    def B_eigenvalues(self) -> np.ndarray:
        return np.clip(np.linalg.eigvalsh(self.B), 0.0, None)

    def to_dict(self) -> dict:
        return {
            "n": self.n,
            "m": self.m,
            "F": self.F.reshape(-1).tolist(),
            "G": self.G.reshape(-1).tolist(),
            "G0": self.G0.reshape(-1).tolist(),
        }

    @classmethod
    def from_dict(cls, record: dict) -> "PointwiseMap":
        n, m = int(record["n"]), int(record["m"])
        F = np.asarray(record["F"], dtype=float).reshape(m, n)
        G = np.asarray(record["G"], dtype=float).reshape(n, n) if "G" in record else None
        G0 = np.asarray(record["G0"], dtype=float).reshape(m, m) if "G0" in record else None
        return cls(F, G, G0)


@dataclass(frozen=True, eq=False)
class PullbackOperator:
    k: int
    matrix: np.ndarray

    @cached_property
    def eigenvalues(self) -> np.ndarray:
        return np.linalg.eigvalsh(self.matrix)


def pullback_B(fmap: PointwiseMap) -> PullbackOperator:
    """B with ``g(BX, Y) = g0(f_* X, f_* Y)``, in a G-orthonormal basis."""
    return PullbackOperator(1, fmap.B)


def exterior_power(B: PullbackOperator, k: int) -> PullbackOperator:
    if B.k != 1:
        raise ValueError("exterior_power expects the degree-1 operator")
    n = B.matrix.shape[0]
    if not 1 <= k <= n:
        raise ValueError(f"degree {k} out of range 1..{n}")
    Bk = compound_matrix(B.matrix, k)
    return PullbackOperator(k, 0.5 * (Bk + Bk.T))


def _gram(M: np.ndarray, k: int) -> np.ndarray:
    return compound_matrix(M, k)


def sharp(fmap: PointwiseMap, k: int, w: ExteriorForm) -> ExteriorForm:
    """Metric adjoint of ``f_*`` on k-vectors, in coordinate bases.

    Satisfies ``<f_* v, w>_{G0} = <v, f# w>_G`` with the inner products induced on
    k-vectors by ``G`` and ``G0``.
    """
    if w.degree != k or w.n != fmap.m:
        raise ValueError(f"expected a {k}-vector on R^{fmap.m}")
    if k > min(fmap.n, fmap.m):
        raise ValueError(f"degree {k} exceeds min(n, m)")
    Fk = compound_matrix(fmap.F, k)
    rhs = Fk.T @ (_gram(fmap.G0, k) @ w.coefficients)
    return ExteriorForm(fmap.n, k, np.linalg.solve(_gram(fmap.G, k), rhs))


def sharp_matrix(fmap: PointwiseMap, k: int) -> np.ndarray:
    """``f#`` on k-vectors between the orthonormal frames: ``(Lambda^k Ft)^T``."""
    return compound_matrix(fmap.orthonormal, k).T


def breve_operator(fmap: PointwiseMap, k: int) -> np.ndarray:
    """``f_* f#`` on target k-vectors, in the G0-orthonormal frame."""
    if not 1 <= k <= min(fmap.n, fmap.m):
        raise ValueError(f"degree {k} out of range")
    Ft = fmap.orthonormal
    Bb = compound_matrix(Ft @ Ft.T, k)
    return 0.5 * (Bb + Bb.T)


def lemma1_spectral_gap(fmap: PointwiseMap, k: int) -> float:
    """Largest mismatch between the spectra of ``B_k`` and ``Bbreve_k``.

    The shared part is compared with multiplicity; surplus eigenvalues of the
    larger operator must vanish.
    """
    Bk = exterior_power(pullback_B(fmap), k).eigenvalues
    Bb = np.linalg.eigvalsh(breve_operator(fmap, k))
    a, b = np.sort(Bk)[::-1], np.sort(Bb)[::-1]
    s = min(a.size, b.size)
    gap = float(np.abs(a[:s] - b[:s]).max())
    rest = np.concatenate([a[s:], b[s:]])
    return max(gap, float(np.abs(rest).max(initial=0.0)))


def dist_scaling(fmap: PointwiseMap) -> float:
    return float(fmap.B_eigenvalues.max())


def area_scaling(fmap: PointwiseMap) -> float:
    if fmap.n < 2 or fmap.m < 2:
        return 0.0
    lam = np.sort(fmap.B_eigenvalues)
    return float(lam[-1] * lam[-2])


def trace_scalings(fmap: PointwiseMap) -> tuple[float, float]:
    B = fmap.B
    tr_B = float(np.trace(B))
    tr_B2 = 0.5 * (tr_B**2 - float(np.trace(B @ B))) if fmap.n >= 2 else 0.0
    return tr_B, tr_B2


def trace_inequality_margin(fmap: PointwiseMap) -> float:
    """``(n-1)/(2n) (tr B)^2 - tr B_2``; nonnegative, zero iff B is a multiple of Id."""
    n = fmap.n
    if n < 2:
        raise ValueError("needs n >= 2")
    tr_B = float(np.trace(fmap.B))
    tr_B2 = float(np.trace(exterior_power(pullback_B(fmap), 2).matrix))
    return (n - 1) / (2 * n) * tr_B**2 - tr_B2


class HomothetyVerdict(str, Enum):
    HOMOTHETY = "homothety"
    HOMOTHETIC_SURJECTION = "homothetic_surjection"
    NEITHER = "neither"


def is_homothetic(fmap: PointwiseMap, tol: float = 1e-8) -> tuple[HomothetyVerdict, Optional[float]]:
    """Classify ``f_*`` by the spectrum of B.

    Eigenvalues below ``tol * max`` count as kernel; the rest must have relative
    spread ``(max - min) / mean <= tol``.
    """
    if tol <= 0:
        raise ValueError("tol must be positive")
    lam = fmap.B_eigenvalues
    top = lam.max()
    if top <= 0:
        return HomothetyVerdict.HOMOTHETIC_SURJECTION, None
    nonzero = lam[lam > tol * top]
    mean = float(nonzero.mean())
    if (nonzero.max() - nonzero.min()) / mean > tol:
        return HomothetyVerdict.NEITHER, None
    if nonzero.size == lam.size:
        return HomothetyVerdict.HOMOTHETY, mean
    return HomothetyVerdict.HOMOTHETIC_SURJECTION, mean


def pointwise_inequality_checks(fmap: PointwiseMap, scal_g: float, scal_0: float) -> dict:
    """Compare two metrics on one space (``F = Id``, ``G = g``, ``G0 = g0``).

    ``ineq0``: scal_g g >= scal_0 g0; ``ineq2``: scal_g >= scal_0 sqrt(area);
    ``inequa0``: scal_g >= (n-1) tr B; ``inequal``: scal_g >= sqrt(2n(n-1) tr B_2).
    """
    if fmap.n != fmap.m:
        raise ValueError("metric comparison needs n == m")
    n = fmap.n
    # Relative slack so exact equality cases survive round-off.
    eps = 1e-10 * max(1.0, abs(scal_g), abs(scal_0))
    diff = scal_g * fmap.G - scal_0 * fmap.G0
    scale = max(1.0, np.abs(scal_g * fmap.G).max(), np.abs(scal_0 * fmap.G0).max())
    ineq0 = bool(np.linalg.eigvalsh(diff).min() >= -1e-10 * scale)
    area = area_scaling(fmap)
    tr_B, tr_B2 = trace_scalings(fmap)
    ineq2 = scal_g >= scal_0 * np.sqrt(area) - eps
    inequa0 = scal_g >= (n - 1) * tr_B - eps
    inequal = scal_g >= np.sqrt(max(2 * n * (n - 1) * tr_B2, 0.0)) - eps
    return {
        "ineq0": ineq0,
        "ineq2": bool(ineq2),
        "inequa0": bool(inequa0),
        "inequal": bool(inequal),
        "ineq0_implies_ineq2": bool(not ineq0 or scal_g < 0 or ineq2),
        "inequa0_implies_inequal": bool(not inequa0 or inequal),
        "area": area,
        "tr_B": tr_B,
        "tr_B2": tr_B2,
    }
