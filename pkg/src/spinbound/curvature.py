"""Curvature operators on 2-vectors for model spaces.

Convention: ``<R(x^y), z^w> = T(x, y, z, w)`` where ``T(x, y, x, y)`` is the
sectional curvature of the plane ``x^y`` times ``|x^y|^2``. The unit sphere has
``R = Id`` and ``Ric = (m - 1) Id``.
"""
from __future__ import annotations

from dataclasses import dataclass
from functools import cached_property
from math import comb
from typing import Sequence

import numpy as np

from .exterior import ExteriorForm, basis, wedge

__all__ = [
    "CurvatureOperator",
    "bianchi_defect",
    "constant_curvature",
    "flat",
    "fubini_study",
    "model",
    "positivity_report",
    "product",
    "random_bianchi_psd",
    "random_psd",
    "ricci_scalar",
]


@dataclass(frozen=True, eq=False)
class CurvatureOperator:
    m: int
    matrix: np.ndarray
    label: str = ""

    def __post_init__(self):
        R = np.asarray(self.matrix, dtype=float)
        s = comb(self.m, 2)
        if self.m < 2 or R.shape != (s, s):
            raise ValueError(f"curvature operator for m={self.m} must be {s}x{s}")
        if np.abs(R - R.T).max() > 1e-12 * max(1.0, np.abs(R).max()):
            raise ValueError("curvature operator is not symmetric")
        R = 0.5 * (R + R.T)
        R.setflags(write=False)
        object.__setattr__(self, "matrix", R)

    @cached_property
    def eigenpairs(self) -> tuple[np.ndarray, np.ndarray]:
        """``(kappa, H)`` with columns of H orthonormal, kappa descending."""
        w, V = np.linalg.eigh(self.matrix)
        order = np.argsort(-w, kind="stable")
        kappa, H = w[order], V[:, order]
        kappa.setflags(write=False)
        H.setflags(write=False)
        return kappa, H

    @cached_property
    def tensor(self) -> np.ndarray:
        """The associated (4,0) tensor ``T[a, b, c, d]``."""
        m = self.m
        T = np.zeros((m, m, m, m))
        pairs = basis(m, 2)
        for p, (a, b) in enumerate(pairs):
            for q, (c, d) in enumerate(pairs):
                v = self.matrix[p, q]
                T[a, b, c, d] = v
                T[b, a, c, d] = -v
                T[a, b, d, c] = -v
                T[b, a, d, c] = v
        return T

    @property
    def scal(self) -> float:
        return 2.0 * float(np.trace(self.matrix))

    def to_dict(self) -> dict:
        return {"m": self.m, "matrix": self.matrix.reshape(-1).tolist(), "label": self.label}

    @classmethod
    def from_dict(cls, record: dict) -> "CurvatureOperator":
        m = int(record["m"])
        s = comb(m, 2)
        return cls(m, np.asarray(record["matrix"], dtype=float).reshape(s, s),
                   str(record.get("label", "")))


def from_tensor(T: np.ndarray, label: str = "") -> CurvatureOperator:
    m = T.shape[0]
    pairs = np.array(basis(m, 2))
    R = T[pairs[:, 0][:, None], pairs[:, 1][:, None], pairs[:, 0][None, :], pairs[:, 1][None, :]]
    return CurvatureOperator(m, R, label)


def _metric_tensor(g: np.ndarray) -> np.ndarray:
    """``g(x,z) g(y,w) - g(x,w) g(y,z)``: the unit-sphere tensor for metric g."""
    return np.einsum("ac,bd->abcd", g, g) - np.einsum("ad,bc->abcd", g, g)


def constant_curvature(m: int, K: float = 1.0) -> CurvatureOperator:
    if m < 2:
        raise ValueError("dimension must be at least 2")
    return CurvatureOperator(m, K * np.eye(comb(m, 2)), f"constant_curvature(K={K:g})")


def flat(m: int) -> CurvatureOperator:
    if m < 2:
        raise ValueError("dimension must be at least 2")
    return CurvatureOperator(m, np.zeros((comb(m, 2),) * 2), "flat")


def product(factors: Sequence[CurvatureOperator]) -> CurvatureOperator:
    """Riemannian product; mixed planes lie in the kernel."""
    m = sum(f.m for f in factors)
    T = np.zeros((m, m, m, m))
    start = 0
    for f in factors:
        sl = slice(start, start + f.m)
        T[sl, sl, sl, sl] = f.tensor
        start += f.m
    label = "x".join(f.label or f"M{f.m}" for f in factors)
    return from_tensor(T, f"product({label})")


def fubini_study(complex_dim: int) -> CurvatureOperator:
    """CP^d with holomorphic sectional curvature 4 (real dimension 2d)."""
    d = complex_dim
    if d < 1:
        raise ValueError("complex dimension must be positive")
    m = 2 * d
    J = np.zeros((m, m))
    for j in range(d):
        J[2 * j + 1, 2 * j] = 1.0
        J[2 * j, 2 * j + 1] = -1.0
    g = np.eye(m)
    # omega(x, y) = <Jx, y>
    om = J.T
    T = (_metric_tensor(g)
         + np.einsum("ac,bd->abcd", om, om) - np.einsum("ad,bc->abcd", om, om)
         + 2.0 * np.einsum("ab,cd->abcd", om, om))
    return from_tensor(T, f"fubini_study({d})")


def model(kind: str, m: int | None = None, **params) -> CurvatureOperator:
    """Dispatch by name: ``constant_curvature``, ``flat``, ``product``, ``fubini_study``."""
    if kind == "constant_curvature":
        return constant_curvature(m, params.get("K", 1.0))
    if kind == "flat":
        return flat(m)
    if kind == "product":
        op = product(params["factors"])
        if m is not None and op.m != m:
            raise ValueError(f"factor dimensions sum to {op.m}, expected {m}")
        return op
    if kind == "fubini_study":
        d = params.get("complex_dim", None if m is None else m // 2)
        op = fubini_study(d)
        if m is not None and op.m != m:
            raise ValueError(f"Fubini-Study has real dimension {op.m}, expected {m}")
        return op
    raise ValueError(f"unknown model kind {kind!r}")


def ricci_scalar(op: CurvatureOperator) -> tuple[np.ndarray, float]:
    T = op.tensor
    ric = np.einsum("ajbj->ab", T)
    scal = float(np.trace(ric))
    if abs(scal - op.scal) > 1e-10 * max(1.0, abs(scal)):
        raise ArithmeticError("scalar curvature contraction disagrees with 2 tr R")
    return 0.5 * (ric + ric.T), scal


def bianchi_defect(op: CurvatureOperator) -> float:
    """Norm of ``sum_l kappa_l h_l ^ h_l`` in Lambda^4 (zero for m <= 3)."""
    if op.m <= 3:
        return 0.0
    kappa, H = op.eigenpairs
    total = np.zeros(comb(op.m, 4))
    for k, h in zip(kappa, H.T):
        form = ExteriorForm(op.m, 2, h)
        total += k * wedge(form, form).coefficients
    return float(np.linalg.norm(total))


def positivity_report(op: CurvatureOperator) -> dict:
    kappa, _ = op.eigenpairs
    ric, _ = ricci_scalar(op)
    min_kappa = float(kappa.min())
    min_ric = float(np.linalg.eigvalsh(ric).min())
    tol = 1e-12 * max(1.0, np.abs(op.matrix).max())
    return {
        "R_psd": bool(min_kappa >= -tol),
        "Ric_pd": bool(min_ric > tol),
        "min_kappa": min_kappa,
        "min_ric": min_ric,
    }


def random_psd(rng: np.random.Generator, m: int) -> CurvatureOperator:
    """Random PSD endomorphism of Lambda^2; generically violates Bianchi."""
    s = comb(m, 2)
    A = rng.standard_normal((s, s))
    return CurvatureOperator(m, A @ A.T / s, "random_psd")


def random_bianchi_psd(rng: np.random.Generator, m: int, terms: int = 3) -> CurvatureOperator:
    """Positive combination of ``Lambda^2 S`` for random PSD ``S``.

    Each ``Lambda^2 S`` is an algebraic curvature operator (Kulkarni-Nomizu square
    of S), and PSD because its eigenvalues are pairwise products of those of S.
    """
    from .exterior import compound_matrix

    R = np.zeros((comb(m, 2),) * 2)
    for _ in range(terms):
        A = rng.standard_normal((m, m))
        R += rng.uniform(0.2, 1.0) * compound_matrix(A @ A.T / m, 2)
    return CurvatureOperator(m, 0.5 * (R + R.T), "random_bianchi_psd")
