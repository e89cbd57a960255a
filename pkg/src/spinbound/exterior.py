"""Exterior algebra on R^n in the lexicographic basis of increasing index tuples.

Coefficients are taken w.r.t. ``e_{i1} ^ ... ^ e_{ik}`` (i1 < ... < ik), with the
inner product that makes this basis orthonormal.
"""
from __future__ import annotations

import itertools
from dataclasses import dataclass
from functools import lru_cache
from math import comb

import numpy as np

MAX_DEGREE = 4


@lru_cache(maxsize=None)
def basis(n: int, k: int) -> tuple[tuple[int, ...], ...]:
    """Increasing k-tuples of ``range(n)`` in lexicographic order."""
    return tuple(itertools.combinations(range(n), k))


@lru_cache(maxsize=None)
def basis_index(n: int, k: int) -> dict[tuple[int, ...], int]:
    return {idx: pos for pos, idx in enumerate(basis(n, k))}


def _sort_sign(idx: tuple[int, ...]) -> tuple[int, tuple[int, ...]]:
    """Sign of the permutation sorting ``idx`` and the sorted tuple; 0 on repeats."""
    if len(set(idx)) != len(idx):
        return 0, idx
    perm = sorted(range(len(idx)), key=idx.__getitem__)
    sign = 1
    seen = [False] * len(perm)
    for start in range(len(perm)):
        if seen[start]:
            continue
        j, length = start, 0
        while not seen[j]:
            seen[j] = True
            j = perm[j]
            length += 1
        if length % 2 == 0:
            sign = -sign
    return sign, tuple(sorted(idx))


@dataclass(frozen=True, eq=False)
class ExteriorForm:
    n: int
    degree: int
    coefficients: np.ndarray

    def __post_init__(self):
        coeffs = np.asarray(self.coefficients, dtype=float).reshape(-1)
        if self.degree < 0:
            raise ValueError(f"negative degree {self.degree}")
        if coeffs.size != comb(self.n, self.degree):
            raise ValueError(
                f"expected {comb(self.n, self.degree)} coefficients, got {coeffs.size}"
            )
        coeffs.setflags(write=False)
        object.__setattr__(self, "coefficients", coeffs)

    @classmethod
    def zero(cls, n: int, degree: int) -> "ExteriorForm":
        return cls(n, degree, np.zeros(comb(n, degree)))

    @classmethod
    def from_terms(cls, n: int, degree: int, terms: dict) -> "ExteriorForm":
        """Build from ``{(i, j, ...): coeff}``; indices need not be sorted."""
        coeffs = np.zeros(comb(n, degree))
        index = basis_index(n, degree)
        for idx, value in terms.items():
            if len(idx) != degree:
                raise ValueError(f"index {idx} has wrong degree")
            sign, key = _sort_sign(tuple(idx))
            if sign:
                coeffs[index[key]] += sign * value
        return cls(n, degree, coeffs)

    @classmethod
    def from_vector(cls, v) -> "ExteriorForm":
        v = np.asarray(v, dtype=float)
        return cls(v.size, 1, v)

    def norm_sq(self) -> float:
        return float(self.coefficients @ self.coefficients)

    def wedge(self, other: "ExteriorForm") -> "ExteriorForm":
        return wedge(self, other)

    def __add__(self, other: "ExteriorForm") -> "ExteriorForm":
        self._check_compatible(other)
        return ExteriorForm(self.n, self.degree, self.coefficients + other.coefficients)

    def __sub__(self, other: "ExteriorForm") -> "ExteriorForm":
        self._check_compatible(other)
        return ExteriorForm(self.n, self.degree, self.coefficients - other.coefficients)

    def __mul__(self, scalar: float) -> "ExteriorForm":
        return ExteriorForm(self.n, self.degree, scalar * self.coefficients)

    __rmul__ = __mul__

    def _check_compatible(self, other):
        if (self.n, self.degree) != (other.n, other.degree):
            raise ValueError("forms live in different spaces")

    def __repr__(self):
        return f"ExteriorForm(n={self.n}, degree={self.degree}, coefficients={self.coefficients!r})"


@lru_cache(maxsize=None)
def _wedge_table(n: int, p: int, q: int) -> tuple[np.ndarray, np.ndarray, np.ndarray, np.ndarray]:
    rows, cols, out, signs = [], [], [], []
    target = basis_index(n, p + q)
    for a, I in enumerate(basis(n, p)):
        for b, J in enumerate(basis(n, q)):
            sign, key = _sort_sign(I + J)
            if sign:
                rows.append(a)
                cols.append(b)
                out.append(target[key])
                signs.append(sign)
    return (np.array(rows, dtype=int), np.array(cols, dtype=int),
            np.array(out, dtype=int), np.array(signs, dtype=float))


def wedge(a: ExteriorForm, b: ExteriorForm) -> ExteriorForm:
    if a.n != b.n:
        raise ValueError("forms live over different dimensions")
    rows, cols, out, signs = _wedge_table(a.n, a.degree, b.degree)
    coeffs = np.zeros(comb(a.n, a.degree + b.degree))
    if rows.size:
        np.add.at(coeffs, out, signs * a.coefficients[rows] * b.coefficients[cols])
    return ExteriorForm(a.n, a.degree + b.degree, coeffs)


def compound_matrix(A: np.ndarray, k: int) -> np.ndarray:
    """k-th exterior power of a linear map: the matrix of k x k minors.

    Rows index increasing k-tuples of the target, columns of the source.
    """
    A = np.asarray(A, dtype=float)
    m, n = A.shape
    if k == 0:
        return np.ones((1, 1))
    rows = np.array(basis(m, k), dtype=int).reshape(-1, k)
    cols = np.array(basis(n, k), dtype=int).reshape(-1, k)
    if rows.shape[0] == 0 or cols.shape[0] == 0:
        return np.zeros((rows.shape[0], cols.shape[0]))
    blocks = A[rows[:, None, :, None], cols[None, :, None, :]]
    return np.linalg.det(blocks)


def random_form(rng: np.random.Generator, n: int, k: int) -> ExteriorForm:
    return ExteriorForm(n, k, rng.standard_normal(comb(n, k)))
