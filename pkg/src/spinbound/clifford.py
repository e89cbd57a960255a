"""Complex Clifford algebra representations and the Clifford action of forms.

Generators satisfy ``g_i g_j + g_j g_i = -2 delta_ij Id`` and are skew-Hermitian
and unitary. They come from the iterated Pauli (Jordan-Wigner) construction, so a
given ``n`` always yields identical matrices.
"""
from __future__ import annotations

import os
from dataclasses import dataclass
from functools import cached_property, reduce

import numpy as np

from .exterior import MAX_DEGREE, ExteriorForm, basis, wedge

__all__ = [
    "CliffordRep",
    "DimensionError",
    "ExteriorForm",
    "UnsupportedDegreeError",
    "build_rep",
    "dimension_cap",
    "gamma",
    "lemma2_residual",
    "relation_residual",
]

DEFAULT_DIM_CAP = 12
DIM_CAP_ENV = "SPINBOUND_DIM_CAP"

_I2 = np.eye(2, dtype=complex)
_X = np.array([[0, 1], [1, 0]], dtype=complex)
_Y = np.array([[0, -1j], [1j, 0]], dtype=complex)
_Z = np.array([[1, 0], [0, -1]], dtype=complex)


class DimensionError(ValueError):
    pass


class UnsupportedDegreeError(ValueError):
    pass


def dimension_cap() -> int:
    """Largest supported dimension; overridable through ``SPINBOUND_DIM_CAP``."""
    raw = os.environ.get(DIM_CAP_ENV)
    return int(raw) if raw else DEFAULT_DIM_CAP


def _kron_all(factors):
    return reduce(np.kron, factors, np.eye(1, dtype=complex))


@dataclass(frozen=True, eq=False)
class CliffordRep:
    n: int
    dim_spinor: int
    generators: tuple
    variant: int = 0

    @cached_property
    def identity(self) -> np.ndarray:
        return np.eye(self.dim_spinor, dtype=complex)

    @cached_property
    def _products(self) -> dict:
        return {}

    def basis_products(self, k: int) -> np.ndarray:
        """Stack of ``g_{i1} ... g_{ik}`` over the lexicographic k-tuples."""
        cache = self._products
        if k not in cache:
            d = self.dim_spinor
            mats = [reduce(np.matmul, (self.generators[i] for i in idx), self.identity)
                    for idx in basis(self.n, k)]
            stack = np.array(mats, dtype=complex).reshape(len(mats), d, d)
            stack.setflags(write=False)
            cache[k] = stack
        return cache[k]


def build_rep(n: int, variant: int = 0) -> CliffordRep:
    """Deterministic irreducible representation of Cl(n) tensored with C.

    For odd ``n`` the two inequivalent representations differ by the sign of
    the last generator; ``variant=1`` selects the second one.
    """
    cap = dimension_cap()
    if n < 1 or n > cap:
        raise DimensionError(f"dimension {n} outside supported range 1..{cap}")
    k = n // 2
    hermitian = []
    for j in range(k):
        prefix = [_Z] * j
        suffix = [_I2] * (k - j - 1)
        hermitian.append(_kron_all(prefix + [_X] + suffix))
        hermitian.append(_kron_all(prefix + [_Y] + suffix))
    if n % 2:
        chirality = _kron_all([_Z] * k)
        hermitian.append(-chirality if variant else chirality)
    gens = []
    for h in hermitian:
        g = 1j * h
        g.setflags(write=False)
        gens.append(g)
    return CliffordRep(n=n, dim_spinor=2**k, generators=tuple(gens), variant=variant if n % 2 else 0)


def relation_residual(rep: CliffordRep) -> float:
    """Largest entrywise deviation from the defining relations."""
    worst = 0.0
    eye = rep.identity
    for i, gi in enumerate(rep.generators):
        worst = max(worst, np.abs(gi.conj().T + gi).max())
        worst = max(worst, np.abs(gi.conj().T @ gi - eye).max())
        for j, gj in enumerate(rep.generators):
            target = -2.0 * eye if i == j else 0.0
            worst = max(worst, np.abs(gi @ gj + gj @ gi - target).max())
    return float(worst)


def gamma(rep: CliffordRep, form: ExteriorForm) -> np.ndarray:
    """Clifford action of a homogeneous form of degree <= 4."""
    if form.n != rep.n:
        raise ValueError(f"form lives on R^{form.n}, representation on R^{rep.n}")
    if form.degree > MAX_DEGREE:
        raise UnsupportedDegreeError(f"degree {form.degree} > {MAX_DEGREE}")
    if form.degree == 0:
        return form.coefficients[0] * rep.identity
    if form.degree > rep.n:
        return np.zeros_like(rep.identity)
    return np.tensordot(form.coefficients, rep.basis_products(form.degree), axes=1)


def lemma2_residual(rep: CliffordRep, eta: ExteriorForm) -> float:
    """Operator norm of ``gamma(eta)^2 - gamma(eta ^ eta) + |eta|^2 Id``."""
    if eta.degree != 2:
        raise ValueError("expected a 2-form")
    if eta.n != rep.n:
        raise ValueError(f"form lives on R^{eta.n}, representation on R^{rep.n}")
    g = gamma(rep, eta)
    diff = g @ g - gamma(rep, wedge(eta, eta)) + eta.norm_sq() * rep.identity
    return float(np.linalg.norm(diff, 2))
