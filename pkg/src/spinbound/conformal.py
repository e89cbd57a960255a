"""Conformal curvature changes on flat periodic grids.

Fields live on the torus ``[0, 2 pi)^n`` sampled at ``res`` points per axis, grid
axes first. ``delta`` is the formal adjoint of ``d`` (negative divergence), so on
the flat base ``delta d a = -sum_i d_i^2 a``.

Two derivative schemes are available: second-order central differences (used by
the curvature pipeline whose convergence order is measured) and the Fourier
derivative, which is exact on band-limited fields and exactly skew-adjoint.
"""
from __future__ import annotations

from dataclasses import dataclass
from functools import cached_property
from typing import Callable

import numpy as np

__all__ = [
    "GridMetric",
    "PeriodicGrid",
    "RigidityVerdict",
    "ScalarField",
    "conformal_metric",
    "conformal_ricci_formula",
    "conformal_scal_formula",
    "convergence_order",
    "fd_curvature",
    "field_from_expression",
    "ibp_identity_residual",
    "rigidity_witness",
    "trace_consistency",
]

MAX_POINTS = 2**20


@dataclass(frozen=True)
class PeriodicGrid:
    n: int
    res: int = 32

    def __post_init__(self):
        if self.n not in (2, 3, 4):
            raise ValueError(f"grid dimension must be 2, 3 or 4, got {self.n}")
        if self.res < 8 or self.res & (self.res - 1):
            raise ValueError(f"resolution must be a power of two >= 8, got {self.res}")
        if self.res**self.n > MAX_POINTS:
            raise ValueError(f"{self.res}^{self.n} grid points exceed {MAX_POINTS}")

    @property
    def h(self) -> float:
        return 2 * np.pi / self.res

    @property
    def shape(self) -> tuple[int, ...]:
        return (self.res,) * self.n

    @cached_property
    def coords(self) -> tuple[np.ndarray, ...]:
        x = np.arange(self.res) * self.h
        return tuple(np.meshgrid(*([x] * self.n), indexing="ij"))

    @cached_property
    def wavenumbers(self) -> np.ndarray:
        k = np.fft.fftfreq(self.res, d=1.0 / self.res)
        # Drop the Nyquist mode so the discrete derivative stays real and skew.
        k[self.res // 2] = 0.0
        return k


@dataclass(frozen=True, eq=False)
class ScalarField:
    grid: PeriodicGrid
    values: np.ndarray

    def __post_init__(self):
        v = np.asarray(self.values, dtype=float)
        if v.shape != self.grid.shape:
            v = v.reshape(self.grid.shape)
        object.__setattr__(self, "values", v)


@dataclass(frozen=True, eq=False)
class GridMetric:
    """Metric field ``g[..., i, j]`` over the grid."""

    grid: PeriodicGrid
    g: np.ndarray

    def __post_init__(self):
        g = np.asarray(self.g, dtype=float)
        n = self.grid.n
        if g.shape != self.grid.shape + (n, n):
            raise ValueError(f"metric field must have shape {self.grid.shape + (n, n)}")
        object.__setattr__(self, "g", g)


_EXPRESSIONS: dict[str, Callable] = {
    "const": lambda x: 2.0 + 0.0 * x[0],
    "sin1": lambda x: 2.0 + np.sin(x[0]),
    "sin12": lambda x: 2.0 + np.sin(x[0]) * np.sin(x[1]),
    "sin12_small": lambda x: 2.0 + 0.3 * np.sin(x[0]) * np.sin(x[1]),
    "mixed": lambda x: 2.0 + 0.5 * np.cos(x[0] + x[1]) + 0.3 * np.sin(2 * x[-1]),
}


def field_from_expression(grid: PeriodicGrid, expr: str) -> ScalarField:
    """Band-limited test fields bounded below by 0.5."""
    try:
        fn = _EXPRESSIONS[expr]
    except KeyError:
        raise ValueError(f"unknown field expression {expr!r}; known: {sorted(_EXPRESSIONS)}")
    return ScalarField(grid, fn(grid.coords))


def _central(values: np.ndarray, axis: int, h: float) -> np.ndarray:
    return (np.roll(values, -1, axis=axis) - np.roll(values, 1, axis=axis)) / (2 * h)


def _spectral(values: np.ndarray, axis: int, grid: PeriodicGrid) -> np.ndarray:
    shape = [1] * values.ndim
    shape[axis] = grid.res
    ik = 1j * grid.wavenumbers.reshape(shape)
    return np.fft.ifft(ik * np.fft.fft(values, axis=axis), axis=axis).real


def _deriv(values: np.ndarray, axis: int, grid: PeriodicGrid, scheme: str) -> np.ndarray:
    if scheme == "central":
        return _central(values, axis, grid.h)
    if scheme == "spectral":
        return _spectral(values, axis, grid)
    raise ValueError(f"unknown derivative scheme {scheme!r}")


def gradient(f: ScalarField, scheme: str = "spectral") -> np.ndarray:
    """``d f`` as an array with a trailing component axis."""
    return np.stack([_deriv(f.values, i, f.grid, scheme) for i in range(f.grid.n)], axis=-1)


def hessian(f: ScalarField, scheme: str = "spectral") -> np.ndarray:
    grid = f.grid
    first = [_deriv(f.values, i, grid, scheme) for i in range(grid.n)]
    H = np.empty(grid.shape + (grid.n, grid.n))
    for i in range(grid.n):
        for j in range(i, grid.n):
            H[..., i, j] = H[..., j, i] = _deriv(first[i], j, grid, scheme)
    return H


def codifferential_of_gradient(f: ScalarField, scheme: str = "spectral") -> np.ndarray:
    """``delta d f = -div grad f`` on the flat base."""
    return -np.trace(hessian(f, scheme), axis1=-2, axis2=-1)


def conformal_metric(alpha: ScalarField) -> GridMetric:
    """``alpha * g_flat``."""
    n = alpha.grid.n
    return GridMetric(alpha.grid, alpha.values[..., None, None] * np.eye(n))


def fd_curvature(metric: GridMetric, scheme: str = "central") -> tuple[ScalarField, np.ndarray]:
    """Christoffel symbols, Ricci tensor and scalar curvature by finite differences."""
    grid, g = metric.grid, metric.g
    n = grid.n
    w = np.linalg.eigvalsh(g)
    bad = np.argwhere(w.min(axis=-1) <= 0)
    if bad.size:
        raise ValueError(f"metric is not positive definite at grid index {tuple(int(i) for i in bad[0])}")
    ginv = np.linalg.inv(g)
    # dg[..., k, i, j] = d_k g_ij
    dg = np.stack([_deriv(g, k, grid, scheme) for k in range(n)], axis=-3)
    # low[..., m, i, j] = 1/2 (d_i g_jm + d_j g_im - d_m g_ij)
    low = 0.5 * (np.einsum("...ijm->...mij", dg) + np.einsum("...jim->...mij", dg)) - 0.5 * dg
    gam = np.einsum("...lm,...mij->...lij", ginv, low)
    # Ric_jk = d_l G^l_jk - d_j G^l_lk + G^l_lm G^m_jk - G^l_jm G^m_lk
    div = sum(_deriv(gam[..., l, :, :], l, grid, scheme) for l in range(n))
    trace_l = np.einsum("...llk->...k", gam)
    grad_trace = np.stack([_deriv(trace_l, j, grid, scheme) for j in range(n)], axis=-2)
    ric = (div - grad_trace
           + np.einsum("...m,...mjk->...jk", trace_l, gam)
           - np.einsum("...ljm,...mlk->...jk", gam, gam))
    ric = 0.5 * (ric + np.swapaxes(ric, -1, -2))
    scal = np.einsum("...jk,...jk->...", ginv, ric)
    return ScalarField(grid, scal), ric


def _check_positive(alpha: ScalarField):
    if alpha.values.min() <= 0:
        idx = np.unravel_index(np.argmin(alpha.values), alpha.values.shape)
        raise ValueError(f"conformal factor must be positive; min {alpha.values.min():.3g} at {idx}")


def conformal_scal_formula(alpha: ScalarField, scal_g, n: int | None = None,
                           scheme: str = "spectral") -> ScalarField:
    """Scalar curvature of ``alpha * g`` for a flat base ``g``.

    ``scal/alpha + (n-1)/alpha^2 delta d alpha - (n-1)(n-6)/(4 alpha^3) |d alpha|^2``
    """
    _check_positive(alpha)
    n = alpha.grid.n if n is None else n
    a = alpha.values
    s = scal_g.values if isinstance(scal_g, ScalarField) else scal_g
    da = gradient(alpha, scheme)
    dd = codifferential_of_gradient(alpha, scheme)
    grad_sq = (da**2).sum(axis=-1)
    out = s / a + (n - 1) / a**2 * dd - (n - 1) * (n - 6) / (4 * a**3) * grad_sq
    return ScalarField(alpha.grid, out)


def conformal_ricci_formula(alpha: ScalarField, ric_g, n: int | None = None,
                            scheme: str = "spectral") -> np.ndarray:
    """Ricci tensor of ``alpha * g`` for a flat base ``g`` (derivatives w.r.t. g)."""
    _check_positive(alpha)
    grid = alpha.grid
    n = grid.n if n is None else n
    a = alpha.values[..., None, None]
    da = gradient(alpha, scheme)
    hess = hessian(alpha, scheme)
    dd = -np.trace(hess, axis1=-2, axis2=-1)[..., None, None]
    grad_sq = (da**2).sum(axis=-1)[..., None, None]
    ric = 0.0 if ric_g is None else ric_g
    eye = np.eye(grid.n)
    return (ric - (n - 2) / (2 * a) * hess
            + 3 * (n - 2) / (4 * a**2) * np.einsum("...i,...j->...ij", da, da)
            + (dd / (2 * a) - (n - 4) / (4 * a**2) * grad_sq) * eye)


def trace_consistency(alpha: ScalarField, scheme: str = "spectral") -> float:
    """Max pointwise gap between the alpha*g-trace of the Ricci formula and the scalar formula."""
    ric = conformal_ricci_formula(alpha, None, scheme=scheme)
    scal = conformal_scal_formula(alpha, 0.0, scheme=scheme).values
    traced = np.trace(ric, axis1=-2, axis2=-1) / alpha.values
    return float(np.abs(traced - scal).max())


def convergence_order(errors: list[float]) -> list[float]:
    """Observed orders between successive grid halvings."""
    return [float(np.log2(a / b)) for a, b in zip(errors, errors[1:])]


def ibp_identity_residual(alpha: ScalarField, k: int) -> float:
    """``|sum alpha^k delta d alpha - k sum alpha^(k-1) |d alpha|^2| h^n``.

    Uses the Fourier derivative: it is skew-adjoint on the grid and obeys the chain
    rule exactly on band-limited fields, so the residual is pure round-off.
    """
    if k < 1:
        raise ValueError("k must be >= 1")
    _check_positive(alpha)
    grid = alpha.grid
    a = alpha.values
    dd = codifferential_of_gradient(alpha, "spectral")
    grad_sq = (gradient(alpha, "spectral") ** 2).sum(axis=-1)
    lhs = np.sum(a**k * dd)
    rhs = k * np.sum(a ** (k - 1) * grad_sq)
    return float(abs(lhs - rhs) * grid.h**grid.n)


@dataclass(frozen=True)
class RigidityVerdict:
    verdict: str
    max_residual: float
    dirichlet_energy: float


def rigidity_witness(alpha: ScalarField, n: int, k: int, tol: float = 1e-9) -> RigidityVerdict:
    """Grid-level form of: the PDE plus integration by parts forces ``d alpha = 0``.

    The pointwise residual is ``alpha^k delta d alpha - (n-6)/4 alpha^(k-1) |d alpha|^2``.
    If it vanishes, summing against the exact discrete adjoint bounds the weighted
    Dirichlet energy by ``|sum residual| / |k - (n-6)/4|``.
    """
    if k < 1 or n < 3:
        raise ValueError("needs k >= 1 and n >= 3")
    c = (n - 6) / 4
    if k == c:
        raise ValueError(f"k = (n-6)/4 = {c} gives no control of the energy")
    _check_positive(alpha)
    grid = alpha.grid
    a = alpha.values
    dd = codifferential_of_gradient(alpha, "spectral")
    grad_sq = (gradient(alpha, "spectral") ** 2).sum(axis=-1)
    resid = a**k * dd - c * a ** (k - 1) * grad_sq
    max_resid = float(np.abs(resid).max())
    energy = float(np.sum(a ** (k - 1) * grad_sq) * grid.h**grid.n)
    if max_resid > tol:
        return RigidityVerdict("nonconstant_violates_pde", max_resid, energy)
    bound = abs(float(np.sum(resid)) * grid.h**grid.n) / abs(k - c)
    bound += ibp_identity_residual(alpha, k) / abs(k - c)
    if energy > bound + tol:
        raise ArithmeticError(f"energy {energy:.3g} exceeds integration-by-parts bound {bound:.3g}")
    return RigidityVerdict("constant", max_resid, energy)
