"""Curvature endomorphism on the tensor product of two spinor spaces.

With ``e_i`` a G-orthonormal frame of the source and ``(kappa_l, h_l)`` the
eigendata of the target curvature operator ``R``::

    Frak  = -1/4 sum_{i,j} gamma(e_i ^ e_j) (x) gamma0(R(f_* e_i ^ f_* e_j))
          = -1/2 sum_l kappa_l gamma(f# h_l) (x) gamma0(h_l)
    Comp  = sum_l kappa_l C_l^2,  C_l = gamma(f# h_l) (x) Id + alpha Id (x) gamma0(h_l)

``Comp`` is negative semi-definite whenever ``R >= 0``; combined with the Bianchi
identity this yields the lower bounds on ``Frak`` checked below.
"""
from __future__ import annotations

from dataclasses import asdict, dataclass, field
from typing import Optional

import numpy as np

from .clifford import CliffordRep
from .curvature import CurvatureOperator, bianchi_defect, constant_curvature, positivity_report
from .exterior import ExteriorForm, basis, wedge
from .multilinear import (
    HomothetyVerdict,
    PointwiseMap,
    area_scaling,
    is_homothetic,
    sharp_matrix,
    trace_scalings,
)

__all__ = [
    "PreconditionError",
    "SpectralReport",
    "build_frakC",
    "build_frakR_eigen",
    "build_frakR_pairs",
    "prop1_report",
    "prop2_report",
    "simplC_residual",
]

BIANCHI_TOL = 1e-10


class PreconditionError(ValueError):
    pass


def _check_dims(rep_n: CliffordRep, rep_m: CliffordRep, fmap: PointwiseMap, op: CurvatureOperator):
    if rep_n.n != fmap.n or rep_m.n != fmap.m:
        raise ValueError(
            f"representations (n={rep_n.n}, m={rep_m.n}) do not match map ({fmap.n} -> {fmap.m})"
        )
    if op.m != fmap.m:
        raise ValueError(f"curvature operator lives in dimension {op.m}, map target is {fmap.m}")


def _gamma2(rep: CliffordRep, coeffs: np.ndarray) -> np.ndarray:
    if rep.n < 2:
        return np.zeros_like(rep.identity)
    return np.tensordot(coeffs, rep.basis_products(2), axes=1)


def build_frakR_pairs(rep_n: CliffordRep, rep_m: CliffordRep, fmap: PointwiseMap,
                      op: CurvatureOperator) -> np.ndarray:
    """Assemble the curvature endomorphism from the double sum over frame pairs."""
    _check_dims(rep_n, rep_m, fmap, op)
    Ft = fmap.orthonormal
    d = rep_n.dim_spinor * rep_m.dim_spinor
    out = np.zeros((d, d), dtype=complex)
    src = rep_n.basis_products(2) if fmap.n >= 2 else ()
    for p, (i, j) in enumerate(basis(fmap.n, 2)):
        image = wedge(ExteriorForm.from_vector(Ft[:, i]), ExteriorForm.from_vector(Ft[:, j]))
        curved = op.matrix @ image.coefficients
        if not curved.any():
            continue
        # Both orderings (i, j) and (j, i) contribute equally: -1/4 * 2.
        out -= 0.5 * np.kron(src[p], _gamma2(rep_m, curved))
    return out


def _sharp_h(fmap: PointwiseMap, op: CurvatureOperator) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    kappa, H = op.eigenpairs
    if fmap.n < 2:
        return kappa, H, np.zeros((0, H.shape[1]))
    return kappa, H, sharp_matrix(fmap, 2) @ H


def build_frakR_eigen(rep_n: CliffordRep, rep_m: CliffordRep, fmap: PointwiseMap,
                      op: CurvatureOperator, eigenpairs=None) -> np.ndarray:
    """Assemble the curvature endomorphism from the eigendata of ``op``.

    ``eigenpairs`` overrides ``op.eigenpairs``; any orthonormal eigenbasis must
    give the same matrix.
    """
    _check_dims(rep_n, rep_m, fmap, op)
    if eigenpairs is None:
        kappa, H, SH = _sharp_h(fmap, op)
    else:
        kappa, H = eigenpairs
        SH = sharp_matrix(fmap, 2) @ H if fmap.n >= 2 else np.zeros((0, H.shape[1]))
    d = rep_n.dim_spinor * rep_m.dim_spinor
    out = np.zeros((d, d), dtype=complex)
    for l, k in enumerate(kappa):
        if k == 0.0:
            continue
        out -= 0.5 * k * np.kron(_gamma2(rep_n, SH[:, l]), _gamma2(rep_m, H[:, l]))
    return out


def build_frakC(rep_n: CliffordRep, rep_m: CliffordRep, fmap: PointwiseMap,
                op: CurvatureOperator, alpha: float):
    """Return ``(Comp, C_list, D_list)``; ``D_l`` flips the sign of the alpha term."""
    if alpha < 0:
        raise ValueError("alpha must be non-negative")
    _check_dims(rep_n, rep_m, fmap, op)
    kappa, H, SH = _sharp_h(fmap, op)
    In, Im = rep_n.identity, rep_m.identity
    d = In.shape[0] * Im.shape[0]
    comp = np.zeros((d, d), dtype=complex)
    C_list, D_list = [], []
    for l, k in enumerate(kappa):
        left = np.kron(_gamma2(rep_n, SH[:, l]), Im)
        right = alpha * np.kron(In, _gamma2(rep_m, H[:, l]))
        C, D = left + right, left - right
        C_list.append(C)
        D_list.append(D)
        comp += k * (C @ C)
    return comp, C_list, D_list


def simplC_residual(rep_n: CliffordRep, rep_m: CliffordRep, fmap: PointwiseMap,
                    op: CurvatureOperator, alpha: float) -> float:
    """Norm of ``Comp + 4 alpha Frak + (alpha^2 scal/2 + sum kappa |f# h|^2) Id``."""
    comp, _, _ = build_frakC(rep_n, rep_m, fmap, op, alpha)
    frak = build_frakR_eigen(rep_n, rep_m, fmap, op)
    return _simplC_from(comp, frak, fmap, op, alpha)


def _simplC_from(comp, frak, fmap, op, alpha) -> float:
    kappa, _, SH = _sharp_h(fmap, op)
    shift = 0.5 * alpha**2 * op.scal + float(kappa @ (SH**2).sum(axis=0))
    resid = comp + 4.0 * alpha * frak + shift * np.eye(comp.shape[0])
    return float(np.linalg.norm(resid, 2))


def _hermitian_eigvals(M: np.ndarray) -> np.ndarray:
    return np.linalg.eigvalsh(0.5 * (M + M.conj().T))


@dataclass
class SpectralReport:
    n: int
    m: int
    status: str
    alpha: float = 0.0
    area: float = 0.0
    min_eig_R: float = 0.0
    bound: float = 0.0
    margin: float = 0.0
    tolerance: float = 0.0
    frakC_max_eig: float = 0.0
    simplC_residual: float = 0.0
    hermitian_residual: float = 0.0
    homothety_verdict: str = ""
    scale: Optional[float] = None
    at_equality: bool = False
    checks: dict = field(default_factory=dict)
    evidence: dict = field(default_factory=dict)
    reason: str = ""

    @property
    def ok(self) -> bool:
        return self.status == "ok" and all(self.checks.values())

    def to_dict(self) -> dict:
        return asdict(self)


def _skipped(fmap: PointwiseMap, reason: str, **extra) -> SpectralReport:
    return SpectralReport(n=fmap.n, m=fmap.m, status="skipped-precondition", reason=reason, **extra)


def _core(rep_n, rep_m, fmap, op, alpha, bound, tol):
    frak = build_frakR_eigen(rep_n, rep_m, fmap, op)
    herm = float(np.abs(frak - frak.conj().T).max()) if frak.size else 0.0
    eigs = _hermitian_eigvals(frak)
    min_eig = float(eigs.min())
    # Margin tolerance scales with the operator norm of Frak.
    tol_eff = tol * max(1.0, float(np.abs(eigs).max()))
    comp, C_list, D_list = build_frakC(rep_n, rep_m, fmap, op, alpha)
    comp_max = float(_hermitian_eigvals(comp).max())
    resid = _simplC_from(comp, frak, fmap, op, alpha)
    return frak, min_eig, min_eig - bound, tol_eff, comp_max, resid, herm, C_list, D_list


def _surjective(fmap: PointwiseMap, tol: float) -> bool:
    sv = np.linalg.svd(fmap.orthonormal, compute_uv=False)
    return bool(sv.size and sv.min() > tol * max(sv.max(), 1e-300) and fmap.n >= fmap.m)


def prop1_report(rep_n: CliffordRep, rep_m: CliffordRep, fmap: PointwiseMap,
                 op: CurvatureOperator, tol: float = 1e-8,
                 homothety_tol: float | None = None) -> SpectralReport:
    """Check ``Frak >= -(scal/4) sqrt(area)`` and its equality analysis at one point.

    The margin grows linearly with the spread of B near a homothetic surjection,
    so the homothety test reuses ``tol`` unless told otherwise.
    """
    _check_dims(rep_n, rep_m, fmap, op)
    homothety_tol = tol if homothety_tol is None else homothety_tol
    pos = positivity_report(op)
    defect = bianchi_defect(op)
    if not pos["R_psd"]:
        return _skipped(fmap, f"curvature operator not PSD (min kappa {pos['min_kappa']:.3g})")
    if defect > BIANCHI_TOL * max(1.0, np.abs(op.matrix).max()):
        return _skipped(fmap, f"Bianchi defect {defect:.3g}")
    area = area_scaling(fmap)
    alpha = float(np.sqrt(area))
    bound = -0.25 * op.scal * alpha
    frak, min_eig, margin, tol_eff, comp_max, resid, herm, _, _ = _core(
        rep_n, rep_m, fmap, op, alpha, bound, tol)
    verdict, scale = is_homothetic(fmap, homothety_tol)
    kappa, _, SH = _sharp_h(fmap, op)
    sharp_norms = (SH**2).sum(axis=0)
    at_equality = margin <= tol_eff
    homothetic_onto = (verdict is not HomothetyVerdict.NEITHER and _surjective(fmap, homothety_tol))
    scale_ref = max(1.0, area)
    checks = {
        "bound": margin >= -tol_eff,
        "hermitian": herm <= 1e-10 * max(1.0, float(np.abs(frak).max())),
        "frakC_nsd": comp_max <= 1e-9 * max(1.0, op.scal * scale_ref),
        "simplC": resid <= 1e-8 * max(1.0, op.scal * scale_ref),
        "ineq_loc": bool(np.all(sharp_norms <= area + 1e-9 * scale_ref)),
    }
    if pos["Ric_pd"] and fmap.m >= 3 and area > tol:
        checks["equality_implies_homothetic_surjection"] = (not at_equality) or homothetic_onto
    if homothetic_onto and area > tol:
        checks["homothetic_surjection_implies_equality"] = bool(at_equality)
    return SpectralReport(
        n=fmap.n, m=fmap.m, status="ok", alpha=alpha, area=area, min_eig_R=min_eig,
        bound=bound, margin=margin, tolerance=tol_eff, frakC_max_eig=comp_max,
        simplC_residual=resid, hermitian_residual=herm, homothety_verdict=verdict.value,
        scale=scale, at_equality=bool(at_equality), checks=checks,
        evidence={"bianchi_defect": defect, "max_sharp_norm_sq": float(sharp_norms.max(initial=0.0)),
                  "ric_pd": pos["Ric_pd"], "surjective_homothetic": homothetic_onto},
    )


def _is_unit_sphere(op: CurvatureOperator) -> bool:
    return bool(np.abs(op.matrix - np.eye(op.matrix.shape[0])).max() <= 1e-12)


def dc_scalar_residual(rep_n: CliffordRep, rep_m: CliffordRep, fmap: PointwiseMap,
                       alpha: float) -> float:
    """Largest ``|D_l C_l - (alpha^2 - lam_i lam_j) Id|`` over ``h_l = e_i ^ e_j``.

    Here ``e_i`` is an orthonormal eigenbasis of ``f_* f#`` with eigenvalues
    ``lam_i``; for the unit sphere every such ``h_l`` is a curvature eigenvector.
    """
    Ft = fmap.orthonormal
    lam, E = np.linalg.eigh(Ft @ Ft.T)
    S = sharp_matrix(fmap, 2)
    In, Im = rep_n.identity, rep_m.identity
    eye = np.eye(In.shape[0] * Im.shape[0])
    worst = 0.0
    for i, j in basis(fmap.m, 2):
        h = wedge(ExteriorForm.from_vector(E[:, i]), ExteriorForm.from_vector(E[:, j])).coefficients
        left = np.kron(_gamma2(rep_n, S @ h), Im)
        right = alpha * np.kron(In, _gamma2(rep_m, h))
        DC = (left - right) @ (left + right)
        expected = alpha**2 - lam[i] * lam[j]
        worst = max(worst, float(np.linalg.norm(DC - expected * eye, 2)))
    return worst


def prop2_report(rep_n: CliffordRep, rep_m: CliffordRep, fmap: PointwiseMap,
                 tol: float = 1e-8, op: CurvatureOperator | None = None,
                 homothety_tol: float | None = None) -> SpectralReport:
    """Check ``Frak >= -1/2 sqrt(n(n-1)/2 tr B_2)`` for maps into the unit sphere.

    Here the margin is quadratic in the spread of B, so the default homothety
    tolerance is ``10 sqrt(tol)``.
    """
    homothety_tol = 10.0 * np.sqrt(tol) if homothety_tol is None else homothety_tol
    if op is not None and not _is_unit_sphere(op):
        raise PreconditionError("the trace bound is stated for the unit sphere only")
    n = fmap.n
    if fmap.m != n or n < 3:
        return _skipped(fmap, f"needs n == m >= 3, got n={n}, m={fmap.m}")
    op = op or constant_curvature(n)
    _, tr_B2 = trace_scalings(fmap)
    tr_B2 = max(tr_B2, 0.0)
    npairs = n * (n - 1) / 2
    alpha = float(np.sqrt(tr_B2 / npairs))
    bound = -0.5 * float(np.sqrt(npairs * tr_B2))
    frak, min_eig, margin, tol_eff, comp_max, resid, herm, _, _ = _core(
        rep_n, rep_m, fmap, op, alpha, bound, tol)
    area = area_scaling(fmap)
    verdict, scale = is_homothetic(fmap, homothety_tol)
    at_equality = margin <= tol_eff
    predicted = verdict is HomothetyVerdict.HOMOTHETY or area <= tol
    dc = dc_scalar_residual(rep_n, rep_m, fmap, alpha)
    scale_ref = max(1.0, area)
    prop1_bound = -npairs / 2 * float(np.sqrt(area))
    checks = {
        "bound": margin >= -tol_eff,
        "hermitian": herm <= 1e-10 * max(1.0, float(np.abs(frak).max())),
        "frakC_nsd": comp_max <= 1e-9 * max(1.0, op.scal * scale_ref),
        "simplC": resid <= 1e-8 * max(1.0, op.scal * scale_ref),
        "dc_scalar": dc <= 1e-8 * scale_ref,
        "equality_classification": bool(at_equality) == bool(predicted),
        "tighter_than_prop1": bound >= prop1_bound - 1e-12 * scale_ref,
    }
    report = SpectralReport(
        n=n, m=n, status="ok", alpha=alpha, area=area, min_eig_R=min_eig, bound=bound,
        margin=margin, tolerance=tol_eff, frakC_max_eig=comp_max, simplC_residual=resid,
        hermitian_residual=herm, homothety_verdict=verdict.value, scale=scale,
        at_equality=bool(at_equality), checks=checks,
        evidence={"dc_residual": dc, "tr_B2": tr_B2, "prop1_bound": prop1_bound},
    )
    return report
