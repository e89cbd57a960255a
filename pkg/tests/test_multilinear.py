import numpy as np
import pytest
from hypothesis import given, strategies as st

from spinbound.exterior import compound_matrix, random_form
from spinbound.multilinear import (
    HomothetyVerdict, PointwiseMap, area_scaling, breve_operator, dist_scaling,
    exterior_power, is_homothetic, lemma1_spectral_gap, pointwise_inequality_checks,
    pullback_B, sharp, sharp_matrix, trace_inequality_margin, trace_scalings,
)
from spinbound.sampling import random_map, random_spd

dims = st.integers(2, 6)
seeds = st.integers(0, 2**32 - 1)


def test_identity_map_pulls_back_to_identity():
    fmap = PointwiseMap(np.eye(3))
    assert np.allclose(fmap.B, np.eye(3))
    assert dist_scaling(fmap) == pytest.approx(1.0)
    assert area_scaling(fmap) == pytest.approx(1.0)


def test_pullback_respects_metrics():
    G0 = np.diag([4.0, 1.0])
    fmap = PointwiseMap(np.eye(2), np.eye(2), G0)
    # B is defined by g(BX, Y) = g0(f X, f Y).
    assert np.allclose(np.sort(np.linalg.eigvalsh(fmap.B)), [1.0, 4.0])


def test_rejects_bad_metric():
    with pytest.raises(ValueError):
        PointwiseMap(np.eye(2), np.diag([1.0, -1.0]))
    with pytest.raises(ValueError):
        PointwiseMap(np.eye(2), np.eye(3))


def test_roundtrip_dict(rng):
    fmap = random_map(rng, 3, 4)
    back = PointwiseMap.from_dict(fmap.to_dict())
    assert np.array_equal(back.F, fmap.F) and np.array_equal(back.G0, fmap.G0)


@given(dims, dims, seeds)
def test_lemma1_shared_spectra(n, m, seed):
    fmap = random_map(np.random.default_rng(seed), n, m)
    scale = max(1.0, dist_scaling(fmap)) ** 3
    for k in range(1, min(3, n, m) + 1):
        assert lemma1_spectral_gap(fmap, k) <= 1e-9 * scale


@given(dims, dims, seeds)
def test_sharp_is_metric_adjoint(n, m, seed):
    rng = np.random.default_rng(seed)
    fmap = random_map(rng, n, m)
    for k in range(1, min(3, n, m) + 1):
        v, w = random_form(rng, n, k), random_form(rng, m, k)
        fv = compound_matrix(fmap.F, k) @ v.coefficients
        lhs = fv @ compound_matrix(fmap.G0, k) @ w.coefficients
        rhs = v.coefficients @ compound_matrix(fmap.G, k) @ sharp(fmap, k, w).coefficients
        assert lhs == pytest.approx(rhs, rel=1e-9, abs=1e-9)


def test_sharp_matrix_composes_to_exterior_power(rng):
    fmap = random_map(rng, 4, 3)
    S = sharp_matrix(fmap, 2)
    Ft2 = compound_matrix(fmap.orthonormal, 2)
    assert np.allclose(S @ Ft2, exterior_power(pullback_B(fmap), 2).matrix)
    assert np.allclose(Ft2 @ S, breve_operator(fmap, 2))


def test_area_is_top_two_eigenvalues():
    fmap = PointwiseMap(np.diag([3.0, 2.0, 0.5]))
    assert area_scaling(fmap) == pytest.approx(9.0 * 4.0)
    assert dist_scaling(fmap) == pytest.approx(9.0)


@given(st.integers(2, 7), seeds)
def test_trace_identities(n, seed):
    rng = np.random.default_rng(seed)
    fmap = PointwiseMap(rng.standard_normal((n, n)))
    tr_B, tr_B2 = trace_scalings(fmap)
    B = fmap.B
    scale = max(1.0, tr_B) ** 2
    assert abs(tr_B**2 - 2 * tr_B2 - np.trace(B @ B)) <= 1e-10 * scale
    assert np.trace(exterior_power(pullback_B(fmap), 2).matrix) == pytest.approx(tr_B2)
    assert trace_inequality_margin(fmap) >= -1e-10 * scale


def test_trace_margin_vanishes_on_homothety():
    fmap = PointwiseMap(np.sqrt(2.5) * np.eye(4))
    assert abs(trace_inequality_margin(fmap)) <= 1e-12


def test_homothety_verdicts(rng):
    Q, _ = np.linalg.qr(rng.standard_normal((4, 4)))
    verdict, scale = is_homothetic(PointwiseMap(1.5 * Q))
    assert verdict is HomothetyVerdict.HOMOTHETY and scale == pytest.approx(2.25)
    proj = np.eye(3, 5)
    verdict, scale = is_homothetic(PointwiseMap(2.0 * proj))
    assert verdict is HomothetyVerdict.HOMOTHETIC_SURJECTION and scale == pytest.approx(4.0)
    verdict, _ = is_homothetic(PointwiseMap(np.diag([1.0, 1.1, 1.0])))
    assert verdict is HomothetyVerdict.NEITHER
    verdict, scale = is_homothetic(PointwiseMap(np.zeros((2, 3))))
    assert verdict is HomothetyVerdict.HOMOTHETIC_SURJECTION and scale is None
    with pytest.raises(ValueError):
        is_homothetic(PointwiseMap(np.eye(2)), tol=0.0)


def test_homothety_under_nontrivial_metrics(rng):
    fmap = random_map(rng, 4, 4, "homothetic")
    assert is_homothetic(fmap)[0] is HomothetyVerdict.HOMOTHETY
    assert random_spd(rng, 3).shape == (3, 3)


def test_pointwise_inequalities_round_sphere():
    n = 4
    g0 = np.eye(n)
    scal0 = n * (n - 1)
    # g = c g0 with c < 1: scal_g = scal0 / c.
    c = 0.5
    fmap = PointwiseMap(np.eye(n), c * g0, g0)
    res = pointwise_inequality_checks(fmap, scal0 / c, scal0)
    assert res["ineq0"] and res["ineq2"] and res["inequa0"] and res["inequal"]
    assert res["area"] == pytest.approx(1 / c**2)


@given(st.integers(3, 5), seeds)
def test_pointwise_implications(n, seed):
    rng = np.random.default_rng(seed)
    G = random_spd(rng, n)
    fmap = PointwiseMap(np.eye(n), G, np.eye(n))
    scal0 = n * (n - 1)
    scal_g = float(rng.uniform(0, 3 * scal0))
    res = pointwise_inequality_checks(fmap, scal_g, scal0)
    assert res["ineq0_implies_ineq2"]
    assert res["inequa0_implies_inequal"]


def test_pointwise_checks_need_square():
    with pytest.raises(ValueError):
        pointwise_inequality_checks(PointwiseMap(np.eye(3, 4)), 1.0, 1.0)
