"""Acceptance criteria, one test per criterion.

Each test prints a single ``[criterion k] PASS|FAIL`` line (visible without
``-s``) and then asserts.
"""
import json
import time
from fractions import Fraction
from functools import lru_cache

import numpy as np
import pytest

from spinbound import charindex as ci
from spinbound import conformal as cf
from spinbound.cli import main
from spinbound.clifford import build_rep, lemma2_residual, relation_residual
from spinbound.curvature import (
    constant_curvature, fubini_study, product, random_bianchi_psd, random_psd,
)
from spinbound.exterior import random_form
from spinbound.multilinear import (
    HomothetyVerdict, PointwiseMap, area_scaling, is_homothetic, lemma1_spectral_gap,
    trace_inequality_margin, trace_scalings,
)
from spinbound.sampling import MAP_KINDS, random_map, random_orthogonal
from spinbound.spectral import (
    build_frakC, build_frakR_eigen, build_frakR_pairs, prop1_report, prop2_report,
    simplC_residual,
)

SEED = 424242


@pytest.fixture
def announce(pytestconfig):
    capman = pytestconfig.pluginmanager.getplugin("capturemanager")

    def _announce(k, ok, detail):
        line = f"[criterion {k:2d}] {'PASS' if ok else 'FAIL'}  {detail}"
        with capman.global_and_fixture_disabled():
            print("\n" + line, flush=True)
        assert ok, line
    return _announce


def test_criterion_01_clifford_lemma2(announce):
    rng = np.random.default_rng(SEED + 1)
    start = time.perf_counter()
    worst, worst_rel = 0.0, 0.0
    for n in range(2, 9):
        rep = build_rep(n)
        worst_rel = max(worst_rel, relation_residual(rep))
        for _ in range(100):
            worst = max(worst, lemma2_residual(rep, random_form(rng, n, 2)))
    elapsed = time.perf_counter() - start
    ok = worst <= 1e-10 and worst_rel <= 1e-12 and elapsed <= 10
    announce(1, ok, f"max Lemma 2 residual {worst:.2e}, relations {worst_rel:.1e}, "
                    f"{elapsed:.2f} s")


def test_criterion_02_lemma1_spectra(announce):
    rng = np.random.default_rng(SEED + 2)
    worst, count = 0.0, 0
    for _ in range(200):
        n, m = (int(x) for x in rng.integers(1, 7, size=2))
        k = int(rng.integers(1, min(3, n, m) + 1))
        fmap = random_map(rng, n, m, "generic")
        worst = max(worst, lemma1_spectral_gap(fmap, k))
        count += 1
    announce(2, worst <= 1e-9, f"{count} fixtures, max spectral gap {worst:.2e}")


def test_criterion_03_trace_identities(announce):
    rng = np.random.default_rng(SEED + 3)
    worst_id, worst_margin, mismatches, n_equal = 0.0, np.inf, 0, 0
    for t in range(1000):
        n = int(rng.integers(2, 7))
        if t % 5 == 0:
            # exact homothety: B = c Id up to rounding
            F = np.sqrt(rng.uniform(0.2, 3.0)) * random_orthogonal(rng, n)
        else:
            A = rng.standard_normal((n, n))
            F = A if t % 5 != 1 else A[: max(1, n - 2)].T @ A[: max(1, n - 2)]
        fmap = PointwiseMap(F)
        tr_B, tr_B2 = trace_scalings(fmap)
        worst_id = max(worst_id, abs(tr_B**2 - 2 * tr_B2 - float(np.trace(fmap.B @ fmap.B))))
        margin = trace_inequality_margin(fmap)
        worst_margin = min(worst_margin, margin)
        equal = margin <= 1e-10
        homothety = is_homothetic(fmap)[0] is HomothetyVerdict.HOMOTHETY
        n_equal += equal
        mismatches += equal != homothety
    ok = worst_id <= 1e-10 and worst_margin >= -1e-10 and mismatches == 0 and n_equal > 0
    announce(3, ok, f"identity residual {worst_id:.1e}, min margin {worst_margin:.1e}, "
                    f"{n_equal} equality cases, {mismatches} verdict mismatches")


def test_criterion_04_frakR_assemblies(announce):
    rng = np.random.default_rng(SEED + 4)
    worst = 0.0
    for t in range(300):
        n, m = (int(x) for x in rng.integers(3, 7, size=2))
        fmap = random_map(rng, n, m, MAP_KINDS[t % len(MAP_KINDS)])
        op = random_bianchi_psd(rng, m) if t % 2 else random_psd(rng, m)
        a = build_frakR_pairs(build_rep(n), build_rep(m), fmap, op)
        b = build_frakR_eigen(build_rep(n), build_rep(m), fmap, op)
        worst = max(worst, float(np.abs(a - b).max()))
    announce(4, worst <= 1e-9, f"300 fixtures, max |pairs - eigen| {worst:.2e}")


PROP1_OPS = {
    "sphere S^4": lambda: constant_curvature(4),
    "S^2 x S^2": lambda: product([constant_curvature(2), constant_curvature(2)]),
    "CP^2": lambda: fubini_study(2),
}


@lru_cache(maxsize=None)
def prop1_sweep():
    """500 maps R^n -> R^4 (n in 3..6) per target model, all kinds of map."""
    rng = np.random.default_rng(SEED + 5)
    results = {}
    start = time.perf_counter()
    for name, make in PROP1_OPS.items():
        op = make()
        rows = []
        for t in range(500):
            n = int(rng.integers(3, 7))
            fmap = random_map(rng, n, 4, MAP_KINDS[t % len(MAP_KINDS)])
            rows.append(prop1_report(build_rep(n), build_rep(4), fmap, op))
        results[name] = rows
    return results, time.perf_counter() - start


def test_criterion_05_prop1_bound(announce):
    results, elapsed = prop1_sweep()
    worst = min(r.margin for rows in results.values() for r in rows)
    llarull = prop1_report(build_rep(4), build_rep(4), PointwiseMap(np.eye(4)),
                           constant_curvature(4))
    ok = (worst >= -1e-8 and abs(llarull.margin) <= 1e-8
          and abs(llarull.min_eig_R + 3.0) <= 1e-8 and elapsed <= 60)
    announce(5, ok, f"{sum(map(len, results.values()))} maps, min margin {worst:.2e}; "
                    f"identity on S^4: min eig {llarull.min_eig_R:.12f}, "
                    f"margin {llarull.margin:.1e}; {elapsed:.1f} s")


def test_criterion_06_prop1_equality(announce):
    results, _ = prop1_sweep()
    bad_equal, bad_strict, n_equal, min_neither = 0, 0, 0, np.inf
    for rows in results.values():
        for r in rows:
            assert r.evidence["ric_pd"]
            if r.area <= 0.1:
                continue
            if r.margin <= 1e-6:
                n_equal += 1
                bad_equal += not r.evidence["surjective_homothetic"]
            if r.homothety_verdict == "neither":
                min_neither = min(min_neither, r.margin)
                bad_strict += r.margin <= 1e-4
    ok = bad_equal == 0 and bad_strict == 0 and n_equal > 0
    announce(6, ok, f"{n_equal} equality fixtures all homothetic surjections "
                    f"({bad_equal} exceptions); min 'neither' margin {min_neither:.2e}")


def test_criterion_07_prop2(announce):
    rng = np.random.default_rng(SEED + 7)
    worst_margin, worst_dc, mismatches, n_equal = np.inf, 0.0, 0, 0
    for n in range(3, 7):
        rep = build_rep(n)
        for t in range(500):
            fmap = random_map(rng, n, n, MAP_KINDS[t % len(MAP_KINDS)])
            r = prop2_report(rep, rep, fmap)
            worst_margin = min(worst_margin, r.margin)
            worst_dc = max(worst_dc, r.evidence["dc_residual"])
            mismatches += not r.checks["equality_classification"]
            n_equal += r.at_equality
    ok = worst_margin >= -1e-8 and worst_dc <= 1e-8 and mismatches == 0
    announce(7, ok, f"2000 maps, min margin {worst_margin:.2e}, max D_l C_l residual "
                    f"{worst_dc:.1e}, {n_equal} equality cases, {mismatches} mismatches")


def test_criterion_08_frakC_and_simplC(announce):
    results, _ = prop1_sweep()
    worst_C = max(r.frakC_max_eig for rows in results.values() for r in rows)
    worst_simpl = max(r.simplC_residual for rows in results.values() for r in rows)
    rng = np.random.default_rng(SEED + 8)
    detected = 0
    for _ in range(100):
        n, m = int(rng.integers(3, 7)), int(rng.integers(4, 7))
        fmap = random_map(rng, n, m)
        alpha = float(np.sqrt(area_scaling(fmap)))
        rn, rm = build_rep(n), build_rep(m)
        # Bianchi-clean PSD operator.
        clean = random_bianchi_psd(rng, m)
        comp, _, _ = build_frakC(rn, rm, fmap, clean, alpha)
        worst_C = max(worst_C, float(np.linalg.eigvalsh(comp).max()))
        worst_simpl = max(worst_simpl, simplC_residual(rn, rm, fmap, clean, alpha))
        # PSD but violating Bianchi: the C-sum keeps its sign, the identity breaks.
        dirty = random_psd(rng, m)
        comp, _, _ = build_frakC(rn, rm, fmap, dirty, alpha)
        worst_C = max(worst_C, float(np.linalg.eigvalsh(comp).max()))
        detected += simplC_residual(rn, rm, fmap, dirty, alpha) > 1e-3
    ok = worst_C <= 1e-9 and worst_simpl <= 1e-8 and detected >= 90
    announce(8, ok, f"max eig C-sum {worst_C:.1e}, max simplC residual {worst_simpl:.1e}, "
                    f"controls detected {detected}/100")


def test_criterion_09_conformal_formulas(announce):
    start = time.perf_counter()
    scal_err, ric_err, trace = [], [], 0.0
    for res in (32, 64):
        alpha = cf.field_from_expression(cf.PeriodicGrid(3, res), "sin1")
        scal_fd, ric_fd = cf.fd_curvature(cf.conformal_metric(alpha))
        scal_err.append(float(np.abs(scal_fd.values - cf.conformal_scal_formula(alpha, 0.0).values).max()))
        ric_err.append(float(np.abs(ric_fd - cf.conformal_ricci_formula(alpha, None)).max()))
        trace = max(trace, cf.trace_consistency(alpha))
    p_s = cf.convergence_order(scal_err)[0]
    p_r = cf.convergence_order(ric_err)[0]
    elapsed = time.perf_counter() - start
    ok = abs(p_s - 2) <= 0.3 and abs(p_r - 2) <= 0.3 and trace <= 1e-9 and elapsed <= 30
    announce(9, ok, f"scalar order {p_s:.3f}, Ricci order {p_r:.3f}, "
                    f"trace consistency {trace:.1e}, {elapsed:.1f} s")


def test_criterion_10_ibp_and_rigidity(announce):
    grid = cf.PeriodicGrid(3, 32)
    worst = 0.0
    for expr in ("sin1", "sin12", "mixed"):
        alpha = cf.field_from_expression(grid, expr)
        worst = max(worst, max(cf.ibp_identity_residual(alpha, k) for k in (1, 2, 3)))
    verdicts = {expr: cf.rigidity_witness(cf.field_from_expression(grid, expr), 3, 1).verdict
                for expr in ("const", "sin1", "sin12", "mixed")}
    ok = (worst <= 1e-9 and verdicts["const"] == "constant"
          and all(v == "nonconstant_violates_pde" for e, v in verdicts.items() if e != "const"))
    announce(10, ok, f"max ibp residual {worst:.1e}; verdicts {verdicts}")


def test_criterion_11_index_arithmetic(announce):
    start = time.perf_counter()
    A = ci.ahat_class(8)
    a1 = A.component(4) == {(1, 0, 0, 0): Fraction(-1, 24)}
    a2 = A.component(8) == {(2, 0, 0, 0): Fraction(7, 5760), (0, 1, 0, 0): Fraction(-4, 5760)}
    genus = ci.ahat_genus(ci.ManifoldDescriptor(4, {"p1": -48}))
    index = ci.dirac_index(2, 3)
    s5 = ci.kervaire_sigma(ci.ManifoldDescriptor(5, betti=(1, 0, 0, 0, 0, 1)))
    s7 = ci.kervaire_sigma(ci.ManifoldDescriptor(7, betti=(1, 0, 0, 0, 0, 0, 0, 1)))
    c33 = ci.c_nm(3, 3)
    c_pos = all(ci.c_nm(n, m) > 0 for n in range(3, 65) for m in range(3, 65))
    elapsed = time.perf_counter() - start
    ok = (a1 and a2 and genus == 2 and index == 6 and s5 == 1 and s7 == 0
          and c33 == Fraction(3, 2) and c_pos and elapsed <= 1)
    announce(11, ok, f"A1 {a1}, A2 {a2}, genus {genus}, index {index}, sigma(5) {s5}, "
                     f"sigma(7) {s7}, c(3,3) {c33}, c>0 on 3..64 {c_pos}; {elapsed:.3f} s")


def test_criterion_12_determinism(announce, tmp_path, capsys):
    args = ["verify", "--seed", "987654321", "--trials", "3", "--dims", "3x3,4x4,5x4",
            "--res", "32"]
    first, second = tmp_path / "a.json", tmp_path / "b.json"
    codes = (main(args + ["--report", str(first)]), main(args + ["--report", str(second)]))
    capsys.readouterr()
    same = first.read_bytes() == second.read_bytes()
    fixtures = sum(len(v) for v in json.loads(first.read_text())["suites"].values())
    announce(12, same and codes == (0, 0),
             f"{fixtures} fixtures, exit codes {codes}, reports identical: {same}")
