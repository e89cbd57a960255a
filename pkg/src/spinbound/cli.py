"""Batch runner: ``spinbound verify ...`` and ``spinbound index ...``.

Exit codes: 0 when no fixture failed, 1 when at least one failed, 2 on a
configuration error (bad arguments, unreadable fixture files).
"""
from __future__ import annotations

import argparse
import json
import math
import sys
import time
import zlib
from dataclasses import asdict, dataclass
from fractions import Fraction
from pathlib import Path
from typing import Callable, Iterator, Optional

import numpy as np

from . import __version__
from . import charindex as ci
from . import conformal as cf
from .clifford import build_rep, dimension_cap, lemma2_residual, relation_residual
from .curvature import (
    CurvatureOperator, bianchi_defect, constant_curvature, flat, fubini_study,
    positivity_report, product, random_bianchi_psd, random_psd, ricci_scalar,
)
from .exterior import compound_matrix, random_form
from .multilinear import (
    PointwiseMap, area_scaling, lemma1_spectral_gap, sharp, trace_inequality_margin,
    trace_scalings,
)
from .sampling import MAP_KINDS, random_map
from .spectral import PreconditionError, build_frakC, prop1_report, prop2_report

__all__ = ["SuiteConfig", "ConfigError", "load_report", "main", "run", "write_report"]

SUITES = ("clifford", "multilinear", "curvature", "spectral-prop1", "spectral-prop2",
          "conformal", "charindex")
STATUSES = ("pass", "fail", "skipped-precondition")
REPORT_SCHEMA = "spinbound.report"
REPORT_VERSION = 1


class ConfigError(ValueError):
    pass


@dataclass(frozen=True)
class SuiteConfig:
    suites: tuple[str, ...] = SUITES
    seed: int = 0
    trials: int = 10
    tol: float = 1e-8
    dims: tuple[tuple[int, int], ...] = ((3, 3), (4, 4), (5, 4))
    res: int = 32
    report_path: Optional[str] = None
    map_fixture: Optional[str] = None
    op_fixture: Optional[str] = None

    def __post_init__(self):
        unknown = set(self.suites) - set(SUITES)
        if unknown:
            raise ConfigError(f"unknown suites {sorted(unknown)}")
        if not 0 <= self.seed < 2**64:
            raise ConfigError("seed must be an unsigned 64-bit integer")
        if self.trials < 1:
            raise ConfigError("trials must be >= 1")
        if not self.tol > 0:
            raise ConfigError("tol must be positive")
        cap = dimension_cap()
        for n, m in self.dims:
            if not (2 <= n <= cap and 2 <= m <= cap):
                raise ConfigError(f"dims {n}x{m} outside 2..{cap}")
        # The order check compares res/2 with res; coarser pairs are pre-asymptotic.
        if "conformal" in self.suites and (self.res < 32 or self.res & (self.res - 1)):
            raise ConfigError("res must be a power of two >= 32")

    def echo(self) -> dict:
        # The output location is not part of what was computed.
        out = asdict(self)
        del out["report_path"]
        out["suites"] = list(self.suites)
        out["dims"] = [list(d) for d in self.dims]
        return out


# -- serialization helpers -------------------------------------------------

def _clean(value):
    """Convert numpy scalars and arrays to JSON-safe Python values."""
    if isinstance(value, dict):
        return {str(k): _clean(v) for k, v in value.items()}
    if isinstance(value, (list, tuple)):
        return [_clean(v) for v in value]
    if isinstance(value, np.ndarray):
        return _clean(value.tolist())
    if isinstance(value, (bool, np.bool_)):
        return bool(value)
    if isinstance(value, (int, np.integer)):
        return int(value)
    if isinstance(value, Fraction):
        return str(value)
    if isinstance(value, (float, np.floating)):
        v = float(value)
        return v if math.isfinite(v) else str(v)
    if value is None or isinstance(value, str):
        return value
    return str(value)


def _rng(seed: int, suite: str, index: tuple[int, ...]) -> np.random.Generator:
    """Independent stream per fixture; keyed by suite name and fixture counter."""
    ss = np.random.SeedSequence(seed, spawn_key=(zlib.crc32(suite.encode()),) + index)
    return np.random.default_rng(ss)


def _load_json(path: str):
    try:
        return json.loads(Path(path).read_text())
    except (OSError, json.JSONDecodeError) as exc:
        raise ConfigError(f"cannot read fixture {path}: {exc}") from exc


def _as_list(data) -> list:
    if isinstance(data, dict) and "fixtures" in data:
        data = data["fixtures"]
    return data if isinstance(data, list) else [data]


def _load_maps(path: str) -> list[PointwiseMap]:
    try:
        return [PointwiseMap.from_dict(r) for r in _as_list(_load_json(path))]
    except (KeyError, TypeError, ValueError) as exc:
        raise ConfigError(f"malformed map fixture {path}: {exc}") from exc


def _load_op(path: str) -> CurvatureOperator:
    records = _as_list(_load_json(path))
    if len(records) != 1:
        raise ConfigError("operator fixture must hold exactly one operator")
    try:
        return CurvatureOperator.from_dict(records[0])
    except (KeyError, TypeError, ValueError) as exc:
        raise ConfigError(f"malformed operator fixture {path}: {exc}") from exc


# -- suites ----------------------------------------------------------------
# Each suite yields (fixture_id, thunk); the thunk returns (status, evidence).

Fixture = tuple[str, Callable[[], tuple[str, dict]]]


def _verdict(ok: bool) -> str:
    return "pass" if ok else "fail"


def _distinct_dims(cfg: SuiteConfig) -> list[int]:
    return sorted({d for pair in cfg.dims for d in pair})


def _suite_clifford(cfg: SuiteConfig) -> Iterator[Fixture]:
    for n in _distinct_dims(cfg):
        def relations(n=n):
            res = max(relation_residual(build_rep(n, v)) for v in ((0, 1) if n % 2 else (0,)))
            return _verdict(res <= 1e-12), {"relation_residual": res}
        yield f"clifford/n={n}/relations", relations
        for t in range(cfg.trials):
            def lemma2(n=n, t=t):
                eta = random_form(_rng(cfg.seed, "clifford", (n, t)), n, 2)
                r = lemma2_residual(build_rep(n), eta)
                limit = 1e-10 * max(1.0, eta.norm_sq())
                return _verdict(r <= limit), {"lemma2_residual": r, "norm_sq": eta.norm_sq()}
            yield f"clifford/n={n}/lemma2/{t}", lemma2


def _suite_multilinear(cfg: SuiteConfig) -> Iterator[Fixture]:
    for n, m in cfg.dims:
        for t in range(cfg.trials):
            def check(n=n, m=m, t=t):
                rng = _rng(cfg.seed, "multilinear", (n, m, t))
                fmap = random_map(rng, n, m, "generic")
                scale = max(1.0, float(np.abs(fmap.B).max())) ** 3
                gaps = [lemma1_spectral_gap(fmap, k) for k in range(1, min(3, n, m) + 1)]
                tr_B, tr_B2 = trace_scalings(fmap)
                trace_id = abs(tr_B**2 - 2 * tr_B2 - float(np.trace(fmap.B @ fmap.B)))
                margin = trace_inequality_margin(fmap)
                # <f_* v, w>_{G0} = <v, f# w>_G on 2-vectors
                k = 2
                v, w = random_form(rng, n, k), random_form(rng, m, k)
                fv = compound_matrix(fmap.F, k) @ v.coefficients
                lhs = fv @ compound_matrix(fmap.G0, k) @ w.coefficients
                rhs = v.coefficients @ compound_matrix(fmap.G, k) @ sharp(fmap, k, w).coefficients
                adj = abs(lhs - rhs) / max(1.0, abs(lhs))
                ok = (max(gaps) <= 1e-9 * scale and trace_id <= 1e-10 * scale
                      and margin >= -1e-10 * scale and adj <= 1e-9)
                return _verdict(ok), {"lemma1_gap": max(gaps), "trace_identity": trace_id,
                                      "trace_margin": margin, "adjoint_residual": adj}
            yield f"multilinear/{n}x{m}/{t}", check


def _models(m: int) -> list[CurvatureOperator]:
    ops = [constant_curvature(m)]
    if m >= 4:
        ops.append(product([constant_curvature(2), constant_curvature(m - 2)]))
    if m % 2 == 0:
        ops.append(fubini_study(m // 2))
    return ops


def _suite_curvature(cfg: SuiteConfig) -> Iterator[Fixture]:
    ms = sorted({m for _, m in cfg.dims})
    for m in ms:
        for op in _models(m) + [flat(m)]:
            def model(op=op):
                pos = positivity_report(op)
                defect = bianchi_defect(op)
                ric, scal = ricci_scalar(op)
                ok = defect <= 1e-10 and pos["R_psd"]
                return _verdict(ok), {"bianchi_defect": defect, "scal": scal,
                                      "ricci_eigenvalues": np.linalg.eigvalsh(ric), **pos}
            yield f"curvature/m={m}/{op.label}", model
        for t in range(cfg.trials):
            def sampled(m=m, t=t):
                rng = _rng(cfg.seed, "curvature", (m, t))
                good = random_bianchi_psd(rng, m)
                bad = random_psd(rng, m)
                d_good, d_bad = bianchi_defect(good), bianchi_defect(bad)
                # For m <= 3 every symmetric operator satisfies Bianchi.
                ok = d_good <= 1e-10 * max(1.0, np.abs(good.matrix).max()) and (
                    m <= 3 or d_bad > 1e-6)
                return _verdict(ok), {"defect_bianchi_psd": d_good, "defect_random_psd": d_bad}
            yield f"curvature/m={m}/sampled/{t}", sampled


def _report_status(report) -> tuple[str, dict]:
    ev = {k: v for k, v in report.to_dict().items() if k not in ("status",)}
    if report.status == "skipped-precondition":
        return "skipped-precondition", ev
    ev["failed_checks"] = sorted(k for k, v in report.checks.items() if not v)
    return _verdict(report.ok), ev


def _spectral_inputs(cfg: SuiteConfig, suite: str) -> Iterator[tuple[str, int, Callable]]:
    """Fixture ids with factories for (map, op-or-None)."""
    op_fixed = _load_op(cfg.op_fixture) if cfg.op_fixture else None
    if cfg.map_fixture:
        for i, fmap in enumerate(_load_maps(cfg.map_fixture)):
            yield f"{suite}/fixture/{i}", i, (lambda fmap=fmap: (fmap, op_fixed))
        return
    for n, m in cfg.dims:
        if op_fixed is not None and op_fixed.m != m:
            raise ConfigError(f"operator fixture has m={op_fixed.m}, dims ask for m={m}")
        models = _models(m)
        for t in range(cfg.trials):
            kind = MAP_KINDS[t % len(MAP_KINDS)]

            def make(n=n, m=m, t=t, kind=kind, models=models):
                rng = _rng(cfg.seed, suite, (n, m, t))
                fmap = random_map(rng, n, m, kind)
                if op_fixed is not None:
                    return fmap, op_fixed
                choice = t // len(MAP_KINDS) % (len(models) + 1)
                op = models[choice] if choice < len(models) else random_bianchi_psd(rng, m)
                return fmap, op
            yield f"{suite}/{n}x{m}/{kind}/{t}", t, make


def _suite_prop1(cfg: SuiteConfig) -> Iterator[Fixture]:
    for fid, _, make in _spectral_inputs(cfg, "spectral-prop1"):
        def check(make=make):
            fmap, op = make()
            if op is None:
                op = _models(fmap.m)[0]
            rep_n, rep_m = build_rep(fmap.n), build_rep(fmap.m)
            report = prop1_report(rep_n, rep_m, fmap, op, cfg.tol)
            status, ev = _report_status(report)
            ev["operator"] = op.label
            if status == "skipped-precondition":
                # Negative control: without R >= 0 the composite C^2 sum loses its sign.
                alpha = float(np.sqrt(area_scaling(fmap)))
                comp, _, _ = build_frakC(rep_n, rep_m, fmap, op, alpha)
                top = float(np.linalg.eigvalsh(0.5 * (comp + comp.conj().T)).max())
                ev["control_frakC_max_eig"] = top
                ev["control_frakC_positive"] = top > 1e-9
            return status, ev
        yield fid, check


def _suite_prop2(cfg: SuiteConfig) -> Iterator[Fixture]:
    for fid, _, make in _spectral_inputs(cfg, "spectral-prop2"):
        def check(make=make):
            fmap, op = make()
            if cfg.op_fixture is None:
                op = None
            rep_n, rep_m = build_rep(fmap.n), build_rep(fmap.m)
            try:
                report = prop2_report(rep_n, rep_m, fmap, cfg.tol, op=op)
            except PreconditionError as exc:
                return "skipped-precondition", {"reason": str(exc)}
            return _report_status(report)
        yield fid, check


CONFORMAL_FIELDS = ("sin1", "sin12_small", "mixed")


def _suite_conformal(cfg: SuiteConfig) -> Iterator[Fixture]:
    n = 3
    for expr in CONFORMAL_FIELDS:
        def convergence(expr=expr):
            scal_err, ric_err = [], []
            for res in (cfg.res // 2, cfg.res):
                alpha = cf.field_from_expression(cf.PeriodicGrid(n, res), expr)
                scal_fd, ric_fd = cf.fd_curvature(cf.conformal_metric(alpha))
                scal_ex = cf.conformal_scal_formula(alpha, 0.0)
                ric_ex = cf.conformal_ricci_formula(alpha, None)
                scal_err.append(float(np.abs(scal_fd.values - scal_ex.values).max()))
                ric_err.append(float(np.abs(ric_fd - ric_ex).max()))
            p_s = cf.convergence_order(scal_err)[0]
            p_r = cf.convergence_order(ric_err)[0]
            ok = abs(p_s - 2.0) <= 0.3 and abs(p_r - 2.0) <= 0.3
            return _verdict(ok), {"scal_errors": scal_err, "ricci_errors": ric_err,
                                  "scal_order": p_s, "ricci_order": p_r}
        yield f"conformal/{expr}/convergence", convergence

    for expr in CONFORMAL_FIELDS + ("const",):
        def identities(expr=expr):
            alpha = cf.field_from_expression(cf.PeriodicGrid(n, cfg.res), expr)
            trace = cf.trace_consistency(alpha)
            ibp = [cf.ibp_identity_residual(alpha, k) for k in (1, 2, 3)]
            verdict = cf.rigidity_witness(alpha, n, 1)
            expected = "constant" if expr == "const" else "nonconstant_violates_pde"
            ok = trace <= 1e-9 and max(ibp) <= 1e-9 and verdict.verdict == expected
            return _verdict(ok), {"trace_consistency": trace, "ibp_residuals": ibp,
                                  "rigidity": verdict.verdict,
                                  "rigidity_residual": verdict.max_residual}
        yield f"conformal/{expr}/identities", identities


def _suite_charindex(cfg: SuiteConfig) -> Iterator[Fixture]:
    def low_degrees():
        A = ci.ahat_class(8)
        a1 = A.component(4) == {(1, 0, 0, 0): Fraction(-1, 24)}
        a2 = A.component(8) == {(2, 0, 0, 0): Fraction(7, 5760), (0, 1, 0, 0): Fraction(-4, 5760)}
        return _verdict(a1 and a2), {"A1": a1, "A2": a2}
    yield "charindex/ahat_low_degrees", low_degrees

    def pairings():
        genus = ci.ahat_genus(ci.ManifoldDescriptor(4, {"p1": -48}))
        ind = ci.dirac_index(2, 3)
        s5 = ci.kervaire_sigma(ci.ManifoldDescriptor(5, betti=(1, 0, 0, 0, 0, 1)))
        s7 = ci.kervaire_sigma(ci.ManifoldDescriptor(7, betti=(1, 0, 0, 0, 0, 0, 0, 1)))
        c_min = min(ci.c_nm(a, b) for a in range(3, 65) for b in range(3, 65))
        ok = genus == 2 and ind == 6 and s5 == 1 and s7 == 0 and ci.c_nm(3, 3) == Fraction(3, 2) \
            and c_min > 0
        return _verdict(ok), {"ahat_genus": genus, "dirac_index": ind, "sigma5": s5,
                              "sigma7": s7, "c_min": c_min}
    yield "charindex/pairings", pairings

    for t in range(cfg.trials):
        def whitney(t=t):
            rng = _rng(cfg.seed, "charindex", (t,))

            def draw():
                return {i: Fraction(int(rng.integers(-50, 51)), int(rng.integers(1, 20)))
                        for i in range(1, ci.NGEN + 1)}
            defect = ci.multiplicativity_defect(draw(), draw())
            return _verdict(defect == 0), {"defect": defect}
        yield f"charindex/whitney/{t}", whitney


_SUITE_FUNCS = {
    "clifford": _suite_clifford,
    "multilinear": _suite_multilinear,
    "curvature": _suite_curvature,
    "spectral-prop1": _suite_prop1,
    "spectral-prop2": _suite_prop2,
    "conformal": _suite_conformal,
    "charindex": _suite_charindex,
}


def run(cfg: SuiteConfig) -> dict:
    """Execute the selected suites in canonical order and build the report."""
    suites, summary = {}, {}
    for name in SUITES:
        if name not in cfg.suites:
            continue
        records = []
        for fid, thunk in _SUITE_FUNCS[name](cfg):
            try:
                status, evidence = thunk()
            except ConfigError:
                raise
            except Exception as exc:  # numeric trouble counts as a failure, not a crash
                status, evidence = "fail", {"error": f"{type(exc).__name__}: {exc}"}
            records.append({"id": fid, "status": status, "evidence": _clean(evidence)})
        suites[name] = records
        summary[name] = {s: sum(r["status"] == s for r in records) for s in STATUSES}
    totals = {s: sum(v[s] for v in summary.values()) for s in STATUSES}
    return {
        "schema": REPORT_SCHEMA,
        "version": REPORT_VERSION,
        "package_version": __version__,
        "config": _clean(cfg.echo()),
        "suites": suites,
        "summary": summary,
        "totals": totals,
    }


def dumps(report: dict) -> str:
    return json.dumps(report, sort_keys=True, indent=1, allow_nan=False) + "\n"


def write_report(report: dict, path: str) -> None:
    Path(path).write_text(dumps(report))


_TOP_KEYS = {"schema", "version", "package_version", "config", "suites", "summary", "totals"}
_RECORD_KEYS = {"id", "status", "evidence"}
_CONFIG_KEYS = set(SuiteConfig.__dataclass_fields__) - {"report_path"}


def validate_report(report: dict) -> dict:
    """Raise ``ValueError`` on anything outside the versioned schema."""
    if not isinstance(report, dict) or set(report) != _TOP_KEYS:
        extra = set(report) - _TOP_KEYS if isinstance(report, dict) else set()
        raise ValueError(f"report keys mismatch; unexpected {sorted(extra)}")
    if report["schema"] != REPORT_SCHEMA or report["version"] != REPORT_VERSION:
        raise ValueError(f"unsupported report {report['schema']} v{report['version']}")
    if set(report["config"]) != _CONFIG_KEYS:
        raise ValueError("config echo has unexpected fields")
    for name, records in report["suites"].items():
        if name not in SUITES:
            raise ValueError(f"unknown suite {name!r}")
        seen = set()
        for r in records:
            if set(r) != _RECORD_KEYS:
                raise ValueError(f"record fields {sorted(r)} do not match schema")
            if r["status"] not in STATUSES:
                raise ValueError(f"bad status {r['status']!r}")
            if r["id"] in seen:
                raise ValueError(f"duplicate fixture id {r['id']}")
            seen.add(r["id"])
    for name, counts in report["summary"].items():
        if set(counts) != set(STATUSES):
            raise ValueError(f"summary for {name} has unexpected fields")
    return report


def load_report(path: str) -> dict:
    return validate_report(json.loads(Path(path).read_text()))


# -- command line ----------------------------------------------------------

def _parse_dims(text: str) -> tuple[tuple[int, int], ...]:
    try:
        pairs = tuple(tuple(int(x) for x in item.lower().split("x")) for item in text.split(","))
    except ValueError:
        raise argparse.ArgumentTypeError(f"bad dims {text!r}; expected e.g. 4x4,5x4")
    if not pairs or any(len(p) != 2 for p in pairs):
        raise argparse.ArgumentTypeError(f"bad dims {text!r}; expected e.g. 4x4,5x4")
    return pairs


def _parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="spinbound")
    parser.add_argument("--version", action="version", version=__version__)
    sub = parser.add_subparsers(dest="command", required=True)

    v = sub.add_parser("verify", help="run verification suites")
    v.add_argument("--suite", nargs="+", choices=SUITES, default=list(SUITES))
    v.add_argument("--seed", type=int, default=0)
    v.add_argument("--trials", type=int, default=10)
    v.add_argument("--tol", type=float, default=1e-8)
    v.add_argument("--dims", type=_parse_dims, default=SuiteConfig.dims)
    v.add_argument("--res", type=int, default=32)
    v.add_argument("--report", default=None, help="write the JSON report here")
    v.add_argument("--map-fixture", default=None)
    v.add_argument("--op-fixture", default=None)

    ix = sub.add_parser("index", help="index arithmetic for a manifold descriptor")
    ix.add_argument("--fixture", required=True)
    ix.add_argument("--target-dim", type=int, default=None)
    ix.add_argument("--chi0", type=int, default=None)
    ix.add_argument("--fiber", default=None, help="descriptor of a regular fiber")
    return parser


def _descriptor(path: str) -> ci.ManifoldDescriptor:
    try:
        return ci.ManifoldDescriptor.from_dict(_load_json(path))
    except (KeyError, TypeError, ValueError) as exc:
        if isinstance(exc, ConfigError):
            raise
        raise ConfigError(f"malformed descriptor {path}: {exc}") from exc


def index_summary(M: ci.ManifoldDescriptor, target_dim: Optional[int] = None,
                  chi0: Optional[int] = None,
                  fiber: Optional[ci.ManifoldDescriptor] = None) -> dict:
    out: dict = {"dim": M.dim}
    if M.dim % 4:
        out["ahat_genus"] = "0"
        out["ahat_genus_note"] = "dimension not divisible by 4"
    elif M.pontryagin:
        out["ahat_genus"] = str(ci.ahat_genus(M))
    if M.betti is not None:
        out["kervaire_sigma"] = ci.kervaire_sigma(M)
    if M.euler is not None:
        out["euler"] = M.euler
    if target_dim is not None:
        deg = ci.ahat_degree(M, target_dim, fiber)
        out["ahat_degree"] = str(deg)
        if chi0 is not None:
            out["dirac_index"] = str(ci.dirac_index(chi0, deg))
    return out


def _cmd_index(args) -> int:
    M = _descriptor(args.fixture)
    fiber = _descriptor(args.fiber) if args.fiber else None
    try:
        out = index_summary(M, args.target_dim, args.chi0, fiber)
    except ci.DescriptorError as exc:
        raise ConfigError(str(exc)) from exc
    print(json.dumps(out, sort_keys=True))
    return 0


def _cmd_verify(args) -> int:
    cfg = SuiteConfig(
        suites=tuple(dict.fromkeys(args.suite)), seed=args.seed, trials=args.trials,
        tol=args.tol, dims=tuple(args.dims), res=args.res, report_path=args.report,
        map_fixture=args.map_fixture, op_fixture=args.op_fixture,
    )
    start = time.perf_counter()
    report = run(cfg)
    elapsed = time.perf_counter() - start
    if cfg.report_path:
        write_report(report, cfg.report_path)
    for name, counts in report["summary"].items():
        print(f"{name:15s} pass {counts['pass']:4d}  fail {counts['fail']:4d}  "
              f"skipped {counts['skipped-precondition']:4d}")
        for r in report["suites"][name]:
            if r["status"] == "fail":
                print(f"  FAIL {r['id']}")
    print(f"wall time {elapsed:.2f} s")
    return 1 if report["totals"]["fail"] else 0


def main(argv: Optional[list[str]] = None) -> int:
    parser = _parser()
    args = parser.parse_args(argv)
    try:
        if args.command == "index":
            return _cmd_index(args)
        return _cmd_verify(args)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
