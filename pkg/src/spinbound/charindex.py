"""Exact characteristic-class arithmetic: the A-hat multiplicative sequence and
the index formulas built on it.

Polynomials in the Pontryagin classes are dicts from exponent tuples
``(a1, ..., a4)`` (meaning ``p1^a1 ... p4^a4``) to ``Fraction``.
"""
from __future__ import annotations

import re
from dataclasses import dataclass, field
from fractions import Fraction
from math import factorial
from typing import Mapping, Optional

__all__ = [
    "DescriptorError",
    "GradedClass",
    "ManifoldDescriptor",
    "ahat_class",
    "ahat_degree",
    "ahat_genus",
    "ahat_series",
    "c_nm",
    "dirac_index",
    "kervaire_sigma",
    "multiplicativity_defect",
    "parse_monomial",
    "whitney_sum",
]

MAX_TOP_DEGREE = 16
NGEN = MAX_TOP_DEGREE // 4

Poly = dict  # tuple[int, ...] -> Fraction


class DescriptorError(ValueError):
    pass


def _mono_degree(mono: tuple[int, ...]) -> int:
    return sum(4 * (i + 1) * a for i, a in enumerate(mono))


def _padd(a: Poly, b: Poly, scale: Fraction = Fraction(1)) -> Poly:
    out = dict(a)
    for mono, c in b.items():
        out[mono] = out.get(mono, Fraction(0)) + scale * c
        if out[mono] == 0:
            del out[mono]
    return out


def _pmul(a: Poly, b: Poly, top: int) -> Poly:
    out: Poly = {}
    for ma, ca in a.items():
        for mb, cb in b.items():
            mono = tuple(x + y for x, y in zip(ma, mb))
            if _mono_degree(mono) > top:
                continue
            out[mono] = out.get(mono, Fraction(0)) + ca * cb
    return {k: v for k, v in out.items() if v != 0}


def _gen(i: int) -> Poly:
    mono = [0] * NGEN
    mono[i - 1] = 1
    return {tuple(mono): Fraction(1)}


_ONE: Poly = {(0,) * NGEN: Fraction(1)}


def ahat_series(order: int) -> list[Fraction]:
    """Coefficients ``b_j`` of ``(t/2)/sinh(t/2) = sum_j b_j t^(2j)`` for j <= order."""
    # sinh(t/2)/(t/2) = sum_j t^(2j) / (4^j (2j+1)!)
    s = [Fraction(1, 4**j * factorial(2 * j + 1)) for j in range(order + 1)]
    inv = [Fraction(0)] * (order + 1)
    inv[0] = Fraction(1)
    for j in range(1, order + 1):
        inv[j] = -sum(s[i] * inv[j - i] for i in range(1, j + 1))
    return inv


def _series_log(b: list[Fraction]) -> list[Fraction]:
    """Coefficients of ``log(sum_j b_j z^j)`` with ``b_0 = 1``, via ``L' = B'/B``."""
    order = len(b) - 1
    L = [Fraction(0)] * (order + 1)
    for j in range(1, order + 1):
        # j L_j = j b_j - sum_{i=1}^{j-1} i L_i b_{j-i}
        acc = j * b[j] - sum(i * L[i] * b[j - i] for i in range(1, j))
        L[j] = acc / j
    return L


def _power_sums(order: int) -> list[Poly]:
    """Newton's identities: power sums of the squared roots in terms of p_i."""
    P: list[Poly] = [dict()] * (order + 1)
    for k in range(1, order + 1):
        acc: Poly = {}
        for i in range(1, k):
            acc = _padd(acc, _pmul(_gen(i), P[k - i], 4 * order), Fraction((-1) ** (i - 1)))
        acc = _padd(acc, _gen(k), Fraction((-1) ** (k - 1) * k))
        P[k] = acc
    return P


@dataclass(frozen=True)
class GradedClass:
    """Truncated element of the rational Pontryagin ring, keyed by degree."""

    terms: Mapping[int, Poly]
    top_degree: int

    def component(self, degree: int) -> Poly:
        return dict(self.terms.get(degree, {}))

    def __mul__(self, other: "GradedClass") -> "GradedClass":
        top = min(self.top_degree, other.top_degree)
        out: dict[int, Poly] = {}
        for da, pa in self.terms.items():
            for db, pb in other.terms.items():
                if da + db <= top:
                    out[da + db] = _padd(out.get(da + db, {}), _pmul(pa, pb, top))
        return GradedClass({d: p for d, p in out.items() if p}, top)

    def evaluate(self, values: Mapping[int, Fraction], degree: Optional[int] = None) -> Fraction:
        """Substitute ``p_i -> values[i]`` (all degrees, or one component)."""
        total = Fraction(0)
        for d, poly in self.terms.items():
            if degree is not None and d != degree:
                continue
            for mono, c in poly.items():
                term = c
                for i, a in enumerate(mono):
                    if a:
                        term *= Fraction(values.get(i + 1, 0)) ** a
                total += term
        return total


def ahat_class(top_degree: int) -> GradedClass:
    """Total A-hat class up to ``top_degree`` from the series ``(x/2)/sinh(x/2)``.

    The multiplicative sequence is ``exp(sum_j c_j P_j)`` where ``c_j`` are the log
    coefficients of the series in ``z = x^2`` and ``P_j`` the power sums of the
    squared Chern roots, expressed in Pontryagin classes.
    """
    if top_degree < 0 or top_degree > MAX_TOP_DEGREE:
        raise ValueError(f"top degree must lie in 0..{MAX_TOP_DEGREE}")
    order = top_degree // 4
    if order == 0:
        return GradedClass({0: dict(_ONE)}, top_degree)
    c = _series_log(ahat_series(order))
    P = _power_sums(order)
    log_total: Poly = {}
    for j in range(1, order + 1):
        log_total = _padd(log_total, P[j], c[j])
    # exp of a nilpotent element, truncated at degree 4*order.
    result, term = dict(_ONE), dict(_ONE)
    for k in range(1, order + 1):
        term = {m: v / k for m, v in _pmul(term, log_total, 4 * order).items()}
        result = _padd(result, term)
    graded: dict[int, Poly] = {}
    for mono, v in result.items():
        graded.setdefault(_mono_degree(mono), {})[mono] = v
    return GradedClass(graded, top_degree)


def whitney_sum(pe: Mapping[int, Fraction], pf: Mapping[int, Fraction]) -> dict[int, Fraction]:
    """Pontryagin classes of ``E + F`` from values of those of E and F (rationally)."""
    out = {}
    for k in range(1, NGEN + 1):
        total = Fraction(0)
        for i in range(k + 1):
            a = Fraction(1) if i == 0 else Fraction(pe.get(i, 0))
            b = Fraction(1) if k - i == 0 else Fraction(pf.get(k - i, 0))
            total += a * b
        out[k] = total
    return out


def multiplicativity_defect(pe: Mapping[int, Fraction], pf: Mapping[int, Fraction],
                            top_degree: int = MAX_TOP_DEGREE) -> Fraction:
    """Largest ``|A(E+F)_d - (A(E) A(F))_d|`` over degrees d, evaluated exactly.

    The Whitney formula is homogeneous, so each graded component can be checked
    separately after substituting numbers for the generators.
    """
    A = ahat_class(top_degree)
    ps = whitney_sum(pe, pf)
    worst = Fraction(0)
    for d in range(0, top_degree + 1, 4):
        # (A(E)A(F))_d = sum_{a+b=d} A(E)_a A(F)_b
        prod = sum((A.evaluate(pe, a) * A.evaluate(pf, d - a) for a in range(0, d + 1, 4)),
                   Fraction(0))
        worst = max(worst, abs(A.evaluate(ps, d) - prod))
    return worst


_TOKEN = re.compile(r"p(\d+)(?:\^(\d+))?")


def parse_monomial(key: str) -> tuple[int, ...]:
    """``"p1^2*p2"`` (or ``"p1^2 p2"``) -> exponent tuple."""
    mono = [0] * NGEN
    text = key.replace("*", " ").split()
    if not text:
        raise DescriptorError(f"empty monomial {key!r}")
    for token in text:
        m = _TOKEN.fullmatch(token)
        if not m:
            raise DescriptorError(f"cannot parse Pontryagin monomial {key!r}")
        i, e = int(m.group(1)), int(m.group(2) or 1)
        if not 1 <= i <= NGEN:
            raise DescriptorError(f"p{i} beyond supported range p1..p{NGEN}")
        mono[i - 1] += e
    return tuple(mono)


@dataclass(frozen=True)
class ManifoldDescriptor:
    dim: int
    pontryagin: Mapping[str, int] = field(default_factory=dict)
    euler: Optional[int] = None
    betti: Optional[tuple[int, ...]] = None
    deg_f: Optional[int] = None

    def __post_init__(self):
        if self.dim < 0:
            raise DescriptorError("dimension must be non-negative")
        if self.betti is not None:
            object.__setattr__(self, "betti", tuple(int(b) for b in self.betti))
            if len(self.betti) != self.dim + 1:
                raise DescriptorError(f"betti list must have length {self.dim + 1}")
        numbers = {}
        for key, value in dict(self.pontryagin).items():
            mono = parse_monomial(key)
            if _mono_degree(mono) != self.dim:
                raise DescriptorError(f"monomial {key!r} has degree {_mono_degree(mono)} != dim {self.dim}")
            numbers[mono] = int(value)
        object.__setattr__(self, "_numbers", numbers)

    def pontryagin_number(self, mono: tuple[int, ...]) -> int:
        try:
            return self._numbers[mono]
        except KeyError:
            raise DescriptorError(f"missing Pontryagin number for monomial {mono}")

    @classmethod
    def from_dict(cls, record: Mapping) -> "ManifoldDescriptor":
        betti = record.get("betti")
        return cls(
            dim=int(record["dim"]),
            pontryagin=dict(record.get("pontryagin", {})),
            euler=record.get("euler"),
            betti=tuple(betti) if betti is not None else None,
            deg_f=record.get("deg_f"),
        )


def ahat_genus(M: ManifoldDescriptor) -> Fraction:
    """Pair the top component of the A-hat class with the Pontryagin numbers.

    Dimensions not divisible by 4 give 0.
    """
    if M.dim % 4:
        return Fraction(0)
    if M.dim > MAX_TOP_DEGREE:
        raise ValueError(f"dimension {M.dim} beyond supported {MAX_TOP_DEGREE}")
    top = ahat_class(M.dim).component(M.dim)
    return sum((c * M.pontryagin_number(mono) for mono, c in top.items()), Fraction(0))


def ahat_degree(M: ManifoldDescriptor, target_dim: int,
                fiber: Optional[ManifoldDescriptor] = None) -> Fraction:
    """A-hat degree of ``f: M -> M0`` with ``dim M0 = target_dim``.

    Equal dimensions give ``deg f`` (from ``M.deg_f``); an offset of 4k gives the
    A-hat genus of a regular fiber.
    """
    offset = M.dim - target_dim
    if offset < 0 or offset % 4:
        raise DescriptorError(f"dim M - dim M0 = {offset} is not a non-negative multiple of 4")
    if offset == 0:
        if M.deg_f is None:
            raise DescriptorError("equal dimensions need deg_f")
        return Fraction(M.deg_f)
    if fiber is None:
        raise DescriptorError("a fiber descriptor is required when dim M > dim M0")
    if fiber.dim != offset:
        raise DescriptorError(f"fiber dimension {fiber.dim} != {offset}")
    return ahat_genus(fiber)


def dirac_index(chi0: int, ahat_deg) -> Fraction:
    """``chi(M0) * deg_A(f)``."""
    return Fraction(chi0) * Fraction(ahat_deg)


def kervaire_sigma(M: ManifoldDescriptor) -> int:
    if M.betti is None:
        raise DescriptorError("Betti numbers required")
    if M.dim % 4 != 1:
        return 0
    return sum(M.betti[0::2]) % 2


def c_nm(n: int, m: int) -> Fraction:
    return Fraction(n * n - 5 * n + 6 + 2 * m * (n - 2), 4)
