"""Laurent polynomials over Z and the additive quotient Lambda^0.

Lambda^0 is Z[x, x^-1] modulo x^n - x^-n (all n), x^0 and x^-1.  Every class
has a unique representative supported on monomials x^k with k >= 2, so the
quotient is the free abelian group on x^2, x^3, ...
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Iterable, Mapping


def _clean(items: Iterable[tuple[int, int]]) -> tuple[tuple[int, int], ...]:
    acc: dict[int, int] = {}
    for exp, coef in items:
        acc[int(exp)] = acc.get(int(exp), 0) + int(coef)
    return tuple(sorted((e, c) for e, c in acc.items() if c != 0))


@dataclass(frozen=True)
class LaurentPoly:
    """Element of Z[x, x^-1] stored as sorted (exponent, coefficient) pairs."""

    terms: tuple[tuple[int, int], ...] = ()

    @classmethod
    def from_dict(cls, coeffs: Mapping[int, int]) -> "LaurentPoly":
        return cls(_clean(coeffs.items()))

    @classmethod
    def monomial(cls, exp: int, coef: int = 1) -> "LaurentPoly":
        return cls(_clean([(exp, coef)]))

    @property
    def coeffs(self) -> dict[int, int]:
        return dict(self.terms)

    def __add__(self, other: "LaurentPoly") -> "LaurentPoly":
        return laurent_add(self, other)

    def __neg__(self) -> "LaurentPoly":
        return laurent_neg(self)

    def __sub__(self, other: "LaurentPoly") -> "LaurentPoly":
        return laurent_add(self, laurent_neg(other))

    def is_zero(self) -> bool:
        return not self.terms

    def __str__(self) -> str:
        return _format(self.terms)


@dataclass(frozen=True)
class Lambda0Element:
    """Canonical element of Lambda^0: nonzero coefficients on exponents >= 2."""

    terms: tuple[tuple[int, int], ...] = ()

    def __post_init__(self):
        prev = None
        for exp, coef in self.terms:
            if exp < 2 or coef == 0 or (prev is not None and exp <= prev):
                raise ValueError(f"non-canonical Lambda0 terms: {self.terms!r}")
            prev = exp

    @classmethod
    def from_dict(cls, coeffs: Mapping[int, int]) -> "Lambda0Element":
        return lambda0_reduce(LaurentPoly.from_dict(coeffs))

    @property
    def coeffs(self) -> dict[int, int]:
        return dict(self.terms)

    def coefficient(self, exp: int) -> int:
        return self.coeffs.get(exp, 0)

    def __add__(self, other: "Lambda0Element") -> "Lambda0Element":
        return lambda0_add(self, other)

    def __neg__(self) -> "Lambda0Element":
        return Lambda0Element(tuple((e, -c) for e, c in self.terms))

    def __sub__(self, other: "Lambda0Element") -> "Lambda0Element":
        return lambda0_add(self, -other)

    def is_zero(self) -> bool:
        return not self.terms

    def as_laurent(self) -> LaurentPoly:
        return LaurentPoly(self.terms)

    def to_json(self) -> dict:
        return {"terms": [{"exp": e, "coef": c} for e, c in self.terms]}

    @classmethod
    def from_json(cls, obj: Mapping) -> "Lambda0Element":
        terms = [(int(t["exp"]), int(t["coef"])) for t in obj["terms"]]
        exps = [e for e, _ in terms]
        if exps != sorted(set(exps)):
            raise ValueError("Lambda0 JSON exponents must be strictly increasing")
        return cls(tuple(terms))

    def __str__(self) -> str:
        return _format(self.terms)


ZERO = Lambda0Element()


def laurent_add(a: LaurentPoly, b: LaurentPoly) -> LaurentPoly:
    return LaurentPoly(_clean(a.terms + b.terms))


def laurent_neg(a: LaurentPoly) -> LaurentPoly:
    return LaurentPoly(tuple((e, -c) for e, c in a.terms))


def lambda0_reduce(a: LaurentPoly) -> Lambda0Element:
    """Send c*x^k to c*x^|k| when |k| >= 2 and to zero when |k| <= 1."""
    return Lambda0Element(_clean((abs(e), c) for e, c in a.terms if abs(e) >= 2))


def lambda0_add(a: Lambda0Element, b: Lambda0Element) -> Lambda0Element:
    return Lambda0Element(_clean(a.terms + b.terms))


def lambda0_eq(a: Lambda0Element, b: Lambda0Element) -> bool:
    return a.terms == b.terms


def _format(terms) -> str:
    if not terms:
        return "0"
    out = []
    for exp, coef in terms:
        mono = "1" if exp == 0 else ("x" if exp == 1 else f"x^{exp}")
        if mono == "1":
            body = str(abs(coef))
        else:
            body = mono if abs(coef) == 1 else f"{abs(coef)}*{mono}"
        sign = "-" if coef < 0 else "+"
        out.append((sign, body))
    first_sign, first = out[0]
    s = ("-" if first_sign == "-" else "") + first
    for sign, body in out[1:]:
        s += f" {sign} {body}"
    return s
