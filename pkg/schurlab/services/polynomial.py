"""
Exact sparse polynomials over the rationals.

A polynomial maps exponent tuples (one degree per variable) to Fraction
coefficients; zero coefficients are never stored.
"""

from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction
from math import comb
from typing import Dict, Iterable, List, Mapping, Sequence, Tuple, Union

import numpy as np

Exponent = Tuple[int, ...]
Scalar = Union[int, Fraction]


@dataclass(frozen=True)
class PolyStats:
    """Summary statistics of a polynomial"""

    deg_total: int
    deg_per_var: Tuple[int, ...]
    num_terms: int
    coeff_l1: Fraction


class MultiVarPolynomial:
    """Polynomial in `num_vars` variables with exact rational coefficients."""

    __slots__ = ("num_vars", "terms")

    def __init__(self, num_vars: int, terms: Mapping[Exponent, Scalar] = None):
        self.num_vars = num_vars
        clean: Dict[Exponent, Fraction] = {}
        for mono, coeff in (terms or {}).items():
            mono = tuple(int(e) for e in mono)
            if len(mono) != num_vars:
                raise ValueError(f"monomial {mono} does not have {num_vars} variables")
            c = Fraction(coeff)
            if c != 0:
                clean[mono] = clean.get(mono, Fraction(0)) + c
        self.terms = {m: c for m, c in clean.items() if c != 0}

    @classmethod
    def zero(cls, num_vars: int) -> "MultiVarPolynomial":
        return cls(num_vars)

    @classmethod
    def const(cls, num_vars: int, value: Scalar) -> "MultiVarPolynomial":
        return cls(num_vars, {(0,) * num_vars: value})

    @classmethod
    def var(cls, num_vars: int, idx: int) -> "MultiVarPolynomial":
        if idx < 0 or idx >= num_vars:
            raise ValueError(f"Invalid variable index {idx} for num_vars={num_vars}")
        exp = [0] * num_vars
        exp[idx] = 1
        return cls(num_vars, {tuple(exp): 1})

    def _check(self, other: "MultiVarPolynomial"):
        if self.num_vars != other.num_vars:
            raise ValueError(f"variable count mismatch: {self.num_vars} vs {other.num_vars}")

    def __add__(self, other: "MultiVarPolynomial") -> "MultiVarPolynomial":
        self._check(other)
        out = dict(self.terms)
        for mono, coeff in other.terms.items():
            out[mono] = out.get(mono, Fraction(0)) + coeff
        return MultiVarPolynomial(self.num_vars, out)

    def __neg__(self) -> "MultiVarPolynomial":
        return MultiVarPolynomial(self.num_vars, {m: -c for m, c in self.terms.items()})

    def __sub__(self, other: "MultiVarPolynomial") -> "MultiVarPolynomial":
        return self + (-other)

    def __mul__(self, other: Union["MultiVarPolynomial", Scalar]) -> "MultiVarPolynomial":
        if not isinstance(other, MultiVarPolynomial):
            c = Fraction(other)
            return MultiVarPolynomial(self.num_vars, {m: v * c for m, v in self.terms.items()})
        self._check(other)
        out: Dict[Exponent, Fraction] = {}
        for mono_a, coeff_a in self.terms.items():
            for mono_b, coeff_b in other.terms.items():
                mono = tuple(x + y for x, y in zip(mono_a, mono_b))
                out[mono] = out.get(mono, Fraction(0)) + coeff_a * coeff_b
        return MultiVarPolynomial(self.num_vars, out)

    __rmul__ = __mul__

    def __pow__(self, k: int) -> "MultiVarPolynomial":
        out = MultiVarPolynomial.const(self.num_vars, 1)
        for _ in range(k):
            out = out * self
        return out

    def __eq__(self, other) -> bool:
        if not isinstance(other, MultiVarPolynomial):
            return NotImplemented
        return self.num_vars == other.num_vars and self.terms == other.terms

    def __hash__(self):
        return hash((self.num_vars, frozenset(self.terms.items())))

    def __repr__(self) -> str:
        if not self.terms:
            return "0"
        parts = []
        for mono, coeff in sorted(self.terms.items()):
            vars_ = "*".join(
                f"z{i}" if e == 1 else f"z{i}^{e}" for i, e in enumerate(mono) if e
            )
            parts.append(f"{coeff}*{vars_}" if vars_ else f"{coeff}")
        return " + ".join(parts)

    def is_zero(self) -> bool:
        return not self.terms

    def extend(self, num_vars: int) -> "MultiVarPolynomial":
        """Same polynomial viewed in more variables (appended at the end)."""
        pad = num_vars - self.num_vars
        if pad < 0:
            raise ValueError("cannot shrink the variable count")
        return MultiVarPolynomial(num_vars, {m + (0,) * pad: c for m, c in self.terms.items()})

    def embed(self, num_vars: int, positions: Sequence[int]) -> "MultiVarPolynomial":
        """Rename variable i to variable positions[i] in a larger ring."""
        if len(positions) != self.num_vars:
            raise ValueError("one position per variable is required")
        out = {}
        for mono, coeff in self.terms.items():
            exp = [0] * num_vars
            for e, pos in zip(mono, positions):
                exp[pos] += e
            out[tuple(exp)] = coeff
        return MultiVarPolynomial(num_vars, out)

    def coefficient(self, mono: Exponent) -> Fraction:
        return self.terms.get(tuple(mono), Fraction(0))

    def coefficients(self) -> List[Fraction]:
        """Dense ascending coefficient list of a univariate polynomial."""
        if self.num_vars != 1:
            raise ValueError("coefficients() needs a univariate polynomial")
        deg = max((m[0] for m in self.terms), default=0)
        return [self.coefficient((d,)) for d in range(deg + 1)]

    def evaluate(self, values: Sequence[float]) -> float:
        values = np.asarray(values, dtype=float)
        if values.shape[-1] != self.num_vars:
            raise ValueError(f"expected {self.num_vars} values, got {values.shape[-1]}")
        total = 0.0
        for mono, coeff in self.terms.items():
            total += float(coeff) * float(np.prod(values ** np.asarray(mono)))
        return total

    def evaluate_exact(self, values: Sequence[Scalar]) -> Fraction:
        total = Fraction(0)
        for mono, coeff in self.terms.items():
            term = coeff
            for v, e in zip(values, mono):
                term *= Fraction(v) ** e
            total += term
        return total

    def degree(self) -> int:
        return max((sum(m) for m in self.terms), default=0)

    def vanishes_on_coordinate_hyperplanes(self) -> bool:
        """Every monomial has positive degree in every variable."""
        return all(all(e > 0 for e in mono) for mono in self.terms)

    def stats(self) -> PolyStats:
        if not self.terms:
            return PolyStats(0, (0,) * self.num_vars, 0, Fraction(0))
        deg_per_var = tuple(max(m[i] for m in self.terms) for i in range(self.num_vars))
        return PolyStats(
            deg_total=self.degree(),
            deg_per_var=deg_per_var,
            num_terms=len(self.terms),
            coeff_l1=sum((abs(c) for c in self.terms.values()), Fraction(0)),
        )

    def to_records(self) -> List[Tuple[List[int], str]]:
        """[[exponents…], "num/den"] pairs in sorted monomial order."""
        return [[list(m), f"{c.numerator}/{c.denominator}"] for m, c in sorted(self.terms.items())]

    @classmethod
    def from_records(cls, num_vars: int, records: Iterable) -> "MultiVarPolynomial":
        return cls(num_vars, {tuple(m): Fraction(c) for m, c in records})


def binomial_power(a: int, l: int) -> MultiVarPolynomial:
    """x^a (1 − x)^l, expanded."""
    return MultiVarPolynomial(1, {(a + r,): comb(l, r) * (-1) ** r for r in range(l + 1)})
