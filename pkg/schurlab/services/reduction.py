"""
Reduction formulae for divided differences.

Each reduction rewrites f^{[n]} at one node configuration as a weighted sum
of f^{[n]} at configurations with a node replaced or merged. The returned
ReductionExpansion can be evaluated against any SmoothFunction, which is how
the identities are checked.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass, field
from enum import Enum
from math import comb
from typing import List, Optional, Sequence, Tuple

from schurlab.core.error_handling import (
    DegenerateDenominatorError,
    IndexOutOfRangeError,
    ZeroNodeError,
)
from schurlab.models.numerics import MultiIndex, NodeVector, SmoothFunction, node_tolerance
from schurlab.services.divdiff import divdiff_eval
from schurlab.services.polynomial import MultiVarPolynomial, binomial_power

logger = logging.getLogger(__name__)


class ReductionSource(str, Enum):
    INSERT_XI = "InsertXi"
    GENERAL = "General"
    ALGEBRAIC = "Algebraic"
    ZERO_INSERT = "ZeroInsert"


@dataclass(frozen=True)
class ReductionTerm:
    coefficient: float
    nodes: NodeVector


@dataclass
class ReductionExpansion:
    terms: List[ReductionTerm] = field(default_factory=list)
    source: ReductionSource = ReductionSource.GENERAL

    def evaluate(self, f: SmoothFunction, raw: bool = False) -> float:
        return sum(t.coefficient * divdiff_eval(f, t.nodes, raw=raw) for t in self.terms)

    def residual(self, f: SmoothFunction, lhs: float) -> float:
        """Relative residual |lhs − Σ| / (1 + |lhs|)."""
        return abs(lhs - self.evaluate(f)) / (1.0 + abs(lhs))

    def __len__(self) -> int:
        return len(self.terms)


def binomial_prefactor(a: int, l: int) -> int:
    """C(a+l−1, l)"""
    return comb(a + l - 1, l)


def p_poly(a: int, l: int) -> MultiVarPolynomial:
    """p_{a,l}(x) = C(a+l−1, l)·x^a·(1−x)^l"""
    if a < 1 or l < 0:
        raise ValueError(f"p_poly needs a >= 1 and l >= 0, got ({a}, {l})")
    return binomial_power(a, l) * binomial_prefactor(a, l)


def _check_index(idx: int, size: int, name: str):
    if not 0 <= idx < size:
        raise IndexOutOfRangeError(f"{name}={idx} outside 0..{size - 1}", index=idx, bounds=(0, size - 1))


def _merged(entries: Sequence[Tuple[float, int]], tol: Optional[float]) -> NodeVector:
    """Node vector from (node, multiplicity) pairs, merging coincident nodes."""
    vals = [v for v, _ in entries]
    tau = node_tolerance(vals) if tol is None else tol
    nodes: list = []
    mult: list = []
    for v, a in entries:
        if a == 0:
            continue
        for b, y in enumerate(nodes):
            if abs(v - y) <= tau:
                mult[b] += a
                break
        else:
            nodes.append(v)
            mult.append(a)
    return NodeVector(tuple(nodes), MultiIndex(tuple(mult)), tol=tol)


def reduce_general(f: SmoothFunction, nodes: NodeVector, i: int, j: int, xi: float,
                   source: ReductionSource = ReductionSource.GENERAL) -> ReductionExpansion:
    """
    Insert ξ between blocks i and j.

    f[λ] = Σ_{l<α_i} p_{α_j,l}(a)·f[λ_i^{(α_i−l)}, ξ^{(α_j+l)}, …]
         + Σ_{l<α_j} p_{α_i,l}(b)·f[ξ^{(α_i+l)}, λ_j^{(α_j−l)}, …]
    with a = (λ_i−ξ)/(λ_i−λ_j) and b = (ξ−λ_j)/(λ_i−λ_j); the remaining
    blocks are carried along unchanged.
    """
    lam = nodes.distinct_nodes
    alpha = nodes.multiplicities
    size = len(lam)
    _check_index(i, size, "i")
    _check_index(j, size, "j")
    span = lam[i] - lam[j]
    if i == j or abs(span) <= nodes.tolerance:
        raise DegenerateDenominatorError(
            f"reduction needs distinct blocks, got λ_{i}={lam[i]} and λ_{j}={lam[j]}",
            details={"i": i, "j": j},
        )
    a = (lam[i] - xi) / span
    b = (xi - lam[j]) / span
    ai, aj = alpha[i], alpha[j]
    xi = float(xi)

    terms: List[ReductionTerm] = []
    for l in range(ai):
        coeff = p_poly(aj, l).evaluate([a])
        entries = []
        for m in range(size):
            if m == i:
                entries.append((lam[i], ai - l))
            elif m == j:
                entries.append((xi, aj + l))
            else:
                entries.append((lam[m], alpha[m]))
        terms.append(ReductionTerm(coeff, _merged(entries, nodes.tol)))
    for l in range(aj):
        coeff = p_poly(ai, l).evaluate([b])
        entries = []
        for m in range(size):
            if m == i:
                entries.append((xi, ai + l))
            elif m == j:
                entries.append((lam[j], aj - l))
            else:
                entries.append((lam[m], alpha[m]))
        terms.append(ReductionTerm(coeff, _merged(entries, nodes.tol)))
    return ReductionExpansion(terms, source)


def reduce_algebraic(f: SmoothFunction, nodes: NodeVector, i: int, j: int, k: int) -> ReductionExpansion:
    """
    ξ = λ_k: block k absorbs the inserted mass, one block disappears.

    k ∈ {i, j} is admitted; the expansion then collapses to the left side
    itself with weight 1.
    """
    size = len(nodes.distinct_nodes)
    _check_index(k, size, "k")
    return reduce_general(f, nodes, i, j, nodes.distinct_nodes[k], source=ReductionSource.ALGEBRAIC)


def _point_replacement(points: Sequence[float], i: int, j: int, xi: float,
                       source: ReductionSource, tol: Optional[float]) -> ReductionExpansion:
    t = [float(x) for x in points]
    span = t[i] - t[j]
    tau = node_tolerance(t) if tol is None else tol
    if i == j or abs(span) <= tau:
        raise DegenerateDenominatorError(
            f"reduction needs |t_{i} − t_{j}| > {tau:.3g}, got {span:.3g}",
            details={"i": i, "j": j, "span": span, "tol": tau},
        )
    left = list(t)
    left[j] = xi
    right = list(t)
    right[i] = xi
    return ReductionExpansion(
        [
            ReductionTerm((t[i] - xi) / span, NodeVector.from_points(left, tol=tol)),
            ReductionTerm((xi - t[j]) / span, NodeVector.from_points(right, tol=tol)),
        ],
        source,
    )


def reduce_insert_xi(f: SmoothFunction, points: Sequence[float], i: int, j: int, xi: float,
                     tol: Optional[float] = None) -> ReductionExpansion:
    """Single-variable insertion on a flat point tuple."""
    _check_index(i, len(points), "i")
    _check_index(j, len(points), "j")
    return _point_replacement(points, i, j, xi, ReductionSource.INSERT_XI, tol)


def reduce_zero_insert(f: SmoothFunction, t: Sequence[float], i: int, j: int,
                       tol: Optional[float] = None) -> ReductionExpansion:
    """
    f[t] = t_i/(t_i−t_j)·f[t; t_j→0] − t_j/(t_i−t_j)·f[t; t_i→0]
    """
    _check_index(i, len(t), "i")
    _check_index(j, len(t), "j")
    if t[i] == 0.0 or t[j] == 0.0:
        raise ZeroNodeError(
            f"zero insertion pivots must be nonzero, got t_{i}={t[i]}, t_{j}={t[j]}",
            index=i if t[i] == 0.0 else j,
        )
    return _point_replacement(t, i, j, 0.0, ReductionSource.ZERO_INSERT, tol)
