"""
Numeric value types shared by the services.

MultiIndex, NodeVector and SmoothFunction carry divided-difference inputs;
SchattenParams and SchattenExponent carry Hölder exponent bookkeeping.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable, Iterator, Optional, Sequence, Tuple, Union

import numpy as np

from schurlab.core.config import settings
from schurlab.core.error_handling import (
    InvalidExponentsError,
    NodeClashError,
    OrderTooLowError,
)

ArrayLike = Union[float, np.ndarray]


def node_tolerance(nodes: Sequence[float]) -> float:
    """Default node separation tolerance 1e-12·(1 + max|λ|)."""
    scale = max((abs(float(x)) for x in nodes), default=0.0)
    return settings.node_tol_rel * (1.0 + scale)


@dataclass(frozen=True)
class MultiIndex:
    """Nonnegative integer multiplicities α = (α_0, …, α_κ)."""

    entries: Tuple[int, ...]

    def __post_init__(self):
        entries = tuple(int(a) for a in self.entries)
        if any(a < 0 for a in entries):
            raise ValueError(f"multi-index entries must be nonnegative, got {entries}")
        object.__setattr__(self, "entries", entries)

    @property
    def size(self) -> int:
        """|α| = Σ α_i"""
        return sum(self.entries)

    def __len__(self) -> int:
        return len(self.entries)

    def __iter__(self) -> Iterator[int]:
        return iter(self.entries)

    def __getitem__(self, i: int) -> int:
        return self.entries[i]


@dataclass(frozen=True)
class NodeVector:
    """
    Distinct nodes λ_0, …, λ_κ with multiplicities α.

    The divided-difference order is |α| − 1. Nodes closer than the node
    tolerance must be declared as one block; `tol=0` demands exact
    distinctness only.
    """

    distinct_nodes: Tuple[float, ...]
    multiplicities: MultiIndex
    tol: Optional[float] = None

    def __post_init__(self):
        nodes = tuple(float(x) for x in self.distinct_nodes)
        alpha = self.multiplicities
        if not isinstance(alpha, MultiIndex):
            alpha = MultiIndex(tuple(alpha))
        object.__setattr__(self, "distinct_nodes", nodes)
        object.__setattr__(self, "multiplicities", alpha)

        if len(nodes) != len(alpha):
            raise ValueError(
                f"{len(nodes)} nodes but {len(alpha)} multiplicities"
            )
        if not nodes:
            raise ValueError("at least one node is required")
        if any(a < 1 for a in alpha):
            raise ValueError(f"every multiplicity must be >= 1, got {alpha.entries}")
        if not all(math.isfinite(x) for x in nodes):
            raise ValueError(f"nodes must be finite, got {nodes}")

        tau = self.tolerance
        ordered = sorted(nodes)
        for a, b in zip(ordered, ordered[1:]):
            if b - a <= tau:
                raise NodeClashError(
                    f"nodes {a!r} and {b!r} are closer than {tau:.3e}",
                    nodes=(a, b), tol=tau,
                )

    @property
    def tolerance(self) -> float:
        if self.tol is not None:
            return self.tol
        return node_tolerance(self.distinct_nodes)

    @property
    def order(self) -> int:
        return self.multiplicities.size - 1

    def expanded(self) -> Tuple[float, ...]:
        """Nodes repeated by multiplicity, blocks kept contiguous."""
        out = []
        for x, a in zip(self.distinct_nodes, self.multiplicities):
            out.extend([x] * a)
        return tuple(out)

    def block_ids(self) -> Tuple[int, ...]:
        out = []
        for b, a in enumerate(self.multiplicities):
            out.extend([b] * a)
        return tuple(out)

    def permuted(self, order: Sequence[int]) -> "NodeVector":
        """Same node set with blocks reordered."""
        return NodeVector(
            tuple(self.distinct_nodes[i] for i in order),
            MultiIndex(tuple(self.multiplicities[i] for i in order)),
            tol=self.tol,
        )

    @classmethod
    def from_points(cls, points: Sequence[float], tol: Optional[float] = None) -> "NodeVector":
        """
        Group a flat point list into blocks.

        Points within the tolerance of an earlier block join that block;
        block order follows first occurrence.
        """
        pts = [float(x) for x in points]
        tau = node_tolerance(pts) if tol is None else tol
        nodes: list = []
        mult: list = []
        for x in pts:
            for b, y in enumerate(nodes):
                if abs(x - y) <= tau:
                    mult[b] += 1
                    break
            else:
                nodes.append(x)
                mult.append(1)
        return cls(tuple(nodes), MultiIndex(tuple(mult)), tol=tol)

    @classmethod
    def simple(cls, *nodes: float) -> "NodeVector":
        return cls(tuple(nodes), MultiIndex((1,) * len(nodes)))


DerivativeFn = Callable[[ArrayLike, int], ArrayLike]
ClosedForm = Callable[[Tuple[float, ...]], Optional[float]]


@dataclass(frozen=True)
class SmoothFunction:
    """
    A scalar function with derivatives up to `order_max`.

    `divdiff_scale` normalizes divided differences of top order
    (order == order_max); `closed_form`, when given, evaluates the raw top
    order divided difference directly from the expanded point tuple.
    """

    label: str
    order_max: int
    derivative: DerivativeFn = field(repr=False)
    singular_at_zero: bool = False
    divdiff_scale: float = 1.0
    closed_form: Optional[ClosedForm] = field(default=None, repr=False)

    def eval(self, x: ArrayLike, d: int = 0) -> ArrayLike:
        if d < 0 or d > self.order_max:
            raise OrderTooLowError(
                f"{self.label} provides derivatives up to order {self.order_max}, "
                f"requested {d}",
                required=d, available=self.order_max,
            )
        return self.derivative(x, d)

    def __call__(self, x: ArrayLike) -> ArrayLike:
        return self.eval(x, 0)

    def scale_for(self, order: int) -> float:
        return self.divdiff_scale if order == self.order_max else 1.0


def dual_exponent(p: float) -> float:
    """Hölder conjugate p* = p/(p−1) with 1* = ∞ and ∞* = 1."""
    if p == 1.0:
        return math.inf
    if math.isinf(p):
        return 1.0
    return p / (p - 1.0)


def _reciprocal(p: float) -> float:
    return 0.0 if math.isinf(p) else 1.0 / p


@dataclass(frozen=True)
class SchattenExponent:
    """A single exponent p ∈ [1, ∞] and its dual."""

    p: float

    def __post_init__(self):
        p = float(self.p)
        if math.isnan(p) or p < 1.0:
            raise InvalidExponentsError(f"Schatten exponent must lie in [1, inf], got {p}",
                                        exponents=[p])
        object.__setattr__(self, "p", p)

    @property
    def dual(self) -> float:
        return dual_exponent(self.p)

    @property
    def is_endpoint(self) -> bool:
        return self.p == 1.0 or math.isinf(self.p)


@dataclass(frozen=True)
class SchattenParams:
    """
    Exponents p_1, …, p_n with p = (Σ 1/p_i)^{-1}.

    By default every exponent and p itself must lie in (1, ∞); with
    `allow_endpoints` the closed range [1, ∞] is admitted and flagged.
    """

    p_list: Tuple[float, ...]
    allow_endpoints: bool = False

    def __post_init__(self):
        ps = tuple(float(p) for p in self.p_list)
        object.__setattr__(self, "p_list", ps)
        if not ps:
            raise InvalidExponentsError("at least one exponent is required")
        if self.allow_endpoints:
            bad = any(math.isnan(p) or p < 1.0 for p in ps) or self.p < 1.0
        else:
            bad = any(not (1.0 < p < math.inf) for p in ps) or not (1.0 < self.p < math.inf)
        if bad:
            raise InvalidExponentsError(
                f"exponents {ps} give p = {self.p}, outside the admissible range",
                exponents=ps,
            )

    @classmethod
    def uniform(cls, n: int, p: float, allow_endpoints: bool = False) -> "SchattenParams":
        """p_i = n·p for every slot, so the target exponent is p."""
        return cls(tuple([n * p] * n), allow_endpoints=allow_endpoints)

    @property
    def n(self) -> int:
        return len(self.p_list)

    @property
    def p(self) -> float:
        total = sum(_reciprocal(q) for q in self.p_list)
        return math.inf if total == 0.0 else 1.0 / total

    @property
    def conjugate(self) -> float:
        return dual_exponent(self.p)

    @property
    def sharp(self) -> float:
        return max(self.p, self.conjugate)

    @property
    def is_endpoint(self) -> bool:
        return self.p == 1.0 or math.isinf(self.p) or any(
            q == 1.0 or math.isinf(q) for q in self.p_list
        )

    def partial(self, i: int, j: int) -> float:
        """p_{(i;j)} = (Σ_{s=i+1}^{j} 1/p_s)^{-1} for 0 ≤ i < j ≤ n."""
        if not (0 <= i < j <= self.n):
            raise InvalidExponentsError(f"partial exponent needs 0 <= i < j <= {self.n}, got ({i}, {j})")
        total = sum(_reciprocal(q) for q in self.p_list[i:j])
        return math.inf if total == 0.0 else 1.0 / total

    def partial_sharp(self, i: int, j: int) -> float:
        q = self.partial(i, j)
        return max(q, dual_exponent(q))
