"""
Schatten norms and discrete multilinear Schur multipliers.

Matrices are indexed by a finite ordered set F; a symbol φ on F^{n+1}
acts on (x_1, …, x_n) by

    T_φ(x)[s_0, s_n] = Σ_{s_1..s_{n−1}} φ(s_0, …, s_n) x_1[s_0, s_1] ⋯ x_n[s_{n−1}, s_n].
"""

from __future__ import annotations

import itertools
import logging
import math
import string
from dataclasses import dataclass, field
from enum import Enum
from typing import Callable, Dict, List, Optional, Sequence, Tuple, Union

import numpy as np
from scipy.linalg import svdvals
from scipy.special import logsumexp

from schurlab.core.error_handling import DimensionMismatchError, IndexOutOfRangeError
from schurlab.models.numerics import SchattenExponent, SmoothFunction
from schurlab.models.schemas import SymbolPayload
from schurlab.services.divdiff import divdiff_points, make_abs_power

logger = logging.getLogger(__name__)

Exponent = Union[float, SchattenExponent]


class TruncationKind(str, Enum):
    UPPER = "upper"
    LOWER = "lower"
    DIAGONAL = "diagonal"


@dataclass
class DiscreteSymbol:
    """
    Tabulated φ ∈ ℓ^∞(F^{n+1}).

    `factors`, when present, are matrices m_1..m_n with
    φ(s_0, …, s_n) = Π m_i(s_{i−1}, s_i); schur_multiply then uses the
    chain of Hadamard-masked products instead of the full table.
    """

    n: int
    index_set: Tuple[int, ...]
    table: np.ndarray
    label: str = "phi"
    factors: Optional[List[np.ndarray]] = field(default=None, repr=False)

    def __post_init__(self):
        self.index_set = tuple(sorted(int(i) for i in self.index_set))
        expected = (len(self.index_set),) * (self.n + 1)
        if self.table.shape != expected:
            raise DimensionMismatchError(
                f"symbol table has shape {self.table.shape}, expected {expected}"
            )

    @property
    def dim(self) -> int:
        return len(self.index_set)

    @property
    def sup_norm(self) -> float:
        return float(np.max(np.abs(self.table)))

    def value(self, *positions: int) -> complex:
        return self.table[tuple(positions)]

    @classmethod
    def from_function(cls, n: int, index_set: Sequence[int],
                      func: Callable[..., float], label: str = "phi") -> "DiscreteSymbol":
        F = tuple(sorted(index_set))
        table = np.empty((len(F),) * (n + 1))
        for pos in itertools.product(range(len(F)), repeat=n + 1):
            table[pos] = func(*(F[p] for p in pos))
        return cls(n, F, table, label)

    @classmethod
    def ones(cls, n: int, N: int) -> "DiscreteSymbol":
        return cls(n, tuple(range(N)), np.ones((N,) * (n + 1)), "ones",
                   factors=[np.ones((N, N)) for _ in range(n)])

    @classmethod
    def from_factors(cls, factors: Sequence[np.ndarray], index_set: Optional[Sequence[int]] = None,
                     label: str = "product") -> "DiscreteSymbol":
        """φ(s_0, …, s_n) = Π m_i(s_{i−1}, s_i)"""
        factors = [np.asarray(m) for m in factors]
        N = factors[0].shape[0]
        letters = string.ascii_lowercase[: len(factors) + 1]
        spec = ",".join(letters[i:i + 2] for i in range(len(factors))) + "->" + letters
        table = np.einsum(spec, *factors)
        return cls(len(factors), tuple(index_set or range(N)), table, label, factors=factors)


def schatten_norm(x: np.ndarray, p: Exponent) -> float:
    """ℓ^p norm of the singular values; max for p = ∞."""
    p = p.p if isinstance(p, SchattenExponent) else SchattenExponent(p).p
    sigma = svdvals(np.asarray(x))
    if sigma.size == 0 or sigma[0] == 0.0:
        return 0.0
    if math.isinf(p):
        return float(sigma[0])
    sigma = sigma[sigma > 0.0]
    return float(np.exp(logsumexp(p * np.log(sigma)) / p))


def _check_inputs(n: int, N: int, xs: Sequence[np.ndarray]):
    if len(xs) != n:
        raise DimensionMismatchError(f"symbol has arity {n}, got {len(xs)} matrices")
    for i, x in enumerate(xs):
        if np.shape(x) != (N, N):
            raise DimensionMismatchError(
                f"slot {i + 1} has shape {np.shape(x)}, expected {(N, N)}",
                details={"slot": i + 1},
            )


def nested_multiply(factors: Sequence[np.ndarray], xs: Sequence[np.ndarray]) -> np.ndarray:
    """(m_1 ∘ x_1)(m_2 ∘ x_2)⋯(m_n ∘ x_n)"""
    if len(factors) != len(xs):
        raise DimensionMismatchError(f"{len(factors)} factors for {len(xs)} matrices")
    out = None
    for m, x in zip(factors, xs):
        if np.shape(m) != np.shape(x):
            raise DimensionMismatchError(f"factor shape {np.shape(m)} does not match {np.shape(x)}")
        masked = np.asarray(m) * np.asarray(x)
        out = masked if out is None else out @ masked
    return out


def schur_multiply(phi: DiscreteSymbol, xs: Sequence[np.ndarray], direct: bool = False) -> np.ndarray:
    """T_φ(x_1, …, x_n)"""
    _check_inputs(phi.n, phi.dim, xs)
    if phi.factors is not None and not direct:
        return nested_multiply(phi.factors, xs)
    letters = string.ascii_lowercase[: phi.n + 1]
    spec = letters + "," + ",".join(letters[i:i + 2] for i in range(phi.n)) + "->" + letters[0] + letters[-1]
    return np.einsum(spec, phi.table, *xs, optimize=True)


def truncate(x: np.ndarray, kind: Union[str, TruncationKind]) -> np.ndarray:
    """T^+ keeps s < t, T^− keeps s > t, P keeps the diagonal."""
    kind = TruncationKind(kind)
    x = np.asarray(x)
    if kind == TruncationKind.UPPER:
        return np.triu(x, 1)
    if kind == TruncationKind.LOWER:
        return np.tril(x, -1)
    return np.diag(np.diag(x))


def truncation_symbol(kind: Union[str, TruncationKind], N: int) -> DiscreteSymbol:
    """Linear symbol of a truncation on {0, …, N−1}."""
    kind = TruncationKind(kind)
    s, t = np.indices((N, N))
    mask = {TruncationKind.UPPER: s < t, TruncationKind.LOWER: s > t,
            TruncationKind.DIAGONAL: s == t}[kind]
    table = mask.astype(float)
    return DiscreteSymbol(1, tuple(range(N)), table, f"T_{kind.value}", factors=[table])


def lattice_position_nodes(variant: int, q: float, k: int, l: int, n: int,
                           index_set: Sequence[int]) -> List[np.ndarray]:
    """
    Node value at each of the n+1 symbol positions, as arrays over F.

    Outer nodes are ±q^{k(i+1)}, middle nodes q^{l(i+1) + k(1+max F)}.
    φ¹ places outer nodes at positions 0 and n (the last one negative);
    φ² places +, −, + outer nodes at positions 0, 1, 2.
    """
    if not 0.0 < q < 1.0:
        raise IndexOutOfRangeError(f"q must lie in (0, 1), got {q}")
    if k < 0 or l < 0:
        raise IndexOutOfRangeError(f"k and l must be nonnegative, got ({k}, {l})")
    F = np.asarray(sorted(index_set), dtype=float)
    top = F.max()
    outer = q ** (k * (F + 1))
    middle = q ** (l * (F + 1) + k * (1 + top))
    if variant == 1:
        return [outer] + [middle] * (n - 1) + [-outer]
    if variant == 2:
        if n < 2:
            raise IndexOutOfRangeError("the second lattice symbol needs n >= 2", index=n)
        return [outer, -outer, outer] + [middle] * (n - 2)
    raise IndexOutOfRangeError(f"lattice variant must be 1 or 2, got {variant}", index=variant)


def lattice_symbol(variant: int, q: float, k: int, l: int, n: int,
                   index_set: Sequence[int]) -> DiscreteSymbol:
    """a_n^{[n]} composed with the lattice nodes of φ¹ or φ²."""
    a = make_abs_power(n)
    F = tuple(sorted(index_set))
    nodes = lattice_position_nodes(variant, q, k, l, n, F)
    table = np.empty((len(F),) * (n + 1))
    for pos in itertools.product(range(len(F)), repeat=n + 1):
        points = tuple(float(nodes[j][s]) for j, s in enumerate(pos))
        table[pos] = a.closed_form(points) * a.divdiff_scale
    logger.debug(f"lattice symbol variant={variant} n={n} |F|={len(F)} k={k} l={l}")
    return DiscreteSymbol(n, F, table, label=f"phi{variant}_k{k}_l{l}")


def _pair_limit(i: int, j: int) -> float:
    # lim x_i/(x_i + x_j) for x = q^{k·index}, k → ∞
    if i < j:
        return 1.0
    if i > j:
        return 0.0
    return 0.5


def lattice_limit(variant: int, indices: Sequence[int], n: int) -> float:
    """
    Double limit (l → ∞, then k → ∞) of the lattice symbol at (i_0, …, i_n).

    Variant 1 tends to n!·sign(i_n − i_0). Variant 2 tends to n! times
    r_01 − r_10·r_12 + r_10·r_21 with r_ab = lim x_a/(x_a + x_b).
    """
    nfact = math.factorial(n)
    if variant == 1:
        return nfact * (2.0 * _pair_limit(indices[0], indices[n]) - 1.0)
    if variant == 2:
        i0, i1, i2 = indices[:3]
        r01, r10 = _pair_limit(i0, i1), _pair_limit(i1, i0)
        r12, r21 = _pair_limit(i1, i2), _pair_limit(i2, i1)
        return nfact * (r01 - r10 * r12 + r10 * r21)
    raise IndexOutOfRangeError(f"lattice variant must be 1 or 2, got {variant}", index=variant)


def lattice_inner_limit(variant: int, q: float, k: int, indices: Sequence[int], n: int) -> float:
    """l → ∞ value at finite k, where every middle node has collapsed to 0."""
    x = [q ** (k * (i + 1)) for i in indices]
    nfact = math.factorial(n)
    if variant == 1:
        return nfact * (x[0] - x[n]) / (x[0] + x[n])

    def r(a, b):
        return x[a] / (x[a] + x[b])

    return nfact * (r(0, 1) - r(1, 0) * r(1, 2) + r(1, 0) * r(2, 1))


def sampled_symbol(f: SmoothFunction, grid: Sequence[float], n: int,
                   tol: Optional[float] = None) -> DiscreteSymbol:
    """
    φ(s_0, …, s_n) = f^{[n]}(grid[s_0], …, grid[s_n]), confluent on repeats.

    `tol` is the node grouping tolerance; pass 0 for grids spanning many
    orders of magnitude.
    """
    grid = np.asarray(grid, dtype=float)
    N = grid.size
    cache: Dict[Tuple[int, ...], float] = {}
    table = np.empty((N,) * (n + 1))
    for pos in itertools.product(range(N), repeat=n + 1):
        key = tuple(sorted(pos))
        if key not in cache:
            cache[key] = divdiff_points(f, [grid[s] for s in key], tol=tol)
        table[pos] = cache[key]
    return DiscreteSymbol(n, tuple(range(N)), table, label=f"{f.label}[{n}]")


def embed_symbol(phi: DiscreteSymbol, index_set: Sequence[int]) -> DiscreteSymbol:
    """Zero-extension of φ to a larger index set."""
    F = tuple(sorted(index_set))
    missing = set(phi.index_set) - set(F)
    if missing:
        raise IndexOutOfRangeError(f"index set must contain {sorted(missing)}")
    where = [F.index(i) for i in phi.index_set]
    table = np.zeros((len(F),) * (phi.n + 1), dtype=phi.table.dtype)
    table[np.ix_(*([where] * (phi.n + 1)))] = phi.table
    return DiscreteSymbol(phi.n, F, table, label=f"{phi.label}|{len(F)}")


def embed_matrix(x: np.ndarray, index_set: Sequence[int], target: Sequence[int]) -> np.ndarray:
    """Zero-padding of a matrix on F into a larger index set."""
    F, G = tuple(sorted(index_set)), tuple(sorted(target))
    where = [G.index(i) for i in F]
    out = np.zeros((len(G), len(G)), dtype=np.asarray(x).dtype)
    out[np.ix_(where, where)] = x
    return out


def symbol_to_payload(phi: DiscreteSymbol) -> SymbolPayload:
    table = np.asarray(phi.table, dtype=complex)
    return SymbolPayload(n=phi.n, index_set=list(phi.index_set), real=table.real.ravel().tolist(),
                         imag=table.imag.ravel().tolist(), label=phi.label)


def symbol_from_payload(payload: SymbolPayload) -> DiscreteSymbol:
    shape = (len(payload.index_set),) * (payload.n + 1)
    table = np.asarray(payload.real).reshape(shape)
    if any(payload.imag):
        table = table + 1j * np.asarray(payload.imag).reshape(shape)
    return DiscreteSymbol(payload.n, tuple(payload.index_set), table, payload.label)
