"""
Choice sequences and their index bookkeeping.

A choice sequence F = (i_1, σ_1, …, i_k, σ_k) records which index is
selected at each reduction step and which neighbour is removed: σ = +1
removes i_l, σ = −1 removes its lower neighbour. Neighbours are cyclic
inside the surviving index set.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass
from fractions import Fraction
from functools import lru_cache
from typing import List, NamedTuple, Optional, Sequence, Tuple

import numpy as np

from schurlab.core.error_handling import (
    DegenerateDenominatorError,
    IndexOutOfRangeError,
    InvalidExponentsError,
    SingularSystemError,
)
from schurlab.models.numerics import SchattenParams, node_tolerance

logger = logging.getLogger(__name__)

PLUS = 1
MINUS = -1

Pick = Tuple[int, int]
FractionMatrix = List[List[Fraction]]


@dataclass(frozen=True)
class ChoiceSequence:
    """Immutable choice sequence with precomputed index sets I_{F,1..k+1}."""

    n: int
    picks: Tuple[Pick, ...]

    def __post_init__(self):
        picks = tuple((int(i), int(s)) for i, s in self.picks)
        object.__setattr__(self, "picks", picks)
        if len(picks) > self.n - 1:
            raise IndexOutOfRangeError(
                f"a choice sequence for n={self.n} has at most {self.n - 1} picks",
                index=len(picks), bounds=(0, self.n - 1),
            )
        sets = [tuple(range(self.n + 1))]
        for l, (i, sigma) in enumerate(picks, start=1):
            current = sets[-1]
            if sigma not in (PLUS, MINUS):
                raise ValueError(f"sign must be +1 or -1, got {sigma}")
            if i not in current or i == current[0]:
                raise IndexOutOfRangeError(
                    f"pick {l}: index {i} is not an admissible element of {current}",
                    index=i,
                )
            pos = current.index(i)
            removed = i if sigma == PLUS else current[pos - 1]
            sets.append(tuple(x for x in current if x != removed))
        object.__setattr__(self, "_index_sets", tuple(sets))

    @property
    def k(self) -> int:
        return len(self.picks)

    @property
    def index_sets(self) -> Tuple[Tuple[int, ...], ...]:
        """I_{F,1}, …, I_{F,k+1}"""
        return self._index_sets

    def label(self) -> str:
        return ",".join(f"{i}{'+' if s == PLUS else '-'}" for i, s in self.picks)

    def __str__(self) -> str:
        return f"({self.label()})"


class IndexData(NamedTuple):
    index_set: Tuple[int, ...]
    current: Optional[int]
    lower: Optional[int]
    upper: Optional[int]


def enumerate_choice_sequences(n: int, k: int) -> List[ChoiceSequence]:
    """All of F_{n,k} in lexicographic pick order, + before −."""
    if not 0 <= k <= n - 1:
        raise IndexOutOfRangeError(f"k={k} outside 0..{n - 1}", index=k, bounds=(0, n - 1))
    return [ChoiceSequence(n, picks) for picks in _pick_sequences(tuple(range(n + 1)), k)]


def _pick_sequences(current: Tuple[int, ...], steps: int) -> List[Tuple[Pick, ...]]:
    if steps == 0:
        return [()]
    out = []
    for pos in range(1, len(current)):
        i = current[pos]
        for sigma in (PLUS, MINUS):
            removed = i if sigma == PLUS else current[pos - 1]
            rest = tuple(x for x in current if x != removed)
            out.extend(((i, sigma),) + tail for tail in _pick_sequences(rest, steps - 1))
    return out


def index_data(F: ChoiceSequence, l: int) -> IndexData:
    """
    (I_{F,l}, F_l, F_l^−, F_l^+) for 1 ≤ l ≤ k+1.

    At l = n the set has two elements: F_n is its maximum, F_n^− its
    minimum and F_n^+ is absent. At l = k+1 < n only the set is defined.
    """
    if not 1 <= l <= F.k + 1:
        raise IndexOutOfRangeError(f"l={l} outside 1..{F.k + 1}", index=l, bounds=(1, F.k + 1))
    I = F.index_sets[l - 1]
    if l <= F.k:
        i = F.picks[l - 1][0]
        pos = I.index(i)
        return IndexData(I, i, I[pos - 1], I[(pos + 1) % len(I)])
    if l == F.n:
        return IndexData(I, I[-1], I[0], None)
    return IndexData(I, None, None, None)


def xi_value(F: ChoiceSequence, l: int, lam: Sequence[float]) -> float:
    """ξ_{F,l} = λ_{F_l} − λ_{F_l^−}"""
    data = index_data(F, l)
    if data.current is None:
        raise IndexOutOfRangeError(f"ξ_{{F,{l}}} is undefined for k={F.k}", index=l)
    return float(lam[data.current]) - float(lam[data.lower])


def zeta_numerator(F: ChoiceSequence, l: int, lam: Sequence[float]) -> float:
    data = index_data(F, l)
    if l > F.k:
        raise IndexOutOfRangeError(f"ζ_{{F,{l}}} needs l <= k={F.k}", index=l)
    sigma = F.picks[l - 1][1]
    if sigma == PLUS:
        return float(lam[data.upper]) - float(lam[data.lower])
    return float(lam[data.current]) - float(lam[data.upper])


def zeta_xi_eval(F: ChoiceSequence, l: int, lam: Sequence[float]) -> Tuple[float, Optional[float]]:
    """
    (ξ_{F,l}, ζ_{F,l}).

    ζ is (λ_{F_l^+} − λ_{F_l^−})/ξ for σ_l = + and (λ_{F_l} − λ_{F_l^+})/ξ for
    σ_l = −; it is None at l = n.
    """
    xi = xi_value(F, l, lam)
    if l > F.k:
        return xi, None
    if abs(xi) <= node_tolerance(lam):
        raise DegenerateDenominatorError(
            f"ξ_{{F,{l}}} vanishes for F={F}", details={"l": l, "F": F.label()}
        )
    return xi, zeta_numerator(F, l, lam) / xi


def xi_vector(F: ChoiceSequence, lam: Sequence[float]) -> np.ndarray:
    """(ξ_{F,1}, …, ξ_{F,n}) for F ∈ F_{n,n−1}."""
    return np.array([xi_value(F, l, lam) for l in range(1, F.n + 1)])


def zeta_vector(F: ChoiceSequence, lam: Sequence[float]) -> np.ndarray:
    """(ζ_{F,1}, …, ζ_{F,k})"""
    return np.array([zeta_xi_eval(F, l, lam)[1] for l in range(1, F.k + 1)])


def is_in_D_n(lam: Sequence[float], tol: Optional[float] = None) -> bool:
    """All coordinates pairwise distinct."""
    tau = node_tolerance(lam) if tol is None else tol
    ordered = np.sort(np.asarray(lam, dtype=float))
    return bool(np.all(np.diff(ordered) > tau))


def is_in_Delta_I(lam: Sequence[float], I: Sequence[int], tol: Optional[float] = None) -> bool:
    """Coordinates selected by I all equal."""
    tau = node_tolerance(lam) if tol is None else tol
    vals = [float(lam[i]) for i in I]
    return max(vals) - min(vals) <= tau


def _difference_row(I: Sequence[int], a: int, b: int) -> List[Fraction]:
    """λ_b − λ_a as a combination of consecutive differences over sorted I."""
    pa, pb = I.index(a), I.index(b)
    sign = 1 if pb > pa else -1
    lo, hi = min(pa, pb), max(pa, pb)
    return [Fraction(sign) if lo <= c < hi else Fraction(0) for c in range(len(I) - 1)]


def invert_exact(M: FractionMatrix) -> FractionMatrix:
    """Gauss–Jordan inverse over the rationals."""
    size = len(M)
    aug = [list(row) + [Fraction(int(r == c)) for c in range(size)] for r, row in enumerate(M)]
    for col in range(size):
        pivot = next((r for r in range(col, size) if aug[r][col] != 0), None)
        if pivot is None:
            raise SingularSystemError(f"singular {size}x{size} system at column {col}")
        aug[col], aug[pivot] = aug[pivot], aug[col]
        inv = 1 / aug[col][col]
        aug[col] = [v * inv for v in aug[col]]
        for r in range(size):
            if r != col and aug[r][col] != 0:
                factor = aug[r][col]
                aug[r] = [v - factor * w for v, w in zip(aug[r], aug[col])]
    return [row[size:] for row in aug]


def _mat_vec_row(row: Sequence[Fraction], M: FractionMatrix) -> List[Fraction]:
    return [sum((row[r] * M[r][c] for r in range(len(row))), Fraction(0)) for c in range(len(M[0]))]


class DifferenceBasis(NamedTuple):
    T: FractionMatrix
    R: FractionMatrix
    row: int


@lru_cache(maxsize=4096)
def difference_basis(F: ChoiceSequence, k: int) -> DifferenceBasis:
    """
    Exact change-of-basis matrices for F ∈ F_{n,n−1}.

    T maps (ξ_{F,k}, …, ξ_{F,n}) to the consecutive differences of the
    sorted set I_{F,k}; its row `row` is the first unit row. R is the
    (n−1)×n upper triangular matrix taking (ξ_{F,1}, …, ξ_{F,n}) to the
    numerators of ζ_{F,1}, …, ζ_{F,n−1}.
    """
    n = F.n
    if F.k != n - 1:
        raise IndexOutOfRangeError(f"difference_basis needs k = n-1 picks, got {F.k}", index=F.k)
    if not 1 <= k <= n:
        raise IndexOutOfRangeError(f"k={k} outside 1..{n}", index=k, bounds=(1, n))

    T = _local_basis(F, k)
    I = F.index_sets[k - 1]
    row = I.index(index_data(F, k).current) - 1

    R: FractionMatrix = []
    for l in range(1, n):
        data = index_data(F, l)
        Il = F.index_sets[l - 1]
        sigma = F.picks[l - 1][1]
        if sigma == PLUS:
            d_row = _difference_row(Il, data.lower, data.upper)
        else:
            d_row = _difference_row(Il, data.upper, data.current)
        local = _mat_vec_row(d_row, _local_basis(F, l))
        R.append([Fraction(0)] * (l - 1) + local)
    return DifferenceBasis(T, R, row)


@lru_cache(maxsize=4096)
def _local_basis_cached(F: ChoiceSequence, k: int) -> Tuple[Tuple[Fraction, ...], ...]:
    I = F.index_sets[k - 1]
    M = []
    for j in range(k, F.n + 1):
        data = index_data(F, j)
        M.append(_difference_row(I, data.lower, data.current))
    return tuple(tuple(r) for r in invert_exact(M))


def _local_basis(F: ChoiceSequence, k: int) -> FractionMatrix:
    return [list(r) for r in _local_basis_cached(F, k)]


def as_float(M: FractionMatrix) -> np.ndarray:
    return np.array([[float(v) for v in row] for row in M], dtype=float)


def theoretical_bound(params: SchattenParams) -> float:
    """
    B(p⃗) = Σ_{F ∈ F_{n,n−1}} Π_{l=1}^{n} p♯_{(F_l^−; F_l)}
    """
    if params.is_endpoint:
        raise InvalidExponentsError(
            f"bound needs exponents in (1, inf), got {params.p_list}", exponents=params.p_list
        )
    n = params.n
    total = 0.0
    for F in enumerate_choice_sequences(n, n - 1):
        prod = 1.0
        for l in range(1, n + 1):
            data = index_data(F, l)
            prod *= params.partial_sharp(data.lower, data.current)
        total += prod
    return total
