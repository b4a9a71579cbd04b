"""
Decomposition of f^{[n]} into partition-weighted polynomial fractions.

build_Q_table runs the induction that splits every divided difference by
the partition of unity on its surviving index set and applies the algebraic
reduction at the cyclic upper neighbour. Polynomials stay exact; floats
enter only at evaluation.
"""

from __future__ import annotations

import logging
import time
from dataclasses import dataclass, field
from functools import lru_cache
from typing import Dict, List, NamedTuple, Optional, Sequence, Tuple

import numpy as np

from schurlab.core.config import settings
from schurlab.core.error_handling import (
    DegenerateDenominatorError,
    IndexOutOfRangeError,
    OffDomainError,
    SizeGuardError,
)
from schurlab.core.logging import LoggerManager
from schurlab.models.numerics import MultiIndex, NodeVector, SmoothFunction
from schurlab.models.schemas import QTableDocument, QTableEntry
from schurlab.services.combinatorics import (
    MINUS,
    PLUS,
    ChoiceSequence,
    as_float,
    difference_basis,
    index_data,
    is_in_D_n,
    xi_vector,
    zeta_vector,
)
from schurlab.services.divdiff import divdiff_eval
from schurlab.services.partition import sphere_partition, theta_eval
from schurlab.services.polynomial import MultiVarPolynomial
from schurlab.services.reduction import p_poly

logger = logging.getLogger(__name__)

TableKey = Tuple[ChoiceSequence, Tuple[int, ...]]


@dataclass
class DecompositionTable:
    """Q_{F,k,α} for every F ∈ F_{n,k} and α over I_{F,k+1} with |α| = n+1."""

    n: int
    k: int
    entries: Dict[TableKey, MultiVarPolynomial] = field(default_factory=dict)
    # (F', β) -> [(α, l), …] that were merged into the entry
    provenance: Dict[TableKey, List[Tuple[Tuple[int, ...], int]]] = field(default_factory=dict)

    def __len__(self) -> int:
        return len(self.entries)

    def items(self):
        return self.entries.items()

    def sequences(self) -> List[ChoiceSequence]:
        seen = []
        for F, _ in self.entries:
            if not seen or seen[-1] != F:
                seen.append(F)
        return seen

    def max_degree(self) -> int:
        return max((q.degree() for q in self.entries.values()), default=0)


def _induction_step(table: Dict[TableKey, MultiVarPolynomial], n: int, step: int
                    ) -> Tuple[Dict[TableKey, MultiVarPolynomial], Dict[TableKey, list]]:
    new: Dict[TableKey, MultiVarPolynomial] = {}
    provenance: Dict[TableKey, list] = {}
    for (F, alpha), Q in table.items():
        I = F.index_sets[-1]
        weights = dict(zip(I, alpha))
        Q_ext = Q.extend(step)
        for pos in range(1, len(I)):
            i = I[pos]
            i_minus = I[pos - 1]
            i_plus = I[(pos + 1) % len(I)]
            for sigma in (PLUS, MINUS):
                F_new = ChoiceSequence(n, F.picks + ((i, sigma),))
                I_new = F_new.index_sets[-1]
                if sigma == PLUS:
                    a, count = weights[i], weights[i_minus]
                else:
                    a, count = weights[i_minus], weights[i]
                for l in range(count):
                    beta = dict(weights)
                    if sigma == PLUS:
                        beta[i_minus] = weights[i_minus] - l
                        beta[i_plus] = weights[i] + weights[i_plus] + l
                        del beta[i]
                    else:
                        beta[i] = weights[i] - l
                        beta[i_plus] = weights[i_minus] + weights[i_plus] + l
                        del beta[i_minus]
                    key = (F_new, tuple(beta[x] for x in I_new))
                    term = Q_ext * p_poly(a, l).embed(step, [step - 1])
                    new[key] = new[key] + term if key in new else term
                    provenance.setdefault(key, []).append((tuple(alpha), l))
    new = {key: q for key, q in new.items() if not q.is_zero()}
    return new, provenance


@lru_cache(maxsize=16)
def build_Q_table(n: int, k: int) -> DecompositionTable:
    """
    Exact Q-polynomials after k induction steps.

    Base: Q_{∅,0,(1,…,1)} = 1. Step: for every surviving index i above the
    minimum and sign σ, the algebraic reduction at the cyclic upper
    neighbour i⁺ contributes p-polynomials in the new fraction variable;
    contributions with the same (F', β) are summed.
    """
    if n > settings.q_table_max_n:
        raise SizeGuardError(f"Q tables are limited to n <= {settings.q_table_max_n}",
                             requested=n, limit=settings.q_table_max_n)
    if not 1 <= k <= n - 1:
        raise IndexOutOfRangeError(f"k={k} outside 1..{n - 1}", index=k, bounds=(1, n - 1))

    started = time.perf_counter()
    table: Dict[TableKey, MultiVarPolynomial] = {
        (ChoiceSequence(n, ()), (1,) * (n + 1)): MultiVarPolynomial.const(0, 1)
    }
    provenance: Dict[TableKey, list] = {}
    for step in range(1, k + 1):
        table, provenance = _induction_step(table, n, step)
        logger.debug(f"Q table n={n}: step {step} has {len(table)} entries")

    result = DecompositionTable(n=n, k=k, entries=dict(sorted(
        table.items(), key=lambda kv: (kv[0][0].picks, kv[0][1])
    )), provenance=provenance)
    LoggerManager.log_performance_metric(f"build_Q_table[n={n},k={k}]", time.perf_counter() - started)
    return result


def _require_domain(lam: Sequence[float]):
    if not is_in_D_n(lam):
        raise OffDomainError("λ must have pairwise distinct coordinates",
                             details={"lambda": [float(x) for x in lam]})


def theta_product(F: ChoiceSequence, lam: Sequence[float]) -> float:
    """Π_{l=1}^{k} θ_{F,l}(λ)"""
    prod = 1.0
    for l in range(1, F.k + 1):
        data = index_data(F, l)
        prod *= theta_eval(data.index_set, data.current, lam)
        if prod == 0.0:
            return 0.0
    return prod


def evaluate_core_expansion(f: SmoothFunction, lam: Sequence[float], n: int, k: int,
                            table: Optional[DecompositionTable] = None) -> float:
    """
    Σ_F Σ_α (Π_l θ_{F,l}(λ))·Q_{F,k,α}(ζ_{F,1..k})·f[λ_{I_{F,k+1}}^{(α)}]
    """
    lam = [float(x) for x in lam]
    if len(lam) != n + 1:
        raise IndexOutOfRangeError(f"expected {n + 1} coordinates, got {len(lam)}")
    _require_domain(lam)
    if table is None:
        table = build_Q_table(n, k)
    if (table.n, table.k) != (n, k):
        raise IndexOutOfRangeError(f"table built for (n, k)=({table.n}, {table.k}), not ({n}, {k})")

    total = 0.0
    weights: Dict[ChoiceSequence, float] = {}
    zetas: Dict[ChoiceSequence, np.ndarray] = {}
    for (F, alpha), Q in table.items():
        if F not in weights:
            weights[F] = theta_product(F, lam)
            if weights[F] != 0.0:
                zetas[F] = zeta_vector(F, lam)
        if weights[F] == 0.0:
            continue
        I = F.index_sets[-1]
        nodes = NodeVector(tuple(lam[i] for i in I), MultiIndex(alpha))
        total += weights[F] * Q.evaluate(zetas[F]) * divdiff_eval(f, nodes)
    return total


def evaluate_H(F: ChoiceSequence, alpha: Tuple[int, ...], table: DecompositionTable,
               xi: Sequence[float]) -> float:
    """
    H_{F,α}(ξ_1, …, ξ_n) = Π_k θ̃_{n+1−k, l(k)}(T^{(F,k)} ξ_{k..n}) · Q(ζ)

    with ζ_l = (R^{(F)} ξ)_l / ξ_l.
    """
    n = table.n
    if table.k != n - 1:
        raise IndexOutOfRangeError(f"H needs a table with k = n-1, got k={table.k}")
    xi = np.asarray(xi, dtype=float)
    if xi.shape != (n,):
        raise IndexOutOfRangeError(f"expected {n} ξ-coordinates, got {xi.shape}")
    if not np.any(xi):
        raise DegenerateDenominatorError("H is undefined at ξ = 0")
    Q = table.entries.get((F, tuple(alpha)))
    if Q is None:
        return 0.0

    theta = 1.0
    for k in range(1, n):
        basis = difference_basis(F, k)
        local = as_float(basis.T) @ xi[k - 1:]
        theta *= sphere_partition(n + 1 - k).eval(basis.row + 1, local)
        if theta == 0.0:
            return 0.0

    R = as_float(difference_basis(F, 1).R)
    head = xi[: n - 1]
    if np.any(head == 0.0):
        raise DegenerateDenominatorError("ξ_1..ξ_{n-1} must be nonzero on the support")
    zeta = (R @ xi) / head
    return theta * Q.evaluate(zeta)


class FinalTerm(NamedTuple):
    F: ChoiceSequence
    alpha: Tuple[int, int]
    weight: float
    last_xi: float
    nodes: NodeVector
    terminal: Tuple[int, int]


def final_decomposition_terms(lam: Sequence[float], n: int,
                              table: Optional[DecompositionTable] = None) -> List[FinalTerm]:
    """Terms H_{F,α}(ξ_F(λ))·f[λ_{F_n^−}^{(α_−)}, λ_{F_n}^{(α_+)}] with their coordinates."""
    lam = [float(x) for x in lam]
    if n < 2 or n > settings.decomposition_max_n:
        raise SizeGuardError(
            f"final decomposition is limited to 2 <= n <= {settings.decomposition_max_n}",
            requested=n, limit=settings.decomposition_max_n,
        )
    if len(lam) != n + 1:
        raise IndexOutOfRangeError(f"expected {n + 1} coordinates, got {len(lam)}")
    _require_domain(lam)
    if table is None:
        table = build_Q_table(n, n - 1)

    terms = []
    xis: Dict[ChoiceSequence, np.ndarray] = {}
    for (F, alpha), _ in table.items():
        if F not in xis:
            xis[F] = xi_vector(F, lam)
        data = index_data(F, n)
        weight = evaluate_H(F, alpha, table, xis[F])
        nodes = NodeVector((lam[data.lower], lam[data.current]), MultiIndex(alpha))
        terms.append(FinalTerm(F, tuple(alpha), weight, float(xis[F][-1]), nodes,
                               (data.lower, data.current)))
    return terms


def verify_final_decomposition(f: SmoothFunction, lam: Sequence[float], n: int,
                               table: Optional[DecompositionTable] = None) -> float:
    """|f^{[n]}(λ) − Σ_{F,α} H_{F,α}(ξ_F(λ))·f[λ_{F_n^−}^{(α_−)}, λ_{F_n}^{(α_+)}]|"""
    terms = final_decomposition_terms(lam, n, table)
    total = sum(t.weight * divdiff_eval(f, t.nodes) for t in terms if t.weight != 0.0)
    exact = divdiff_eval(f, NodeVector.simple(*lam))
    return abs(exact - total)


def sample_domain_point(rng: np.random.Generator, n: int, spread: float = 2.0,
                        min_gap: float = 1e-3) -> np.ndarray:
    """Random λ ∈ D_n with pairwise gaps at least min_gap·spread."""
    while True:
        lam = rng.uniform(-spread / 2, spread / 2, size=n + 1)
        ordered = np.sort(lam)
        width = ordered[-1] - ordered[0]
        if np.diff(ordered).min() >= min_gap * width:
            return lam


def table_to_document(table: DecompositionTable) -> QTableDocument:
    entries = [
        QTableEntry(F=[list(p) for p in F.picks], alpha=list(alpha), poly=q.to_records())
        for (F, alpha), q in table.items()
    ]
    return QTableDocument(n=table.n, k=table.k, entries=entries)


def table_from_document(doc: QTableDocument) -> DecompositionTable:
    entries = {}
    for entry in doc.entries:
        F = ChoiceSequence(doc.n, tuple(tuple(p) for p in entry.F))
        entries[(F, tuple(entry.alpha))] = MultiVarPolynomial.from_records(doc.k, entry.poly)
    return DecompositionTable(n=doc.n, k=doc.k, entries=entries)
